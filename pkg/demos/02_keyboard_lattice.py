"""The two pitch representations used by the output models.

The integral representation treats pitch as a plain semitone number.
The lattice representation puts every key on a 2-D grid whose x axis
runs along the keyboard in doubled key-step units and whose y axis
separates black keys (y=1) from white (y=0) - the geometry that makes,
say, E->F feel different from B->C# under the fingers.
"""

from pianofinger import (
    PitchRepresentation,
    displacement,
    pitch_to_midi,
    reflect_x,
    to_lattice,
)

print("one octave of lattice points:")
for name in ("C4", "C#4", "D4", "D#4", "E4", "F4", "F#4", "G4",
             "G#4", "A4", "A#4", "B4", "C5"):
    point = to_lattice(pitch_to_midi(name))
    print(f"  {name:>3}  x={point.x:3d}  y={point.y}")

print("\ndisplacements (delta_p_max = 15):")
for a, b in [("E4", "F4"), ("C4", "E4"), ("C4", "C#4"), ("B3", "C#4")]:
    integral = displacement(
        PitchRepresentation.INTEGRAL, pitch_to_midi(a), pitch_to_midi(b), 15
    )
    lattice = displacement(
        PitchRepresentation.LATTICE, pitch_to_midi(a), pitch_to_midi(b), 15
    )
    print(f"  {a:>3} -> {b:<3}  integral dx={integral.dx:+3d}"
          f"   lattice dx={lattice.dx:+3d} dy={lattice.dy:+d}")

# Spans beyond the cutoff are treated alike: a 24-semitone leap clamps
# to the 15-semitone cell.
big = displacement(PitchRepresentation.INTEGRAL, 60, 84, 15)
print(f"\nC4 -> C6 clamps to dx={big.dx}")

# The left-hand model is the x-mirror of the right-hand model; the
# black/white axis is untouched by the mirror.
d = displacement(PitchRepresentation.LATTICE, 60, 61, 15)
print(f"C4 -> C#4 as seen by RH: {d}, mirrored for LH: {reflect_x(d)}")
