"""Reading and writing fingering files.

A fingering file is plain text: one note per line with onset/offset
times, a spelled pitch, velocities, the hand channel, and a signed finger
(positive = right hand, negative = left).  This demo parses a small
document, shows the canonicalisation the parser applies, and round-trips
it back to text.
"""

from pianofinger import (
    parse_fingering_file,
    resolve_substitution,
    serialize_fingering_file,
    split_hands,
)

DOCUMENT = """\
//Version: demo
0  0.000000  0.450000  E4   72  64  0  3
1  0.000000  0.500000  C4   72  64  0  1
2  0.000000  0.900000  C3   72  64  1  -1
3  0.500000  0.950000  G3   72  64  1  -2
4  0.500000  0.700000  F4   72  64  0  1_2
5  1.000000  1.400000  G4   72  64  0  2
"""

piece = parse_fingering_file(DOCUMENT, piece_id="demo")
print(f"parsed {len(piece)} notes")

# Notes sharing an onset are reordered by ascending pitch, so the C4/E4
# chord comes out low-to-high no matter how the file listed it.
print("\ncanonical order:")
for note in piece.notes:
    print(
        f"  {note.onset:6.3f}s  {note.pitch:>3}  midi {note.midi}"
        f"  hand {note.hand.name}  finger {note.finger.signed:+d}"
    )

# The substitution 1_2 ("strike with the thumb, silently swap to the
# index finger") was resolved to the striking finger:
print("\nsubstitution 1_2 resolves to:", resolve_substitution("1_2"))

rh, lh = split_hands(piece)
print(f"\nright hand: {[n.pitch for n in rh.notes]}")
print(f"left hand:  {[n.pitch for n in lh.notes]}")

print("\nserialised back (tab-separated, six-decimal times):")
print(serialize_fingering_file(piece))
