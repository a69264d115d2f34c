"""Keyboard geometry: integral and lattice pitch representations.

The integral representation is the plain MIDI semitone axis.  The lattice
representation places each key on a two-dimensional grid: ``x`` runs along
the keyboard in doubled key-step units (adjacent white keys are 2 apart,
so every key gets an integer coordinate) and ``y`` is 1 on black keys and
0 on white keys.  Output models only ever see *displacements* between two
keys, clamped to a maximum span, so the absolute origin of ``x`` is
irrelevant.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import OutOfRange

MIDI_MIN = 21   # A0
MIDI_MAX = 108  # C8

# x offset of each pitch class within an octave, in doubled key-step units.
_X_OFFSET = (0, 1, 2, 3, 4, 6, 7, 8, 9, 10, 11, 12)  # C .. B
_BLACK = frozenset({1, 3, 6, 8, 10})
_OCTAVE_X = 14


class PitchRepresentation(enum.Enum):
    INTEGRAL = "integral"
    LATTICE = "lattice"


@dataclass(frozen=True)
class LatticePoint:
    x: int
    y: int


@dataclass(frozen=True)
class Displacement:
    """Clamped relative motion between two keys.

    ``dy`` is None in the integral representation, which has no vertical
    axis.
    """

    dx: int
    dy: int | None = None


def to_lattice(midi: int) -> LatticePoint:
    """Map a MIDI number on the 88-key range to its lattice point."""
    if not MIDI_MIN <= midi <= MIDI_MAX:
        raise OutOfRange(f"MIDI number {midi} outside {MIDI_MIN}..{MIDI_MAX}")
    octave, pc = divmod(midi, 12)
    return LatticePoint(x=_OCTAVE_X * octave + _X_OFFSET[pc], y=1 if pc in _BLACK else 0)


def is_black_key(midi: int) -> bool:
    return midi % 12 in _BLACK


def _clamp(value: int, bound: int) -> int:
    return max(-bound, min(bound, value))


def displacement(
    representation: PitchRepresentation,
    from_midi: int,
    to_midi: int,
    delta_p_max: int,
) -> Displacement:
    """Relative motion from one pitch to another, clamped at the span cutoff.

    Integral: dx is the semitone interval clamped to +-delta_p_max.
    Lattice: dx is the x interval clamped to +-2*delta_p_max (the same
    physical span in doubled units); dy is the unclamped black/white step.
    """
    if representation is PitchRepresentation.INTEGRAL:
        return Displacement(dx=_clamp(to_midi - from_midi, delta_p_max))
    a, b = to_lattice(from_midi), to_lattice(to_midi)
    return Displacement(dx=_clamp(b.x - a.x, 2 * delta_p_max), dy=b.y - a.y)


def reflect_x(d: Displacement) -> Displacement:
    """Mirror a displacement along the keyboard; the vertical step is kept."""
    return Displacement(dx=-d.dx, dy=d.dy)


def negate(d: Displacement) -> Displacement:
    """Reverse a displacement in all of its components."""
    return Displacement(dx=-d.dx, dy=None if d.dy is None else -d.dy)


# --- displacement alphabet indexing -------------------------------------
#
# Output tables are dense arrays over the clamped displacement alphabet;
# the helpers below define the (fixed, documented) cell ordering:
# integral cells are dx ascending; lattice cells are dx-major, dy minor
# with dy in (-1, 0, 1).

def alphabet_size(representation: PitchRepresentation, delta_p_max: int) -> int:
    if representation is PitchRepresentation.INTEGRAL:
        return 2 * delta_p_max + 1
    return (4 * delta_p_max + 1) * 3


def displacement_index(
    representation: PitchRepresentation, delta_p_max: int, d: Displacement
) -> int:
    if representation is PitchRepresentation.INTEGRAL:
        return d.dx + delta_p_max
    return (d.dx + 2 * delta_p_max) * 3 + (d.dy + 1)


def index_displacement(
    representation: PitchRepresentation, delta_p_max: int, index: int
) -> Displacement:
    if representation is PitchRepresentation.INTEGRAL:
        return Displacement(dx=index - delta_p_max)
    q, r = divmod(index, 3)
    return Displacement(dx=q - 2 * delta_p_max, dy=r - 1)


def _permutation(representation, delta_p_max, transform) -> np.ndarray:
    size = alphabet_size(representation, delta_p_max)
    perm = np.empty(size, dtype=np.intp)
    for i in range(size):
        d = index_displacement(representation, delta_p_max, i)
        perm[i] = displacement_index(representation, delta_p_max, transform(d))
    return perm


def negation_permutation(
    representation: PitchRepresentation, delta_p_max: int
) -> np.ndarray:
    """Index permutation realising d -> -d on the displacement alphabet."""
    return _permutation(representation, delta_p_max, negate)


def reflection_permutation(
    representation: PitchRepresentation, delta_p_max: int
) -> np.ndarray:
    """Index permutation realising the x-mirror on the displacement alphabet."""
    return _permutation(representation, delta_p_max, reflect_x)
