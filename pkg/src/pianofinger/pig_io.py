"""Reading, validating and writing PIG fingering files.

A fingering file is UTF-8 text with one note per line and eight
whitespace-separated fields::

    id  onset[s]  offset[s]  pitch  onset_vel  offset_vel  channel  finger

Pitch is a spelled token (``C4``, ``F#4``, ``Bb3``; ``x`` doubles a sharp)
mapping onto the 88-key range; a bare MIDI number is accepted as a
fallback.  Channel 0 is the right hand, 1 the left.  The finger field is a
signed digit (positive = right hand, negative = left); a substitution such
as ``1_2`` is resolved to the first finger at parse time.  Lines starting
with ``//`` and blank lines are skipped.

Parsing canonicalises a piece: onset/offset times are rounded to the
format's six-decimal resolution and notes sharing an onset are ordered by
ascending pitch, so that decoding and evaluation see one deterministic
total order.  Onsets that *decrease* in file order are an error, never
silently reordered.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, replace

from .errors import (
    AlignmentMismatch,
    InvalidFinger,
    InvalidPitchToken,
    LengthMismatch,
    MalformedLine,
    MissingFinger,
    NonMonotoneOnsets,
)
from .pitch_space import MIDI_MAX, MIDI_MIN

TIME_DECIMALS = 6


class Hand(enum.Enum):
    RH = 0
    LH = 1

    @property
    def channel(self) -> int:
        return self.value

    @property
    def other(self) -> "Hand":
        return Hand.LH if self is Hand.RH else Hand.RH


@dataclass(frozen=True, order=True)
class FingerLabel:
    """One hand's digit: 1 = thumb .. 5 = little finger."""

    hand: Hand
    digit: int

    def __post_init__(self):
        if self.digit not in (1, 2, 3, 4, 5):
            raise InvalidFinger(f"finger digit must be 1..5, got {self.digit}")

    @property
    def signed(self) -> int:
        """Signed file encoding: positive digits are RH, negative LH."""
        return self.digit if self.hand is Hand.RH else -self.digit

    @classmethod
    def from_signed(cls, value: int) -> "FingerLabel":
        if value == 0:
            raise InvalidFinger("finger 0 is invalid")
        return cls(hand=Hand.RH if value > 0 else Hand.LH, digit=abs(value))


@dataclass(frozen=True)
class Note:
    """One performed note as stored in a fingering file."""

    note_id: int
    onset: float
    offset: float
    pitch: str
    midi: int
    onset_velocity: int
    offset_velocity: int
    channel: int
    finger: FingerLabel | None = None

    @property
    def hand(self) -> Hand:
        return Hand(self.channel)

    def with_finger(self, finger: FingerLabel) -> "Note":
        return replace(self, finger=finger)


@dataclass(frozen=True)
class Piece:
    """A canonically ordered note sequence with optional identity metadata."""

    notes: tuple[Note, ...]
    piece_id: str = ""
    annotator_id: str = ""

    def __len__(self) -> int:
        return len(self.notes)

    @property
    def fingers(self) -> tuple[FingerLabel | None, ...]:
        return tuple(n.finger for n in self.notes)

    def with_fingers(self, fingers) -> "Piece":
        if len(fingers) != len(self.notes):
            raise LengthMismatch(
                f"{len(fingers)} fingers for {len(self.notes)} notes"
            )
        notes = tuple(n.with_finger(f) for n, f in zip(self.notes, fingers))
        return replace(self, notes=notes)


_PITCH_RE = re.compile(r"^([A-G])(x|##|bb|#|b)?(-?\d+)$")
_BASE_SEMITONE = {"C": 0, "D": 2, "E": 4, "F": 5, "G": 7, "A": 9, "B": 11}
_ACCIDENTAL = {None: 0, "#": 1, "##": 2, "x": 2, "b": -1, "bb": -2}
_SHARP_NAMES = ("C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B")


def pitch_to_midi(token: str) -> int:
    """Spelled pitch token (or bare MIDI number) to MIDI note number."""
    if token.isdigit():
        midi = int(token)
    else:
        m = _PITCH_RE.match(token)
        if m is None:
            raise InvalidPitchToken(f"bad pitch token {token!r}")
        letter, accidental, octave = m.groups()
        midi = 12 * (int(octave) + 1) + _BASE_SEMITONE[letter] + _ACCIDENTAL[accidental]
    if not MIDI_MIN <= midi <= MIDI_MAX:
        raise InvalidPitchToken(
            f"pitch {token!r} (MIDI {midi}) outside the 88-key range"
        )
    return midi


def midi_to_pitch(midi: int) -> str:
    """MIDI number to a spelled token, preferring sharps."""
    if not MIDI_MIN <= midi <= MIDI_MAX:
        raise InvalidPitchToken(f"MIDI {midi} outside the 88-key range")
    octave, pc = divmod(midi, 12)
    return f"{_SHARP_NAMES[pc]}{octave - 1}"


def resolve_substitution(finger_token: str) -> FingerLabel:
    """Signed finger token, possibly an ``a_b`` substitution pair, to the
    label of the finger first used."""
    parts = finger_token.split("_")
    if len(parts) > 2 or not all(parts):
        raise InvalidFinger(f"bad finger token {finger_token!r}")
    try:
        values = [int(p) for p in parts]
    except ValueError:
        raise InvalidFinger(f"bad finger token {finger_token!r}") from None
    for v in values:
        if v == 0 or not 1 <= abs(v) <= 5:
            raise InvalidFinger(f"finger {v} outside 1..5 in {finger_token!r}")
    if len(values) == 2 and (values[0] > 0) != (values[1] > 0):
        raise InvalidFinger(f"substitution {finger_token!r} changes hands")
    return FingerLabel.from_signed(values[0])


def _parse_line(line_no: int, fields: list[str]) -> Note:
    if len(fields) not in (7, 8):
        raise MalformedLine(line_no, f"expected 8 fields, got {len(fields)}")
    try:
        note_id = int(fields[0])
        onset = round(float(fields[1]), TIME_DECIMALS)
        offset = round(float(fields[2]), TIME_DECIMALS)
        onset_velocity = int(fields[4])
        offset_velocity = int(fields[5])
        channel = int(fields[6])
    except ValueError as exc:
        raise MalformedLine(line_no, str(exc)) from None
    if note_id < 0:
        raise MalformedLine(line_no, f"negative note id {note_id}")
    if offset < onset:
        raise MalformedLine(line_no, f"offset {offset} before onset {onset}")
    for v in (onset_velocity, offset_velocity):
        if not 0 <= v <= 127:
            raise MalformedLine(line_no, f"velocity {v} outside 0..127")
    if channel not in (0, 1):
        raise MalformedLine(line_no, f"channel {channel} is not 0 or 1")
    midi = pitch_to_midi(fields[3])
    finger = resolve_substitution(fields[7]) if len(fields) == 8 else None
    return Note(
        note_id=note_id,
        onset=onset,
        offset=offset,
        pitch=fields[3],
        midi=midi,
        onset_velocity=onset_velocity,
        offset_velocity=offset_velocity,
        channel=channel,
        finger=finger,
    )


def parse_fingering_file(
    text: str, piece_id: str = "", annotator_id: str = ""
) -> Piece:
    """Parse a fingering file into a canonically ordered Piece.

    An unannotated file may omit the finger column (7 fields per line);
    such notes carry ``finger=None``.
    """
    notes: list[Note] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("//"):
            continue
        notes.append(_parse_line(line_no, line.split()))
    for prev, cur in zip(notes, notes[1:]):
        if cur.onset < prev.onset:
            raise NonMonotoneOnsets(
                f"onset {cur.onset} of note {cur.note_id} precedes {prev.onset}"
            )
    notes.sort(key=lambda n: (n.onset, n.midi))  # stable: ties by pitch only
    return Piece(notes=tuple(notes), piece_id=piece_id, annotator_id=annotator_id)


def serialize_fingering_file(piece: Piece) -> str:
    """Render a fully annotated piece back to file text.

    Times get exactly six decimals and fields are tab-separated; an empty
    piece yields an empty document.
    """
    lines = []
    for n in piece.notes:
        if n.finger is None:
            raise MissingFinger(f"note {n.note_id} has no finger label")
        lines.append(
            f"{n.note_id}\t{n.onset:.6f}\t{n.offset:.6f}\t{n.pitch}\t"
            f"{n.onset_velocity}\t{n.offset_velocity}\t{n.channel}\t{n.finger.signed}"
        )
    return "".join(line + "\n" for line in lines)


def split_hands(piece: Piece) -> tuple[Piece, Piece]:
    """Stable partition of a piece into its right- and left-hand parts."""
    rh = tuple(n for n in piece.notes if n.channel == 0)
    lh = tuple(n for n in piece.notes if n.channel == 1)
    return (
        replace(piece, notes=rh),
        replace(piece, notes=lh),
    )


def hand_part(piece: Piece, hand: Hand) -> Piece:
    rh, lh = split_hands(piece)
    return rh if hand is Hand.RH else lh


def infer_hand(piece: Piece) -> Hand:
    """Hand of a single-hand part; raises on mixed or empty input."""
    channels = {n.channel for n in piece.notes}
    if len(channels) != 1:
        raise ValueError(f"expected a single-hand part, channels {sorted(channels)}")
    return Hand(channels.pop())


@dataclass(frozen=True)
class GroundTruthSet:
    """Aligned fingerings of one piece by one or more annotators."""

    piece: Piece                                  # reference note content
    fingerings: tuple[tuple[FingerLabel, ...], ...]
    annotator_ids: tuple[str, ...]

    @property
    def piece_id(self) -> str:
        return self.piece.piece_id

    def __len__(self) -> int:
        return len(self.fingerings)

    @property
    def signed_fingerings(self) -> tuple[tuple[int, ...], ...]:
        return tuple(tuple(f.signed for f in seq) for seq in self.fingerings)

    @classmethod
    def from_pieces(cls, pieces: list[Piece]) -> "GroundTruthSet":
        if not pieces:
            raise LengthMismatch("a ground-truth set needs at least one fingering")
        reference = pieces[0]
        n = len(reference)
        fingerings = []
        for p in pieces:
            if len(p) != n:
                raise LengthMismatch(
                    f"{p.piece_id}/{p.annotator_id}: {len(p)} notes, expected {n}"
                )
            for a, b in zip(reference.notes, p.notes):
                if (a.onset, a.midi) != (b.onset, b.midi):
                    raise AlignmentMismatch(
                        f"{p.piece_id}/{p.annotator_id}: note content differs "
                        f"at id {b.note_id}"
                    )
            fingers = p.fingers
            if any(f is None for f in fingers):
                raise MissingFinger(f"{p.piece_id}/{p.annotator_id} is unannotated")
            fingerings.append(tuple(fingers))
        return cls(
            piece=reference,
            fingerings=tuple(fingerings),
            annotator_ids=tuple(p.annotator_id for p in pieces),
        )
