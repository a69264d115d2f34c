"""Whole-piece fingering estimation, dispatching on the model kind."""

from .chord_hmm import ChordHmmModel
from .chord_hmm import decode_piece as _decode_chord_piece
from .note_hmm import NoteHmmModel
from .note_hmm import decode_piece as _decode_note_piece
from .pig_io import FingerLabel, Piece


def estimate_piece(model, piece: Piece):
    """Decode both hands of a piece.

    Returns (signed fingers aligned with piece.notes, per-hand results).
    """
    if isinstance(model, NoteHmmModel):
        return _decode_note_piece(model, piece)
    if isinstance(model, ChordHmmModel):
        return _decode_chord_piece(model, piece)
    raise TypeError(f"not a model: {type(model).__name__}")


def annotate_piece(model, piece: Piece) -> tuple:
    """Piece with estimated finger labels; returns (piece, per-hand results)."""
    signed, results = estimate_piece(model, piece)
    labels = [FingerLabel.from_signed(v) for v in signed]
    return piece.with_fingers(labels), results
