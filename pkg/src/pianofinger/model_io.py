"""Versioned structured-text model files.

A model file is JSON with deterministic key ordering::

    {
      "format": "piano-fingering-model",
      "version": 1,
      "kind": "note-hmm" | "chord-hmm",
      "config": { ... },
      "tables": { ... }
    }

Every table is a nested object whose leaves are log probabilities keyed
by explicit context strings: digit contexts are comma-joined digits
(``"1,2"``), hands are ``"rh"``/``"lh"``, and displacements are ``"dx"``
(integral) or ``"dx,dy"`` (lattice).  Zero-probability cells serialise as
``-Infinity``, which the JSON module reads back exactly, so a reloaded
model decodes bit-identically.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .chord_hmm import ChordHmmModel, ChordHmmParams
from .note_hmm import N_DIGITS, NoteHmmConfig, NoteHmmModel, Symmetry
from .pig_io import Hand
from .pitch_space import (
    Displacement,
    PitchRepresentation,
    alphabet_size,
    index_displacement,
)

FORMAT = "piano-fingering-model"
VERSION = 1

_HAND_KEY = {Hand.RH: "rh", Hand.LH: "lh"}
_KEY_HAND = {v: k for k, v in _HAND_KEY.items()}


def _digit_key(digits) -> str:
    return ",".join(str(d) for d in digits)


def _disp_key(representation: PitchRepresentation, d: Displacement) -> str:
    if representation is PitchRepresentation.INTEGRAL:
        return str(d.dx)
    return f"{d.dx},{d.dy}"


def _contexts(length: int):
    """All digit tuples of the given length, in flat-index order."""
    if length == 0:
        yield ()
        return
    for idx in range(N_DIGITS**length):
        digits = []
        for _ in range(length):
            digits.append(idx % N_DIGITS + 1)
            idx //= N_DIGITS
        yield tuple(reversed(digits))


def _digit_table_to_dict(table: np.ndarray, context_len: int) -> dict:
    out = {}
    for i, ctx in enumerate(_contexts(context_len)):
        out[_digit_key(ctx)] = {
            str(d + 1): float(table[i, d]) for d in range(N_DIGITS)
        }
    return out


def _digit_table_from_dict(data: dict, context_len: int) -> np.ndarray:
    table = np.empty((N_DIGITS**context_len, N_DIGITS))
    for i, ctx in enumerate(_contexts(context_len)):
        row = data[_digit_key(ctx)]
        for d in range(N_DIGITS):
            table[i, d] = row[str(d + 1)]
    return table


def _output_table_to_dict(table, representation, delta_p_max) -> dict:
    size = alphabet_size(representation, delta_p_max)
    out = {}
    for f_prev in range(N_DIGITS):
        for f in range(N_DIGITS):
            cells = {}
            for idx in range(size):
                d = index_displacement(representation, delta_p_max, idx)
                cells[_disp_key(representation, d)] = float(table[f_prev, f, idx])
            out[f"{f_prev + 1},{f + 1}"] = cells
    return out


def _output_table_from_dict(data, representation, delta_p_max) -> np.ndarray:
    size = alphabet_size(representation, delta_p_max)
    table = np.empty((N_DIGITS, N_DIGITS, size))
    for f_prev in range(N_DIGITS):
        for f in range(N_DIGITS):
            cells = data[f"{f_prev + 1},{f + 1}"]
            for idx in range(size):
                d = index_displacement(representation, delta_p_max, idx)
                table[f_prev, f, idx] = cells[_disp_key(representation, d)]
    return table


def _note_config_to_dict(config: NoteHmmConfig) -> dict:
    return {
        "order": config.order,
        "pitch_representation": config.pitch_representation.value,
        "symmetries": sorted(s.value for s in config.symmetries),
        "delta_p_max": config.delta_p_max,
        "chord_threshold": config.chord_threshold,
        "alpha": list(config.alpha),
        "lambda": list(config.lambda_),
        "smoothing_epsilon": config.smoothing_epsilon,
        "chord_constraint": config.chord_constraint,
    }


def _note_config_from_dict(data: dict) -> NoteHmmConfig:
    return NoteHmmConfig(
        order=data["order"],
        pitch_representation=PitchRepresentation(data["pitch_representation"]),
        symmetries=frozenset(Symmetry(s) for s in data["symmetries"]),
        delta_p_max=data["delta_p_max"],
        chord_threshold=data["chord_threshold"],
        alpha=tuple(data["alpha"]),
        lambda_=tuple(data["lambda"]),
        smoothing_epsilon=data["smoothing_epsilon"],
        chord_constraint=data["chord_constraint"],
    )


def _chord_params_to_dict(params: ChordHmmParams) -> dict:
    return {
        "beta1": params.beta1,
        "beta2": params.beta2,
        "gamma1": params.gamma1,
        "gamma2": params.gamma2,
        "zeta": params.zeta,
        "delta": params.delta,
        "delta_p_max": params.delta_p_max,
        "smoothing_epsilon": params.smoothing_epsilon,
        "truncate_overlaps": params.truncate_overlaps,
        "order": params.order,
    }


def _chord_params_from_dict(data: dict) -> ChordHmmParams:
    return ChordHmmParams(**data)


def model_kind(model) -> str:
    if isinstance(model, NoteHmmModel):
        return "note-hmm"
    if isinstance(model, ChordHmmModel):
        return "chord-hmm"
    raise TypeError(f"not a model: {type(model).__name__}")


def dumps_model(model) -> str:
    """Serialise a trained model to deterministic JSON text."""
    kind = model_kind(model)
    if kind == "note-hmm":
        cfg = model.config
        repr_, dpmax = cfg.pitch_representation, cfg.delta_p_max
        tables = {
            "initial": [
                _digit_table_to_dict(model.log_initial[k], k)
                for k in range(cfg.order)
            ],
            "transition": _digit_table_to_dict(model.log_transition, cfg.order),
            "output": {
                _HAND_KEY[hand]: {
                    str(lag + 1): _output_table_to_dict(
                        model.log_output[hand][lag], repr_, dpmax
                    )
                    for lag in range(cfg.order)
                }
                for hand in Hand
            },
        }
        doc = {
            "format": FORMAT,
            "version": VERSION,
            "kind": kind,
            "config": _note_config_to_dict(cfg),
            "tables": tables,
        }
    else:
        params = model.params
        lattice = PitchRepresentation.LATTICE
        tables = {
            "initial_digit": {
                str(d + 1): float(model.log_initial_digit[d]) for d in range(N_DIGITS)
            },
            "transition_across": _digit_table_to_dict(model.log_trans_across, 1),
            "transition_within": _digit_table_to_dict(model.log_trans_within, 1),
            "output_across": {
                _HAND_KEY[h]: _output_table_to_dict(
                    model.log_out_across[h], lattice, params.delta_p_max
                )
                for h in Hand
            },
            "output_within": {
                _HAND_KEY[h]: _output_table_to_dict(
                    model.log_out_within[h], lattice, params.delta_p_max
                )
                for h in Hand
            },
        }
        doc = {
            "format": FORMAT,
            "version": VERSION,
            "kind": kind,
            "config": _chord_params_to_dict(params),
            "tables": tables,
        }
    return json.dumps(doc, sort_keys=True, indent=1)


def loads_model(text: str):
    """Parse a model file; the inverse of dumps_model."""
    doc = json.loads(text)
    if doc.get("format") != FORMAT:
        raise ValueError(f"not a {FORMAT} document")
    if doc.get("version") != VERSION:
        raise ValueError(f"unsupported model version {doc.get('version')!r}")
    kind = doc.get("kind")
    tables = doc["tables"]
    if kind == "note-hmm":
        config = _note_config_from_dict(doc["config"])
        repr_, dpmax = config.pitch_representation, config.delta_p_max
        return NoteHmmModel(
            config=config,
            log_initial=[
                _digit_table_from_dict(tables["initial"][k], k)
                for k in range(config.order)
            ],
            log_transition=_digit_table_from_dict(tables["transition"], config.order),
            log_output={
                hand: [
                    _output_table_from_dict(
                        tables["output"][_HAND_KEY[hand]][str(lag + 1)], repr_, dpmax
                    )
                    for lag in range(config.order)
                ]
                for hand in Hand
            },
        )
    if kind == "chord-hmm":
        params = _chord_params_from_dict(doc["config"])
        lattice = PitchRepresentation.LATTICE
        return ChordHmmModel(
            params=params,
            log_initial_digit=np.array(
                [tables["initial_digit"][str(d + 1)] for d in range(N_DIGITS)]
            ),
            log_trans_across=_digit_table_from_dict(tables["transition_across"], 1),
            log_trans_within=_digit_table_from_dict(tables["transition_within"], 1),
            log_out_across={
                h: _output_table_from_dict(
                    tables["output_across"][_HAND_KEY[h]], lattice, params.delta_p_max
                )
                for h in Hand
            },
            log_out_within={
                h: _output_table_from_dict(
                    tables["output_within"][_HAND_KEY[h]], lattice, params.delta_p_max
                )
                for h in Hand
            },
        )
    raise ValueError(f"unknown model kind {kind!r}")


def save_model(model, path) -> None:
    Path(path).write_text(dumps_model(model), encoding="utf-8")


def load_model(path):
    return loads_model(Path(path).read_text(encoding="utf-8"))
