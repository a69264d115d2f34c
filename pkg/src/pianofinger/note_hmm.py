"""Note-level hidden Markov models of piano fingering, orders 1 to 3.

Finger digits are the hidden states.  A digit m-gram model with linear
interpolation over lower orders supplies the transition scores, and
transposition-invariant pairwise output factors (one per lag, weighted by
an exponent ``alpha``) score the pitch motion produced by each finger
pair.  Optional time-inversion and left/right reflection symmetries are
imposed by count tying, and a hard constraint can forbid finger crossings
inside chords.  Decoding is exact Viterbi over the last-``m``-digit state
space.

Score convention: each pairwise output row is normalised over the clamped
displacement alphabet for its finger pair, and decoding maximises

    sum_n [ log P(f_n | context) + sum_l alpha_l * log F_l(d; f_(n-l), f_n) ]

which is an unnormalised posterior score; only its argmax is meaningful
across configurations.  ``sequence_log_score`` reproduces the exact value
the decoder assigns to a fingering, including the order of floating-point
operations, so exhaustive enumeration can be compared bitwise.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from ._tables import normalize_rows, safe_log
from .errors import EmptyCorpus, EmptyPiece, MissingFinger, NoFeasiblePath
from .pig_io import FingerLabel, Hand, Note, Piece, infer_hand, midi_to_pitch, split_hands
from .pitch_space import (
    MIDI_MAX,
    MIDI_MIN,
    PitchRepresentation,
    alphabet_size,
    displacement,
    displacement_index,
    negation_permutation,
    reflection_permutation,
)

N_DIGITS = 5
NEG_INF = float("-inf")


class Symmetry(enum.Enum):
    TIME_INVERSION = "time"
    REFLECTION = "reflect"


# Shipped default coefficients per model order (output-factor exponents
# alpha and transition interpolation weights lambda), tuned for the
# standard PIG train/test split.
DEFAULT_ALPHA = {1: (0.964,), 2: (0.556, 0.407), 3: (0.448, 0.292, 0.194)}
DEFAULT_LAMBDA = {1: (), 2: (0.474,), 3: (0.470, 0.504)}


@dataclass(frozen=True)
class NoteHmmConfig:
    """Architecture and coefficients of a note-level fingering HMM.

    ``alpha`` has one exponent per lag (length = order); ``lambda_`` has
    one interpolation weight per lower order (length = order - 1, summing
    to at most 1).  Leaving either as None selects the shipped defaults
    for the chosen order.
    """

    order: int = 2
    pitch_representation: PitchRepresentation = PitchRepresentation.LATTICE
    symmetries: frozenset = frozenset()
    delta_p_max: int = 15
    chord_threshold: float = 0.030
    alpha: tuple | None = None
    lambda_: tuple | None = None
    smoothing_epsilon: float = 0.5
    chord_constraint: bool = True

    def __post_init__(self):
        if self.order not in (1, 2, 3):
            raise ValueError(f"order must be 1, 2 or 3, got {self.order}")
        object.__setattr__(self, "symmetries", frozenset(self.symmetries))
        alpha = DEFAULT_ALPHA[self.order] if self.alpha is None else tuple(
            float(a) for a in self.alpha
        )
        lambda_ = DEFAULT_LAMBDA[self.order] if self.lambda_ is None else tuple(
            float(v) for v in self.lambda_
        )
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "lambda_", lambda_)
        if len(alpha) != self.order:
            raise ValueError(f"alpha needs {self.order} weights, got {len(alpha)}")
        if any(a < 0 for a in alpha):
            raise ValueError("alpha weights must be non-negative")
        if len(lambda_) != self.order - 1:
            raise ValueError(
                f"lambda needs {self.order - 1} coefficients, got {len(lambda_)}"
            )
        if any(not 0.0 <= v <= 1.0 for v in lambda_):
            raise ValueError("lambda coefficients must lie in [0, 1]")
        if sum(lambda_) > 1.0 + 1e-12:
            raise ValueError("lambda coefficients must sum to at most 1")
        if self.delta_p_max < 1:
            raise ValueError("delta_p_max must be positive")
        if self.smoothing_epsilon < 0:
            raise ValueError("smoothing_epsilon must be non-negative")
        if self.chord_threshold < 0:
            raise ValueError("chord_threshold must be non-negative")


@dataclass
class NoteHmmModel:
    """Trained note HMM.  All tables are stored as log probabilities.

    log_initial[k] is the (5**k, 5) conditional distribution of the
    (k+1)-th digit of a piece given the first k; log_transition is the
    (5**order, 5) interpolated digit transition table; log_output[hand]
    holds one (5, 5, alphabet) pairwise factor table per lag, rows
    normalised over the clamped displacement alphabet.
    """

    config: NoteHmmConfig
    log_initial: list
    log_transition: np.ndarray
    log_output: dict

    def transition_matrix(self) -> np.ndarray:
        return np.exp(self.log_transition)

    def output_table(self, hand: Hand, lag: int) -> np.ndarray:
        return np.exp(self.log_output[hand][lag - 1])

    def initial_matrix(self, k: int) -> np.ndarray:
        return np.exp(self.log_initial[k])


@dataclass(frozen=True)
class DecodeResult:
    fingers: tuple          # digits 1..5, one per note
    log_score: float
    crossing_fallback_used: bool = False


def _flat_index(digits) -> int:
    idx = 0
    for d in digits:
        idx = idx * N_DIGITS + (d - 1)
    return idx


def _enforce_time_inversion(table: np.ndarray, negperm: np.ndarray) -> np.ndarray:
    """Copy each cell from its canonical partner so that
    F[f', f, d] == F[f, f', -d] holds bitwise."""
    partner = table.transpose(1, 0, 2)[:, :, negperm]
    i = np.arange(N_DIGITS)[:, None, None]
    j = np.arange(N_DIGITS)[None, :, None]
    k = np.arange(table.shape[2])[None, None, :]
    canonical = (i < j) | ((i == j) & (k <= negperm[k]))
    return np.where(canonical, table, partner)


def _timeinv_partner_counts(counts: np.ndarray, negperm: np.ndarray) -> np.ndarray:
    return counts.transpose(1, 0, 2)[:, :, negperm]


def train(corpus, config: NoteHmmConfig) -> NoteHmmModel:
    """Maximum-likelihood training on annotated single-hand pieces.

    Digit transition and initial tables are pooled over both hands; the
    pairwise output tables are per hand and lag.  Output cells receive
    ``smoothing_epsilon`` additive counts before row normalisation;
    transition tables rely on interpolation instead, with unseen contexts
    falling back to a uniform row so every distribution stays normalised.
    """
    pieces = [p for p in corpus if len(p) > 0]
    if not pieces:
        raise EmptyCorpus("training corpus is empty")
    m = config.order
    repr_ = config.pitch_representation
    dpmax = config.delta_p_max
    eps = config.smoothing_epsilon

    sequences = []
    for piece in pieces:
        hand = infer_hand(piece)
        digits = []
        for note in piece.notes:
            if note.finger is None:
                raise MissingFinger(
                    f"note {note.note_id} of {piece.piece_id!r} has no finger"
                )
            digits.append(note.finger.digit)
        sequences.append((hand, [n.midi for n in piece.notes], digits))

    # initial conditionals for the first m notes
    init_counts = [np.zeros((N_DIGITS**k, N_DIGITS)) for k in range(m)]
    for _, _, digits in sequences:
        for k in range(min(m, len(digits))):
            init_counts[k][_flat_index(digits[:k]), digits[k] - 1] += 1.0
    log_initial = [safe_log(normalize_rows(c + eps)) for c in init_counts]

    # per-order ML digit transitions, then linear interpolation
    ml = []
    for order in range(1, m + 1):
        counts = np.zeros((N_DIGITS**order, N_DIGITS))
        for _, _, digits in sequences:
            for n in range(order, len(digits)):
                counts[_flat_index(digits[n - order : n]), digits[n] - 1] += 1.0
        ml.append(normalize_rows(counts))
    weights_full = 1.0 - sum(config.lambda_)
    trans = weights_full * ml[m - 1]
    contexts = np.arange(N_DIGITS**m)
    for order in range(1, m):
        trans = trans + config.lambda_[order - 1] * ml[order - 1][
            contexts % N_DIGITS**order
        ]
    log_transition = safe_log(trans)

    # pairwise output factors per hand and lag
    size = alphabet_size(repr_, dpmax)
    counts = {
        hand: [np.zeros((N_DIGITS, N_DIGITS, size)) for _ in range(m)]
        for hand in Hand
    }
    for hand, midis, digits in sequences:
        for lag in range(1, m + 1):
            table = counts[hand][lag - 1]
            for n in range(lag, len(digits)):
                d = displacement(repr_, midis[n - lag], midis[n], dpmax)
                table[
                    digits[n - lag] - 1,
                    digits[n] - 1,
                    displacement_index(repr_, dpmax, d),
                ] += 1.0

    negperm = negation_permutation(repr_, dpmax)
    reflperm = reflection_permutation(repr_, dpmax)
    tie_time = Symmetry.TIME_INVERSION in config.symmetries
    tie_reflect = Symmetry.REFLECTION in config.symmetries
    log_output = {Hand.RH: [], Hand.LH: []}
    for lag in range(m):
        if tie_reflect:
            pooled = counts[Hand.RH][lag] + counts[Hand.LH][lag][:, :, reflperm]
            if tie_time:
                pooled = pooled + _timeinv_partner_counts(pooled, negperm)
            table = normalize_rows(pooled + eps)
            if tie_time:
                table = _enforce_time_inversion(table, negperm)
            log_output[Hand.RH].append(safe_log(table))
            log_output[Hand.LH].append(safe_log(table[:, :, reflperm]))
        else:
            for hand in Hand:
                c = counts[hand][lag]
                if tie_time:
                    c = c + _timeinv_partner_counts(c, negperm)
                table = normalize_rows(c + eps)
                if tie_time:
                    table = _enforce_time_inversion(table, negperm)
                log_output[hand].append(safe_log(table))

    return NoteHmmModel(
        config=config,
        log_initial=log_initial,
        log_transition=log_transition,
        log_output=log_output,
    )


def transition_prob(model: NoteHmmModel, context, next_digit: int) -> float:
    """Interpolated probability of the next digit given the last
    ``order`` digits."""
    if len(context) != model.config.order:
        raise ValueError(
            f"context must have {model.config.order} digits, got {len(context)}"
        )
    return float(np.exp(model.log_transition[_flat_index(context), next_digit - 1]))


def output_score(model: NoteHmmModel, pitches, fingers, hand: Hand = Hand.RH) -> float:
    """Alpha-weighted product of the pairwise output factors for the most
    recent note given up to ``order`` predecessors.

    ``pitches`` are MIDI numbers and ``fingers`` digits, oldest first, with
    the current note last; both must have equal length between 2 and
    order + 1.
    """
    if len(pitches) != len(fingers):
        raise ValueError("pitches and fingers must have equal length")
    lags = len(pitches) - 1
    if not 1 <= lags <= model.config.order:
        raise ValueError(f"got {lags} lags for an order-{model.config.order} model")
    cfg = model.config
    score = 1.0
    for lag in range(1, lags + 1):
        d = displacement(
            cfg.pitch_representation, pitches[-1 - lag], pitches[-1], cfg.delta_p_max
        )
        idx = displacement_index(cfg.pitch_representation, cfg.delta_p_max, d)
        factor = float(
            np.exp(model.log_output[hand][lag - 1][fingers[-1 - lag] - 1, fingers[-1] - 1, idx])
        )
        score *= factor ** cfg.alpha[lag - 1]
    return score


# --- within-chord crossing constraint ------------------------------------

_DIGIT_DIR = np.sign(np.arange(N_DIGITS)[None, :] - np.arange(N_DIGITS)[:, None])
ALLOWED_ASCENDING_RH = _DIGIT_DIR > 0
ALLOWED_DESCENDING_RH = _DIGIT_DIR < 0


def chord_crossing_allowed(prev, cur, hand: Hand, delta: float) -> bool:
    """Whether a consecutive note pair respects the within-chord rule.

    ``prev`` and ``cur`` are (midi, onset, digit) triples.  Outside a
    chord (onsets more than ``delta`` apart) everything is allowed.
    Inside one, finger order must strictly follow pitch order: ascending
    pitch takes ascending digits in the right hand and descending digits
    in the left, so crossings and repeated digits on distinct pitches are
    both forbidden.
    """
    (p1, t1, f1), (p2, t2, f2) = prev, cur
    if abs(t2 - t1) > delta:
        return True
    if p1 == p2:
        return True
    f1, f2 = int(f1), int(f2)
    pitch_dir = 1 if p2 > p1 else -1
    digit_dir = (f2 > f1) - (f2 < f1)
    required = pitch_dir if hand is Hand.RH else -pitch_dir
    return digit_dir == required


def _crossing_mask(hand: Hand, prev_midi: int, cur_midi: int):
    """(5, 5) allowed matrix over (previous digit, current digit)."""
    if prev_midi == cur_midi:
        return None
    up = cur_midi > prev_midi
    if hand is Hand.RH:
        return ALLOWED_ASCENDING_RH if up else ALLOWED_DESCENDING_RH
    return ALLOWED_DESCENDING_RH if up else ALLOWED_ASCENDING_RH


# --- decoding -------------------------------------------------------------

@dataclass
class _Step:
    trans: np.ndarray   # (states_before, 5) log transition for this note
    out_mats: list      # [(lag, (5, 5) alpha-weighted log factor)]
    allowed: np.ndarray | None


def _step_tables(model: NoteHmmModel, hand: Hand, midis, onsets, use_constraint):
    cfg = model.config
    m = cfg.order
    log_out = model.log_output[hand]
    steps = [_Step(model.log_initial[0], [], None)]
    for n in range(1, len(midis)):
        trans = model.log_initial[n] if n < m else model.log_transition
        out_mats = []
        for lag in range(1, min(m, n) + 1):
            if cfg.alpha[lag - 1] == 0.0:
                continue  # inert factor; also avoids -inf * 0 = nan
            d = displacement(
                cfg.pitch_representation, midis[n - lag], midis[n], cfg.delta_p_max
            )
            idx = displacement_index(cfg.pitch_representation, cfg.delta_p_max, d)
            out_mats.append((lag, log_out[lag - 1][:, :, idx] * cfg.alpha[lag - 1]))
        allowed = None
        if use_constraint and abs(onsets[n] - onsets[n - 1]) <= cfg.chord_threshold:
            allowed = _crossing_mask(hand, midis[n - 1], midis[n])
        steps.append(_Step(trans, out_mats, allowed))
    return steps


def _backtrack(parents, state: int):
    digits = []
    for n in range(len(parents) - 1, -1, -1):
        digits.append(int(state) % N_DIGITS + 1)
        state = parents[n][state]
    digits.reverse()
    return tuple(digits)


def _run_viterbi(model: NoteHmmModel, hand: Hand, midis, onsets, use_constraint):
    """Exact DP; returns (digits, log score) or None when every path has
    score -inf.  Exact score ties resolve to the lexicographically
    smallest digit sequence, matching brute-force enumeration order."""
    m = model.config.order
    steps = _step_tables(model, hand, midis, onsets, use_constraint)
    dp = steps[0].trans[0].copy()
    parents = [np.full(N_DIGITS, -1, dtype=np.intp)]
    state_len = 1
    for n in range(1, len(steps)):
        step = steps[n]
        n_prev = dp.shape[0]
        scores = dp[:, None] + step.trans
        out = None
        for lag, mat in step.out_mats:
            idx = (np.arange(n_prev) // N_DIGITS ** (lag - 1)) % N_DIGITS
            term = mat[idx]
            out = term if out is None else out + term
        if out is not None:
            scores = scores + out
        if step.allowed is not None:
            last = np.arange(n_prev) % N_DIGITS
            scores = np.where(step.allowed[last], scores, NEG_INF)
        if state_len < m:
            dp = scores.reshape(-1)
            parents.append(np.repeat(np.arange(n_prev), N_DIGITS))
            state_len += 1
            continue
        # merge: predecessors of state (r, d) differ only in the oldest digit g
        base = N_DIGITS ** (m - 1)
        grouped = scores.reshape(N_DIGITS, base, N_DIGITS)
        best_g = grouped.argmax(axis=0)
        dp_new = np.take_along_axis(grouped, best_g[None], axis=0)[0]
        parent = best_g * base + np.arange(base)[:, None]
        ties = (grouped == dp_new[None]).sum(axis=0) > 1
        ties &= dp_new > NEG_INF
        if ties.any():
            for r, d in zip(*np.nonzero(ties)):
                candidates = np.nonzero(grouped[:, r, d] == dp_new[r, d])[0]
                _, g = min(
                    (_backtrack(parents, int(g) * base + r), int(g))
                    for g in candidates
                )
                parent[r, d] = g * base + r
        dp = dp_new.reshape(-1)
        parents.append(parent.reshape(-1))
    best = dp.max()
    if best == NEG_INF or math.isnan(best):
        return None
    states = np.nonzero(dp == best)[0]
    fingers = min(_backtrack(parents, int(s)) for s in states)
    return fingers, float(best)


def decode_viterbi(
    model: NoteHmmModel,
    piece: Piece,
    hand: Hand | None = None,
    crossing_fallback: bool = True,
) -> DecodeResult:
    """Most probable fingering of one hand part by exact Viterbi.

    When the within-chord constraint leaves no feasible path (e.g. an
    unplayable cluster) and ``crossing_fallback`` is set, decoding is
    retried without the constraint and the result is flagged.
    """
    if len(piece) == 0:
        raise EmptyPiece(f"piece {piece.piece_id!r} has no notes")
    if hand is None:
        hand = infer_hand(piece)
    midis = [n.midi for n in piece.notes]
    onsets = [n.onset for n in piece.notes]
    result = _run_viterbi(model, hand, midis, onsets, model.config.chord_constraint)
    fallback = False
    if result is None and model.config.chord_constraint and crossing_fallback:
        result = _run_viterbi(model, hand, midis, onsets, False)
        fallback = True
    if result is None:
        raise NoFeasiblePath(f"piece {piece.piece_id!r}: all fingerings have zero probability")
    fingers, score = result
    return DecodeResult(fingers=fingers, log_score=score, crossing_fallback_used=fallback)


def sequence_log_score(
    model: NoteHmmModel, piece: Piece, fingers, hand: Hand | None = None
) -> float:
    """Log score the decoder assigns to one specific fingering.

    Reproduces the decoder's arithmetic exactly, so for short pieces
    exhaustive enumeration over this function is a bitwise oracle for
    ``decode_viterbi``.
    """
    if len(fingers) != len(piece):
        raise ValueError("fingering length does not match the piece")
    if len(piece) == 0:
        raise EmptyPiece("cannot score an empty piece")
    if hand is None:
        hand = infer_hand(piece)
    midis = [n.midi for n in piece.notes]
    onsets = [n.onset for n in piece.notes]
    m = model.config.order
    steps = _step_tables(model, hand, midis, onsets, model.config.chord_constraint)
    acc = float(steps[0].trans[0][fingers[0] - 1])
    for n in range(1, len(steps)):
        step = steps[n]
        ctx = _flat_index(fingers[max(0, n - m) : n])
        acc = acc + step.trans[ctx, fingers[n] - 1]
        out = None
        for lag, mat in step.out_mats:
            term = mat[fingers[n - lag] - 1, fingers[n] - 1]
            out = term if out is None else out + term
        if out is not None:
            acc = acc + out
        if step.allowed is not None and not step.allowed[fingers[n - 1] - 1, fingers[n] - 1]:
            acc = NEG_INF
    return float(acc)


def decode_piece(model: NoteHmmModel, piece: Piece):
    """Decode both hands of a full piece.

    Returns (signed fingers aligned with piece.notes, {hand: DecodeResult}).
    """
    rh, lh = split_hands(piece)
    signed = [0] * len(piece)
    results = {}
    for hand, part in ((Hand.RH, rh), (Hand.LH, lh)):
        if len(part) == 0:
            continue
        res = decode_viterbi(model, part, hand=hand)
        results[hand] = res
        positions = [i for i, n in enumerate(piece.notes) if n.channel == hand.channel]
        for pos, digit in zip(positions, res.fingers):
            signed[pos] = FingerLabel(hand, digit).signed
    return signed, results


def sample_piece(
    model: NoteHmmModel,
    hand: Hand,
    n_notes: int,
    rng: np.random.Generator,
    start_midi: int = 60,
    onset_step: float = 0.5,
) -> Piece:
    """Draw an annotated monophonic piece from the generative model.

    Pitches are sampled from the lag-1 output factor only, so this is the
    exact generative process for order 1 and an approximation above.
    Implemented for the integral pitch representation.
    """
    cfg = model.config
    if cfg.pitch_representation is not PitchRepresentation.INTEGRAL:
        raise ValueError("sampling is implemented for the integral representation")
    digits = []
    for n in range(n_notes):
        if n < cfg.order:
            row = np.exp(model.log_initial[n][_flat_index(digits)])
        else:
            row = np.exp(model.log_transition[_flat_index(digits[-cfg.order :])])
        digits.append(int(rng.choice(N_DIGITS, p=row / row.sum())) + 1)
    midis = [start_midi]
    out = np.exp(model.log_output[hand][0])
    for n in range(1, n_notes):
        row = out[digits[n - 1] - 1, digits[n] - 1]
        dx = int(rng.choice(row.shape[0], p=row / row.sum())) - cfg.delta_p_max
        midi = midis[-1] + dx
        if not MIDI_MIN <= midi <= MIDI_MAX:
            midi = midis[-1] - dx
        midis.append(min(MIDI_MAX, max(MIDI_MIN, midi)))
    notes = tuple(
        Note(
            note_id=i,
            onset=round(i * onset_step, 6),
            offset=round(i * onset_step + 0.9 * onset_step, 6),
            pitch=midi_to_pitch(midi),
            midi=midi,
            onset_velocity=64,
            offset_velocity=64,
            channel=hand.channel,
            finger=FingerLabel(hand, digit),
        )
        for i, (midi, digit) in enumerate(zip(midis, digits))
    )
    return Piece(notes=notes, piece_id="sampled", annotator_id="model")
