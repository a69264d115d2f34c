"""Coefficient tuning, training-size scaling, and the asymptotic fit.

Tuning is a derivative-free box search: a seeded random-search stage
(warm-started from the base configuration) followed by coordinate-descent
refinement around the incumbent, with every candidate evaluated by
training a model and scoring decoded fingerings on a validation set.
The scaling experiment retrains on random piece subsets of growing size;
its match-rate curve is summarised by the two-parameter law
A(N) = a - b / sqrt(N), whose intercept ``a`` extrapolates to unlimited
training data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import chord_hmm, note_hmm
from .errors import DegenerateFit, EmptyCorpus, HandOverflow
from .estimate import estimate_piece
from .eval_measures import match_rate_report
from .pig_io import split_hands


def fit_sqrt(points) -> tuple:
    """Least squares for A(N) = a - b / sqrt(N); returns (a, b).

    ``points`` are (N, value) pairs with positive N; at least two
    distinct N are required.
    """
    points = list(points)
    if len(points) < 2:
        raise DegenerateFit("need at least two points")
    ns = np.array([float(n) for n, _ in points])
    ys = np.array([float(y) for _, y in points])
    if np.any(ns <= 0):
        raise DegenerateFit("sample sizes must be positive")
    if np.unique(ns).size < 2:
        raise DegenerateFit("need at least two distinct sample sizes")
    design = np.column_stack([np.ones_like(ns), 1.0 / np.sqrt(ns)])
    coef, *_ = np.linalg.lstsq(design, ys, rcond=None)
    return float(coef[0]), float(-coef[1])


@dataclass(frozen=True)
class ScalingFit:
    """Fitted asymptotic law over scaling points."""

    points: tuple            # (N, match rate)
    a: float
    b: float
    residual_norm: float
    b_negative: bool         # flagged, not rejected: curve was not increasing

    @classmethod
    def from_points(cls, points) -> "ScalingFit":
        points = tuple((float(n), float(y)) for n, y in points)
        a, b = fit_sqrt(points)
        residual = math.sqrt(
            sum((y - (a - b / math.sqrt(n))) ** 2 for n, y in points)
        )
        return cls(points=points, a=a, b=b, residual_norm=residual, b_negative=b < 0)


# --- shared evaluation ----------------------------------------------------

def hand_parts(pieces) -> list:
    """Non-empty single-hand parts of whole pieces."""
    parts = []
    for piece in pieces:
        for part in split_hands(piece):
            if len(part):
                parts.append(part)
    return parts


def train_model(model_kind: str, config, train_pieces):
    """Train either model kind on whole pieces (hands split internally)."""
    parts = hand_parts(train_pieces)
    if model_kind == "note-hmm":
        return note_hmm.train(parts, config)
    if model_kind == "chord-hmm":
        return chord_hmm.train_chord(parts, config)
    raise ValueError(f"unknown model kind {model_kind!r}")


def evaluate_model(model, gt_sets, measure: str = "m_gen") -> float:
    """Macro average of one match-rate measure over ground-truth sets.

    Pieces a chord model cannot decode (hand overflow) are excluded.
    """
    values = []
    for gt_set in gt_sets:
        try:
            signed, _ = estimate_piece(model, gt_set.piece)
        except HandOverflow:
            continue
        report = match_rate_report(signed, gt_set.signed_fingerings)
        values.append(getattr(report, measure))
    if not values:
        raise EmptyCorpus("no piece could be evaluated")
    return sum(values) / len(values)


# --- coefficient tuning ---------------------------------------------------

@dataclass(frozen=True)
class TuningSpec:
    """Search box and objective of a tuning run.

    ``bounds`` maps coefficient names (``alpha1``.., ``lambda1``..,
    ``beta1``, ``beta2``, ``gamma1``, ``gamma2``, ``zeta``) to (low,
    high); ``budget`` is the total number of model evaluations, split
    between random search and coordinate refinement.
    """

    bounds: dict
    objective: str = "m_gen"
    budget: int = 200
    random_fraction: float = 0.7

    def __post_init__(self):
        if self.budget < 1:
            raise ValueError("budget must be at least 1")
        if not self.bounds:
            raise ValueError("bounds must name at least one coefficient")
        for name, (lo, hi) in self.bounds.items():
            if not (math.isfinite(lo) and math.isfinite(hi) and lo <= hi):
                raise ValueError(f"bad bounds for {name}: ({lo}, {hi})")


@dataclass(frozen=True)
class TuneResult:
    best_params: dict
    best_objective: float
    best_index: int
    trace: tuple             # (index, params, objective)


def _param_value(config, name: str) -> float:
    if name.startswith("alpha"):
        return config.alpha[int(name[5:]) - 1]
    if name.startswith("lambda"):
        return config.lambda_[int(name[6:]) - 1]
    return getattr(config, name)


def apply_params(config, params: dict):
    """New config with the named coefficients replaced.

    For note models the lambda vector is projected back onto the
    sum <= 1 simplex by scaling when a candidate overshoots.
    """
    if isinstance(config, note_hmm.NoteHmmConfig):
        alpha = list(config.alpha)
        lam = list(config.lambda_)
        for name, value in params.items():
            if name.startswith("alpha"):
                alpha[int(name[5:]) - 1] = float(value)
            elif name.startswith("lambda"):
                lam[int(name[6:]) - 1] = float(value)
            else:
                raise ValueError(f"unknown note-model coefficient {name!r}")
        total = sum(lam)
        if total > 1.0:
            lam = [v / total for v in lam]
        return replace(config, alpha=tuple(alpha), lambda_=tuple(lam))
    return replace(config, **{k: float(v) for k, v in params.items()})


def tune(
    spec: TuningSpec,
    train_pieces,
    valid_sets,
    model_kind: str = "note-hmm",
    base_config=None,
    seed: int = 0,
) -> TuneResult:
    """Derivative-free search of the coefficient box.

    Spends ``random_fraction`` of the budget on seeded random candidates
    (the first candidate is the base configuration clipped into the box,
    so the result never scores below the shipped defaults) and the rest
    on coordinate-descent refinement.  Objective ties keep the earliest
    candidate.
    """
    train_pieces = list(train_pieces)
    valid_sets = list(valid_sets)
    if not train_pieces or not valid_sets:
        raise EmptyCorpus("tuning needs non-empty train and validation data")
    if base_config is None:
        base_config = (
            note_hmm.NoteHmmConfig()
            if model_kind == "note-hmm"
            else chord_hmm.ChordHmmParams()
        )
    rng = np.random.default_rng(seed)
    names = sorted(spec.bounds)
    trace = []
    state = {"best": None}  # (objective, index, params)

    def evaluate(params: dict) -> float:
        config = apply_params(base_config, params)
        model = train_model(model_kind, config, train_pieces)
        value = evaluate_model(model, valid_sets, spec.objective)
        index = len(trace)
        trace.append((index, dict(params), value))
        if state["best"] is None or value > state["best"][0]:
            state["best"] = (value, index, dict(params))
        return value

    def clip(name, value):
        lo, hi = spec.bounds[name]
        return min(hi, max(lo, value))

    n_random = min(spec.budget, max(1, round(spec.budget * spec.random_fraction)))
    warm = {name: clip(name, _param_value(base_config, name)) for name in names}
    evaluate(warm)
    while len(trace) < n_random:
        evaluate(
            {
                name: spec.bounds[name][0]
                + rng.random() * (spec.bounds[name][1] - spec.bounds[name][0])
                for name in names
            }
        )

    scale = 0.25
    while len(trace) < spec.budget:
        evaluations_before = len(trace)
        improved = False
        for name in names:
            if len(trace) >= spec.budget:
                break
            lo, hi = spec.bounds[name]
            step = scale * (hi - lo)
            current = state["best"][2]
            for direction in (1.0, -1.0):
                if len(trace) >= spec.budget:
                    break
                candidate = dict(current)
                candidate[name] = clip(name, current.get(name, warm[name]) + direction * step)
                if candidate == current:
                    continue
                before = state["best"][0]
                if evaluate(candidate) > before:
                    improved = True
                    break
        if not improved:
            scale /= 2.0
        if len(trace) == evaluations_before:
            break  # every proposal clipped onto the incumbent

    value, index, params = state["best"]
    return TuneResult(
        best_params=params, best_objective=value, best_index=index, trace=tuple(trace)
    )


# --- training-size scaling ------------------------------------------------

@dataclass(frozen=True)
class ScalingPoint:
    fraction: float
    n_pieces: int
    mean_notes: float
    mean_match_rate: float
    std_match_rate: float
    repeats: int


def scaling_experiment(
    train_pieces,
    test_sets,
    fractions,
    repeats: int,
    model_kind: str = "note-hmm",
    config=None,
    seed: int = 0,
    measure: str = "m_gen",
) -> list:
    """Match rate as a function of training-set size.

    For each fraction, ``repeats`` random piece subsets are drawn, a
    model is trained on each and scored on the test sets; the point
    records the mean subset note count and the mean and spread of the
    measure.  Fraction 1.0 is deterministic and evaluated once.  Fixed
    seeds reproduce bit-identical results.
    """
    train_pieces = list(train_pieces)
    test_sets = list(test_sets)
    if not train_pieces or not test_sets:
        raise EmptyCorpus("scaling needs non-empty train and test data")
    if repeats < 1:
        raise ValueError("repeats must be at least 1")
    if config is None:
        config = (
            note_hmm.NoteHmmConfig()
            if model_kind == "note-hmm"
            else chord_hmm.ChordHmmParams()
        )
    for fraction in fractions:
        if not 0.0 < fraction <= 1.0:
            raise ValueError(f"fraction {fraction} outside (0, 1]")
    rng = np.random.default_rng(seed)
    n_total = len(train_pieces)
    points = []
    for fraction in fractions:
        n_pieces = max(1, round(fraction * n_total))
        reps = 1 if n_pieces == n_total else repeats
        rates, note_counts = [], []
        for _ in range(reps):
            chosen = sorted(rng.choice(n_total, size=n_pieces, replace=False))
            subset = [train_pieces[i] for i in chosen]
            model = train_model(model_kind, config, subset)
            rates.append(evaluate_model(model, test_sets, measure))
            note_counts.append(sum(len(p) for p in subset))
        mean_rate = sum(rates) / len(rates)
        std = math.sqrt(sum((r - mean_rate) ** 2 for r in rates) / len(rates))
        points.append(
            ScalingPoint(
                fraction=fraction,
                n_pieces=n_pieces,
                mean_notes=sum(note_counts) / len(note_counts),
                mean_match_rate=mean_rate,
                std_match_rate=std,
                repeats=reps,
            )
        )
    return points


def _meta_line(meta: dict | None) -> list:
    if not meta:
        return []
    rendered = " ".join(f"{k}={meta[k]}" for k in sorted(meta))
    return [f"# {rendered}"]


def format_scaling_table(points, fit: ScalingFit | None = None, meta: dict | None = None) -> str:
    lines = _meta_line(meta)
    lines.append("fraction\tn_pieces\tmean_notes\tmean_match_rate\tstd\trepeats")
    for p in points:
        lines.append(
            f"{p.fraction!r}\t{p.n_pieces}\t{p.mean_notes!r}\t"
            f"{p.mean_match_rate!r}\t{p.std_match_rate!r}\t{p.repeats}"
        )
    if fit is not None:
        lines.append(
            f"# fit: a={fit.a!r} b={fit.b!r} residual={fit.residual_norm!r}"
        )
    return "".join(line + "\n" for line in lines)


def format_tuning_trace(result: TuneResult, meta: dict | None = None) -> str:
    lines = _meta_line(meta)
    lines.append("index\tobjective\tparams")
    for index, params, value in result.trace:
        rendered = " ".join(f"{k}={params[k]!r}" for k in sorted(params))
        lines.append(f"{index}\t{value!r}\t{rendered}")
    lines.append(
        f"# best: index={result.best_index} objective={result.best_objective!r}"
    )
    return "".join(line + "\n" for line in lines)
