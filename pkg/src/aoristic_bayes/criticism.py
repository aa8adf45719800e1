"""In-sample classification quality and fitted-probability comparisons."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np
from scipy.special import expit

from .domain import StudyDesign
from .errors import DomainError
from .sampler import PosteriorSamples

DEFAULT_CUTOFFS = (0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35)


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class MetricDistribution:
    metric: str
    cutoff: float
    samples: np.ndarray  # sorted
    q025: float
    q975: float

    @property
    def mean(self) -> float:
        return float(self.samples.mean())


def _check_cutoff(c: float) -> None:
    if not 0.0 < c < 1.0:
        raise DomainError(f"cutoff must lie in (0, 1), got {c}")


def confusion(labels: Sequence[int], probs: Sequence[float], c: float) -> ConfusionMatrix:
    """Classify ``probs > c`` as positive (``probs <= c`` is negative)."""
    _check_cutoff(c)
    y = np.asarray(labels)
    p = np.asarray(probs, dtype=float)
    if y.shape != p.shape:
        raise DomainError("labels and probs differ in length")
    pos = p > c
    case = y == 1
    tp = int(np.count_nonzero(pos & case))
    fp = int(np.count_nonzero(pos & ~case))
    fn = int(np.count_nonzero(~pos & case))
    return ConfusionMatrix(tp, fp, fn, len(y) - tp - fp - fn)


def mcc(m: ConfusionMatrix) -> float:
    """Matthews correlation coefficient; 0 when any marginal is empty."""
    tp, fp, fn, tn = int(m.tp), int(m.fp), int(m.fn), int(m.tn)
    den = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)  # exact integer
    if den == 0:
        return 0.0
    return (tp * tn - fp * fn) / math.sqrt(den)


def f1(m: ConfusionMatrix) -> float:
    den = 2 * m.tp + m.fp + m.fn
    return 2 * m.tp / den if den else 0.0


METRICS = {"mcc": mcc, "f1": f1}


def pi_draws(samples: PosteriorSamples, design: StudyDesign) -> Iterator[np.ndarray]:
    """Per-draw success probabilities of every observation, chain by chain.

    Censored cases use the latent date sampled in the same draw.
    """
    a = design.arrays
    if samples.n_weeks != design.span.n_weeks or samples.n_boroughs != design.graph.n_boroughs:
        raise DomainError("samples do not match the design's calendar or borough graph")
    dow_lut, week_lut = design.span.day_lookup()
    cens_pos = np.array([design.position(i) for i in samples.censored_ids], dtype=np.int64)
    if len(cens_pos) != int(a.censored.sum()):
        raise DomainError("design censored cases differ from the fitted ones")
    W, B = samples.n_weeks, samples.n_boroughs
    days = a.t_from.copy()
    for c in range(samples.n_chains):
        for s in range(samples.n_draws):
            vec = samples.values[c, s]
            if len(cens_pos):
                days[cens_pos] = samples.latent[c, s]
            beta = np.concatenate(([0.0], vec[1:7]))
            delta, eps = vec[7:7 + W], vec[7 + W:7 + 2 * W]
            u, v = vec[7 + 2 * W:7 + 2 * W + B], vec[7 + 2 * W + B:7 + 2 * W + 2 * B]
            wk = week_lut[days]
            yield expit(vec[0] + beta[dow_lut[days]] + delta[wk] + eps[wk] + u[a.borough] + v[a.borough])


def pi_matrix(samples: PosteriorSamples, design: StudyDesign) -> np.ndarray:
    """Dense ``(n_draws_total, n_obs)`` matrix of fitted probabilities (small runs only)."""
    return np.array(list(pi_draws(samples, design)))


def pi_hat(samples: PosteriorSamples, design: StudyDesign) -> np.ndarray:
    """Posterior mean of each observation's success probability."""
    total = np.zeros(len(design))
    k = 0
    for pi in pi_draws(samples, design):
        total += pi
        k += 1
    if k == 0:
        raise DomainError("no posterior draws")
    return total / k


def metric_posterior(samples: PosteriorSamples, design: StudyDesign,
                     cutoffs: Sequence[float] = DEFAULT_CUTOFFS, metric: str = "mcc",
                     dense: bool = False) -> list[MetricDistribution]:
    """Posterior distribution of a classification metric at each cutoff.

    Every draw's probabilities classify all observations; the metric of the
    resulting confusion matrix is one sample. ``dense`` materialises the full
    probability matrix first, which is faster for small fits.
    """
    if metric not in METRICS:
        raise DomainError(f"metric must be one of {sorted(METRICS)}")
    for c in cutoffs:
        _check_cutoff(c)
    if samples.n_chains * samples.n_draws == 0:
        raise DomainError("no posterior draws")
    fn = METRICS[metric]
    y = design.arrays.y
    draws = pi_matrix(samples, design) if dense else pi_draws(samples, design)
    values = [[] for _ in cutoffs]
    for pi in draws:
        for k, c in enumerate(cutoffs):
            values[k].append(fn(confusion(y, pi, c)))
    out = []
    for c, vals in zip(cutoffs, values):
        arr = np.sort(np.array(vals))
        lo, hi = np.quantile(arr, [0.025, 0.975])
        out.append(MetricDistribution(metric, float(c), arr, float(lo), float(hi)))
    return out


@dataclass(frozen=True)
class GroupSummary:
    label: str
    n: int
    quantiles: dict[float, float]
    hist: np.ndarray  # counts over HIST_EDGES


HIST_EDGES = np.linspace(0.0, 1.0, 51)
_QS = (0.025, 0.25, 0.5, 0.75, 0.975)


def _group(label: str, values: np.ndarray) -> GroupSummary:
    qs = dict(zip(_QS, np.quantile(values, _QS).tolist())) if len(values) else {q: float("nan") for q in _QS}
    return GroupSummary(label, len(values), qs, np.histogram(values, HIST_EDGES)[0])


def pi_hat_split(samples: PosteriorSamples, design: StudyDesign, split: str = "case_vs_control",
                 pi: np.ndarray | None = None) -> tuple[GroupSummary, GroupSummary]:
    """Summaries of posterior-mean probabilities for two groups of observations.

    ``case_vs_control`` compares cases with controls; ``certain_vs_uncertain``
    compares exact-date cases with censored cases.
    """
    if split not in ("case_vs_control", "certain_vs_uncertain"):
        raise DomainError(f"unknown split {split!r}")
    if pi is None:
        pi = pi_hat(samples, design)
    a = design.arrays
    if split == "case_vs_control":
        return _group("case", pi[a.y == 1]), _group("control", pi[a.y == 0])
    cases = a.y == 1
    return _group("certain", pi[cases & ~a.censored]), _group("uncertain", pi[cases & a.censored])
