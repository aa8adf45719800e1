"""Case-control construction and the six synthetic censoring scenarios.

Controls are sampled from dwelling locations with probability proportional to
the number of dwelling units and receive a uniformly random exact date.
Simulated cases are resampled from the controls, so their intensity is flat in
time and proportional to population in space. Censoring is then applied with a
probability that depends on the true weekday (scenarios 1-3) or the true week
(scenarios 4-6).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .calendar import STUDY_SPAN, CalendarSpan
from .domain import BoroughGraph, CensorWindow, DwellingSet, Observation, StudyDesign
from .errors import DomainError

# Weeks falling in the last quarter of each study year (1-based).
Q4_WEEKS = tuple(range(40, 53)) + tuple(range(92, 105))

_DOW_SCENARIOS = {
    1: (0.4,) * 7,
    2: (0.3,) * 4 + (0.5,) * 3,
    3: (0.2,) * 4 + (0.6,) * 3,
}
_WEEK_SCENARIOS = {4: (0.4, 0.4), 5: (0.5, 0.3), 6: (0.6, 0.2)}  # (in Q4, outside Q4)


@dataclass(frozen=True)
class ScenarioSpec:
    scenario_id: int
    n_cases: int = 3000
    censor_rate_exp_lambda: float = 0.2
    dow_probs: tuple[float, ...] | None = None
    week_probs: tuple[float, ...] | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if (self.dow_probs is None) == (self.week_probs is None):
            raise DomainError("exactly one of dow_probs / week_probs must be set")
        probs = self.dow_probs if self.dow_probs is not None else self.week_probs
        if self.dow_probs is not None and len(self.dow_probs) != 7:
            raise DomainError("dow_probs needs 7 entries (Mon..Sun)")
        if any(not 0.0 <= p <= 1.0 for p in probs):
            raise DomainError("censoring probabilities must lie in [0, 1]")
        if self.censor_rate_exp_lambda <= 0:
            raise DomainError("exponential rate must be positive")
        if self.n_cases < 0:
            raise DomainError("n_cases must be nonnegative")

    @classmethod
    def standard(cls, scenario_id: int, seed: int = 0, n_cases: int = 3000,
                 n_weeks: int = 104) -> "ScenarioSpec":
        if scenario_id in _DOW_SCENARIOS:
            return cls(scenario_id, n_cases, dow_probs=_DOW_SCENARIOS[scenario_id], seed=seed)
        if scenario_id in _WEEK_SCENARIOS:
            p_in, p_out = _WEEK_SCENARIOS[scenario_id]
            q4 = set(Q4_WEEKS)
            probs = tuple(p_in if w in q4 else p_out for w in range(1, n_weeks + 1))
            return cls(scenario_id, n_cases, week_probs=probs, seed=seed)
        raise DomainError(f"unknown scenario {scenario_id}; valid: {describe_scenarios()}")


def describe_scenarios() -> str:
    parts = [f"{k}: p_DoW(Mon..Sun)={list(v)}" for k, v in _DOW_SCENARIOS.items()]
    parts += [f"{k}: p_w={a} in weeks 40-52,92-104 else {b}" for k, (a, b) in _WEEK_SCENARIOS.items()]
    return "; ".join(parts)


@dataclass(frozen=True)
class ControlSpec:
    ratio: int = 5
    seed: int = 0

    def __post_init__(self) -> None:
        if self.ratio < 1:
            raise DomainError("control ratio must be >= 1")


def round_half_up(x):
    """Round half away from zero for nonnegative input."""
    return np.floor(np.asarray(x) + 0.5).astype(np.int64)


def synthetic_city(seed: int = 0, nrow: int = 7, ncol: int = 10, n_locations: int = 28682,
                   mean_units: float = 382539 / 28682,
                   cell_size: float = 1000.0) -> tuple[DwellingSet, BoroughGraph]:
    """A lattice of boroughs with random dwelling locations.

    Stand-in for a real dwelling register: borough populations vary through a
    Dirichlet share of the locations, and units per location are geometric.
    """
    rng = np.random.default_rng(seed)
    B = nrow * ncol
    share = rng.dirichlet(np.full(B, 2.0))
    counts = rng.multinomial(n_locations, share)
    borough = np.repeat(np.arange(1, B + 1), counts)
    row, col = np.divmod(borough - 1, ncol)
    x = (col + rng.random(n_locations)) * cell_size
    y = (row + rng.random(n_locations)) * cell_size
    units = rng.geometric(1.0 / mean_units, size=n_locations)
    return DwellingSet(x, y, borough, units), BoroughGraph.grid(nrow, ncol)


def sample_controls(dwellings: DwellingSet, n_cases: int, spec: ControlSpec,
                    span: CalendarSpan = STUDY_SPAN) -> list[Observation]:
    if len(dwellings) == 0:
        raise DomainError("cannot sample controls from an empty dwelling set")
    rng = np.random.default_rng(spec.seed)
    n = spec.ratio * n_cases
    p = dwellings.n_units / dwellings.n_units.sum()
    loc = rng.choice(len(dwellings), size=n, replace=True, p=p)
    days = rng.integers(1, span.n_days + 1, size=n)
    return [
        Observation(f"c{k + 1:06d}", float(dwellings.x[i]), float(dwellings.y[i]),
                    int(dwellings.borough[i]), CensorWindow.exact_at(int(d)), 0)
        for k, (i, d) in enumerate(zip(loc, days))
    ]


def simulate_flat_cases(controls: Sequence[Observation], n_cases: int, seed: int) -> list[Observation]:
    if not controls:
        raise DomainError("cannot resample cases from an empty control list")
    rng = np.random.default_rng(seed)
    pick = rng.integers(0, len(controls), size=n_cases)
    return [replace(controls[i], id=f"e{k + 1:06d}", label=1) for k, i in enumerate(pick)]


def apply_censoring(cases: Sequence[Observation], spec: ScenarioSpec,
                    span: CalendarSpan = STUDY_SPAN) -> tuple[list[Observation], dict[str, int]]:
    """Widen windows of a random subset of exact cases.

    Returns the new observations and the true day of every censored case.
    Half-widths are ``round(u + 1)`` with ``u ~ Exp(rate)``; windows are
    clipped to the study span.
    """
    if any(o.censored for o in cases):
        raise DomainError("apply_censoring expects exact cases")
    rng = np.random.default_rng(spec.seed)
    n = len(cases)
    coin = rng.random(n)
    u = rng.exponential(1.0 / spec.censor_rate_exp_lambda, size=n)
    half = round_half_up(u + 1.0)
    dow_lut, week_lut = span.day_lookup()
    days = np.array([o.window.t_from for o in cases], dtype=np.int64)
    if spec.dow_probs is not None:
        p = np.asarray(spec.dow_probs)[dow_lut[days]] if n else np.empty(0)
    else:
        if len(spec.week_probs) != span.n_weeks:
            raise DomainError(f"week_probs needs {span.n_weeks} entries")
        p = np.asarray(spec.week_probs)[week_lut[days]] if n else np.empty(0)
    hit = coin < p
    out, truth = [], {}
    for k, o in enumerate(cases):
        if hit[k]:
            t = int(days[k])
            w = CensorWindow(max(1, t - int(half[k])), min(span.n_days, t + int(half[k])))
            out.append(replace(o, window=w))
            truth[o.id] = t
        else:
            out.append(o)
    return out, truth


def complete_cases_filter(design: StudyDesign) -> StudyDesign:
    """Drop every case whose date is not known exactly; controls are kept."""
    keep = [o for o in design.observations if not (o.label == 1 and o.censored)]
    return design.replace_observations(keep)


@dataclass(frozen=True)
class SimulatedStudy:
    design: StudyDesign
    truth: dict[str, int]
    spec: ScenarioSpec
    dwellings: DwellingSet


def simulate_scenario(scenario_id: int, seed: int, n_cases: int = 3000, reference_cases: int = 2626,
                      ratio: int = 5, span: CalendarSpan = STUDY_SPAN,
                      dwellings: DwellingSet | None = None,
                      graph: BoroughGraph | None = None) -> SimulatedStudy:
    """End-to-end synthetic dataset for one scenario.

    ``ratio * reference_cases`` controls are drawn (13130 with the defaults) and
    ``n_cases`` flat cases are resampled from them before censoring. Sub-seeds
    for each stage derive from ``seed``.
    """
    city_seed, ctrl_seed, case_seed, cens_seed = np.random.SeedSequence(seed).generate_state(4)
    if dwellings is None or graph is None:
        dwellings, graph = synthetic_city(int(city_seed))
    controls = sample_controls(dwellings, reference_cases, ControlSpec(ratio, int(ctrl_seed)), span)
    cases = simulate_flat_cases(controls, n_cases, int(case_seed))
    spec = ScenarioSpec.standard(scenario_id, int(cens_seed), n_cases, span.n_weeks)
    cases, truth = apply_censoring(cases, spec, span)
    design = StudyDesign(tuple(cases) + tuple(controls), graph, span)
    return SimulatedStudy(design, truth, spec, dwellings)


def expected_censored_fraction(spec: ScenarioSpec) -> float:
    """Censoring probability averaged over uniformly distributed true dates."""
    probs = spec.dow_probs if spec.dow_probs is not None else spec.week_probs
    return math.fsum(probs) / len(probs)
