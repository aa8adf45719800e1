"""Log-posterior of the spatio-temporal case-control logistic model.

    logit(pi_i) = alpha + beta[dow(t_i)] + delta[week(t_i)] + eps[week(t_i)]
                  + u[borough_i] + v[borough_i]

Monday is the reference weekday (beta_Mon = 0). ``delta`` carries a
second-order random walk prior, ``eps`` and ``v`` are iid Gaussian, and ``u``
is an intrinsic CAR field on the borough graph. The four precisions have Gamma
priors. Improper normalising constants of the intrinsic fields are dropped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import expit, gammaln

from .calendar import DOW_NAMES, CalendarSpan
from .domain import BoroughGraph, Observation, StudyDesign
from .errors import DomainError

PRECISIONS = ("tau_delta", "tau_epsilon", "tau_u", "tau_v")


@dataclass(frozen=True)
class PriorSpec:
    fixed_effect_variance: float = 1000.0
    gamma_delta: tuple[float, float] = (1.0, 0.5)  # (shape, rate)
    gamma_epsilon: tuple[float, float] = (1.0, 0.5)
    gamma_u: tuple[float, float] = (1.0, 0.01)
    gamma_v: tuple[float, float] = (1.0, 0.01)

    def __post_init__(self) -> None:
        if self.fixed_effect_variance <= 0:
            raise DomainError("fixed_effect_variance must be positive")
        for name in ("gamma_delta", "gamma_epsilon", "gamma_u", "gamma_v"):
            a, b = getattr(self, name)
            if a <= 0 or b <= 0:
                raise DomainError(f"{name} needs positive shape and rate")

    def gamma(self, tau_name: str) -> tuple[float, float]:
        return getattr(self, "gamma_" + tau_name.removeprefix("tau_"))


@dataclass
class ModelState:
    alpha: float
    beta: np.ndarray  # Tue..Sun
    delta: np.ndarray
    epsilon: np.ndarray
    u: np.ndarray
    v: np.ndarray
    tau_delta: float
    tau_epsilon: float
    tau_u: float
    tau_v: float
    latent_dates: dict[str, int] = field(default_factory=dict)

    @classmethod
    def zeros(cls, n_weeks: int, n_boroughs: int, **kw) -> "ModelState":
        base = dict(alpha=0.0, beta=np.zeros(6), delta=np.zeros(n_weeks), epsilon=np.zeros(n_weeks),
                    u=np.zeros(n_boroughs), v=np.zeros(n_boroughs),
                    tau_delta=1.0, tau_epsilon=1.0, tau_u=1.0, tau_v=1.0)
        base.update(kw)
        for k in ("beta", "delta", "epsilon", "u", "v"):
            base[k] = np.asarray(base[k], dtype=float)
        return cls(**base)

    @property
    def beta_full(self) -> np.ndarray:
        """Weekday effects Mon..Sun with the Monday reference at 0."""
        return np.concatenate(([0.0], self.beta))

    def copy(self) -> "ModelState":
        return replace(self, beta=self.beta.copy(), delta=self.delta.copy(), epsilon=self.epsilon.copy(),
                       u=self.u.copy(), v=self.v.copy(), latent_dates=dict(self.latent_dates))


def param_names(n_weeks: int, n_boroughs: int) -> list[str]:
    return (["alpha"] + [f"beta_{d}" for d in DOW_NAMES[1:]]
            + [f"delta[{w}]" for w in range(1, n_weeks + 1)]
            + [f"epsilon[{w}]" for w in range(1, n_weeks + 1)]
            + [f"u[{b}]" for b in range(1, n_boroughs + 1)]
            + [f"v[{b}]" for b in range(1, n_boroughs + 1)]
            + list(PRECISIONS))


def state_vector(state: ModelState) -> np.ndarray:
    return np.concatenate(([state.alpha], state.beta, state.delta, state.epsilon, state.u, state.v,
                           [state.tau_delta, state.tau_epsilon, state.tau_u, state.tau_v]))


def state_from_vector(vec: np.ndarray, n_weeks: int, n_boroughs: int,
                      latent_dates: dict[str, int] | None = None) -> ModelState:
    W, B = n_weeks, n_boroughs
    cuts = np.cumsum([1, 6, W, W, B, B])
    a, beta, delta, eps, u, v, taus = np.split(np.asarray(vec, dtype=float), cuts)
    return ModelState(float(a[0]), beta, delta, eps, u, v, *map(float, taus),
                      latent_dates=dict(latent_dates or {}))


def softplus(x):
    """log(1 + exp(x)) without overflow."""
    return np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))


def log_bernoulli(y, eta):
    """Bernoulli log-mass with logit ``eta`` for 0/1 ``y``; stable for large |eta|."""
    # y*eta - softplus(eta) == -softplus((1 - 2y) * eta) without the cancellation
    return -softplus((1 - 2 * np.asarray(y)) * eta)


def rw2_penalty(delta: np.ndarray) -> float:
    d2 = delta[2:] - 2.0 * delta[1:-1] + delta[:-2]
    return float(d2 @ d2)


def icar_penalty(u: np.ndarray, graph: BoroughGraph) -> float:
    e = graph.edge_array
    diff = u[e[:, 0]] - u[e[:, 1]]
    return float(diff @ diff)


def rw2_structure(n_weeks: int) -> np.ndarray:
    """D'D for the second-difference operator D ((W-2) x W)."""
    D = np.zeros((max(n_weeks - 2, 0), n_weeks))
    for k in range(n_weeks - 2):
        D[k, k:k + 3] = (1.0, -2.0, 1.0)
    return D.T @ D


def icar_structure(graph: BoroughGraph) -> np.ndarray:
    return np.diag(graph.neighbor_counts.astype(float)) - graph.adjacency


def _gamma_logpdf(x: float, shape: float, rate: float) -> float:
    return shape * math.log(rate) - gammaln(shape) + (shape - 1.0) * math.log(x) - rate * x


def _normal_iid_logpdf(x: np.ndarray, tau: float) -> float:
    return 0.5 * len(x) * (math.log(tau) - math.log(2 * math.pi)) - 0.5 * tau * float(x @ x)


def linear_predictor(obs: Observation, day: int, state: ModelState, span: CalendarSpan) -> float:
    span.check(day)
    if not 1 <= obs.borough <= len(state.u):
        raise DomainError(f"borough {obs.borough} outside [1, {len(state.u)}]")
    dow_lut, week_lut = span.day_lookup()
    w, b = week_lut[day], obs.borough - 1
    return (state.alpha + state.beta_full[dow_lut[day]] + state.delta[w] + state.epsilon[w]
            + state.u[b] + state.v[b])


def observation_days(design: StudyDesign, state: ModelState) -> np.ndarray:
    """Exact day of every observation, taking latent dates for censored cases."""
    a = design.arrays
    days = a.t_from.copy()
    for k in np.flatnonzero(a.censored):
        oid = design.observations[k].id
        try:
            days[k] = state.latent_dates[oid]
        except KeyError:
            raise DomainError(f"no latent date for censored observation {oid!r}") from None
        if not a.t_from[k] <= days[k] <= a.t_to[k]:
            raise DomainError(f"latent date {days[k]} for {oid!r} outside its window")
    return days


def eta_vector(design: StudyDesign, state: ModelState, days: np.ndarray | None = None) -> np.ndarray:
    if days is None:
        days = observation_days(design, state)
    dow_lut, week_lut = design.span.day_lookup()
    a = design.arrays
    wk = week_lut[days]
    return (state.alpha + state.beta_full[dow_lut[days]] + state.delta[wk] + state.epsilon[wk]
            + state.u[a.borough] + state.v[a.borough])


def log_likelihood(design: StudyDesign, state: ModelState) -> float:
    if len(design) == 0:
        return 0.0
    eta = eta_vector(design, state)
    return float(np.sum(log_bernoulli(design.arrays.y, eta)))


def _check_precisions(state: ModelState) -> None:
    for name in PRECISIONS:
        if not getattr(state, name) > 0:
            raise DomainError(f"{name} must be positive, got {getattr(state, name)}")


def log_prior(state: ModelState, graph: BoroughGraph, priors: PriorSpec = PriorSpec()) -> float:
    _check_precisions(state)
    W, B = len(state.delta), len(state.u)
    V = priors.fixed_effect_variance
    fixed = np.concatenate(([state.alpha], state.beta))
    lp = -0.5 * len(fixed) * math.log(2 * math.pi * V) - 0.5 * float(fixed @ fixed) / V
    lp += 0.5 * (W - 2) * math.log(state.tau_delta) - 0.5 * state.tau_delta * rw2_penalty(state.delta)
    lp += 0.5 * (B - 1) * math.log(state.tau_u) - 0.5 * state.tau_u * icar_penalty(state.u, graph)
    lp += _normal_iid_logpdf(state.epsilon, state.tau_epsilon)
    lp += _normal_iid_logpdf(state.v, state.tau_v)
    for name in PRECISIONS:
        lp += _gamma_logpdf(getattr(state, name), *priors.gamma(name))
    return float(lp)


def log_posterior(design: StudyDesign, state: ModelState, priors: PriorSpec = PriorSpec()) -> float:
    """Unnormalised log-posterior; the uniform latent-date prior is a constant and omitted."""
    return log_likelihood(design, state) + log_prior(state, design.graph, priors)


def grad_log_posterior(design: StudyDesign, state: ModelState, priors: PriorSpec = PriorSpec()) -> np.ndarray:
    """Gradient in the layout of :func:`state_vector` (latent dates held fixed)."""
    _check_precisions(state)
    W, B = len(state.delta), len(state.u)
    V = priors.fixed_effect_variance
    g = np.zeros(1 + 6 + 2 * W + 2 * B + 4)
    if len(design):
        days = observation_days(design, state)
        dow_lut, week_lut = design.span.day_lookup()
        a = design.arrays
        r = a.y - expit(eta_vector(design, state, days))
        g[0] = r.sum()
        g[1:7] = np.bincount(dow_lut[days], r, minlength=7)[1:]
        wk = np.bincount(week_lut[days], r, minlength=W)
        bb = np.bincount(a.borough, r, minlength=B)
        g[7:7 + W] = wk
        g[7 + W:7 + 2 * W] = wk
        g[7 + 2 * W:7 + 2 * W + B] = bb
        g[7 + 2 * W + B:7 + 2 * W + 2 * B] = bb
    g[0] -= state.alpha / V
    g[1:7] -= state.beta / V
    g[7:7 + W] -= state.tau_delta * (rw2_structure(W) @ state.delta)
    g[7 + W:7 + 2 * W] -= state.tau_epsilon * state.epsilon
    g[7 + 2 * W:7 + 2 * W + B] -= state.tau_u * (icar_structure(design.graph) @ state.u)
    g[7 + 2 * W + B:7 + 2 * W + 2 * B] -= state.tau_v * state.v
    quad = {"tau_delta": (W - 2, rw2_penalty(state.delta)),
            "tau_epsilon": (W, float(state.epsilon @ state.epsilon)),
            "tau_u": (B - 1, icar_penalty(state.u, design.graph)),
            "tau_v": (B, float(state.v @ state.v))}
    for k, name in enumerate(PRECISIONS):
        tau = getattr(state, name)
        rank, s = quad[name]
        shape, rate = priors.gamma(name)
        g[-4 + k] = 0.5 * rank / tau - 0.5 * s + (shape - 1.0) / tau - rate
    return g
