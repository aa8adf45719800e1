"""Metropolis-within-Gibbs sampler with exact discrete updates of latent dates.

One iteration visits, in order: latent dates of censored cases (exact draw from
the discrete full conditional over the window), the fixed effects, the
structured week effect, the unstructured week effect, the structured and
unstructured borough effects, and finally the four precisions (conjugate Gamma
draws).

Each Gaussian block gets a single-site adaptive random-walk sweep. Components
whose full conditionals do not interact (disjoint observations, no shared prior
term) are proposed together and accepted independently, which is the same
kernel as visiting them one at a time. The stiff blocks (fixed effects,
``delta``, ``u``) additionally get an IWLS Gaussian block proposal so smooth
modes move in one step.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, Mapping

import numpy as np
from scipy.special import expit
from scipy.linalg import cho_solve, cholesky, solve_triangular

from . import model as M
from .diagnostics import ess, split_rhat
from .domain import Observation, StudyDesign, validate
from .errors import DomainError, ValidationError
from .model import ModelState, PriorSpec
from .studygen import complete_cases_filter

log = logging.getLogger(__name__)

BLOCKS = ("alpha", "beta", "delta", "epsilon", "u", "v")
DEFAULT_STEPS = {"alpha": 0.05, "beta": 0.1, "delta": 0.05, "epsilon": 0.05, "u": 0.1, "v": 0.1}
MODES = ("full", "complete-cases")


@dataclass(frozen=True)
class SamplerConfig:
    n_chains: int = 4
    n_iterations: int = 50_000
    n_burnin: int = 10_000
    thin: int = 10
    seed: int = 0
    rw_step_sizes: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_STEPS))
    adapt_target: float = 0.44
    block_moves: bool = True
    n_jobs: int = 1

    def __post_init__(self) -> None:
        if self.n_chains < 1:
            raise DomainError("n_chains must be >= 1")
        if not 0 <= self.n_burnin < self.n_iterations:
            raise DomainError("need 0 <= n_burnin < n_iterations")
        if self.thin < 1:
            raise DomainError("thin must be >= 1")
        if not 0 < self.adapt_target < 1:
            raise DomainError("adapt_target must lie in (0, 1)")
        unknown = set(self.rw_step_sizes) - set(BLOCKS)
        if unknown:
            raise DomainError(f"unknown step-size blocks {sorted(unknown)}")
        if any(s < 0 for s in self.rw_step_sizes.values()):
            raise DomainError("random-walk step sizes must be nonnegative")

    @property
    def n_draws(self) -> int:
        return (self.n_iterations - self.n_burnin) // self.thin

    def step(self, block: str) -> float:
        return float(self.rw_step_sizes.get(block, DEFAULT_STEPS[block]))


@dataclass
class PosteriorSamples:
    """Thinned post-burn-in draws.

    ``values`` has shape ``(n_chains, n_draws, n_params)`` in the layout of
    :func:`aoristic_bayes.model.state_vector`; ``latent`` has shape
    ``(n_chains, n_draws, n_censored)`` with the sampled day of each censored
    case in ``censored_ids`` order.
    """

    names: list[str]
    values: np.ndarray
    censored_ids: list[str]
    latent: np.ndarray
    n_weeks: int
    n_boroughs: int
    acceptance: dict[str, float] = field(default_factory=dict)

    @property
    def n_chains(self) -> int:
        return self.values.shape[0]

    @property
    def n_draws(self) -> int:
        return self.values.shape[1]

    def param(self, name: str) -> np.ndarray:
        """Draws of one parameter, shape ``(n_chains, n_draws)``."""
        return self.values[:, :, self.names.index(name)]

    def block(self, prefix: str) -> np.ndarray:
        idx = [k for k, n in enumerate(self.names) if n.startswith(prefix + "[") or n.startswith(prefix + "_")]
        return self.values[:, :, idx]

    def state(self, chain: int, draw: int) -> ModelState:
        latent = dict(zip(self.censored_ids, self.latent[chain, draw].tolist()))
        return M.state_from_vector(self.values[chain, draw], self.n_weeks, self.n_boroughs, latent)

    def draws(self, chain: int) -> Iterator[ModelState]:
        for s in range(self.n_draws):
            yield self.state(chain, s)


@dataclass(frozen=True)
class ParamSummary:
    name: str
    mean: float
    sd: float
    q025: float
    q975: float
    rhat: float
    ess: float


class _Prepared:
    """Design arrays and prior structure shared by every chain."""

    def __init__(self, design: StudyDesign):
        a = design.arrays
        span = design.span
        self.ids = [o.id for o in design.observations]
        self.n = len(a.y)
        self.y = a.y.astype(float)
        self.b = a.borough
        self.day0 = a.t_from.copy()
        self.cens = np.flatnonzero(a.censored)
        self.lo = a.t_from[self.cens]
        self.hi = a.t_to[self.cens]
        self.width = self.hi - self.lo + 1
        self.cand_start = np.concatenate(([0], np.cumsum(self.width)[:-1])).astype(np.int64)
        self.cand_days = (np.repeat(self.lo - self.cand_start, self.width)
                          + np.arange(int(self.width.sum())))
        self.cand_borough = np.repeat(a.borough[self.cens], self.width)
        self.cand_y = np.repeat(self.y[self.cens], self.width)
        self.dow_lut, self.week_lut = span.day_lookup()
        self.W = span.n_weeks
        self.B = design.graph.n_boroughs
        self.rw2 = M.rw2_structure(self.W)
        self.icar = M.icar_structure(design.graph)
        self.rw2_diag = np.diag(self.rw2).copy()
        self.icar_diag = np.diag(self.icar).copy()
        self.delta_colors = [np.arange(c, self.W, 3) for c in range(min(3, self.W))]
        self.u_colors = design.graph.coloring()
        color = np.empty(self.B, dtype=np.int64)
        for c, members in enumerate(self.u_colors):
            color[members] = c
        self.u_color_obs = [np.flatnonzero(color[self.b] == c) for c in range(len(self.u_colors))]
        self.zeros = np.zeros(self.n, dtype=np.int64)
        # weekday -> (alpha, beta_Tue..beta_Sun) design for the fixed-effect block
        self.M_fixed = np.zeros((7, 7))
        self.M_fixed[:, 0] = 1.0
        self.M_fixed[np.arange(1, 7), np.arange(1, 7)] = 1.0
        ncase = a.y.sum()
        frac = ncase / self.n if self.n else 0.5
        self.alpha0 = math.log(frac / (1 - frac)) if 0 < frac < 1 else 0.0

    def initial_state(self, priors: PriorSpec) -> ModelState:
        taus = {k: priors.gamma(k)[0] / priors.gamma(k)[1] for k in M.PRECISIONS}
        mid = (self.lo + self.hi) // 2
        latent = {self.ids[k]: int(d) for k, d in zip(self.cens, mid)}
        return ModelState.zeros(self.W, self.B, alpha=self.alpha0, latent_dates=latent, **taus)


class _Kernel:
    """One chain's mutable state.

    The per-observation success probability ``pi`` is cached. Shifting the
    linear predictor of a group by ``d`` changes the Bernoulli log-likelihood
    of each member by ``y*d - log1p(pi*expm1(d))`` and moves ``pi`` to
    ``(pi + t) / (1 + t)`` with ``t = pi*expm1(d)``, so a pass costs one
    ``log1p`` per observation.
    """

    def __init__(self, prep: _Prepared, priors: PriorSpec, config: SamplerConfig,
                 rng: np.random.Generator, state: ModelState, latent: bool = True):
        self.p = prep
        self.priors = priors
        self.cfg = config
        self.rng = rng
        self.update_latent = latent and len(prep.cens) > 0
        self.V = priors.fixed_effect_variance
        self.y = prep.y
        self.alpha = np.array([state.alpha])
        self.beta = state.beta_full.copy()
        self.delta = state.delta.astype(float).copy()
        self.eps = state.epsilon.astype(float).copy()
        self.u = state.u.astype(float).copy()
        self.v = state.v.astype(float).copy()
        self.tau = {k: float(getattr(state, k)) for k in M.PRECISIONS}
        self.day = prep.day0.copy()
        if len(prep.cens):
            self.day[prep.cens] = [state.latent_dates[prep.ids[k]] for k in prep.cens]
        self.scale = {"alpha": np.full(1, config.step("alpha")), "beta": np.full(7, config.step("beta")),
                      "delta": np.full(prep.W, config.step("delta")),
                      "epsilon": np.full(prep.W, config.step("epsilon")),
                      "u": np.full(prep.B, config.step("u")), "v": np.full(prep.B, config.step("v"))}
        self.n_acc = {k: 0 for k in (*BLOCKS, "block_fixed", "block_delta", "block_u")}
        self.n_prop = dict.fromkeys(self.n_acc, 0)
        self.gamma = 0.0  # adaptation gain; zero freezes the scales
        self.refresh()

    # -- bookkeeping ---------------------------------------------------------
    def refresh(self, idx: np.ndarray | None = None) -> None:
        """Recompute ``pi`` from the parameters (optionally for ``idx`` only)."""
        p = self.p
        if idx is None:
            self.dow = p.dow_lut[self.day]
            self.wk = p.week_lut[self.day]
            eta = (self.alpha[0] + self.beta[self.dow] + self.delta[self.wk] + self.eps[self.wk]
                   + self.u[p.b] + self.v[p.b])
            self.pi = expit(eta)
            return
        day, b = self.day[idx], p.b[idx]
        self.dow[idx] = dow = p.dow_lut[day]
        self.wk[idx] = wk = p.week_lut[day]
        self.pi[idx] = expit(self.alpha[0] + self.beta[dow] + self.delta[wk] + self.eps[wk]
                             + self.u[b] + self.v[b])

    def state(self) -> ModelState:
        p = self.p
        latent = {p.ids[k]: int(self.day[k]) for k in p.cens}
        return ModelState(float(self.alpha[0]), self.beta[1:].copy(), self.delta.copy(), self.eps.copy(),
                          self.u.copy(), self.v.copy(), latent_dates=latent, **self.tau)

    def vector(self) -> np.ndarray:
        t = self.tau
        return np.concatenate((self.alpha, self.beta[1:], self.delta, self.eps, self.u, self.v,
                               [t["tau_delta"], t["tau_epsilon"], t["tau_u"], t["tau_v"]]))

    def _shift(self, pi: np.ndarray, y: np.ndarray, group: np.ndarray, d: np.ndarray, K: int):
        """Per-group log-likelihood change and the shifted ``pi`` for group offsets ``d``."""
        t = pi * np.expm1(d)[group]
        ll = np.bincount(group, y * d[group] - np.log1p(t), minlength=K)
        return ll, (pi + t) / (1.0 + t)

    # -- latent dates ----------------------------------------------------------
    def latent_step(self) -> None:
        p = self.p
        # candidate days of all censored cases laid end to end
        days = p.cand_days
        wk = p.week_lut[days]
        bc = p.cand_borough
        eta = (self.alpha[0] + self.u[bc] + self.v[bc] + self.beta[p.dow_lut[days]]
               + self.delta[wk] + self.eps[wk])
        logp = M.log_bernoulli(p.cand_y, eta)
        logp -= np.repeat(np.maximum.reduceat(logp, p.cand_start), p.width)
        w = np.exp(logp)
        cs = np.cumsum(w)
        before = cs[p.cand_start] - w[p.cand_start]
        total = cs[p.cand_start + p.width - 1] - before
        target = before + self.rng.random(len(p.cens)) * total
        k = np.searchsorted(cs, target, side="right") - p.cand_start
        self.day[p.cens] = p.lo + np.clip(k, 0, p.width - 1)

    # -- single-site random walk ----------------------------------------------
    def _rw(self, key: str, values: np.ndarray, group: np.ndarray, comps: np.ndarray, prior_diff,
            idx: np.ndarray | None = None) -> None:
        """Independent random-walk proposals for ``comps``.

        ``idx`` optionally restricts the likelihood to the observations whose
        group is among ``comps``; ``group`` is then already restricted.
        """
        K = len(values)
        pi, y = (self.pi, self.y) if idx is None else (self.pi[idx], self.y[idx])
        step = self.scale[key][comps] * self.rng.standard_normal(len(comps))
        d = np.zeros(K)
        d[comps] = step
        ll, pi_new = self._shift(pi, y, group, d, K)
        logr = ll[comps] + prior_diff(comps, step)
        acc = np.log(self.rng.random(len(comps))) < logr
        if acc.any():
            values[comps[acc]] += step[acc]
            hit = np.zeros(K, dtype=bool)
            hit[comps[acc]] = True
            obs = hit[group]
            if idx is None:
                self.pi[obs] = pi_new[obs]
            else:
                self.pi[idx[obs]] = pi_new[obs]
        if self.gamma:
            self.scale[key][comps] *= np.exp(self.gamma * (acc - self.cfg.adapt_target))
        self.n_acc[key] += int(acc.sum())
        self.n_prop[key] += len(comps)

    def _fixed_prior(self, values):
        V = self.V
        return lambda c, d: -(2.0 * values[c] * d + d * d) / (2.0 * V)

    def _gmrf_prior(self, values, Q, diag, tau):
        g = Q @ values
        return lambda c, d: -0.5 * tau * (2.0 * d * g[c] + d * d * diag[c])

    def _iid_prior(self, values, tau):
        return lambda c, d: -0.5 * tau * (2.0 * values[c] * d + d * d)

    # -- IWLS Gaussian block proposal -----------------------------------------
    def _iwls_system(self, pi, group, Mx, Qp, theta):
        G = Qp.shape[0] if Mx is None else Mx.shape[0]
        r = np.bincount(group, self.y - pi, minlength=G)
        h = np.bincount(group, pi * (1.0 - pi), minlength=G)
        if Mx is None:
            P = Qp + np.diag(h + 1e-8)
            b = h * theta + r
        else:
            H = Mx.T @ (h[:, None] * Mx)
            P = Qp + H + np.diag(np.full(len(theta), 1e-8))
            b = H @ theta + Mx.T @ r
        L = cholesky(P, lower=True, check_finite=False)
        mu = cho_solve((L, True), b, check_finite=False)
        return L, mu

    @staticmethod
    def _logq(L, mu, x):
        z = L.T @ (x - mu)
        return float(np.log(np.diag(L)).sum() - 0.5 * z @ z)

    def _block(self, key: str, theta: np.ndarray, group: np.ndarray, Mx, Qp) -> np.ndarray:
        """Metropolis-Hastings step with a Gaussian proposal from one IWLS iteration."""
        L0, mu0 = self._iwls_system(self.pi, group, Mx, Qp, theta)
        theta1 = mu0 + solve_triangular(L0, self.rng.standard_normal(len(theta)), lower=True, trans="T",
                                        check_finite=False)
        dtheta = theta1 - theta
        d = dtheta if Mx is None else Mx @ dtheta
        ll, pi1 = self._shift(self.pi, self.y, group, d, len(d))
        lp = -0.5 * (theta1 @ Qp @ theta1 - theta @ Qp @ theta)
        L1, mu1 = self._iwls_system(pi1, group, Mx, Qp, theta1)
        logr = ll.sum() + lp + self._logq(L1, mu1, theta) - self._logq(L0, mu0, theta1)
        self.n_prop[key] += 1
        if math.log(self.rng.random()) < logr:
            self.n_acc[key] += 1
            self.pi = pi1
            return theta1
        return theta

    # -- sweeps ----------------------------------------------------------------
    def fixed_step(self) -> None:
        p = self.p
        self._rw("alpha", self.alpha, p.zeros, np.zeros(1, dtype=np.int64), self._fixed_prior(self.alpha))
        self._rw("beta", self.beta, self.dow, np.arange(1, 7), self._fixed_prior(self.beta))
        if self.cfg.block_moves:
            theta = np.concatenate((self.alpha, self.beta[1:]))
            theta = self._block("block_fixed", theta, self.dow, p.M_fixed, np.eye(7) / self.V)
            self.alpha[0] = theta[0]
            self.beta[1:] = theta[1:]

    def delta_step(self) -> None:
        p = self.p
        order = np.argsort(self.wk % 3, kind="stable")
        bounds = np.searchsorted(self.wk[order] % 3, np.arange(len(p.delta_colors) + 1))
        for c, comps in enumerate(p.delta_colors):
            idx = order[bounds[c]:bounds[c + 1]]
            self._rw("delta", self.delta, self.wk[idx], comps,
                     self._gmrf_prior(self.delta, p.rw2, p.rw2_diag, self.tau["tau_delta"]), idx)
        if self.cfg.block_moves:
            self.delta = self._block("block_delta", self.delta, self.wk, None, self.tau["tau_delta"] * p.rw2)
        self._recenter(self.delta)

    def epsilon_step(self) -> None:
        self._rw("epsilon", self.eps, self.wk, np.arange(self.p.W),
                 self._iid_prior(self.eps, self.tau["tau_epsilon"]))

    def u_step(self) -> None:
        p = self.p
        for comps, idx in zip(p.u_colors, p.u_color_obs):
            self._rw("u", self.u, p.b[idx], comps, self._gmrf_prior(self.u, p.icar, p.icar_diag, self.tau["tau_u"]), idx)
        if self.cfg.block_moves:
            self.u = self._block("block_u", self.u, p.b, None, self.tau["tau_u"] * p.icar)
        self._recenter(self.u)

    def v_step(self) -> None:
        self._rw("v", self.v, self.p.b, np.arange(self.p.B), self._iid_prior(self.v, self.tau["tau_v"]))

    def _recenter(self, field_values: np.ndarray) -> None:
        m = field_values.mean()
        field_values -= m
        self.alpha[0] += m  # linear predictor unchanged

    def precision_step(self) -> None:
        self.tau.update(draw_precisions(self.delta, self.eps, self.u, self.v, self.p.icar,
                                        self.priors, self.rng))

    def sweep(self) -> None:
        if self.update_latent:
            self.latent_step()
            self.refresh(self.p.cens)
        self.fixed_step()
        self.delta_step()
        self.epsilon_step()
        self.u_step()
        self.v_step()
        self.precision_step()

    def acceptance_rates(self) -> dict[str, float]:
        return {k: self.n_acc[k] / self.n_prop[k] for k in self.n_acc if self.n_prop[k]}


def draw_precisions(delta, eps, u, v, icar, priors: PriorSpec, rng: np.random.Generator) -> dict[str, float]:
    """Conjugate Gamma draws of the four precisions given the fields."""
    W, B = len(delta), len(u)
    stats = {"tau_delta": (W - 2, M.rw2_penalty(delta)),
             "tau_epsilon": (W, float(eps @ eps)),
             "tau_u": (B - 1, float(u @ icar @ u)),
             "tau_v": (B, float(v @ v))}
    out = {}
    for name, (rank, s) in stats.items():
        shape, rate = priors.gamma(name)
        out[name] = float(rng.gamma(shape + 0.5 * rank, 1.0 / (rate + 0.5 * s)))
    return out


def chain_rng(seed: int, chain: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, chain]))


def _run_chain(prep: _Prepared, priors: PriorSpec, config: SamplerConfig, chain: int, latent: bool):
    rng = chain_rng(config.seed, chain)
    k = _Kernel(prep, priors, config, rng, prep.initial_state(priors), latent=latent)
    n_par = 1 + 6 + 2 * prep.W + 2 * prep.B + 4
    values = np.empty((config.n_draws, n_par))
    days = np.empty((config.n_draws, len(prep.cens)), dtype=np.int32)
    s = 0
    for it in range(config.n_iterations):
        k.gamma = (it + 1) ** -0.6 if it < config.n_burnin else 0.0
        if it == config.n_burnin:
            k.n_acc = dict.fromkeys(k.n_acc, 0)
            k.n_prop = dict.fromkeys(k.n_prop, 0)
        k.sweep()
        if (it + 1) % 100 == 0:
            k.refresh()
        if it >= config.n_burnin and (it - config.n_burnin + 1) % config.thin == 0:
            values[s] = k.vector()
            days[s] = k.day[prep.cens]
            s += 1
        if (it + 1) % 1000 == 0:
            log.debug("chain %d: iteration %d/%d", chain, it + 1, config.n_iterations)
    return values, days, k.acceptance_rates()


def run(design: StudyDesign, priors: PriorSpec = PriorSpec(), config: SamplerConfig = SamplerConfig(),
        mode: str = "full") -> PosteriorSamples:
    """Sample the posterior; ``complete-cases`` first drops censored cases."""
    if mode not in MODES:
        raise DomainError(f"mode must be one of {MODES}")
    problems = validate(design)
    if problems:
        raise ValidationError(problems)
    if mode == "complete-cases":
        design = complete_cases_filter(design)
    prep = _Prepared(design)
    args = [(prep, priors, config, c, mode == "full") for c in range(config.n_chains)]
    if config.n_jobs > 1 and config.n_chains > 1:
        with ProcessPoolExecutor(max_workers=min(config.n_jobs, config.n_chains)) as ex:
            results = list(ex.map(_run_chain, *zip(*args)))
    else:
        results = [_run_chain(*a) for a in args]
    values = np.stack([r[0] for r in results])
    latent = np.stack([r[1] for r in results])
    acc = {k: float(np.mean([r[2][k] for r in results])) for k in results[0][2]}
    return PosteriorSamples(M.param_names(prep.W, prep.B), values, [prep.ids[k] for k in prep.cens],
                            latent, prep.W, prep.B, acc)


# -- single-update entry points -------------------------------------------------

def update_latent_date(case: Observation, state: ModelState, rng: np.random.Generator, span) -> int:
    """Draw a censored case's day from its exact discrete full conditional."""
    if not case.censored:
        raise DomainError(f"observation {case.id!r} has an exact date")
    probs = latent_date_conditional(case, state, span)
    days = np.array(sorted(probs))
    return int(days[rng.choice(len(days), p=np.array([probs[d] for d in days]))])


def latent_date_conditional(case: Observation, state: ModelState, span) -> dict[int, float]:
    """p(t | everything else) over the case's window, by enumeration."""
    days = list(case.window.days())
    for d in (days[0], days[-1]):
        span.check(d)
    if not 1 <= case.borough <= len(state.u):
        raise DomainError(f"borough {case.borough} outside [1, {len(state.u)}]")
    dow_lut, week_lut = span.day_lookup()
    t = np.asarray(days)
    b = case.borough - 1
    eta = (state.alpha + state.beta_full[dow_lut[t]] + state.delta[week_lut[t]] + state.epsilon[week_lut[t]]
           + state.u[b] + state.v[b])
    logp = M.log_bernoulli(case.label, eta)
    w = np.exp(logp - logp.max())
    w /= w.sum()
    return dict(zip(days, w.tolist()))


def update_precisions(state: ModelState, design: StudyDesign, priors: PriorSpec,
                      rng: np.random.Generator) -> dict[str, float]:
    return draw_precisions(state.delta, state.epsilon, state.u, state.v, M.icar_structure(design.graph),
                           priors, rng)


_BLOCK_STEPS = {"alpha+beta": "fixed_step", "delta": "delta_step", "epsilon": "epsilon_step",
                "u": "u_step", "v": "v_step"}


def block_chain(block: str, state: ModelState, design: StudyDesign, priors: PriorSpec,
                rng: np.random.Generator, n_iter: int,
                config: SamplerConfig = SamplerConfig()) -> tuple[np.ndarray, ModelState]:
    """Repeat one Gaussian block's update ``n_iter`` times with everything else fixed.

    Returns the block's draws, shape ``(n_iter, block size)`` (``alpha+beta``
    gives alpha then beta Tue..Sun), and the final state. Step sizes are not
    adapted.
    """
    if block not in _BLOCK_STEPS:
        raise DomainError(f"block must be one of {sorted(_BLOCK_STEPS)}")
    k = _Kernel(_Prepared(design), priors, config, rng, state, latent=False)
    step = getattr(k, _BLOCK_STEPS[block])
    get = {"alpha+beta": lambda: np.concatenate((k.alpha, k.beta[1:])), "delta": lambda: k.delta,
           "epsilon": lambda: k.eps, "u": lambda: k.u, "v": lambda: k.v}[block]
    out = np.empty((n_iter, len(get())))
    for it in range(n_iter):
        step()
        out[it] = get()
    return out, k.state()


def update_field_block(block: str, state: ModelState, design: StudyDesign, priors: PriorSpec,
                       rng: np.random.Generator, config: SamplerConfig = SamplerConfig()) -> ModelState:
    """One sweep of one Gaussian block, returned as a new state."""
    return block_chain(block, state, design, priors, rng, 1, config)[1]


def sample_latent_dates(design: StudyDesign, state: ModelState, n_draws: int,
                        rng: np.random.Generator) -> tuple[list[str], np.ndarray]:
    """Repeated exact draws of every censored case's day with all effects held at ``state``.

    Cases missing from ``state.latent_dates`` start at their window midpoint.
    Returns the censored ids and an ``(n_draws, n_censored)`` array of days.
    """
    prep = _Prepared(design)
    if not len(prep.cens):
        raise DomainError("design has no censored cases")
    start = state.copy()
    for k in prep.cens:
        start.latent_dates.setdefault(prep.ids[k], int((prep.day0[k] + design.arrays.t_to[k]) // 2))
    kern = _Kernel(prep, priors=PriorSpec(), config=SamplerConfig(), rng=rng, state=start)
    out = np.empty((n_draws, len(prep.cens)), dtype=np.int64)
    for s in range(n_draws):
        kern.latent_step()
        out[s] = kern.day[prep.cens]
    return [prep.ids[k] for k in prep.cens], out


# -- summaries ------------------------------------------------------------------

def summarize(samples: PosteriorSamples) -> list[ParamSummary]:
    if samples.values.size == 0:
        raise DomainError("no posterior draws to summarise")
    out = []
    for k, name in enumerate(samples.names):
        x = samples.values[:, :, k]
        flat = x.ravel()
        sd = float(flat.std(ddof=1)) if flat.size > 1 else 0.0
        q025, q975 = np.quantile(flat, [0.025, 0.975])
        out.append(ParamSummary(name, float(flat.mean()), sd, float(q025), float(q975),
                                split_rhat(x), ess(x) if sd > 0 else float(flat.size)))
    return out


def imputation_posterior(samples: PosteriorSamples, case_id: str) -> dict[int, float]:
    """Empirical posterior of a censored case's day over its sampled values."""
    try:
        k = samples.censored_ids.index(case_id)
    except ValueError:
        raise DomainError(f"{case_id!r} is not a censored case of this fit") from None
    days, counts = np.unique(samples.latent[:, :, k], return_counts=True)
    total = counts.sum()
    return {int(d): c / total for d, c in zip(days, counts)}


def impute_argmax(posterior: Mapping[int, float]) -> int:
    """Most probable day; ties go to the earliest day."""
    best = max(posterior.values())
    return min(d for d, p in posterior.items() if p == best)
