"""Convergence diagnostics for MCMC output shaped ``(n_chains, n_draws)``."""

from __future__ import annotations

import numpy as np


def split_rhat(chains: np.ndarray) -> float:
    """Classic potential scale reduction on half-split chains.

    A chain with zero within-chain variance gives 1.0 when all chains agree and
    ``inf`` when they sit at different values.
    """
    x = np.atleast_2d(np.asarray(chains, dtype=float))
    n = x.shape[1] // 2
    if n < 1:
        return float("nan")
    halves = np.concatenate([x[:, :n], x[:, -n:]], axis=0)
    W = halves.var(axis=1, ddof=1).mean() if n > 1 else 0.0
    B = n * halves.mean(axis=1).var(ddof=1)
    if W == 0.0:
        return 1.0 if np.isclose(B, 0.0, atol=1e-300) else float("inf")
    var_plus = (n - 1) / n * W + B / n
    return float(np.sqrt(var_plus / W))


def _autocov(x: np.ndarray) -> np.ndarray:
    n = x.shape[-1]
    size = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(x - x.mean(axis=-1, keepdims=True), size)
    return np.fft.irfft(f * np.conj(f), size)[..., :n] / n


def ess(chains: np.ndarray) -> float:
    """Effective sample size with Geyer's initial monotone sequence estimator."""
    x = np.atleast_2d(np.asarray(chains, dtype=float))
    m, n = x.shape
    if n < 4:
        return float(m * n)
    acov = _autocov(x)
    chain_var = acov[:, 0] * n / (n - 1)
    W = chain_var.mean()
    var_plus = W * (n - 1) / n
    if m > 1:
        var_plus += x.mean(axis=1).var(ddof=1)
    if var_plus <= 0:
        return float(m * n)
    rho = 1.0 - (W - acov.mean(axis=0)) / var_plus
    rho[0] = 1.0
    # sum consecutive pairs while positive, enforcing monotone decrease
    total = 0.0
    prev = np.inf
    for t in range(0, n - 1, 2):
        pair = rho[t] + rho[t + 1]
        if pair <= 0:
            break
        pair = min(pair, prev)
        total += pair
        prev = pair
    tau = -1.0 + 2.0 * total
    tau = max(tau, 1.0 / np.log10(m * n))
    return float(m * n / tau)


def mcse(chains: np.ndarray) -> float:
    """Monte Carlo standard error of the posterior mean."""
    x = np.asarray(chains, dtype=float)
    sd = x.std(ddof=1) if x.size > 1 else 0.0
    return float(sd / np.sqrt(ess(x))) if sd > 0 else 0.0
