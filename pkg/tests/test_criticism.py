from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from aoristic_bayes import model as M
from aoristic_bayes.criticism import (ConfusionMatrix, confusion, f1, mcc, metric_posterior, pi_draws, pi_hat,
                                      pi_hat_split, pi_matrix)
from aoristic_bayes.errors import DomainError
from aoristic_bayes.sampler import PosteriorSamples, SamplerConfig, run

from conftest import MONDAY_SPAN, make_design

W = MONDAY_SPAN.n_weeks


def brute(labels, probs, c):
    tp = fp = fn = tn = 0
    for y, p in zip(labels, probs):
        if p > c:
            if y == 1:
                tp += 1
            else:
                fp += 1
        elif y == 1:
            fn += 1
        else:
            tn += 1
    return tp, fp, fn, tn


def brute_mcc(tp, fp, fn, tn):
    den = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    return 0.0 if den == 0 else (tp * tn - fp * fn) / math.sqrt(den)


def test_examples():
    assert confusion([1, 0], [0.9, 0.1], 0.5) == ConfusionMatrix(1, 0, 0, 1)
    m = confusion([1, 0, 1], [0.2, 0.3, 0.3], 0.3)
    assert m.tp == m.fp == 0
    assert mcc(ConfusionMatrix(5, 0, 0, 5)) == 1.0
    assert f1(ConfusionMatrix(5, 0, 0, 5)) == 1.0
    assert mcc(ConfusionMatrix(7, 3, 0, 0)) == 0.0
    assert f1(ConfusionMatrix(0, 3, 2, 9)) == 0.0


def test_published_confusion_matrices():
    cc = ConfusionMatrix(513, 1903, 1086, 11148)
    assert abs(mcc(cc) - 0.1471) <= 1e-4
    assert abs(f1(cc) - 0.2556) <= 1e-4
    assert f1(cc) == 1026 / 4015
    full = ConfusionMatrix(1190, 3151, 1434, 9900)
    # pinned from an independent 30-digit evaluation
    assert mcc(full) == pytest.approx(0.17692687425391443, abs=1e-15)
    assert f1(full) == pytest.approx(0.34170854271356784, abs=1e-15)


def test_brute_force_oracle_on_random_instances():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        n = int(rng.integers(0, 40))
        labels = rng.integers(0, 2, n)
        probs = rng.choice([0.1, 0.2, 0.3, 0.5, 0.7], n) if rng.random() < 0.5 else rng.random(n)
        c = float(rng.choice([0.1, 0.2, 0.3, 0.5, rng.uniform(0.01, 0.99)]))
        m = confusion(labels, probs, c)
        assert (m.tp, m.fp, m.fn, m.tn) == brute(labels, probs, c)
        assert mcc(m) == brute_mcc(m.tp, m.fp, m.fn, m.tn)
        den = 2 * m.tp + m.fp + m.fn
        assert f1(m) == (2 * m.tp / den if den else 0.0)


counts = st.integers(0, 10_000)


@given(counts, counts, counts, counts)
def test_mcc_symmetry_and_f1_ignores_tn(tp, fp, fn, tn):
    assert mcc(ConfusionMatrix(tp, fp, fn, tn)) == pytest.approx(mcc(ConfusionMatrix(tn, fn, fp, tp)), abs=1e-15)
    assert f1(ConfusionMatrix(tp, fp, fn, tn)) == f1(ConfusionMatrix(tp, fp, fn, 0))
    assert -1.0 <= mcc(ConfusionMatrix(tp, fp, fn, tn)) <= 1.0


@given(st.lists(st.tuples(st.integers(0, 1), st.floats(0, 1)), max_size=60), st.floats(0.01, 0.98),
       st.floats(0.0, 0.5))
def test_raising_cutoff_never_adds_positives(pairs, c, dc):
    labels = [y for y, _ in pairs]
    probs = [p for _, p in pairs]
    lo = confusion(labels, probs, c)
    hi = confusion(labels, probs, min(c + dc, 0.99))
    assert hi.tp + hi.fp <= lo.tp + lo.fp


@given(st.lists(st.tuples(st.integers(0, 1), st.floats(0, 1)), max_size=40), st.randoms())
def test_confusion_is_permutation_invariant(pairs, rnd):
    shuffled = list(pairs)
    rnd.shuffle(shuffled)
    a = confusion([y for y, _ in pairs], [p for _, p in pairs], 0.3)
    b = confusion([y for y, _ in shuffled], [p for _, p in shuffled], 0.3)
    assert a == b


def test_bad_inputs():
    with pytest.raises(DomainError):
        confusion([1], [0.5], 1.0)
    with pytest.raises(DomainError):
        confusion([1, 0], [0.5], 0.5)


def fixed_samples(design, vec, n_draws=5):
    names = M.param_names(W, design.graph.n_boroughs)
    values = np.tile(vec, (1, n_draws, 1))
    cens = design.censored_ids
    a = design.arrays
    latent = np.tile(a.t_from[a.censored], (1, n_draws, 1))
    return PosteriorSamples(names, values, cens, latent, W, design.graph.n_boroughs)


def test_degenerate_posterior_collapses_to_point_metric():
    d = make_design([(t, t, int(t % 4 == 0), 1 + t % 2) for t in range(1, 29)])
    rng = np.random.default_rng(1)
    vec = M.state_vector(M.ModelState.zeros(W, 2, alpha=-1.0, beta=rng.normal(0, 1, 6)))
    s = fixed_samples(d, vec)
    pi = pi_hat(s, d)
    for dist in metric_posterior(s, d, [0.2, 0.3], "mcc"):
        point = mcc(confusion(d.arrays.y, pi, dist.cutoff))
        assert np.all(dist.samples == point) and dist.q025 == dist.q975 == point


def test_split_groups():
    controls = make_design([(t, t, 0, 1) for t in range(1, 10)])
    s = fixed_samples(controls, np.zeros(len(M.param_names(W, 2))))
    case, ctrl = pi_hat_split(s, controls)
    assert case.n == 0 and ctrl.n == 9
    exact = make_design([(1, 1, 1, 1), (2, 2, 0, 2)])
    s = fixed_samples(exact, np.zeros(len(M.param_names(W, 2))))
    certain, uncertain = pi_hat_split(s, exact, "certain_vs_uncertain")
    assert certain.n == 1 and uncertain.n == 0
    with pytest.raises(DomainError):
        pi_hat_split(s, exact, "by_borough")


@pytest.fixture(scope="module")
def signal_fit():
    # cases concentrate in borough 1, so a fitted model separates them
    recs = [(t, t, 0, b) for t in range(1, 29) for b in (1, 2) for _ in range(2)]
    recs += [(t, t, 1, 1) for t in range(1, 29)] + [(t, t, 1, 2) for t in range(1, 29, 4)]
    recs += [(t, t + 2, 1, 1) for t in range(1, 26, 3)]
    d = make_design(recs)
    fit = run(d, config=SamplerConfig(n_chains=1, n_iterations=2500, n_burnin=500, thin=1, seed=3))
    return d, fit


def test_case_probabilities_exceed_control_probabilities(signal_fit):
    d, fit = signal_fit
    case, ctrl = pi_hat_split(fit, d)
    assert case.quantiles[0.5] > ctrl.quantiles[0.5]
    assert case.hist.sum() == case.n and ctrl.hist.sum() == ctrl.n


def test_dense_and_streaming_agree(signal_fit):
    d, fit = signal_fit
    a = metric_posterior(fit, d, [0.2, 0.3], "f1")
    b = metric_posterior(fit, d, [0.2, 0.3], "f1", dense=True)
    for x, y in zip(a, b):
        assert np.array_equal(x.samples, y.samples)
    assert pi_matrix(fit, d).shape == (fit.n_chains * fit.n_draws, len(d))


def test_metric_monte_carlo_error_shrinks_like_root_n(signal_fit):
    d, fit = signal_fit
    samples = metric_posterior(fit, d, [0.3], "mcc")[0].samples
    rng = np.random.default_rng(4)

    def spread(n):
        return np.std([rng.choice(samples, n, replace=False).mean() for _ in range(400)])

    ratio = spread(50) / spread(200)
    assert 1.0 < ratio < 4.0  # sqrt(200 / 50) = 2, within a factor of 2


def test_samples_must_match_design(signal_fit):
    d, fit = signal_fit
    other = make_design([(1, 1, 1, 1)], 3)
    with pytest.raises(DomainError):
        next(pi_draws(fit, other))
    with pytest.raises(DomainError):
        metric_posterior(fit, d, [0.2], "accuracy")
