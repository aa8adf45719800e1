from __future__ import annotations

import datetime as dt

import numpy as np
import pytest

from aoristic_bayes.calendar import CalendarSpan
from aoristic_bayes.domain import BoroughGraph, CensorWindow, Observation, StudyDesign

# a four-week span starting on a Monday keeps toy designs small
MONDAY_SPAN = CalendarSpan(dt.date(2016, 1, 4), 28)


def obs(oid, t_from, t_to=None, label=1, borough=1):
    return Observation(oid, 0.0, 0.0, borough, CensorWindow(t_from, t_from if t_to is None else t_to), label)


def make_design(records, n_boroughs=2, span=MONDAY_SPAN, graph=None):
    """``records`` are ``(t_from, t_to, label, borough)`` tuples."""
    observations = [obs(f"o{k}", a, b, lab, bor) for k, (a, b, lab, bor) in enumerate(records)]
    if graph is None:
        graph = BoroughGraph.from_pairs(n_boroughs, [(k, k + 1) for k in range(1, n_boroughs)])
    return StudyDesign(tuple(observations), graph, span)


def random_design(rng, n=60, n_boroughs=4, span=MONDAY_SPAN, p_cens=0.3):
    records = []
    for _ in range(n):
        label = int(rng.random() < 0.3)
        t = int(rng.integers(1, span.n_days + 1))
        lo, hi = t, t
        if label and rng.random() < p_cens:
            h = int(rng.integers(1, 4))
            lo, hi = max(1, t - h), min(span.n_days, t + h)
        records.append((lo, hi, label, int(rng.integers(1, n_boroughs + 1))))
    return make_design(records, n_boroughs, span, BoroughGraph.grid(2, n_boroughs // 2))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
