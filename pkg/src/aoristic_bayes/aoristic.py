"""Aoristic tables: each event's unit mass spread evenly over its candidate days."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import CensorWindow, StudyDesign


@dataclass(frozen=True)
class AoristicTable:
    by_dow: np.ndarray  # Mon..Sun
    by_week: np.ndarray
    n_events: int


def aoristic_weights(window: CensorWindow) -> dict[int, float]:
    w = 1.0 / window.width()
    return {d: w for d in window.days()}


def _aggregate(design: StudyDesign, mask: np.ndarray) -> AoristicTable:
    span = design.span
    dow_lut, week_lut = span.day_lookup()
    a = design.arrays
    lo, hi = a.t_from[mask], a.t_to[mask]
    by_dow = np.zeros(7)
    by_week = np.zeros(span.n_weeks)
    if len(lo):
        width = hi - lo + 1
        # day-weight matrix, padded to the widest window
        days = lo[:, None] + np.arange(width.max())[None, :]
        inside = days <= hi[:, None]
        wts = np.where(inside, 1.0 / width[:, None], 0.0)
        days = np.where(inside, days, lo[:, None])
        by_dow = np.bincount(dow_lut[days].ravel(), wts.ravel(), minlength=7)
        by_week = np.bincount(week_lut[days].ravel(), wts.ravel(), minlength=span.n_weeks)
    return AoristicTable(by_dow, by_week, int(mask.sum()))


def aoristic_aggregate(design: StudyDesign, cases_only: bool = True) -> AoristicTable:
    a = design.arrays
    mask = a.y == 1 if cases_only else np.ones(len(a.y), dtype=bool)
    return _aggregate(design, mask)


def exact_only_aggregate(design: StudyDesign, cases_only: bool = True) -> AoristicTable:
    a = design.arrays
    mask = ~a.censored
    if cases_only:
        mask &= a.y == 1
    return _aggregate(design, mask)
