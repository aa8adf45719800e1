"""Observations, censoring windows, borough graph and study designs."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, NamedTuple

import numpy as np

from .calendar import STUDY_SPAN, CalendarSpan
from .errors import DomainError


@dataclass(frozen=True)
class CensorWindow:
    t_from: int
    t_to: int

    @classmethod
    def exact_at(cls, day: int) -> "CensorWindow":
        return cls(day, day)

    def exact(self) -> bool:
        return self.t_from == self.t_to

    def width(self) -> int:
        return self.t_to - self.t_from + 1

    def days(self) -> range:
        return range(self.t_from, self.t_to + 1)

    def midpoint(self) -> int:
        return (self.t_from + self.t_to) // 2


@dataclass(frozen=True)
class Observation:
    id: str
    x: float
    y: float
    borough: int
    window: CensorWindow
    label: int

    @property
    def is_case(self) -> bool:
        return self.label == 1

    @property
    def censored(self) -> bool:
        return not self.window.exact()


@dataclass(frozen=True)
class BoroughGraph:
    """Undirected borough adjacency; boroughs are numbered 1..n_boroughs."""

    n_boroughs: int
    edges: frozenset[tuple[int, int]]

    @classmethod
    def from_pairs(cls, n_boroughs: int, pairs: Iterable[tuple[int, int]]) -> "BoroughGraph":
        edges = set()
        for a, b in pairs:
            a, b = int(a), int(b)
            if a == b:
                raise DomainError(f"self-loop on borough {a}")
            for k in (a, b):
                if not 1 <= k <= n_boroughs:
                    raise DomainError(f"borough {k} outside [1, {n_boroughs}]")
            edges.add((min(a, b), max(a, b)))
        return cls(n_boroughs, frozenset(edges))

    @classmethod
    def grid(cls, nrow: int, ncol: int) -> "BoroughGraph":
        """Rook adjacency on an ``nrow x ncol`` lattice, numbered row-major."""
        pairs = []
        for r in range(nrow):
            for c in range(ncol):
                k = r * ncol + c + 1
                if c + 1 < ncol:
                    pairs.append((k, k + 1))
                if r + 1 < nrow:
                    pairs.append((k, k + ncol))
        return cls.from_pairs(nrow * ncol, pairs)

    def has_edge(self, a: int, b: int) -> bool:
        return (min(a, b), max(a, b)) in self.edges

    @cached_property
    def edge_array(self) -> np.ndarray:
        """Sorted (n_edges, 2) array of zero-based endpoints."""
        return np.array(sorted(self.edges), dtype=np.int64).reshape(-1, 2) - 1

    @cached_property
    def neighbor_counts(self) -> np.ndarray:
        e = self.edge_array
        return np.bincount(e.ravel(), minlength=self.n_boroughs)

    @cached_property
    def adjacency(self) -> np.ndarray:
        A = np.zeros((self.n_boroughs, self.n_boroughs))
        e = self.edge_array
        A[e[:, 0], e[:, 1]] = A[e[:, 1], e[:, 0]] = 1.0
        return A

    def weights(self) -> np.ndarray:
        """Row-normalised neighbourhood matrix, ``1/N_b`` for each neighbour (zero rows for islands)."""
        n = self.neighbor_counts[:, None].astype(float)
        return np.divide(self.adjacency, n, out=np.zeros_like(self.adjacency), where=n > 0)

    def coloring(self) -> list[np.ndarray]:
        """Greedy vertex colouring; no two boroughs in a class are adjacent."""
        colors = np.full(self.n_boroughs, -1)
        A = self.adjacency
        for b in np.argsort(-self.neighbor_counts, kind="stable"):
            used = set(colors[A[b] > 0].tolist())
            c = 0
            while c in used:
                c += 1
            colors[b] = c
        return [np.flatnonzero(colors == c) for c in range(colors.max() + 1)]


@dataclass(frozen=True)
class DwellingSet:
    x: np.ndarray
    y: np.ndarray
    borough: np.ndarray
    n_units: np.ndarray

    def __post_init__(self) -> None:
        n = len(self.x)
        if not (len(self.y) == len(self.borough) == len(self.n_units) == n):
            raise DomainError("dwelling columns have unequal lengths")
        if n and np.min(self.n_units) < 1:
            raise DomainError("every dwelling location needs n_units >= 1")

    def __len__(self) -> int:
        return len(self.x)

    @property
    def total_units(self) -> int:
        return int(np.sum(self.n_units))


class Violation(NamedTuple):
    obs_id: str | None
    rule: str
    detail: str = ""

    def __str__(self) -> str:
        where = f"[{self.obs_id}] " if self.obs_id is not None else ""
        return f"{where}{self.rule}" + (f": {self.detail}" if self.detail else "")


class DesignArrays(NamedTuple):
    """Column view of a design used by the numerical code (boroughs zero-based)."""

    y: np.ndarray
    borough: np.ndarray
    t_from: np.ndarray
    t_to: np.ndarray
    censored: np.ndarray


@dataclass(frozen=True)
class StudyDesign:
    observations: tuple[Observation, ...]
    graph: BoroughGraph
    span: CalendarSpan = STUDY_SPAN
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "observations", tuple(self.observations))
        object.__setattr__(self, "_index", {o.id: k for k, o in enumerate(self.observations)})

    def __len__(self) -> int:
        return len(self.observations)

    def position(self, obs_id: str) -> int:
        try:
            return self._index[obs_id]
        except KeyError:
            raise DomainError(f"unknown observation id {obs_id!r}") from None

    def replace_observations(self, observations: Iterable[Observation]) -> "StudyDesign":
        return StudyDesign(tuple(observations), self.graph, self.span)

    @cached_property
    def arrays(self) -> DesignArrays:
        obs = self.observations
        t_from = np.array([o.window.t_from for o in obs], dtype=np.int64)
        t_to = np.array([o.window.t_to for o in obs], dtype=np.int64)
        return DesignArrays(
            y=np.array([o.label for o in obs], dtype=np.int64),
            borough=np.array([o.borough for o in obs], dtype=np.int64) - 1,
            t_from=t_from,
            t_to=t_to,
            censored=t_from != t_to,
        )

    @property
    def censored_ids(self) -> list[str]:
        return [o.id for o in self.observations if o.censored]

    @property
    def n_cases(self) -> int:
        return sum(o.label for o in self.observations)


def validate_graph(graph: BoroughGraph) -> list[Violation]:
    out = []
    for b in np.flatnonzero(graph.neighbor_counts == 0):
        out.append(Violation(None, "borough has no neighbours", f"borough {b + 1}"))
    return out


def validate(design: StudyDesign) -> list[Violation]:
    """Every invariant breach in ``design``; an empty list means valid."""
    out = validate_graph(design.graph)
    T = design.span.n_days
    B = design.graph.n_boroughs
    seen = set()
    for o in design.observations:
        if o.id in seen:
            out.append(Violation(o.id, "duplicate id"))
        seen.add(o.id)
        w = o.window
        if w.t_from > w.t_to:
            out.append(Violation(o.id, "t_from after t_to", f"{w.t_from} > {w.t_to}"))
        if not (1 <= w.t_from <= T and 1 <= w.t_to <= T):
            out.append(Violation(o.id, "window outside study span", f"[{w.t_from}, {w.t_to}] vs [1, {T}]"))
        if not 1 <= o.borough <= B:
            out.append(Violation(o.id, "borough out of range", f"{o.borough} not in [1, {B}]"))
        if o.label not in (0, 1):
            out.append(Violation(o.id, "label must be 0 or 1", str(o.label)))
        elif o.label == 0 and w.t_from != w.t_to:
            out.append(Violation(o.id, "control must be exact"))
    return out


def uncertainty_summary(design: StudyDesign) -> tuple[int, int, float]:
    """(n_exact, n_censored, fraction_exact) counted over cases only."""
    n_exact = n_cens = 0
    for o in design.observations:
        if o.label == 1:
            if o.censored:
                n_cens += 1
            else:
                n_exact += 1
    n = n_exact + n_cens
    return n_exact, n_cens, (n_exact / n if n else float("nan"))
