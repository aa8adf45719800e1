"""CSV and JSON file formats.

Observations: ``id,x,y,borough,t_from,t_to,y`` where the first ``y`` is the
planar coordinate and the last is the 0/1 label; columns are read by position.
Days may be integer study days or ISO dates; integers are written.
"""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .calendar import STUDY_SPAN, CalendarSpan, parse_day
from .domain import BoroughGraph, CensorWindow, DwellingSet, Observation, StudyDesign
from .errors import DomainError
from .sampler import PosteriorSamples

OBS_HEADER = ["id", "x", "y", "borough", "t_from", "t_to", "y"]


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _rows(path: Path, ncol: int) -> Iterable[tuple[int, list[str]]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader, None)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != ncol:
                raise DomainError(f"{path}:{lineno}: expected {ncol} columns, got {len(row)}")
            yield lineno, row


def read_observations(path: Path, span: CalendarSpan = STUDY_SPAN) -> list[Observation]:
    out = []
    for lineno, (oid, x, y, b, t0, t1, lab) in _rows(path, 7):
        try:
            w = CensorWindow(parse_day(t0, span), parse_day(t1, span))
            out.append(Observation(oid, float(x), float(y), int(b), w, int(lab)))
        except ValueError as e:
            raise DomainError(f"{path}:{lineno}: {e}") from None
    return out


def write_observations(path: Path, observations: Iterable[Observation]) -> None:
    write_csv(path, OBS_HEADER, ((o.id, o.x, o.y, o.borough, o.window.t_from, o.window.t_to, o.label)
                                 for o in observations))


def read_adjacency(path: Path, n_boroughs: int | None = None) -> BoroughGraph:
    pairs = [(int(a), int(b)) for _, (a, b) in _rows(path, 2)]
    n = n_boroughs or max((max(p) for p in pairs), default=0)
    return BoroughGraph.from_pairs(n, pairs)


def write_adjacency(path: Path, graph: BoroughGraph) -> None:
    write_csv(path, ["borough_a", "borough_b"], sorted(graph.edges))


def read_dwellings(path: Path) -> DwellingSet:
    rows = [r for _, r in _rows(path, 4)]
    cols = list(zip(*rows)) if rows else [(), (), (), ()]
    return DwellingSet(np.array(cols[0], dtype=float), np.array(cols[1], dtype=float),
                       np.array(cols[2], dtype=np.int64), np.array(cols[3], dtype=np.int64))


def write_dwellings(path: Path, d: DwellingSet) -> None:
    write_csv(path, ["x", "y", "borough", "n_units"], zip(d.x, d.y, d.borough, d.n_units))


def read_truth(path: Path) -> dict[str, int]:
    return {oid: int(day) for _, (oid, day) in _rows(path, 2)}


def write_truth(path: Path, truth: dict[str, int]) -> None:
    write_csv(path, ["id", "true_day"], sorted(truth.items()))


def read_design(obs_path: Path, adj_path: Path, span: CalendarSpan = STUDY_SPAN,
                n_boroughs: int | None = None) -> StudyDesign:
    obs = read_observations(obs_path, span)
    graph = read_adjacency(adj_path, n_boroughs)
    return StudyDesign(tuple(obs), graph, span)


def sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_json(path: Path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path: Path):
    with open(path) as fh:
        return json.load(fh)


def write_samples(outdir: Path, samples: PosteriorSamples) -> dict:
    """Write ``draws.csv`` and ``latent_draws.csv``; returns a format description."""
    outdir = Path(outdir)
    write_csv(outdir / "draws.csv", ["chain", "draw", *samples.names],
              ((c, s, *samples.values[c, s]) for c in range(samples.n_chains) for s in range(samples.n_draws)))
    write_csv(outdir / "latent_draws.csv", ["chain", "draw", *samples.censored_ids],
              ((c, s, *samples.latent[c, s]) for c in range(samples.n_chains) for s in range(samples.n_draws)))
    return {
        "draws.csv": "one row per retained draw: chain, draw, then every parameter (float repr)",
        "latent_draws.csv": "one row per retained draw: chain, draw, then the sampled study day "
                            "of each censored case (column = case id)",
        "n_chains": samples.n_chains,
        "n_draws": samples.n_draws,
        "n_weeks": samples.n_weeks,
        "n_boroughs": samples.n_boroughs,
        "acceptance": samples.acceptance,
    }


def read_samples(fitdir: Path, n_weeks: int, n_boroughs: int) -> PosteriorSamples:
    fitdir = Path(fitdir)
    with open(fitdir / "draws.csv", newline="") as fh:
        r = csv.reader(fh)
        names = next(r)[2:]
        rows = [row for row in r if row]
    with open(fitdir / "latent_draws.csv", newline="") as fh:
        r = csv.reader(fh)
        ids = next(r)[2:]
        lrows = [row for row in r if row]
    n_chains = max(int(row[0]) for row in rows) + 1 if rows else 0
    n_draws = len(rows) // max(n_chains, 1)
    values = np.array([[float(v) for v in row[2:]] for row in rows]).reshape(n_chains, n_draws, len(names))
    latent = np.array([[int(v) for v in row[2:]] for row in lrows], dtype=np.int32).reshape(n_chains, n_draws,
                                                                                              len(ids))
    return PosteriorSamples(names, values, ids, latent, n_weeks, n_boroughs)
