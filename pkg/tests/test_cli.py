from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from aoristic_bayes import io
from aoristic_bayes.calendar import CalendarSpan
from aoristic_bayes.cli import main, parse_cutoffs
from aoristic_bayes.domain import BoroughGraph, CensorWindow, Observation
from aoristic_bayes.studygen import Q4_WEEKS

SPAN = CalendarSpan()
TINY = ["--n-iterations", "60", "--n-burnin", "20", "--thin", "2", "--n-chains", "2", "--seed", "3"]


def files(d: Path) -> dict[str, bytes]:
    return {str(p.relative_to(d)): p.read_bytes() for p in sorted(d.rglob("*")) if p.is_file()}


def run_ok(*argv):
    assert main([str(a) for a in argv]) == 0


@pytest.fixture(scope="module")
def sim(tmp_path_factory):
    out = tmp_path_factory.mktemp("sim")
    run_ok("simulate", "--scenario", 3, "--seed", 7, "--n-cases", 80, "--reference-cases", 20, "--out", out)
    return out


def test_simulate_is_deterministic(sim, tmp_path):
    run_ok("simulate", "--scenario", 3, "--seed", 7, "--n-cases", 80, "--reference-cases", 20, "--out", tmp_path)
    assert files(tmp_path) == files(sim)
    man = json.loads((sim / "manifest.json").read_text())
    assert man["counts"]["controls"] == 100 and man["counts"]["cases"] == 80
    assert man["outputs"]["observations.csv"] == io.sha256(sim / "observations.csv")


@pytest.mark.parametrize("scenario, target", [(4, 0.4), (6, 0.6)])
def test_week_scenario_censoring_in_q4(tmp_path, scenario, target):
    run_ok("simulate", "--scenario", scenario, "--seed", 1, "--n-cases", 3000, "--out", tmp_path)
    truth = io.read_truth(tmp_path / "truth.csv")
    _, week = SPAN.day_lookup()
    q4 = set(Q4_WEEKS)
    n_q4 = cens_q4 = 0
    for o in io.read_observations(tmp_path / "observations.csv"):
        if o.label != 1:
            continue
        day = truth.get(o.id, o.window.t_from)
        if week[day] in q4:
            n_q4 += 1
            cens_q4 += o.id in truth
    frac = cens_q4 / n_q4
    assert abs(frac - target) < 4 * np.sqrt(target * (1 - target) / n_q4)


def test_invalid_scenario_lists_valid_ones(tmp_path, capsys):
    assert main(["simulate", "--scenario", "9", "--seed", "1", "--out", str(tmp_path)]) == 1
    err = capsys.readouterr().err
    assert all(f"{k}:" in err for k in range(1, 7))
    assert not any(tmp_path.iterdir())


def test_exit_codes(sim, tmp_path, capsys):
    assert main(["fit", "--in", str(tmp_path / "nope.csv"), "--adjacency", str(sim / "adjacency.csv"),
                 "--out", str(tmp_path / "f")]) == 1
    assert main(["frobnicate"]) == 1
    bad = tmp_path / "bad.csv"
    bad.write_text("id,x,y,borough,t_from,t_to,y\na,0,0,1,9,3,1\n")
    assert main(["fit", "--in", str(bad), "--adjacency", str(sim / "adjacency.csv"),
                 "--out", str(tmp_path / "f")]) == 2
    assert "t_from" in capsys.readouterr().err
    bad.write_text("id,x,y,borough,t_from,t_to,y\na,0,0,1,3,3,5\n")
    assert main(["aoristic", "--in", str(bad), "--out", str(tmp_path / "a")]) == 2
    assert main(["fit", "--in", str(sim / "observations.csv"), "--adjacency", str(sim / "adjacency.csv"),
                 "--out", str(tmp_path / "f"), "--set", "mode=partial"]) == 1
    assert main(["criticize", "--fit", str(sim), "--out", str(tmp_path / "c")]) == 1


def test_parse_cutoffs():
    assert parse_cutoffs("0.05:0.35:0.05") == [0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35]
    assert parse_cutoffs("0.2,0.3") == [0.2, 0.3]


@pytest.fixture(scope="module")
def pipeline(sim, tmp_path_factory):
    """One pass of every command, run twice into separate roots."""
    roots = []
    for _ in range(2):
        root = tmp_path_factory.mktemp("run")
        run_ok("fit", "--in", sim / "observations.csv", "--adjacency", sim / "adjacency.csv",
               "--out", root / "fit", *TINY)
        run_ok("aoristic", "--in", sim / "observations.csv", "--out", root / "aoristic")
        run_ok("criticize", "--fit", root / "fit", "--out", root / "crit")
        run_ok("impute-eval", "--fit", root / "fit", "--truth", sim / "truth.csv", "--out", root / "imp")
        run_ok("compare", "--in", sim / "observations.csv", "--adjacency", sim / "adjacency.csv",
               "--out", root / "cmp", *TINY)
        roots.append(root)
    return roots


@pytest.mark.parametrize("sub", ["fit", "aoristic", "crit", "imp", "cmp"])
def test_reruns_are_byte_identical(pipeline, sub):
    a, b = pipeline
    fa = files(a / sub)
    assert fa and fa == files(b / sub)


def test_inputs_are_not_modified(sim, pipeline):
    man = json.loads((sim / "manifest.json").read_text())
    for name, digest in man["outputs"].items():
        assert io.sha256(sim / name) == digest


def test_fit_outputs(pipeline, sim):
    fit = pipeline[0] / "fit"
    man = json.loads((fit / "manifest.json").read_text())
    assert man["inputs"]["observations"]["sha256"] == io.sha256(sim / "observations.csv")
    assert man["chain_seeds"] == [[3, 0], [3, 1]]
    for name, digest in man["outputs"].items():
        assert io.sha256(fit / name) == digest
    rows = (fit / "imputation.csv").read_text().splitlines()[1:]
    per_case: dict[str, float] = {}
    for r in rows:
        cid, _, p = r.split(",")
        per_case[cid] = per_case.get(cid, 0.0) + float(p)
    assert set(per_case) == set(io.read_truth(sim / "truth.csv"))
    assert all(abs(v - 1) < 1e-12 for v in per_case.values())
    metrics = (pipeline[0] / "crit" / "metrics.csv").read_text().splitlines()
    assert len(metrics) == 1 + 2 * 7


def test_rerun_from_manifest_config(pipeline, sim, tmp_path):
    fit = pipeline[0] / "fit"
    cfg = tmp_path / "run.cfg"
    cfg.write_text(json.loads((fit / "manifest.json").read_text())["config_text"])
    run_ok("fit", "--in", sim / "observations.csv", "--adjacency", sim / "adjacency.csv",
           "--out", tmp_path / "again", "--config", cfg)
    assert files(tmp_path / "again") == files(fit)


def test_compare_writes_both_models(pipeline):
    cmp = pipeline[0] / "cmp"
    assert (cmp / "complete-cases" / "summary.csv").is_file() and (cmp / "full" / "summary.csv").is_file()
    dow = (cmp / "dow_effects.csv").read_text().splitlines()
    assert dow[0] == "term,model,mean,q025,q975" and len(dow) == 1 + 2 * 7


def write_inputs(tmp_path, records, n_boroughs=2):
    obs = [Observation(f"c{k}", 0.0, 0.0, b, CensorWindow(lo, hi), y) for k, (lo, hi, y, b) in enumerate(records)]
    io.write_observations(tmp_path / "obs.csv", obs)
    io.write_adjacency(tmp_path / "adj.csv", BoroughGraph.from_pairs(n_boroughs, [(1, 2)]))
    return tmp_path / "obs.csv", tmp_path / "adj.csv"


def test_compare_agrees_without_censoring(tmp_path):
    rng = np.random.default_rng(0)
    recs = [(t, t, int(rng.random() < 0.2), 1 + int(rng.random() < 0.5)) for t in rng.integers(1, 732, 150)]
    o, a = write_inputs(tmp_path, recs)
    run_ok("compare", "--in", o, "--adjacency", a, "--out", tmp_path / "cmp", *TINY)
    assert files(tmp_path / "cmp" / "full").keys() == files(tmp_path / "cmp" / "complete-cases").keys()
    for name in ("draws.csv", "summary.csv"):
        assert (tmp_path / "cmp" / "full" / name).read_bytes() == \
            (tmp_path / "cmp" / "complete-cases" / name).read_bytes()


def test_impute_eval_on_uninformative_windows(tmp_path):
    rng = np.random.default_rng(5)
    recs, truth = [], {}
    for k in range(300):
        lo = int(rng.integers(1, 729))
        recs.append((lo, lo + 2, 1, 1 + k % 2))
        truth[f"c{k}"] = lo + int(rng.integers(0, 3))
    recs += [(t, t, 0, 1 + k % 2) for k, t in enumerate(rng.integers(1, 732, 300))]
    o, a = write_inputs(tmp_path, recs)
    io.write_truth(tmp_path / "truth.csv", truth)
    run_ok("fit", "--in", o, "--adjacency", a, "--out", tmp_path / "fit", *TINY)
    run_ok("impute-eval", "--fit", tmp_path / "fit", "--truth", tmp_path / "truth.csv", "--out", tmp_path / "imp")
    rep = json.loads((tmp_path / "imp" / "imputation_report.json").read_text())
    assert rep["n_censored"] == 300
    assert abs(rep["argmax"]["hit_rate"] - 1 / 3) < 4 * np.sqrt(2 / 9 / 300)
    # midpoint truth is recovered exactly by the midpoint rule
    io.write_truth(tmp_path / "mid.csv", {f"c{k}": recs[k][0] + 1 for k in range(300)})
    run_ok("impute-eval", "--fit", tmp_path / "fit", "--truth", tmp_path / "mid.csv", "--out", tmp_path / "imp2")
    rep = json.loads((tmp_path / "imp2" / "imputation_report.json").read_text())
    assert rep["midpoint"]["hit_rate"] == 1.0 and rep["midpoint"]["mean_abs_error"] == 0.0
