from __future__ import annotations

import numpy as np
import pytest

from aoristic_bayes import io
from aoristic_bayes.config import RunConfig, load_config
from aoristic_bayes.domain import BoroughGraph
from aoristic_bayes.errors import DomainError
from aoristic_bayes.sampler import SamplerConfig, run
from aoristic_bayes.studygen import simulate_scenario, synthetic_city

from conftest import MONDAY_SPAN, make_design


def test_observations_round_trip(tmp_path):
    d = simulate_scenario(2, seed=1, n_cases=50, reference_cases=20).design
    path = tmp_path / "obs.csv"
    io.write_observations(path, d.observations)
    assert path.read_text().splitlines()[0] == "id,x,y,borough,t_from,t_to,y"
    assert tuple(io.read_observations(path)) == d.observations


def test_iso_dates_are_accepted(tmp_path):
    path = tmp_path / "obs.csv"
    path.write_text("id,x,y,borough,t_from,t_to,y\na,1.5,2.5,3,2016-01-01,2016-01-03,1\nb,0,0,1,7,7,0\n")
    a, b = io.read_observations(path)
    assert (a.window.t_from, a.window.t_to, a.y, a.label) == (1, 3, 2.5, 1)
    assert (b.window.t_from, b.label) == (7, 0)


@pytest.mark.parametrize("row", ["a,1,2,3,4,1", "a,1,2,x,4,5,1", "a,1,2,3,2018-05-01,2018-05-02,1"])
def test_malformed_rows(tmp_path, row):
    path = tmp_path / "obs.csv"
    path.write_text("id,x,y,borough,t_from,t_to,y\n" + row + "\n")
    with pytest.raises(DomainError):
        io.read_observations(path)


def test_graph_dwellings_truth_round_trip(tmp_path):
    dw, g = synthetic_city(1, n_locations=200)
    io.write_adjacency(tmp_path / "adj.csv", g)
    assert io.read_adjacency(tmp_path / "adj.csv") == g
    io.write_dwellings(tmp_path / "dw.csv", dw)
    back = io.read_dwellings(tmp_path / "dw.csv")
    assert np.array_equal(back.x, dw.x) and np.array_equal(back.n_units, dw.n_units)
    truth = {"e000002": 5, "e000001": 9}
    io.write_truth(tmp_path / "t.csv", truth)
    assert io.read_truth(tmp_path / "t.csv") == truth


def test_samples_round_trip_exactly(tmp_path):
    d = make_design([(t, t, int(t % 3 == 0), 1 + t % 2) for t in range(1, 29)] + [(3, 6, 1, 1)])
    fit = run(d, config=SamplerConfig(n_chains=2, n_iterations=60, n_burnin=20, thin=4, seed=1))
    io.write_samples(tmp_path, fit)
    back = io.read_samples(tmp_path, fit.n_weeks, fit.n_boroughs)
    assert back.names == fit.names and back.censored_ids == fit.censored_ids
    assert np.array_equal(back.values, fit.values) and np.array_equal(back.latent, fit.latent)


def test_config_file_and_overrides(tmp_path):
    cfg_path = tmp_path / "run.cfg"
    cfg_path.write_text("# comment\nseed = 5\nn_iterations = 2000\nn_burnin = 500\nstep_delta = 0.2\n"
                        "gamma_u_rate = 0.05\nblock_moves = no\nstart_date = 2016-01-04\nn_days = 28\n")
    cfg = load_config(cfg_path, {"seed": "9"})
    assert cfg.seed == 9 and cfg.n_iterations == 2000 and cfg.steps["delta"] == 0.2
    assert cfg.gamma["u"] == (1.0, 0.05) and cfg.block_moves is False
    assert cfg.span() == MONDAY_SPAN
    assert cfg.priors().gamma_u == (1.0, 0.05)
    sc = cfg.sampler()
    assert sc.seed == 9 and sc.step("delta") == 0.2 and not sc.block_moves


def test_config_text_round_trip(tmp_path):
    cfg = load_config(None, {"mode": "complete-cases", "thin": "7", "gamma_delta_shape": "2.5",
                             "n_boroughs": "12"})
    path = tmp_path / "again.cfg"
    path.write_text(cfg.to_text())
    assert load_config(path) == cfg
    assert load_config(None) == RunConfig()


@pytest.mark.parametrize("key, value", [("seeds", "1"), ("mode", "partial"), ("n_chains", "two"),
                                        ("gamma_w_rate", "1"), ("gamma_u_scale", "1"),
                                        ("block_moves", "maybe"), ("n_burnin", "99999999")])
def test_bad_config_entries(key, value):
    with pytest.raises(DomainError):
        load_config(None, {key: value})


def test_missing_key_value_separator(tmp_path):
    p = tmp_path / "bad.cfg"
    p.write_text("seed 4\n")
    with pytest.raises(DomainError):
        load_config(p)


def test_adjacency_with_explicit_size(tmp_path):
    g = BoroughGraph.from_pairs(4, [(1, 2), (3, 4)])
    io.write_adjacency(tmp_path / "a.csv", g)
    assert io.read_adjacency(tmp_path / "a.csv", 4) == g
