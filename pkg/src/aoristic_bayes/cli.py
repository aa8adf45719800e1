"""Command-line entry point: ``aoristic-bayes <command> ...``.

Exit codes: 0 success, 1 usage, 2 data validation, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import copy
import logging
import sys
import time
from importlib import metadata
from pathlib import Path

import numpy as np

from . import io
from .aoristic import aoristic_aggregate, exact_only_aggregate
from .calendar import DOW_NAMES
from .config import RunConfig, load_config
from .criticism import DEFAULT_CUTOFFS, HIST_EDGES, confusion, f1, mcc, metric_posterior, pi_hat, pi_hat_split
from .domain import BoroughGraph, StudyDesign, validate
from .errors import DomainError, ValidationError
from .sampler import PosteriorSamples, impute_argmax, run, summarize
from .studygen import complete_cases_filter, describe_scenarios, simulate_scenario

log = logging.getLogger("aoristic_bayes")


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


def version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


# -- helpers ---------------------------------------------------------------------

def _config(args, **extra) -> RunConfig:
    overrides = dict(kv.split("=", 1) for kv in (args.set or []) if "=" in kv)
    if any("=" not in kv for kv in (args.set or [])):
        raise UsageError("--set expects KEY=VALUE")
    for key, val in extra.items():
        if val is not None:
            overrides[key] = str(val)
    if args.config is not None and not Path(args.config).is_file():
        raise UsageError(f"config file not found: {args.config}")
    try:
        return load_config(args.config, overrides)
    except DomainError as e:
        raise UsageError(str(e)) from None


def _input(path) -> Path:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"input file not found: {p}")
    return p


def _outdir(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _load_design(obs: Path, adj: Path, cfg: RunConfig) -> StudyDesign:
    try:
        return io.read_design(obs, adj, cfg.span(), cfg.n_boroughs)
    except ValidationError:
        raise
    except (DomainError, ValueError) as e:
        raise DataError(str(e)) from None


def _manifest(outdir: Path, command: str, cfg: RunConfig | None, inputs: dict[str, Path],
              outputs: list[str], **extra) -> None:
    doc = {
        "command": command,
        "software": {"package": "aoristic_bayes", "version": version(),
                     "numpy": np.__version__},
        "inputs": {role: {"file": p.name, "sha256": io.sha256(p)} for role, p in sorted(inputs.items())},
        "outputs": {name: io.sha256(outdir / name) for name in sorted(outputs)},
    }
    if cfg is not None:
        doc["config"] = cfg.as_dict()
        doc["config_text"] = cfg.to_text()
    doc.update(extra)
    io.write_json(outdir / "manifest.json", doc)


def parse_cutoffs(text: str) -> list[float]:
    """``lo:hi:step`` (inclusive) or a comma-separated list."""
    try:
        if ":" in text:
            lo, hi, step = (float(x) for x in text.split(":"))
            if step <= 0 or hi < lo:
                raise ValueError
            n = int(round((hi - lo) / step)) + 1
            return [round(lo + k * step, 10) for k in range(n)]
        return [float(x) for x in text.split(",")]
    except ValueError:
        raise UsageError(f"bad cutoff specification {text!r}") from None


# -- simulate --------------------------------------------------------------------

def cmd_simulate(args) -> int:
    if args.scenario not in range(1, 7):
        raise UsageError(f"invalid scenario {args.scenario}; valid scenarios: {describe_scenarios()}")
    cfg = _config(args, seed=args.seed, n_cases=args.n_cases, reference_cases=args.reference_cases,
                  ratio=args.ratio)
    out = _outdir(args.out)
    study = simulate_scenario(args.scenario, cfg.seed, cfg.n_cases, cfg.reference_cases, cfg.ratio, cfg.span())
    d = study.design
    io.write_observations(out / "observations.csv", d.observations)
    io.write_truth(out / "truth.csv", study.truth)
    io.write_adjacency(out / "adjacency.csv", d.graph)
    spec = study.spec
    n_cens = len(study.truth)
    _manifest(out, "simulate", cfg, {}, ["observations.csv", "truth.csv", "adjacency.csv"],
              scenario={"scenario_id": spec.scenario_id, "n_cases": spec.n_cases,
                        "censor_rate_exp_lambda": spec.censor_rate_exp_lambda,
                        "dow_probs": spec.dow_probs, "week_probs": spec.week_probs,
                        "censoring_seed": spec.seed},
              seed=cfg.seed,
              counts={"cases": d.n_cases, "controls": len(d) - d.n_cases, "censored": n_cens,
                      "boroughs": d.graph.n_boroughs})
    log.info("scenario %d: %d cases (%d censored), %d controls", args.scenario, d.n_cases, n_cens,
             len(d) - d.n_cases)
    return 0


# -- fit ---------------------------------------------------------------------------

def write_fit(out: Path, design: StudyDesign, samples: PosteriorSamples, cfg: RunConfig,
              inputs: dict[str, Path]) -> None:
    """Write every fit output plus the manifest."""
    summ = summarize(samples)
    io.write_csv(out / "summary.csv", ["name", "mean", "sd", "q025", "q975", "rhat", "ess"],
                 ((s.name, s.mean, s.sd, s.q025, s.q975, s.rhat, s.ess) for s in summ))
    draws_doc = io.write_samples(out, samples)
    a = design.arrays
    rows = []
    for k, oid in enumerate(samples.censored_ids):
        p = design.position(oid)
        lo, hi = int(a.t_from[p]), int(a.t_to[p])
        counts = np.bincount(samples.latent[:, :, k].ravel() - lo, minlength=hi - lo + 1)
        probs = counts / counts.sum()
        rows += [(oid, lo + j, float(probs[j])) for j in range(hi - lo + 1)]
    io.write_csv(out / "imputation.csv", ["case_id", "day", "probability"], rows)
    pi = pi_hat(samples, design)
    io.write_csv(out / "pi_hat.csv", ["id", "pi_hat"], zip((o.id for o in design.observations), pi))
    io.write_observations(out / "fit_observations.csv", design.observations)
    io.write_adjacency(out / "adjacency.csv", design.graph)
    outputs = ["summary.csv", "draws.csv", "latent_draws.csv", "imputation.csv", "pi_hat.csv",
               "fit_observations.csv", "adjacency.csv"]
    _manifest(out, "fit", cfg, inputs, outputs,
              mode=cfg.mode, seed=cfg.seed,
              chain_seeds=[[cfg.seed, c] for c in range(cfg.n_chains)],
              draws=draws_doc,
              counts={"observations": len(design), "cases": design.n_cases,
                      "censored": len(samples.censored_ids)},
              n_boroughs=design.graph.n_boroughs,
              notes={"latent_dates": "censored-case days are sampled jointly with the parameters; "
                                     "metrics use each draw's own sampled days",
                     "fit_observations.csv": "the observations actually fitted (complete-cases mode "
                                             "drops censored cases)"})


def _fit(design: StudyDesign, cfg: RunConfig) -> tuple[StudyDesign, PosteriorSamples]:
    t0 = time.perf_counter()
    samples = run(design, cfg.priors(), cfg.sampler(), cfg.mode)
    log.info("%s fit: %d chains x %d iterations in %.1f s", cfg.mode, cfg.n_chains, cfg.n_iterations,
             time.perf_counter() - t0)
    fitted = complete_cases_filter(design) if cfg.mode == "complete-cases" else design
    return fitted, samples


def _sampler_overrides(args) -> dict:
    return dict(seed=args.seed, mode=getattr(args, "mode", None), n_chains=args.n_chains,
                n_iterations=args.n_iterations, n_burnin=args.n_burnin, thin=args.thin, n_jobs=args.n_jobs)


def cmd_fit(args) -> int:
    cfg = _config(args, **_sampler_overrides(args))
    obs, adj = _input(args.input), _input(args.adjacency)
    design = _load_design(obs, adj, cfg)
    out = _outdir(args.out)
    fitted, samples = _fit(design, cfg)
    write_fit(out, fitted, samples, cfg, {"observations": obs, "adjacency": adj})
    return 0


# -- aoristic ---------------------------------------------------------------------

def cmd_aoristic(args) -> int:
    cfg = _config(args)
    obs = _input(args.input)
    try:
        observations = io.read_observations(obs, cfg.span())
    except DomainError as e:
        raise DataError(str(e)) from None
    n_b = max((o.borough for o in observations), default=1)
    design = StudyDesign(tuple(observations), BoroughGraph.from_pairs(max(n_b, 1), []), cfg.span())
    problems = [v for v in validate(design) if v.rule not in ("borough out of range", "borough has no neighbours")]
    if problems:
        raise ValidationError(problems)
    cases_only = not args.all_observations
    exact = exact_only_aggregate(design, cases_only)
    aor = aoristic_aggregate(design, cases_only)
    out = _outdir(args.out)
    io.write_csv(out / "aoristic_dow.csv", ["bin", "exact_only", "aoristic"],
                 zip(DOW_NAMES, exact.by_dow, aor.by_dow))
    io.write_csv(out / "aoristic_week.csv", ["bin", "exact_only", "aoristic"],
                 zip(range(1, design.span.n_weeks + 1), exact.by_week, aor.by_week))
    _manifest(out, "aoristic", cfg, {"observations": obs}, ["aoristic_dow.csv", "aoristic_week.csv"],
              cases_only=cases_only, counts={"exact_only": exact.n_events, "aoristic": aor.n_events})
    return 0


# -- criticize --------------------------------------------------------------------

def _load_fit(fitdir: Path) -> tuple[dict, RunConfig, StudyDesign, PosteriorSamples]:
    if not (fitdir / "manifest.json").is_file():
        raise UsageError(f"{fitdir} is not a fit directory (no manifest.json)")
    man = io.read_json(fitdir / "manifest.json")
    if man.get("command") != "fit":
        raise UsageError(f"{fitdir} does not hold fit output")
    cfg = RunConfig()
    for line in man["config_text"].splitlines():
        k, v = line.split("=", 1)
        cfg.set(k, v)
    design = _load_design(fitdir / "fit_observations.csv", fitdir / "adjacency.csv",
                          _with_boroughs(cfg, man["n_boroughs"]))
    samples = io.read_samples(fitdir, design.span.n_weeks, design.graph.n_boroughs)
    return man, cfg, design, samples


def _with_boroughs(cfg: RunConfig, n: int) -> RunConfig:
    cfg.n_boroughs = n
    return cfg


def cmd_criticize(args) -> int:
    cutoffs = parse_cutoffs(args.cutoffs) if args.cutoffs else list(DEFAULT_CUTOFFS)
    fitdir = Path(args.fit)
    man, cfg, design, samples = _load_fit(fitdir)
    out = _outdir(args.out)
    try:
        rows = []
        for metric in ("mcc", "f1"):
            for d in metric_posterior(samples, design, cutoffs, metric, dense=args.dense):
                rows.append((d.cutoff, metric, d.q025, d.mean, d.q975))
        pi = pi_hat(samples, design)
    except DomainError as e:
        raise UsageError(str(e)) from None
    io.write_csv(out / "metrics.csv", ["cutoff", "metric", "q025", "mean", "q975"], rows)
    y = design.arrays.y
    conf = []
    for c in cutoffs:
        m = confusion(y, pi, c)
        conf.append((c, m.tp, m.fp, m.fn, m.tn, mcc(m), f1(m)))
    io.write_csv(out / "confusion.csv", ["cutoff", "tp", "fp", "fn", "tn", "mcc", "f1"], conf)
    qrows, hrows = [], []
    for split in ("case_vs_control", "certain_vs_uncertain"):
        for g in pi_hat_split(samples, design, split, pi):
            qrows.append((split, g.label, g.n, *g.quantiles.values()))
            hrows += [(split, g.label, HIST_EDGES[j], HIST_EDGES[j + 1], int(g.hist[j]))
                      for j in range(len(g.hist))]
    io.write_csv(out / "pi_hat_split.csv", ["split", "group", "n", "q025", "q25", "median", "q75", "q975"], qrows)
    io.write_csv(out / "pi_hat_hist.csv", ["split", "group", "bin_lo", "bin_hi", "count"], hrows)
    fit_inputs = {"fit_manifest": fitdir / "manifest.json", "draws": fitdir / "draws.csv",
                  "latent_draws": fitdir / "latent_draws.csv"}
    _manifest(out, "criticize", None, fit_inputs,
              ["metrics.csv", "confusion.csv", "pi_hat_split.csv", "pi_hat_hist.csv"],
              cutoffs=cutoffs, mode=man.get("mode"), classification_rule="positive when pi > cutoff",
              notes={"latent_dates": "posterior metrics use each draw's own sampled latent dates",
                     "confusion.csv": "point classifier on the posterior mean of pi"})
    return 0


# -- impute-eval ------------------------------------------------------------------

def cmd_impute_eval(args) -> int:
    fitdir = Path(args.fit)
    truth_path = Path(args.truth)
    if not truth_path.is_file():
        raise UsageError(f"truth file not found: {truth_path}")
    man, cfg, design, samples = _load_fit(fitdir)
    try:
        truth = io.read_truth(truth_path)
    except (DomainError, ValueError) as e:
        raise DataError(str(e)) from None
    a = design.arrays
    rows, err = [], {"argmax": [], "midpoint": []}
    for k, oid in enumerate(samples.censored_ids):
        if oid not in truth:
            raise DataError(f"no true day for censored case {oid!r}")
        days, counts = np.unique(samples.latent[:, :, k], return_counts=True)
        argmax = impute_argmax(dict(zip(days.tolist(), counts.tolist())))
        p = design.position(oid)
        mid = (int(a.t_from[p]) + int(a.t_to[p])) // 2
        t = truth[oid]
        rows.append((oid, t, argmax, mid))
        err["argmax"].append(abs(argmax - t))
        err["midpoint"].append(abs(mid - t))
    out = _outdir(args.out)
    io.write_csv(out / "imputation_eval.csv", ["case_id", "true_day", "argmax_day", "midpoint_day"], rows)
    report = {}
    for method, e in err.items():
        arr = np.array(e, dtype=float)
        report[method] = {"mean_abs_error": float(arr.mean()) if len(arr) else None,
                          "hit_rate": float(np.mean(arr == 0)) if len(arr) else None}
    report["n_censored"] = len(rows)
    report["tie_rule"] = "argmax ties go to the earliest day"
    report["midpoint_rule"] = "floor((t_from + t_to) / 2)"
    io.write_json(out / "imputation_report.json", report)
    _manifest(out, "impute-eval", None, {"fit_manifest": fitdir / "manifest.json",
                                          "latent_draws": fitdir / "latent_draws.csv", "truth": truth_path},
              ["imputation_eval.csv", "imputation_report.json"])
    return 0


# -- compare ----------------------------------------------------------------------

EFFECT_HEADER = ["term", "model", "mean", "q025", "q975"]


def effect_tables(fits: dict[str, PosteriorSamples]) -> dict[str, list[tuple]]:
    """Side-by-side effect rows keyed by output file name."""
    tables = {"dow_effects.csv": [], "week_effects.csv": [], "borough_effects.csv": [],
              "global_effects.csv": []}
    for model, samples in fits.items():
        summ = {s.name: s for s in summarize(samples)}
        tables["dow_effects.csv"].append(("beta_Mon", model, 0.0, 0.0, 0.0))
        for name, s in summ.items():
            row = (name, model, s.mean, s.q025, s.q975)
            if name.startswith("beta_"):
                tables["dow_effects.csv"].append(row)
            elif name.startswith(("delta[", "epsilon[")):
                tables["week_effects.csv"].append(row)
            elif name.startswith(("u[", "v[")):
                tables["borough_effects.csv"].append(row)
            else:
                tables["global_effects.csv"].append(row)
    return tables


def cmd_compare(args) -> int:
    cfg = _config(args, **_sampler_overrides(args))
    obs, adj = _input(args.input), _input(args.adjacency)
    design = _load_design(obs, adj, cfg)
    out = _outdir(args.out)
    fits = {}
    for mode in ("complete-cases", "full"):
        mcfg = copy.deepcopy(cfg)
        mcfg.set("mode", mode)
        fitted, samples = _fit(design, mcfg)
        write_fit(_outdir(out / mode), fitted, samples, mcfg, {"observations": obs, "adjacency": adj})
        fits[mode] = samples
    tables = effect_tables(fits)
    for name, rows in tables.items():
        io.write_csv(out / name, EFFECT_HEADER, rows)
    _manifest(out, "compare", cfg, {"observations": obs, "adjacency": adj}, list(tables),
              seed=cfg.seed, models=list(fits), fit_dirs=list(fits))
    return 0


# -- argument parsing -------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value configuration file")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key")


def _sampler_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int)
    p.add_argument("--n-chains", type=int)
    p.add_argument("--n-iterations", type=int)
    p.add_argument("--n-burnin", type=int)
    p.add_argument("--thin", type=int)
    p.add_argument("--n-jobs", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="aoristic-bayes", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    parser.add_argument("--version", action="version", version=version())
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="generate a synthetic scenario dataset")
    p.add_argument("--scenario", type=int, required=True, help=describe_scenarios())
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--n-cases", type=int)
    p.add_argument("--reference-cases", type=int, help="controls = ratio x reference cases")
    p.add_argument("--ratio", type=int)
    p.add_argument("--out", required=True)
    _common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="sample the posterior")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--adjacency", required=True)
    p.add_argument("--mode", choices=("full", "complete-cases"))
    p.add_argument("--out", required=True)
    _sampler_flags(p)
    _common(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("aoristic", help="exact-only and aoristic day-of-week / week tables")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--all-observations", action="store_true", help="include controls")
    _common(p)
    p.set_defaults(func=cmd_aoristic)

    p = sub.add_parser("criticize", help="classification metrics of a fit")
    p.add_argument("--fit", required=True)
    p.add_argument("--cutoffs", default="0.05:0.35:0.05")
    p.add_argument("--dense", action="store_true", help="materialise all fitted probabilities at once")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_criticize)

    p = sub.add_parser("impute-eval", help="argmax and midpoint imputation against the truth")
    p.add_argument("--fit", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_impute_eval)

    p = sub.add_parser("compare", help="fit both models and tabulate effects side by side")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--adjacency", required=True)
    p.add_argument("--out", required=True)
    _sampler_flags(p)
    _common(p)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        print(e, file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 1
    except ValidationError as e:
        print(f"validation error: {e}", file=sys.stderr)
        return 2
    except DataError as e:
        print(f"data error: {e}", file=sys.stderr)
        return 2
    except Exception as e:  # noqa: BLE001
        log.debug("runtime failure", exc_info=True)
        print(f"runtime error: {type(e).__name__}: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
