"""Run configuration from a flat ``key = value`` file plus command-line overrides.

Recognised keys::

    seed, mode
    n_chains, n_iterations, n_burnin, thin, adapt_target, block_moves, n_jobs
    step_alpha, step_beta, step_delta, step_epsilon, step_u, step_v
    fixed_effect_variance
    gamma_delta_shape, gamma_delta_rate   (likewise epsilon, u, v)
    start_date, n_days, n_boroughs
    n_cases, reference_cases, ratio

Blank lines and ``#`` comments are ignored.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .calendar import CalendarSpan
from .errors import DomainError
from .model import PriorSpec
from .sampler import BLOCKS, DEFAULT_STEPS, MODES, SamplerConfig


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise DomainError(f"not a boolean: {text!r}")


@dataclass
class RunConfig:
    seed: int = 0
    mode: str = "full"
    n_chains: int = 4
    n_iterations: int = 50_000
    n_burnin: int = 10_000
    thin: int = 10
    adapt_target: float = 0.44
    block_moves: bool = True
    n_jobs: int = 1
    steps: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_STEPS))
    fixed_effect_variance: float = 1000.0
    gamma: dict[str, tuple[float, float]] = field(default_factory=lambda: {
        "delta": (1.0, 0.5), "epsilon": (1.0, 0.5), "u": (1.0, 0.01), "v": (1.0, 0.01)})
    start_date: str = "2016-01-01"
    n_days: int = 731
    n_boroughs: int | None = None
    n_cases: int = 3000
    reference_cases: int = 2626
    ratio: int = 5

    def set(self, key: str, value: str) -> None:
        key = key.strip()
        value = value.strip()
        try:
            if key.startswith("step_") and key[5:] in BLOCKS:
                self.steps[key[5:]] = float(value)
            elif key.startswith("gamma_"):
                _, name, part = key.split("_")
                shape, rate = self.gamma[name]
                self.gamma[name] = (float(value), rate) if part == "shape" else (shape, float(value))
                if part not in ("shape", "rate"):
                    raise KeyError(key)
            else:
                types = {f.name: f.type for f in fields(self)}
                if key not in types or key in ("steps", "gamma"):
                    raise KeyError(key)
                t = types[key]
                if key == "n_boroughs":
                    setattr(self, key, int(value) if value.lower() not in ("", "none") else None)
                elif "bool" in t:
                    setattr(self, key, _bool(value))
                elif "int" in t:
                    setattr(self, key, int(value))
                elif "float" in t:
                    setattr(self, key, float(value))
                else:
                    setattr(self, key, value)
        except (KeyError, ValueError):
            raise DomainError(f"bad config entry {key} = {value!r}") from None
        if self.mode not in MODES:
            raise DomainError(f"mode must be one of {MODES}")

    def update_from_file(self, path: Path) -> None:
        for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DomainError(f"{path}:{lineno}: expected key = value")
            k, v = line.split("=", 1)
            self.set(k, v)

    def sampler(self) -> SamplerConfig:
        return SamplerConfig(self.n_chains, self.n_iterations, self.n_burnin, self.thin, self.seed,
                             dict(self.steps), self.adapt_target, self.block_moves, self.n_jobs)

    def priors(self) -> PriorSpec:
        g = self.gamma
        return PriorSpec(self.fixed_effect_variance, g["delta"], g["epsilon"], g["u"], g["v"])

    def span(self) -> CalendarSpan:
        return CalendarSpan(dt.date.fromisoformat(self.start_date), self.n_days)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["gamma"] = {k: list(v) for k, v in self.gamma.items()}
        return d

    def to_text(self) -> str:
        """Render as a config file that loads back to an equal object."""
        lines = []
        for f in fields(self):
            val = getattr(self, f.name)
            if f.name == "steps":
                lines += [f"step_{k} = {v!r}" for k, v in val.items()]
            elif f.name == "gamma":
                for k, (shape, rate) in val.items():
                    lines += [f"gamma_{k}_shape = {shape!r}", f"gamma_{k}_rate = {rate!r}"]
            else:
                lines.append(f"{f.name} = {val}")
        return "\n".join(lines) + "\n"


def load_config(path: Path | None = None, overrides: dict[str, str] | None = None) -> RunConfig:
    cfg = RunConfig()
    if path is not None:
        cfg.update_from_file(path)
    for k, v in (overrides or {}).items():
        cfg.set(k, v)
    # validate eagerly
    cfg.sampler(), cfg.priors(), cfg.span()
    return cfg
