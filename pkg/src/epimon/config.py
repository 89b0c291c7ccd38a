"""Run configuration with layered sources: flags over file over defaults.

Defaults reproduce the reference Qatar analysis out of the box: sampler
sizes (n_c=10000, n_p=1000, n_b=10), mean-parameterized Exponential priors,
the 2020-02-29 anchor with initial state (2782000, 3, 1, 0, 0), smoothing
coefficient 0.2 and control limit 9.48.

The config file is plain ``key = value`` lines (``#`` comments allowed)
using the field names below; values are coerced by field type.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from datetime import date
from pathlib import Path

from .dynamics import StateVector
from .filter import FilterConfig, KernelSpec, PriorSpec


@dataclass(frozen=True)
class RunConfig:
    data: str | None = None
    region: str = "Qatar"
    start_date: date = date(2020, 2, 29)
    days: int | None = None
    n_c: int = 10_000
    n_p: int = 1_000
    n_b: int = 10
    substeps: int = 10
    sigma_log: float = 0.1
    lam: float = 0.2
    control_limit: float = 9.48
    mean_alpha: float = 2.0 / 4_450_000.0
    mean_beta: float = 1.0 / 105.0
    mean_gamma: float = 1.0 / 14.0
    mean_eta: float = 1.0 / 9_500.0
    init_s: float = 2_782_000.0
    init_e: float = 3.0
    init_i: float = 1.0
    init_r: float = 0.0
    init_d: float = 0.0
    master_seed: int = 0
    out: str = "out"
    prior_in_weight: bool = True

    def __post_init__(self):
        for name in ("n_c", "n_p", "n_b", "substeps"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not 0.0 < self.lam <= 1.0:
            raise ValueError("lam must be in (0, 1]")
        if not self.control_limit > 0:
            raise ValueError("control_limit must be > 0")
        for name in ("mean_alpha", "mean_beta", "mean_gamma", "mean_eta"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if not self.sigma_log > 0:
            raise ValueError("sigma_log must be > 0")
        if self.days is not None and self.days < 1:
            raise ValueError("days must be >= 1")

    def prior(self) -> PriorSpec:
        return PriorSpec(self.mean_alpha, self.mean_beta, self.mean_gamma, self.mean_eta)

    def kernel(self) -> KernelSpec:
        return KernelSpec(self.sigma_log)

    def init_state(self) -> StateVector:
        return StateVector(self.init_s, self.init_e, self.init_i, self.init_r, self.init_d)

    def filter_config(self) -> FilterConfig:
        return FilterConfig(
            n_c=self.n_c,
            n_p=self.n_p,
            n_b=self.n_b,
            substeps=self.substeps,
            sigma_log=self.sigma_log,
            prior_in_weight=self.prior_in_weight,
            master_seed=self.master_seed,
        )


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(name: str, raw: str):
    if name not in _FIELD_TYPES:
        raise ValueError(f"unknown config key {name!r}")
    raw = raw.strip()
    ftype = _FIELD_TYPES[name]
    if name in ("data", "region", "out"):
        return raw
    if name == "start_date":
        return date.fromisoformat(raw)
    if name == "prior_in_weight":
        low = raw.lower()
        if low in ("true", "on", "1", "yes"):
            return True
        if low in ("false", "off", "0", "no"):
            return False
        raise ValueError(f"{name}: expected a boolean, got {raw!r}")
    if ftype in ("int", "int | None"):
        return int(raw)
    return float(raw)


def load_config_file(path) -> dict:
    """Parse ``key = value`` lines into a coerced field dict."""
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ValueError(f"{path}, line {lineno}: expected key = value")
        key, _, raw = stripped.partition("=")
        try:
            values[key.strip()] = _coerce(key.strip(), raw)
        except ValueError as exc:
            raise ValueError(f"{path}, line {lineno}: {exc}") from None
    return values


def build_config(file_path=None, overrides: dict | None = None) -> RunConfig:
    """Merge defaults, an optional config file, and explicit overrides."""
    merged = {}
    if file_path is not None:
        merged.update(load_config_file(file_path))
    if overrides:
        merged.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig(**merged)
