"""Poisson observation model for daily (infected, recovered, deaths) counts.

All evaluation happens in log space; observed counts reach ~1e5 and the
factorial term overflows any direct pmf computation long before that.
Susceptible and exposed compartments are latent and never enter the
likelihood.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import StateVector


@dataclass(frozen=True)
class Observation:
    """One day's observed counts: active infected, cumulative recovered/deaths."""

    day: int
    infected: int
    recovered: int
    deaths: int

    def __post_init__(self):
        for name in ("infected", "recovered", "deaths"):
            v = getattr(self, name)
            if v < 0:
                raise ValueError(f"{name} must be >= 0, got {v!r}")

    def counts(self) -> tuple[int, int, int]:
        return (self.infected, self.recovered, self.deaths)


def poisson_logpmf(k: int, lam: float) -> float:
    """log P(K = k) for K ~ Poisson(lam).

    Uses k*ln(lam) - lam - lnGamma(k+1).  The lam = 0 boundary returns 0
    for k = 0 (certain event) and -inf for k > 0.
    """
    if k < 0:
        raise ValueError(f"count must be >= 0, got {k!r}")
    if lam < 0 or not math.isfinite(lam):
        raise ValueError(f"rate must be finite and >= 0, got {lam!r}")
    if lam == 0.0:
        return 0.0 if k == 0 else -math.inf
    return k * math.log(lam) - lam - math.lgamma(k + 1)


def poisson_logpmf_arrays(k: int, lam: np.ndarray) -> np.ndarray:
    """Vectorized ``poisson_logpmf`` for one count against many rates."""
    if k < 0:
        raise ValueError(f"count must be >= 0, got {k!r}")
    lam = np.asarray(lam, dtype=float)
    if (lam < 0).any() or not np.isfinite(lam).all():
        raise ValueError("rates must be finite and >= 0")
    out = np.full(lam.shape, -math.inf)
    pos = lam > 0.0
    if pos.any():
        lgamma_k1 = math.lgamma(k + 1)
        with np.errstate(divide="ignore"):
            out[pos] = k * np.log(lam[pos]) - lam[pos] - lgamma_k1
    if k == 0:
        out[~pos] = 0.0
    return out


def obs_loglik(obs: Observation, means: StateVector) -> float:
    """Joint log-likelihood of one day's counts against model means.

    Sums independent Poisson terms for the I, R and D channels; the S and E
    means are latent and ignored.
    """
    return (
        poisson_logpmf(obs.infected, means.i)
        + poisson_logpmf(obs.recovered, means.r)
        + poisson_logpmf(obs.deaths, means.d)
    )


def obs_loglik_arrays(obs: Observation, states: np.ndarray) -> np.ndarray:
    """Vectorized ``obs_loglik`` against rows of a (n, 5) state array."""
    return (
        poisson_logpmf_arrays(obs.infected, states[:, 2])
        + poisson_logpmf_arrays(obs.recovered, states[:, 3])
        + poisson_logpmf_arrays(obs.deaths, states[:, 4])
    )
