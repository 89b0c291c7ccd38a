"""SEIRD compartment dynamics: state/parameter types and fixed-step integration.

The model tracks five compartments (susceptible, exposed, infected,
recovered, deaths) driven by four per-day rates (alpha, beta, gamma, eta).
Recovered and deaths are cumulative.  Exposed individuals who never become
symptomatic leave the system at rate gamma without entering the recovered
count, so total mass is not conserved: d(S+E+I+R+D)/dt = -gamma*E.

States are real-valued means, not integer counts; integration is classical
fixed-step RK4 with per-substep clamping of negative undershoot.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)


class IntegrationError(RuntimeError):
    """A compartment became non-finite during integration."""


class UndefinedR0Error(ValueError):
    """Reproduction number is undefined when beta + gamma = 0."""


def _require_finite_nonneg(name, value):
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")
    if value < 0:
        raise ValueError(f"{name} must be >= 0, got {value!r}")


@dataclass(frozen=True)
class ParamVector:
    """The four time-varying rates of the compartment model.

    alpha : transmission rate (per day x individual^2)
    beta  : symptomatic-onset rate (per day)
    gamma : recovery rate (per day)
    eta   : mortality rate (per day)
    """

    alpha: float
    beta: float
    gamma: float
    eta: float

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma", "eta"):
            _require_finite_nonneg(name, getattr(self, name))

    def as_array(self) -> np.ndarray:
        return np.array([self.alpha, self.beta, self.gamma, self.eta], dtype=float)

    @classmethod
    def from_array(cls, arr) -> "ParamVector":
        a, b, g, e = (float(x) for x in arr)
        return cls(a, b, g, e)


@dataclass(frozen=True)
class StateVector:
    """Compartment occupancies at one point in time (real-valued)."""

    s: float
    e: float
    i: float
    r: float
    d: float

    def __post_init__(self):
        for name in ("s", "e", "i", "r", "d"):
            _require_finite_nonneg(name, getattr(self, name))

    def as_array(self) -> np.ndarray:
        return np.array([self.s, self.e, self.i, self.r, self.d], dtype=float)

    @classmethod
    def from_array(cls, arr) -> "StateVector":
        s, e, i, r, d = (float(x) for x in arr)
        return cls(s, e, i, r, d)


@dataclass(frozen=True)
class Trajectory:
    """States at unit-day spacing starting at ``start_day``."""

    start_day: int
    states: tuple

    def __post_init__(self):
        if len(self.states) == 0:
            raise ValueError("trajectory must contain at least one state")

    def day(self, day: int) -> StateVector:
        return self.states[day - self.start_day]

    def __len__(self):
        return len(self.states)


_COMPARTMENTS = ("s", "e", "i", "r", "d")


def rhs_arrays(states: np.ndarray, params: np.ndarray) -> np.ndarray:
    """Vectorized right-hand side of the compartment ODE system.

    Parameters
    ----------
    states : ndarray, shape (n, 5)
        Columns (S, E, I, R, D), one row per particle.
    params : ndarray, shape (n, 4)
        Columns (alpha, beta, gamma, eta).

    Returns
    -------
    ndarray, shape (n, 5)
        Per-day rates of change of each compartment.
    """
    s, e, i = states[:, 0], states[:, 1], states[:, 2]
    alpha, beta, gamma, eta = params[:, 0], params[:, 1], params[:, 2], params[:, 3]
    infection = alpha * s * e
    onset = beta * e
    recovery_i = gamma * i
    death = eta * i
    out = np.empty_like(states)
    out[:, 0] = -infection
    out[:, 1] = infection - onset - gamma * e
    out[:, 2] = onset - recovery_i - death
    out[:, 3] = recovery_i
    out[:, 4] = death
    return out


@dataclass(frozen=True)
class Derivative:
    """Five per-day rates of change; unlike StateVector, fields may be negative."""

    s: float
    e: float
    i: float
    r: float
    d: float

    def as_array(self) -> np.ndarray:
        return np.array([self.s, self.e, self.i, self.r, self.d], dtype=float)


def seird_rhs(state: StateVector, params: ParamVector) -> Derivative:
    """Per-day derivatives of (S, E, I, R, D) at the given state and rates."""
    d = rhs_arrays(state.as_array()[None, :], params.as_array()[None, :])[0]
    return Derivative(*(float(x) for x in d))


def integrate_day_arrays(
    states: np.ndarray, params: np.ndarray, substeps: int = 10
) -> tuple[np.ndarray, int]:
    """Advance every row of ``states`` one day under its own parameter row.

    Classical RK4 with step h = 1/substeps.  Any compartment driven below
    zero by discretization is clamped to zero after each substep.

    Returns
    -------
    (ndarray, int)
        The advanced states and the number of clamped entries.

    Raises
    ------
    IntegrationError
        If any compartment becomes non-finite.
    """
    if substeps < 1:
        raise ValueError("substeps must be >= 1")
    h = 1.0 / substeps
    y = np.array(states, dtype=float, copy=True)
    clamped = 0
    for _ in range(substeps):
        k1 = rhs_arrays(y, params)
        k2 = rhs_arrays(y + 0.5 * h * k1, params)
        k3 = rhs_arrays(y + 0.5 * h * k2, params)
        k4 = rhs_arrays(y + h * k3, params)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        neg = y < 0.0
        if neg.any():
            clamped += int(neg.sum())
            np.maximum(y, 0.0, out=y)
        if not np.isfinite(y).all():
            bad = np.argwhere(~np.isfinite(y))[0]
            raise IntegrationError(
                f"non-finite value in compartment '{_COMPARTMENTS[bad[1]]}' "
                f"(row {bad[0]}) during integration"
            )
    return y, clamped


def integrate_day(state: StateVector, params: ParamVector, substeps: int = 10) -> StateVector:
    """Advance a single state exactly one day (RK4, step 1/substeps)."""
    y, clamped = integrate_day_arrays(
        state.as_array()[None, :], params.as_array()[None, :], substeps
    )
    if clamped:
        log.debug("clamped %d negative compartment value(s) during one-day step", clamped)
    return StateVector.from_array(y[0])


def integrate_days(
    state: StateVector, params: ParamVector, days: int, substeps: int = 10, start_day: int = 0
) -> Trajectory:
    """Integrate ``days`` consecutive one-day steps, keeping every daily state."""
    states = [state]
    for _ in range(days):
        state = integrate_day(state, params, substeps)
        states.append(state)
    return Trajectory(start_day=start_day, states=tuple(states))


def compute_r0(params: ParamVector) -> float:
    """Basic reproduction number alpha / (beta + gamma).

    The mortality path does not enter; eta is ignored by construction.
    """
    denom = params.beta + params.gamma
    if denom == 0.0:
        raise UndefinedR0Error("beta + gamma = 0: reproduction number undefined")
    return params.alpha / denom
