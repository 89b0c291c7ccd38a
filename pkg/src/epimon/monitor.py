"""Change detection on the daily posterior parameter stream.

The filter emits n_p retained rate vectors per day.  This module differences
them with a single backward lag, smooths the per-day mean difference with a
multivariate EWMA, and tests the smoothed vector against its moving
covariance with a Hotelling T^2 statistic.  A stable epidemic keeps the mean
difference near (0, 0, 0, 0); a transmission change drags it away faster
than the covariance adapts, pushing T^2 over the chi-square(4) limit.

Row i of a difference matrix pairs the i-th retained sample of day t with
the i-th of day t-1.  Resampling reshuffles ancestry every day, so the pair
is positional rather than genealogical; the differencing formula is applied
literally and this is a documented modeling quirk, not an oversight.

Delta columns are ordered (alpha, gamma, beta, eta), not the storage order
of the parameter arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

# Maps parameter-array storage order (alpha, beta, gamma, eta) onto the
# monitored column order (alpha, gamma, beta, eta).
_MONITOR_COLUMNS = (0, 2, 1, 3)

_RIDGE_EPS = 1e-10


class SingularCovarianceError(RuntimeError):
    """Moving covariance is not invertible even after ridge repair."""


@dataclass(frozen=True)
class DeltaSample:
    """One day's lag-1 sample differences with their mean and scatter.

    deltas : (n_p, 4) rows of (d_alpha, d_gamma, d_beta, d_eta)
    mean   : column means of deltas
    cov    : sample covariance of the rows, 1/(n_p - 1) normalization
    """

    day: int
    deltas: np.ndarray
    mean: np.ndarray
    cov: np.ndarray


@dataclass(frozen=True)
class MewmaState:
    """EWMA-smoothed mean difference and its moving covariance at one day.

    lam is the smoothing coefficient in (0, 1]; larger values forget the
    past faster.  t2 and signaled are filled in by the chart driver after
    the recursion update.
    """

    day: int
    mewma: np.ndarray
    v: np.ndarray
    lam: float
    t2: float = 0.0
    signaled: bool = False

    def __post_init__(self):
        if not 0.0 < self.lam <= 1.0:
            raise ValueError("lam must be in (0, 1]")


def difference_samples(curr: np.ndarray, prev: np.ndarray, day: int = 0) -> DeltaSample:
    """Lag-1 differences of two consecutive days' retained samples.

    ``curr`` and ``prev`` are (n_p, 4) arrays in parameter storage order
    (alpha, beta, gamma, eta); the result is reordered into the monitored
    column order.  Row i of curr is paired with row i of prev.
    """
    curr = np.asarray(curr, dtype=float)
    prev = np.asarray(prev, dtype=float)
    if curr.shape != prev.shape or curr.ndim != 2 or curr.shape[1] != 4:
        raise ValueError(
            f"expected matching (n_p, 4) sample arrays, got {curr.shape} and {prev.shape}"
        )
    if len(curr) < 2:
        raise ValueError("need at least two samples for a covariance")
    deltas = (curr - prev)[:, _MONITOR_COLUMNS]
    mean = deltas.mean(axis=0)
    cov = np.cov(deltas, rowvar=False, ddof=1)
    return DeltaSample(day=day, deltas=deltas, mean=mean, cov=cov)


def mewma_update(state: MewmaState, delta: DeltaSample) -> MewmaState:
    """Advance the smoothing recursions by one day.

    mewma(t) = lam * mean(t) + (1 - lam) * mewma(t-1)
    v(t)     = lam^2 * cov(t) + (1 - lam)^2 * v(t-1)
    """
    if delta.day != state.day + 1:
        raise ValueError(
            f"state is at day {state.day}, cannot apply a day-{delta.day} difference"
        )
    lam = state.lam
    mewma = lam * delta.mean + (1.0 - lam) * state.mewma
    v = lam**2 * delta.cov + (1.0 - lam) ** 2 * state.v
    v = 0.5 * (v + v.T)
    return MewmaState(day=delta.day, mewma=mewma, v=v, lam=lam)


def t2(state: MewmaState) -> float:
    """Hotelling statistic mewma' v^{-1} mewma, via a linear solve.

    The diagonal is ridged by eps * trace(v) / 4 before solving, which keeps
    near-degenerate covariances (concentrated posteriors collapse whole
    directions) invertible without visibly distorting healthy ones.
    """
    if not state.mewma.any():
        return 0.0
    v = state.v + _RIDGE_EPS * (np.trace(state.v) / 4.0) * np.eye(4)
    try:
        x = np.linalg.solve(v, state.mewma)
    except np.linalg.LinAlgError as exc:
        raise SingularCovarianceError(
            f"day {state.day}: moving covariance singular beyond ridge repair"
        ) from exc
    val = float(state.mewma @ x)
    if not math.isfinite(val):
        raise SingularCovarianceError(
            f"day {state.day}: covariance solve produced a non-finite statistic"
        )
    # Roundoff on a PSD system can land epsilon-negative; anything materially
    # negative means v was not PSD at all.
    if val < 0.0:
        if val > -1e-8:
            return 0.0
        raise SingularCovarianceError(
            f"day {state.day}: covariance not positive semi-definite (T^2 = {val})"
        )
    return val


def check_signal(state: MewmaState, limit: float) -> bool:
    """True iff the computed statistic exceeds the control limit."""
    if limit <= 0:
        raise ValueError("limit must be > 0")
    return state.t2 > limit


def chi2_cdf_even_df(x: float, df: int) -> float:
    """Chi-square CDF for even df via the closed-form Erlang series.

    For df = 2m the distribution is Gamma(m, 2), whose CDF is
    1 - exp(-x/2) * sum_{k<m} (x/2)^k / k!.
    """
    if df < 2 or df % 2 != 0:
        raise ValueError("closed form requires even df >= 2")
    if x <= 0:
        return 0.0
    half = x / 2.0
    term = 1.0
    total = 1.0
    for k in range(1, df // 2):
        term *= half / k
        total += term
    return 1.0 - math.exp(-half) * total


def chi2_quantile(p: float, df: int) -> float:
    """Invert the even-df chi-square CDF by bisection.

    The 0.95 quantile at df=4 is the default control limit of the chart
    (9.4877, quoted as 9.48).
    """
    if not 0.0 < p < 1.0:
        raise ValueError("p must be in (0, 1)")
    lo, hi = 0.0, 1.0
    while chi2_cdf_even_df(hi, df) < p:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if chi2_cdf_even_df(mid, df) < p:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-12:
            break
    return 0.5 * (lo + hi)


# Conventional smoothing coefficients swept by the CLI in one invocation.
SWEEP_LAMBDAS = (0.1, 0.15, 0.2, 0.25, 0.3)


def run_monitor_arrays(
    days, samples: np.ndarray, lam: float = 0.2, limit: float | None = None
) -> list[MewmaState]:
    """Run the chart over a (T, n_p, 4) stack of daily posterior samples.

    ``days[t]`` labels ``samples[t]``; differences exist from the second day
    on, so T - 1 states come back.  The recursion starts on target
    (mewma = 0) with v seeded by the first difference's covariance, which
    avoids a singular first solve.

    ``limit=None`` recomputes the chi-square(4) 0.95 quantile; pass a number
    (e.g. the conventional 9.48) to pin it.
    """
    days = list(days)
    samples = np.asarray(samples, dtype=float)
    if len(days) != len(samples):
        raise ValueError("days and samples must have equal length")
    if len(days) < 2:
        raise ValueError("need at least two filter days to difference")
    if limit is None:
        limit = chi2_quantile(0.95, 4)
    deltas = [
        difference_samples(samples[t], samples[t - 1], day=days[t])
        for t in range(1, len(days))
    ]
    state = MewmaState(
        day=deltas[0].day - 1,
        mewma=np.zeros(4),
        v=deltas[0].cov,
        lam=lam,
    )
    records = []
    for delta in deltas:
        state = mewma_update(state, delta)
        state = replace(state, t2=t2(state))
        state = replace(state, signaled=check_signal(state, limit))
        records.append(state)
    return records


def run_monitor(outputs, lam: float = 0.2, limit: float | None = None) -> list[MewmaState]:
    """Run the chart over consecutive filter outputs (see run_monitor_arrays)."""
    outputs = list(outputs)
    if len(outputs) < 2:
        raise ValueError("need at least two filter days to difference")
    days = [o.day for o in outputs]
    samples = np.stack([o.posterior_samples for o in outputs])
    return run_monitor_arrays(days, samples, lam=lam, limit=limit)
