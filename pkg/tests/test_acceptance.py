"""Acceptance checklist: ten end-to-end criteria, one pass/fail line each.

Each test prints (and appends to the session acceptance log) a single line
``criterion NN PASS|FAIL <name>: <measured detail>`` before asserting, so a
full run always reports the status of all ten gates in one place.
"""

import json
import math
import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest
from mpmath import mp, mpf
from mpmath import log as mlog
from mpmath import loggamma
from scipy import stats

from epimon.dynamics import ParamVector, StateVector, integrate_day, rhs_arrays
from epimon.filter import (
    STREAM_PREDICTIVE,
    STREAM_SIMULATE,
    FilterConfig,
    KernelSpec,
    ParticleCloud,
    PriorSpec,
    normalize,
    resample,
    run_filter,
    substream,
)
from epimon.likelihood import poisson_logpmf
from epimon.monitor import chi2_quantile, run_monitor_arrays
from epimon.report import nearest_rank, predictive_summary, pseudo_r2, simulate

PKG_ROOT = Path(__file__).resolve().parents[1]
DATA_DIR = PKG_ROOT / "data" / "qatar"

TRUE_THETA = ParamVector(alpha=3e-7, beta=1 / 7, gamma=1 / 14, eta=1 / 200)
QATAR_INIT = StateVector(2_782_000.0, 3.0, 1.0, 0.0, 0.0)
QATAR_PRIOR = PriorSpec(2 / 4_450_000, 1 / 105, 1 / 14, 1 / 9_500)
PRIOR_MEANS = ParamVector(2 / 4_450_000, 1 / 105, 1 / 14, 1 / 9_500)
DEFAULTS = FilterConfig()


def log_line(acceptance_log, num, name, ok, detail):
    line = f"criterion {num:2d} {'PASS' if ok else 'FAIL'} {name}: {detail}"
    acceptance_log.append(line)
    print(line)
    return line


def run_cli(*argv):
    env = dict(os.environ, MPLBACKEND="Agg")
    return subprocess.run(
        [sys.executable, "-m", "epimon", *argv],
        capture_output=True,
        text=True,
        env=env,
        cwd=PKG_ROOT,
    )


@pytest.fixture(scope="module")
def const_run():
    """60 synthetic days at constant known rates, filtered with the defaults."""
    series = simulate(TRUE_THETA, QATAR_INIT, days=60, rng_seed=substream(0, 0, STREAM_SIMULATE))
    outputs = run_filter(series.observations, QATAR_PRIOR, KernelSpec(0.1), QATAR_INIT, DEFAULTS)
    fits = [predictive_summary(o, substream(0, o.day, STREAM_PREDICTIVE)) for o in outputs]
    return series, outputs, fits


@pytest.fixture(scope="module")
def shift_run():
    """Same synthetic setup but the recovery rate triples from day 30 on."""
    shifted = ParamVector(TRUE_THETA.alpha, TRUE_THETA.beta, 3 * TRUE_THETA.gamma, TRUE_THETA.eta)
    schedule = [TRUE_THETA if k < 30 else shifted for k in range(60)]
    series = simulate(schedule, QATAR_INIT, days=60, rng_seed=substream(0, 0, STREAM_SIMULATE))
    outputs = run_filter(series.observations, QATAR_PRIOR, KernelSpec(0.1), QATAR_INIT, DEFAULTS)
    days = [o.day for o in outputs]
    samples = np.stack([o.posterior_samples for o in outputs])
    return days, samples


def run_qatar_pipeline(out: str) -> float:
    steps = (
        ("ingest", "--data", str(DATA_DIR), "--region", "Qatar", "--days", "135", "--out", out),
        ("fit", "--out", out),
        ("monitor", "--out", out),
        ("report", "--out", out),
    )
    t0 = time.perf_counter()
    for argv in steps:
        result = run_cli(*argv)
        assert result.returncode == 0, (argv[0], result.stderr)
    return time.perf_counter() - t0


@pytest.fixture(scope="module")
def qatar_pipeline(tmp_path_factory):
    out = str(tmp_path_factory.mktemp("qatar_run_one"))
    elapsed = run_qatar_pipeline(out)
    return Path(out), elapsed


def read_summary(path):
    out = {}
    for line in Path(path).read_text().splitlines():
        key, _, value = line.partition(":")
        out[key.strip()] = value.strip()
    return out


def test_criterion_01_control_limit(acceptance_log):
    q = chi2_quantile(0.95, 4)
    ok = abs(q - 9.4877) <= 0.001
    log_line(acceptance_log, 1, "control limit", ok, f"chi-square(4) 0.95 quantile = {q:.6f}")
    assert ok, f"quantile {q} not within 0.001 of 9.4877"


def test_criterion_02_mass_leak_identity(acceptance_log):
    rng = np.random.default_rng(2)
    n = 10_000
    states = np.column_stack(
        [
            rng.uniform(0.0, 1e7, n),
            rng.uniform(0.0, 1e6, n),
            rng.uniform(0.0, 1e6, n),
            rng.uniform(0.0, 1e6, n),
            rng.uniform(0.0, 1e6, n),
        ]
    )
    params = np.column_stack(
        [rng.uniform(0.0, 1e-5, n), rng.uniform(0.0, 1.0, n), rng.uniform(0.0, 1.0, n), rng.uniform(0.0, 1.0, n)]
    )
    t0 = time.perf_counter()
    rhs = rhs_arrays(states, params)
    leak = np.abs(rhs.sum(axis=1) + params[:, 2] * states[:, 1])
    scale = np.maximum(np.abs(rhs).max(axis=1), 1.0)
    worst = float((leak / scale).max())
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-12
    log_line(
        acceptance_log, 2, "mass-leak identity", ok,
        f"worst relative leak {worst:.3e} over {n} random states ({elapsed:.2f} s)",
    )
    assert ok, f"relative leak {worst} exceeds 1e-12"


def test_criterion_03_rk4_convergence(acceptance_log):
    ref = integrate_day(QATAR_INIT, PRIOR_MEANS, 1000).as_array()
    errs = [
        np.abs(integrate_day(QATAR_INIT, PRIOR_MEANS, h).as_array() - ref).max()
        for h in (5, 10, 20, 40)
    ]
    orders = [math.log2(errs[i] / errs[i + 1]) for i in range(3)]
    mean_order = sum(orders) / len(orders)
    ok = 3.5 <= mean_order <= 4.5
    log_line(
        acceptance_log, 3, "integrator convergence", ok,
        f"observed orders {[round(p, 3) for p in orders]}, mean {mean_order:.3f}",
    )
    assert ok, f"mean observed order {mean_order} outside [3.5, 4.5]"


def test_criterion_04_likelihood_oracle(acceptance_log):
    rng = np.random.default_rng(4)
    ks = rng.integers(0, 1_000_001, size=1000)
    lams = 10.0 ** rng.uniform(-3.0, 6.3, size=1000)
    t0 = time.perf_counter()
    ours = np.array([poisson_logpmf(int(k), float(lam)) for k, lam in zip(ks, lams)])
    mp.dps = 40
    oracle = np.array(
        [
            float(int(k) * mlog(mpf(float(lam))) - mpf(float(lam)) - loggamma(int(k) + 1))
            for k, lam in zip(ks, lams)
        ]
    )
    elapsed = time.perf_counter() - t0
    worst = float(np.abs(ours - oracle).max())
    ok = worst <= 1e-8 and elapsed < 10.0
    log_line(
        acceptance_log, 4, "likelihood oracle", ok,
        f"worst abs error {worst:.3e} on 1000 pairs, k up to 1e6 ({elapsed:.2f} s incl oracle)",
    )
    assert worst <= 1e-8, f"worst log-pmf error {worst} exceeds 1e-8"
    assert elapsed < 10.0, f"oracle comparison took {elapsed:.1f} s"


def cloud_of_ancestors(log_weights):
    n = len(log_weights)
    params = np.tile(np.arange(1.0, n + 1.0)[:, None], (1, 4))
    states = np.tile(QATAR_INIT.as_array(), (n, 1))
    return ParticleCloud(
        day=0, params=params, states=states,
        log_weights=np.asarray(log_weights, dtype=float), sizes=(n, n, 1),
    )


def test_criterion_05_resampling_gof(acceptance_log):
    n_draws = 100_000
    uniform, _ = normalize(cloud_of_ancestors(np.zeros(10)))
    drawn = resample(uniform, n_draws, np.random.default_rng(5))
    counts = np.bincount(drawn.params[:, 0].astype(int) - 1, minlength=10)
    _, p_value = stats.chisquare(counts)
    gof_ok = p_value >= 0.001

    weighted, _ = normalize(cloud_of_ancestors(np.log([0.7, 0.2, 0.1])))
    drawn = resample(weighted, n_draws, np.random.default_rng(55))
    counts3 = np.bincount(drawn.params[:, 0].astype(int) - 1, minlength=3)
    probs = np.array([0.7, 0.2, 0.1])
    sigma = np.sqrt(n_draws * probs * (1.0 - probs))
    z = np.abs(counts3 - n_draws * probs) / sigma
    multinomial_ok = bool((z <= 3.0).all())

    ok = gof_ok and multinomial_ok
    log_line(
        acceptance_log, 5, "resampling distribution", ok,
        f"uniform GOF p = {p_value:.3f}; weighted counts within {z.max():.2f} sigma",
    )
    assert gof_ok, f"uniform-weight GOF p-value {p_value} below 0.001"
    assert multinomial_ok, f"weighted resample counts off by {z.max():.2f} sigma"


def test_criterion_06_parameter_recovery(acceptance_log, const_run):
    series, outputs, fits = const_run
    truth = TRUE_THETA.as_array()
    worst_day, worst_err = None, 0.0
    for out in outputs:
        if out.day < 20:
            continue
        med = np.array([nearest_rank(out.posterior_samples[:, c], 0.5) for c in range(4)])
        rel = float((np.abs(med - truth) / truth).max())
        if rel > worst_err:
            worst_day, worst_err = out.day, rel
    medians_ok = worst_err <= 0.2
    r2 = pseudo_r2(series, fits)
    r2_ok = r2 >= 0.99
    ok = medians_ok and r2_ok
    log_line(
        acceptance_log, 6, "parameter recovery", ok,
        f"worst median error {worst_err:.2f}x truth (day {worst_day}); pseudo-R2 = {r2:.5f}",
    )
    assert r2_ok, f"pseudo-R2 {r2} below 0.99"
    assert medians_ok, (
        f"posterior median misses a true rate by {worst_err:.2f}x on day {worst_day} "
        "(limit 0.20 on every day >= 20)"
    )


def test_criterion_07_shift_detection_latency(acceptance_log, shift_run):
    days, samples = shift_run
    records = run_monitor_arrays(days, samples, lam=0.2, limit=9.48)
    t2_by_day = {r.day: r.t2 for r in records}
    signal_ok = any(t2_by_day[d] > 9.48 for d in range(30, 36))
    quiet_max = max(t2_by_day[d] for d in range(10, 30))
    quiet_ok = quiet_max <= 20.0
    ok = signal_ok and quiet_ok
    log_line(
        acceptance_log, 7, "shift detection latency", ok,
        f"signal in days 30-35: {signal_ok}; max T2 in days 10-29 = {quiet_max:.1f} (quiet limit 20)",
    )
    assert signal_ok, "no T2 > 9.48 in days 30-35 after the recovery-rate shift"
    assert quiet_ok, f"pre-shift days 10-29 reach T2 = {quiet_max:.1f}, above the slack limit 20"


def test_criterion_08_lambda_sensitivity_nesting(acceptance_log, shift_run):
    days, samples = shift_run
    signal_sets = {}
    for lam in (0.1, 0.3):
        records = run_monitor_arrays(days, samples, lam=lam, limit=9.48)
        signal_sets[lam] = {r.day for r in records if r.signaled and 10 <= r.day <= 60}
    extra = sorted(signal_sets[0.1] - signal_sets[0.3])
    ok = not extra
    log_line(
        acceptance_log, 8, "smoothing-coefficient nesting", ok,
        f"lam 0.1 signals {sorted(signal_sets[0.1])}; not in lam 0.3 set: {extra or 'none'}",
    )
    assert ok, (
        f"lam 0.1 signal days {extra} missing from the lam 0.3 set within days 10-60"
    )


def test_criterion_09_qatar_end_to_end(acceptance_log, qatar_pipeline):
    out, elapsed = qatar_pipeline
    summary = read_summary(out / "summary.txt")
    r2 = float(summary["pseudo_r2"])
    cov = float(summary["coverage"])
    meta = json.loads((out / "monitor_meta.json").read_text())
    signals = set(meta["signal_days"])
    windows = ((38, 50), (60, 80), (90, 100))
    hit = {w: bool(signals & set(range(w[0], w[1] + 1))) for w in windows}
    ok = r2 >= 0.99 and 0.70 <= cov <= 0.95 and all(hit.values()) and elapsed <= 600.0
    log_line(
        acceptance_log, 9, "real outbreak end-to-end", ok,
        f"pseudo-R2 = {r2:.5f}, coverage = {cov:.3f}, "
        f"window hits {[f'{a}-{b}:{hit[(a, b)]}' for a, b in windows]}, {elapsed:.0f} s",
    )
    assert r2 >= 0.99, f"pseudo-R2 {r2} below 0.99"
    assert 0.70 <= cov <= 0.95, f"coverage {cov} outside [0.70, 0.95]"
    for a, b in windows:
        assert hit[(a, b)], f"no chart signal in days {a}-{b} (signals: {sorted(signals)})"
    assert elapsed <= 600.0, f"pipeline took {elapsed:.0f} s, budget is 600 s"


def test_criterion_10_determinism(acceptance_log, qatar_pipeline, tmp_path):
    first, _ = qatar_pipeline
    second = tmp_path / "qatar_run_two"
    second.mkdir()
    run_qatar_pipeline(str(second))
    names_first = sorted(p.name for p in first.iterdir())
    names_second = sorted(p.name for p in second.iterdir())
    same_names = names_first == names_second
    diffs = [
        name
        for name in names_first
        if same_names and (first / name).read_bytes() != (second / name).read_bytes()
    ]
    ok = same_names and not diffs
    log_line(
        acceptance_log, 10, "bitwise reproducibility", ok,
        f"{len(names_first)} artifacts compared; differing: {diffs or 'none'}",
    )
    assert same_names, f"file sets differ: {names_first} vs {names_second}"
    assert not diffs, f"same-seed reruns differ in: {diffs}"
