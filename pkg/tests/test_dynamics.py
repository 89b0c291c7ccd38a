"""Compartment model tests: rhs arithmetic, RK4 behavior, R0, error paths."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from epimon.dynamics import (
    IntegrationError,
    ParamVector,
    StateVector,
    Trajectory,
    UndefinedR0Error,
    compute_r0,
    integrate_day,
    integrate_day_arrays,
    integrate_days,
    rhs_arrays,
    seird_rhs,
)

QATAR_STATE = StateVector(2_782_000.0, 3.0, 1.0, 0.0, 0.0)
PRIOR_MEANS = ParamVector(2 / 4_450_000, 1 / 105, 1 / 14, 1 / 9_500)


def test_rhs_transmission_off_freezes_susceptibles():
    d = seird_rhs(StateVector(1000.0, 40.0, 25.0, 7.0, 1.0), ParamVector(0.0, 0.2, 0.1, 0.01))
    assert d.s == 0.0


def test_rhs_disease_free_equilibrium():
    d = seird_rhs(StateVector(5e6, 0.0, 0.0, 123.0, 45.0), ParamVector(1e-6, 0.3, 0.2, 0.05))
    assert d.as_array().tolist() == [0.0, 0.0, 0.0, 0.0, 0.0]


def test_rhs_reference_instance_arithmetic():
    # Direct evaluation of each flow at the reference initial state.
    a, b, g, e = 2 / 4_450_000, 1 / 105, 1 / 14, 1 / 9_500
    s_, e_, i_ = 2_782_000.0, 3.0, 1.0
    d = seird_rhs(QATAR_STATE, PRIOR_MEANS)
    infection = a * s_ * e_
    assert math.isclose(d.s, -infection, rel_tol=1e-14)
    assert math.isclose(d.e, infection - b * e_ - g * e_, rel_tol=1e-14)
    assert math.isclose(d.i, b * e_ - g * i_ - e * i_, rel_tol=1e-14)
    assert math.isclose(d.r, g * i_, rel_tol=1e-14)
    assert math.isclose(d.d, e * i_, rel_tol=1e-14)
    assert math.isclose(d.s, -(2 / 4_450_000) * 2_782_000 * 3, rel_tol=1e-14)


def test_rhs_arrays_matches_scalar():
    rng = np.random.default_rng(7)
    states = rng.uniform(0.0, 1e6, size=(50, 5))
    params = rng.uniform(0.0, 0.5, size=(50, 4))
    params[:, 0] = rng.uniform(0.0, 1e-5, size=50)
    batch = rhs_arrays(states, params)
    for i in range(50):
        one = seird_rhs(StateVector(*states[i]), ParamVector(*params[i])).as_array()
        assert np.allclose(batch[i], one, rtol=1e-14, atol=0.0)


@given(
    s=st.floats(0.0, 1e7), e=st.floats(0.0, 1e6), i=st.floats(0.0, 1e6),
    r=st.floats(0.0, 1e6), d=st.floats(0.0, 1e5),
    alpha=st.floats(0.0, 1e-4), beta=st.floats(0.0, 2.0),
    gamma=st.floats(0.0, 2.0), eta=st.floats(0.0, 2.0),
)
def test_mass_leak_identity(s, e, i, r, d, alpha, beta, gamma, eta):
    # d(S+E+I+R+D)/dt = -gamma*E exactly: exposed leaving without symptoms
    # are the only mass leak.
    rhs = seird_rhs(StateVector(s, e, i, r, d), ParamVector(alpha, beta, gamma, eta))
    total = rhs.as_array().sum() + gamma * e
    scale = np.abs(rhs.as_array()).sum() + abs(gamma * e)
    assert abs(total) <= 1e-12 * max(scale, 1.0)


def test_integrate_day_zero_rates_identity():
    out = integrate_day(StateVector(100.0, 10.0, 5.0, 2.0, 1.0), ParamVector(0, 0, 0, 0))
    assert out == StateVector(100.0, 10.0, 5.0, 2.0, 1.0)


def test_integrate_day_disease_free_identity():
    state = StateVector(9e5, 0.0, 0.0, 55.0, 3.0)
    out = integrate_day(state, ParamVector(1e-6, 0.4, 0.25, 0.02), substeps=7)
    assert out == state


def test_integrate_thirty_days_against_fine_reference():
    # Coarse grid (10 substeps) against a 100x finer one over the full
    # epidemic wave. Errors are measured relative to the total tracked
    # population: S collapses from 2.78e6 to ~19 individuals, so own-value
    # ratios on near-extinct compartments only amplify sub-individual
    # absolute discrepancies.
    coarse = integrate_days(QATAR_STATE, PRIOR_MEANS, 30, substeps=10)
    fine = integrate_days(QATAR_STATE, PRIOR_MEANS, 30, substeps=1000)
    a = coarse.states[30].as_array()
    b = fine.states[30].as_array()
    rel = np.abs(a - b) / max(np.abs(b).sum(), 1.0)
    assert rel.max() <= 1e-6


def test_rk4_halving_factor():
    # Fourth-order convergence: halving h cuts the one-day error by ~16.
    instances = [
        (QATAR_STATE, PRIOR_MEANS),
        (StateVector(5e4, 300.0, 150.0, 20.0, 4.0), ParamVector(6e-6, 0.3, 0.2, 0.05)),
        (StateVector(2e5, 1000.0, 800.0, 90.0, 10.0), ParamVector(1.5e-6, 0.45, 0.12, 0.02)),
    ]
    for state, params in instances:
        ref = integrate_day(state, params, substeps=1000).as_array()
        scale = max(np.abs(ref).max(), 1.0)
        errs = [
            np.abs(integrate_day(state, params, substeps=s).as_array() - ref).max() / scale
            for s in (5, 10, 20)
        ]
        assert errs[0] > 1e-13, "instance too converged to measure the order"
        for e2h, eh in zip(errs, errs[1:]):
            assert 10.0 <= e2h / eh <= 24.0


def test_recovered_and_deaths_monotone():
    rng = np.random.default_rng(21)
    for _ in range(20):
        state = StateVector(*rng.uniform([1e4, 0, 0, 0, 0], [1e6, 500, 300, 100, 20]))
        params = ParamVector(rng.uniform(0, 2e-6), *rng.uniform(0.0, 0.4, size=3))
        traj = integrate_days(state, params, 15)
        r = np.array([s.r for s in traj.states])
        d = np.array([s.d for s in traj.states])
        assert (np.diff(r) >= -1e-9).all()
        assert (np.diff(d) >= -1e-9).all()


def test_integrate_day_arrays_reports_no_clamps_on_benign_input():
    states = np.array([[1e5, 40.0, 30.0, 5.0, 1.0]])
    params = np.array([[1e-6, 0.2, 0.1, 0.01]])
    _, clamped = integrate_day_arrays(states, params, substeps=10)
    assert clamped == 0


def test_integration_error_names_compartment():
    # Transmission large enough to overflow intermediate stages.
    state = StateVector(1e8, 1e8, 0.0, 0.0, 0.0)
    params = ParamVector(1e300, 0.0, 0.0, 0.0)
    with np.errstate(all="ignore"), pytest.raises(IntegrationError, match="compartment"):
        integrate_day(state, params)


def test_integrate_day_rejects_bad_substeps():
    with pytest.raises(ValueError):
        integrate_day(QATAR_STATE, PRIOR_MEANS, substeps=0)


def test_compute_r0_examples():
    assert compute_r0(ParamVector(0.0, 0.1, 0.05, 0.2)) == 0.0
    assert compute_r0(ParamVector(0.15, 0.1, 0.05, 0.0)) == pytest.approx(1.0, rel=1e-15)
    assert compute_r0(ParamVector(0.3, 0.1, 0.05, 0.0)) == pytest.approx(2.0, rel=1e-15)


@given(eta=st.floats(0.0, 100.0))
def test_compute_r0_ignores_eta(eta):
    base = compute_r0(ParamVector(0.3, 0.1, 0.05, 0.0))
    assert compute_r0(ParamVector(0.3, 0.1, 0.05, eta)) == base


def test_compute_r0_undefined_when_beta_gamma_zero():
    with pytest.raises(UndefinedR0Error):
        compute_r0(ParamVector(0.3, 0.0, 0.0, 0.1))


def test_param_vector_rejects_negative_and_nonfinite():
    with pytest.raises(ValueError):
        ParamVector(-1e-9, 0.1, 0.1, 0.1)
    with pytest.raises(ValueError):
        ParamVector(math.nan, 0.1, 0.1, 0.1)
    with pytest.raises(ValueError):
        StateVector(1.0, 2.0, math.inf, 0.0, 0.0)
    with pytest.raises(ValueError):
        StateVector(1.0, 2.0, -0.5, 0.0, 0.0)


def test_trajectory_day_indexing():
    traj = integrate_days(QATAR_STATE, PRIOR_MEANS, 3, start_day=5)
    assert len(traj) == 4
    assert traj.day(5) == traj.states[0]
    assert traj.day(8) == traj.states[3]
    with pytest.raises(ValueError):
        Trajectory(start_day=0, states=())


def test_round_trip_array_views():
    p = ParamVector(1e-6, 0.2, 0.1, 0.01)
    assert ParamVector.from_array(p.as_array()) == p
    s = StateVector(10.0, 2.0, 3.0, 4.0, 5.0)
    assert StateVector.from_array(s.as_array()) == s
