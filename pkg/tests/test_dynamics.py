"""Trajectories, conserved (Q, P) and shooting actions against closed forms."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hjprop import (CausticError, DomainError, OpenInterval, action_value,
                    catalog_lookup, conserved_coordinates, custom_system,
                    integrate_trajectory, invert_momentum, principal_function,
                    stationary_P)

from conftest import catalog_systems


def ho_action(q1, q2, T, m=1.0, w=1.0):
    """Closed-form oscillator two-point action (valid off caustics)."""
    s = math.sin(w * T)
    return m * w * ((q1 * q1 + q2 * q2) * math.cos(w * T) - 2 * q1 * q2) / (2 * s)


def test_free_flow_is_exact(free):
    traj = integrate_trajectory(free, 0.0, 2.0, 0.0, 1.0, 1e-2)
    assert traj.q[-1] == pytest.approx(2.0, abs=1e-14)
    assert traj.p[-1] == pytest.approx(2.0, abs=1e-14)
    assert traj.t[0] == 0.0 and traj.t[-1] == 1.0


def test_sho_flow_matches_rotation(sho_ip):
    traj = integrate_trajectory(sho_ip, 1.0, 0.0, 0.0, math.pi / 2, 1e-3)
    assert abs(traj.q[-1] - 0.0) < 1e-9
    assert abs(traj.p[-1] - (-1.0)) < 1e-9
    # whole history against cos/sin
    assert np.max(np.abs(traj.q - np.cos(traj.t))) < 1e-9
    assert np.max(np.abs(traj.p + np.sin(traj.t))) < 1e-9


def test_partial_final_step():
    free = catalog_lookup("free", {"m": 2.0})
    traj = integrate_trajectory(free, 0.0, 1.0, 0.0, 0.35, 0.1)
    assert traj.t[-1] == pytest.approx(0.35)
    assert traj.q[-1] == pytest.approx(0.35 / 2.0)


def test_trajectory_preconditions(free):
    with pytest.raises(ValueError):
        integrate_trajectory(free, 0, 1, 0.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        integrate_trajectory(free, 0, 1, 1.0, 1.0, 1e-3)
    with pytest.raises(ValueError):
        integrate_trajectory(free, 0, 1, 0.0, 0.1, 0.5)


def test_energy_conservation_catalog():
    for system in catalog_systems():
        t0 = 0.1 if not system.time_valid(0.0) else 0.0
        traj = integrate_trajectory(system, 0.7, 0.4, t0, t0 + 1.0, 1e-3)
        energy = traj.energy()
        assert np.max(np.abs(energy - energy[0])) < 1e-8, system.name


def test_conserved_free(free):
    traj = integrate_trajectory(free, 0.0, 2.0, 0.0, 1.0, 1e-3)
    rep = conserved_coordinates(free, traj)
    assert np.allclose(rep.P, 2.0, atol=1e-12)
    assert rep.maxP_drift < 1e-12
    assert rep.maxQ_drift < 1e-12


def test_conserved_sho(sho_ip):
    traj = integrate_trajectory(sho_ip, 1.0, 0.0, 0.1, 3.0, 1e-3)
    rep = conserved_coordinates(sho_ip, traj)
    assert rep.maxP_drift < 1e-8
    assert rep.maxQ_drift < 1e-8
    # constants are the initial position / minus initial momentum of q=cos t
    assert np.allclose(rep.P, np.cos(traj.t) * 0 + rep.P[0])


def test_conserved_outside_P_domain():
    narrow = custom_system(
        "free_narrow",
        hamiltonian=lambda q, p: p * p / 2,
        action=lambda q, P, t: P * q - P * P * t / 2,
        P_domain=OpenInterval(-1.0, 1.0),
    )
    traj = integrate_trajectory(narrow, 0.0, 2.0, 0.0, 0.5, 1e-2)
    with pytest.raises(DomainError):
        conserved_coordinates(narrow, traj)


def test_invert_momentum_catalog():
    for system in catalog_systems():
        t = 0.7
        P = invert_momentum(system, 0.4, -0.9, t)
        assert system.action_dq(0.4, P, t) == pytest.approx(-0.9, abs=1e-11)


def test_principal_function_free(free):
    res = principal_function(free, 0.0, 0.0, 2.0, 1.0)
    assert res.action == pytest.approx(2.0, abs=1e-10)
    assert res.p_init == pytest.approx(2.0, abs=1e-10)
    assert res.p_final == pytest.approx(2.0, abs=1e-10)


def test_principal_function_sho_rest(sho_ip):
    res = principal_function(sho_ip, 0.0, 0.0, 0.0, math.pi / 4)
    assert abs(res.action) < 1e-10
    assert abs(res.p_init) < 1e-10


def test_principal_function_sho_quarter_period(sho_ip):
    res = principal_function(sho_ip, 1.0, 0.0, 0.0, math.pi / 2)
    assert res.action == pytest.approx(0.0, abs=1e-9)
    assert res.action == pytest.approx(ho_action(1.0, 0.0, math.pi / 2), abs=1e-9)


def test_principal_function_sho_generic_endpoints(sho_ip):
    res = principal_function(sho_ip, 0.8, 0.2, -0.4, 1.5)
    assert res.action == pytest.approx(ho_action(0.8, -0.4, 1.3), abs=1e-9)


def test_principal_function_linear_closed_form(linear):
    q1, q2, T = 0.3, 1.1, 0.9
    oracle = (q2 - q1) ** 2 / (2 * T) + T * (q1 + q2) / 2 - T ** 3 / 24
    res = principal_function(linear, q1, 0.0, q2, T)
    assert res.action == pytest.approx(oracle, abs=1e-9)


def test_shooting_caustic(sho_ip):
    # after half a period every path refocuses at -q'; aiming anywhere else
    # leaves Newton with an underflowing derivative
    with pytest.raises(CausticError):
        principal_function(sho_ip, 1.0, 0.0, 0.0, math.pi)


def test_momentum_match_along_classical_path(sho_ip):
    # interior point on q(t) = cos t: outgoing momentum equals incoming
    t0, t1, t2 = 0.2, 0.9, 1.6
    a = principal_function(sho_ip, math.cos(t0), t0, math.cos(t1), t1)
    b = principal_function(sho_ip, math.cos(t1), t1, math.cos(t2), t2)
    assert a.p_final == pytest.approx(b.p_init, abs=1e-8)


def test_stationarity_bridge_spot_checks():
    for system in catalog_systems():
        t1, t2 = (0.3, 1.2) if not system.time_valid(0.0) else (0.0, 1.0)
        for q1, q2 in [(0.0, 1.0), (-0.7, 0.4), (1.3, -0.2)]:
            P = stationary_P(system, q1, t1, q2, t2)
            bridge = action_value(system, q2, P, t2) - action_value(system, q1, P, t1)
            shoot = principal_function(system, q1, t1, q2, t2)
            assert bridge == pytest.approx(shoot.action, abs=1e-8), system.name
            assert system.action_dq(q1, P, t1) == pytest.approx(
                shoot.p_init, abs=1e-8)


@settings(max_examples=25, deadline=None)
@given(q0=st.floats(-2, 2), p0=st.floats(-2, 2))
def test_energy_conservation_property(q0, p0):
    sho = catalog_lookup("sho_ip", {"m": 1.0, "omega": 1.0})
    traj = integrate_trajectory(sho, q0, p0, 0.0, 1.0, 1e-2)
    energy = traj.energy()
    assert np.max(np.abs(energy - energy[0])) < 1e-9
