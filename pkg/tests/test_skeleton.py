"""Skeletonized actions: stationarity, classical limit, continuum limit."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hjprop import (DomainError, SkeletonPath, catalog_lookup,
                    continuum_limit_error, functional_action,
                    integrate_trajectory, principal_function, segment_action,
                    skeleton_action, skeleton_from_smooth_path,
                    stationarity_residual, stationary_skeleton)


def classical_free_path(t):
    return 2.0 * t, 2.0


def classical_sho_path(t):
    return math.cos(t), -math.sin(t)


def test_segment_action_on_shell(free):
    assert segment_action(free, 0.0, 2.0, 0.0, 2.0, 1.0) == pytest.approx(2.0)


def test_segment_action_off_shell(free):
    assert segment_action(free, 0.0, 5.0, 0.0, 2.0, 1.0) == pytest.approx(-2.5)


def test_segment_action_caustic_straddle(sho_ip):
    with pytest.raises(DomainError):
        segment_action(sho_ip, 0.0, 0.3, 2.9, 0.5, 3.3)
    with pytest.raises(ValueError):
        segment_action(sho_ip, 0.0, 0.3, 1.0, 0.5, 0.5)


@pytest.mark.parametrize("n", [1, 2, 5, 16])
def test_free_classical_skeleton_telescopes(free, n):
    times = np.linspace(0.0, 1.0, n + 1)
    path = SkeletonPath(times=times, positions=2.0 * times,
                        constants=np.full(n, 2.0), system=free)
    assert skeleton_action(path) == pytest.approx(2.0, abs=1e-14)


def test_single_segment_reduces_to_segment_action(free):
    path = SkeletonPath(times=np.array([0.0, 1.0]),
                        positions=np.array([0.0, 2.0]),
                        constants=np.array([5.0]), system=free)
    assert skeleton_action(path) == pytest.approx(
        segment_action(free, 0.0, 5.0, 0.0, 2.0, 1.0))


def test_sho_classical_skeleton_matches_shooting(sho_ip):
    path = skeleton_from_smooth_path(sho_ip, classical_sho_path, 0.1, 1.1, 4)
    oracle = principal_function(sho_ip, math.cos(0.1), 0.1, math.cos(1.1), 1.1)
    assert skeleton_action(path) == pytest.approx(oracle.action, abs=1e-8)
    gradP, gradq = stationarity_residual(path)
    assert np.max(np.abs(gradP)) < 1e-8
    assert np.max(np.abs(gradq)) < 1e-8


def test_free_classical_residuals_vanish(free):
    path = skeleton_from_smooth_path(free, classical_free_path, 0.0, 1.0, 6)
    gradP, gradq = stationarity_residual(path)
    assert np.max(np.abs(gradP)) < 1e-13
    assert np.max(np.abs(gradq)) < 1e-13


@settings(max_examples=30, deadline=None)
@given(delta=st.floats(-1.0, 1.0).filter(lambda d: abs(d) > 1e-6))
def test_perturbed_constant_gives_linear_Q_mismatch(delta):
    # free particle: dQ/dP = -t => gradP responds linearly, slope -segment/m
    free = catalog_lookup("free", {"m": 1.0})
    path = skeleton_from_smooth_path(free, classical_free_path, 0.0, 1.0, 4)
    constants = path.constants.copy()
    constants[1] += delta
    bumped = SkeletonPath(times=path.times, positions=path.positions,
                          constants=constants, system=free)
    gradP, gradq = stationarity_residual(bumped)
    seg = path.times[2] - path.times[1]
    assert gradP[1] == pytest.approx(-delta * seg, rel=1e-9)
    # the joint momenta now mismatch by exactly delta
    assert gradq[0] == pytest.approx(delta, rel=1e-9)
    assert gradq[1] == pytest.approx(-delta, rel=1e-9)


def test_continuum_limit_exact_for_classical_free(free):
    for n in (1, 3, 8):
        assert continuum_limit_error(free, classical_free_path, 0.0, 1.0, n) < 1e-10


def test_continuum_limit_preconditions(free):
    with pytest.raises(ValueError):
        continuum_limit_error(free, classical_free_path, 0.0, 1.0, 0)
    with pytest.raises(ValueError):
        skeleton_from_smooth_path(free, classical_free_path, 1.0, 1.0, 4)


def test_continuum_limit_order_on_smooth_path(free):
    path = lambda t: (t * t, 2.0 * t)
    errs = [continuum_limit_error(free, path, 0.0, 1.0, n)
            for n in (8, 16, 32, 64)]
    assert all(b < a for a, b in zip(errs, errs[1:]))
    order = np.polyfit(np.log([8, 16, 32, 64]), np.log(errs), 1)[0]
    assert -order >= 1.0


def test_functional_action_oracle_value(free):
    # S = integral (p qdot - H) dt = integral (4t^2 - 2t^2) dt = 2/3 on [0,1]
    path = lambda t: (t * t, 2.0 * t)
    assert functional_action(free, path, 0.0, 1.0) == pytest.approx(
        2.0 / 3.0, abs=1e-10)


def test_stationary_skeleton_free_is_straight_line(free):
    path = stationary_skeleton(free, 0.0, 0.0, 2.0, 1.0, 5)
    assert np.allclose(path.positions, 2.0 * path.times, atol=1e-10)
    assert np.allclose(path.constants, 2.0, atol=1e-10)


def test_stationary_skeleton_sho_matches_trajectory(sho_ip):
    t1, t2, n = 0.2, 1.4, 8
    path = stationary_skeleton(sho_ip, math.cos(t1), t1, math.cos(t2), t2, n)
    assert np.max(np.abs(path.positions - np.cos(path.times))) < 1e-6
    oracle = principal_function(sho_ip, math.cos(t1), t1, math.cos(t2), t2)
    assert skeleton_action(path) == pytest.approx(oracle.action, abs=1e-8)


def test_point_transformation_leaves_action_scalar(free):
    # scale q_tilde = q / lam  <=>  free system with mass m lam^2
    lam = 2.0
    scaled = catalog_lookup("free", {"m": lam * lam})
    base = skeleton_from_smooth_path(free, classical_free_path, 0.0, 1.0, 5)
    transformed = SkeletonPath(
        times=base.times,
        positions=base.positions / lam,
        constants=base.constants * lam,
        system=scaled)
    assert skeleton_action(transformed) == pytest.approx(
        skeleton_action(base), abs=1e-13)


def test_skeleton_path_validation(free):
    with pytest.raises(ValueError):
        SkeletonPath(times=np.array([0.0, 1.0, 0.5]),
                     positions=np.zeros(3), constants=np.zeros(2), system=free)
    with pytest.raises(ValueError):
        SkeletonPath(times=np.array([0.0, 1.0]), positions=np.zeros(2),
                     constants=np.zeros(2), system=free)
