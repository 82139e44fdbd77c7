"""Catalog systems: HJ residuals, derivative consistency, domains."""

import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from hjprop import (DomainError, OpenInterval, SingularJacobianError,
                    action_value, canonical_data, catalog_lookup,
                    custom_system, hj_residual)

from conftest import catalog_systems, in_domain_times, lattice


def sympy_model(name):
    """Independent symbolic oracle: J and H rebuilt in sympy, derivatives
    taken by sp.diff rather than by the hand-coded catalog formulas."""
    q, P, t = sp.symbols("q P t", real=True)
    m, w, F = sp.Integer(1), sp.Integer(1), sp.Integer(1)
    if name == "free":
        J = P * q - P**2 * t / (2 * m)
        H = lambda qq, pp: pp**2 / (2 * m)
    elif name == "free_ip":
        J = m * (q - P) ** 2 / (2 * t)
        H = lambda qq, pp: pp**2 / (2 * m)
    elif name == "sho_ip":
        J = m * w * ((q**2 + P**2) * sp.cos(w * t) - 2 * q * P) / (2 * sp.sin(w * t))
        H = lambda qq, pp: pp**2 / (2 * m) + m * w**2 * qq**2 / 2
    elif name == "linear":
        J = (P + F * t) * q - (P**2 * t + P * F * t**2 + F**2 * t**3 / 3) / (2 * m)
        H = lambda qq, pp: pp**2 / (2 * m) - F * qq
    else:
        raise ValueError(name)
    derivs = {
        "J": J,
        "dq": sp.diff(J, q),
        "dP": sp.diff(J, P),
        "dt": sp.diff(J, t),
        "dqdP": sp.diff(J, q, P),
        "residual": sp.simplify(sp.diff(J, t) + H(q, sp.diff(J, q))),
    }
    return {k: sp.lambdify((q, P, t), v, "numpy") for k, v in derivs.items()}


def test_sympy_residual_vanishes_identically():
    q, P, t = sp.symbols("q P t", real=True)
    for name in ("free", "free_ip", "sho_ip", "linear"):
        model = sympy_model(name)
        # a symbolic zero lambdifies to a constant 0
        assert abs(model["residual"](0.7, -0.3, 0.9)) < 1e-12


@pytest.mark.parametrize("name", ["free", "free_ip", "sho_ip", "linear"])
def test_analytic_derivatives_match_symbolic_oracle(name):
    params = {"m": 1.0}
    if name == "sho_ip":
        params["omega"] = 1.0
    if name == "linear":
        params["F"] = 1.0
    system = catalog_lookup(name, params)
    model = sympy_model(name)
    for q, P, t in lattice(system, n_q=7, n_P=7, n_t=5):
        assert system.action(q, P, t) == pytest.approx(model["J"](q, P, t), abs=1e-10)
        assert system.action_dq(q, P, t) == pytest.approx(model["dq"](q, P, t), abs=1e-10)
        assert system.action_dP(q, P, t) == pytest.approx(model["dP"](q, P, t), abs=1e-10)
        assert system.action_dt(q, P, t) == pytest.approx(model["dt"](q, P, t), abs=1e-10)
        assert system.action_dqdP(q, P, t) == pytest.approx(
            model["dqdP"](q, P, t), abs=1e-10)


def test_catalog_lookup_examples():
    free = catalog_lookup("free", {"m": 1.0})
    assert action_value(free, 2.0, 3.0, 1.0) == pytest.approx(1.5)
    sho = catalog_lookup("sho_ip", {"m": 1.0, "omega": 1.0})
    assert canonical_data(sho, 0.4, -1.1, math.pi / 2).hessian == pytest.approx(-1.0)
    with pytest.raises(ValueError):
        catalog_lookup("free", {"m": 0.0})
    with pytest.raises(ValueError):
        catalog_lookup("maxwell", {"m": 1.0})
    with pytest.raises(ValueError):
        catalog_lookup("sho_ip", {"m": 1.0})  # omega missing


def test_action_value_examples(linear, free_ip):
    assert action_value(linear, 0.0, 0.0, 1.0) == pytest.approx(-1.0 / 6.0)
    with pytest.raises(DomainError):
        action_value(free_ip, 1.0, 1.0, 0.0)
    with pytest.raises(DomainError):
        action_value(free_ip, 1.0, 1.0, -0.5)


def test_canonical_data_free_example(free):
    data = canonical_data(free, 2.0, 3.0, 1.0)
    assert data.p == pytest.approx(3.0)
    assert data.Q == pytest.approx(-1.0)
    assert data.dSdt == pytest.approx(-4.5)
    assert data.hessian == pytest.approx(1.0)


def test_canonical_data_singular_near_caustic(sho_ip):
    with pytest.raises(SingularJacobianError):
        canonical_data(sho_ip, 0.0, 0.0, math.pi - 1e-12)


def test_hj_residual_lattice_analytic():
    for system in catalog_systems():
        worst = max(abs(hj_residual(system, q, P, t))
                    for q, P, t in lattice(system))
        assert worst < 1e-8, f"{system.name}: {worst}"


def test_hj_residual_lattice_fd_fallback():
    for system in catalog_systems():
        fd = custom_system(
            system.name + "_fd", system.hamiltonian, system.action,
            t_domain=system.t_domain, params=system.params)
        worst = max(abs(hj_residual(fd, q, P, t))
                    for q, P, t in lattice(fd, n_q=9, n_P=9, n_t=5))
        assert worst < 1e-5, f"{system.name}: {worst}"


def test_derivative_consistency_with_central_differences():
    for system in catalog_systems():
        for q, P, t in lattice(system, n_q=9, n_P=9, n_t=5):
            hq = 1e-5 * max(1.0, abs(q))
            hP = 1e-5 * max(1.0, abs(P))
            scale = max(1.0, abs(system.action(q, P, t)))
            p_fd = (system.action(q + hq, P, t) - system.action(q - hq, P, t)) / (2 * hq)
            Q_fd = (system.action(q, P + hP, t) - system.action(q, P - hP, t)) / (2 * hP)
            M_fd = (system.action_dq(q, P + hP, t)
                    - system.action_dq(q, P - hP, t)) / (2 * hP)
            assert abs(system.action_dq(q, P, t) - p_fd) / scale < 1e-6
            assert abs(system.action_dP(q, P, t) - Q_fd) / scale < 1e-6
            assert abs(system.action_dqdP(q, P, t) - M_fd) / scale < 1e-6


def test_nondegenerate_hessian_on_lattice():
    for system in catalog_systems():
        worst = min(abs(system.action_dqdP(q, P, t))
                    for q, P, t in lattice(system))
        assert worst > 1e-8, f"{system.name}: {worst}"


def test_corrupted_action_is_detected():
    # wrong sign on the time term doubles the kinetic piece of the residual
    bad = custom_system(
        "free_bad",
        hamiltonian=lambda q, p: p * p / 2,
        action=lambda q, P, t: P * q + P * P * t / 2,
    )
    assert hj_residual(bad, 0.3, 2.0, 0.7) == pytest.approx(4.0, abs=1e-6)


def test_custom_p_domain_enforced():
    narrow = custom_system(
        "free_narrow",
        hamiltonian=lambda q, p: p * p / 2,
        action=lambda q, P, t: P * q - P * P * t / 2,
        P_domain=OpenInterval(-1.0, 1.0),
    )
    with pytest.raises(DomainError):
        action_value(narrow, 0.0, 2.0, 0.5)


def test_invalid_construction():
    with pytest.raises(ValueError):
        catalog_lookup("free", {"m": 1.0}, hbar=0.0)
    with pytest.raises(ValueError):
        catalog_lookup("free", {"m": -2.0})


@settings(max_examples=60, deadline=None)
@given(q=st.floats(-3, 3), P=st.floats(-3, 3), s=st.floats(0.05, 0.95))
def test_hj_residual_property(q, P, s):
    for system in catalog_systems():
        ts = in_domain_times(system, 2)
        t = float(ts[0] + s * (ts[1] - ts[0]))
        assert abs(hj_residual(system, q, P, t)) < 1e-8
