"""Hamiltonian systems equipped with complete solutions of the Hamilton-Jacobi equation.

An :class:`HJSystem` bundles a Hamiltonian H(q, p) with a two-parameter family
of actions S(q, P, t) solving dS/dt + H(q, dS/dq) = 0, where P labels the n
integration constants.  S generates the time-dependent canonical transformation

    p = dS/dq,    Q = dS/dP,

whose image coordinates (Q, P) are constant along classical motion.  The
catalog ships four exactly solvable one-dimensional entries (``free``,
``free_ip``, ``sho_ip``, ``linear``); user systems can be assembled with
:func:`custom_system`, which falls back to central finite differences for any
derivative not supplied analytically.

All evaluators are pure functions of their arguments and accept numpy arrays;
systems are immutable and safe to share between threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .errors import DomainError, SingularJacobianError

__all__ = [
    "OpenInterval",
    "HJSystem",
    "CanonicalData",
    "catalog_lookup",
    "custom_system",
    "action_value",
    "canonical_data",
    "hj_residual",
    "CATALOG_NAMES",
    "fd_step",
]

#: |det d2S/dqdP| outside (TOL_SINGULAR, 1/TOL_SINGULAR) counts as degenerate.
TOL_SINGULAR = 1e-8


def fd_step(x: float) -> float:
    """Central-difference step h = 1e-5 * max(1, |x|)."""
    return 1e-5 * max(1.0, abs(x))


@dataclass(frozen=True)
class OpenInterval:
    """Open interval (lo, hi); infinite endpoints allowed."""

    lo: float = -math.inf
    hi: float = math.inf

    def contains(self, x: float) -> bool:
        return self.lo < x < self.hi


class CanonicalData(NamedTuple):
    """Canonical-transformation data of S at one phase point."""

    p: float          # dS/dq, old momentum
    Q: float          # dS/dP, conserved new coordinate
    dSdt: float       # dS/dt = -H on a valid solution
    hessian: float    # d2S/dqdP, Jacobian of the p -> P substitution


@dataclass(frozen=True)
class HJSystem:
    """A Hamiltonian plus a registered complete HJ solution and its derivatives.

    Fields ending in ``_fn`` are plain callables ``(q, P, t) -> value`` (or
    ``(q, p)`` for the Hamiltonian pair) with no domain checking; use the
    module-level operations for checked evaluation.
    """

    name: str
    hamiltonian: Callable          # (q, p) -> energy
    action: Callable               # (q, P, t) -> S
    action_dq: Callable            # (q, P, t) -> p
    action_dP: Callable            # (q, P, t) -> Q
    action_dt: Callable            # (q, P, t) -> dS/dt
    action_dqdP: Callable          # (q, P, t) -> mixed Hessian
    hamiltonian_dq: Callable       # (q, p) -> dH/dq
    hamiltonian_dp: Callable       # (q, p) -> dH/dp
    t_domain: tuple[OpenInterval, ...] = (OpenInterval(),)
    P_domain: OpenInterval = field(default_factory=OpenInterval)
    dim: int = 1
    hbar: float = 1.0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.hbar <= 0:
            raise ValueError(f"hbar must be positive, got {self.hbar}")
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")

    def time_valid(self, t: float) -> bool:
        return any(iv.contains(t) for iv in self.t_domain)

    def check_time(self, t: float) -> None:
        if not self.time_valid(t):
            raise DomainError(
                f"{self.name}: t={t} outside validity domain {self.t_domain}")

    def check_point(self, q: float, P: float, t: float) -> None:
        self.check_time(t)
        if not self.P_domain.contains(P):
            raise DomainError(
                f"{self.name}: P={P} outside P domain {self.P_domain}")


def _require(params: dict, name: str, key: str, positive=False) -> float:
    if key not in params:
        raise ValueError(f"catalog entry '{name}' requires parameter '{key}'")
    val = float(params[key])
    if positive and val <= 0:
        raise ValueError(f"catalog entry '{name}': parameter '{key}' must be "
                         f"positive, got {val}")
    return val


def _free(params: dict, hbar: float) -> HJSystem:
    m = _require(params, "free", "m", positive=True)
    return HJSystem(
        name="free",
        hamiltonian=lambda q, p: p * p / (2 * m),
        action=lambda q, P, t: P * q - P * P * t / (2 * m),
        action_dq=lambda q, P, t: P + 0 * (q + t),
        action_dP=lambda q, P, t: q - P * t / m,
        action_dt=lambda q, P, t: -P * P / (2 * m) + 0 * q,
        action_dqdP=lambda q, P, t: 1.0 + 0 * (q + P + t),
        hamiltonian_dq=lambda q, p: 0 * (q + p),
        hamiltonian_dp=lambda q, p: p / m + 0 * q,
        hbar=hbar,
        params={"m": m},
    )


def _free_ip(params: dict, hbar: float) -> HJSystem:
    # integration constants = initial positions; S = m (q-P)^2 / (2t), t > 0
    m = _require(params, "free_ip", "m", positive=True)
    return HJSystem(
        name="free_ip",
        hamiltonian=lambda q, p: p * p / (2 * m),
        action=lambda q, P, t: m * (q - P) ** 2 / (2 * t),
        action_dq=lambda q, P, t: m * (q - P) / t,
        action_dP=lambda q, P, t: -m * (q - P) / t,
        action_dt=lambda q, P, t: -m * (q - P) ** 2 / (2 * t * t),
        action_dqdP=lambda q, P, t: -m / t + 0 * (q + P),
        hamiltonian_dq=lambda q, p: 0 * (q + p),
        hamiltonian_dp=lambda q, p: p / m + 0 * q,
        t_domain=(OpenInterval(0.0, math.inf),),
        hbar=hbar,
        params={"m": m},
    )


def _sho_ip(params: dict, hbar: float) -> HJSystem:
    # oscillator with initial-position constants; valid between caustics,
    # omega*t in (0, pi)
    m = _require(params, "sho_ip", "m", positive=True)
    w = _require(params, "sho_ip", "omega", positive=True)

    def action(q, P, t):
        s = np.sin(w * t)
        return m * w * ((q * q + P * P) * np.cos(w * t) - 2 * q * P) / (2 * s)

    def action_dq(q, P, t):
        return m * w * (q * np.cos(w * t) - P) / np.sin(w * t)

    def action_dP(q, P, t):
        return m * w * (P * np.cos(w * t) - q) / np.sin(w * t)

    def action_dt(q, P, t):
        s = np.sin(w * t)
        return m * w * w * (2 * q * P * np.cos(w * t) - q * q - P * P) / (2 * s * s)

    return HJSystem(
        name="sho_ip",
        hamiltonian=lambda q, p: p * p / (2 * m) + m * w * w * q * q / 2,
        action=action,
        action_dq=action_dq,
        action_dP=action_dP,
        action_dt=action_dt,
        action_dqdP=lambda q, P, t: -m * w / np.sin(w * t) + 0 * (q + P),
        hamiltonian_dq=lambda q, p: m * w * w * q + 0 * p,
        hamiltonian_dp=lambda q, p: p / m + 0 * q,
        t_domain=(OpenInterval(0.0, math.pi / w),),
        hbar=hbar,
        params={"m": m, "omega": w},
    )


def _linear(params: dict, hbar: float) -> HJSystem:
    # uniform force field, H = p^2/2m - F q; constants = initial momenta
    m = _require(params, "linear", "m", positive=True)
    F = _require(params, "linear", "F")
    return HJSystem(
        name="linear",
        hamiltonian=lambda q, p: p * p / (2 * m) - F * q,
        action=lambda q, P, t: (P + F * t) * q
        - (P * P * t + P * F * t * t + F * F * t ** 3 / 3) / (2 * m),
        action_dq=lambda q, P, t: P + F * t + 0 * q,
        action_dP=lambda q, P, t: q - (2 * P * t + F * t * t) / (2 * m),
        action_dt=lambda q, P, t: F * q - (P + F * t) ** 2 / (2 * m),
        action_dqdP=lambda q, P, t: 1.0 + 0 * (q + P + t),
        hamiltonian_dq=lambda q, p: -F + 0 * (q + p),
        hamiltonian_dp=lambda q, p: p / m + 0 * q,
        hbar=hbar,
        params={"m": m, "F": F},
    )


_CATALOG = {"free": _free, "free_ip": _free_ip, "sho_ip": _sho_ip,
            "linear": _linear}
CATALOG_NAMES = tuple(sorted(_CATALOG))


def catalog_lookup(name: str, params: dict, hbar: float = 1.0) -> HJSystem:
    """Return a fully wired catalog system.

    Parameters
    ----------
    name : one of ``free``, ``free_ip``, ``sho_ip``, ``linear``
    params : dict with ``m`` (all), ``omega`` (sho_ip), ``F`` (linear)
    hbar : action quantum used by the propagator modules, default 1
    """
    if name not in _CATALOG:
        raise ValueError(
            f"unknown catalog system '{name}'; available: {CATALOG_NAMES}")
    return _CATALOG[name](dict(params), hbar)


def custom_system(name, hamiltonian, action, *, action_dq=None, action_dP=None,
                  action_dt=None, action_dqdP=None, hamiltonian_dq=None,
                  hamiltonian_dp=None, t_domain=(OpenInterval(),),
                  P_domain=OpenInterval(), hbar=1.0, params=None) -> HJSystem:
    """Assemble a system from user callables.

    Any derivative left as ``None`` is replaced by a second-order central
    finite difference of ``action`` (or ``hamiltonian``) with step
    h = 1e-5 * max(1, |x|).  Finite-difference systems satisfy the HJ
    residual bound only to ~1e-5; supply analytic derivatives for tight work.
    """
    if action_dq is None:
        def action_dq(q, P, t, _S=action):
            h = fd_step(q)
            return (_S(q + h, P, t) - _S(q - h, P, t)) / (2 * h)
    if action_dP is None:
        def action_dP(q, P, t, _S=action):
            h = fd_step(P)
            return (_S(q, P + h, t) - _S(q, P - h, t)) / (2 * h)
    if action_dt is None:
        def action_dt(q, P, t, _S=action):
            h = fd_step(t)
            return (_S(q, P, t + h) - _S(q, P, t - h)) / (2 * h)
    if action_dqdP is None:
        def action_dqdP(q, P, t, _dSdq=action_dq):
            h = fd_step(P)
            return (_dSdq(q, P + h, t) - _dSdq(q, P - h, t)) / (2 * h)
    if hamiltonian_dq is None:
        def hamiltonian_dq(q, p, _H=hamiltonian):
            h = fd_step(q)
            return (_H(q + h, p) - _H(q - h, p)) / (2 * h)
    if hamiltonian_dp is None:
        def hamiltonian_dp(q, p, _H=hamiltonian):
            h = fd_step(p)
            return (_H(q, p + h) - _H(q, p - h)) / (2 * h)
    return HJSystem(
        name=name, hamiltonian=hamiltonian, action=action,
        action_dq=action_dq, action_dP=action_dP, action_dt=action_dt,
        action_dqdP=action_dqdP, hamiltonian_dq=hamiltonian_dq,
        hamiltonian_dp=hamiltonian_dp, t_domain=tuple(t_domain),
        P_domain=P_domain, hbar=hbar, params=dict(params or {}),
    )


def action_value(sys: HJSystem, q: float, P: float, t: float) -> float:
    """Domain-checked evaluation of the generating action S(q, P, t)."""
    sys.check_point(q, P, t)
    return float(sys.action(q, P, t))


def canonical_data(sys: HJSystem, q: float, P: float, t: float) -> CanonicalData:
    """Evaluate (p, Q, dS/dt, d2S/dqdP) with domain and degeneracy checks.

    Raises
    ------
    DomainError
        outside the declared (q, P, t) validity region.
    SingularJacobianError
        when |d2S/dqdP| leaves (1e-8, 1e8); a vanishing Hessian means the
        generating function degenerates, a divergent one signals a caustic.
    """
    sys.check_point(q, P, t)
    hess = float(sys.action_dqdP(q, P, t))
    if not (TOL_SINGULAR < abs(hess) < 1.0 / TOL_SINGULAR) or not math.isfinite(hess):
        raise SingularJacobianError(
            f"{sys.name}: |d2S/dqdP| = {abs(hess):.3e} at (q={q}, P={P}, t={t})")
    return CanonicalData(
        p=float(sys.action_dq(q, P, t)),
        Q=float(sys.action_dP(q, P, t)),
        dSdt=float(sys.action_dt(q, P, t)),
        hessian=hess,
    )


def hj_residual(sys: HJSystem, q: float, P: float, t: float) -> float:
    """Return dS/dt + H(q, dS/dq); vanishes for a valid complete solution."""
    sys.check_point(q, P, t)
    p = sys.action_dq(q, P, t)
    return float(sys.action_dt(q, P, t) + sys.hamiltonian(q, p))
