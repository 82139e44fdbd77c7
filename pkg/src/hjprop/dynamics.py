"""Classical oracles: Hamiltonian flow, conserved (Q, P) and shooting actions.

Fixed-step fourth-order Runge-Kutta integration of Hamilton's equations; the
catalog dynamics are linear, so the scheme is exact for the polynomial flows
and O(dt^4) for the oscillator.  ``conserved_coordinates`` verifies that the
variables generated by the registered HJ solution really are constants of the
motion, and ``principal_function`` computes the two-point classical action by
Newton shooting, which the skeleton and propagator modules use as their
stationarity oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CausticError, ConvergenceError
from .systems import HJSystem, fd_step

__all__ = [
    "Trajectory",
    "ConservationReport",
    "ShootingResult",
    "integrate_trajectory",
    "invert_momentum",
    "conserved_coordinates",
    "principal_function",
]


@dataclass(frozen=True)
class Trajectory:
    """(t, q, p) samples of one classical orbit, endpoints included."""

    t: np.ndarray
    q: np.ndarray
    p: np.ndarray
    dt: float
    system: HJSystem

    def __len__(self):
        return len(self.t)

    def energy(self) -> np.ndarray:
        return np.asarray(self.system.hamiltonian(self.q, self.p), dtype=float)


@dataclass(frozen=True)
class ConservationReport:
    """Drift of the HJ-generated constants along a trajectory."""

    Q: np.ndarray
    P: np.ndarray
    maxQ_drift: float
    maxP_drift: float


@dataclass(frozen=True)
class ShootingResult:
    action: float
    p_init: float
    p_final: float
    trajectory: Trajectory


def _rk4_step(f, t, y, h):
    k1 = f(t, y)
    k2 = f(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = f(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate_trajectory(sys: HJSystem, q0: float, p0: float, t0: float,
                         t1: float, dt: float) -> Trajectory:
    """Integrate dq/dt = dH/dp, dp/dt = -dH/dq from t0 to t1 with fixed step.

    The final step is shortened to land exactly on t1; both endpoints are
    included in the samples.
    """
    if t1 <= t0:
        raise ValueError(f"t1={t1} must exceed t0={t0}")
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if dt > t1 - t0:
        raise ValueError(f"dt={dt} exceeds interval length {t1 - t0}")

    def f(t, y):
        q, p = y
        return np.array([sys.hamiltonian_dp(q, p), -sys.hamiltonian_dq(q, p)])

    n_full = int(np.floor((t1 - t0) / dt * (1 + 1e-12)))
    ts = [t0]
    ys = [np.array([q0, p0], dtype=float)]
    t, y = t0, ys[0]
    for _ in range(n_full):
        y = _rk4_step(f, t, y, dt)
        t += dt
        ts.append(t)
        ys.append(y)
    if t1 - t > 1e-12 * max(1.0, abs(t1)):
        y = _rk4_step(f, t, y, t1 - t)
        ts.append(t1)
        ys.append(y)
    else:
        ts[-1] = t1
    arr = np.array(ys)
    return Trajectory(t=np.array(ts), q=arr[:, 0], p=arr[:, 1], dt=dt,
                      system=sys)


def invert_momentum(sys: HJSystem, q: float, p: float, t: float, *,
                    P0: float | None = None, tol: float = 1e-12,
                    max_iter: int = 50) -> float:
    """Solve dS/dq(q, P, t) = p for the constant P by 1-D Newton.

    Seeded with ``p`` itself unless ``P0`` is given; for every catalog entry
    the map is affine in P, so one step converges.
    """
    sys.check_time(t)
    P = float(p if P0 is None else P0)
    for _ in range(max_iter):
        res = float(sys.action_dq(q, P, t)) - p
        if abs(res) < tol:
            return P
        slope = float(sys.action_dqdP(q, P, t))
        if abs(slope) < 1e-14:
            break
        P -= res / slope
    res = float(sys.action_dq(q, P, t)) - p
    if abs(res) < tol:
        return P
    raise ConvergenceError(
        f"{sys.name}: momentum inversion stalled at (q={q}, p={p}, t={t}), "
        f"residual {res:.3e}")


def conserved_coordinates(sys: HJSystem, traj: Trajectory) -> ConservationReport:
    """Compute (Q_k, P_k) along a trajectory and report their drift.

    P_k inverts dS/dq = p_k at each sample; Q_k = dS/dP.  Exact dynamics give
    zero drift; the RK4 samples give O(dt^4).
    """
    Ps, Qs = [], []
    for q, p, t in zip(traj.q, traj.p, traj.t):
        P = invert_momentum(sys, float(q), float(p), float(t))
        sys.check_point(float(q), P, float(t))
        Ps.append(P)
        Qs.append(float(sys.action_dP(q, P, t)))
    Q = np.array(Qs)
    P = np.array(Ps)
    return ConservationReport(
        Q=Q, P=P,
        maxQ_drift=float(np.max(np.abs(Q - Q[0]))),
        maxP_drift=float(np.max(np.abs(P - P[0]))),
    )


def _integrate_with_action(sys: HJSystem, q0, p0, t0, t1, dt):
    """RK4 on the extended state (q, p, S) with dS/dt = p dH/dp - H."""

    def f(t, y):
        q, p = y[0], y[1]
        dq = sys.hamiltonian_dp(q, p)
        return np.array([dq, -sys.hamiltonian_dq(q, p),
                         p * dq - sys.hamiltonian(q, p)])

    n_full = int(np.floor((t1 - t0) / dt * (1 + 1e-12)))
    t = t0
    y = np.array([q0, p0, 0.0], dtype=float)
    for _ in range(n_full):
        y = _rk4_step(f, t, y, dt)
        t += dt
    if t1 - t > 1e-12 * max(1.0, abs(t1)):
        y = _rk4_step(f, t, y, t1 - t)
    return y  # (q_end, p_end, S)


def principal_function(sys: HJSystem, q1: float, t1: float, q2: float,
                       t2: float, *, dt: float = 1e-3, tol: float = 1e-10,
                       max_iter: int = 50) -> ShootingResult:
    """Hamilton principal function S(q2 t2 | q1 t1) by Newton shooting.

    Finds the initial momentum with q(t2) = q2 (Newton on the endpoint
    residual with a finite-difference slope and step-halving; secant-like
    restarts are implicit in the damping), then integrates the Lagrangian
    p dq/dt - H along the solution.

    Raises
    ------
    CausticError
        if the shooting derivative underflows (conjugate point: no locally
        unique classical path).
    ConvergenceError
        if the endpoint residual fails to reach ``tol``.
    """
    if t2 <= t1:
        raise ValueError(f"t2={t2} must exceed t1={t1}")
    m = float(sys.params.get("m", 1.0))
    p0 = m * (q2 - q1) / (t2 - t1)
    step = min(dt, (t2 - t1) / 8.0)

    def endpoint(p_init):
        return _integrate_with_action(sys, q1, p_init, t1, t2, step)

    y = endpoint(p0)
    res = y[0] - q2
    for _ in range(max_iter):
        if abs(res) < tol:
            return ShootingResult(
                action=float(y[2]), p_init=float(p0), p_final=float(y[1]),
                trajectory=integrate_trajectory(sys, q1, p0, t1, t2, step))
        h = fd_step(p0)
        slope = (endpoint(p0 + h)[0] - endpoint(p0 - h)[0]) / (2 * h)
        if abs(slope) < 1e-10:
            raise CausticError(
                f"{sys.name}: dq(t2)/dp0 = {slope:.3e}; conjugate point "
                f"between t={t1} and t={t2}")
        delta = -res / slope
        # step halving on the endpoint residual
        lam = 1.0
        for _ in range(30):
            y_new = endpoint(p0 + lam * delta)
            if abs(y_new[0] - q2) < abs(res):
                break
            lam *= 0.5
        p0 += lam * delta
        y = y_new
        res = y[0] - q2
    if abs(res) < tol:
        return ShootingResult(
            action=float(y[2]), p_init=float(p0), p_final=float(y[1]),
            trajectory=integrate_trajectory(sys, q1, p0, t1, t2, step))
    raise ConvergenceError(
        f"{sys.name}: shooting residual {res:.3e} after {max_iter} iterations")
