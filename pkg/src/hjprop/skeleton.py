"""Phase-space skeletonization of the canonical action.

A path between fixed configuration endpoints is replaced by interpolating
points {(q_k, t_k)} plus one momentum constant P_k per segment; each segment
contributes S(q_{k+1}, P_k, t_{k+1}) - S(q_k, P_k, t_k), the action along a
path of constant P.  The sum is stationary exactly on skeletons interpolating
the classical trajectory, and converges to the canonical functional action
integral (p dq - H dt) as the mesh is refined along any smooth path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import invert_momentum
from .systems import HJSystem, action_value

__all__ = [
    "SkeletonPath",
    "segment_action",
    "skeleton_action",
    "stationarity_residual",
    "continuum_limit_error",
    "skeleton_from_smooth_path",
    "stationary_skeleton",
    "functional_action",
]


@dataclass(frozen=True)
class SkeletonPath:
    """Interpolating data: N+1 (t_k, q_k) nodes and N momentum constants."""

    times: np.ndarray
    positions: np.ndarray
    constants: np.ndarray
    system: HJSystem

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        q = np.asarray(self.positions, dtype=float)
        P = np.asarray(self.constants, dtype=float)
        if len(t) != len(q):
            raise ValueError("times and positions must have equal length")
        if len(P) != len(t) - 1:
            raise ValueError("need exactly one constant per segment")
        if len(P) < 1:
            raise ValueError("a skeleton needs at least one segment")
        if np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "positions", q)
        object.__setattr__(self, "constants", P)

    @property
    def n_segments(self) -> int:
        return len(self.constants)


def segment_action(sys: HJSystem, q_k: float, P_k: float, t_k: float,
                   q_next: float, t_next: float) -> float:
    """Action S(q_next, P_k, t_next) - S(q_k, P_k, t_k) of a constant-P segment."""
    if t_next <= t_k:
        raise ValueError(f"t_next={t_next} must exceed t_k={t_k}")
    return action_value(sys, q_next, P_k, t_next) - action_value(sys, q_k, P_k, t_k)


def skeleton_action(path: SkeletonPath) -> float:
    """Sum of segment actions over the whole skeleton (exact summation)."""
    terms = [
        segment_action(path.system, path.positions[k], path.constants[k],
                       path.times[k], path.positions[k + 1], path.times[k + 1])
        for k in range(path.n_segments)
    ]
    return math.fsum(terms)


def stationarity_residual(path: SkeletonPath) -> tuple[np.ndarray, np.ndarray]:
    """Gradients of the skeleton action in the free variables.

    Returns
    -------
    gradP : array of length N
        dS/dP_k = Q(q_{k+1}, P_k, t_{k+1}) - Q(q_k, P_k, t_k); zero means the
        new coordinate is conserved across segment k.
    gradq : array of length N-1
        momentum mismatch p(q_k, P_k, t_k) - p(q_k, P_{k-1}, t_k) at interior
        joints; zero means the segments match momenta.

    Both vanish together exactly when the skeleton interpolates the classical
    path.
    """
    sys = path.system
    t, q, P = path.times, path.positions, path.constants
    for k in range(path.n_segments):
        sys.check_point(q[k], P[k], t[k])
        sys.check_point(q[k + 1], P[k], t[k + 1])
    gradP = np.array([
        float(sys.action_dP(q[k + 1], P[k], t[k + 1])
              - sys.action_dP(q[k], P[k], t[k]))
        for k in range(path.n_segments)
    ])
    gradq = np.array([
        float(sys.action_dq(q[k], P[k], t[k])
              - sys.action_dq(q[k], P[k - 1], t[k]))
        for k in range(1, path.n_segments)
    ])
    return gradP, gradq


def skeleton_from_smooth_path(sys: HJSystem, smooth_path, t1: float, t2: float,
                              n_segments: int) -> SkeletonPath:
    """Sample a smooth path t -> (q, p) into an N-segment skeleton.

    P_k inverts p -> P at the left endpoint of each segment.
    """
    if n_segments < 1:
        raise ValueError("need at least one segment")
    if t2 <= t1:
        raise ValueError(f"t2={t2} must exceed t1={t1}")
    times = np.linspace(t1, t2, n_segments + 1)
    qs, ps = [], []
    for t in times:
        q, p = smooth_path(float(t))
        qs.append(float(q))
        ps.append(float(p))
    consts = np.array([
        invert_momentum(sys, qs[k], ps[k], float(times[k]))
        for k in range(n_segments)
    ])
    return SkeletonPath(times=times, positions=np.array(qs), constants=consts,
                        system=sys)


def functional_action(sys: HJSystem, smooth_path, t1: float, t2: float,
                      n_panels: int = 10_000) -> float:
    """Canonical action integral (p dq/dt - H) dt along a smooth path.

    Composite Simpson quadrature (fourth order) with >= 1e4 panels; dq/dt is
    taken by central differencing the path, so the result carries O(h_t^2)
    noise at the 1e-12 scale, far below the skeleton errors it calibrates.
    """
    if n_panels < 2:
        raise ValueError("need at least two panels")
    n_panels += n_panels % 2  # Simpson needs an even count
    ts = np.linspace(t1, t2, n_panels + 1)
    h = ts[1] - ts[0]

    def integrand(t):
        q, p = smooth_path(float(t))
        dt = 1e-6 * max(1.0, abs(t))
        qp, _ = smooth_path(float(t) + dt)
        qm, _ = smooth_path(float(t) - dt)
        qdot = (qp - qm) / (2 * dt)
        return p * qdot - float(sys.hamiltonian(q, p))

    vals = np.array([integrand(t) for t in ts])
    weights = np.ones(n_panels + 1)
    weights[1:-1:2] = 4.0
    weights[2:-1:2] = 2.0
    return float(h / 3.0 * np.dot(weights, vals))


def continuum_limit_error(sys: HJSystem, smooth_path, t1: float, t2: float,
                          n_segments: int) -> float:
    """|skeleton action - functional action| for an N-segment sampling."""
    path = skeleton_from_smooth_path(sys, smooth_path, t1, t2, n_segments)
    return abs(skeleton_action(path) - functional_action(sys, smooth_path, t1, t2))


def stationary_skeleton(sys: HJSystem, q1: float, t1: float, q2: float,
                        t2: float, n_segments: int, *, tol: float = 1e-10,
                        max_iter: int = 50) -> SkeletonPath:
    """Find the skeleton with vanishing stationarity residuals.

    Damped Newton on the stacked residual vector (gradP, gradq) over the free
    variables (P_0..P_{N-1}, q_1..q_{N-1}), with a finite-difference Jacobian,
    seeded from the straight-line interpolation.
    """
    if n_segments < 1:
        raise ValueError("need at least one segment")
    times = np.linspace(t1, t2, n_segments + 1)
    qs = np.linspace(q1, q2, n_segments + 1)
    m = float(sys.params.get("m", 1.0))
    p_line = m * (q2 - q1) / (t2 - t1)
    P0 = np.array([
        invert_momentum(sys, float(qs[k]), p_line, float(times[k]))
        for k in range(n_segments)
    ])
    z = np.concatenate([P0, qs[1:-1]])
    n_free = len(z)

    def residual(zv):
        path = SkeletonPath(
            times=times,
            positions=np.concatenate([[q1], zv[n_segments:], [q2]]),
            constants=zv[:n_segments],
            system=sys)
        gradP, gradq = stationarity_residual(path)
        return np.concatenate([gradP, gradq])

    r = residual(z)
    for _ in range(max_iter):
        if np.max(np.abs(r)) < tol:
            break
        jac = np.empty((n_free, n_free))
        for j in range(n_free):
            h = 1e-6 * max(1.0, abs(z[j]))
            zp = z.copy(); zp[j] += h
            zm = z.copy(); zm[j] -= h
            jac[:, j] = (residual(zp) - residual(zm)) / (2 * h)
        delta = np.linalg.solve(jac, -r)
        lam = 1.0
        for _ in range(30):
            r_new = residual(z + lam * delta)
            if np.max(np.abs(r_new)) < np.max(np.abs(r)):
                break
            lam *= 0.5
        z = z + lam * delta
        r = r_new
    else:
        if np.max(np.abs(r)) >= tol:
            from .errors import ConvergenceError
            raise ConvergenceError(
                f"{sys.name}: stationary skeleton residual "
                f"{np.max(np.abs(r)):.3e} after {max_iter} iterations")
    return SkeletonPath(
        times=times,
        positions=np.concatenate([[q1], z[n_segments:], [q2]]),
        constants=z[:n_segments],
        system=sys)
