"""Grid wave functions, kernel-driven propagation, composition and delta checks.

Wave functions are weight-1/2 densities sampled on uniform grids; the inner
product is the plain trapezoidal integral of conj(psi) * phi, which is
coordinate-independent in that convention.  Propagation applies the finite
kernel under a trapezoidal quadrature; kernel composition and the
momentum-constant delta identity use the same Gaussian-damping ladder as the
P-quadrature because their integrands oscillate without decaying.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import CausticError, GridMismatchError
from .propagator import (DEFAULT_QUAD, QuadratureSpec, _unit_nodes,
                         caustic_check, extrapolation_weights, kernel_batch,
                         stationary_P)
from .systems import HJSystem

__all__ = [
    "UniformGrid",
    "WaveFunction",
    "GaussianTest",
    "inner_product",
    "propagate_wavefunction",
    "kernel_matrix",
    "compose_kernels",
    "delta_identity_check",
    "save_wavefunction_csv",
    "load_wavefunction_csv",
    "worker_count",
]

#: multiplies the quad damping ladder in the composition midpoint integral;
#: the effective exponents are c_k * COMPOSE_DAMPING_SCALE / (h * L)
COMPOSE_DAMPING_SCALE = 7.68


def worker_count() -> int:
    """Thread cap from HJ_PROP_THREADS (0 or unset = auto)."""
    raw = os.environ.get("HJ_PROP_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n <= 0:
        n = min(4, os.cpu_count() or 1)
    return max(1, n)


@dataclass(frozen=True)
class UniformGrid:
    q_min: float
    q_max: float
    n_points: int

    def __post_init__(self):
        if self.n_points < 2:
            raise ValueError("grid needs at least two points")
        if self.q_max <= self.q_min:
            raise ValueError("q_max must exceed q_min")

    @property
    def points(self) -> np.ndarray:
        return np.linspace(self.q_min, self.q_max, self.n_points)

    @property
    def spacing(self) -> float:
        return (self.q_max - self.q_min) / (self.n_points - 1)

    def trapezoid_weights(self) -> np.ndarray:
        w = np.full(self.n_points, self.spacing)
        w[0] *= 0.5
        w[-1] *= 0.5
        return w


@dataclass(frozen=True)
class WaveFunction:
    """Complex samples of a weight-1/2 density on a uniform grid."""

    grid: UniformGrid
    values: np.ndarray
    t: float

    #: density weight of the convention; fixed, not a free parameter
    weight = 0.5

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (self.grid.n_points,):
            raise ValueError(
                f"values shape {v.shape} != grid ({self.grid.n_points},)")
        object.__setattr__(self, "values", v)

    def norm(self) -> float:
        return math.sqrt(abs(inner_product(self, self)))

    def validate(self, boundary_fraction: float = 1e-10) -> None:
        """Check grid adequacy: size, finite norm, decayed boundary."""
        if self.grid.n_points < 16:
            raise ValueError(f"grid too small: {self.grid.n_points} < 16 points")
        dens = np.abs(self.values) ** 2
        if not np.all(np.isfinite(dens)):
            raise ValueError("wave function contains non-finite values")
        peak = float(np.max(dens))
        if peak == 0.0:
            return
        edge = max(float(dens[0]), float(dens[-1]))
        if edge > boundary_fraction * peak:
            raise ValueError(
                f"boundary density {edge:.3e} exceeds {boundary_fraction:g} "
                f"of the peak {peak:.3e}; widen the grid")


@dataclass(frozen=True)
class GaussianTest:
    """Normalized Gaussian test function for weak-form checks."""

    center: float
    sigma: float

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")

    def __call__(self, P):
        P = np.asarray(P, dtype=float)
        return (np.exp(-(P - self.center) ** 2 / (2 * self.sigma ** 2))
                / math.sqrt(2 * math.pi * self.sigma ** 2))


def inner_product(psi: WaveFunction, phi: WaveFunction) -> complex:
    """Trapezoidal integral of conj(psi) * phi on the shared grid."""
    if psi.grid != phi.grid:
        raise GridMismatchError(
            f"grids differ: {psi.grid} vs {phi.grid}")
    w = psi.grid.trapezoid_weights()
    return complex(math.fsum((w * np.conj(psi.values) * phi.values).real)
                   + 1j * math.fsum((w * np.conj(psi.values) * phi.values).imag))


def kernel_matrix(sys: HJSystem, q_to: np.ndarray, t1: float, t2: float,
                  q_from: np.ndarray, quad: QuadratureSpec = DEFAULT_QUAD,
                  *, check_caustic: bool = True) -> np.ndarray:
    """K(q_to[i], t2; q_from[j], t1) as an (n_to, n_from) matrix.

    Rows are evaluated independently (optionally across a thread pool capped
    by HJ_PROP_THREADS) and assembled in order, so results are deterministic.
    """
    if check_caustic:
        report = caustic_check(sys, t1, t2)
        if not report.ok:
            raise CausticError(f"{sys.name}: {report.reason} at t={report.location}",
                               location=report.location)
    q_to = np.asarray(q_to, dtype=float)
    q_from = np.asarray(q_from, dtype=float)

    def row(i):
        out = kernel_batch(sys, q_from, t1, np.full_like(q_from, q_to[i]), t2,
                           quad, check_caustic=False)
        return out["value"]

    n = len(q_to)
    workers = worker_count()
    if workers > 1 and n >= 32:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(row, range(n)))
    else:
        rows = [row(i) for i in range(n)]
    return np.array(rows)


def propagate_wavefunction(sys: HJSystem, psi: WaveFunction, t2: float,
                           quad: QuadratureSpec = DEFAULT_QUAD) -> WaveFunction:
    """Evolve psi to time t2 through the finite kernel.

    psi''(q'') = trapezoid_j K(q'', t2; q_j, psi.t) psi(q_j); the grid is
    reused for the output.  Requires psi.t < t2, a caustic-free window and a
    grid on which psi has decayed at the boundary.
    """
    if t2 <= psi.t:
        raise ValueError(f"t2={t2} must exceed the wave function time {psi.t}")
    psi.validate()
    K = kernel_matrix(sys, psi.grid.points, psi.t, t2, psi.grid.points, quad)
    w = psi.grid.trapezoid_weights()
    values = K @ (w * psi.values)
    return WaveFunction(grid=psi.grid, values=values, t=t2)


def _classical_midpoint(sys: HJSystem, q1: float, t1: float, q2: float,
                        t2: float, t_mid: float) -> float:
    """Position at t_mid of the classical path joining the endpoints.

    Uses the conserved coordinate: P* from Q-conservation over [t1, t2], then
    solves Q(x, P*, t_mid) = Q(q1, P*, t1) for x by Newton with the analytic
    mixed Hessian as slope.
    """
    P_star = stationary_P(sys, q1, t1, q2, t2)
    target = float(sys.action_dP(q1, P_star, t1))
    x = 0.5 * (q1 + q2)
    for _ in range(50):
        res = float(sys.action_dP(x, P_star, t_mid)) - target
        slope = float(sys.action_dqdP(x, P_star, t_mid))
        if abs(slope) < 1e-14:
            break
        x_new = x - res / slope
        if abs(x_new - x) < 1e-12 * max(1.0, abs(x)):
            return x_new
        x = x_new
    return x


def compose_kernels(sys: HJSystem, t1: float, t_mid: float, t2: float,
                    grid: UniformGrid, quad: QuadratureSpec = DEFAULT_QUAD,
                    test_points: np.ndarray | None = None) -> float:
    """Max semigroup defect |integral dq K(q2;q) K(q;q1) - K(q2;q1)|.

    The midpoint integral runs on the grid's trapezoid nodes.  Because the
    integrand oscillates with constant modulus, the half-line tails are
    removed by the same Gaussian damping-plus-extrapolation used in the
    P-quadrature, centered on the classical midpoint; the ladder scales with
    the grid resolution (eps_k = c_k * 7.68 / (h L)), so the defect refines
    along with the grid instead of freezing at the window-truncation error.
    """
    if not (t1 < t_mid < t2):
        raise ValueError(f"need t1 < t_mid < t2, got {t1}, {t_mid}, {t2}")
    for a, b in ((t1, t_mid), (t_mid, t2), (t1, t2)):
        report = caustic_check(sys, a, b)
        if not report.ok:
            raise CausticError(f"{sys.name}: {report.reason} at t={report.location}",
                               location=report.location)
    if test_points is None:
        test_points = np.linspace(-2.0, 2.0, 5)
    test_points = np.asarray(test_points, dtype=float)

    q = grid.points
    w = grid.trapezoid_weights()
    h = grid.spacing
    L = 0.5 * (grid.q_max - grid.q_min)
    eps = (COMPOSE_DAMPING_SCALE / (h * L)) * np.asarray(quad.damping_eps)
    lam = extrapolation_weights(quad.damping_eps)

    # one kernel row per distinct endpoint, reused across pairs
    K_to = {qa: kernel_batch(sys, q, t_mid, np.full_like(q, qa), t2, quad,
                             check_caustic=False)["value"]
            for qa in test_points}
    K_from = {qb: kernel_batch(sys, np.full_like(q, qb), t1, q, t_mid, quad,
                               check_caustic=False)["value"]
              for qb in test_points}

    worst = 0.0
    for qa in test_points:
        for qb in test_points:
            direct = kernel_batch(sys, float(qb), t1, float(qa), t2, quad,
                                  check_caustic=False)["value"].ravel()[0]
            c = _classical_midpoint(sys, float(qb), t1, float(qa), t2, t_mid)
            integrand = w * K_to[qa] * K_from[qb]
            damped = np.array([
                np.sum(integrand * np.exp(-e * (q - c) ** 2)) for e in eps])
            composed = damped @ lam
            worst = max(worst, abs(composed - direct))
    return float(worst)


def delta_identity_check(sys: HJSystem, t_mid: float, P1: float,
                         f: GaussianTest, quad: QuadratureSpec = DEFAULT_QUAD,
                         *, window_scale: float = 2.0) -> tuple[complex, complex]:
    """Weak-form check that the constant-P pairing integral is a Dirac delta.

    lhs pairs the double integral

        (2 pi hbar)^-1 Integral dP2 f(P2) Integral dq
            |d2S/dqdP(q,P2)|^(1/2) |d2S/dqdP(q,P1)|^(1/2)
            exp[(i/hbar)(S(q,P1,t) - S(q,P2,t))]

    against the Gaussian test function; rhs = f(P1).  The q-integral is
    windowed around the point where Q(q, P1, t) = 0 and damped/extrapolated
    exactly like the P-quadrature; each damping eps smears the delta by a
    Gaussian of width hbar sqrt(2 eps), and the polynomial extrapolation
    removes that smearing bias.
    """
    sys.check_time(t_mid)
    hbar = sys.hbar

    # window center: zero of the conserved coordinate at P1
    q0 = 0.0
    for _ in range(50):
        res = float(sys.action_dP(q0, P1, t_mid))
        slope = float(sys.action_dqdP(q0, P1, t_mid))
        if abs(slope) < 1e-14:
            break
        step = -res / slope
        q0 += step
        if abs(step) < 1e-12 * max(1.0, abs(q0)):
            break
    M0 = abs(float(sys.action_dqdP(q0, P1, t_mid)))

    zone = window_scale * hbar / (f.sigma * M0)
    halfwidth = quad.n_zones * zone
    u, gw = _unit_nodes(2 * quad.n_zones * quad.panels_per_zone,
                        quad.points_per_panel)
    q = q0 + halfwidth * u
    qw = halfwidth * gw
    eps = 2 * math.pi * np.asarray(quad.damping_eps) / zone ** 2
    lam = extrapolation_weights(quad.damping_eps)

    P2, P2w = _unit_nodes(32, quad.points_per_panel)
    P2 = f.center + 8 * f.sigma * P2
    P2w = 8 * f.sigma * P2w

    S1 = np.asarray(sys.action(q, P1, t_mid))
    M1 = np.abs(np.asarray(sys.action_dqdP(q, P1, t_mid)))
    S2 = np.asarray(sys.action(q[None, :], P2[:, None], t_mid))
    M2 = np.abs(np.asarray(sys.action_dqdP(q[None, :], P2[:, None], t_mid)))
    inner_base = (np.sqrt(M2) * np.sqrt(M1)[None, :]
                  * np.exp(1j * (S1[None, :] - S2) / hbar)) / (2 * math.pi * hbar)

    off2 = (q - q0) ** 2
    vals = []
    for e in eps:
        D = (inner_base * np.exp(-e * off2)[None, :]) @ qw
        vals.append(np.sum(P2w * f(P2) * D))
    lhs = complex(np.dot(lam, np.asarray(vals)))
    return lhs, complex(f(P1))


def save_wavefunction_csv(psi: WaveFunction, path, system_name: str = "") -> None:
    """Write q, re, im rows at 17 significant digits with # metadata lines."""
    lines = [f"# t={psi.t:.17g}"]
    if system_name:
        lines.append(f"# system={system_name}")
    lines.append("q,re,im")
    for q, v in zip(psi.grid.points, psi.values):
        lines.append(f"{q:.17g},{v.real:.17g},{v.imag:.17g}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_wavefunction_csv(path) -> WaveFunction:
    """Read a wave function written by :func:`save_wavefunction_csv`."""
    t = 0.0
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                if key.strip() == "t":
                    t = float(val)
                continue
            if line.startswith("q,"):
                continue
            a, b, c = line.split(",")
            rows.append((float(a), float(b), float(c)))
    if len(rows) < 2:
        raise ValueError(f"no samples found in {path}")
    q = np.array([r[0] for r in rows])
    steps = np.diff(q)
    if not np.allclose(steps, steps[0], rtol=1e-12, atol=1e-15):
        raise ValueError(f"{path}: grid is not uniform")
    values = np.array([complex(r[1], r[2]) for r in rows])
    grid = UniformGrid(q_min=float(q[0]), q_max=float(q[-1]), n_points=len(q))
    return WaveFunction(grid=grid, values=values, t=t)
