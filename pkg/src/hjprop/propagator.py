"""Finite and infinitesimal quantum propagators as ordinary momentum integrals.

The kernel between configuration endpoints is the one-dimensional integral

    K(q2 t2; q1 t1) = (2 pi hbar)^-1 * Integral dP
        |d2S/dqdP(q2,P,t2)|^(1/2) |d2S/dqdP(q1,P,t1)|^(1/2)
        * exp[(i/hbar) (S(q2,P,t2) - S(q1,P,t1))]

over the constants P generated by the system's complete HJ solution.  The
phase is stationary exactly at the P* conserving the new coordinate Q, i.e.
on the classical path, and its stationary value is the Hamilton principal
function.

Numerically the integral is windowed around P* in Fresnel-zone units, damped
by Gaussians exp(-eps (P - P*)^2) on a descending ladder of eps, evaluated by
composite Gauss-Legendre panels, and polynomially extrapolated to eps -> 0.
The eps ladder is tied to the zone width (eps_k = 2 pi c_k / zone^2, i.e.
c_k |phi''| / hbar), which suppresses the window-truncation boundary term to
exp(-2 pi c n_zones^2) while the extrapolation removes the O(eps) damping
bias; see the test suite for the closed-form oracles this must reproduce.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import roots_legendre

from .errors import (CausticError, ConvergenceError, DomainError,
                     ExtrapolationError, FlatPhaseError)
from .systems import HJSystem, fd_step

__all__ = [
    "QuadratureSpec",
    "KernelSample",
    "CausticReport",
    "oscillatory_integral",
    "stationary_P",
    "kernel_finite",
    "kernel_batch",
    "kernel_infinitesimal",
    "kernel_closed_form",
    "caustic_check",
    "DEFAULT_QUAD",
    "FAST_QUAD",
]

#: below this |phi''(P*)| the stationary phase is degenerate
TOL_FLAT = 1e-12
#: accepted samples must satisfy residual <= RESIDUAL_FRACTION * |value|
RESIDUAL_FRACTION = 1e-4
#: caustic scan flags |d2S/dqdP| outside (TOL_CAUSTIC, 1/TOL_CAUSTIC)
TOL_CAUSTIC = 1e-6


@dataclass(frozen=True)
class QuadratureSpec:
    """Parameters of the windowed, damped, extrapolated P-quadrature.

    n_zones : half-width of the window in Fresnel zones (zone width
        sqrt(2 pi hbar / |phi''(P*)|)).
    panels_per_zone : Gauss-Legendre panels per zone.
    points_per_panel : Gauss-Legendre nodes per panel.
    damping_eps : descending dimensionless ladder c_k; the actual Gaussian
        exponents are eps_k = 2 pi c_k / zone^2.  Polynomial extrapolation to
        eps -> 0 uses degree len(damping_eps) - 1.
    """

    n_zones: int = 40
    panels_per_zone: int = 8
    points_per_panel: int = 12
    damping_eps: tuple[float, ...] = (1e-2, 5e-3, 2.5e-3)

    def __post_init__(self):
        if self.n_zones < 1 or self.panels_per_zone < 1 or self.points_per_panel < 1:
            raise ValueError("quadrature sizes must be positive")
        eps = tuple(float(e) for e in self.damping_eps)
        if len(eps) < 2 or any(e <= 0 for e in eps) or any(
                a <= b for a, b in zip(eps, eps[1:])):
            raise ValueError("damping_eps must be >= 2 descending positive values")
        object.__setattr__(self, "damping_eps", eps)


DEFAULT_QUAD = QuadratureSpec()
#: lighter spec for dense endpoint grids (wave propagation, composition)
FAST_QUAD = QuadratureSpec(n_zones=24, panels_per_zone=6, points_per_panel=10)


@dataclass(frozen=True)
class QuadDiagnostics:
    window_halfwidth: float
    n_panels: int
    n_points: int
    residual: float


@dataclass(frozen=True)
class KernelSample:
    """One propagator amplitude with its stationary-phase data."""

    value: complex
    P_star: float
    phase_at_star: float
    hessian_at_star: float
    diagnostics: QuadDiagnostics


@dataclass(frozen=True)
class CausticReport:
    ok: bool
    location: float | None = None
    reason: str = ""


@lru_cache(maxsize=32)
def _unit_nodes(n_panels: int, n_points: int):
    """Composite Gauss-Legendre nodes/weights on [-1, 1]."""
    x, w = roots_legendre(n_points)
    edges = np.linspace(-1.0, 1.0, n_panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * np.diff(edges)
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def extrapolation_weights(eps_ladder) -> np.ndarray:
    """Lagrange weights evaluating the interpolating polynomial at eps = 0."""
    eps = np.asarray(eps_ladder, dtype=float)
    lam = np.empty(len(eps))
    for i in range(len(eps)):
        others = np.delete(eps, i)
        lam[i] = np.prod(-others) / np.prod(eps[i] - others)
    return lam


def _extrapolate(values: np.ndarray, eps_ladder):
    """Return (limit, residual) of the eps -> 0 polynomial extrapolation.

    ``values`` has the ladder on its last axis.  The residual is the gap to
    the one-degree-lower extrapolation built on the smallest eps values.
    """
    lam = extrapolation_weights(eps_ladder)
    full = values @ lam
    lam_low = extrapolation_weights(eps_ladder[1:])
    low = values[..., 1:] @ lam_low
    return full, np.abs(full - low)


def oscillatory_integral(phase, amplitude, hbar: float, quad: QuadratureSpec,
                         *, center: float | None = None,
                         halfwidth: float | None = None):
    """Windowed, damped, extrapolated integral of amplitude * exp(i phase / hbar).

    With no explicit window the stationary point of ``phase`` is located by
    Newton on a finite-difference derivative and the window spans
    ``n_zones`` Fresnel zones on each side.  ``phase`` and ``amplitude``
    must accept numpy arrays.

    Returns
    -------
    (value, residual) : complex integral estimate and extrapolation gap.

    Raises
    ------
    FlatPhaseError
        if the located stationary point has |phi''| < 1e-12 (window and zone
        width undefined).
    """
    if hbar <= 0:
        raise ValueError("hbar must be positive")
    if (center is None) != (halfwidth is None):
        raise ValueError("center and halfwidth must be given together")
    if center is None:
        P = 0.0
        for _ in range(100):
            h = fd_step(P)
            d1 = (phase(P + h) - phase(P - h)) / (2 * h)
            d2 = (phase(P + h) - 2 * phase(P) + phase(P - h)) / (h * h)
            if abs(d2) < TOL_FLAT:
                raise FlatPhaseError(
                    f"|phi''| = {abs(d2):.3e} at P = {P}: degenerate "
                    "stationary phase, supply an explicit window")
            step = -d1 / d2
            P += step
            if abs(step) < 1e-12 * max(1.0, abs(P)):
                break
        else:
            raise ConvergenceError("stationary-point search did not converge")
        h = fd_step(P)
        d2 = (phase(P + h) - 2 * phase(P) + phase(P - h)) / (h * h)
        if abs(d2) < TOL_FLAT:
            raise FlatPhaseError(f"|phi''(P*)| = {abs(d2):.3e}")
        center = P
        zone = math.sqrt(2 * math.pi * hbar / abs(d2))
        halfwidth = quad.n_zones * zone
    else:
        zone = halfwidth / quad.n_zones

    u, w = _unit_nodes(2 * quad.n_zones * quad.panels_per_zone,
                       quad.points_per_panel)
    nodes = center + halfwidth * u
    weights = halfwidth * w
    base = weights * np.asarray(amplitude(nodes)) * np.exp(
        1j * np.asarray(phase(nodes)) / hbar)
    offsets2 = (nodes - center) ** 2
    eps = 2 * math.pi * np.asarray(quad.damping_eps) / zone ** 2
    damped = np.array([np.sum(base * np.exp(-e * offsets2)) for e in eps])
    value, residual = _extrapolate(damped, quad.damping_eps)
    return complex(value), float(residual)


def stationary_P(sys: HJSystem, q1, t1: float, q2, t2: float, *,
                 tol: float = 1e-11, max_iter: int = 50):
    """Constant(s) P* with Q(q2, P*, t2) = Q(q1, P*, t1).

    Newton on the Q-difference with a finite-difference slope; Q conservation
    makes the induced path classical, so dS/dq(q1, P*, t1) reproduces the
    shooting momentum of ``principal_function``.  Accepts scalar or array
    endpoints (paired elementwise).
    """
    sys.check_time(t1)
    sys.check_time(t2)
    q1a = np.atleast_1d(np.asarray(q1, dtype=float))
    q2a = np.atleast_1d(np.asarray(q2, dtype=float))
    q1a, q2a = np.broadcast_arrays(q1a, q2a)
    m = float(sys.params.get("m", 1.0))
    seeds = [m * (q2a - q1a) / (t2 - t1), q1a.copy(), q2a.copy(),
             np.zeros_like(q1a)]

    def qdiff(P):
        return (np.asarray(sys.action_dP(q2a, P, t2))
                - np.asarray(sys.action_dP(q1a, P, t1)))

    best = None
    for seed in seeds:
        P = seed.astype(float).copy()
        converged = np.zeros(P.shape, dtype=bool)
        for _ in range(max_iter):
            f = qdiff(P)
            converged = np.abs(f) < tol
            if converged.all():
                break
            h = 1e-6 * np.maximum(1.0, np.abs(P))
            slope = (qdiff(P + h) - qdiff(P - h)) / (2 * h)
            safe = np.abs(slope) > 1e-14
            step = np.where(safe & ~converged, -f / np.where(safe, slope, 1.0), 0.0)
            P = P + step
        if converged.all():
            best = P
            break
    if best is None:
        raise ConvergenceError(
            f"{sys.name}: no stationary P found between t={t1} and t={t2} "
            "(no classical branch in the search window)")
    if np.isscalar(q1) and np.isscalar(q2):
        return float(best[0])
    return best


def _phase_hessian(sys: HJSystem, q1, t1, q2, t2, P):
    """d2/dP2 of S(q2,P,t2) - S(q1,P,t1) by differencing the analytic Q."""
    h = 1e-6 * np.maximum(1.0, np.abs(P))

    def qdiff(Pv):
        return (np.asarray(sys.action_dP(q2, Pv, t2))
                - np.asarray(sys.action_dP(q1, Pv, t1)))

    return (qdiff(P + h) - qdiff(P - h)) / (2 * h)


def kernel_batch(sys: HJSystem, q1, t1: float, q2, t2: float,
                 quad: QuadratureSpec = DEFAULT_QUAD, *,
                 weighting: str = "symmetric", check_caustic: bool = True,
                 check_residual: bool = True):
    """Vectorized finite-propagator amplitudes for paired endpoint arrays.

    Parameters
    ----------
    q1, q2 : broadcastable arrays of initial/final positions (paired).
    weighting : ``symmetric`` uses the half-weight Jacobian factors at both
        endpoints; ``initial`` puts the full Jacobian at (q1, t1) (the
        asymmetric infinitesimal form).

    Returns
    -------
    dict with arrays ``value``, ``P_star``, ``phase_star``, ``hessian``,
    ``residual`` and scalars ``halfwidth`` factored per pair.
    """
    if t2 <= t1:
        raise ValueError(f"t2={t2} must exceed t1={t1}")
    if weighting not in ("symmetric", "initial"):
        raise ValueError(f"unknown weighting '{weighting}'")
    if check_caustic:
        report = caustic_check(sys, t1, t2)
        if not report.ok:
            raise CausticError(
                f"{sys.name}: {report.reason} at t={report.location}",
                location=report.location)
    hbar = sys.hbar
    q1a = np.atleast_1d(np.asarray(q1, dtype=float))
    q2a = np.atleast_1d(np.asarray(q2, dtype=float))
    q1a, q2a = np.broadcast_arrays(q1a, q2a)
    shape = q1a.shape
    q1f, q2f = q1a.ravel(), q2a.ravel()

    P_star = np.atleast_1d(stationary_P(sys, q1f, t1, q2f, t2))
    phi2 = np.asarray(_phase_hessian(sys, q1f, t1, q2f, t2, P_star))
    if np.any(np.abs(phi2) < TOL_FLAT):
        raise FlatPhaseError(f"{sys.name}: degenerate stationary phase "
                             f"between t={t1} and t={t2}")
    zone = np.sqrt(2 * math.pi * hbar / np.abs(phi2))
    halfwidth = quad.n_zones * zone

    u, w = _unit_nodes(2 * quad.n_zones * quad.panels_per_zone,
                       quad.points_per_panel)
    n_pair = len(q1f)
    values = np.empty(n_pair, dtype=complex)
    residuals = np.empty(n_pair)
    lam = extrapolation_weights(quad.damping_eps)
    lam_low = extrapolation_weights(quad.damping_eps[1:])
    c_ladder = np.asarray(quad.damping_eps)

    # chunk pairs to bound the (pairs x nodes) temporaries
    chunk = max(1, int(2_000_000 // max(len(u), 1)))
    for lo in range(0, n_pair, chunk):
        sl = slice(lo, min(lo + chunk, n_pair))
        Pn = P_star[sl, None] + halfwidth[sl, None] * u[None, :]
        wt = halfwidth[sl, None] * w[None, :]
        S2 = np.asarray(sys.action(q2f[sl, None], Pn, t2))
        S1 = np.asarray(sys.action(q1f[sl, None], Pn, t1))
        M2 = np.abs(np.asarray(sys.action_dqdP(q2f[sl, None], Pn, t2)))
        M1 = np.abs(np.asarray(sys.action_dqdP(q1f[sl, None], Pn, t1)))
        if weighting == "symmetric":
            amp = np.sqrt(M2) * np.sqrt(M1)
        else:
            amp = M1
        base = wt * amp * np.exp(1j * (S2 - S1) / hbar)
        off2 = (Pn - P_star[sl, None]) ** 2
        eps = 2 * math.pi * c_ladder[None, :] / zone[sl, None] ** 2
        damped = np.stack([
            np.sum(base * np.exp(-eps[:, k:k + 1] * off2), axis=1)
            for k in range(len(c_ladder))
        ], axis=-1)
        vals = damped @ lam
        values[sl] = vals / (2 * math.pi * hbar)
        residuals[sl] = np.abs(vals - damped[:, 1:] @ lam_low) / (2 * math.pi * hbar)

    phase_star = (np.asarray(sys.action(q2f, P_star, t2))
                  - np.asarray(sys.action(q1f, P_star, t1)))
    if check_residual:
        bad = residuals > RESIDUAL_FRACTION * np.abs(values)
        if np.any(bad):
            i = int(np.argmax(residuals / np.maximum(np.abs(values), 1e-300)))
            raise ExtrapolationError(
                f"{sys.name}: extrapolation residual {residuals[i]:.3e} "
                f"exceeds {RESIDUAL_FRACTION:g} * |value| = "
                f"{RESIDUAL_FRACTION * abs(values[i]):.3e} at pair "
                f"(q1={q1f[i]}, q2={q2f[i]}); enlarge the window or panels")
    return {
        "value": values.reshape(shape),
        "P_star": P_star.reshape(shape),
        "phase_star": phase_star.reshape(shape),
        "hessian": phi2.reshape(shape),
        "residual": residuals.reshape(shape),
        "halfwidth": halfwidth.reshape(shape),
        "n_points": len(u),
    }


def kernel_finite(sys: HJSystem, q1: float, t1: float, q2: float, t2: float,
                  quad: QuadratureSpec = DEFAULT_QUAD) -> KernelSample:
    """Finite propagator K(q2 t2; q1 t1) with stationary-phase diagnostics.

    Raises CausticError when the time window is flagged, DomainError outside
    the validity interval, and ExtrapolationError when the damping ladder
    fails to settle within 1e-4 of the amplitude.
    """
    out = kernel_batch(sys, q1, t1, q2, t2, quad)
    return KernelSample(
        value=complex(out["value"].ravel()[0]),
        P_star=float(out["P_star"].ravel()[0]),
        phase_at_star=float(out["phase_star"].ravel()[0]),
        hessian_at_star=float(out["hessian"].ravel()[0]),
        diagnostics=QuadDiagnostics(
            window_halfwidth=float(out["halfwidth"].ravel()[0]),
            n_panels=2 * quad.n_zones * quad.panels_per_zone,
            n_points=out["n_points"],
            residual=float(out["residual"].ravel()[0])),
    )


def kernel_infinitesimal(sys: HJSystem, q1: float, t1: float, eps: float,
                         q2: float, form: str = "symmetric",
                         quad: QuadratureSpec = DEFAULT_QUAD) -> KernelSample:
    """Short-time propagator over [t1, t1 + eps].

    ``symmetric`` weights both endpoints with half-weight Jacobian factors
    (the postulated form); ``asymmetric`` carries the full Jacobian at the
    initial point.  The two differ by a relative O(eps).
    """
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if form not in ("symmetric", "asymmetric"):
        raise ValueError(f"unknown infinitesimal form '{form}'")
    weighting = "symmetric" if form == "symmetric" else "initial"
    out = kernel_batch(sys, q1, t1, q2, t1 + eps, quad, weighting=weighting)
    return KernelSample(
        value=complex(out["value"].ravel()[0]),
        P_star=float(out["P_star"].ravel()[0]),
        phase_at_star=float(out["phase_star"].ravel()[0]),
        hessian_at_star=float(out["hessian"].ravel()[0]),
        diagnostics=QuadDiagnostics(
            window_halfwidth=float(out["halfwidth"].ravel()[0]),
            n_panels=2 * quad.n_zones * quad.panels_per_zone,
            n_points=out["n_points"],
            residual=float(out["residual"].ravel()[0])),
    )


def kernel_closed_form(name: str, params: dict, q1, q2, T: float) -> complex:
    """Textbook kernels used as oracles: free particle, oscillator (Mehler),
    uniform field.

    ``params`` carries ``m`` (all), ``omega`` (sho), ``F`` (linear) and an
    optional ``hbar`` (default 1).  Phase conventions match a caustic-free
    window: the prefactor square root of 1/i is exp(-i pi / 4).
    """
    if T <= 0:
        raise ValueError(f"T must be positive, got {T}")
    m = float(params["m"])
    hbar = float(params.get("hbar", 1.0))
    q1 = np.asarray(q1, dtype=float)
    q2 = np.asarray(q2, dtype=float)
    root_1_over_i = np.exp(-1j * math.pi / 4)
    if name == "free":
        pref = math.sqrt(m / (2 * math.pi * hbar * T)) * root_1_over_i
        val = pref * np.exp(1j * m * (q2 - q1) ** 2 / (2 * hbar * T))
    elif name == "sho":
        w = float(params["omega"])
        s = math.sin(w * T)
        if min(abs(w * T - k * math.pi) for k in
               range(int(w * T / math.pi) + 2)) < 1e-6:
            raise CausticError(f"sho kernel caustic: omega*T = {w * T} "
                               "within 1e-6 of a multiple of pi")
        if s < 0:
            raise CausticError("sho closed form restricted to the first "
                               f"caustic-free window, got omega*T = {w * T}")
        pref = math.sqrt(m * w / (2 * math.pi * hbar * s)) * root_1_over_i
        val = pref * np.exp(
            1j * m * w * ((q1 ** 2 + q2 ** 2) * math.cos(w * T) - 2 * q1 * q2)
            / (2 * hbar * s))
    elif name == "linear":
        F = float(params["F"])
        action = (m * (q2 - q1) ** 2 / (2 * T) + F * T * (q1 + q2) / 2
                  - F ** 2 * T ** 3 / (24 * m))
        pref = math.sqrt(m / (2 * math.pi * hbar * T)) * root_1_over_i
        val = pref * np.exp(1j * action / hbar)
    else:
        raise ValueError(f"no closed-form kernel named '{name}'")
    if np.ndim(val) == 0:
        return complex(val)
    return val


def caustic_check(sys: HJSystem, t1: float, t2: float,
                  n_scan: int = 257) -> CausticReport:
    """Scan [t1, t2] for domain violations or degenerate mixed Hessians.

    The Hessian probe uses (q, P) = (0, 0); every catalog Hessian is
    independent of (q, P), so the scan is exact there and a heuristic for
    user systems.
    """
    for t in np.linspace(t1, t2, n_scan):
        tf = float(t)
        if not sys.time_valid(tf):
            return CausticReport(ok=False, location=tf,
                                 reason="t outside validity domain")
        hess = float(sys.action_dqdP(0.0, 0.0, tf))
        if not math.isfinite(hess):
            return CausticReport(ok=False, location=tf,
                                 reason="non-finite d2S/dqdP")
        if not (TOL_CAUSTIC < abs(hess) < 1.0 / TOL_CAUSTIC):
            return CausticReport(ok=False, location=tf,
                                 reason=f"|d2S/dqdP| = {abs(hess):.3e}")
    return CausticReport(ok=True)
