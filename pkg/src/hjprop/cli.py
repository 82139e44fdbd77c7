"""Batch front-end: JSON experiment configs in, CSV/JSON artifacts out.

One config runs one command and writes one output artifact; parameter sweeps
are expressed inside the config (value lists / ranges), never by shell loops.
Data files are byte-deterministic: numbers at 17 significant digits, sorted
keys, no timestamps; run metadata goes to a ``<output>.meta.json`` sidecar.

Exit codes: 0 success, 2 config/validation error, 3 numerical failure
(caustic, non-convergence, ...) with a machine-readable error object on
stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import sys as _sys
import time
from pathlib import Path

import numpy as np
import jsonschema

from . import __version__
from .errors import HJPropError
from .propagator import (DEFAULT_QUAD, QuadratureSpec, kernel_batch)
from .dynamics import conserved_coordinates, integrate_trajectory, principal_function
from .skeleton import skeleton_action, stationarity_residual, stationary_skeleton
from .systems import CATALOG_NAMES, catalog_lookup, hj_residual
from .waves import (GaussianTest, UniformGrid, WaveFunction, compose_kernels,
                    delta_identity_check, propagate_wavefunction,
                    save_wavefunction_csv)

__all__ = ["run_command", "main", "CONFIG_SCHEMA"]

COMMANDS = ("kernel", "evolve", "compose", "check-hj", "check-conservation",
            "skeleton", "delta-check")

_NUMBER = {"type": "number"}
_SWEEP = {
    "oneOf": [
        {"type": "number"},
        {"type": "array", "items": {"type": "number"}, "minItems": 1},
        {
            "type": "object",
            "properties": {"start": _NUMBER, "stop": _NUMBER,
                           "num": {"type": "integer", "minimum": 1}},
            "required": ["start", "stop", "num"],
            "additionalProperties": False,
        },
    ]
}
_GRID = {
    "type": "object",
    "properties": {"q_min": _NUMBER, "q_max": _NUMBER,
                   "n_points": {"type": "integer", "minimum": 2}},
    "required": ["q_min", "q_max", "n_points"],
    "additionalProperties": False,
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "hjprop experiment config",
    "type": "object",
    "properties": {
        "command": {"enum": list(COMMANDS)},
        "system": {
            "type": "object",
            "properties": {
                "name": {"enum": list(CATALOG_NAMES) + ["catalog"]},
                "params": {
                    "type": "object",
                    "properties": {"m": _NUMBER, "omega": _NUMBER, "F": _NUMBER},
                    "additionalProperties": False,
                },
                "hbar": {"type": "number", "exclusiveMinimum": 0},
            },
            "required": ["name"],
            "additionalProperties": False,
        },
        "output": {
            "type": "object",
            "properties": {"path": {"type": "string"},
                           "format": {"enum": ["csv", "json"]}},
            "required": ["path"],
            "additionalProperties": False,
        },
        "quadrature": {
            "type": "object",
            "properties": {
                "n_zones": {"type": "integer", "minimum": 1},
                "panels_per_zone": {"type": "integer", "minimum": 1},
                "points_per_panel": {"type": "integer", "minimum": 1},
                "damping_eps": {"type": "array", "minItems": 2,
                                "items": {"type": "number",
                                          "exclusiveMinimum": 0}},
            },
            "additionalProperties": False,
        },
        "kernel": {
            "type": "object",
            "properties": {"q1": _SWEEP, "t1": _NUMBER, "q2": _SWEEP,
                           "t2": _SWEEP},
            "required": ["q1", "t1", "q2", "t2"],
            "additionalProperties": False,
        },
        "evolve": {
            "type": "object",
            "properties": {
                "grid": _GRID,
                "t1": _NUMBER,
                "t2": _NUMBER,
                "initial": {
                    "type": "object",
                    "properties": {"type": {"enum": ["gaussian"]},
                                   "center": _NUMBER, "sigma": _NUMBER,
                                   "momentum": _NUMBER},
                    "required": ["type", "center", "sigma"],
                    "additionalProperties": False,
                },
            },
            "required": ["grid", "t1", "t2", "initial"],
            "additionalProperties": False,
        },
        "compose": {
            "type": "object",
            "properties": {"grid": _GRID, "t1": _NUMBER, "t_mid": _NUMBER,
                           "t2": _NUMBER,
                           "test_points": {"type": "array",
                                           "items": _NUMBER, "minItems": 1}},
            "required": ["grid", "t1", "t_mid", "t2"],
            "additionalProperties": False,
        },
        "check-hj": {
            "type": "object",
            "properties": {
                "q_range": {"type": "array", "items": _NUMBER,
                            "minItems": 2, "maxItems": 2},
                "P_range": {"type": "array", "items": _NUMBER,
                            "minItems": 2, "maxItems": 2},
                "t_range": {"type": "array", "items": _NUMBER,
                            "minItems": 2, "maxItems": 2},
                "n_q": {"type": "integer", "minimum": 2},
                "n_P": {"type": "integer", "minimum": 2},
                "n_t": {"type": "integer", "minimum": 2},
            },
            "additionalProperties": False,
        },
        "check-conservation": {
            "type": "object",
            "properties": {"q0": _NUMBER, "p0": _NUMBER, "t0": _NUMBER,
                           "t1": _NUMBER, "dt": _NUMBER},
            "required": ["q0", "p0", "t0", "t1", "dt"],
            "additionalProperties": False,
        },
        "skeleton": {
            "type": "object",
            "properties": {"q1": _NUMBER, "t1": _NUMBER, "q2": _NUMBER,
                           "t2": _NUMBER,
                           "n_segments": {"type": "integer", "minimum": 1}},
            "required": ["q1", "t1", "q2", "t2", "n_segments"],
            "additionalProperties": False,
        },
        "delta-check": {
            "type": "object",
            "properties": {"t_mid": _NUMBER, "P1": _NUMBER,
                           "test_center": _NUMBER,
                           "test_sigma": {"type": "number",
                                          "exclusiveMinimum": 0}},
            "required": ["t_mid", "P1", "test_sigma"],
            "additionalProperties": False,
        },
    },
    "required": ["command", "system", "output"],
    "additionalProperties": False,
}


class ConfigError(Exception):
    """Config failed validation (exit code 2)."""


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _sweep_values(spec) -> np.ndarray:
    if isinstance(spec, (int, float)):
        return np.array([float(spec)])
    if isinstance(spec, list):
        return np.array([float(v) for v in spec])
    return np.linspace(float(spec["start"]), float(spec["stop"]),
                       int(spec["num"]))


def _build_system(cfg):
    block = cfg["system"]
    name = block["name"]
    if name == "catalog":
        if cfg["command"] != "check-hj":
            raise ConfigError(
                "system name 'catalog' is only valid for check-hj")
        return None
    params = dict(block.get("params", {}))
    try:
        return catalog_lookup(name, params, hbar=float(block.get("hbar", 1.0)))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _build_quad(cfg) -> QuadratureSpec:
    block = cfg.get("quadrature")
    if not block:
        return DEFAULT_QUAD
    kwargs = dict(block)
    if "damping_eps" in kwargs:
        kwargs["damping_eps"] = tuple(kwargs["damping_eps"])
    try:
        return QuadratureSpec(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _command_block(cfg):
    cmd = cfg["command"]
    block = cfg.get(cmd)
    if block is None and cmd != "check-hj":
        raise ConfigError(f"config is missing the '{cmd}' block")
    return block or {}


def _default_time_window(system):
    """In-domain time range for lattice checks, backed off from any edge."""
    iv = system.t_domain[0]
    if math.isinf(iv.lo) and math.isinf(iv.hi):
        return -1.0, 1.0
    if math.isinf(iv.hi):
        return iv.lo + 0.15, iv.lo + 2.15
    pad = 0.15 * (iv.hi - iv.lo)
    return iv.lo + pad, iv.hi - pad


def _run_check_hj(cfg, block):
    if cfg["system"]["name"] == "catalog":
        specs = [("free", {"m": 1.0}), ("free_ip", {"m": 1.0}),
                 ("sho_ip", {"m": 1.0, "omega": 1.0}),
                 ("linear", {"m": 1.0, "F": 1.0})]
        systems = [catalog_lookup(n, p) for n, p in specs]
    else:
        systems = [_build_system(cfg)]
    n_q = int(block.get("n_q", 21))
    n_P = int(block.get("n_P", 21))
    n_t = int(block.get("n_t", 11))
    q_lo, q_hi = block.get("q_range", (-3.0, 3.0))
    P_lo, P_hi = block.get("P_range", (-3.0, 3.0))
    report = {"systems": {}, "lattice": [n_q, n_P, n_t]}
    worst = 0.0
    for system in systems:
        if "t_range" in block:
            t_lo, t_hi = block["t_range"]
        else:
            t_lo, t_hi = _default_time_window(system)
        m = 0.0
        for t in np.linspace(t_lo, t_hi, n_t):
            for q in np.linspace(q_lo, q_hi, n_q):
                for P in np.linspace(P_lo, P_hi, n_P):
                    m = max(m, abs(hj_residual(system, float(q), float(P),
                                               float(t))))
        report["systems"][system.name] = {
            "max_residual": m, "t_range": [t_lo, t_hi]}
        worst = max(worst, m)
    report["max_residual"] = worst
    return report, None


def _run_kernel(cfg, block, system, quad):
    t1 = float(block["t1"])
    rows = []
    for t2 in _sweep_values(block["t2"]):
        q1s = _sweep_values(block["q1"])
        q2s = _sweep_values(block["q2"])
        Q1, Q2 = np.meshgrid(q1s, q2s, indexing="ij")
        out = kernel_batch(system, Q1.ravel(), t1, Q2.ravel(), float(t2), quad)
        for q1, q2, v, P, ph, res in zip(
                Q1.ravel(), Q2.ravel(), out["value"].ravel(),
                out["P_star"].ravel(), out["phase_star"].ravel(),
                out["residual"].ravel()):
            rows.append({"q1": q1, "t1": t1, "q2": q2, "t2": float(t2),
                         "re": v.real, "im": v.imag, "p_star": P,
                         "phase_star": ph, "residual": res})
    return {"rows": rows}, ("q1", "t1", "q2", "t2", "re", "im", "p_star",
                            "phase_star", "residual")


def _run_evolve(cfg, block, system, quad):
    g = block["grid"]
    grid = UniformGrid(q_min=float(g["q_min"]), q_max=float(g["q_max"]),
                       n_points=int(g["n_points"]))
    init = block["initial"]
    sigma = float(init["sigma"])
    center = float(init["center"])
    k0 = float(init.get("momentum", 0.0)) / system.hbar
    q = grid.points
    values = ((math.pi * sigma ** 2) ** -0.25
              * np.exp(-(q - center) ** 2 / (2 * sigma ** 2) + 1j * k0 * q))
    psi = WaveFunction(grid=grid, values=values, t=float(block["t1"]))
    out = propagate_wavefunction(system, psi, float(block["t2"]), quad)
    return out, None


def _run_compose(cfg, block, system, quad):
    g = block["grid"]
    grid = UniformGrid(q_min=float(g["q_min"]), q_max=float(g["q_max"]),
                       n_points=int(g["n_points"]))
    test = block.get("test_points")
    defect = compose_kernels(system, float(block["t1"]), float(block["t_mid"]),
                             float(block["t2"]), grid, quad,
                             test_points=None if test is None else
                             np.asarray(test, dtype=float))
    return {"defect": defect, "grid": [grid.q_min, grid.q_max, grid.n_points],
            "times": [block["t1"], block["t_mid"], block["t2"]]}, None


def _run_check_conservation(cfg, block, system, quad):
    traj = integrate_trajectory(system, float(block["q0"]), float(block["p0"]),
                                float(block["t0"]), float(block["t1"]),
                                float(block["dt"]))
    rep = conserved_coordinates(system, traj)
    energy = traj.energy()
    return {
        "maxQ_drift": rep.maxQ_drift,
        "maxP_drift": rep.maxP_drift,
        "energy_drift": float(np.max(np.abs(energy - energy[0]))),
        "n_samples": len(traj),
    }, None


def _run_skeleton(cfg, block, system, quad):
    n = int(block["n_segments"])
    q1, t1 = float(block["q1"]), float(block["t1"])
    q2, t2 = float(block["q2"]), float(block["t2"])
    path = stationary_skeleton(system, q1, t1, q2, t2, n)
    gradP, gradq = stationarity_residual(path)
    shoot = principal_function(system, q1, t1, q2, t2)
    return {
        "n_segments": n,
        "action": skeleton_action(path),
        "shooting_action": shoot.action,
        "max_residual": float(max(np.max(np.abs(gradP)),
                                  np.max(np.abs(gradq)) if len(gradq) else 0.0)),
        "positions": [float(x) for x in path.positions],
        "constants": [float(x) for x in path.constants],
    }, None


def _run_delta_check(cfg, block, system, quad):
    f = GaussianTest(center=float(block.get("test_center", block["P1"])),
                     sigma=float(block["test_sigma"]))
    lhs, rhs = delta_identity_check(system, float(block["t_mid"]),
                                    float(block["P1"]), f, quad)
    return {
        "lhs_re": lhs.real, "lhs_im": lhs.imag, "rhs": rhs.real,
        "abs_error": abs(lhs - rhs),
    }, None


_RUNNERS = {
    "kernel": _run_kernel,
    "evolve": _run_evolve,
    "compose": _run_compose,
    "check-conservation": _run_check_conservation,
    "skeleton": _run_skeleton,
    "delta-check": _run_delta_check,
}


def _round17(obj):
    """Recursively route floats through 17-significant-digit formatting."""
    if isinstance(obj, dict):
        return {k: _round17(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round17(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        return float(_fmt(obj))
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    return obj


def _write_output(result, columns, out_block, config):
    path = Path(out_block["path"])
    fmt = out_block.get("format", "csv" if columns or
                        isinstance(result, WaveFunction) else "json")
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(result, WaveFunction):
        if fmt != "csv":
            payload = _round17({
                "t": result.t,
                "q": list(result.grid.points),
                "re": list(result.values.real),
                "im": list(result.values.imag),
            })
            path.write_text(json.dumps(payload, sort_keys=True, indent=1)
                            + "\n")
        else:
            save_wavefunction_csv(result, path,
                                  system_name=config["system"]["name"])
    elif columns is not None:
        rows = result["rows"]
        if fmt == "json":
            path.write_text(json.dumps(_round17(rows), sort_keys=True,
                                       indent=1) + "\n")
        else:
            lines = [",".join(columns)]
            for row in rows:
                lines.append(",".join(_fmt(row[c]) for c in columns))
            path.write_text("\n".join(lines) + "\n")
    else:
        if fmt == "csv":
            keys = sorted(k for k, v in result.items()
                          if isinstance(v, (int, float)))
            lines = [",".join(keys),
                     ",".join(_fmt(result[k]) for k in keys)]
            path.write_text("\n".join(lines) + "\n")
        else:
            path.write_text(json.dumps(_round17(result), sort_keys=True,
                                       indent=1) + "\n")
    sidecar = path.with_name(path.name + ".meta.json")
    sidecar.write_text(json.dumps({
        "command": config["command"],
        "config": _round17({k: v for k, v in config.items()}),
        "version": __version__,
        "unix_time": time.time(),
    }, sort_keys=True, indent=1) + "\n")
    return path


def _parse_argv(argv):
    parser = argparse.ArgumentParser(
        prog="hjprop",
        description="Run one propagator/classical-check experiment from a "
                    "JSON config or inline kernel flags.")
    parser.add_argument("--config", help="path to an experiment config JSON")
    parser.add_argument("command", nargs="?", choices=list(COMMANDS),
                        help="command for inline-flag mode")
    parser.add_argument("--system", choices=list(CATALOG_NAMES) + ["catalog"])
    parser.add_argument("--m", type=float)
    parser.add_argument("--omega", type=float)
    parser.add_argument("--F", type=float)
    parser.add_argument("--hbar", type=float, default=1.0)
    parser.add_argument("--q1", type=float)
    parser.add_argument("--t1", type=float)
    parser.add_argument("--q2", type=float)
    parser.add_argument("--t2", type=float)
    parser.add_argument("--output", default="hjprop_out.csv")
    parser.add_argument("--format", choices=["csv", "json"], default="csv")
    return parser.parse_args(argv)


def _config_from_args(args):
    if args.config:
        try:
            return json.loads(Path(args.config).read_text())
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {args.config}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if args.command is None or args.system is None:
        raise ConfigError("provide --config PATH, or a command plus --system "
                          "and its inline flags")
    params = {}
    for key in ("m", "omega", "F"):
        val = getattr(args, key)
        if val is not None:
            params[key] = val
    cfg = {
        "command": args.command,
        "system": {"name": args.system, "params": params, "hbar": args.hbar},
        "output": {"path": args.output, "format": args.format},
    }
    if args.command == "kernel":
        missing = [k for k in ("q1", "t1", "q2", "t2")
                   if getattr(args, k) is None]
        if missing:
            raise ConfigError(f"kernel flags missing: {missing}")
        cfg["kernel"] = {"q1": args.q1, "t1": args.t1, "q2": args.q2,
                         "t2": args.t2}
    elif args.command != "check-hj":
        raise ConfigError(f"inline flags support only 'kernel' and "
                          f"'check-hj'; use --config for '{args.command}'")
    return cfg


def run_command(argv) -> int:
    """Execute one experiment; returns the process exit status."""
    try:
        args = _parse_argv(argv)
        config = _config_from_args(args)
        try:
            jsonschema.validate(config, CONFIG_SCHEMA)
        except jsonschema.ValidationError as exc:
            raise ConfigError(f"config rejected: {exc.message}") from exc
        command = config["command"]
        block = _command_block(config)
        if command == "check-hj":
            result, columns = _run_check_hj(config, block)
        else:
            system = _build_system(config)
            quad = _build_quad(config)
            try:
                result, columns = _RUNNERS[command](config, block, system, quad)
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
        path = _write_output(result, columns, config["output"], config)
        print(f"{command}: wrote {path}")
        return 0
    except ConfigError as exc:
        json.dump({"kind": "validation", "detail": str(exc), "location": None},
                  _sys.stderr)
        _sys.stderr.write("\n")
        return 2
    except HJPropError as exc:
        json.dump({"kind": exc.kind, "detail": str(exc),
                   "location": exc.location},
                  _sys.stderr)
        _sys.stderr.write("\n")
        return 3


def main() -> None:
    raise SystemExit(run_command(_sys.argv[1:]))
