"""Command-line front end.

Examples
--------
::

    bifoliation check --surface horosphere --kappa -1 --field constant
    bifoliation orbit --h 0.6 --steps 100 --out axis.json
    bifoliation volume --field hopf --surface sphere --rho 1 --kappa 0
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, analysis, billiard, kernels
from .fields import CATALOG_NAMES, IncompatibleSurface, make_field
from .spaceform import NoRootError, SpaceForm, c_kappa, horizon, s_kappa, t_o_root
from .surface import make_surface

SCHEMA = "bifoliation.report/1"

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

SURFACES = {
    "sphere": "geodesic sphere of radius --rho (any kappa)",
    "horosphere": "horosphere {x0 = 1} (kappa < 0), flat of dimension n",
    "horosphere-plane": "horosphere in a 3-dimensional ambient (n = 2)",
    "tilted": "equidistant hypersurface H_theta (kappa < 0)",
}

FIELD_INFO = {
    "hopf": ("sphere", "n odd", "-"),
    "hopf-perturbed": ("sphere", "n odd >= 3", "--eps in [0, 1)"),
    "w-eps": ("tilted", "n >= 2", "--eps real; default theta gives curvature -1"),
    "u-eps": ("horosphere", "n >= 2", "--eps real"),
    "constant": ("horosphere", "n >= 2", "-"),
    "fermi-bizero": ("sphere", "n = 3", "-"),
    "hopf-stereo": ("horosphere", "n = 3", "-"),
    "rotating": ("horosphere-plane", "n = 2", "--freq real"),
}

DEFAULT_KAPPA = {"sphere": 0.0, "horosphere": -1.0, "horosphere-plane": -1.0, "tilted": -4.0}

DEFAULTS = {
    "kappa": None, "surface": None, "rho": 1.0, "theta": None, "field": None, "eps": 0.1,
    "freq": 2.0, "dim": None, "h": 0.6, "start": None, "steps": 100, "samples": 200,
    "tol": analysis.DEFAULT_TOL, "seed": 0, "out": None, "csv": None, "mc": 20,
}

COMMAND_DEFAULTS = {
    "check": {"field": "hopf", "surface": "sphere"},
    "orbit": {"field": "hopf-stereo", "surface": "horosphere"},
    "volume": {"field": "hopf", "surface": "sphere"},
    "contact": {"field": "hopf", "surface": "sphere"},
    "jacobi-test": {"field": "hopf", "surface": "sphere"},
    "catalog": {},
}


class UsageError(Exception):
    pass


# -- configuration ------------------------------------------------------------

def read_config(path: str) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.lstrip("-").replace("-", "_")
        if key not in DEFAULTS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = val
    return out


_CASTS = {"kappa": float, "rho": float, "theta": float, "eps": float, "freq": float, "dim": int,
          "h": float, "steps": int, "samples": int, "tol": float, "seed": int, "mc": int}


def resolve(args: argparse.Namespace) -> dict:
    """Merge flags over config-file values over defaults."""
    cfg = read_config(args.config) if getattr(args, "config", None) else {}
    merged = {}
    for key, default in DEFAULTS.items():
        val = getattr(args, key, None)
        if val is None and key in cfg:
            val = cfg[key]
            if key in _CASTS:
                try:
                    val = _CASTS[key](val)
                except ValueError as exc:
                    raise UsageError(f"config value for {key}: {exc}") from None
        if val is None:
            val = COMMAND_DEFAULTS.get(args.command, {}).get(key, default)
        merged[key] = val
    # an explicit field without a surface gets the field's home surface
    explicit_field = getattr(args, "field", None) is not None or "field" in cfg
    explicit_surface = getattr(args, "surface", None) is not None or "surface" in cfg
    home = FIELD_INFO.get(str(merged["field"]).replace("_", "-"))
    if explicit_field and not explicit_surface and home is not None:
        merged["surface"] = home[0]
    if merged["surface"] is not None and merged["kappa"] is None:
        merged["kappa"] = DEFAULT_KAPPA[merged["surface"]]
    if merged["tol"] is not None and not merged["tol"] > 0:
        raise UsageError("--tol must be positive")
    merged["assert_"] = bool(getattr(args, "assert_", False))
    merged["timing"] = bool(getattr(args, "timing", False))
    return merged


def build(cfg: dict):
    """Surface and field for a resolved configuration."""
    name = cfg["field"].replace("_", "-")
    if name not in FIELD_INFO:
        raise UsageError(f"unknown field {cfg['field']!r}\n{catalog_text()}")
    kind = cfg["surface"]
    if kind not in SURFACES:
        raise UsageError(f"unknown surface {kind!r}\n{catalog_text()}")
    kappa = float(cfg["kappa"])
    dim = cfg["dim"]
    if dim is None:
        dim = 3 if kind == "horosphere-plane" or name == "rotating" else 4
    if kind == "horosphere-plane":
        if dim != 3:
            raise UsageError("horosphere-plane lives in a 3-dimensional ambient")
        kind = "horosphere"
    try:
        sf = SpaceForm(kappa, int(dim))
        surf = make_surface(kind, sf, rho=cfg["rho"], theta=cfg["theta"])
        fld = make_field(name, n=sf.dim - 1, eps=cfg["eps"], freq=cfg["freq"])
        fld.require(surf)
    except (ValueError, KeyError) as exc:
        raise UsageError(f"{exc}\n{catalog_text()}") from None
    return surf, fld


# -- reports ---------------------------------------------------------------------

def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def make_report(command: str, cfg: dict, results: dict, started: float | None) -> dict:
    echo = {k: v for k, v in cfg.items() if k not in ("timing",)}
    rep = {"schema": SCHEMA, "tool_version": __version__, "kernel_backend": kernels.BACKEND,
           "command": command, "config": echo, "results": results}
    if started is not None:
        rep["wall_clock_seconds"] = time.perf_counter() - started
    return _clean(rep)


def dump_report(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def _emit(report: dict, cfg: dict, lines: list[str]) -> None:
    print("\n".join(lines))
    if cfg.get("out"):
        Path(cfg["out"]).write_text(dump_report(report))
        print(f"report written to {cfg['out']}")


# -- commands ----------------------------------------------------------------------

def cmd_check(cfg: dict) -> int:
    started = time.perf_counter() if cfg["timing"] else None
    surf, fld = build(cfg)
    pts = analysis.sample_points(surf, cfg["samples"], cfg["seed"])
    cc = analysis.crosscheck_bc(fld, surf, pts, cfg["tol"])
    vb, vc = cc.verdict_b, cc.verdict_c
    results = {
        "condition_b": vb.as_dict(), "condition_c": vc.as_dict(), "agree": cc.agree,
        "discrepancies": [list(d) for d in cc.discrepancies],
        "margin_histogram": analysis.margin_histogram(vb.margins),
        "verdict": vb.kind,
    }
    lines = [f"field {fld.name} on {type(surf).__name__} (kappa={surf.sf.kappa:g}, n={surf.n})",
             f"  {vb.summary()}", f"  {vc.summary()}",
             f"  conditions agree at every sample: {cc.agree}",
             f"verdict: {vb.kind}"]
    _emit(make_report("check", cfg, results, started), cfg, lines)
    return EXIT_FAIL if cfg["assert_"] and not (vb.passed and vc.passed) else EXIT_OK


def _parse_start(text, size):
    vals = [float(v) for v in str(text).split(",")]
    if len(vals) != size:
        raise UsageError(f"--start needs {size} comma-separated numbers")
    return np.array(vals)


def cmd_orbit(cfg: dict) -> int:
    started = time.perf_counter() if cfg["timing"] else None
    if cfg["steps"] < 1:
        raise UsageError("--steps must be at least 1")
    surf, fld = build(cfg)
    if cfg["surface"] in ("horosphere", "horosphere-plane"):
        z = np.zeros(surf.n) if cfg["start"] is None else _parse_start(cfg["start"], surf.n)
        q = np.concatenate([[cfg["h"]], surf.sf.root * z])
    else:
        if cfg["start"] is None:
            raise UsageError("--start (ambient point) is required for this surface")
        q = _parse_start(cfg["start"], surf.sf.ambient_len)
    try:
        orb = billiard.iterate_orbit(fld, surf, q, cfg["steps"])
    except billiard.OutsideExterior as exc:
        raise UsageError(str(exc)) from None
    csv_path = cfg["csv"] or (str(Path(cfg["out"]).with_suffix(".csv")) if cfg["out"] else None)
    if csv_path:
        Path(csv_path).write_text(billiard.orbit_csv(orb))
    cls = orb.classification
    results = {"classification": cls.as_dict(), "steps": orb.steps, "truncated": orb.truncated,
               "failure": orb.failure, "start": q, "end": orb.points[-1], "csv": csv_path,
               "tolerances": {"period_eps": billiard.PERIOD_EPS,
                              "unbounded_r2": billiard.UNBOUNDED_R2,
                              "rotation_stable": billiard.ROTATION_STABLE}}
    extra = {"periodic": f"period {cls.period}", "unbounded": f"drift {cls.drift!r} per step",
             "bounded-nonperiodic": f"rotation number {cls.rotation_number!r}"}.get(cls.kind, "")
    lines = [f"orbit of {fld.name}: {orb.steps} steps from {np.round(q, 6).tolist()}"
             + (" (truncated: " + orb.failure + ")" if orb.truncated else ""),
             f"classification: {cls.kind} {extra}".rstrip()]
    if csv_path:
        lines.append(f"orbit written to {csv_path}")
    _emit(make_report("orbit", cfg, results, started), cfg, lines)
    return EXIT_NUMERIC if orb.truncated else EXIT_OK


def cmd_volume(cfg: dict) -> int:
    started = time.perf_counter() if cfg["timing"] else None
    surf, fld = build(cfg)
    pts = analysis.sample_points(surf, cfg["samples"], cfg["seed"])
    parity = analysis.volume_parity(fld, surf, pts, cfg["tol"])
    divs = [float(np.trace(analysis.nabla(fld, surf, p).matrix)) for p in pts]
    rng = np.random.default_rng(cfg["seed"])
    rows = []
    for q in surf.random_exterior(rng, cfg["mc"]):
        a = billiard.jacobian_det_B(fld, surf, q, "analytic")
        f = billiard.jacobian_det_B(fld, surf, q, "fd")
        rows.append({"q": q, "analytic": a, "fd": f})
    max_a = max((abs(r["analytic"] - 1.0) for r in rows), default=0.0)
    max_f = max((abs(r["fd"] - 1.0) for r in rows), default=0.0)
    rel = max((abs(r["analytic"] - r["fd"]) / max(abs(r["analytic"]), 1e-300) for r in rows),
              default=0.0)
    results = {"parity": parity.as_dict(), "preserves_volume": parity.passed,
               "max_abs_divergence": max(map(abs, divs)) if divs else 0.0,
               "max_det_minus_1": {"analytic": max_a, "fd": max_f},
               "analytic_vs_fd_rel": rel, "audit": rows,
               "tolerances": {"parity": cfg["tol"], "fd_step": billiard.DET_FD_STEP}}
    lines = [f"field {fld.name} on {type(surf).__name__} (kappa={surf.sf.kappa:g}, n={surf.n})",
             f"  {parity.summary()}",
             f"  max |div v| = {results['max_abs_divergence']:.3e}",
             f"  max |det dB - 1|: analytic {max_a:.3e}, finite-difference {max_f:.3e} "
             f"over {len(rows)} points",
             f"  analytic vs finite-difference relative gap {rel:.3e}",
             "verdict: " + ("preserves volume" if parity.passed else "does not preserve volume")]
    if not parity.passed:
        w = parity.worst
        lines.insert(2, f"  parity witness: {w.note} = {w.eigenvalue.real:.6g} at "
                        f"{np.round(w.point, 6).tolist()}")
    _emit(make_report("volume", cfg, results, started), cfg, lines)
    return EXIT_FAIL if cfg["assert_"] and not parity.passed else EXIT_OK


def cmd_contact(cfg: dict) -> int:
    started = time.perf_counter() if cfg["timing"] else None
    surf, fld = build(cfg)
    if surf.n != 3:
        raise UsageError("contact check needs a 3-dimensional hypersurface")
    pts = analysis.sample_points(surf, cfg["samples"], cfg["seed"])
    per = [{"point": p, "magnitude": analysis.contact_margin(fld, surf, p)} for p in pts]
    for row in per:
        row["contact"] = row["magnitude"] > cfg["tol"]
    n_contact = sum(r["contact"] for r in per)
    results = {"samples": per, "contact_everywhere": n_contact == len(per),
               "contact_count": n_contact, "tolerance": cfg["tol"]}
    mags = [r["magnitude"] for r in per]
    status = ("contact at every sample" if n_contact == len(per)
              else "not contact anywhere sampled" if n_contact == 0
              else f"contact at {n_contact} of {len(per)} samples")
    lines = [f"field {fld.name} on {type(surf).__name__} (kappa={surf.sf.kappa:g})",
             f"  |A12 - A21| ranges over [{min(mags):.3e}, {max(mags):.3e}]",
             f"verdict: {status}"]
    _emit(make_report("contact", cfg, results, started), cfg, lines)
    return EXIT_FAIL if cfg["assert_"] and n_contact != len(per) else EXIT_OK


def jacobi_selfcheck(surf, fld, samples: int, seed: int) -> dict:
    """Space-form identities, Jacobi fields against geodesic variations, and t_o roots."""
    sf = surf.sf
    kappa = sf.kappa
    tmax = min(3.0, 0.9 * horizon(kappa)) if kappa > 0 else 3.0
    ts = np.linspace(-tmax, tmax, 61)
    ident = float(np.max(np.abs(c_kappa(kappa, ts) ** 2 + kappa * s_kappa(kappa, ts) ** 2 - 1)))
    odd = float(np.max(np.abs(s_kappa(kappa, ts) + s_kappa(kappa, -ts))))
    rng = np.random.default_rng(seed)
    jac_err = 0.0
    for p in surf.model.random(rng, samples):
        t = float(rng.uniform(0.1, min(1.5, 0.9 * horizon(kappa))))
        for k in range(1, surf.n):
            J, fd = billiard.jacobi_variation(fld, surf, p, k, t)
            jac_err = max(jac_err, float(np.max(np.abs(J - fd))))
    root_err, root_inside = 0.0, True
    for lam in np.linspace(-4, 4, 33):
        try:
            t = t_o_root(kappa, lam)
        except NoRootError:
            continue
        root_err = max(root_err, abs(float(c_kappa(kappa, t) - abs(lam) * s_kappa(kappa, t))))
        root_inside &= 0 < t < horizon(kappa)
    return {"pythagoras": ident, "odd_symmetry": odd, "jacobi_vs_fd": jac_err,
            "t_o_residual": root_err, "t_o_inside": bool(root_inside),
            "passed": ident < 1e-12 and odd < 1e-12 and jac_err < 1e-5 and root_err < 1e-12
            and root_inside}


def cmd_jacobi(cfg: dict) -> int:
    started = time.perf_counter() if cfg["timing"] else None
    surf, fld = build(cfg)
    res = jacobi_selfcheck(surf, fld, min(cfg["samples"], 50), cfg["seed"])
    lines = [f"space form kappa={surf.sf.kappa:g}, dim={surf.sf.dim}",
             f"  c^2 + kappa s^2 - 1: {res['pythagoras']:.2e}",
             f"  Jacobi field vs geodesic variation: {res['jacobi_vs_fd']:.2e} (tol 1e-5)",
             f"  t_o residual: {res['t_o_residual']:.2e} (tol 1e-12)",
             "verdict: " + ("pass" if res["passed"] else "FAIL")]
    _emit(make_report("jacobi-test", cfg, res, started), cfg, lines)
    return EXIT_OK if res["passed"] else EXIT_NUMERIC


def catalog_text() -> str:
    lines = ["fields:"]
    for name in CATALOG_NAMES:
        key = name.replace("_", "-")
        surf, dims, params = FIELD_INFO[key]
        lines.append(f"  {key:<15} surface={surf:<17} {dims:<11} params: {params}")
    lines.append("surfaces:")
    for name, desc in SURFACES.items():
        lines.append(f"  {name:<17} {desc}")
    return "\n".join(lines)


def cmd_catalog(cfg: dict) -> int:
    print(catalog_text())
    if cfg.get("out"):
        data = {"fields": {k: dict(zip(("surface", "dims", "params"), v))
                           for k, v in FIELD_INFO.items()}, "surfaces": SURFACES}
        Path(cfg["out"]).write_text(dump_report(make_report("catalog", cfg, data, None)))
    return EXIT_OK


COMMANDS = {"check": cmd_check, "orbit": cmd_orbit, "volume": cmd_volume,
            "contact": cmd_contact, "jacobi-test": cmd_jacobi, "catalog": cmd_catalog}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("selection")
    g.add_argument("--kappa", type=float, help="ambient curvature")
    g.add_argument("--surface", choices=sorted(SURFACES), help="umbilic hypersurface N")
    g.add_argument("--rho", type=float, help="sphere radius (default 1)")
    g.add_argument("--theta", type=float, help="tilt angle of H_theta")
    g.add_argument("--dim", type=int, help="ambient dimension n+1 (default 4, or 3 for planes)")
    g.add_argument("--field", help="catalog field name")
    g.add_argument("--eps", type=float, help="perturbation parameter (default 0.1)")
    g.add_argument("--freq", type=float, help="frequency of the rotating field (default 2)")
    r = common.add_argument_group("run")
    r.add_argument("--h", type=float, help="horosphere level for orbits (default 0.6)")
    r.add_argument("--start", help="orbit start: flat chart point on horospheres, else ambient")
    r.add_argument("--steps", type=int, help="billiard steps (default 100)")
    r.add_argument("--samples", type=int, help="sample grid size (default 200)")
    r.add_argument("--mc", type=int, help="Monte Carlo points for Jacobian audits (default 20)")
    r.add_argument("--tol", type=float, help="verdict tolerance (default 1e-8)")
    r.add_argument("--seed", type=int, help="random seed (default 0)")
    r.add_argument("--out", help="write the JSON report here")
    r.add_argument("--csv", help="orbit CSV path (default: --out with .csv suffix)")
    r.add_argument("--config", help="flat key=value file; flags take precedence")
    r.add_argument("--assert", dest="assert_", action="store_true",
                   help="exit 1 when the verdict fails")
    r.add_argument("--timing", action="store_true",
                   help="record wall-clock time (reports are then no longer reproducible)")
    parser = argparse.ArgumentParser(prog="bifoliation", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {"check": "bifoliation verdicts (conditions b and c)",
             "orbit": "iterate the outer billiard map",
             "volume": "volume preservation: parity and Jacobian audit",
             "contact": "contact test of the dual 1-form (n = 3)",
             "jacobi-test": "space-form and Jacobi-field self-checks",
             "catalog": "list fields and surfaces"}
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve(args)
        return COMMANDS[args.command](cfg)
    except (UsageError, IncompatibleSurface) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ArithmeticError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
