"""Batch front door: simulate / exact / compare / audit / curve commands.

Exit codes: 0 success, 2 validation error, 3 factorization breakdown (partial
CSV still written), 4 oracle blow-up (partial CSV still written), 5 requested
exact mode unsupported for the family.  Outputs embed the config hash, the
library version and the seed; identical configs produce identical bytes.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys

import numpy as np

from . import __version__
from .errors import BreakdownError, GridError, ValidationError
from .models import PhasePoint, ReducedPoint, model_from_json_dict
from .presets import load_preset, preset_names
from .rk import audit, default_z_samples, integrate, trajectory_csv_lines
from .solver_rational import solve_rational, solve_rational_reduced
from .solver_trig import solve_trig, solve_trig_reduced
from .spectral import branch_count_genus, genericity_check

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_BREAKDOWN = 3
EXIT_BLOWUP = 4
EXIT_UNSUPPORTED = 5


def _parse_z_samples(text):
    return [complex(tok.strip().replace(" ", "")) for tok in text.split(",") if tok.strip()]


def _load_json(path):
    with open(path) as fh:
        return json.load(fh)


def _point_from_json(d):
    if "xi" in d:
        return PhasePoint.from_json_dict(d)
    if "s" in d:
        return ReducedPoint.from_json_dict(d)
    raise ValidationError("initial point JSON needs an 'xi' or 's' field")


def _resolve(args):
    """(spec, pt, params, config_dict) from --preset or --model/--init."""
    params = {"t_end": 1.0, "samples": 101, "tol": 1e-10, "threshold": 1e-6}
    if args.preset:
        preset_dir = os.environ.get("SPINCM_PRESET_DIR")
        if preset_dir and os.path.exists(os.path.join(preset_dir, args.preset + ".json")):
            d = _load_json(os.path.join(preset_dir, args.preset + ".json"))
            spec = model_from_json_dict(d["model"])
            pt = _point_from_json(d["init"])
            params.update(d.get("defaults", {}))
        else:
            data = load_preset(args.preset, seed=args.seed)
            spec = data["model"]
            pt = data["init"]
            params.update(data["defaults"])
    else:
        if not args.model or not args.init:
            raise ValidationError("need either --preset or both --model and --init")
        spec = model_from_json_dict(_load_json(args.model))
        pt = _point_from_json(_load_json(args.init))
    for name in ("t_end", "samples", "tol", "threshold"):
        val = getattr(args, name, None)
        if val is not None:
            params[name] = val
    if args.z_samples:
        params["z_samples"] = [[z.real, z.imag] for z in _parse_z_samples(args.z_samples)]
    init_json = pt.to_json_dict()
    config = {"command": args.command, "model": spec.to_json_dict(),
              "init": init_json, "params": {k: v for k, v in params.items()
                                            if k != "t_star"},
              "seed": args.seed, "preset": args.preset}
    return spec, pt, params, config


def _config_hash(config):
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _meta(config):
    return {"spincm_version": __version__, "config_hash": _config_hash(config),
            "seed": config["seed"]}


def _write_lines(path, lines):
    text = "\n".join(lines) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _write_json(path, obj):
    text = json.dumps(obj, sort_keys=True, indent=1)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def _z_list(spec, params):
    if "z_samples" in params:
        return [complex(a, b) for a, b in params["z_samples"]]
    return default_z_samples(spec)


def cmd_simulate(args):
    spec, pt, params, config = _resolve(args)
    traj = integrate(spec, pt, params["t_end"], samples=int(params["samples"]),
                     tol=params["tol"])
    rep = audit(spec, traj, _z_list(spec, params))
    lines = trajectory_csv_lines(traj, _meta(config))
    lines.append(f"# energy_drift: {rep.energy_drift!r}")
    lines.append(f"# momentum_drift: {rep.momentum_drift!r}")
    if traj.blowup:
        lines.append(f"# blowup_at: {float(traj.last_good_time)!r}")
    _write_lines(args.out, lines)
    return EXIT_BLOWUP if traj.blowup else EXIT_OK


def _exact(spec, pt, params):
    times = np.linspace(0.0, params["t_end"], int(params["samples"]))
    if spec.family == "rational":
        if isinstance(pt, ReducedPoint):
            return solve_rational_reduced(spec, pt, times), None
        return solve_rational(spec, pt, times)
    if spec.family == "trigonometric":
        if isinstance(pt, ReducedPoint):
            return solve_trig_reduced(spec, pt, times), None
        return solve_trig(spec, pt, times)
    raise NotImplementedError


def cmd_exact(args):
    spec, pt, params, config = _resolve(args)
    if spec.family == "elliptic":
        sys.stderr.write(
            "exact mode is unsupported for the elliptic family: the explicit "
            "solution runs through Riemann theta functions of a genus-"
            f"{(spec.ctx.N ** 2 - spec.ctx.N + 2) // 2} spectral curve, which "
            "is out of scope; use `simulate` and `curve` instead.\n")
        return EXIT_UNSUPPORTED
    code = EXIT_OK
    fact = None
    try:
        out = _exact(spec, pt, params)
        traj, fact = out if isinstance(out, tuple) else (out, None)
    except BreakdownError as exc:
        traj, fact = exc.partial, exc.factors
        code = EXIT_BREAKDOWN
    lines = trajectory_csv_lines(traj, _meta(config))
    if traj.breakdown_time is not None:
        lines.append(f"# breakdown_at: {float(traj.breakdown_time)!r}")
    _write_lines(args.out, lines)
    if args.dump_factors and fact is not None:
        _write_json(args.dump_factors, fact.to_json_dict())
    return code


def cmd_compare(args):
    spec, pt, params, config = _resolve(args)
    if spec.family == "elliptic":
        sys.stderr.write("compare requires a family with an exact solver\n")
        return EXIT_UNSUPPORTED
    traj_o = integrate(spec, pt, params["t_end"], samples=int(params["samples"]),
                       tol=params["tol"])
    if traj_o.blowup:
        return EXIT_BLOWUP
    try:
        out = _exact(spec, pt, params)
        traj_e = out[0] if isinstance(out, tuple) else out
    except BreakdownError:
        return EXIT_BREAKDOWN
    reduced = isinstance(pt, ReducedPoint)
    sup = {"sup_q": 0.0, "sup_p": 0.0, "sup_xi": 0.0}
    for a, b in zip(traj_e.states, traj_o.states):
        sup["sup_q"] = max(sup["sup_q"], float(np.abs(a.q - b.q).max()))
        sup["sup_p"] = max(sup["sup_p"], float(np.abs(a.p - b.p).max()))
        ma, mb = (a.s, b.s) if reduced else (a.xi, b.xi)
        sup["sup_xi"] = max(sup["sup_xi"], float(np.abs(ma - mb).max()))
    thr = params["threshold"]
    ok = all(v <= thr for v in sup.values())
    report = dict(sup)
    report.update({"threshold": thr, "pass": bool(ok)})
    report.update(_meta(config))
    _write_json(args.out, report)
    return EXIT_OK if ok else 1


def cmd_audit(args):
    spec, pt, params, config = _resolve(args)
    traj = integrate(spec, pt, params["t_end"], samples=int(params["samples"]),
                     tol=params["tol"])
    rep = audit(spec, traj, _z_list(spec, params))
    report = rep.to_json_dict()
    report["blowup"] = bool(traj.blowup)
    report.update(_meta(config))
    _write_json(args.out, report)
    return EXIT_OK


def cmd_curve(args):
    spec, pt, params, config = _resolve(args)
    if spec.family != "elliptic":
        sys.stderr.write("curve requires the elliptic family\n")
        return EXIT_VALIDATION
    rep = genericity_check(spec, pt)
    report = {"N": spec.ctx.N}
    report.update(rep.to_json_dict())
    if rep.ga1_ok and rep.ga2_ok:
        B, genus = branch_count_genus(spec, pt)
        report["B"] = B
        report["genus"] = genus
    else:
        report["B"] = None
        report["genus"] = None
    report.update(_meta(config))
    _write_json(args.out, report)
    return EXIT_OK


def build_parser():
    ap = argparse.ArgumentParser(
        prog="spincm",
        description="spin Calogero-Moser systems: simulate, solve exactly, audit")
    ap.add_argument("command",
                    choices=["simulate", "exact", "compare", "audit", "curve"])
    ap.add_argument("--model", help="model JSON file")
    ap.add_argument("--init", help="initial point JSON file")
    ap.add_argument("--preset", help=f"named preset; one of {preset_names()}")
    ap.add_argument("--t-end", dest="t_end", type=float, default=None)
    ap.add_argument("--samples", type=int, default=None)
    ap.add_argument("--tol", type=float, default=None)
    ap.add_argument("--z-samples", dest="z_samples",
                    help="comma-separated complex numbers, e.g. '0.7,1.3j'")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", help="output path (stdout when omitted)")
    ap.add_argument("--dump-factors", dest="dump_factors",
                    help="write factorization path JSON here (exact only)")
    ap.add_argument("--threshold", type=float, default=None,
                    help="acceptance threshold for compare")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    handler = {"simulate": cmd_simulate, "exact": cmd_exact,
               "compare": cmd_compare, "audit": cmd_audit,
               "curve": cmd_curve}[args.command]
    try:
        return handler(args)
    except (ValidationError, GridError, KeyError, FileNotFoundError,
            json.JSONDecodeError, NotImplementedError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
