"""Command-line front end.

Exit codes: 0 all audits passed (or expected failures confirmed), 1 audit
violation, 2 configuration or usage error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import acceptance
from .ambient import DiscBody, ModelSpace
from .audit import bonnesen_audit, minkowski_audit, nesting_audit, ns_scan, parallel_monotone_audit, sphere_audits
from .errors import DomainError, HmcfError, NumericalFailure
from .flow import AREA_STOP, STEP_COLLAPSE, TIME_STOP, FlowConfig, run
from .io import write_family, write_reports, write_trace
from .parallel import (
    NsBody,
    d_convexity_check,
    estimate_inradius,
    ns_surface,
    ordered_map,
    parallel_family,
    steiner_audit,
)
from .report import AuditReport
from .surface import gauss_bonnet_residual, perturbed_sphere, surface_integrals

log = logging.getLogger("hmcflab")

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------
# configuration schema

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_nonpos = {"type": "number", "maximum": 0}
_int = {"type": "integer", "minimum": 1}
_numlist = {"type": "array", "items": _num, "minItems": 1}
_poslist = {"type": "array", "items": _pos, "minItems": 1}
_mode = {"type": "array", "items": _num, "minItems": 3, "maxItems": 3}
_surface = {
    "a": _nonpos,
    "rho": _pos,
    "modes": {"type": "array", "items": _mode},
    "ntheta": _int,
    "nphi": _int,
    "tolerance_scale": {"type": "number", "minimum": 0},
    "json": {"type": "string"},
    "csv": {"type": "string"},
}

SCHEMAS = {
    "flow": {
        **_surface,
        "dt": _pos,
        "rel_tol": _pos,
        "area_stop": _pos,
        "t_max": _pos,
        "max_steps": _int,
        "lambda_phi": _num,
        "out": {"type": "string"},
    },
    "audit-sphere": dict(_surface),
    "ns-scan": {
        "r": _poslist,
        "eps": _poslist,
        "method": {"enum": ["profile", "grid"]},
        "ntheta": _int,
        "nphi": _int,
        "out": {"type": "string"},
        "json": {"type": "string"},
        "csv": {"type": "string"},
    },
    "steiner": {**_surface, "ts": _poslist},
    "bonnesen": {**_surface, "ns_r": _pos, "ns_eps": _pos, "offsets": _numlist},
    "parallel": {**_surface, "offsets": _numlist, "out_dir": {"type": "string"}},
    "suite": {
        "criteria": {"type": "array", "items": {"type": "integer", "minimum": 1, "maximum": 11}},
        "tolerance_scale": {"type": "number", "minimum": 0},
        "summary": {"type": "string"},
    },
}


def schema_for(command):
    return {"type": "object", "properties": SCHEMAS[command], "additionalProperties": False}


def load_config(path, command):
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"config file not found: {path}")
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise UsageError(f"config is not valid JSON: {exc}") from exc
    try:
        jsonschema.validate(data, schema_for(command))
    except jsonschema.ValidationError as exc:
        raise UsageError(f"config rejected: {exc.message}") from exc
    return data


# --------------------------------------------------------------------------
# flag parsing helpers


def float_list(text):
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def mode_spec(text):
    vals = float_list(text)
    if len(vals) != 3:
        raise argparse.ArgumentTypeError("a mode is l,m,amplitude")
    return [vals[0], vals[1], vals[2]]


DEFAULTS = {
    "a": -1.0,
    "rho": 1.0,
    "modes": [],
    "ntheta": 32,
    "nphi": 64,
    "tolerance_scale": 1.0,
    "dt": 1e-3,
    "rel_tol": 1e-6,
    "area_stop": None,
    "t_max": None,
    "max_steps": 100000,
    "lambda_phi": 2.0,
    "r": [1.0, 3.0, 8.0],
    "eps": [0.1, 0.05, 0.025],
    "method": "profile",
    "ts": [0.1, 0.5, 1.0],
    "offsets": [-0.3, -0.1, 0.1, 0.3, 0.5],
    "criteria": None,
}


def _add_surface_flags(p):
    p.add_argument("--a", type=float, help="ambient curvature (<= 0)")
    p.add_argument("--rho", type=float, help="base sphere radius")
    p.add_argument("--modes", type=mode_spec, action="append", help="perturbation l,m,amplitude (repeatable)")
    p.add_argument("--ntheta", type=int)
    p.add_argument("--nphi", type=int)
    p.add_argument("--tolerance-scale", type=float, dest="tolerance_scale")
    p.add_argument("--json", help="write reports as JSON")
    p.add_argument("--csv", help="write report summary CSV")


def build_parser():
    parser = argparse.ArgumentParser(prog="hmcflab", description="Harmonic mean curvature flow laboratory")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("flow", help="run the flow from a (perturbed) geodesic sphere")
    _add_surface_flags(p)
    p.add_argument("--dt", type=float)
    p.add_argument("--rel-tol", type=float, dest="rel_tol")
    p.add_argument("--area-stop", type=float, dest="area_stop")
    p.add_argument("--t-max", type=float, dest="t_max")
    p.add_argument("--max-steps", type=int, dest="max_steps")
    p.add_argument("--lambda-phi", type=float, dest="lambda_phi")
    p.add_argument("--out", help="trace CSV path")

    p = sub.add_parser("audit-sphere", help="closed-form comparisons and audits on a geodesic sphere")
    _add_surface_flags(p)

    p = sub.add_parser("ns-scan", help="disc-tube extrapolation table")
    p.add_argument("--r", type=float_list)
    p.add_argument("--eps", type=float_list)
    p.add_argument("--method", choices=["profile", "grid"])
    p.add_argument("--ntheta", type=int)
    p.add_argument("--nphi", type=int)
    p.add_argument("--out", help="table CSV path")
    p.add_argument("--json")
    p.add_argument("--csv")

    p = sub.add_parser("steiner", help="Steiner lower bound on outer parallels")
    _add_surface_flags(p)
    p.add_argument("--ts", type=float_list)

    p = sub.add_parser("bonnesen", help="volume bound from area and inradius")
    _add_surface_flags(p)
    p.add_argument("--ns-r", type=float, dest="ns_r", help="use a disc tube of this disc radius")
    p.add_argument("--ns-eps", type=float, dest="ns_eps", help="tube thickness for --ns-r")
    p.add_argument("--offsets", type=float_list, help="inner offsets for the convexity check")

    p = sub.add_parser("parallel", help="build a parallel family and audit it")
    _add_surface_flags(p)
    p.add_argument("--offsets", type=float_list)
    p.add_argument("--out-dir", dest="out_dir")

    p = sub.add_parser("suite", help="run the acceptance criteria")
    p.add_argument("config", nargs="?", help="suite config (JSON)")
    p.add_argument("--tolerance-scale", type=float, dest="tolerance_scale")
    p.add_argument("--summary", help="summary JSON path")

    for name, sp in sub.choices.items():
        if name != "suite":
            sp.add_argument("--config", help="JSON config with the same keys as the flags")
    return parser


def resolve(args):
    """Merge config file values under explicit flags, then fill defaults."""
    values = {k: v for k, v in vars(args).items() if k not in ("command", "verbose", "config")}
    cfg_path = getattr(args, "config", None)
    if args.command == "suite":
        if cfg_path is None:
            raise UsageError("suite needs a config file")
    if cfg_path is not None:
        for key, val in load_config(cfg_path, args.command).items():
            if values.get(key) is None:
                values[key] = val
    for key, val in DEFAULTS.items():
        if key == "offsets" and args.command == "bonnesen":
            continue
        if key in values and values[key] is None:
            values[key] = val
    if values.get("tolerance_scale") is not None and values["tolerance_scale"] < 0:
        raise UsageError("tolerance scale must be nonnegative")
    if "a" in values and values["a"] is not None and values["a"] > 0:
        raise UsageError("curvature must be <= 0")
    return values


def _surface(v):
    modes = [(int(l), int(m), float(amp)) for l, m, amp in v["modes"]]
    return perturbed_sphere(ModelSpace(v["a"]), rho0=v["rho"], modes=modes, ntheta=v["ntheta"], nphi=v["nphi"])


def _emit(v, reports):
    write_reports(v.get("json"), v.get("csv"), reports)
    for r in reports:
        status = "pass" if r.passed else "FAIL"
        extra = " (expected failure)" if r.expected_to_fail else ""
        print(f"{r.name}: lhs={r.lhs:.10g} rhs={r.rhs:.10g} slack={r.slack:.10g} tol={r.tolerance:.3g} {status}{extra}")
    return EXIT_OK if all(r.passed for r in reports) else EXIT_VIOLATION


# --------------------------------------------------------------------------
# commands


def cmd_flow(v):
    s = _surface(v)
    i0 = surface_integrals(s)[0]
    area_stop = v["area_stop"] if v["area_stop"] is not None else 1e-2 * i0.area
    cfg = FlowConfig(
        dt_init=v["dt"],
        rel_tol=v["rel_tol"],
        area_stop=area_stop,
        max_steps=v["max_steps"],
        lambda_phi=v["lambda_phi"],
        t_max=v["t_max"],
    )
    trace = run(s, cfg)
    if v.get("out"):
        write_trace(v["out"], trace)
    print(f"termination: {trace.termination} after {len(trace.samples) - 1} steps, t = {trace.samples[-1].t:.10g}")
    if trace.termination == STEP_COLLAPSE:
        print("step size collapsed", file=sys.stderr)
        return EXIT_NUMERICAL
    events = acceptance.phi_increase_events(trace, 1e-6 * v["tolerance_scale"])
    reports = [minkowski_audit(smp.integrals, s.a, tolerance_scale=v["tolerance_scale"]) for smp in trace.samples]
    bad = sum(not r.passed for r in reports)
    summary = AuditReport.build(
        "phi_monotone", 0.0, float(events), 0.0, samples=len(trace.samples), minkowski_violations=bad
    )
    write_reports(v.get("json"), v.get("csv"), [summary])
    print(f"phi increase events: {events}; minkowski violations: {bad}")
    if trace.termination not in (AREA_STOP, TIME_STOP):
        print(f"flow stopped early ({trace.termination})", file=sys.stderr)
    return EXIT_OK if events == 0 and bad == 0 else EXIT_VIOLATION


def cmd_audit_sphere(v):
    d = sphere_audits(v["a"], v["rho"], v["ntheta"], v["nphi"], v["tolerance_scale"])
    i, ex = d["integrals"], d["exact"]
    for key in ("area", "M", "Gtot", "volume"):
        print(f"{key}: {getattr(i, key):.12g} (exact {getattr(ex, key):.12g})")
    print(f"gauss-bonnet residual: {d['gauss_bonnet']:.3e}")
    mk = d["reports"][0]
    print(f"minkowski slack: {mk.slack:.10g}")
    code = _emit(v, d["reports"])
    worst = max(d["errors"].values())
    if worst > 1e-6 * v["tolerance_scale"] or d["gauss_bonnet"] > 1e-6 * i.Gtot * v["tolerance_scale"]:
        print(f"closed-form mismatch {worst:.3e}", file=sys.stderr)
        return EXIT_VIOLATION
    return code


def cmd_ns_scan(v):
    rows, report = ns_scan(v["r"], v["eps"], method=v["method"], grid=(v["ntheta"], v["nphi"]))
    cols = ["r", "area", "M", "area_limit", "M_limit", "area_error", "M_error", "implied_lambda", "lambda_threshold"]
    print(" ".join(f"{c:>16s}" for c in cols))
    for row in rows:
        d = row.as_dict()
        print(" ".join(f"{float(d[c]):16.8g}" for c in cols))
    if v.get("out"):
        with open(v["out"], "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cols)
            for row in rows:
                d = row.as_dict()
                w.writerow([repr(float(d[c])) for c in cols])
    parts = [AuditReport.from_dict(p) for p in report.metadata["parts"]]
    return _emit(v, parts)


def cmd_steiner(v):
    s = _surface(v)
    rep = steiner_audit(s, v["ts"])
    return _emit(v, [AuditReport.from_dict(p) for p in rep.metadata["parts"]])


def cmd_bonnesen(v):
    scale = v["tolerance_scale"]
    if v.get("ns_r") is not None:
        if v.get("ns_eps") is None:
            raise UsageError("--ns-r needs --ns-eps")
        body = NsBody(DiscBody.standard(v["ns_r"]), v["ns_eps"])
        i = body.integrals
        inrad = estimate_inradius(ns_surface(body.disc, body.eps, v["ntheta"], v["nphi"]))
        offsets = [-f * body.eps for f in (0.25, 0.5, 0.75)]
        gb = gauss_bonnet_residual(i, body.space.a)
        target = body
    else:
        s = _surface(v)
        i, _ = surface_integrals(s)
        inrad = estimate_inradius(s)
        offsets = [-f * inrad for f in (0.25, 0.5, 0.75)]
        gb = gauss_bonnet_residual(i, s.a)
        target = s
    if v.get("offsets"):
        offsets = v["offsets"]
    check = d_convexity_check(target, offsets)
    print(f"volume {i.volume:.10g}, area {i.area:.10g}, inradius {inrad:.10g}")
    print(f"inner parallels convex at {offsets}: {check.ok}" + (f" ({check.failure})" if not check.ok else ""))
    if not check.ok:
        print("d-convexity not established; the bound is not applicable", file=sys.stderr)
        return EXIT_NUMERICAL
    R = np.sqrt(i.area / (4 * np.pi))
    rep = bonnesen_audit(i.volume, i.area, min(inrad, R), tolerance=max(1e-9 * i.volume, gb) * scale)
    return _emit(v, [rep])


def cmd_parallel(v):
    s = _surface(v)
    offsets = sorted(v["offsets"])
    fam = parallel_family(s, offsets)
    if v.get("out_dir"):
        index = write_family(v["out_dir"], fam)
        print(f"family written: {index}")
    ints = fam.integrals()
    base, _ = surface_integrals(s)
    reports = []
    for t, i in zip(offsets, ints):
        inner, outer = (i, base) if t < 0 else (base, i)
        reports.append(nesting_audit(inner, outer, tolerance_scale=v["tolerance_scale"], t=t))
        print(f"t={t:+.4f} area={i.area:.10g} M={i.M:.10g} Gtot={i.Gtot:.10g} volume={i.volume:.10g}")
    pos = [t for t in offsets if t > 0]
    if pos:
        reports.append(parallel_monotone_audit(s, [0.0] + pos))
    return _emit(v, reports)


def cmd_suite(v):
    numbers = v["criteria"] or sorted(acceptance.CRITERIA)
    scale = v["tolerance_scale"]
    results = ordered_map(lambda n: acceptance.run_criterion(n, scale), numbers)
    for r in results:
        print(r.line())
    ok = all(r.passed for r in results)
    if v.get("summary"):
        payload = {"pass": ok, "tolerance_scale": scale, "criteria": []}
        for r in results:
            d = r.to_dict()
            d.pop("seconds")
            payload["criteria"].append(d)
        Path(v["summary"]).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return EXIT_OK if ok else EXIT_VIOLATION


COMMANDS = {
    "flow": cmd_flow,
    "audit-sphere": cmd_audit_sphere,
    "ns-scan": cmd_ns_scan,
    "steiner": cmd_steiner,
    "bonnesen": cmd_bonnesen,
    "parallel": cmd_parallel,
    "suite": cmd_suite,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, stream=sys.stderr)
    try:
        values = resolve(args)
        return COMMANDS[args.command](values)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalFailure as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (DomainError, HmcfError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
