"""Command-line front end.

Exit codes: 0 certified, 1 not certified, 2 unknown or solver failure,
64 input errors (parse errors, bad files, bad arguments).
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import re
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import List, Optional

from . import __version__
from .certificates import (
    circuit_number,
    find_negative_point,
    is_nonneg_circuit,
    membership,
    verify_witness,
    witness_from_json,
    witness_residuals,
)
from .conic import SolverUnknown
from .geometry import detect_circuit
from .lyapunov import (
    LyapunovResult,
    Mode,
    SearchOptions,
    SimulationError,
    Verdict,
    derive_verdict,
    generate_support,
    search,
    simulate,
    verify_candidate,
)
from .poly import DynSystem, ParseError, SparsePoly, format_poly, lie_derivative, parse_poly

SCHEMA_VERSION = 1
EXIT_OK, EXIT_NOT_CERTIFIED, EXIT_UNKNOWN, EXIT_USAGE = 0, 1, 2, 64


class InputError(Exception):
    """Bad input file or argument; maps to exit code 64."""


# ----------------------------------------------------------------- input


def load_system(path: str):
    """Read a system file; returns ``(DynSystem, data dict, raw bytes)``."""
    try:
        raw = Path(path).read_bytes()
        data = json.loads(raw.decode("utf-8"))
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise InputError(f"{path}: {exc}") from exc
    vars_, odes = data.get("vars"), data.get("odes")
    if not isinstance(vars_, list) or not isinstance(odes, list):
        raise InputError(f"{path}: 'vars' and 'odes' must be lists")
    if len(vars_) != len(odes):
        raise InputError(f"{path}: {len(odes)} odes for {len(vars_)} vars")
    rhs = []
    for name, text in zip(vars_, odes):
        try:
            rhs.append(parse_poly(text, vars_))
        except ParseError as exc:
            raise InputError(f"{path}: ode for {name}: {exc}") from exc
    f = DynSystem(rhs)
    bad = f.nonzero_constant_terms()
    if bad:
        i, c = bad[0]
        raise InputError(f"{path}: ode for {vars_[i]} has constant term {c:g}; the origin is not an equilibrium")
    return f, data, raw


def _parse(text: str, vars_) -> SparsePoly:
    try:
        return parse_poly(text, vars_)
    except ParseError as exc:
        raise InputError(str(exc)) from exc


def _natural_key(name):
    return [int(t) if t.isdigit() else t for t in re.split(r"(\d+)", name)]


def _infer_vars(text: str) -> List[str]:
    names = set(re.findall(r"[A-Za-z_][A-Za-z_0-9]*", text))
    return sorted(names, key=_natural_key)


def _exponent_of(text: str, vars_) -> tuple:
    p = _parse(text, vars_)
    if len(p) != 1:
        raise InputError(f"{text!r} is not a single monomial")
    (a,) = p.support
    return a


def _sha256(*chunks: bytes) -> str:
    h = hashlib.sha256()
    for c in chunks:
        h.update(c)
    return h.hexdigest()


# ----------------------------------------------------------------- output


def poly_json(p: Optional[SparsePoly]):
    if p is None:
        return None
    return [[list(a), c] for a, c in sorted(p.items())]


def poly_from_json(vars_, terms) -> SparsePoly:
    return SparsePoly(vars_, {tuple(a): float(c) for a, c in terms})


def _envelope(command, input_hash, t0, **body):
    out = {
        "schema_version": SCHEMA_VERSION,
        "tool": "sonclyap",
        "version": __version__,
        "command": command,
        "input_sha256": input_hash,
        "wall_time": time.perf_counter() - t0,
    }
    out.update(body)
    return out


def _write_report(path, report):
    if path:
        Path(path).write_text(json.dumps(report, indent=2, allow_nan=True) + "\n", encoding="utf-8")


def result_json(r: LyapunovResult):
    out = {
        "verdict": r.verdict.value,
        "certificate_kind": r.certificate_kind,
        "mode": r.mode.value,
        "vars": list(r.V.vars),
        "V": poly_json(r.V),
        "V_text": format_poly(r.V),
        "p1": poly_json(r.p1),
        "p2": poly_json(r.p2),
        "minus_vdot": poly_json(r.minus_vdot),
        "certificates": {
            "V-p1": r.cert_V.to_json() if r.cert_V is not None else None,
            "-Vdot-p2": r.cert_dV.to_json() if r.cert_dV is not None else None,
        },
        "residuals": {},
        "solver_status": r.solver_status,
        "message": r.note,
    }
    if r.cert_V is not None:
        out["residuals"]["V-p1"] = witness_residuals(r.V - r.p1, r.cert_V)
    if r.cert_dV is not None:
        out["residuals"]["-Vdot-p2"] = witness_residuals(r.minus_vdot - r.p2, r.cert_dV)
    return out


def _system_json(data):
    return {"vars": data["vars"], "odes": data["odes"]}


def _verdict_code(verdict: Verdict) -> int:
    return EXIT_NOT_CERTIFIED if verdict is Verdict.NOT_CERTIFIED else EXIT_OK


# ----------------------------------------------------------------- commands


def cmd_check(args) -> int:
    t0 = time.perf_counter()
    text = args.poly
    vars_ = args.vars.split(",") if args.vars else _infer_vars(text)
    p = _parse(text, vars_)
    kind = args.certificate.upper()
    body = {"vars": vars_, "polynomial": poly_json(p), "certificate_kind": kind}
    if kind == "CIRCUIT":
        circ = detect_circuit(p.support) if not p.is_zero() else None
        if circ is None and not p.is_zero():
            print("not circuit-supported")
            _write_report(args.report, _envelope("check", _sha256(text.encode()), t0, verdict="Unknown",
                                                 message="support is not a circuit", **body))
            return EXIT_UNKNOWN
        ok = is_nonneg_circuit(p)
        if circ is not None and circ.inner is not None and all(p.coeff(a) > 0 for a in circ.outer):
            body["circuit_number"] = circuit_number(p)
            body["lambda"] = [[list(a), circ.lam[a]] for a in circ.outer]
        witness = None
    else:
        try:
            witness = membership(p, kind)
        except SolverUnknown as exc:
            print(f"unknown: {exc}")
            _write_report(args.report, _envelope("check", _sha256(text.encode()), t0, verdict="Unknown",
                                                 message=str(exc), **body))
            return EXIT_UNKNOWN
        ok = witness is not None
    if ok:
        body["certificate"] = witness.to_json() if witness is not None else None
        if witness is not None:
            body["residuals"] = witness_residuals(p, witness)
    else:
        x = find_negative_point(p)
        body["counterexample"] = None if x is None else {"x": [float(v) for v in x], "value": p(x)}
    verdict = "Certified" if ok else "NotCertified"
    print(f"{verdict} ({kind})")
    if not ok and body.get("counterexample"):
        print(f"negative at x = {body['counterexample']['x']}: p(x) = {body['counterexample']['value']:.6g}")
    _write_report(args.report, _envelope("check", _sha256(text.encode()), t0, verdict=verdict, **body))
    return EXIT_OK if ok else EXIT_NOT_CERTIFIED


def _run_verify(path, args):
    t0 = time.perf_counter()
    f, data, raw = load_system(path)
    text = args.candidate or data.get("candidate")
    if not text:
        raise InputError(f"{path}: no candidate given (use --candidate or a 'candidate' field)")
    V = _parse(text, f.vars)
    try:
        rep = verify_candidate(V, f, args.certificate, args.mode, args.epsilon_min, args.tol)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    body = {"system": _system_json(data), "candidate": text}
    if rep.result is not None:
        body.update(result_json(rep.result))
    else:
        body.update({"verdict": rep.verdict.value, "certificate_kind": args.certificate.upper(),
                     "mode": args.mode, "vars": list(f.vars), "V": poly_json(V),
                     "minus_vdot": poly_json(-lie_derivative(V, f)), "message": rep.message})
    body["solver_statuses"] = rep.solver_statuses
    report = _envelope("verify", _sha256(raw, text.encode()), t0, **body)
    line = f"{path}: {rep.verdict.value}" + (f" ({rep.message})" if rep.message else "")
    return _verdict_code(rep.verdict), report, line


def _support_for(args, f: DynSystem, data):
    template = args.template or ("file" if data.get("support") else "diagonal")
    if template == "file":
        if not data.get("support"):
            raise InputError("template 'file' needs a 'support' field in the system file")
        return frozenset(tuple(int(e) for e in a) for a in data["support"])
    extras = [_exponent_of(t.strip(), f.vars) for t in (args.extras or "").split(",") if t.strip()]
    try:
        return generate_support(f.n, args.degree, template, extras)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def _run_search(path, args):
    t0 = time.perf_counter()
    f, data, raw = load_system(path)
    A = _support_for(args, f, data)
    dump = [] if args.dump_program else None
    opts = SearchOptions(mode=Mode(args.mode), interior_negative=args.interior_negative,
                         epsilon_min=args.epsilon_min, tol=args.tol, dump=dump)
    try:
        r = search(f, A, args.certificate, opts)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    finally:
        if dump:
            Path(args.dump_program).write_text("\n".join(dump), encoding="utf-8")
    body = {"system": _system_json(data), "support": [list(a) for a in sorted(A)]}
    if r is None:
        body.update({"verdict": Verdict.NOT_CERTIFIED.value, "certificate_kind": args.certificate.upper(),
                     "mode": args.mode, "message": "infeasible with this support and certificate"})
        verdict, msg = Verdict.NOT_CERTIFIED, "infeasible with this support and certificate"
    else:
        body.update(result_json(r))
        verdict, msg = r.verdict, r.note
    report = _envelope("search", _sha256(raw, json.dumps(body["support"]).encode()), t0, **body)
    line = f"{path}: {verdict.value}" + (f" V = {format_poly(r.V)}" if r is not None and r.verdict is not
                                         Verdict.NOT_CERTIFIED else "") + (f" ({msg})" if msg else "")
    return _verdict_code(verdict), report, line


def _batch(runner, args) -> int:
    paths = args.systems
    if len(paths) > 1 and args.report:
        raise InputError("--report takes a single system file")

    def one(path):
        try:
            return runner(path, args)
        except InputError as exc:
            return EXIT_USAGE, None, f"error: {exc}"
        except SolverUnknown as exc:
            return EXIT_UNKNOWN, None, f"{path}: Unknown ({exc})"

    if args.jobs > 1 and len(paths) > 1:
        with ThreadPoolExecutor(args.jobs) as pool:
            outs = list(pool.map(one, paths))
    else:
        outs = [one(p) for p in paths]
    for code, report, line in outs:
        print(line)
        if report is not None:
            _write_report(args.report, report)
    return max(code for code, _, _ in outs)


def cmd_verify(args) -> int:
    return _batch(_run_verify, args)


def cmd_search(args) -> int:
    return _batch(_run_search, args)


def cmd_circuit(args) -> int:
    vars_ = args.vars.split(",") if args.vars else _infer_vars(args.poly)
    p = _parse(args.poly, vars_)
    circ = detect_circuit(p.support) if not p.is_zero() else None
    if circ is None:
        print("not a circuit")
        return EXIT_NOT_CERTIFIED
    print("outer: " + ", ".join(str(a) for a in circ.outer))
    if circ.inner is None:
        print("inner: none (sum of monomial squares when all coefficients are positive)")
    else:
        print(f"inner: {circ.inner}")
        print("lambda: " + ", ".join(f"{a}: {circ.lam[a]:.12g}" for a in circ.outer))
        if all(p.coeff(a) > 0 for a in circ.outer):
            print(f"circuit number: {circuit_number(p):.12g}  |c_beta| = {abs(p.coeff(circ.inner)):.12g}")
    ok = all(p.coeff(a) > 0 for a in circ.outer) and is_nonneg_circuit(p)
    print("nonnegative" if ok else "not nonnegative")
    return EXIT_OK if ok else EXIT_NOT_CERTIFIED


def cmd_simulate(args) -> int:
    f, data, _ = load_system(args.system)
    try:
        x0 = [float(v) for v in args.x0.split(",")]
    except ValueError as exc:
        raise InputError(f"bad --x0: {exc}") from exc
    text = args.candidate or data.get("candidate")
    V = _parse(text, f.vars) if text else None
    try:
        T, X, vals = simulate(f, x0, args.t_end, args.dt, V)
    except SimulationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNKNOWN
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    out = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        w = csv.writer(out)
        w.writerow(["t", *f.vars] + (["V"] if vals is not None else []))
        stride = max(1, args.every)
        for k in range(0, len(T), stride):
            row = [repr(float(T[k]))] + [repr(float(v)) for v in X[k]]
            if vals is not None:
                row.append(repr(float(vals[k])))
            w.writerow(row)
        if (len(T) - 1) % stride:
            row = [repr(float(T[-1]))] + [repr(float(v)) for v in X[-1]]
            if vals is not None:
                row.append(repr(float(vals[-1])))
            w.writerow(row)
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def replay_report(report) -> dict:
    """Re-check a saved report without any solver; returns the recomputed classification."""
    cmd = report.get("command")
    if cmd == "check":
        vars_ = report["vars"]
        p = poly_from_json(vars_, report["polynomial"])
        w = witness_from_json(report.get("certificate"))
        if report["certificate_kind"] == "CIRCUIT":
            ok = is_nonneg_circuit(p)
        else:
            ok = w is not None and verify_witness(p, w)
        return {"verdict": "Certified" if ok else "NotCertified",
                "residuals": witness_residuals(p, w) if w is not None else {}}
    vars_ = report["vars"]
    if report.get("V") is None or report.get("p1") is None:
        return {"verdict": report["verdict"], "residuals": {}, "note": "no certificate payload to replay"}
    sysd = report["system"]
    f = DynSystem.parse(sysd["odes"], sysd["vars"])
    V = poly_from_json(vars_, report["V"])
    nd = -lie_derivative(V, f)
    stored = poly_from_json(vars_, report["minus_vdot"])
    if not nd.allclose(stored, atol=1e-9 * max(1.0, nd.max_abs_coeff())):
        return {"verdict": Verdict.NOT_CERTIFIED.value, "residuals": {}, "note": "stored -Vdot does not match"}
    certs = report["certificates"]
    r = LyapunovResult(V, poly_from_json(vars_, report["p1"]), poly_from_json(vars_, report["p2"]),
                       witness_from_json(certs.get("V-p1")), witness_from_json(certs.get("-Vdot-p2")),
                       Verdict.NOT_CERTIFIED, report["certificate_kind"], nd, Mode(report["mode"]))
    verdict, note = derive_verdict(r)
    res = {}
    if r.cert_V is not None:
        res["V-p1"] = witness_residuals(r.V - r.p1, r.cert_V)
    if r.cert_dV is not None:
        res["-Vdot-p2"] = witness_residuals(r.minus_vdot - r.p2, r.cert_dV)
    return {"verdict": verdict.value, "residuals": res, "note": note}


def cmd_replay(args) -> int:
    try:
        report = json.loads(Path(args.report_file).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"{args.report_file}: {exc}") from exc
    out = replay_report(report)
    same = out["verdict"] == report.get("verdict")
    print(f"replayed verdict: {out['verdict']} (stored: {report.get('verdict')}){'' if same else '  MISMATCH'}")
    if not same:
        return EXIT_UNKNOWN
    return EXIT_OK if out["verdict"] not in ("NotCertified", "Unknown") else EXIT_NOT_CERTIFIED


# ----------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sonclyap", description="SONC / DSONC Lyapunov certificates for polynomial ODEs")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", help="nonnegativity certificate for one polynomial")
    c.add_argument("poly", help="polynomial expression, e.g. 'x^4*y^2 + x^2*y^4 + 1 - 3*x^2*y^2'")
    c.add_argument("--vars", help="comma-separated variable order (default: names found, natural order)")
    c.add_argument("--certificate", choices=["sonc", "dsonc", "circuit"], default="sonc")
    c.add_argument("--report")
    c.set_defaults(func=cmd_check)

    def common(p):
        p.add_argument("systems", nargs="+", help="system JSON file(s)")
        p.add_argument("--certificate", choices=["sonc", "dsonc"], default="sonc")
        p.add_argument("--mode", choices=["asymptotic", "stable"], default="asymptotic")
        p.add_argument("--epsilon-min", type=float, default=1e-3)
        p.add_argument("--tol", type=float, default=1e-8)
        p.add_argument("--report")
        p.add_argument("--jobs", type=int, default=1)

    v = sub.add_parser("verify", help="check a given Lyapunov candidate")
    common(v)
    v.add_argument("--candidate", help="overrides the file's candidate")
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("search", help="search for a Lyapunov function on a support")
    common(s)
    s.add_argument("--degree", type=int, default=2)
    s.add_argument("--template", choices=["diagonal", "full_even", "diagonal_plus", "file"])
    s.add_argument("--extras", help="extra monomials for diagonal_plus, e.g. 'x2^4,x5^4'")
    s.add_argument("--interior-negative", action="store_true",
                   help="constrain even non-vertex terms of -Vdot to be nonpositive")
    s.add_argument("--dump-program", help="write the conic program in text form")
    s.set_defaults(func=cmd_search)

    ci = sub.add_parser("circuit", help="circuit structure, barycentric weights and circuit number")
    ci.add_argument("poly")
    ci.add_argument("--vars")
    ci.set_defaults(func=cmd_circuit)

    sm = sub.add_parser("simulate", help="RK4 trajectory as CSV")
    sm.add_argument("system")
    sm.add_argument("--x0", required=True, help="comma-separated initial state")
    sm.add_argument("--t-end", type=float, default=10.0)
    sm.add_argument("--dt", type=float, default=1e-3)
    sm.add_argument("--every", type=int, default=1, help="write every k-th sample")
    sm.add_argument("--candidate", help="also emit V along the trajectory")
    sm.add_argument("--out")
    sm.set_defaults(func=cmd_simulate)

    r = sub.add_parser("replay", help="re-check a saved report without a solver")
    r.add_argument("report_file")
    r.set_defaults(func=cmd_replay)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SolverUnknown as exc:
        print(f"unknown: {exc}", file=sys.stderr)
        return EXIT_UNKNOWN


if __name__ == "__main__":
    sys.exit(main())
