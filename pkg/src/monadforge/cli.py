"""
Command-line interface.

Exit codes
----------
0  success / valid configuration
1  I/O error
2  schema error in an input document
3  configuration is degenerate
4  configuration is not integrable
5  some sample indices failed
6  requested (k, n) cannot be sampled
7  a certificate, grid report or self-test did not pass
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import acceptance, serialization
from .configuration import act, stabilizer_dimension, validate
from .exceptions import MalformedInputError, UnsampleableError, UnsupportedRegimeError
from .invariants import dimension_report, fingerprint, fingerprint_distance, multisets_match
from .numkernel import ToleranceModel, derive_seed
from .sampling import random_group_element, sample_batch
from .stabilization import homotopy_certify

EXIT_OK = 0
EXIT_IO = 1
EXIT_SCHEMA = 2
EXIT_DEGENERATE = 3
EXIT_NON_INTEGRABLE = 4
EXIT_PARTIAL = 5
EXIT_UNSAMPLEABLE = 6
EXIT_CHECK_FAILED = 7


def _emit(payload, as_json: bool, text: str) -> None:
    if as_json:
        print(json.dumps(payload, indent=2, default=_json_default))
    else:
        print(text)


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _finite(v):
    return v if v is None or np.isfinite(v) else None


def _load(path):
    """Load a document; returns ``(config, exit_code)``."""
    try:
        return serialization.load(path), None
    except OSError as exc:
        print(f"error: cannot read {path}: {exc}", file=sys.stderr)
        return None, EXIT_IO
    except MalformedInputError as exc:
        print(f"error: {path}: {exc}", file=sys.stderr)
        return None, EXIT_SCHEMA


def _verdict_code(report) -> int:
    if not report.integrable:
        return EXIT_NON_INTEGRABLE
    if not report.nondegenerate:
        return EXIT_DEGENERATE
    return EXIT_OK


def _report_text(report) -> str:
    lines = [
        f"integrability residual: {report.integrability_residual_norm:.3e} "
        f"(threshold {report.integrability_threshold:.3e}) -> "
        f"{'integrable' if report.integrable else 'NOT integrable'}",
    ]
    if report.nondegenerate:
        lines.append(f"non-degenerate, margin {report.margin:.3e}")
    else:
        w = report.witness
        lines.append(f"DEGENERATE: witness on {w.side} side")
        lines.append(f"  lambda = ({w.lam[0]:.6g}, {w.lam[1]:.6g})")
        lines.append(f"  mu     = ({w.mu[0]:.6g}, {w.mu[1]:.6g})")
        lines.append("  vector = [" + ", ".join(f"{z:.6g}" for z in w.vec) + "]")
        lines.append("  residuals = " + ", ".join(f"{r:.2e}" for r in w.residuals))
    lines.append(f"verdict: {report.reason}")
    return "\n".join(lines)


def cmd_validate(args) -> int:
    C, code = _load(args.path)
    if C is None:
        return code
    report = validate(C, ToleranceModel.from_env(args.tol))
    payload = {"path": str(args.path), "k": C.k, "n": C.n, **report.to_dict()}
    _emit(payload, args.json, _report_text(report))
    return _verdict_code(report)


def cmd_sample(args) -> int:
    tol = ToleranceModel.from_env(args.tol)
    try:
        results = sample_batch(args.k, args.n, args.seed, args.count, tol)
    except (UnsampleableError, UnsupportedRegimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNSAMPLEABLE
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        failed = []
        for i, C in results:
            if isinstance(C, Exception):
                failed.append((i, str(C)))
                continue
            serialization.dump(C, out / f"sample-{args.k}-{args.n}-{args.seed}-{i}.json")
    except OSError as exc:
        print(f"error: cannot write to {out}: {exc}", file=sys.stderr)
        return EXIT_IO
    for i, msg in failed:
        print(f"index {i} failed: {msg}", file=sys.stderr)
    print(f"wrote {len(results) - len(failed)}/{len(results)} samples to {out}")
    return EXIT_PARTIAL if failed else EXIT_OK


def _certificate_text(cert) -> str:
    d = cert.to_dict()
    lines = [f"{'t':>6}  {'residual':>10}  {'id. gap':>10}  {'margin':>10}  note"]
    for row in d["samples"]:
        margin = f"{row['margin']:10.3e}" if row["nondegenerate"] else "DEGENERATE"
        lines.append(f"{row['t']:6.3f}  {row['residual_norm']:10.3e}  {row['identity_gap']:10.3e}  "
                     f"{margin}  {row.get('note', '')}")
    lines.append(f"certificate: {'PASS' if cert.passed else 'FAIL'}")
    return "\n".join(lines)


def cmd_homotopy(args) -> int:
    C, code = _load(args.path)
    if C is None:
        return code
    tol = ToleranceModel.from_env(args.tol)
    report = validate(C, tol)
    if not report.valid:
        _emit({"path": str(args.path), **report.to_dict()}, args.json, _report_text(report))
        return _verdict_code(report)
    cert = homotopy_certify(C, args.samples, tol)
    _emit(cert.to_dict(), args.json, _certificate_text(cert))
    return EXIT_OK if cert.passed else EXIT_CHECK_FAILED


def _cell_samples(k, n, seed, trials, tol):
    """Sample one grid cell. Returns (status, configurations)."""
    try:
        results = sample_batch(k, n, derive_seed(seed, 1000 * k + n), trials, tol)
    except UnsampleableError:
        return "UNSAMPLEABLE", []
    except UnsupportedRegimeError:
        return "UNSUPPORTED", []
    configs = [C for _, C in results if not isinstance(C, Exception)]
    return ("ok" if len(configs) == trials else "SAMPLING-FAILED"), configs


def _measure(kind, C, k, n, tol, seed):
    if kind == "dimension":
        rep = dimension_report(C, tol)
        ok = rep.moduli_dimension == 2 * n * k and rep.jacobian_rank == k * k
        return ok, {"moduli_dimension": rep.moduli_dimension, "jacobian_rank": rep.jacobian_rank,
                    "jacobian_gap": _finite(rep.jacobian_gap)}
    if kind == "freeness":
        stab = stabilizer_dimension(C, tol)
        return stab == 0, {"stabilizer_dimension": stab}
    g = random_group_element(k, seed, max_cond=10.0)
    f1, f2 = fingerprint(C), fingerprint(act(g, C))
    dist = fingerprint_distance(f1, f2)
    ok = dist <= 1e-8 and multisets_match(f1.spec1, f2.spec1, 1e-8) and multisets_match(f1.spec2, f2.spec2, 1e-8)
    return ok, {"fingerprint_deviation": dist}


def cmd_report(args) -> int:
    tol = ToleranceModel.from_env(args.tol)
    kmax, nmax = args.grid
    cells = []
    all_ok = True
    for k in range(1, kmax + 1):
        for n in range(1, nmax + 1):
            status, configs = _cell_samples(k, n, args.seed, args.trials, tol)
            cell = {"k": k, "n": n, "status": status, "trials": []}
            if args.kind == "dimension":
                cell["expected"] = 2 * n * k
            for i, C in enumerate(configs):
                ok, values = _measure(args.kind, C, k, n, tol, derive_seed(args.seed, 7919 * i + k))
                cell["trials"].append({"ok": ok, **values})
                if not ok:
                    status = "FAIL"
            cell["status"] = status
            if status in ("FAIL", "SAMPLING-FAILED"):
                all_ok = False
            cells.append(cell)
    payload = {"report": args.kind, "grid": [kmax, nmax], "seed": args.seed,
               "trials": args.trials, "passed": all_ok, "cells": cells}
    _emit(payload, args.json, _report_table(payload))
    return EXIT_OK if all_ok else EXIT_CHECK_FAILED


def _cell_summary(kind, cell):
    if cell["status"] in ("UNSAMPLEABLE", "UNSUPPORTED", "SAMPLING-FAILED"):
        return cell["status"]
    key = {"dimension": "moduli_dimension", "freeness": "stabilizer_dimension",
           "invariance": "fingerprint_deviation"}[kind]
    vals = [t[key] for t in cell["trials"]]
    if kind == "invariance":
        text = f"{max(vals):.1e}"
    else:
        text = "/".join(str(v) for v in sorted(set(vals)))
    return text if cell["status"] == "ok" else f"{text} FAIL"


def _report_table(payload) -> str:
    kmax, nmax = payload["grid"]
    kind = payload["report"]
    width = 14
    header = "k \\ n".ljust(6) + "".join(str(n).rjust(width) for n in range(1, nmax + 1))
    lines = [f"{kind} report (seed {payload['seed']}, {payload['trials']} trials per cell)", header]
    by_cell = {(c["k"], c["n"]): c for c in payload["cells"]}
    for k in range(1, kmax + 1):
        row = str(k).ljust(6)
        for n in range(1, nmax + 1):
            row += _cell_summary(kind, by_cell[k, n]).rjust(width)
        lines.append(row)
    if kind == "dimension":
        lines.append("expected value in every feasible cell: 2nk")
    lines.append("all cells meet expectations" if payload["passed"] else "SOME CELLS FAILED")
    return "\n".join(lines)


def cmd_selftest(args) -> int:
    if args.list:
        for c in acceptance.CRITERIA:
            print(f"{c.id}  {c.title}")
        return EXIT_OK
    outcomes = acceptance.run_all(ids=set(args.only) if args.only else None)
    failed = [o for o in outcomes if not o.passed]
    print(f"{len(outcomes) - len(failed)}/{len(outcomes)} criteria passed")
    return EXIT_CHECK_FAILED if failed or not outcomes else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="monadforge", description=__doc__.split("\n\n")[0].strip())
    sub = parser.add_subparsers(dest="command", required=True)

    def tol_flag(p):
        p.add_argument("--tol", type=float, default=None,
                       help="base tolerance (default: $MONADFORGE_TOL or 1e-9)")

    p = sub.add_parser("validate", help="check integrability and non-degeneracy of a document")
    p.add_argument("path")
    p.add_argument("--json", action="store_true")
    tol_flag(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("sample", help="write seeded valid configurations")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--out", default=".")
    tol_flag(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("homotopy", help="certify the contraction homotopy from a valid document")
    p.add_argument("path")
    p.add_argument("--samples", type=int, default=11)
    p.add_argument("--json", action="store_true")
    tol_flag(p)
    p.set_defaults(func=cmd_homotopy)

    p = sub.add_parser("report", help="grid report over (k, n)")
    p.add_argument("kind", choices=("dimension", "freeness", "invariance"))
    p.add_argument("--grid", nargs=2, type=int, metavar=("KMAX", "NMAX"), default=(3, 4))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=3)
    p.add_argument("--json", action="store_true")
    tol_flag(p)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("selftest", help="run the acceptance criteria")
    p.add_argument("--list", action="store_true", help="list criterion ids without running")
    p.add_argument("--only", nargs="+", metavar="ID", help="run only these criteria")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except MalformedInputError as exc:
        # e.g. an unparseable MONADFORGE_TOL
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA


if __name__ == "__main__":
    sys.exit(main())
