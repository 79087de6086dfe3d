"""Command-line front end.

Machine-readable JSON goes to stdout, a one-line human summary to stderr.
Exit codes follow solver tradition: 0 satisfiable, 1 unsatisfiable, 2 error
(``--dimacs-exit`` remaps the verdicts to 10/20).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

from . import cf_solver, oracle, prob_solver, reductions, scm as scm_mod
from .decomp import compute_decomposition, export_td, make_nice, nice_to_json
from .errors import CertificateFormatError, FragmentMismatch, PchSatError
from .formula import build_primal_graph, parse, formula_to_text, validate_and_classify
from .lpcore import DEFAULT_VAR_CAP, farkas_is_valid

EXIT_SAT = 0
EXIT_UNSAT = 1
EXIT_ERROR = 2


def _read(path: str) -> str:
    with open(path, "r", encoding="utf-8") as handle:
        return handle.read()


def _default_cap() -> int | None:
    raw = os.environ.get("PCHSAT_CAP")
    return int(raw) if raw else None


def _verdict_exit(sat: bool, dimacs: bool) -> int:
    if dimacs:
        return 10 if sat else 20
    return EXIT_SAT if sat else EXIT_UNSAT


def _emit(report: dict, summary: str) -> None:
    sys.stdout.write(json.dumps(report, indent=2) + "\n")
    sys.stderr.write(summary + "\n")


def cmd_solve(args) -> int:
    f = parse(_read(args.formula))
    fragment = validate_and_classify(f)
    cap = args.cap if args.cap is not None else _default_cap()
    route = args.fragment
    if route == "auto":
        route = "prob-lin" if fragment.depth == "prob" else "cf-lin"
    if route == "prob-lin" and fragment.depth != "prob":
        raise FragmentMismatch(
            "formula is in the %s fragment, not prob" % fragment.depth
        )
    started = time.monotonic()
    report: dict = {
        "verdict": None,
        "fragment": {"depth": fragment.depth, "breadth": fragment.breadth},
        "solver": "prob" if route == "prob-lin" else "cf",
        "parameters": {"n": len(f.variables), "d": f.domain.size},
    }
    cert_json = None
    verified = None
    if route == "prob-lin":
        strategy = "exact" if args.decomp == "exact" else "greedy-minfill"
        verdict = prob_solver.solve(
            f, strategy=strategy, var_cap=cap or DEFAULT_VAR_CAP
        )
        report["verdict"] = "SAT" if verdict.sat else "UNSAT"
        report["parameters"].update(
            {
                "width": verdict.width,
                "lp_variables": len(verdict.lp.variables),
                "lp_constraints": len(verdict.lp.constraints),
            }
        )
        if verdict.sat:
            cert_json = prob_solver.certificate_to_json(verdict.certificate)
            if args.verify:
                verified = prob_solver.verify_certificate(f, verdict.certificate)
        elif args.verify:
            verified = farkas_is_valid(verdict.lp, verdict.outcome.farkas)
        sat = verdict.sat
    else:
        verdict = cf_solver.solve(
            f,
            function_space_cap=cap or cf_solver.DEFAULT_FUNCTION_SPACE_CAP,
            var_cap=cap or DEFAULT_VAR_CAP,
        )
        report["verdict"] = "SAT" if verdict.sat else "UNSAT"
        report["parameters"].update(
            {
                "orderings_tried": verdict.orderings_tried,
                "lp_variables": verdict.lp_variables,
                "lp_constraints": verdict.lp_rows,
            }
        )
        if verdict.sat:
            cert_json = cf_solver.model_to_json(verdict.model)
            if args.verify:
                verified = cf_solver.verify_certificate(f, verdict.model)
        sat = verdict.sat
    elapsed = time.monotonic() - started
    if args.verify:
        report["verified"] = verified
    if cert_json is not None and args.cert_out:
        with open(args.cert_out, "w", encoding="utf-8") as handle:
            json.dump(cert_json, handle, indent=2)
        report["certificate"] = args.cert_out
    if not args.no_timing:
        report["timing"] = {"seconds": round(elapsed, 6)}
    summary = "%s (%s-%s, n=%d, d=%d)" % (
        report["verdict"],
        fragment.depth,
        fragment.breadth,
        len(f.variables),
        f.domain.size,
    )
    _emit(report, summary)
    if args.verify and verified is False:
        sys.stderr.write("internal error: produced certificate failed verification\n")
        return EXIT_ERROR
    return _verdict_exit(sat, args.dimacs_exit)


def cmd_verify(args) -> int:
    f = parse(_read(args.formula))
    fragment = validate_and_classify(f)
    obj = json.loads(_read(args.certificate))
    kind = obj.get("kind")
    if kind == "bag-marginal":
        if fragment.depth != "prob":
            raise CertificateFormatError(
                "bag-marginal certificate cannot witness a %s formula"
                % fragment.depth
            )
        cert = prob_solver.certificate_from_json(obj)
        ok = prob_solver.verify_certificate(f, cert)
    elif kind == "canonical-scm":
        model = cf_solver.model_from_json(obj)
        ok = cf_solver.verify_certificate(f, model)
    else:
        raise CertificateFormatError("unknown certificate kind %r" % kind)
    _emit({"verified": ok}, "certificate %s" % ("verified" if ok else "REJECTED"))
    return EXIT_SAT if ok else EXIT_UNSAT


def cmd_oracle(args) -> int:
    f = parse(_read(args.formula))
    cap = args.cap if args.cap is not None else _default_cap()
    started = time.monotonic()
    verdict = oracle.prob_joint_oracle(f, cap=cap or oracle.DEFAULT_JOINT_CAP)
    report = {"verdict": "SAT" if verdict.sat else "UNSAT"}
    if not args.no_timing:
        report["timing"] = {"seconds": round(time.monotonic() - started, 6)}
    _emit(report, report["verdict"] + " (full-joint oracle)")
    return _verdict_exit(verdict.sat, args.dimacs_exit)


def cmd_gen(args) -> int:
    if args.generator == "clique":
        graph = reductions.parse_colored_graph(_read(args.input))
        f = reductions.gen_clique_probbase(graph, args.k)
    else:
        cnf = reductions.parse_dimacs(_read(args.input))
        if args.generator == "threesat-base":
            f = reductions.gen_threesat_probbase(cnf)
        else:
            f = reductions.gen_threesat_causal(cnf)
    sys.stdout.write(formula_to_text(f))
    return EXIT_SAT


def cmd_decomp(args) -> int:
    f = parse(_read(args.formula))
    graph = build_primal_graph(f)
    strategy = "exact" if args.strategy == "exact" else "greedy-minfill"
    t = compute_decomposition(graph, strategy)
    if args.format == "json":
        nt = make_nice(t, f.variables)
        sys.stdout.write(json.dumps(nice_to_json(nt), indent=2) + "\n")
    else:
        sys.stdout.write(export_td(t, f.variables))
    sys.stderr.write("width %d\n" % t.width())
    return EXIT_SAT


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pchsat",
        description="Exact satisfiability for linear probability constraints",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="decide a formula file")
    solve.add_argument("formula")
    solve.add_argument(
        "--fragment", choices=("auto", "prob-lin", "cf-lin"), default="auto"
    )
    solve.add_argument("--decomp", choices=("greedy", "exact"), default="greedy")
    solve.add_argument("--verify", action="store_true", help="re-check the certificate")
    solve.add_argument("--cap", type=int, default=None, help="override size caps")
    solve.add_argument("--cert-out", default=None, help="write certificate JSON here")
    solve.add_argument("--no-timing", action="store_true")
    solve.add_argument("--dimacs-exit", action="store_true", help="exit 10/20")
    solve.set_defaults(func=cmd_solve)

    verify = sub.add_parser("verify", help="check a certificate against a formula")
    verify.add_argument("formula")
    verify.add_argument("certificate")
    verify.set_defaults(func=cmd_verify)

    orc = sub.add_parser("oracle", help="full-joint brute-force decision")
    orc.add_argument("formula")
    orc.add_argument("--cap", type=int, default=None)
    orc.add_argument("--no-timing", action="store_true")
    orc.add_argument("--dimacs-exit", action="store_true")
    orc.set_defaults(func=cmd_oracle)

    gen = sub.add_parser("gen", help="emit a reduction image formula")
    gen.add_argument(
        "generator", choices=("threesat-base", "threesat-causal", "clique")
    )
    gen.add_argument("input")
    gen.add_argument("--k", type=int, default=3, help="clique size / color count")
    gen.set_defaults(func=cmd_gen)

    dec = sub.add_parser("decomp", help="decompose a formula's primal graph")
    dec.add_argument("formula")
    dec.add_argument("--strategy", choices=("greedy", "exact"), default="greedy")
    dec.add_argument("--format", choices=("td", "json"), default="td")
    dec.set_defaults(func=cmd_decomp)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PchSatError as exc:
        sys.stderr.write("error: %s\n" % exc)
        return EXIT_ERROR
    except OSError as exc:
        sys.stderr.write("error: %s\n" % exc)
        return EXIT_ERROR


def run() -> None:  # console-script entry point
    sys.exit(main())
