"""
Command-line interface for the bilinear hull toolkit.

Subcommands:
    envelope  exact vex/cav of a graph function at a point
    verify    compare a constraint system with the envelopes on samples
    cuts      write a constraint system as an LP file
    certify   build or check an interval certificate
    study     run a gap study from a TOML configuration
    relax     build the linear or convexified relaxation of a QP instance

Exit codes: 0 success, 2 parse or usage error, 3 instance above the
envelope cap, 4 verification failure, 1 anything else.
"""

import argparse
import json
import logging
import sys
from fractions import Fraction
from typing import Dict, List, NoReturn, Optional, Sequence

from config import ConfigurationError, get_config
from envelopes import TooLarge, envelope, sample_points, verify_extension, write_samples_csv
from experiments import (
    ExperimentError,
    IoFailure,
    class_ordering_violations,
    emit_qp_convexification,
    load_study_config,
    qp_linearization_model,
    read_qp_instance,
    run_gap_study,
    triangle_sampling_curve,
    write_table_csv,
    write_table_dat,
)
from graph_model import GraphError, WeightedGraph, read_graph, wheel_graph
from inequalities import (
    CLASS_TAGS,
    ConstraintSystem,
    InequalityError,
    cycle_system,
    edge_objective,
    kn_minus_label,
    kn_minus_system,
    minimality_witness,
    relaxation_system,
    wheel_system,
)
from intervals import IntervalError
from lpfile import LpFormatError, to_lp_text, write_lp
from ratsolver import LpProblem, solve
from utils import ProgressBar, format_rational, format_vector, parse_rational_list
from zuckerberg import (
    CertificateError,
    check_certificate,
    clique_construction,
    cycle_construction,
    kn_minus_construction,
    read_certificate,
    vex_cycle_construction,
    write_certificate,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_TOO_LARGE = 3
EXIT_VERIFY = 4

SYSTEM_NAMES = ("cycle-theorem", "cycle-literal", "kn-minus", "wheel")

PARSE_ERRORS = (
    ValueError,
    GraphError,
    InequalityError,
    IntervalError,
    LpFormatError,
    ConfigurationError,
    ExperimentError,
    CertificateError,
)


class UsageError(Exception):
    """Arguments are individually valid but do not fit together."""

    pass


class VerificationFailed(Exception):
    """A check reported a counterexample."""

    def __init__(self, message: str, payload: Optional[dict] = None):
        super().__init__(message)
        self.payload = payload or {}


def handle_error(error: Exception) -> NoReturn:
    """
    Report an error on stderr and exit with the matching code.

    Args:
        error: The exception that was raised

    Returns:
        NoReturn: This function always exits the program
    """
    if isinstance(error, KeyboardInterrupt):
        print("\nProgram interrupted by user.", file=sys.stderr)
        sys.exit(EXIT_FAILURE)
    if isinstance(error, TooLarge):
        print(f"Instance too large: {str(error)}", file=sys.stderr)
        sys.exit(EXIT_TOO_LARGE)
    if isinstance(error, VerificationFailed):
        print(f"Verification failed: {str(error)}", file=sys.stderr)
        sys.exit(EXIT_VERIFY)
    if isinstance(error, IoFailure):
        print(f"Error writing output: {str(error)}", file=sys.stderr)
        sys.exit(EXIT_FAILURE)
    if isinstance(error, (UsageError,) + PARSE_ERRORS):
        print(f"Invalid input: {str(error)}", file=sys.stderr)
        sys.exit(EXIT_USAGE)
    print(f"An unexpected error occurred: {str(error)}", file=sys.stderr)
    logger.debug("Traceback", exc_info=error)
    sys.exit(EXIT_FAILURE)


# Output


def _jsonable(value):
    if isinstance(value, Fraction):
        return format_rational(value)
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def emit(args: argparse.Namespace, payload: dict, lines: Sequence[str]) -> None:
    """Print a report as text lines or, with --format json, as one JSON object."""
    if args.format == "json":
        print(json.dumps(_jsonable(payload), indent=2))
    else:
        for line in lines:
            print(line)


def _pattern(bits: Sequence[int]) -> str:
    return "".join(str(b) for b in bits)


def _witness_lines(weights: Dict[Sequence[int], Fraction]) -> List[str]:
    return [f"  {format_rational(w)} * {_pattern(v)}" for v, w in sorted(weights.items()) if w]


# Shared argument handling


def _point(g: WeightedGraph, text: str) -> tuple:
    values = parse_rational_list(text)
    if len(values) != g.n:
        raise UsageError(f"Point has {len(values)} coordinates, graph has {g.n} vertices")
    return tuple(values)


def _parse_drop(text: str) -> str:
    """Accept a raw row label or the short form family<F>:s=<S>."""
    if text.startswith("family") and ":s=" in text:
        family, s = text[len("family"):].split(":s=")
        return kn_minus_label(int(family), int(s))
    return text


def build_system(g: WeightedGraph, name: str, drop: Optional[str] = None) -> ConstraintSystem:
    """
    Resolve a system name: a relaxation class (M, MT, MQ4, ...) or one of
    cycle-theorem, cycle-literal, kn-minus, wheel.
    """
    if name == "cycle-theorem":
        system = cycle_system(g)
    elif name == "cycle-literal":
        system = cycle_system(g, semantics="literal")
    elif name == "kn-minus":
        system = kn_minus_system(g.n)
    elif name == "wheel":
        rim = g.n - 1
        if rim < 4 or set(g.weights) != set(wheel_graph(rim).weights):
            raise UsageError(f"The wheel system needs W_n on 1..n with hub n+1, got {g}")
        system = wheel_system(rim)
    else:
        system = relaxation_system(g, name)
    if drop:
        system = system.without(_parse_drop(drop))
    return system


def _drop_witness_points(g: WeightedGraph, args: argparse.Namespace) -> List[tuple]:
    if args.system != "kn-minus" or not args.drop or not args.drop.startswith("family"):
        return []
    family, s = args.drop[len("family"):].split(":s=")
    witness = minimality_witness(g.n, int(family), int(s))
    logger.info(f"Minimality witness for {witness.label}: x = ({format_vector(witness.x)}), z = {format_rational(witness.z)}")
    return [witness.x]


# Subcommands


def cmd_envelope(args: argparse.Namespace) -> int:
    g = read_graph(args.graph)
    result = envelope(g, _point(g, args.point))
    lines = [f"vex={format_rational(result.vex)} cav={format_rational(result.cav)}"]
    if args.witness:
        lines.append("vex witness:")
        lines.extend(_witness_lines(result.vex_witness))
        lines.append("cav witness:")
        lines.extend(_witness_lines(result.cav_witness))
    payload = {
        "point": list(result.point),
        "vex": result.vex,
        "cav": result.cav,
        "vex_witness": {_pattern(v): w for v, w in result.vex_witness.items() if w},
        "cav_witness": {_pattern(v): w for v, w in result.cav_witness.items() if w},
    }
    emit(args, payload, lines)
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    g = read_graph(args.graph)
    system = build_system(g, args.system, args.drop)
    samples = _drop_witness_points(g, args) + sample_points(g.n, args.samples, args.seed)
    report = verify_extension(g, system, samples, stop_at_first=not args.all, jobs=args.jobs)
    payload = {
        "system": report.system,
        "checked": report.checked,
        "passed": report.passed,
        "failures": [
            {"point": list(f.point), "side": f.side, "relaxed": f.relaxed, "exact": f.exact}
            for f in report.failures
        ],
    }
    if args.out:
        write_samples_csv(report.records, args.out)
    if not report.passed:
        emit(args, payload, [f"FAIL {report.system}: {f}" for f in report.failures])
        raise VerificationFailed(f"{report.system} is not exact at {len(report.failures)} point(s)", payload)
    emit(args, payload, [f"PASS {report.system}: exact on {report.checked} samples"])
    return EXIT_OK


def cmd_cuts(args: argparse.Namespace) -> int:
    g = read_graph(args.graph)
    system = build_system(g, args.system, args.drop)
    model = system.to_lp_model(edge_objective(g), sense="min")
    model.comments.append(f"{len(system)} rows from {system.sources} sources")
    if args.out:
        write_lp(model, args.out)
        logger.info(f"Wrote {len(system)} rows to {args.out}")
    else:
        print(to_lp_text(model), end="")
    return EXIT_OK


def cmd_certify(args: argparse.Namespace) -> int:
    g = read_graph(args.graph)
    if args.certificate:
        sets = read_certificate(args.certificate)
    else:
        if not args.point:
            raise UsageError("certify needs --point or --certificate")
        x = _point(g, args.point)
        if args.construction == "clique":
            sets = clique_construction(x)
        elif args.construction == "kn-minus":
            sets = kn_minus_construction(x)
        elif args.construction == "cycle":
            sets, _ = cycle_construction(g, x)
        else:
            sets, _, _ = vex_cycle_construction(g, x)
        if args.out:
            write_certificate(sets, args.out)
    check = check_certificate(sets, g)
    payload = {
        "point": list(check.point),
        "value": check.value,
        "vex": check.vex,
        "cav": check.cav,
        "certifies_vex": check.certifies_vex,
        "certifies_cav": check.certifies_cav,
        "sets": [s.to_text() for s in sets],
    }
    lines = [
        f"value={format_rational(check.value)} vex={format_rational(check.vex)} cav={format_rational(check.cav)}",
    ]
    lines.extend(f"  X{i} = {s.to_text() or '-'}" for i, s in enumerate(sets, start=1))
    emit(args, payload, lines)
    if not check.holds:
        raise VerificationFailed("Certificate value lies outside [vex, cav]", payload)
    return EXIT_OK


def cmd_study(args: argparse.Namespace) -> int:
    cfg = load_study_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    progress = ProgressBar(cfg.graph_count) if args.progress else None
    if progress:
        progress.start()
    try:
        result = run_gap_study(cfg, jobs=args.jobs, progress=progress)
    finally:
        if progress:
            progress.stop()
    if args.out:
        write_table_csv(result, args.out)
    if args.dat:
        write_table_dat(result, args.dat)
    violations = class_ordering_violations(result)
    for v in violations:
        logger.warning(f"Class ordering broken at {v}")
    payload = {
        "n": cfg.n,
        "p": cfg.p,
        "rows": [
            {
                "class": row.tag,
                "mu_minus_1_percent": row.mu_percent,
                "sigma_percent": row.sigma_percent,
                "c": row.stats.c,
                "samples": row.stats.samples,
                "degenerate": row.stats.degenerate,
            }
            for row in result.rows
        ],
        "ordering_violations": violations,
    }
    lines = ["class,mu_minus_1_percent,sigma_percent,c"]
    lines.extend(f"{r.tag},{r.mu_percent:.2f},{r.sigma_percent:.2f},{r.stats.c:.1f}" for r in result.rows)
    emit(args, payload, lines)
    return EXIT_OK


def cmd_relax(args: argparse.Namespace) -> int:
    inst = read_qp_instance(args.instance)
    if args.fractions:
        curve = triangle_sampling_curve(inst, parse_rational_list(args.fractions), args.seed, jobs=args.jobs)
        payload = {
            "curve": [
                {"fraction": c.fraction, "triangles": c.triangles, "bound": c.bound, "seconds": c.seconds}
                for c in curve
            ]
        }
        lines = ["fraction,triangles,bound,seconds"]
        lines.extend(
            f"{format_rational(c.fraction)},{c.triangles},{'' if c.bound is None else format_rational(c.bound)},{c.seconds:.3f}"
            for c in curve
        )
        emit(args, payload, lines)
        return EXIT_OK

    if args.convexify:
        if not args.out:
            raise UsageError("relax --convexify needs --out")
        model = emit_qp_convexification(inst, args.out)
        emit(args, {"file": args.out, "quadratic": model.is_quadratic}, [f"Wrote {args.out}"])
        return EXIT_OK

    model = qp_linearization_model(inst)
    if args.out:
        try:
            write_lp(model, args.out)
        except LpFormatError as e:
            raise IoFailure(str(e)) from e
    if args.solve:
        solution = solve(LpProblem.from_model(model))
        payload = {"status": solution.status.value, "bound": solution.value if solution.is_optimal else None}
        bound = format_rational(solution.value) if solution.is_optimal else "-"
        emit(args, payload, [f"status={solution.status.value} bound={bound}"])
    elif not args.out:
        print(to_lp_text(model), end="")
    return EXIT_OK


# Parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bilinear-hull",
        description="Exact envelopes, extended formulations and relaxations of bilinear functions.",
        epilog="Exit codes: 0 success, 2 parse or usage error, 3 instance above the envelope cap, "
        "4 verification failure, 1 other errors.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="Log at DEBUG level")
    parser.add_argument("--format", choices=("csv", "json"), default="csv", help="Report format")
    sub = parser.add_subparsers(dest="command", required=True)

    # SUPPRESS keeps the top-level --format unless the subcommand sets it
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("csv", "json"), default=argparse.SUPPRESS, help="Report format")
    common.add_argument("--jobs", type=int, default=None, help="Worker processes (default BQP_JOBS)")

    system_help = (
        f"System: a class ({', '.join(CLASS_TAGS)}, with optional size like MQ4) or one of "
        f"{', '.join(SYSTEM_NAMES)}. cycle-literal rows are not valid inequalities and are "
        "expected to fail on the lower side or in the projection"
    )

    p = sub.add_parser("envelope", parents=[common], help="Exact vex and cav at a point")
    p.add_argument("--graph", required=True, help="Edge-list file")
    p.add_argument("--point", required=True, help="Coordinates, e.g. '1/2 0.3 1'")
    p.add_argument("--witness", action="store_true", help="Print the attaining convex combinations")
    p.set_defaults(func=cmd_envelope)

    p = sub.add_parser("verify", parents=[common], help="Check a system against the envelopes")
    p.add_argument("--graph", required=True)
    p.add_argument("--system", required=True, help=system_help)
    p.add_argument("--drop", help="Row label to remove, or family<F>:s=<S> for kn-minus")
    p.add_argument("--samples", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--all", action="store_true", help="Collect every counterexample")
    p.add_argument("--out", help="Per-sample CSV of the checked samples")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("cuts", parents=[common], help="Write a system as an LP file")
    p.add_argument("--graph", required=True)
    p.add_argument("--system", required=True, help=system_help)
    p.add_argument("--drop")
    p.add_argument("--out")
    p.set_defaults(func=cmd_cuts)

    p = sub.add_parser("certify", parents=[common], help="Build or check an interval certificate")
    p.add_argument("--graph", required=True)
    p.add_argument("--point")
    p.add_argument("--construction", choices=("clique", "kn-minus", "cycle", "vex-cycle"), default="cycle")
    p.add_argument("--certificate", help="Check an existing certificate file instead")
    p.add_argument("--out", help="Write the constructed certificate")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("study", parents=[common], help="Gap study from a TOML configuration")
    p.add_argument("config")
    p.add_argument("--seed", type=int, default=None, help="Override the configured seed")
    p.add_argument("--out", help="CSV table")
    p.add_argument("--dat", help="Whitespace table for error-bar plots")
    p.add_argument("--progress", action="store_true")
    p.set_defaults(func=cmd_study)

    p = sub.add_parser("relax", parents=[common], help="Relaxations of a QP instance")
    p.add_argument("instance")
    p.add_argument("--convexify", action="store_true", help="Emit the convexified relaxation")
    p.add_argument("--solve", action="store_true", help="Solve the linear relaxation")
    p.add_argument("--fractions", help="Triangle fractions, e.g. '0 1/2 1'")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_relax)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse arguments, configure logging and run one subcommand."""
    args = build_parser().parse_args(argv)
    try:
        config = get_config()
        if args.jobs is not None:
            if args.jobs < 1:
                raise UsageError("--jobs must be a positive integer")
            config.jobs = args.jobs
        level = "DEBUG" if args.verbose else config.log_level
        logging.basicConfig(level=level, format="%(levelname)s: %(message)s")
        return args.func(args)
    except KeyboardInterrupt:
        print("\nProgram interrupted by user.", file=sys.stderr)
        sys.exit(EXIT_FAILURE)
    except Exception as e:
        handle_error(e)


if __name__ == "__main__":
    sys.exit(main())
