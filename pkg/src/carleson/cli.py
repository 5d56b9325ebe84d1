"""Command-line front end.

Exit codes: 0 success, 1 unreadable or malformed input, 2 invariant
violation, 3 numerical non-convergence, 4 an asserted inequality failed.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import InputError, NumericalError, ParseError
from .kernels import HalfPlanePoint, rkt_sup, geometric_bound_from_kernel_ratio, repkernel_hp_norm
from .measures import (
    DiscreteMeasure,
    embedding_report,
    example_family_measure,
    family_gap_integrals,
    family_tent_table,
    geometric_constant,
    geometric_constant_grid,
    log_growth_fit,
    tent_measure,
)
from .numerics import QuadratureSpec
from .reciprocal import VARIANTS, c_T_constant, identity_grid, reciprocal_probe
from .serialization import dumps, load_document, parse_spec
from .systems import (
    DiagonalSystem,
    Indicator,
    TruncatedExponential,
    admissibility_probe_sup,
    default_lambda_grid,
    poisson_measure,
    square_function_norm,
    weiss_sup,
    xminus_theta_norm,
)

EXIT_OK, EXIT_PARSE, EXIT_INVARIANT, EXIT_NUMERICAL, EXIT_ASSERTION = 0, 1, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ParseError(message)


def _read_spec(path: Optional[str]):
    if path is None:
        raise ParseError("--input is required for this command")
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None
    return parse_spec(text)


def _as_measure(spec) -> DiscreteMeasure:
    return poisson_measure(spec) if isinstance(spec, DiagonalSystem) else spec


def _as_system(spec) -> DiagonalSystem:
    if not isinstance(spec, DiagonalSystem):
        raise ParseError("this command needs a system document ({\"q\": ..., \"modes\": [...]})")
    return spec


def _check_geometric(args):
    mu = _as_measure(_read_spec(args.input))
    report = geometric_constant(mu, args.alpha).to_dict()
    report["atoms"] = len(mu)
    ok = True
    if args.grid:
        grid = geometric_constant_grid(mu, args.alpha, n_grid=args.grid, refine_tol=args.refine_tol)
        report["grid_oracle"] = grid.to_dict()
        ok = grid.constant <= report["constant"] * (1 + 1e-12)
    return report, ok


def _check_embedding(args):
    mu = _as_measure(_read_spec(args.input))
    return embedding_report(mu, args.alpha, QuadratureSpec(1e-12, args.tol)), True


def _rkt(args):
    mu = _as_measure(_read_spec(args.input))
    if len(mu) == 0:
        return rkt_sup(mu, args.p, args.q).to_dict(), True
    geo = geometric_constant(mu, args.p / args.q)
    w = geo.witness
    apex = HalfPlanePoint(w.r, w.omega)
    rkt = rkt_sup(mu, args.p, args.q, extra_points=[apex])
    report = rkt.to_dict()
    # the kernel estimate at the apex of the extremal tent
    lhs = tent_measure(mu, w)
    rhs = (2 * w.r) ** args.q * rkt.sup_ratio**args.q * repkernel_hp_norm(apex, args.p) ** args.q
    report["kernel_bound_check"] = {"tent_mass": lhs, "kernel_bound": rhs, "holds": lhs <= rhs * (1 + 1e-12)}
    report["geometric_constant"] = geo.constant
    report["implied_geometric_bound"] = geometric_bound_from_kernel_ratio(rkt.sup_ratio, args.p)
    ok = report["kernel_bound_check"]["holds"] and geo.constant <= report["implied_geometric_bound"] * (1 + 1e-12)
    return report, ok


def _probe_family(sys_: DiagonalSystem, n_re: int = 40, n_im: int = 41):
    lam = sys_.lam
    reach = float(np.abs(lam.imag).max() + lam.real.max())
    res = np.geomspace(float(lam.real.min()) / 100, 100 * float(np.abs(lam).max()), n_re)
    ims = np.linspace(-2 * reach, 2 * reach, n_im)
    return [TruncatedExponential(complex(a, b)) for a in res for b in ims]


def _admissibility(args):
    sys_ = _as_system(_read_spec(args.input))
    horizon = math.inf if args.horizon is None else args.horizon
    family = _probe_family(sys_)
    if not math.isinf(horizon):
        family += [Indicator(tau) for tau in np.geomspace(horizon / 100, horizon, 5)]
    report = admissibility_probe_sup(sys_, args.p, family, horizon).to_dict()
    report["family_size"] = len(family)
    if args.theta is not None:
        report["xminus_theta_norm"] = xminus_theta_norm(sys_, args.theta)
        report["theta"] = args.theta
    return report, True


def _weiss(args):
    sys_ = _as_system(_read_spec(args.input))
    grid = default_lambda_grid(sys_, args.grid or 200)
    report = weiss_sup(sys_, args.p, grid).to_dict()
    report.update(p=args.p, grid_points=len(grid), grid_min=float(grid[0]), grid_max=float(grid[-1]))
    return report, True


def _square_function(args):
    sys_ = _as_system(_read_spec(args.input))
    value = square_function_norm(sys_, sys_.coeffs, args.p, QuadratureSpec(1e-12, args.tol))
    return {"square_function_norm": value, "p": args.p, "state": "b"}, True


def _reciprocal(args):
    sys_ = _as_system(_read_spec(args.input))
    probe = reciprocal_probe(sys_, Indicator(args.T), args.T, args.p_prime)
    report = {"probe": probe.to_dict(), "T": args.T, "p_prime": args.p_prime}
    if args.epsilon is not None:
        p = args.p if args.p is not None else args.p_prime / (args.p_prime - 1.0)
        report["c_T"] = c_T_constant(p, args.epsilon, args.T)
        report["c_T_parameters"] = {"p": p, "epsilon": args.epsilon}
        report["bound"] = "M * C_T with M the shifted admissibility constant"
    return report, True


def _bessel_verify(args):
    variants = tuple(v.strip() for v in args.variants.split(","))
    unknown = [v for v in variants if v not in VARIANTS]
    if unknown:
        raise ParseError(f"--variants: unknown variant(s) {', '.join(unknown)}")
    reports = identity_grid(variants, spec=QuadratureSpec(1e-11, 1e-10, max_subdivisions=4000))
    rows = [r.to_dict() for r in reports]
    ok = all(r.residual < args.tol for r in reports)
    csv_path = args.csv or (str(Path(args.output).with_suffix(".csv")) if args.output else None)
    if csv_path:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["lambda_re", "lambda_im", "t", "variant", "nu", "residual"])
        for r in reports:
            writer.writerow([repr(r.lam.real), repr(r.lam.imag), repr(r.t), r.variant,
                             "" if r.nu is None else repr(r.nu), repr(r.residual)])
        Path(csv_path).write_text(buf.getvalue(), encoding="utf-8")
    return rows, ok


def _counterexample(args):
    epsilon, gamma, n_atoms = args.epsilon, args.gamma, args.N
    q = args.q
    if args.input:
        _read_spec(args.input)  # validates the document
        doc = load_document(Path(args.input).read_text(encoding="utf-8"))
        if "family" not in doc:
            raise ParseError("counterexample input must be a family document")
        epsilon, gamma, n_atoms = doc["epsilon"], doc["gamma"], doc["N"]
        q = doc.get("q", q)
    if None in (epsilon, gamma, n_atoms):
        raise ParseError("counterexample needs --epsilon, --gamma and --N (or a family --input)")
    mu = example_family_measure(epsilon, gamma, n_atoms)
    alpha = gamma / (1.0 - epsilon)
    report = {"epsilon": epsilon, "gamma": gamma, "N": n_atoms, "q": q, "alpha": alpha,
              "truncation": f"atoms with 0 < |n| <= {n_atoms}"}
    table = family_tent_table(mu, epsilon, gamma, np.geomspace(1.0, args.r_max, args.r_points))
    report["tent_bound_table"] = table
    ok = all(row["holds"] for row in table)
    if alpha > 1:
        beta = alpha / (alpha - 1.0)
        rows = family_gap_integrals(mu, gamma, beta, range(2, args.n_max + 1),
                                    QuadratureSpec(1e-12, args.tol, max_subdivisions=4000))
        report["beta"] = beta
        report["log_growth_table"] = rows
        report["log_growth_fit"] = log_growth_fit(rows)
    return report, ok


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="carleson", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def command(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--input", help="spec document (JSON)")
        p.add_argument("--output", help="report path; stdout when omitted")
        p.set_defaults(func=func)
        return p

    p = command("check-geometric", _check_geometric, "geometric alpha-Carleson constant")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--grid", type=int, default=0, help="also run the n x n grid oracle")
    p.add_argument("--refine-tol", type=float, default=None)

    p = command("check-embedding", _check_embedding, "embedding alpha-Carleson check")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--tol", type=float, default=1e-8)

    p = command("rkt", _rkt, "reproducing-kernel ratio and the geometric bound it implies")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--q", type=float, required=True)

    p = command("admissibility", _admissibility, "probe sup over exponential (and indicator) inputs")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--horizon", type=float, default=None)
    p.add_argument("--theta", type=float, default=None)

    p = command("weiss", _weiss, "Weiss-condition sup")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--grid", type=int, default=200)

    p = command("square-function", _square_function, "square-function norm of b")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--tol", type=float, default=1e-10)

    p = command("reciprocal", _reciprocal, "reciprocal-system probe and C_T")
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--p-prime", type=float, default=2.0)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--p", type=float, default=None, help="exponent for C_T (default: dual of p')")

    p = command("bessel-verify", _bessel_verify, "Bessel representation residuals")
    p.add_argument("--variants", default="zwart,half,power")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--csv", default=None)

    p = command("counterexample", _counterexample, "discrete geometric-but-not-embedding family")
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--N", type=int, default=None)
    p.add_argument("--q", type=float, default=2.0)
    p.add_argument("--n-max", type=int, default=50)
    p.add_argument("--r-max", type=float, default=1e6)
    p.add_argument("--r-points", type=int, default=61)
    p.add_argument("--tol", type=float, default=1e-7)
    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        report, ok = args.func(args)
        text = dumps(report)
        if args.output:
            Path(args.output).write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except InputError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    if not ok:
        print("assertion failed: see report", file=sys.stderr)
        return EXIT_ASSERTION
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
