"""
Command-line front end.

Exit codes: 0 success (or certified), 2 usage and domain errors, 3
inconclusive certification or unknown verdict.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import numpy as np
from pydantic import ValidationError

from .certify import certify_rate, check_chain
from .chain import kappa_chain, load_chain, save_chain, window_kappas, windows
from .companion import companion_report, describe, tangent_normal
from .config import load_config
from .exceptions import EXIT_DOMAIN, EXIT_INCONCLUSIVE, EXIT_OK, DomainError, GlueError
from .limits import empirical_holder, hat, limit_samples, write_csv, write_svg
from .linear import basic_function, difference_scheme, hoelder_from_jsr, jsr_table
from .models import Certificate, InconclusiveReport, VerdictLevel
from .registry import get_scheme
from .schemes import LinearScheme, iterate
from .utils import model_validate, read_json, write_model

logger = logging.getLogger(__name__)

Handler = Callable[[argparse.Namespace], int]


def _emit(text: str, path: Optional[str]) -> None:
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _matrix(M: np.ndarray) -> str:
    return np.array2string(M, precision=6, suppress_small=True, max_line_width=120)


def load_certificate(path: str) -> Certificate:
    data = read_json(path)
    if isinstance(data, dict) and data.get("status") == "inconclusive":
        raise DomainError(f"{path} is an inconclusive report, not a certificate")
    try:
        return model_validate(Certificate, data)
    except ValidationError as exc:
        raise DomainError(f"{path}: invalid certificate: {exc.errors()[0].get('msg')}")


class _Parser(argparse.ArgumentParser):
    """Argument parser that reports usage errors with the domain exit code"""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_DOMAIN)


class GlueCLI:
    """
    Sub-command dispatcher.

    Example:
        glue-regularity certify cps2d --budget 500 -o cps.json
        glue-regularity check cps2d cps.json heptagon.json
    """

    def __init__(self) -> None:
        self.parser = _Parser(
            prog="glue-regularity",
            description="Regularity analysis of GLUE subdivision schemes",
        )
        self.parser.add_argument(
            "-v", "--verbose", action="count", default=0,
            help="More log output (repeat for debug messages)",
        )
        self.commands = self.parser.add_subparsers(dest="command", metavar="command")
        self.commands.required = True
        self._register_commands()

    def _add(self, name: str, handler: Handler, help_text: str) -> argparse.ArgumentParser:
        sub = self.commands.add_parser(name, help=help_text, description=help_text)
        sub.set_defaults(handler=handler)
        return sub

    def _register_commands(self) -> None:
        """Register all sub-commands"""
        # SUBDIVIDE
        sub = self._add("subdivide", self.cmd_subdivide, "Refine a chain")
        sub.add_argument("scheme", help="Scheme id, e.g. chaikin or bspline_tau:0.25")
        sub.add_argument("chain", help="Chain JSON file")
        sub.add_argument("--rounds", type=int, default=1, help="Rounds of refinement")
        sub.add_argument("-o", "--output", help="Output chain file (default: stdout)")

        # KAPPA
        sub = self._add("kappa", self.cmd_kappa, "Relative distortion of a chain")
        sub.add_argument("chain", help="Chain JSON file")
        group = sub.add_mutually_exclusive_group(required=True)
        group.add_argument("--spread", type=int, help="Window length n (odd, >= 3)")
        group.add_argument("--scheme", help="Use the spread of this scheme")
        sub.add_argument("--config", help="TOML configuration file (tolerances)")

        # CERTIFY
        sub = self._add("certify", self.cmd_certify, "Search for a straightening certificate")
        sub.add_argument("scheme", help="Scheme id")
        sub.add_argument("--config", help="TOML configuration file")
        sub.add_argument("--dim", type=int, help="Point dimension")
        sub.add_argument("--ell-max", type=int, help="Largest inner depth")
        sub.add_argument("--k-max", type=int, help="Largest annulus depth")
        sub.add_argument("--delta", type=float, nargs="+", help="Inner radii to try")
        sub.add_argument("--gamma-max", type=float, help="Largest outer radius tried")
        sub.add_argument("--gamma-steps", type=int, help="Bisection steps for gamma")
        sub.add_argument("--budget", type=int, help="Boxes per bound computation")
        sub.add_argument("--rel-gap", type=float, help="Relative gap that ends refinement")
        sub.add_argument("--threads", type=int, help="Worker threads (env GLUE_CERT_THREADS)")
        sub.add_argument("-o", "--output", help="Output JSON file (default: stdout)")

        # CHECK
        sub = self._add("check", self.cmd_check, "Check a chain against a certificate")
        sub.add_argument("scheme", help="Scheme id")
        sub.add_argument("certificate", help="Certificate JSON file")
        sub.add_argument("chain", help="Chain JSON file")
        sub.add_argument("--config", help="TOML configuration file")
        sub.add_argument("--max-rounds", type=int, help="Rounds of refinement to try")
        sub.add_argument("-o", "--output", help="Output verdict file (default: stdout)")

        # COMPANION
        sub = self._add("companion", self.cmd_companion, "Derivative schemes at the standard chain")
        sub.add_argument("scheme", help="Scheme id")
        sub.add_argument("--dim", type=int, help="Point dimension")
        sub.add_argument("--depth", type=int, default=8, help="Product depth of the jsr table")
        sub.add_argument("--certificate", help="Certificate to include in the verdict")
        sub.add_argument("--json", action="store_true", help="Print the report as JSON")
        sub.add_argument("--config", help="TOML configuration file (tolerances)")

        # LIMIT
        sub = self._add("limit", self.cmd_limit, "Sample the limit curve")
        sub.add_argument("scheme", help="Scheme id")
        sub.add_argument("chain", help="Chain JSON file")
        sub.add_argument("--level", type=int, default=8, help="Refinement level")
        sub.add_argument("--z", type=float, default=1.0, help="Margin of the parameter interval")
        sub.add_argument("--grid", type=int, default=257, help="Number of samples")
        sub.add_argument("--format", choices=["csv", "svg"], default="csv")
        sub.add_argument("--generator", choices=["hat", "basic"], default="hat",
                         help="Generator: hat function or the basic function of a linear scheme")
        sub.add_argument("--holder", type=int, choices=[1, 2],
                         help="Also estimate the Hoelder exponent of this derivative")
        sub.add_argument("-o", "--output", help="Output file (default: stdout)")

        # JSR
        sub = self._add("jsr", self.cmd_jsr, "Joint spectral radius bounds of a difference scheme")
        sub.add_argument("scheme", help="Scheme id (nonlinear schemes use their tangential part)")
        sub.add_argument("--order", type=int, default=2, help="Difference order")
        sub.add_argument("--depth", type=int, default=8, help="Largest product depth")
        sub.add_argument("--config", help="TOML configuration file (tolerances)")

    def run(self, argv: Optional[List[str]] = None) -> int:
        args = self.parser.parse_args(argv)
        level = logging.WARNING - 10 * min(args.verbose, 2)
        logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
        try:
            return args.handler(args)
        except GlueError as exc:
            print(f"error: {exc.detail}", file=sys.stderr)
            return exc.exit_code

    def cmd_subdivide(self, args: argparse.Namespace) -> int:
        scheme = get_scheme(args.scheme)
        P = load_chain(args.chain)
        if args.rounds < 0:
            raise DomainError("number of rounds must be non-negative")
        lengths = [len(P)]
        for _ in range(args.rounds):
            P = iterate(scheme, P, 1)
            lengths.append(len(P))
        report = sys.stdout if args.output else sys.stderr
        print("lengths: " + " ".join(str(n) for n in lengths), file=report)
        _emit(save_chain(P), args.output)
        return EXIT_OK

    def cmd_kappa(self, args: argparse.Namespace) -> int:
        P = load_chain(args.chain)
        degeneracy = load_config(args.config).tolerances.degeneracy
        n = get_scheme(args.scheme).n if args.scheme else args.spread
        if n < 3 or n % 2 == 0:
            raise DomainError(f"spread must be odd and at least 3, got {n}")
        if len(P) < n:
            raise DomainError(f"chain of length {len(P)} is shorter than spread {n}")
        print(f"kappa: {kappa_chain(P, n, degeneracy):.12g}")
        for i, value in enumerate(window_kappas(windows(P, n), degeneracy)):
            print(f"window {i}: {value:.12g}")
        return EXIT_OK

    def cmd_certify(self, args: argparse.Namespace) -> int:
        scheme = get_scheme(args.scheme)
        overrides: Dict[str, Any] = {
            "scheme": args.scheme,
            "dim": args.dim,
            "ell_max": args.ell_max,
            "k_max": args.k_max,
            "delta_grid": args.delta,
            "gamma_max": args.gamma_max,
            "gamma_steps": args.gamma_steps,
            "budget": args.budget,
            "rel_gap": args.rel_gap,
            "threads": args.threads,
        }
        config = load_config(args.config, overrides)
        result = certify_rate(scheme, config)
        _emit(write_model(result), args.output)
        if isinstance(result, InconclusiveReport):
            print(f"inconclusive: best bound {result.best_bound}", file=sys.stderr)
            return EXIT_INCONCLUSIVE
        print(f"certified: alpha = {result.alpha:.6g}, gamma = {result.gamma:g}", file=sys.stderr)
        return EXIT_OK

    def cmd_check(self, args: argparse.Namespace) -> int:
        scheme = get_scheme(args.scheme)
        cert = load_certificate(args.certificate)
        P = load_chain(args.chain)
        config = load_config(args.config, {"max_rounds": args.max_rounds})
        verdict = check_chain(scheme, cert, P, config.max_rounds, config)
        _emit(write_model(verdict), args.output)
        if verdict.level == VerdictLevel.UNKNOWN:
            return EXIT_INCONCLUSIVE
        return EXIT_OK

    def cmd_companion(self, args: argparse.Namespace) -> int:
        scheme = get_scheme(args.scheme)
        cert = load_certificate(args.certificate) if args.certificate else None
        tolerances = load_config(args.config).tolerances
        report = companion_report(scheme, cert, depth=args.depth, dim=args.dim,
                                  tolerances=tolerances)
        if args.json:
            _emit(write_model(report), None)
            return EXIT_OK
        flag = "locally linear" if report.locally_linear else "not locally linear"
        print(f"{scheme.name}: {flag} (|A - B| = {report.deviation:.3e})")
        if report.locally_linear:
            print(f"companion = {describe(report.companion)}")
        for label in ("A0", "A1", "B0", "B1"):
            print(f"{label} =")
            print(_matrix(np.array(getattr(report, label))))
        for label, values in sorted(report.jsr.items()):
            print(f"rho_l({label}): " + " ".join(f"{v:.6g}" for v in values))
        verdict = report.verdict
        if verdict is not None:
            exponent = "" if verdict.exponent is None else f" exponent {verdict.exponent:.6g}"
            extra = " (conditional)" if verdict.conditional else ""
            print(f"verdict: {verdict.level}{exponent}{extra}")
        return EXIT_OK

    def cmd_limit(self, args: argparse.Namespace) -> int:
        scheme = get_scheme(args.scheme)
        P = load_chain(args.chain)
        if args.generator == "basic":
            if not isinstance(scheme, LinearScheme):
                raise DomainError("basic functions exist for linear schemes only")
            generator = basic_function(scheme)
        else:
            generator = hat()
        curve = limit_samples(scheme, P, args.level, generator=generator, z=args.z, grid=args.grid)
        text = write_csv(curve) if args.format == "csv" else write_svg(curve)
        _emit(text, args.output)
        if args.holder:
            estimate = empirical_holder(scheme, P, args.holder, z=args.z)
            if estimate.exact:
                print(f"holder order {args.holder}: modulus vanishes (exact)", file=sys.stderr)
            else:
                print(f"holder order {args.holder}: alpha ~ {estimate.alpha:.4f}", file=sys.stderr)
        return EXIT_OK

    def cmd_jsr(self, args: argparse.Namespace) -> int:
        scheme = get_scheme(args.scheme)
        tolerances = load_config(args.config).tolerances
        if isinstance(scheme, LinearScheme):
            mats = scheme.matrices()
        else:
            mats = tangent_normal(scheme, tolerance=tolerances.structure).A
        table = jsr_table(difference_scheme(mats, args.order, tolerances.difference), args.depth)
        for depth, rho in enumerate(table, start=1):
            exponent = hoelder_from_jsr(rho, args.order - 1)
            print(f"l={depth}: rho <= {rho:.12g}  exponent >= {exponent:.6g}")
        return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    """Entry point of the ``glue-regularity`` command"""
    return GlueCLI().run(argv)


if __name__ == "__main__":
    sys.exit(main())
