"""Command-line entry point: ``gbsq {run,check,norms,equiv,twin}``.

Exit codes: 0 success, 1 failed check or diverged run, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys

from .checks import run_checks
from .diagnostics import g_field, velocity_formulation_residual
from .io import ConfigError, SnapshotFormatError, load_config, read_snapshot
from .littlewood_paley import BesovSpec, besov_norm
from .runner import run, twin_run

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that raises instead of exiting, so main() owns exit codes."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(f"{self.prog}: error: {message}")


class _UsageError(Exception):
    pass


def _float(text: str) -> float:
    try:
        return math.inf if text.lower() in ("inf", "infinity") else float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="gbsq", description="Generalized Boussinesq pseudo-spectral solver and diagnostics.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", metavar="{run,check,norms,equiv,twin}", parser_class=_Parser)
    sub.required = True

    r = sub.add_parser("run", help="integrate a configuration with monitors")
    r.add_argument("--config", required=True, help="key = value config file")

    sub.add_parser("check", help="run the built-in invariant suite")

    n = sub.add_parser("norms", help="print a Besov norm of a snapshot field")
    n.add_argument("--snapshot", required=True)
    n.add_argument("--s", type=_float, default=0.0, help="smoothness index")
    n.add_argument("--p", type=_float, default=2.0, help="integrability (inf allowed)")
    n.add_argument("--q", type=_float, default=2.0, help="summability (inf allowed)")
    n.add_argument("--log-gamma", type=_float, default=0.0, help="logarithmic weight exponent")
    n.add_argument("--homogeneous", action="store_true", help="drop the low-frequency block")
    n.add_argument("--field", choices=("omega", "theta", "g"), default="omega")

    e = sub.add_parser("equiv", help="print the velocity-formulation residual of a snapshot")
    e.add_argument("--snapshot", required=True)

    t = sub.add_parser("twin", help="twin run with a perturbed temperature")
    t.add_argument("--config", required=True)
    t.add_argument("--perturb", type=_float, required=True, help="relative amplitude of the bump")
    return p


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    result = run(cfg, write=True)
    last = result.series[-1]
    print(f"t={result.state.t:.6g} rows={len(result.series)} snapshots={len(result.snapshots)} "
          f"|omega|_2={last.omega_l2:.6e} |theta|_inf={last.theta_linf:.6e}")
    if result.diverged:
        print(f"diverged: {result.reason}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def _cmd_check(args) -> int:
    results = run_checks()
    for r in results:
        print(r.line())
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_FAIL


def _cmd_norms(args) -> int:
    state, _ = read_snapshot(args.snapshot)
    field = {"omega": state.omega, "theta": state.theta}.get(args.field)
    if field is None:
        field = g_field(state.omega, state.theta)
    spec = BesovSpec(s=args.s, p=args.p, q=args.q, log_gamma=args.log_gamma, homogeneous=args.homogeneous)
    print(f"{besov_norm(field, spec):.17g}")
    return EXIT_OK


def _cmd_equiv(args) -> int:
    state, params = read_snapshot(args.snapshot)
    _, norm = velocity_formulation_residual(state, params)
    print(f"{norm:.17g}")
    return EXIT_OK


def _cmd_twin(args) -> int:
    cfg = load_config(args.config)
    rows, diverged = twin_run(cfg, args.perturb, write=True)
    print(f"t={rows[-1].t:.6g} rows={len(rows)} Y={rows[-1].Y:.6e}")
    return EXIT_FAIL if diverged else EXIT_OK


_COMMANDS = {"run": _cmd_run, "check": _cmd_check, "norms": _cmd_norms, "equiv": _cmd_equiv, "twin": _cmd_twin}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, SnapshotFormatError, OSError, ValueError) as exc:
        print(f"gbsq {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
