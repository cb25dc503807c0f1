"""Command line front end.

Subcommands map one-to-one onto the library: ``trace`` builds and renders
an adaptive trace, ``scaling``/``divergence``/``moments``/``compare`` run
the Monte Carlo experiments, ``taylor-terms`` and ``integrals`` dump the
symbolic operator table and an iterated-integral table.  Every run writes
CSV (deterministic bytes for fixed seed and config, any --threads) plus a
JSON sidecar echoing the full config; the sidecar is the only file with
wall-clock metadata.

Exit codes: 0 success, 1 validation error (bad flags, existing outputs
without --force), 2 numerical failure (refinement budget exhausted,
reference did not converge).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from . import experiments as ex
from .brownian import BrownianPath
from .integrals import compute_table
from .trace import (TraceRefinementError, build_trace, render_svg,
                    write_trace_csv)
from .vfalgebra import enumerate_level, format_word, parse_word

__all__ = ["main"]

ENV_OUT = "SLESIM_OUT"

DEFAULT_EPS = [2.0 ** -k for k in range(3, 8)]
DEFAULT_WORDS = ["1", "0", "10", "00", "100", "000", "1000", "0000"]


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad flags; flag problems are validation
    # errors here, so remap them to 1.
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser() -> _Parser:
    parser = _Parser(prog="slesim",
                     description="Splitting schemes, stochastic Taylor "
                                 "expansions, and traces for backward "
                                 "Loewner evolutions.")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    def common(p):
        p.add_argument("--seed", type=int, default=0,
                       help="stream key (default 0)")
        p.add_argument("--out", default=None,
                       help=f"output directory (default ${ENV_OUT} or .)")
        p.add_argument("--force", action="store_true",
                       help="overwrite existing outputs")
        p.add_argument("--threads", type=int, default=1,
                       help="worker bound; results are identical for any "
                            "value (default 1)")

    p = sub.add_parser("trace", help="adaptively refined trace plus SVG")
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--T", type=float, default=1.0, dest="horizon")
    p.add_argument("--n-init", type=int, default=64)
    p.add_argument("--tolerance", type=float, default=0.02)
    p.add_argument("--max-depth", type=int, default=40)
    p.add_argument("--shift", action="store_true",
                   help="translate by sqrt(kappa) B(T)")
    common(p)

    p = sub.add_parser("scaling", help="Taylor error vs eps at short horizon")
    p.add_argument("--eps", type=float, nargs="+", default=DEFAULT_EPS)
    p.add_argument("--delta", type=float, default=0.5)
    p.add_argument("--r", type=int, default=2)
    p.add_argument("--kappa", type=float, default=2.0)
    p.add_argument("--replicas", type=int, default=1000)
    p.add_argument("--substeps", type=int, default=128)
    common(p)

    p = sub.add_parser("divergence",
                       help="Taylor-term magnitudes at long horizon")
    p.add_argument("--eps", type=float, default=2.0 ** -6)
    p.add_argument("--delta", type=float, default=0.5)
    p.add_argument("--words", nargs="+", default=DEFAULT_WORDS,
                   help="digit strings like 0 1 10 00")
    p.add_argument("--kappa", type=float, default=2.0)
    p.add_argument("--replicas", type=int, default=10000)
    p.add_argument("--resolution", type=int, default=256)
    common(p)

    p = sub.add_parser("moments", help="second moment under splitting steps")
    p.add_argument("--kappa", type=float, default=2.0)
    p.add_argument("--z0-re", type=float, default=0.0)
    p.add_argument("--z0-im", type=float, default=1.0)
    p.add_argument("--T", type=float, default=1.0, dest="horizon")
    p.add_argument("--steps", type=int, default=16)
    p.add_argument("--replicas", type=int, default=100000)
    common(p)

    p = sub.add_parser("compare", help="one-step errors of all schemes")
    p.add_argument("--kappa", type=float, default=2.0)
    p.add_argument("--eps", type=float, default=2.0 ** -6)
    p.add_argument("--horizons", type=float, nargs="+", default=None,
                   help="default: eps^2.5 eps^2.25 eps^2 eps^1.75")
    p.add_argument("--replicas", type=int, default=1000)
    p.add_argument("--substeps", type=int, default=128)
    common(p)

    p = sub.add_parser("taylor-terms", help="symbolic operator monomials")
    p.add_argument("--r", type=int, required=True, help="word length")
    common(p)

    p = sub.add_parser("integrals", help="iterated-integral table dump")
    p.add_argument("--T", type=float, default=1.0, dest="horizon")
    p.add_argument("--n", type=int, default=256, help="driver resolution")
    p.add_argument("--r", type=int, default=3, help="maximum word length")
    common(p)

    return parser


def _out_dir(args) -> Path:
    out = args.out if args.out is not None else os.environ.get(ENV_OUT, ".")
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _targets(args, *names) -> list[Path]:
    directory = _out_dir(args)
    paths = [directory / name for name in names]
    if not args.force:
        clashes = [str(p) for p in paths if p.exists()]
        if clashes:
            raise ValueError("refusing to overwrite " + ", ".join(clashes)
                             + " (pass --force)")
    return paths


def _cmd_trace(args) -> int:
    csv_path, svg_path, json_path = _targets(
        args, "trace.csv", "trace.svg", "trace.json")
    started = time.perf_counter()
    path = BrownianPath.sample_uniform(args.horizon, args.n_init, args.seed)
    result = build_trace(path, args.horizon, args.kappa,
                         n_init=args.n_init, tolerance=args.tolerance,
                         max_depth=args.max_depth, apply_shift=args.shift,
                         threads=args.threads)
    write_trace_csv(result, csv_path)
    svg_path.write_text(render_svg(result), encoding="ascii")
    payload = {
        "command": "trace",
        "config": {"kappa": args.kappa, "T": args.horizon,
                   "n_init": args.n_init, "tolerance": args.tolerance,
                   "max_depth": args.max_depth, "shift": args.shift,
                   "threads": args.threads},
        "seed": args.seed,
        "points": len(result.points),
        "stats": result.stats,
        "runtime_seconds": time.perf_counter() - started,
        "created_unix": time.time(),
    }
    json_path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                         encoding="ascii")
    print(f"trace: {len(result.points)} points, "
          f"depth {result.stats['refinement_depth_max']}, "
          f"wrote {csv_path}")
    return 0


def _run_report(args, name: str, runner) -> int:
    csv_path, json_path = _targets(args, f"{name}.csv", f"{name}.json")
    started = time.perf_counter()
    report = runner()
    ex.write_report_csv(report, csv_path)
    ex.write_report_sidecar(report, json_path,
                            time.perf_counter() - started)
    line = f"{report.name}: {len(report.rows)} rows, wrote {csv_path}"
    if report.fit is not None:
        line += f" (slope {report.fit[0]:.3f}, r2 {report.fit[2]:.4f})"
    print(line)
    return 0


def _cmd_scaling(args) -> int:
    return _run_report(args, "scaling", lambda: ex.epsilon_scaling(
        args.eps, args.delta, args.r, args.kappa, args.replicas, args.seed,
        substeps=args.substeps, threads=args.threads))


def _cmd_divergence(args) -> int:
    words = [parse_word(w) for w in args.words]
    return _run_report(args, "divergence", lambda: ex.divergence_probe(
        args.eps, args.delta, words, args.replicas, args.seed,
        kappa=args.kappa, resolution=args.resolution, threads=args.threads))


def _cmd_moments(args) -> int:
    z0 = complex(args.z0_re, args.z0_im)
    return _run_report(args, "moments", lambda: ex.moment_preservation(
        args.kappa, z0, args.horizon, args.steps, args.replicas, args.seed,
        threads=args.threads))


def _cmd_compare(args) -> int:
    horizons = args.horizons
    if horizons is None:
        horizons = [args.eps ** p for p in (2.5, 2.25, 2.0, 1.75)]
    return _run_report(args, "compare", lambda: ex.scheme_comparison(
        args.kappa, args.eps, horizons, args.replicas, args.seed,
        substeps=args.substeps, threads=args.threads))


def _cmd_taylor_terms(args) -> int:
    if args.r < 0:
        raise ValueError("--r must be nonnegative")
    (csv_path,) = _targets(args, "taylor_terms.csv")
    with open(csv_path, "w", encoding="ascii") as fh:
        fh.write("word,coeff_num,coeff_den,a_power,z_power\n")
        for word, term in enumerate_level(args.r):
            fh.write(f"{format_word(word)},{term.coeff.numerator},"
                     f"{term.coeff.denominator},{term.a_power},"
                     f"{term.z_power}\n")
    print(f"taylor-terms: {2 ** args.r} rows, wrote {csv_path}")
    return 0


def _cmd_integrals(args) -> int:
    (csv_path,) = _targets(args, "integrals.csv")
    path = BrownianPath.sample_uniform(args.horizon, args.n, args.seed)
    table = compute_table(path, args.horizon, args.r)
    with open(csv_path, "w", encoding="ascii") as fh:
        fh.write("word,value\n")
        for word, value in table.entries.items():
            fh.write(f"{format_word(word)},{value!r}\n")
    print(f"integrals: {len(table.entries)} rows, wrote {csv_path}")
    return 0


_COMMANDS = {
    "trace": _cmd_trace,
    "scaling": _cmd_scaling,
    "divergence": _cmd_divergence,
    "moments": _cmd_moments,
    "compare": _cmd_compare,
    "taylor-terms": _cmd_taylor_terms,
    "integrals": _cmd_integrals,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # remapped argparse errors and --help
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"slesim: error: {exc}", file=sys.stderr)
        return 1
    except (TraceRefinementError, ex.ReferenceConvergenceError) as exc:
        print(f"slesim: numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
