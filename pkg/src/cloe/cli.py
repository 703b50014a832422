"""Command-line front end: ``cloe generate | reduce | eval | sweep``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import bench
from .constructive import CloeConfig, ModelOracle, TabulatedOracle, run_cloe
from .errors import BudgetTooSmall, CloeError, DimensionMismatch, InvalidRange, ParseError, SingularPencil
from .lti import (
    FrequencyGrid,
    FrequencySample,
    frequency_response,
    generate_modal_model,
    log_grid,
    read_model,
    read_samples,
    spectral_norm,
    write_model,
    write_samples,
)

log = logging.getLogger("cloe")

EXIT_OK, EXIT_USAGE, EXIT_FAILURE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of integers: {text!r}") from None


def _print_config(name: str, cfg: dict) -> None:
    print(f"effective config [{name}]: {json.dumps(cfg, sort_keys=True, default=str)}")


def _add_band(p: argparse.ArgumentParser) -> None:
    p.add_argument("--wmin", type=float, default=1e-3, help="lower band edge, rad/s (default 1e-3)")
    p.add_argument("--wmax", type=float, default=1e3, help="upper band edge, rad/s (default 1e3)")


def cmd_generate(args) -> int:
    model = generate_modal_model(
        args.seed, args.modes, tuple(args.freq_range), tuple(args.damping_range),
        tuple(args.gain_range), m=args.m, p=args.p,
    )
    _print_config("generate", {
        "seed": args.seed, "modes": args.modes, "freq_range": args.freq_range,
        "damping_range": args.damping_range, "gain_range": args.gain_range,
        "m": args.m, "p": args.p, "out": str(args.out),
    })
    write_model(model, args.out)
    poles = model.poles()
    wn = np.sort(np.unique(np.round(np.abs(poles), 12)))
    print(f"wrote {args.out}: order n={model.n}, m={model.m}, p={model.p}")
    print(f"poles: max Re = {poles.real.max():.4g}, natural frequencies {wn.min():.4g} .. {wn.max():.4g} rad/s")
    return EXIT_OK


def cmd_reduce(args) -> int:
    config = CloeConfig(
        omega_min=args.wmin, omega_max=args.wmax, max_points=args.max_points,
        epsilon=args.eps / 100.0, n_f=args.nf, points_per_iteration=args.ppi,
        guard_cells=args.guard, rank_tol=args.rank_tol,
    )
    if args.model is not None:
        oracle = ModelOracle(read_model(args.model))
    else:
        samples = read_samples(args.samples)
        for row, s in enumerate(samples, start=2):
            if not (args.wmin <= s.omega <= args.wmax):
                raise ParseError(f"frequency {s.omega} lies outside [{args.wmin}, {args.wmax}]",
                                 line=row, field="omega")
        oracle = TabulatedOracle(samples)
    _print_config("reduce", {
        "model": args.model, "samples": args.samples, "wmin": args.wmin, "wmax": args.wmax,
        "nf": args.nf, "eps_percent": args.eps, "max_points": args.max_points, "ppi": args.ppi,
        "guard": args.guard, "rank_tol": args.rank_tol, "out": str(args.out), "trace": str(args.trace),
    })
    H, trace = run_cloe(oracle, config)
    Path(args.out).write_text(json.dumps(H.to_dict(), indent=1) + "\n")
    Path(args.trace).write_text(trace.to_json(indent=1) + "\n")
    if trace.termination == "grid_exhausted":
        log.warning("no admissible frequency left; partial results written")
    e = trace.final_e_tilde
    print(f"termination: {trace.termination}")
    print(f"|I| = {len(trace.final_set)}, order = {H.order}, oracle calls = {oracle.call_count}")
    print(f"final e_tilde = {'n/a' if e is None else f'{e:.4g}'}")
    return EXIT_OK


def cmd_eval(args) -> int:
    model = read_model(args.model)
    if args.omega is not None:
        pts = np.array(sorted(args.omega))
        grid = FrequencyGrid(pts, "explicit")
    else:
        grid = log_grid(args.wmin, args.wmax, args.n)
    _print_config("eval", {"model": str(args.model), "omega": args.omega, "wmin": args.wmin,
                           "wmax": args.wmax, "n": args.n, "out": str(args.out)})
    samples = []
    for w in grid.points:
        try:
            samples.append(FrequencySample(w, frequency_response(model, [w])[0]))
        except SingularPencil:
            log.warning("skipping omega=%g: pencil is singular there", w)
    if not samples:
        raise SingularPencil(float(grid.points[0]))
    norms = [spectral_norm(s.response) for s in samples]
    write_samples(samples, args.out, extra={"norm": norms})
    print(f"wrote {len(samples)} rows to {args.out}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    if args.models_dir is not None:
        files = sorted(Path(args.models_dir).glob("*.json"))
        if not files:
            raise UsageError(f"no *.json model files in {args.models_dir}")
        models = [(f.stem, read_model(f)) for f in files]
    else:
        models = bench.benchmark_suite()
    eps = [e / 100.0 for e in args.eps]
    if not args.nf or not eps:
        raise UsageError("--nf and --eps lists must be nonempty")
    base = CloeConfig(omega_min=args.wmin, omega_max=args.wmax, max_points=args.max_points,
                      epsilon=eps[0], n_f=args.nf[0], rank_tol=args.rank_tol)
    for e in eps:
        CloeConfig(omega_min=args.wmin, omega_max=args.wmax, epsilon=e)
    for nf in args.nf:
        CloeConfig(omega_min=args.wmin, omega_max=args.wmax, n_f=nf)
    _print_config("sweep", {
        "models_dir": args.models_dir, "models": [m for m, _ in models], "nf": args.nf,
        "eps_percent": args.eps, "wmin": args.wmin, "wmax": args.wmax, "max_points": args.max_points,
        "rank_tol": args.rank_tol, "eval_points": args.eval_points, "workers": args.workers,
        "out": str(args.out),
    })
    bench.sweep(models, args.nf, eps, out_path=args.out, base_config=base,
                eval_points=args.eval_points, workers=args.workers, echo=True)
    print(f"wrote {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cloe", description="Constructive Loewner interpolation toolkit")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="write a seeded modal test model")
    g.add_argument("--seed", type=int, default=1)
    g.add_argument("--modes", type=int, default=3)
    g.add_argument("--freq-range", type=float, nargs=2, default=[1e-2, 1e2], metavar=("LO", "HI"))
    g.add_argument("--damping-range", type=float, nargs=2, default=[0.01, 0.1], metavar=("LO", "HI"))
    g.add_argument("--gain-range", type=float, nargs=2, default=[-1.0, 1.0], metavar=("LO", "HI"))
    g.add_argument("--m", type=int, default=1, help="outputs")
    g.add_argument("--p", type=int, default=1, help="inputs")
    g.add_argument("--out", type=Path, default=Path("model.json"))
    g.set_defaults(func=cmd_generate)

    r = sub.add_parser("reduce", help="run CLOE on a model or a tabulated response")
    src = r.add_mutually_exclusive_group(required=True)
    src.add_argument("--model", type=Path)
    src.add_argument("--samples", type=Path)
    _add_band(r)
    r.add_argument("--nf", type=int, default=400, help="fine grid size (default 400)")
    r.add_argument("--eps", type=float, default=5.0, help="stopping tolerance in percent (default 5)")
    r.add_argument("--max-points", type=int, default=40)
    r.add_argument("--ppi", type=int, default=2, choices=(1, 2), help="points added per iteration")
    r.add_argument("--guard", type=int, default=2, help="anti-clustering guard in grid cells")
    r.add_argument("--rank-tol", type=float, default=1e-10)
    r.add_argument("--out", type=Path, default=Path("interpolant.json"))
    r.add_argument("--trace", type=Path, default=Path("trace.json"))
    r.set_defaults(func=cmd_reduce)

    e = sub.add_parser("eval", help="write Bode data of a model or interpolant")
    e.add_argument("--model", type=Path, required=True, help="model or interpolant JSON")
    _add_band(e)
    e.add_argument("--n", type=int, default=200, help="log-grid size (default 200)")
    e.add_argument("--omega", type=_float_list, default=None, help="explicit comma-separated frequencies")
    e.add_argument("--out", type=Path, default=Path("bode.csv"))
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("sweep", help="CLOE vs coarse comparison over n_f and epsilon")
    s.add_argument("--models-dir", type=Path, default=None, help="directory of model JSON files (default: built-in suite)")
    s.add_argument("--nf", type=_int_list, default=list(bench.DEFAULT_NF))
    s.add_argument("--eps", type=_float_list, default=[100 * e for e in bench.DEFAULT_EPS], help="percent")
    _add_band(s)
    s.add_argument("--max-points", type=int, default=40)
    s.add_argument("--rank-tol", type=float, default=1e-10)
    s.add_argument("--eval-points", type=int, default=bench.DEFAULT_EVAL_POINTS)
    s.add_argument("--workers", type=int, default=None, help="parallel rows (default: $CLOE_THREADS or CPU count)")
    s.add_argument("--out", type=Path, default=Path("sweep.csv"))
    s.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, InvalidRange, BudgetTooSmall, ParseError, DimensionMismatch, FileNotFoundError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CloeError, ArithmeticError, np.linalg.LinAlgError, OSError) as exc:
        print(f"failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
