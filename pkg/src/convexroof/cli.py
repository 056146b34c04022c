"""Command-line front end.

Exit codes: 0 success, 2 input error, 3 optimization failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from . import io
from .core import InvalidInputError, random_density
from .ensembles import default_cardinality, ensemble_from_stiefel
from .euler_hurwitz import qn_minimize
from .lu import METRICS, lu_equivalence_distance
from .measures import (MEASURE_NAMES, ghzw_mixture, ghzw_threshold, measure_for_state,
                       wootters_eof)
from .optim import SUCCESS_TOL, OptimizerConfig, Stopwatch, Tolerances, run_with_restarts
from .ring import MAX_SPINS
from .stiefel_cg import cg_minimize
from .sweep import (CSV_COLUMNS, SweepConfig, default_b_grid, loglog_fit,
                    max_entanglement_curve, sweep)

log = logging.getLogger("convexroof")

EXIT_OK, EXIT_INPUT, EXIT_OPTIMIZATION = 0, 2, 3
OPTIMIZERS = {"cg": cg_minimize, "qn": qn_minimize}


def _common_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("run configuration")
    g.add_argument("--algorithm", choices=("cg", "qn", "both"), default="cg")
    g.add_argument("--restarts", type=int, default=10)
    g.add_argument("--seed", type=int, default=None,
                   help="64-bit seed; a fresh one is drawn and printed when omitted")
    g.add_argument("--cardinality", type=int, default=None,
                   help="decomposition size k (default rank + 4)")
    g.add_argument("--g-tol", type=float, default=Tolerances.g_tol)
    g.add_argument("--f-tol", type=float, default=Tolerances.f_tol)
    g.add_argument("--max-iter", type=int, default=Tolerances.max_iter)
    g.add_argument("--out", default=None, help="CSV output path (default stdout)")
    g.add_argument("--timing", action="store_true",
                   help="fill the seconds column (makes output non-reproducible)")
    g.add_argument("-v", "--verbose", action="count", default=0)
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(prog="convexroof",
                                     description="Convex-roof entanglement by numerical optimization.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", parents=[common], help="convex roof of a density-matrix file")
    p.add_argument("file")
    p.add_argument("--measure", choices=MEASURE_NAMES, default="eof-entropy")
    p.add_argument("--split", default=None, help="bipartition for eof-entropy, e.g. 2,2")
    p.add_argument("--dump-ensemble", default=None, metavar="PATH",
                   help="write the optimal decomposition as JSON")

    p = sub.add_parser("benchmark", parents=[common], help="convergence traces of the test suites")
    p.add_argument("suite", choices=("eof", "ghzw"))
    p.add_argument("--etas", default=None,
                   help="comma-separated eta values in units of the GHZ/W threshold")

    p = sub.add_parser("lu-check", parents=[common], help="distance up to local unitaries")
    p.add_argument("file1")
    p.add_argument("file2")
    p.add_argument("--local-dims", default=None, help="e.g. 2,2,2 (default: qubits)")
    p.add_argument("--metric", choices=METRICS, default="frobenius")

    p = sub.add_parser("spinring", parents=[common], help="thermal spin-ring entanglement")
    p.add_argument("--n", default="3", help="spin count, list (2,3) or range (2..5)")
    p.add_argument("--temps", default="1e-4", help="comma-separated temperatures in J/k_B; 0 = ground state")
    p.add_argument("--b-grid", default="default",
                   help="'default', 'lo:hi:count' (log-spaced) or comma-separated values")
    p.add_argument("--curve", action="store_true", help="maximal entanglement per temperature")
    return parser


# -- argument helpers -------------------------------------------------------

def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise InvalidInputError(f"cannot parse number list {text!r}") from exc


def parse_spins(text: str) -> list[int]:
    try:
        if ".." in text:
            lo, hi = text.split("..")
            spins = list(range(int(lo), int(hi) + 1))
        else:
            spins = [int(x) for x in text.split(",")]
    except ValueError as exc:
        raise InvalidInputError(f"cannot parse spin counts {text!r}") from exc
    if not spins:
        raise InvalidInputError("no spin counts given")
    return spins


def parse_b_grid(text: str) -> np.ndarray:
    if text == "default":
        return default_b_grid()
    if ":" in text:
        try:
            lo, hi, count = text.split(":")
            lo, hi, count = float(lo), float(hi), int(count)
        except ValueError as exc:
            raise InvalidInputError(f"cannot parse b grid {text!r}") from exc
        if lo <= 0 or hi <= lo or count < 1:
            raise InvalidInputError("b grid needs 0 < lo < hi and count >= 1")
        return np.logspace(np.log10(lo), np.log10(hi), count)
    grid = np.array(_floats(text))
    if grid.size == 0 or np.any(grid <= 0):
        raise InvalidInputError("b values must be positive")
    return grid


def _optimizer_config(args) -> OptimizerConfig:
    return OptimizerConfig(Tolerances(g_tol=args.g_tol, f_tol=args.f_tol, max_iter=args.max_iter))


def _config_record(args, **extra) -> dict:
    rec = {k: v for k, v in vars(args).items() if k not in ("verbose", "out", "timing")}
    rec.update(extra)
    return rec


def _algorithms(args) -> tuple[str, ...]:
    return ("cg", "qn") if args.algorithm == "both" else (args.algorithm,)


# -- subcommands ------------------------------------------------------------

def cmd_eval(args) -> int:
    rho = io.load_density(args.file)
    split = tuple(int(x) for x in args.split.split(",")) if args.split else None
    m = measure_for_state(args.measure, rho, split)
    if args.cardinality is not None and args.cardinality < rho.rank:
        raise InvalidInputError(f"cardinality {args.cardinality} below rank {rho.rank}")
    rows = []
    best = None
    for name in _algorithms(args):
        clock = Stopwatch()
        rep = run_with_restarts((rho, m, args.cardinality), OPTIMIZERS[name], args.restarts,
                                args.seed, _optimizer_config(args))
        seconds = clock()
        res = rep.best
        print(f"{name}: {m.name} = {res.value:.10f}  (best restart {rep.best_index}, "
              f"{res.trace.n_iterations} iterations, {seconds:.3f} s)")
        rows.append((m.name, name, res.value, rep.best_index, res.trace.n_iterations,
                     seconds if args.timing else None))
        if best is None or res.value < best.value:
            best = res
    if args.out:
        with io.output_stream(args.out) as fh:
            io.write_csv(fh, ("measure", "optimizer", "value", "best_restart", "iterations", "seconds"),
                         rows, _config_record(args, rank=rho.rank,
                                              cardinality=default_cardinality(rho, args.cardinality)))
    if args.dump_ensemble:
        ens = ensemble_from_stiefel(rho, best.point)
        doc = {"measure": m.name, "value": best.value,
               "probabilities": ens.probabilities.tolist(),
               "discarded": ens.discarded.tolist(),
               "states": [[[z.real, z.imag] for z in s] for s in ens.states]}
        with open(args.dump_ensemble, "w") as fh:
            json.dump(doc, fh, indent=1)
    return EXIT_OK


TRACE_COLUMNS = ("suite", "case", "parameter", "optimizer", "restart", "iteration", "value",
                 "error", "seconds")


def _benchmark_cases(args):
    """(case label, parameter, rho, measure name, oracle or None)."""
    if args.suite == "eof":
        seeds = np.random.SeedSequence(args.seed).spawn(10)
        for i, s in enumerate(seeds):
            rho = random_density(4, 4, np.random.default_rng(s), dims=(2, 2))
            yield f"state-{i}", float(i), rho, "eof-entropy", wootters_eof(rho)
    else:
        eta0 = ghzw_threshold()
        factors = _floats(args.etas) if args.etas else [0.2, 1 - 1e-4, 1 + 1e-4, 1.4]
        for f in factors:
            eta = min(f * eta0, 1.0)
            oracle = 0.0 if eta <= eta0 else (1.0 if eta == 1.0 else None)
            yield f"eta={f:g}*eta0", eta, ghzw_mixture(eta), "tangle", oracle


def cmd_benchmark(args) -> int:
    rows, summary = [], []
    config = _optimizer_config(args)
    for label, param, rho, mname, oracle in _benchmark_cases(args):
        m = measure_for_state(mname, rho)
        reports = {name: run_with_restarts((rho, m, args.cardinality), OPTIMIZERS[name], args.restarts,
                                           args.seed, config, oracle)
                   for name in _algorithms(args)}
        # without an exact value, errors are measured against the best value found
        reference = oracle if oracle is not None else min(r.best_value for r in reports.values())
        for name, rep in reports.items():
            for i, res in enumerate(rep.results):
                for it, (v, t) in enumerate(zip(res.trace.values, res.trace.seconds)):
                    rows.append((args.suite, label, param, name, i, it, v, abs(v - reference),
                                 t if args.timing else None))
            hits = sum(abs(v - reference) < SUCCESS_TOL for v in rep.values)
            summary.append(f"{label} {name}: best {rep.best_value:.10g}, reference {reference:.10g}"
                           f"{'' if oracle is not None else ' (best found)'}, "
                           f"success {hits}/{rep.n_restarts}")
    with io.output_stream(args.out) as fh:
        io.write_csv(fh, TRACE_COLUMNS, rows, _config_record(args))
    report_stream = sys.stdout if args.out else sys.stderr
    for line in summary:
        print(line, file=report_stream)
    return EXIT_OK


def cmd_lu_check(args) -> int:
    a = io.load_density(args.file1)
    b = io.load_density(args.file2)
    if a.dim != b.dim:
        raise InvalidInputError(f"dimension mismatch: {a.dim} vs {b.dim}")
    if args.local_dims:
        dims = [int(x) for x in args.local_dims.split(",")]
    elif a.dims is not None:
        dims = list(a.dims)
    else:
        n = int(round(np.log2(a.dim)))
        if 2**n != a.dim:
            raise InvalidInputError(f"dimension {a.dim} is not a qubit register; pass --local-dims")
        dims = [2] * n
    res = lu_equivalence_distance(a, b, dims, _optimizer_config(args), args.restarts, args.seed,
                                  args.metric)
    print(f"{args.metric} distance: {res.distance:.10g}")
    if res.spectral_bound:
        print("spectra differ: reported value is the spectral lower bound over all unitaries")
    else:
        for i, ang in enumerate(res.angles):
            print(f"U{i + 1} angles: " + " ".join(f"{x:.10g}" for x in ang))
    if args.out:
        rows = [(args.metric, res.distance, int(res.spectral_bound))]
        with io.output_stream(args.out) as fh:
            io.write_csv(fh, ("metric", "distance", "spectral_bound"), rows,
                         _config_record(args, local_dims=dims))
    return EXIT_OK


def cmd_spinring(args) -> int:
    spins = parse_spins(args.n)
    for n in spins:
        if n > MAX_SPINS:
            raise InvalidInputError(f"N={n} exceeds the supported maximum of {MAX_SPINS}")
    temps = _floats(args.temps)
    if any(t < 0 for t in temps):
        raise InvalidInputError("temperatures must be non-negative")
    grid = parse_b_grid(args.b_grid)
    config = SweepConfig(args.algorithm, args.restarts, args.seed, args.cardinality,
                         _optimizer_config(args))
    record = _config_record(args)
    if args.curve:
        temps = [t for t in temps if t > 0]
        curve = max_entanglement_curve(spins, temps, config, grid if args.b_grid != "default" else None)
        rows = [(p.N, p.T, p.b_max, p.gamma_max, p.deficit, curve.b_fwhm[p.N]) for p in curve.points]
        with io.output_stream(args.out) as fh:
            io.write_csv(fh, ("N", "T", "b_max", "gamma_max", "one_minus_gamma_max", "b_fwhm"),
                         rows, record)
        for n in spins:
            pts = curve.for_spins(n)
            if len(pts) >= 2 and all(p.deficit > 0 for p in pts):
                slope, _, r2 = loglog_fit([p.T for p in pts], [p.deficit for p in pts])
                log.info("N=%d: 1 - gamma_max ~ T^%.3f (R^2 %.4f)", n, slope, r2)
        return EXIT_OK
    res = sweep([(n, t, b) for n in spins for t in temps for b in grid], config, args.timing)
    with io.output_stream(args.out) as fh:
        io.write_csv(fh, CSV_COLUMNS, [r.as_tuple() for r in res.rows], record)
    return EXIT_OK


COMMANDS = {"eval": cmd_eval, "benchmark": cmd_benchmark, "lu-check": cmd_lu_check,
            "spinring": cmd_spinring}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    if args.seed is None:
        args.seed = int(np.random.SeedSequence().generate_state(1, np.uint64)[0])
        print(f"seed: {args.seed}", file=sys.stderr)
    if args.restarts < 1:
        print("error: --restarts must be at least 1", file=sys.stderr)
        return EXIT_INPUT
    try:
        return COMMANDS[args.command](args)
    except InvalidInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except RuntimeError as exc:  # every restart failed
        print(f"optimization failed: {exc}", file=sys.stderr)
        return EXIT_OPTIMIZATION


if __name__ == "__main__":
    sys.exit(main())
