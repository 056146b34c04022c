"""Line search, convergence bookkeeping and multistart orchestration shared by
both optimizers."""
from __future__ import annotations

import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

log = logging.getLogger(__name__)

GOLD = 1.618034
CGOLD = 0.3819660
GLIMIT = 100.0
TINY = 1e-20
SUCCESS_TOL = 1e-6


class DivergingLineError(RuntimeError):
    """The objective keeps decreasing along the search line."""


@dataclass(frozen=True)
class LineSearchResult:
    t_min: float
    f_min: float
    n_evals: int


def linmin(f: Callable[[float], float], t0: float = 0.0, initial_step: float = 1.0,
           f0: float | None = None, rel_tol: float = 1e-8, max_evals: int = 200,
           max_step: float = 1e6) -> LineSearchResult:
    """Derivative-free 1-D minimization: golden-ratio bracketing followed by
    Brent's parabolic interpolation with golden-section fallback.

    Never returns a point worse than ``t0``.
    """
    n = 0

    def feval(t):
        nonlocal n
        n += 1
        v = f(t)
        return v if np.isfinite(v) else math.inf

    ax, bx = t0, t0 + initial_step
    fa = feval(ax) if f0 is None else f0
    fb = feval(bx)
    best_t, best_f = (ax, fa) if fa <= fb else (bx, fb)
    if fb > fa:
        ax, bx, fa, fb = bx, ax, fb, fa
    cx = bx + GOLD * (bx - ax)
    fc = feval(cx)
    while fb > fc:
        if abs(cx - t0) > max_step:
            raise DivergingLineError(f"objective still decreasing at step {cx - t0:.3g}")
        if n >= max_evals:
            break
        r = (bx - ax) * (fb - fc)
        q = (bx - cx) * (fb - fa)
        u = bx - ((bx - cx) * q - (bx - ax) * r) / (2 * math.copysign(max(abs(q - r), TINY), q - r))
        ulim = bx + GLIMIT * (cx - bx)
        if (bx - u) * (u - cx) > 0:
            fu = feval(u)
            if fu < fc:
                ax, bx, fa, fb = bx, u, fb, fu
                break
            if fu > fb:
                cx, fc = u, fu
                break
            u = cx + GOLD * (cx - bx)
            fu = feval(u)
        elif (cx - u) * (u - ulim) > 0:
            fu = feval(u)
            if fu < fc:
                bx, cx, u = cx, u, u + GOLD * (u - cx)
                fb, fc, fu = fc, fu, feval(u)
        elif (u - ulim) * (ulim - cx) >= 0:
            u = ulim
            fu = feval(u)
        else:
            u = cx + GOLD * (cx - bx)
            fu = feval(u)
        ax, bx, cx = bx, cx, u
        fa, fb, fc = fb, fc, fu
    for t, v in ((bx, fb), (cx, fc), (ax, fa)):
        if v < best_f:
            best_t, best_f = t, v

    # Brent refinement on the bracket (ax, bx, cx)
    a, b = min(ax, cx), max(ax, cx)
    x = w = v = bx
    fx = fw = fv = fb
    d = e = 0.0
    while n < max_evals:
        xm = 0.5 * (a + b)
        tol1 = rel_tol * abs(x) + 1e-12
        tol2 = 2 * tol1
        if abs(x - xm) <= tol2 - 0.5 * (b - a):
            break
        if abs(e) > tol1:
            r = (x - w) * (fx - fv)
            q = (x - v) * (fx - fw)
            p = (x - v) * q - (x - w) * r
            q = 2 * (q - r)
            if q > 0:
                p = -p
            q = abs(q)
            etemp, e = e, d
            if abs(p) >= abs(0.5 * q * etemp) or p <= q * (a - x) or p >= q * (b - x):
                e = (a - x) if x >= xm else (b - x)
                d = CGOLD * e
            else:
                d = p / q
                u = x + d
                if u - a < tol2 or b - u < tol2:
                    d = math.copysign(tol1, xm - x)
        else:
            e = (a - x) if x >= xm else (b - x)
            d = CGOLD * e
        u = x + d if abs(d) >= tol1 else x + math.copysign(tol1, d)
        fu = feval(u)
        if fu <= fx:
            if u >= x:
                a = x
            else:
                b = x
            v, w, x = w, x, u
            fv, fw, fx = fw, fx, fu
        else:
            if u < x:
                a = u
            else:
                b = u
            if fu <= fw or w == x:
                v, w = w, u
                fv, fw = fw, fu
            elif fu <= fv or v == x or v == w:
                v, fv = u, fu
    if fx < best_f:
        best_t, best_f = x, fx
    return LineSearchResult(best_t, best_f, n)


@dataclass
class Tolerances:
    g_tol: float = 1e-9
    f_tol: float = 1e-12
    stall_window: int = 5
    max_iter: int = 1000


@dataclass
class RunTrace:
    values: list[float] = field(default_factory=list)
    grad_norms: list[float] = field(default_factory=list)
    seconds: list[float] = field(default_factory=list)
    reason: str | None = None

    def record(self, value: float, grad_norm: float, seconds: float) -> None:
        self.values.append(float(value))
        self.grad_norms.append(float(grad_norm))
        self.seconds.append(float(seconds))

    @property
    def iterations(self) -> list[int]:
        return list(range(len(self.values)))

    @property
    def n_iterations(self) -> int:
        return max(len(self.values) - 1, 0)


def converged(trace: RunTrace, tol: Tolerances) -> str | None:
    """Termination reason ("gradient", "stalled", "max-iter") or None to continue."""
    if not trace.values:
        raise ValueError("empty trace")
    if trace.grad_norms[-1] < tol.g_tol:
        return "gradient"
    vals = trace.values
    if len(vals) > tol.stall_window:
        recent = vals[-tol.stall_window - 1:]
        drops = [(a - b) / max(abs(a), 1e-300) for a, b in zip(recent[:-1], recent[1:])]
        if all(d < tol.f_tol for d in drops):
            return "stalled"
    if trace.n_iterations >= tol.max_iter:
        return "max-iter"
    return None


@dataclass
class OptimizerConfig:
    tolerances: Tolerances = field(default_factory=Tolerances)
    initial_step: float | None = None  # None: optimizer default


@dataclass
class OptResult:
    value: float
    point: np.ndarray
    trace: RunTrace
    error: str | None = None


@dataclass
class RestartReport:
    results: list[OptResult]
    oracle: float | None = None

    @property
    def n_restarts(self) -> int:
        return len(self.results)

    @property
    def values(self) -> list[float]:
        return [r.value for r in self.results]

    @property
    def best_index(self) -> int:
        ok = [i for i, r in enumerate(self.results) if r.error is None]
        if not ok:
            raise RuntimeError("all restarts failed")
        return min(ok, key=lambda i: self.results[i].value)

    @property
    def best(self) -> OptResult:
        return self.results[self.best_index]

    @property
    def best_value(self) -> float:
        return self.best.value

    @property
    def success_rate(self) -> float | None:
        if self.oracle is None:
            return None
        hits = [r.error is None and abs(r.value - self.oracle) < SUCCESS_TOL for r in self.results]
        return sum(hits) / len(hits)


def worker_count(requested: int | None = None) -> int:
    if requested:
        return max(1, int(requested))
    env = os.environ.get("CONVEXROOF_THREADS")
    return max(1, int(env)) if env else 1


def _run_one(optimizer, problem, config, seed_seq):
    rng = np.random.default_rng(seed_seq)
    try:
        return optimizer(*problem, config=config, rng=rng)
    except Exception as exc:  # a failed restart is recorded, not fatal
        log.warning("restart failed: %s", exc)
        return OptResult(math.inf, np.empty(0), RunTrace(reason="error"), error=repr(exc))


def run_with_restarts(problem: tuple, optimizer: Callable, n_restarts: int, seed: int,
                      config: OptimizerConfig | None = None, oracle: float | None = None,
                      workers: int | None = None) -> RestartReport:
    """Run ``optimizer(*problem, config=..., rng=...)`` from independent random starts.

    Each restart gets its own child of ``SeedSequence(seed)``, so results do not
    depend on the worker count.
    """
    if n_restarts < 1:
        raise ValueError("n_restarts must be >= 1")
    config = config or OptimizerConfig()
    seeds = np.random.SeedSequence(seed).spawn(n_restarts)
    n_workers = min(worker_count(workers), n_restarts)
    if n_workers == 1:
        results = [_run_one(optimizer, problem, config, s) for s in seeds]
    else:
        with ProcessPoolExecutor(n_workers) as pool:
            results = list(pool.map(_run_one, [optimizer] * n_restarts, [problem] * n_restarts,
                                    [config] * n_restarts, seeds))
    report = RestartReport(results, oracle)
    report.best_index  # raises if every restart failed
    return report


class Stopwatch:
    def __init__(self):
        self.start = time.perf_counter()

    def __call__(self) -> float:
        return time.perf_counter() - self.start
