"""Conjugate gradients on the unitary group U(k) with geodesic line search.

Iterates are full k x k unitaries; only the first ``rank(rho)`` columns feed
the ensemble.  The search direction X is skew-Hermitian and the geodesic
through U is ``U exp(tX)``.
"""
from __future__ import annotations

import logging

import numpy as np
from scipy.optimize import nnls

from .core import DensityMatrix, InvalidInputError, expm_skew, random_skew_hermitian, random_unitary
from .ensembles import default_cardinality, objective_and_gradient, objective_h
from .measures import MeasureDefinition
from .optim import (DivergingLineError, OptimizerConfig, OptResult, RunTrace, Stopwatch,
                    converged, linmin)

log = logging.getLogger(__name__)

DRIFT_TOL = 1e-8
REORTHO_EVERY = 50
DEFAULT_STEP = 1.0
SAMPLING_RADII = (1e-3, 1e-5, 1e-7, 1e-9)


def inner(x: np.ndarray, y: np.ndarray) -> float:
    """<X, Y> = tr X Y^dagger, real part."""
    return float(np.sum(x * y.conj()).real)


def riemannian_gradient(rho: DensityMatrix, u: np.ndarray, m: MeasureDefinition,
                        value: bool = False):
    """Skew-Hermitian G with <G, X> = d/de h(U exp(eX)) at e = 0.

    A_kl = Re (V^dagger E)_kl and S_kl = Im (V^dagger E)_kl, with E the packed
    Euclidean gradient (zero beyond column r); G = (A - A^T)/2 + i (S + S^T)/2.
    """
    u = np.asarray(u, dtype=complex)
    k = u.shape[0]
    if u.shape != (k, k) or k < rho.rank:
        raise InvalidInputError(f"expected a square unitary of size >= {rho.rank}, got {u.shape}")
    h, e_r = objective_and_gradient(rho, u[:, : rho.rank], m)
    e = np.zeros((k, k), dtype=complex)
    e[:, : rho.rank] = e_r
    ve = u.conj().T @ e
    a, s = ve.real, ve.imag
    g = (a - a.T) / 2 + 1j * (s + s.T) / 2
    return (g, h) if value else g


def geodesic_step(u: np.ndarray, x: np.ndarray, t: float) -> np.ndarray:
    return u @ expm_skew(t * x)


def parallel_transport(g: np.ndarray, x: np.ndarray, t: float) -> np.ndarray:
    """exp(tX/2) G exp(-tX/2)."""
    half = expm_skew(t * x / 2)
    return half @ g @ half.conj().T


def pr_gamma(g_new: np.ndarray, transported: np.ndarray, g_old: np.ndarray) -> float | None:
    """Modified Polak-Ribiere coefficient; None signals a vanishing old gradient."""
    denom = inner(g_old, g_old)
    if denom < 1e-30:
        return None
    return inner(g_new - transported, g_new) / denom


class _Geodesic:
    """exp(tX) for many t from one eigendecomposition of the Hermitian iX."""

    def __init__(self, x):
        h = 1j * x
        self.theta, self.v = np.linalg.eigh((h + h.conj().T) / 2)

    def exp(self, t):
        return (self.v * np.exp(-1j * t * self.theta)) @ self.v.conj().T

    @property
    def spread(self) -> float:
        return float(np.max(np.abs(self.theta), initial=0.0))


def _reorthonormalize(u):
    q, r = np.linalg.qr(u)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def _line_search(along, step, f0, shrink=1e-3, min_step=1e-13):
    """linmin, retried with smaller first brackets when it finds no decrease.

    At kinks of a non-smooth measure the decrease can be confined to a tiny
    interval that a unit-scale bracket misses.
    """
    while step >= min_step:
        try:
            ls = linmin(along, 0.0, step, f0=f0)
        except DivergingLineError:
            return None
        if ls.f_min < f0:
            return ls
        step *= shrink
    return None


def min_norm_combination(grads: list[np.ndarray]) -> np.ndarray:
    """Shortest vector in the convex hull of ``grads`` (weights by NNLS with a
    heavily weighted sum-to-one row)."""
    a = np.array([np.concatenate([g.real.ravel(), g.imag.ravel()]) for g in grads]).T
    big = 1e3 * max(np.abs(a).max(), 1.0)
    a_aug = np.vstack([a, np.full(len(grads), big)])
    b_aug = np.zeros(a_aug.shape[0])
    b_aug[-1] = big
    w, _ = nnls(a_aug, b_aug, maxiter=50 * len(grads))
    w = w / w.sum()
    return sum(wi * g for wi, g in zip(w, grads))


def _sampled_direction(rho, m, u, g, radius, rng):
    """Descent direction at a kink of a non-smooth objective: minus the
    min-norm combination of gradients sampled within ``radius`` of U."""
    k = u.shape[0]
    grads = [g]
    for _ in range(2 * k + 1):
        y = random_skew_hermitian(k, rng)
        y *= radius / np.linalg.norm(y)
        grads.append(riemannian_gradient(rho, u @ expm_skew(y), m))
    return -min_norm_combination(grads)


def cg_minimize(rho: DensityMatrix, m: MeasureDefinition, k: int | None = None,
                config: OptimizerConfig | None = None, rng=None, u0=None) -> OptResult:
    """Minimize h over U(k) by geodesic conjugate gradients."""
    config = config or OptimizerConfig()
    tol = config.tolerances
    step0 = config.initial_step or DEFAULT_STEP
    k = k or default_cardinality(rho)
    r = rho.rank
    if k < r:
        raise InvalidInputError(f"cardinality {k} below rank {r}")
    rng = np.random.default_rng(rng)
    u = random_unitary(k, rng) if u0 is None else np.array(u0, dtype=complex)

    clock = Stopwatch()
    trace = RunTrace()
    g, f = riemannian_gradient(rho, u, m, value=True)
    x = -g
    trace.record(f, np.sqrt(inner(g, g)), clock())
    since_reset = 0
    sample_level = 0
    it = 0
    while True:
        reason = converged(trace, tol)
        if reason:
            break
        it += 1
        geo = _Geodesic(x)
        base = u @ geo.v
        tail = geo.v.conj().T[:, :r]

        def along(t):
            return objective_h(rho, (base * np.exp(-1j * t * geo.theta)) @ tail, m)

        ls = _line_search(along, step0 / max(1.0, geo.spread), f)
        if ls is None:
            if since_reset > 0:
                x = -g
                since_reset = 0
                continue
            if sample_level >= len(SAMPLING_RADII):
                reason = "no-progress"
                break
            # steepest descent failed: likely a kink, sample nearby gradients
            x = _sampled_direction(rho, m, u, g, SAMPLING_RADII[sample_level], rng)
            sample_level += 1
            since_reset = -1
            if np.sqrt(inner(x, x)) < tol.g_tol:
                reason = "gradient"
                break
            continue
        sample_level = 0
        t = ls.t_min
        u = base * np.exp(-1j * t * geo.theta) @ geo.v.conj().T
        if it % REORTHO_EVERY == 0 or np.linalg.norm(u.conj().T @ u - np.eye(k)) > DRIFT_TOL:
            u = _reorthonormalize(u)
        g_new, f = riemannian_gradient(rho, u, m, value=True)
        half = geo.exp(t / 2)
        transported = half @ g @ half.conj().T
        gamma = pr_gamma(g_new, transported, g)
        since_reset += 1
        if gamma is None or gamma < 0 or since_reset >= k * k:
            x = -g_new
            since_reset = 0
        else:
            x = -g_new + gamma * x
            if inner(g_new, x) >= 0:
                x = -g_new
                since_reset = 0
        g = g_new
        trace.record(f, np.sqrt(inner(g, g)), clock())
    trace.reason = reason
    return OptResult(f, u[:, :r].copy(), trace)
