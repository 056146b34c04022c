"""Euler-Hurwitz angle parametrization of St(k, r) and the quasi-Newton driver.

A matrix A in St(k, r) is reduced to diag(e^{i chi}) (upper r x r block) by
complex Givens rotations applied from the left, zeroing each column from the
bottom up, columns left to right.  The rotation on rows (s, s+1) acts as

    row s   <- e^{i phi} cos(theta) row s - ... + e^{-i phi} sin(theta) row s+1
    row s+1 <- -e^{i phi} sin(theta) row s + e^{-i phi} cos(theta) row s+1

Angle vectors are flattened as ``[theta..., phi..., chi...]`` with theta and
phi listed in the order the rotations are applied.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .core import DensityMatrix, InvalidInputError
from .ensembles import default_cardinality, objective_and_gradient, objective_h
from .measures import MeasureDefinition
from .optim import (DivergingLineError, OptimizerConfig, OptResult, RunTrace, Stopwatch,
                    Tolerances, converged, linmin)

log = logging.getLogger(__name__)

ZERO_ENTRY = 1e-15
DEFAULT_STEP = 0.1
CURVATURE_FAILURES_BEFORE_RESET = 3


@dataclass(frozen=True)
class GivensRotation:
    s: int  # 0-based upper row
    theta: float
    phi: float

    def block(self) -> np.ndarray:
        return givens_block(self.theta, self.phi)


@dataclass(frozen=True)
class EulerHurwitzAngles:
    theta: np.ndarray
    phi: np.ndarray
    chi: np.ndarray

    def flat(self) -> np.ndarray:
        return np.concatenate([self.theta, self.phi, self.chi])

    @classmethod
    def from_flat(cls, s, k: int, r: int) -> "EulerHurwitzAngles":
        s = np.asarray(s, dtype=float)
        n = n_rotations(k, r)
        if s.shape != (2 * n + r,):
            raise InvalidInputError(f"expected {2 * n + r} angles for St({k}, {r}), got {s.shape}")
        return cls(s[:n], s[n:2 * n], s[2 * n:])

    def __len__(self):
        return len(self.theta) + len(self.phi) + len(self.chi)


def n_rotations(k: int, r: int) -> int:
    return r * k - r * (r + 1) // 2


def n_angles(k: int, r: int) -> int:
    return 2 * k * r - r * r


@lru_cache(maxsize=None)
def rotation_rows(k: int, r: int) -> tuple[int, ...]:
    """Upper row index s of every rotation, in application order."""
    return tuple(s for c in range(r) for s in range(k - 2, c - 1, -1))


def givens_block(theta, phi) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    ep, em = np.exp(1j * phi), np.exp(-1j * phi)
    return np.array([[ep * c, em * s], [-ep * s, em * c]])


def _block_derivatives(theta, phi):
    """d/dtheta and d/dphi of the inverse (adjoint) 2x2 block."""
    c, s = np.cos(theta), np.sin(theta)
    ep, em = np.exp(1j * phi), np.exp(-1j * phi)
    # adjoint block: [[em c, -em s], [ep s, ep c]]
    d_theta = np.array([[-em * s, -em * c], [ep * c, -ep * s]])
    d_phi = np.array([[-1j * em * c, 1j * em * s], [1j * ep * s, 1j * ep * c]])
    return d_theta, d_phi


def givens_apply(a, g: GivensRotation) -> np.ndarray:
    a = np.array(a, dtype=complex)
    if not 0 <= g.s < a.shape[0] - 1:
        raise InvalidInputError(f"rotation rows ({g.s}, {g.s + 1}) outside a {a.shape[0]}-row matrix")
    a[g.s:g.s + 2] = g.block() @ a[g.s:g.s + 2]
    return a


def angles_for_zero(x_entry: complex, y_entry: complex) -> tuple[float, float]:
    """(theta, phi) whose rotation zeroes the lower of two stacked entries."""
    x, y = abs(x_entry), abs(y_entry)
    if y < ZERO_ENTRY:
        return 0.0, 0.0
    if x < ZERO_ENTRY:
        return np.pi / 2, 0.0
    # np.angle returns values in (-pi, pi]
    return float(np.arctan2(y, x)), float((np.angle(y_entry) - np.angle(x_entry)) / 2)


def decompose(a, tol: float = 1e-10) -> EulerHurwitzAngles:
    a = np.array(a, dtype=complex)
    k, r = a.shape
    if k < r or np.linalg.norm(a.conj().T @ a - np.eye(r)) > tol:
        raise InvalidInputError("matrix does not have orthonormal columns")
    rows = rotation_rows(k, r)
    theta = np.empty(len(rows))
    phi = np.empty(len(rows))
    i = 0
    for c in range(r):
        for s in range(k - 2, c - 1, -1):
            theta[i], phi[i] = angles_for_zero(a[s, c], a[s + 1, c])
            a[s:s + 2] = givens_block(theta[i], phi[i]) @ a[s:s + 2]
            i += 1
    chi = np.angle(np.diagonal(a[:r]))
    return EulerHurwitzAngles(theta, phi, chi)


def _as_angles(angles, k, r) -> EulerHurwitzAngles:
    if isinstance(angles, EulerHurwitzAngles):
        if len(angles.theta) != n_rotations(k, r) or len(angles.chi) != r:
            raise InvalidInputError(f"angle counts do not match St({k}, {r})")
        return angles
    return EulerHurwitzAngles.from_flat(angles, k, r)


def reconstruct(angles, k: int, r: int) -> np.ndarray:
    """The k x r isometry encoded by the angles; total for any real input."""
    ang = _as_angles(angles, k, r)
    rows = rotation_rows(k, r)
    b = np.zeros((k, r), dtype=complex)
    b[np.arange(r), np.arange(r)] = np.exp(1j * ang.chi)
    for s, th, ph in zip(rows[::-1], ang.theta[::-1], ang.phi[::-1]):
        b[s:s + 2] = givens_block(th, ph).conj().T @ b[s:s + 2]
    return b


def _sweeps(ang: EulerHurwitzAngles, k, r):
    """Suffix products S_j (k x r) and inverse blocks, for the chain rule."""
    rows = rotation_rows(k, r)
    n = len(rows)
    inv = [givens_block(th, ph).conj().T for th, ph in zip(ang.theta, ang.phi)]
    suffix = np.empty((n + 1, k, r), dtype=complex)
    b = np.zeros((k, r), dtype=complex)
    b[np.arange(r), np.arange(r)] = np.exp(1j * ang.chi)
    suffix[n] = b
    for j in range(n - 1, -1, -1):
        nxt = suffix[j + 1].copy()
        s = rows[j]
        nxt[s:s + 2] = inv[j] @ nxt[s:s + 2]
        suffix[j] = nxt
    return rows, inv, suffix


def reconstruct_jacobian(angles, k: int, r: int) -> tuple[np.ndarray, np.ndarray]:
    """F(s) and dF/ds_a for every angle, shape (n_angles, k, r)."""
    ang = _as_angles(angles, k, r)
    rows, inv, suffix = _sweeps(ang, k, r)
    n = len(rows)
    jac = np.zeros((2 * n + r, k, r), dtype=complex)
    prefix = np.eye(k, dtype=complex)  # o_1^dagger ... o_{j-1}^dagger
    for j, s in enumerate(rows):
        d_th, d_ph = _block_derivatives(ang.theta[j], ang.phi[j])
        tail = suffix[j + 1][s:s + 2]
        jac[j] = prefix[:, s:s + 2] @ (d_th @ tail)
        jac[n + j] = prefix[:, s:s + 2] @ (d_ph @ tail)
        prefix[:, s:s + 2] = prefix[:, s:s + 2] @ inv[j]
    for i in range(r):
        jac[2 * n + i][:, i] = 1j * np.exp(1j * ang.chi[i]) * prefix[:, i]
    return suffix[0], jac


def angle_gradient(angles, k: int, r: int, euclid: np.ndarray) -> np.ndarray:
    """Chain rule: d h(F(s))/ds from the packed Euclidean gradient at F(s).

    Uses a reverse sweep so no Jacobian matrices are formed.
    """
    ang = _as_angles(angles, k, r)
    rows, inv, suffix = _sweeps(ang, k, r)
    n = len(rows)
    out = np.empty(2 * n + r)
    w = np.array(euclid, dtype=complex)  # P_j^dagger E
    for j, s in enumerate(rows):
        d_th, d_ph = _block_derivatives(ang.theta[j], ang.phi[j])
        tail = suffix[j + 1][s:s + 2]
        ws = w[s:s + 2].conj()
        out[j] = np.sum(ws * (d_th @ tail)).real
        out[n + j] = np.sum(ws * (d_ph @ tail)).real
        w[s:s + 2] = inv[j].conj().T @ w[s:s + 2]
    diag = 1j * np.exp(1j * ang.chi)
    out[2 * n:] = (w[np.arange(r), np.arange(r)].conj() * diag).real
    return out


def random_angles(k: int, r: int, rng) -> np.ndarray:
    n = n_rotations(k, r)
    return np.concatenate([rng.uniform(0, np.pi / 2, n), rng.uniform(-np.pi, np.pi, n),
                           rng.uniform(-np.pi, np.pi, r)])


def quasi_newton(fun: Callable[[np.ndarray], float],
                 fun_grad: Callable[[np.ndarray], tuple[float, np.ndarray]], x0: np.ndarray,
                 tol: Tolerances | None = None, initial_step: float = DEFAULT_STEP):
    """Unconstrained minimization with inverse-Hessian BFGS updates and linmin.

    ``fun`` evaluates the objective alone (used by the line search).
    Returns ``(x, f, trace)``.
    """
    tol = tol or Tolerances()
    clock = Stopwatch()
    trace = RunTrace()
    x = np.array(x0, dtype=float)
    f, g = fun_grad(x)
    hinv = np.eye(len(x))
    trace.record(f, np.linalg.norm(g), clock())
    failures = 0
    steepest_next = False
    while True:
        reason = converged(trace, tol)
        if reason:
            break
        d = -g if steepest_next else -(hinv @ g)
        if g @ d >= 0:
            hinv = np.eye(len(x))
            d = -g
        dn = np.linalg.norm(d)
        if dn == 0:
            reason = "gradient"
            break
        try:
            ls = linmin(lambda t: fun(x + t * d), 0.0, min(1.0, initial_step / dn), f0=f)
        except DivergingLineError:
            ls = None
        if ls is None or ls.t_min == 0.0:
            if np.array_equal(hinv, np.eye(len(x))) or steepest_next:
                reason = "no-progress"
                break
            hinv = np.eye(len(x))
            steepest_next = True
            continue
        step = ls.t_min * d
        x_new = x + step
        f, g_new = fun_grad(x_new)
        y = g_new - g
        sy = step @ y
        if sy > 1e-12 * np.linalg.norm(step) * np.linalg.norm(y):
            rho_ = 1.0 / sy
            hy = hinv @ y
            hinv = (hinv - rho_ * (np.outer(step, hy) + np.outer(hy, step))
                    + (rho_ * rho_ * (y @ hy) + rho_) * np.outer(step, step))
            failures = 0
            steepest_next = False
        else:
            failures += 1
            steepest_next = True
            if failures >= CURVATURE_FAILURES_BEFORE_RESET:
                hinv = np.eye(len(x))
                failures = 0
        x, g = x_new, g_new
        trace.record(f, np.linalg.norm(g), clock())
    trace.reason = reason
    return x, f, trace


def qn_minimize(rho: DensityMatrix, m: MeasureDefinition, k: int | None = None,
                config: OptimizerConfig | None = None, rng=None, s0=None) -> OptResult:
    """Minimize h(F(s)) over unconstrained Euler-Hurwitz angles s."""
    config = config or OptimizerConfig()
    k = k or default_cardinality(rho)
    r = rho.rank
    if k < r:
        raise InvalidInputError(f"cardinality {k} below rank {r}")
    rng = np.random.default_rng(rng)
    x0 = random_angles(k, r, rng) if s0 is None else np.asarray(s0, dtype=float)

    def fun(s):
        return objective_h(rho, reconstruct(s, k, r), m)

    def fun_grad(s):
        h, e = objective_and_gradient(rho, reconstruct(s, k, r), m)
        return h, angle_gradient(s, k, r, e)

    x, f, trace = quasi_newton(fun, fun_grad, x0, config.tolerances, config.initial_step or DEFAULT_STEP)
    return OptResult(f, reconstruct(x, k, r), trace)
