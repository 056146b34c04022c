"""Pure-state entanglement monotones with analytic gradients.

Every measure works on a batch of (not necessarily normalized) state vectors
of shape ``(n, d)``.  Gradients are packed as one complex array
``dm/dRe(psi) + 1j * dm/dIm(psi)`` of the same shape; :func:`split_gradient`
unpacks them.  Basis states are labelled with qubit 1 as the most significant
bit and ``|0> = |up>``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import partial
from typing import Callable

import numpy as np

from .core import DensityMatrix, InvalidInputError, partial_trace_block, partial_trace_single

log = logging.getLogger(__name__)

LN2 = np.log(2.0)
ROTATION_EIGEN_TOL = 1e-8


def split_gradient(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return g.real.copy(), g.imag.copy()


def _batch(psi) -> tuple[np.ndarray, bool]:
    psi = np.asarray(psi, dtype=complex)
    return np.atleast_2d(psi), psi.ndim == 1


def _unbatch(x, single):
    return x[0] if single else x


def _n_qubits_of(dim: int) -> int:
    n = int(round(np.log2(dim)))
    if 2**n != dim:
        raise InvalidInputError(f"dimension {dim} is not a power of two")
    return n


# -- entropy of entanglement ------------------------------------------------

def entropy_of_entanglement(psi, split=(2, 2)):
    """von Neumann entropy (base 2) of the first subsystem's reduced state."""
    psis, single = _batch(psi)
    lam = np.linalg.eigvalsh(partial_trace_block(psis, split))
    lam = np.clip(lam, 0.0, None)
    safe = np.where(lam > 0, lam, 1.0)
    return _unbatch(np.maximum(-np.sum(lam * np.log2(safe), axis=-1), 0.0), single)


def entropy_gradient(psi, split=(2, 2)):
    # S = -tr f(rho_A), f(x) = x log2 x, rho_A = M M^dagger
    # => dS/dM (complex packing) = -2 f'(rho_A) M with f'(x) = log2 x + 1/ln 2.
    # On a zero eigenvalue the matching component of M vanishes as sqrt(x), so
    # the product sqrt(x) log x -> 0 and the coefficient is dropped.
    psis, single = _batch(psi)
    d_a, d_b = split
    mat = psis.reshape(-1, d_a, d_b)
    lam, vec = np.linalg.eigh(mat @ np.swapaxes(mat, -1, -2).conj())
    coeff = np.where(lam > 0, np.log2(np.where(lam > 0, lam, 1.0)) + 1.0 / LN2, 0.0)
    f_prime = (vec * coeff[:, None, :]) @ np.swapaxes(vec, -1, -2).conj()
    g = -2.0 * (f_prime @ mat)
    return _unbatch(g.reshape(psis.shape), single)


# -- three-qubit tangle -----------------------------------------------------

_PARTNER = np.array([7, 6, 5, 4, 3, 2, 1, 0])
_PAIR_OF = np.array([0, 1, 2, 3, 3, 2, 1, 0])


def tangle_components(psi):
    """(d1, d2, d3) of the pure-state tangle, components psi_1..psi_8 = amplitudes 0..7."""
    a = np.asarray(psi, dtype=complex)
    if a.shape[-1] != 8:
        raise InvalidInputError(f"tangle needs three qubits (dim 8), got dim {a.shape[-1]}")
    a = a.T
    d1 = a[0]**2 * a[7]**2 + a[1]**2 * a[6]**2 + a[2]**2 * a[5]**2 + a[4]**2 * a[3]**2
    d2 = (a[0] * a[7] * a[3] * a[4] + a[0] * a[7] * a[5] * a[2]
          + a[0] * a[7] * a[6] * a[1] + a[3] * a[4] * a[5] * a[2]
          + a[3] * a[4] * a[6] * a[1] + a[5] * a[2] * a[6] * a[1])
    d3 = a[0] * a[6] * a[5] * a[3] + a[7] * a[1] * a[2] * a[4]
    return d1, d2, d3


def _tangle_poly(psi):
    d1, d2, d3 = tangle_components(psi)
    return d1 - 2 * d2 + 4 * d3


def tangle(psi):
    return 4 * np.abs(_tangle_poly(psi))


def tangle_gradient(psi, zero_tol: float = 1e-300):
    """Gradient of 4|d1 - 2 d2 + 4 d3|; zero where the modulus vanishes."""
    psis, single = _batch(psi)
    poly = _tangle_poly(psis)
    a = psis
    pairs = np.stack([a[:, 0] * a[:, 7], a[:, 1] * a[:, 6], a[:, 2] * a[:, 5], a[:, 3] * a[:, 4]], axis=1)
    total = pairs.sum(axis=1, keepdims=True)
    # d(d1 - 2 d2)/dX = 4X - 2S for each pair product X
    dpoly = a[:, _PARTNER] * (4 * pairs[:, _PAIR_OF] - 2 * total)
    for cols in ([0, 3, 5, 6], [1, 2, 4, 7]):
        t = a[:, cols]
        leave_one_out = np.stack([np.prod(np.delete(t, j, axis=1), axis=1) for j in range(4)], axis=1)
        dpoly[:, cols] += 4 * leave_one_out
    mod = np.abs(poly)
    phase = np.where(mod > zero_tol, poly / np.where(mod > zero_tol, mod, 1.0), 0.0)
    g = 4 * phase[:, None] * dpoly.conj()
    return _unbatch(g, single)


# -- Meyer-Wallach ----------------------------------------------------------

def meyer_wallach(psi, n_qubits: int | None = None):
    """gamma = 2 [1 - (1/N) sum_k tr(rho_k^2)]."""
    psis, single = _batch(psi)
    n = n_qubits or _n_qubits_of(psis.shape[-1])
    if psis.shape[-1] != 2**n:
        raise InvalidInputError(f"state dimension {psis.shape[-1]} is not 2**{n}")
    purity = sum(
        np.sum(np.abs(partial_trace_single(psis, k, n)) ** 2, axis=(-1, -2)) for k in range(1, n + 1)
    )
    return _unbatch(2 * (1 - purity / n), single)


mw_value = meyer_wallach


def _reduced_action(psis, k, n):
    """(rho_k acting on qubit k) psi, for every state in the batch."""
    t = psis.reshape(-1, 2**(k - 1), 2, 2**(n - k))
    rho_k = np.einsum("naib,najb->nij", t, t.conj())
    return np.einsum("nij,najb->naib", rho_k, t).reshape(psis.shape)

def meyer_wallach_gradient(psi, n_qubits: int | None = None):
    psis, single = _batch(psi)
    n = n_qubits or _n_qubits_of(psis.shape[-1])
    if psis.shape[-1] != 2**n:
        raise InvalidInputError(f"state dimension {psis.shape[-1]} is not 2**{n}")
    z = sum(_reduced_action(psis, k, n) for k in range(1, n + 1))
    return _unbatch(-8.0 / n * z, single)


def first_qubit_mw(psi, n_qubits: int | None = None):
    """2 [1 - tr(rho_1^2)] and its gradient, without any symmetry check.

    Equals the Meyer-Wallach value on eigenstates of the ring rotation.
    """
    psis, single = _batch(psi)
    n = n_qubits or _n_qubits_of(psis.shape[-1])
    half = 2**(n - 1)
    rho1 = partial_trace_single(psis, 1, n)
    value = 2 * (1 - np.sum(np.abs(rho1) ** 2, axis=(-1, -2)))
    upper, lower = psis[:, :half], psis[:, half:]
    r00 = rho1[:, 0, 0].real[:, None]
    r11 = rho1[:, 1, 1].real[:, None]
    r01 = rho1[:, 0, 1][:, None]
    g_upper = -8 * (r00 * upper + r01 * lower)
    # Re/Im parts split per the closed form: -8[r11 psi_i + (r01 psi*_{i-half})^*]
    g_lower = -8 * (r11 * lower + (r01 * upper.conj()).conj())
    g = np.concatenate([g_upper, g_lower], axis=1)
    return _unbatch(value, single), _unbatch(g, single)


def rotation_eigenphase(psi, n_qubits: int, tol: float = ROTATION_EIGEN_TOL):
    """Return the ring-rotation eigenvalue of psi, or None if psi is no eigenstate."""
    from .ring import apply_rotation

    psi = np.asarray(psi, dtype=complex)
    r_psi = apply_rotation(psi, n_qubits)
    norm2 = np.vdot(psi, psi).real
    omega = np.vdot(psi, r_psi) / norm2
    if np.linalg.norm(r_psi - omega * psi) > tol * np.sqrt(norm2):
        return None
    return omega


def meyer_wallach_symmetric(psi, n_qubits: int | None = None):
    """Meyer-Wallach value and gradient using the rotation-symmetric shortcut.

    Raises InvalidInputError unless every state is an eigenstate of the ring
    rotation.
    """
    psis, single = _batch(psi)
    n = n_qubits or _n_qubits_of(psis.shape[-1])
    for p in psis:
        if rotation_eigenphase(p, n) is None:
            raise InvalidInputError("state is not an eigenstate of the ring rotation")
    value, g = first_qubit_mw(psis, n)
    return _unbatch(value, single), _unbatch(g, single)


# -- measure registry -------------------------------------------------------

@dataclass(frozen=True)
class MeasureDefinition:
    name: str
    value: Callable[[np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray], np.ndarray]
    applies: Callable[[int], bool]

    def __call__(self, psi):
        return self.value(psi)


def _is_square_dim(d: int) -> bool:
    s = int(round(np.sqrt(d)))
    return s * s == d and s > 1


def _is_qubits(d: int) -> bool:
    return d >= 4 and (d & (d - 1)) == 0


def _dim_is(d: int, n: int) -> bool:
    return d == n


def _any_dim(d: int) -> bool:
    return True


def _first_qubit_value(psi, n_qubits=None):
    return first_qubit_mw(psi, n_qubits)[0]


def _first_qubit_grad(psi, n_qubits=None):
    return first_qubit_mw(psi, n_qubits)[1]


def _constant_value(psi, c=0.5):
    return np.full(np.atleast_2d(psi).shape[0], c) if np.ndim(psi) > 1 else c


def _constant_grad(psi, c=0.5):
    return np.zeros_like(np.asarray(psi, dtype=complex))


MEASURE_NAMES = ("eof-entropy", "tangle", "meyer-wallach", "meyer-wallach-symmetric")


def get_measure(name: str, dim: int | None = None, split: tuple[int, int] | None = None) -> MeasureDefinition:
    """Look up a bundled measure by its CLI name, specialised to Hilbert-space dimension ``dim``."""
    if name == "eof-entropy":
        if split is None:
            if dim is None:
                split = (2, 2)
            elif not _is_square_dim(dim):
                raise InvalidInputError(f"eof-entropy needs a bipartition; dim {dim} is not a square")
            else:
                s = int(round(np.sqrt(dim)))
                split = (s, s)
        return MeasureDefinition(
            name, partial(entropy_of_entanglement, split=split), partial(entropy_gradient, split=split),
            partial(_dim_is, n=split[0] * split[1]))
    if name == "tangle":
        return MeasureDefinition(name, tangle, tangle_gradient, partial(_dim_is, n=8))
    if name in ("meyer-wallach", "meyer-wallach-symmetric"):
        n = _n_qubits_of(dim) if dim is not None else None
        if name == "meyer-wallach":
            return MeasureDefinition(name, partial(meyer_wallach, n_qubits=n),
                                     partial(meyer_wallach_gradient, n_qubits=n), _is_qubits)
        return MeasureDefinition(name, partial(_first_qubit_value, n_qubits=n),
                                 partial(_first_qubit_grad, n_qubits=n), _is_qubits)
    if name == "constant":
        return MeasureDefinition(name, _constant_value, _constant_grad, _any_dim)
    raise InvalidInputError(f"unknown measure {name!r}; choose from {', '.join(MEASURE_NAMES)}")


def measure_for_state(name: str, rho: DensityMatrix, split=None) -> MeasureDefinition:
    """Resolve ``name`` for a concrete state.

    The rotation-symmetric Meyer-Wallach shortcut is only exact when every
    ensemble member is a ring-rotation eigenstate, i.e. when the support of rho
    lies in a single rotation eigenspace.  Otherwise the general form is used.
    """
    if name == "meyer-wallach-symmetric":
        n = _n_qubits_of(rho.dim)
        _, vecs = rho.support
        phases = [rotation_eigenphase(v, n) for v in vecs.T]
        if any(p is None for p in phases) or np.max(np.abs(np.array(phases) - phases[0])) > 1e-8:
            log.info("support of rho is not rotation-symmetric; using general Meyer-Wallach")
            name = "meyer-wallach"
    return get_measure(name, rho.dim, split)


# -- analytic references ----------------------------------------------------

def _binary_entropy(x):
    x = np.clip(x, 0.0, 1.0)
    out = 0.0
    for p in (x, 1 - x):
        if p > 0:
            out -= p * np.log2(p)
    return out


def concurrence(rho) -> float:
    m = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    if m.shape != (4, 4):
        raise InvalidInputError(f"concurrence needs a two-qubit state, got shape {m.shape}")
    sy = np.array([[0, -1j], [1j, 0]])
    yy = np.kron(sy, sy)
    # the square roots of the eigenvalues of rho rho~ are the singular values
    # of sqrt(rho) sqrt(rho~), which SVD resolves accurately even near zero
    w, v = np.linalg.eigh((m + m.conj().T) / 2)
    root = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T
    lam = np.linalg.svd(root @ yy @ root.conj() @ yy, compute_uv=False)
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def wootters_eof(rho) -> float:
    """Closed-form two-qubit entanglement of formation from the concurrence."""
    c = concurrence(rho)
    return float(_binary_entropy((1 + np.sqrt(max(0.0, 1 - c * c))) / 2))


def ghz_state(n: int, sign: int = 1) -> np.ndarray:
    psi = np.zeros(2**n, dtype=complex)
    psi[0] = 1
    psi[-1] = sign
    return psi / np.sqrt(2)


def w_state() -> np.ndarray:
    psi = np.zeros(8, dtype=complex)
    psi[[0b011, 0b101, 0b110]] = 1 / np.sqrt(3)
    return psi


def bell_state() -> np.ndarray:
    return ghz_state(2)


def ghzw_mixture(eta: float) -> DensityMatrix:
    """eta |GHZ+><GHZ+| + (1 - eta) |W><W| on three qubits."""
    if not 0 <= eta <= 1:
        raise InvalidInputError(f"eta={eta} outside [0, 1]")
    vecs = np.column_stack([ghz_state(3), w_state()])
    # complete to an orthonormal basis so the eigensystem stays square
    q, _ = np.linalg.qr(np.column_stack([vecs, np.eye(8)]))
    q[:, :2] = vecs
    w = np.zeros(8)
    w[:2] = eta, 1 - eta
    return DensityMatrix.from_eigen(w, q, dims=(2, 2, 2))


def ghzw_threshold() -> float:
    c = 4 * 2 ** (1 / 3)
    return c / (3 + c)
