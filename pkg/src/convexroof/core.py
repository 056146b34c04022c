"""Dense linear-algebra substrate: density matrices, Hermitian eigensystems,
skew-Hermitian exponentials, partial traces and random states."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

HERMITIAN_TOL = 1e-10
RANK_REL_THRESHOLD = 1e-12
NEGATIVE_CLAMP = 1e-12


class InvalidInputError(ValueError):
    """Raised when an argument violates a documented precondition."""


def _as_square(m) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidInputError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidInputError("matrix contains NaN or Inf")
    return m


def eig_hermitian(m, tol: float = HERMITIAN_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian matrix, eigenvalues descending.

    Eigenvectors are the columns of the second return value.
    """
    m = _as_square(m)
    if np.max(np.abs(m - m.conj().T), initial=0.0) > tol:
        raise InvalidInputError("matrix is not Hermitian")
    w, v = np.linalg.eigh((m + m.conj().T) / 2)
    return w[::-1].copy(), v[:, ::-1].copy()


def expm_skew(x, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """exp(x) for skew-Hermitian x, via the eigensystem of the Hermitian i*x.

    With i*x = V diag(theta) V^dagger we have exp(x) = V diag(exp(-i theta)) V^dagger,
    which is unitary to machine precision.
    """
    x = _as_square(x)
    if np.max(np.abs(x + x.conj().T), initial=0.0) > tol:
        raise InvalidInputError("matrix is not skew-Hermitian")
    h = 1j * x
    theta, v = np.linalg.eigh((h + h.conj().T) / 2)
    return (v * np.exp(-1j * theta)) @ v.conj().T


@dataclass(frozen=True)
class DensityMatrix:
    """Unit-trace positive semi-definite matrix together with its eigensystem.

    ``eigenvalues`` are descending and clamped at zero; ``rank`` counts those
    above ``RANK_REL_THRESHOLD * eigenvalues[0]``.
    """

    matrix: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    rank: int
    dims: tuple[int, ...] | None = field(default=None)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def support(self) -> tuple[np.ndarray, np.ndarray]:
        """Non-zero eigenvalues and their eigenvectors (columns)."""
        return self.eigenvalues[: self.rank], self.eigenvectors[:, : self.rank]

    @classmethod
    def from_matrix(cls, m, dims=None, tol: float = 1e-12) -> "DensityMatrix":
        m = _as_square(m)
        if np.max(np.abs(m - m.conj().T), initial=0.0) > tol:
            raise InvalidInputError("density matrix is not Hermitian")
        tr = np.trace(m).real
        if abs(tr - 1) > tol:
            raise InvalidInputError(f"density matrix has trace {float(tr):.12g}, expected 1")
        w, v = eig_hermitian(m, tol=tol)
        if w[-1] < -tol:
            raise InvalidInputError(f"density matrix has negative eigenvalue {float(w[-1]):.3g}")
        return cls._build((m + m.conj().T) / 2, w, v, dims)

    @classmethod
    def from_eigen(cls, eigenvalues, eigenvectors, dims=None) -> "DensityMatrix":
        """Build from a known eigensystem; weights are renormalized to sum 1."""
        w = np.asarray(eigenvalues, dtype=float)
        v = np.asarray(eigenvectors, dtype=complex)
        order = np.argsort(-w, kind="stable")
        w, v = w[order], v[:, order]
        w = np.where(w < 0, 0.0, w)
        w = w / w.sum()
        m = (v * w) @ v.conj().T
        return cls._build(m, w, v, dims)

    @classmethod
    def from_pure(cls, psi, dims=None) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        d = psi.size
        # complete psi to an orthonormal basis so eigenvectors stay square
        q, _ = np.linalg.qr(np.column_stack([psi, np.eye(d, dtype=complex)]))
        q = q[:, :d]
        q[:, 0] = psi
        w = np.zeros(d)
        w[0] = 1.0
        return cls._build(np.outer(psi, psi.conj()), w, q, dims)

    @staticmethod
    def _build(m, w, v, dims):
        w = np.where(np.abs(w) <= NEGATIVE_CLAMP, np.maximum(w, 0.0), w)
        w = np.clip(w, 0.0, None)
        rank = int(np.sum(w > RANK_REL_THRESHOLD * w[0])) if w[0] > 0 else 0
        if dims is not None:
            dims = tuple(int(d) for d in dims)
            if int(np.prod(dims)) != m.shape[0]:
                raise InvalidInputError(f"subsystem dims {dims} do not multiply to {m.shape[0]}")
        return DensityMatrix(m, w, v, rank, dims)


def _check_qubits(psi, n_qubits: int) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    if psi.shape[-1] != 2**n_qubits:
        raise InvalidInputError(f"state dimension {psi.shape[-1]} is not 2**{n_qubits}")
    return psi


def partial_trace_block(psi, split: tuple[int, int]) -> np.ndarray:
    """Reduced density matrix of the first factor of a bipartite pure state.

    Accepts a batch of states with shape ``(..., dA*dB)``; the state is not
    renormalized.
    """
    d_a, d_b = split
    psi = np.asarray(psi, dtype=complex)
    if d_a * d_b != psi.shape[-1]:
        raise InvalidInputError(f"split {split} incompatible with dimension {psi.shape[-1]}")
    mat = psi.reshape(psi.shape[:-1] + (d_a, d_b))
    return mat @ np.swapaxes(mat, -1, -2).conj()


def partial_trace_single(psi, keep: int, n_qubits: int) -> np.ndarray:
    """2x2 reduced density matrix of qubit ``keep`` (1-based, qubit 1 most significant)."""
    psi = _check_qubits(psi, n_qubits)
    if not 1 <= keep <= n_qubits:
        raise InvalidInputError(f"qubit index {keep} outside 1..{n_qubits}")
    t = psi.reshape(psi.shape[:-1] + (2**(keep - 1), 2, 2**(n_qubits - keep)))
    return np.einsum("...aib,...ajb->...ij", t, t.conj())


def single_qubit_reductions(psi, n_qubits: int) -> np.ndarray:
    """All one-qubit reduced matrices, shape ``(..., n_qubits, 2, 2)``."""
    psi = _check_qubits(psi, n_qubits)
    return np.stack([partial_trace_single(psi, k, n_qubits) for k in range(1, n_qubits + 1)], axis=-3)


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def ginibre(rows: int, cols: int, seed) -> np.ndarray:
    rng = _rng(seed)
    return (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2)


def random_density(dim: int, rank: int, seed, dims=None) -> DensityMatrix:
    """G G^dagger / tr(G G^dagger) with G a dim x rank complex Gaussian matrix."""
    if not 1 <= rank <= dim:
        raise InvalidInputError(f"rank {rank} must lie in 1..{dim}")
    g = ginibre(dim, rank, seed)
    m = g @ g.conj().T
    m = m / np.trace(m).real
    m = (m + m.conj().T) / 2
    w, v = eig_hermitian(m)
    return DensityMatrix._build(m, w, v, dims)


def random_state(dim: int, seed) -> np.ndarray:
    psi = ginibre(dim, 1, seed)[:, 0]
    return psi / np.linalg.norm(psi)


def random_unitary(dim: int, seed) -> np.ndarray:
    return random_stiefel(dim, dim, seed)


def random_stiefel(k: int, r: int, seed) -> np.ndarray:
    """Haar-distributed k x r isometry: QR of a Gaussian matrix with R's diagonal made positive."""
    q, rr = np.linalg.qr(ginibre(k, r, seed))
    d = np.diagonal(rr)
    return q * (d / np.abs(d))


def random_skew_hermitian(dim: int, seed) -> np.ndarray:
    a = ginibre(dim, dim, seed)
    return (a - a.conj().T) / 2
