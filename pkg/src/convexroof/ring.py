"""Ferromagnetic Heisenberg ring in a radial in-plane field.

Energies are in units of J and temperatures in units of J/k_B (k_B = 1).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import schur

from .core import DensityMatrix, InvalidInputError

MAX_SPINS = 14

_SX = np.array([[0, 1], [1, 0]], dtype=complex) / 2
_SY = np.array([[0, -1j], [1j, 0]], dtype=complex) / 2
_SZ = np.array([[1, 0], [0, -1]], dtype=complex) / 2


class CapacityError(InvalidInputError):
    pass


@dataclass(frozen=True)
class RingModel:
    n_spins: int
    b: float
    J: float = 1.0

    def __post_init__(self):
        if self.n_spins < 2:
            raise InvalidInputError("a ring needs at least two spins")
        if self.n_spins > MAX_SPINS:
            raise CapacityError(f"N={self.n_spins} exceeds the supported maximum of {MAX_SPINS}")
        if self.J <= 0:
            raise InvalidInputError("exchange coupling must be ferromagnetic (J > 0)")

    @property
    def alphas(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.n_spins) / self.n_spins

    @property
    def dim(self) -> int:
        return 2**self.n_spins


def _site_op(op, site, n):
    """op acting on spin ``site`` (0-based, site 0 is the most significant bit)."""
    return np.kron(np.kron(np.eye(2**site), op), np.eye(2**(n - site - 1)))


@lru_cache(maxsize=32)
def _exchange_and_field(n: int):
    spins = [[_site_op(s, i, n) for s in (_SX, _SY, _SZ)] for i in range(n)]
    exchange = np.zeros((2**n, 2**n), dtype=complex)
    for i in range(n):
        j = (i + 1) % n
        # N = 2 counts the single bond twice, as the ring sum literally reads
        exchange += sum(a @ c for a, c in zip(spins[i], spins[j]))
    alphas = 2 * np.pi * np.arange(n) / n
    field = sum(np.cos(a) * s[0] + np.sin(a) * s[1] for a, s in zip(alphas, spins))
    return exchange, field


def build_hamiltonian(model: RingModel) -> np.ndarray:
    exchange, field = _exchange_and_field(model.n_spins)
    return -model.J * exchange + model.b * field


@lru_cache(maxsize=32)
def _rotation_parts(n: int):
    idx = np.arange(2**n)
    bits = (idx[:, None] >> (n - 1 - np.arange(n))) & 1  # bits[:, k] = state of site k
    # site k -> site k+1: new bit pattern is the old one rolled right by one
    target_bits = np.roll(bits, 1, axis=1)
    target = target_bits @ (1 << (n - 1 - np.arange(n)))
    phase = np.exp(2j * np.pi / n * bits.sum(axis=1))
    return target, phase


def apply_rotation(psi, n_spins: int) -> np.ndarray:
    """R psi without forming R; accepts a trailing axis of length 2**n_spins."""
    target, phase = _rotation_parts(n_spins)
    psi = np.asarray(psi, dtype=complex)
    out = np.empty_like(psi)
    out[..., target] = psi * phase
    return out


def rotation_operator(n_spins: int) -> np.ndarray:
    """Ring rotation by 2 pi / N: cyclic shift of sites combined with a spin
    rotation by the same angle about z (diag(1, e^{2 pi i/N}) per spin).

    The z rotation is what carries the radial field at site k onto site k+1;
    a bare relabelling of sites does not commute with the field term.
    R**N is the identity.
    """
    target, phase = _rotation_parts(n_spins)
    r = np.zeros((2**n_spins, 2**n_spins), dtype=complex)
    r[target, np.arange(2**n_spins)] = phase
    return r


def shift_permutation(n_spins: int) -> np.ndarray:
    """The site-relabelling part of the rotation alone."""
    target, _ = _rotation_parts(n_spins)
    p = np.zeros((2**n_spins, 2**n_spins))
    p[target, np.arange(2**n_spins)] = 1
    return p


@dataclass(frozen=True)
class Eigensystem:
    energies: np.ndarray
    vectors: np.ndarray
    rotation_phases: np.ndarray


def symmetric_eigenbasis(model: RingModel, degeneracy_tol: float = 1e-10) -> Eigensystem:
    """Eigenvectors of H that are simultaneously eigenvectors of the ring rotation.

    Within each (numerically) degenerate H-eigenspace the projected rotation is
    diagonalized; ties are ordered by ascending rotation phase angle.
    """
    h = build_hamiltonian(model)
    energies, vecs = np.linalg.eigh(h)
    r = rotation_operator(model.n_spins)
    scale = max(np.abs(energies).max(), 1.0)
    out_vecs = np.empty_like(vecs)
    phases = np.empty(len(energies), dtype=complex)
    start = 0
    while start < len(energies):
        stop = start + 1
        while stop < len(energies) and energies[stop] - energies[start] <= degeneracy_tol * scale:
            stop += 1
        block = vecs[:, start:stop]
        projected = block.conj().T @ r @ block
        # projected rotation is unitary and normal; its Schur form is diagonal
        t, z = schur(projected, output="complex")
        w = np.diagonal(t)
        order = np.argsort(np.angle(w), kind="stable")
        out_vecs[:, start:stop] = block @ z[:, order]
        phases[start:stop] = w[order]
        start = stop
    return Eigensystem(energies, out_vecs, phases)


def ground_state(model: RingModel) -> np.ndarray:
    return symmetric_eigenbasis(model).vectors[:, 0]


def ground_splitting(model: RingModel) -> float:
    e = np.linalg.eigvalsh(build_hamiltonian(model))
    return float(e[1] - e[0])


@dataclass(frozen=True)
class ThermalState:
    model: RingModel
    temperature: float
    rho: DensityMatrix


def thermal_state(model: RingModel, temperature: float) -> ThermalState:
    """exp(-H/T) / Z built in the symmetric eigenbasis, ground energy shifted to zero."""
    if temperature <= 0:
        raise InvalidInputError("temperature must be positive; use ground_state for T = 0")
    eig = symmetric_eigenbasis(model)
    weights = np.exp(-(eig.energies - eig.energies[0]) / temperature)
    rho = DensityMatrix.from_eigen(weights, eig.vectors, dims=(2,) * model.n_spins)
    return ThermalState(model, temperature, rho)


def splitting_exponent(n_spins: int, b_values, J: float = 1.0) -> float:
    """Least-squares slope of log(splitting) against log(b)."""
    b_values = np.asarray(b_values, dtype=float)
    gaps = [ground_splitting(RingModel(n_spins, b, J)) for b in b_values]
    slope, _ = np.polyfit(np.log(b_values), np.log(gaps), 1)
    return float(slope)
