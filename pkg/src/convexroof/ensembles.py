"""Pure-state decompositions of a density matrix parametrized by isometries.

For rho = sum_j lambda_j |chi_j><chi_j| (rank r) and U in St(k, r), the
unnormalized states psi~_i = sum_j U_ij sqrt(lambda_j) chi_j give the ensemble
p_i = <psi~_i|psi~_i>, psi_i = psi~_i / sqrt(p_i).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DensityMatrix, InvalidInputError
from .measures import MeasureDefinition

ZERO_PROBABILITY = 1e-14
EXTRA_CARDINALITY = 4


@dataclass(frozen=True)
class PureEnsemble:
    probabilities: np.ndarray
    states: np.ndarray  # rows; zero rows for discarded members
    discarded: np.ndarray

    @property
    def cardinality(self) -> int:
        return len(self.probabilities)

    def density_matrix(self) -> np.ndarray:
        s = self.states
        return (s.T * self.probabilities) @ s.conj()


def default_cardinality(rho: DensityMatrix, override: int | None = None) -> int:
    return int(override) if override else rho.rank + EXTRA_CARDINALITY


def _check(rho: DensityMatrix, u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[1] != rho.rank or u.shape[0] < rho.rank:
        raise InvalidInputError(f"isometry of shape {u.shape} does not fit a rank-{rho.rank} state")
    return u


def _unnormalized(rho: DensityMatrix, u):
    lam, chi = rho.support
    return (u * np.sqrt(lam)) @ chi.T


def ensemble_from_stiefel(rho: DensityMatrix, u) -> PureEnsemble:
    u = _check(rho, u)
    tilde = _unnormalized(rho, u)
    p = np.sum(np.abs(tilde) ** 2, axis=1)
    discarded = p < ZERO_PROBABILITY
    states = np.zeros_like(tilde)
    keep = ~discarded
    states[keep] = tilde[keep] / np.sqrt(p[keep])[:, None]
    return PureEnsemble(p, states, discarded)


def objective_h(rho: DensityMatrix, u, m: MeasureDefinition) -> float:
    """sum_i p_i m(psi_i), discarded members contributing nothing."""
    ens = ensemble_from_stiefel(rho, u)
    keep = ~ens.discarded
    if not keep.any():
        return 0.0
    return float(np.dot(ens.probabilities[keep], m.value(ens.states[keep])))


def objective_and_gradient(rho: DensityMatrix, u, m: MeasureDefinition) -> tuple[float, np.ndarray]:
    """h(U) and its Euclidean gradient packed as dh/dRe U + 1j dh/dIm U.

    With phi_R,kl = sqrt(p_k lambda_l) chi_l - lambda_l Re(U_kl) psi_k and
    phi_I,kl = 1j sqrt(p_k lambda_l) chi_l - lambda_l Im(U_kl) psi_k,

        dh/dRe U_kl = 2 lambda_l Re(U_kl) m_k + Re sum_i conj(phi_R,kl^(i)) g_k^(i)
        dh/dIm U_kl = 2 lambda_l Im(U_kl) m_k + Re sum_i conj(phi_I,kl^(i)) g_k^(i)

    where g_k = dm/dRe psi + 1j dm/dIm psi at psi_k.
    """
    u = _check(rho, u)
    lam, chi = rho.support
    ens = ensemble_from_stiefel(rho, u)
    keep = ~ens.discarded
    m_vals = np.zeros(len(u))
    g = np.zeros_like(ens.states)
    if keep.any():
        m_vals[keep] = m.value(ens.states[keep])
        g[keep] = m.gradient(ens.states[keep])
    p = ens.probabilities
    value = float(np.dot(p[keep], m_vals[keep]))

    chi_g = g @ chi.conj()                              # (k, r): <chi_l|g_k>
    psi_g = np.sum(ens.states.conj() * g, axis=1).real  # Re <psi_k|g_k>
    amp = np.sqrt(np.outer(p, lam))                     # sqrt(p_k lambda_l)
    d_re = 2 * lam * u.real * m_vals[:, None] + (amp * chi_g.real - lam * u.real * psi_g[:, None])
    d_im = 2 * lam * u.imag * m_vals[:, None] + (amp * chi_g.imag - lam * u.imag * psi_g[:, None])
    grad = d_re + 1j * d_im
    grad[~keep] = 0.0
    return value, grad


def objective_gradient(rho: DensityMatrix, u, m: MeasureDefinition) -> tuple[np.ndarray, np.ndarray]:
    """(dh/dRe U, dh/dIm U) as two real k x r arrays."""
    _, grad = objective_and_gradient(rho, u, m)
    return grad.real, grad.imag
