import numpy as np
import pytest

from convexroof.core import InvalidInputError
from convexroof.lu import lu_equivalence_distance
from convexroof.measures import ghz_state, meyer_wallach
from convexroof.ring import (MAX_SPINS, CapacityError, RingModel, apply_rotation, build_hamiltonian,
                             ground_splitting, ground_state, rotation_operator, shift_permutation,
                             splitting_exponent, symmetric_eigenbasis, thermal_state)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_hamiltonian_commutes_with_rotation(n):
    h = build_hamiltonian(RingModel(n, 0.3))
    r = rotation_operator(n)
    assert np.allclose(h, h.conj().T)
    assert np.linalg.norm(h @ r - r @ h) < 1e-12
    assert np.linalg.norm(r.conj().T @ r - np.eye(2**n)) < 1e-12
    assert np.allclose(np.linalg.matrix_power(r, n), np.eye(2**n))


def test_bare_site_shift_does_not_commute_in_field():
    h = build_hamiltonian(RingModel(3, 0.3))
    p = shift_permutation(3)
    assert np.linalg.norm(h @ p - p @ h) > 1e-3
    assert np.linalg.norm(build_hamiltonian(RingModel(3, 0.0)) @ p - p @ build_hamiltonian(RingModel(3, 0.0))) < 1e-12


def test_apply_rotation_matches_matrix():
    rng = np.random.default_rng(0)
    psi = rng.normal(size=16) + 1j * rng.normal(size=16)
    assert np.allclose(apply_rotation(psi, 4), rotation_operator(4) @ psi)


def test_two_spin_spectrum_uses_doubled_bond():
    e = np.linalg.eigvalsh(build_hamiltonian(RingModel(2, 0.0)))
    assert np.allclose(e, [-0.5, -0.5, -0.5, 1.5])


@pytest.mark.parametrize("n", [2, 3, 4])
def test_zero_field_multiplet_degeneracy(n):
    e = np.linalg.eigvalsh(build_hamiltonian(RingModel(n, 0.0)))
    assert np.sum(np.abs(e - e[0]) < 1e-10) == n + 1


def test_model_validation():
    with pytest.raises(CapacityError):
        RingModel(MAX_SPINS + 1, 0.1)
    with pytest.raises(InvalidInputError):
        RingModel(1, 0.1)
    with pytest.raises(InvalidInputError):
        RingModel(3, 0.1, J=-1.0)


@pytest.mark.parametrize("n", [3, 4])
def test_symmetric_eigenbasis_residuals(n):
    model = RingModel(n, 0.1)
    eig = symmetric_eigenbasis(model)
    h, r = build_hamiltonian(model), rotation_operator(n)
    v = eig.vectors
    assert np.linalg.norm(h @ v - v * eig.energies) < 1e-10
    assert np.linalg.norm(r @ v - v * eig.rotation_phases) < 1e-8
    assert np.allclose(np.abs(eig.rotation_phases), 1)
    assert np.allclose(eig.rotation_phases**n, 1)


def test_zero_field_polarized_states_are_rotation_invariant():
    up = np.zeros(8)
    up[0] = 1
    assert np.allclose(apply_rotation(up, 3), up)


def test_thermal_state_limits_and_commutation():
    model = RingModel(3, 0.2)
    h = build_hamiltonian(model)
    hot = thermal_state(model, 1e6).rho
    assert np.allclose(hot.matrix, np.eye(8) / 8, atol=1e-5)
    cold = thermal_state(model, 1e-6).rho
    g = ground_state(model)
    assert cold.rank == 1
    assert np.allclose(cold.matrix, np.outer(g, g.conj()), atol=1e-10)
    mid = thermal_state(model, 0.1).rho
    assert np.linalg.norm(mid.matrix @ h - h @ mid.matrix) < 1e-10
    assert thermal_state(RingModel(3, 0.05), 1e-4).rho.rank < 8
    with pytest.raises(InvalidInputError):
        thermal_state(model, 0.0)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_splitting_scales_as_power_of_field(n):
    assert splitting_exponent(n, np.geomspace(0.02, 0.2, 8)) == pytest.approx(n, abs=0.15)


def test_splitting_vanishes_with_field():
    assert ground_splitting(RingModel(3, 1e-3)) < 1e-8


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_small_field_ground_state_is_ghz_like(n):
    psi = ground_state(RingModel(n, 0.05))
    res = lu_equivalence_distance(np.outer(psi, psi.conj()), np.outer(ghz_state(n), ghz_state(n)),
                                  (2,) * n, n_restarts=3, seed=0)
    assert res.fidelity > 0.95
    assert meyer_wallach(psi, n) > 0.95
