import math

import numpy as np
import pytest

from chanmix import oracle
from chanmix.circuits import attach_errors, build_trotter_ising, compile_to_rz, with_policy
from chanmix.errors import CapacityError, UnsupportedError
from chanmix.noise import ErrorModel, build_unstructured, unstructured_unitary
from chanmix.pauli import PauliString


def test_run_checks_all_small():
    res = oracle.run_checks(n_random=30, seed=1)
    assert set(res) == {"two_term_operator", "four_term_channel", "three_term_mixture", "shift_rule", "cross_terms"}
    assert max(res.values()) < 1e-12


def test_cross_term_sum_fails_by_two():
    # The sum of the two conjugation channels is off by twice channel(R(a - pi/2)).
    worst = max(oracle.cross_term_residual(t, 0.05, as_printed=True) for t in np.linspace(-3, 3, 25))
    assert worst == pytest.approx(2.0, abs=1e-6)


def test_general_offsets_identity():
    for A, B in ((2.0, 1.0), (5.0, 2.5), (4.0, math.pi)):
        assert oracle.verify_mixture_identity(0.7, 0.08, A, B) < 1e-10


def test_superoperator_algebra():
    u = oracle.rotation_dense("Z", 0.3)
    ch = oracle.channel_of_unitary(u)
    rho = np.array([[0.6, 0.2 - 0.1j], [0.2 + 0.1j, 0.4]])
    np.testing.assert_allclose(ch.apply(rho), u @ rho @ u.conj().T, atol=1e-15)
    composed = oracle.rotation_channel(0.1) @ oracle.rotation_channel(0.2)
    assert composed.distance(ch) < 1e-14
    np.testing.assert_allclose(oracle.unvec(oracle.vec(rho), 2), rho)
    with pytest.raises(ValueError):
        oracle.channel_of_unitary(np.array([[1, 1], [0, 1]]))


def test_twirl_ptm_drops_perpendicular_terms():
    u = unstructured_unitary(0.05, -0.03, 0.02)
    ptm = oracle.pauli_transfer_matrix(oracle.twirl(u, "Z"))
    # Z-twirl keeps the IZ block and the XY block, and removes all mixing between them.
    for i in (0, 3):
        for j in (1, 2):
            assert abs(ptm[i, j]) < 1e-14 and abs(ptm[j, i]) < 1e-14
    assert ptm[0, 0] == pytest.approx(1.0)
    # The twirled map is the z rotation followed by a dephasing.
    untwirled = oracle.pauli_transfer_matrix(oracle.channel_of_unitary(u))
    assert np.max(np.abs(untwirled[3, 1:3])) > 1e-3


def test_density_enumerate_and_ideal_agree():
    base = compile_to_rz(build_trotter_ising(2, 2, 0.6))
    c = attach_errors(base, build_unstructured(0.05, [0, 0, 1]), "mixture_plus_twirl")
    assert oracle.exact_mixture_expectation(c, method="both") == pytest.approx(oracle.ideal_expectation(c), abs=1e-12)
    # A tilted error leaves a dephasing the mixture cannot undo.
    tilted = attach_errors(base, build_unstructured(0.05, [0.6, 0, 0.8]), "mixture_plus_twirl")
    gap = oracle.exact_mixture_expectation(tilted, method="both") - oracle.ideal_expectation(tilted)
    assert abs(gap) > 1e-6
    off = with_policy(c, "off")
    assert oracle.enumerate_expectation(off) == pytest.approx(oracle.density_expectation(off), abs=1e-12)
    with pytest.raises(ValueError):
        oracle.exact_mixture_expectation(c, method="monte-carlo")


def test_density_matrix_properties():
    dm = oracle.DensityMatrix.zero(2)
    assert dm.trace() == 1
    assert dm.hermiticity_error() == 0
    assert dm.expectation(PauliString.z_parity(2)) == 1


def test_capacity_limits():
    big = attach_errors(build_trotter_ising(7, 1, 0.4), ErrorModel.constant(0.01), "mixture")
    with pytest.raises(CapacityError):
        oracle.density_expectation(big)
    long = attach_errors(build_trotter_ising(2, 5, 0.4), ErrorModel.constant(0.01), "mixture")
    with pytest.raises(CapacityError):
        oracle.enumerate_expectation(long)


def test_uniform_model_has_no_enumeration():
    c = attach_errors(build_trotter_ising(2, 1, 0.4), ErrorModel.uniform(0.01), "mixture")
    with pytest.raises(UnsupportedError):
        oracle.density_expectation(c)
