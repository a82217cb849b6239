import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from chanmix import noise, statevec
from chanmix.errors import ConfigError, OutOfRegimeError, UnsupportedError
from chanmix.noise import ErrorModel
from chanmix.pauli import PauliString

small = st.floats(-0.2, 0.2, allow_nan=False)


def test_constructors_and_properties():
    c = ErrorModel.constant(0.01)
    assert c.is_overrotation and not c.is_stochastic
    assert c.mitigation_epsilon == 0.01
    u = ErrorModel.uniform(0.002)
    assert u.bounds == (-0.002, 0.006)
    assert u.mitigation_epsilon == pytest.approx(0.002)
    s = ErrorModel.unstructured(0.1, 0.2, 0.3)
    assert s.mitigation_epsilon == 0.3
    assert s.nominal_epsilon == pytest.approx(math.sqrt(0.14))
    assert ErrorModel.none().mitigation_epsilon == 0.0


def test_uniform_draws_stay_in_bounds():
    u = ErrorModel.uniform(0.01, -1, 3)
    rng = np.random.default_rng(0)
    x = np.array([u.draw_overrotation(rng) for _ in range(20_000)])
    assert x.min() >= -0.01 and x.max() <= 0.03
    assert abs(x.mean() - 0.01) < 4 * (0.04 / math.sqrt(12)) / math.sqrt(x.size)


def test_dict_round_trip_and_errors():
    for m in (ErrorModel.none(), ErrorModel.constant(0.1), ErrorModel.uniform(0.1, -2, 2), ErrorModel.unstructured(1, 2, 3)):
        assert ErrorModel.from_dict(m.to_dict()) == m
    with pytest.raises(ConfigError, match="kind"):
        ErrorModel.from_dict({"kind": "gaussian"})
    with pytest.raises(ConfigError, match="unexpected"):
        ErrorModel.from_dict({"kind": "constant", "eps0": 0.1})
    with pytest.raises(ConfigError):
        ErrorModel.uniform(0.1, 3, -1)


def test_build_unstructured():
    m = noise.build_unstructured(0.02, [0.6, 0.0, 0.8])
    assert (m.eps_x, m.eps_y, m.eps_z) == pytest.approx((0.012, 0.0, 0.016))
    with pytest.raises(ValueError, match="unit"):
        noise.build_unstructured(0.02, [1, 1, 0])
    with pytest.raises(ValueError):
        noise.build_unstructured(0.02, [1, 0])


def test_random_direction_is_unit():
    rng = np.random.default_rng(4)
    for _ in range(20):
        assert np.linalg.norm(noise.random_direction(rng)) == pytest.approx(1.0)


@given(small, small, small, st.floats(-math.pi, math.pi))
def test_extract_error_angles_round_trip(ex, ey, ez, theta):
    v = noise.unstructured_unitary(ex, ey, ez) @ noise.rotation_2x2("Z", theta)
    v = v * np.exp(0.37j)  # global phase must not matter
    got = noise.extract_error_angles(theta, v)
    np.testing.assert_allclose(got, (ex, ey, ez), atol=1e-10)


def test_extract_rejects_bad_input():
    with pytest.raises(ValueError, match="unitary"):
        noise.extract_error_angles(0.1, np.array([[1, 1], [0, 1]]))
    with pytest.raises(OutOfRegimeError):
        noise.extract_error_angles(0.0, noise.rotation_2x2("X", 2.0))


def test_synthesis_error_norm():
    for eps in (0.001, 0.05, -0.3):
        u = noise.rotation_2x2("Z", eps)
        assert np.linalg.norm(np.eye(2) - u, 2) == pytest.approx(noise.synthesis_error_norm(eps), rel=1e-10)
    assert noise.max_epsilon_for_accuracy(noise.synthesis_error_norm(0.01)) == pytest.approx(0.01)
    with pytest.raises(ValueError):
        noise.max_epsilon_for_accuracy(0.0)


def test_error_rotations():
    z = PauliString.single("Z", 1, 2)
    assert noise.error_rotations(ErrorModel.none(), z) == []
    (r,) = noise.error_rotations(ErrorModel.constant(0.1), z)
    assert r.generator == z and r.theta == 0.1
    rots = noise.error_rotations(ErrorModel.unstructured(0.1, 0.2, 0.3), z)
    assert [p.generator.label() for p in rots] == ["IX", "IY", "IZ"]
    with pytest.raises(UnsupportedError):
        noise.error_rotations(ErrorModel.unstructured(0.1, 0.2, 0.3), PauliString.from_label("ZZ"))
    with pytest.raises(ConfigError):
        noise.error_rotations(ErrorModel.uniform(0.1), z)


def test_apply_error_matches_unitary():
    psi = statevec.random_state(1, np.random.default_rng(2))
    model = ErrorModel.unstructured(0.05, -0.07, 0.11)
    out = noise.apply_error(psi, model, PauliString.from_label("Z"))
    np.testing.assert_allclose(out.amplitudes, noise.unstructured_unitary(0.05, -0.07, 0.11) @ psi.amplitudes, atol=1e-14)


def test_sample_twirl_is_uniform():
    p = PauliString.single("Z", 0, 1)
    rng = np.random.default_rng(5)
    hits = sum(not noise.sample_twirl(p, rng).is_identity for _ in range(10_000))
    assert abs(hits - 5000) < 4 * 50
