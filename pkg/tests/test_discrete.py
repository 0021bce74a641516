import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad_vec

from hapd import TrimSpec, discretize, expm, linearize_trim, trim, zoh


def test_zero_matrix_is_identity():
    np.testing.assert_array_equal(expm(np.zeros((12, 12))), np.eye(12))


def test_zero_dynamics_hold_exactly():
    B = np.arange(12 * 13, dtype=float).reshape(12, 13)
    Phi, G = zoh(np.zeros((12, 12)), B, 0.02)
    np.testing.assert_array_equal(Phi, np.eye(12))
    np.testing.assert_array_equal(G, 0.02 * B)


def test_scalar_decay():
    Phi, G = zoh(np.array([[-1.0]]), np.array([[1.0]]), 0.02)
    assert Phi[0, 0] == pytest.approx(np.exp(-0.02), rel=1e-14)
    assert G[0, 0] == pytest.approx(1.0 - np.exp(-0.02), rel=1e-12)


def test_rotation():
    w = 3.0
    E = expm(np.array([[0.0, w], [-w, 0.0]]))
    np.testing.assert_allclose(E, [[np.cos(w), np.sin(w)], [-np.sin(w), np.cos(w)]], atol=1e-13)


@settings(max_examples=50)
@given(st.integers(0, 2**32 - 1), st.floats(0.01, 20.0))
def test_against_scipy(seed, scale):
    A = np.random.default_rng(seed).standard_normal((8, 8))
    A *= scale / np.linalg.norm(A, 1)
    ref = scipy.linalg.expm(A)
    np.testing.assert_allclose(expm(A), ref, rtol=1e-10, atol=1e-12 * np.linalg.norm(ref, 1))


@settings(max_examples=50)
@given(st.integers(0, 2**32 - 1), st.floats(0.001, 0.5), st.floats(0.001, 0.5))
def test_semigroup(seed, t, s):
    A = np.random.default_rng(seed).standard_normal((12, 12))
    lhs = expm(A * t) @ expm(A * s)
    np.testing.assert_allclose(lhs, expm(A * (t + s)), rtol=0, atol=1e-10 * np.linalg.norm(lhs, 1))


@pytest.fixture(scope="module")
def lin(model):
    return linearize_trim(trim(TrimSpec(20.0, 500.0), model), model)


def test_zoh_against_quadrature(lin):
    d = discretize(lin, 0.02)
    G_ref = quad_vec(lambda t: scipy.linalg.expm(lin.A * t), 0.0, 0.02, epsabs=1e-14)[0] @ lin.B
    np.testing.assert_allclose(d.Phi, scipy.linalg.expm(lin.A * 0.02), rtol=0, atol=1e-12)
    np.testing.assert_allclose(d.G, G_ref, rtol=0, atol=1e-10 * np.abs(G_ref).max())


def test_eigenvalues_map_to_unit_disc(lin):
    d = discretize(lin)
    lam = np.sort_complex(np.exp(lin.eigenvalues() * d.Ts))
    np.testing.assert_allclose(np.sort_complex(np.linalg.eigvals(d.Phi)), lam, atol=1e-9)
    assert np.max(np.abs(lam)) < 1.0


def test_bad_sample_time(lin):
    with pytest.raises(ValueError):
        zoh(lin.A, lin.B, 0.0)
