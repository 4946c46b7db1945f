import math

import numpy as np
import pytest
import scipy.linalg as sla
import scipy.sparse as sp

from netstab.experiments import build_two_cycles, two_cycles_perturbation
from netstab.functions import Custom, Exp, Resolvent
from netstab.graph import EdgeDelta, MatrixKind
from netstab.oracle import (OracleError, as_dense, dense_expm, dense_resolvent,
                            exact_variation, expm_eig, expm_taylor, matrix_function)


def sym(n, rng, p=0.3):
    M = (rng.random((n, n)) < p) * rng.random((n, n))
    return np.triu(M, 1) + np.triu(M, 1).T


def test_zero_matrix():
    assert np.array_equal(dense_expm(np.zeros((4, 4))), np.eye(4))
    assert np.array_equal(expm_taylor(np.zeros((4, 4))), np.eye(4))
    assert np.array_equal(dense_resolvent(np.zeros((4, 4)), 0.3), np.eye(4))


def test_two_cycle_closed_form():
    A = np.array([[0.0, 1.0], [1.0, 0.0]])
    expected = np.array([[math.cosh(1), math.sinh(1)], [math.sinh(1), math.cosh(1)]])
    for E in (dense_expm(A), expm_taylor(A), expm_eig(A)):
        assert np.allclose(E, expected, rtol=1e-14, atol=0)


@pytest.mark.parametrize("seed", range(5))
def test_taylor_vs_eig(seed):
    A = sym(20, np.random.default_rng(seed)) * 3
    T, E = expm_taylor(A), expm_eig(A)
    assert np.max(np.abs(T - E)) <= 1e-10 * np.max(np.abs(E))


@pytest.mark.parametrize("seed", range(5))
def test_taylor_vs_scipy_nonsymmetric(seed):
    rng = np.random.default_rng(seed)
    A = (rng.random((25, 25)) < 0.2) * rng.random((25, 25)) * 4
    ref = sla.expm(A)
    assert np.max(np.abs(expm_taylor(A) - ref) / np.abs(ref).max()) <= 1e-12


def test_symmetric_output_and_nonnegative():
    rng = np.random.default_rng(1)
    A = sym(30, rng)
    E = dense_expm(A)
    assert np.max(np.abs(E - E.T)) <= 1e-13
    assert np.all(np.diag(E) >= 1.0) and np.all(E >= 0)
    B = (rng.random((30, 30)) < 0.1).astype(float)
    F = dense_expm(B)
    assert np.all(np.diag(F) >= 1.0) and np.all(F >= 0)


def test_overflow():
    with pytest.raises(OracleError):
        expm_taylor(np.array([[0.0, 2000.0], [0.0, 1000.0]]))
    with pytest.raises(OracleError):
        dense_expm(np.eye(2) * 1000)


def test_resolvent_small_alpha():
    rng = np.random.default_rng(2)
    M = sym(15, rng)
    a = 1e-3
    X = dense_resolvent(M, a)
    approx = np.eye(15) + a * M + a * a * M @ M
    err = np.linalg.norm(X - approx, 2)
    assert err <= 10 * a**3 * np.linalg.norm(M, 2) ** 3


@pytest.mark.parametrize("seed", range(4))
def test_resolvent_series(seed):
    rng = np.random.default_rng(seed)
    M = (rng.random((20, 20)) < 0.2).astype(float)
    nu = max(np.linalg.eigvalsh((M + M.T) / 2)[-1], 1e-3)
    a = 0.5 / nu
    S, P = np.zeros_like(M), np.eye(20)
    for _ in range(61):
        S += P
        P = a * P @ M
    assert np.max(np.abs(dense_resolvent(M, a) - S)) <= 1e-10


def test_resolvent_singular():
    A = np.array([[0.0, 1.0], [1.0, 0.0]])
    with pytest.raises(OracleError):
        dense_resolvent(A, 1.0)


def test_cap():
    with pytest.raises(OracleError):
        as_dense(np.zeros((5, 5)), cap=4)
    assert as_dense(sp.eye(3), cap=4).shape == (3, 3)


def test_custom_function():
    rng = np.random.default_rng(3)
    A = sym(10, rng)
    F = matrix_function(Custom(np.cosh), A)
    assert np.allclose(F, sla.coshm(A), atol=1e-12)


def test_exact_variation_empty_delta():
    g = build_two_cycles()
    v = exact_variation(g, EdgeDelta(), MatrixKind.PLAIN, Exp(), [(k, k) for k in range(5)])
    assert np.array_equal(v, np.zeros(5))


def test_exact_variation_two_cycles():
    g = build_two_cycles()
    d = two_cycles_perturbation()
    pairs = [(k, k) for k in range(g.n_nodes)]
    for f in (Exp(), Resolvent(1 / 3)):
        v = exact_variation(g, d, "plain", f, pairs)
        # largest changes sit at the two bridge ends
        assert set(np.argsort(v)[-2:]) == {110, 111}
        assert v[110] > 0.1
