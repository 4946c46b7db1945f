"""Dense ground truth: matrix exponential, resolvent and entry variations.

Everything here works on dense arrays and is meant for graphs of at most a
few thousand nodes.
"""

from __future__ import annotations

import math
import warnings

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp

from .functions import Custom, Exp, Resolvent
from .graph import EdgeDelta, Graph, MatrixKind, apply_delta, build_matrix

DEFAULT_CAP = 3000

_TAYLOR_ORDER = 18
_TAYLOR = np.array([1.0 / math.factorial(j) for j in range(_TAYLOR_ORDER + 1)])


class OracleError(ArithmeticError):
    pass


def as_dense(M, cap: int = DEFAULT_CAP) -> np.ndarray:
    """Dense float copy of ``M`` with the dimension cap enforced."""
    X = M.toarray() if sp.issparse(M) else np.array(M, dtype=float)
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise ValueError(f"square matrix required, got shape {X.shape}")
    if X.shape[0] > cap:
        raise OracleError(f"dimension {X.shape[0]} exceeds dense cap {cap}")
    if not np.all(np.isfinite(X)):
        raise ValueError("matrix has non-finite entries")
    return X


def _taylor_expm(X: np.ndarray) -> np.ndarray:
    """Degree-18 Taylor polynomial by Paterson-Stockmeyer (blocks of 4)."""
    n = X.shape[0]
    I = np.eye(n)
    X2 = X @ X
    X3 = X2 @ X
    X4 = X2 @ X2
    powers = (I, X, X2, X3)

    def block(b):
        out = np.zeros_like(X)
        for r in range(4):
            j = 4 * b + r
            if j <= _TAYLOR_ORDER:
                out += _TAYLOR[j] * powers[r]
        return out

    P = block(4)
    for b in (3, 2, 1, 0):
        P = P @ X4 + block(b)
    return P


def expm_taylor(M, cap: int = DEFAULT_CAP) -> np.ndarray:
    """Scaling and squaring with ``||M / 2^s||_1 <= 1/2``."""
    X = as_dense(M, cap)
    norm = np.linalg.norm(X, 1)
    s = max(0, math.ceil(math.log2(norm / 0.5))) if norm > 0 else 0
    E = _taylor_expm(X / 2.0 ** s)
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(s):
            E = E @ E
    if not np.all(np.isfinite(E)):
        raise OracleError("matrix exponential overflowed")
    return E


def expm_eig(M, cap: int = DEFAULT_CAP) -> np.ndarray:
    """Exponential of a symmetric matrix through its eigendecomposition."""
    X = as_dense(M, cap)
    lam, V = np.linalg.eigh(X)
    with np.errstate(over="raise"):
        try:
            E = (V * np.exp(lam)) @ V.T
        except FloatingPointError:
            raise OracleError("matrix exponential overflowed") from None
    return 0.5 * (E + E.T)


def dense_expm(M, cap: int = DEFAULT_CAP) -> np.ndarray:
    """``exp(M)``; symmetric input goes through ``eigh``, the rest through Taylor."""
    X = as_dense(M, cap)
    if np.array_equal(X, X.T):
        return expm_eig(X, cap)
    return expm_taylor(X, cap)


def dense_resolvent(M, alpha: float, cap: int = DEFAULT_CAP,
                    max_condition: float = 1e14) -> np.ndarray:
    """``(I - alpha M)^{-1}`` by LU with partial pivoting."""
    X = as_dense(M, cap)
    n = X.shape[0]
    B = np.eye(n) - alpha * X
    try:
        with warnings.catch_warnings():
            # an exactly singular factor is reported below as OracleError
            warnings.simplefilter("ignore", la.LinAlgWarning)
            lu, piv = la.lu_factor(B, check_finite=False)
    except (la.LinAlgError, ValueError) as exc:
        raise OracleError(f"I - alpha*M is singular: {exc}") from None
    if np.any(np.diag(lu) == 0):
        raise OracleError("I - alpha*M is singular")
    R = la.lu_solve((lu, piv), np.eye(n), check_finite=False)
    cond = np.linalg.norm(B, 1) * np.linalg.norm(R, 1)
    if not np.isfinite(cond) or cond > max_condition:
        raise OracleError(f"I - alpha*M is ill-conditioned (cond_1 ~ {cond:.3g})")
    return R


def matrix_function(f, M, cap: int = DEFAULT_CAP) -> np.ndarray:
    """Dense ``f(M)`` for a function descriptor."""
    if isinstance(f, Exp):
        return dense_expm(M, cap)
    if isinstance(f, Resolvent):
        return dense_resolvent(M, f.alpha, cap)
    if isinstance(f, Custom):
        X = as_dense(M, cap)
        if np.array_equal(X, X.T):
            lam, V = np.linalg.eigh(X)
            return (V * np.asarray(f(lam + 0j)).real) @ V.T
        lam, V = la.eig(X)
        F = (V * f(lam)) @ la.inv(V)
        return F.real
    raise TypeError(f"unsupported function descriptor {f!r}")


def exact_variation(g: Graph, d: EdgeDelta, kind, f, pairs,
                    cap: int = DEFAULT_CAP) -> np.ndarray:
    """``|f(A)_kl - f(A~)_kl|`` for each ``(k, l)`` in ``pairs``."""
    kind = MatrixKind.parse(kind)
    pairs = np.asarray(list(pairs), dtype=np.int64).reshape(-1, 2)
    if not d:
        return np.zeros(len(pairs))
    FA = matrix_function(f, build_matrix(g, kind), cap)
    FB = matrix_function(f, build_matrix(apply_delta(g, d), kind), cap)
    return np.abs(FA[pairs[:, 0], pairs[:, 1]] - FB[pairs[:, 0], pairs[:, 1]])
