"""Numerical radius and convex enclosures of the field of values.

For a nonnegative matrix the numerical radius is the Perron root of its
Hermitian part ``(A + A^T) / 2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from .graph import MatrixKind

DEFAULT_TOL = 1e-10
_DENSE_BELOW = 64


class ConvergenceError(ArithmeticError):
    def __init__(self, estimate, residual, message="numerical radius did not converge"):
        self.estimate = estimate
        self.residual = residual
        super().__init__(f"{message} (estimate {estimate:.6g}, residual {residual:.3g})")


@dataclass(frozen=True)
class Disk:
    center: float
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("disk radius must be positive")

    @property
    def a(self):
        return self.radius

    def contains(self, z, atol=0.0) -> np.ndarray:
        return np.abs(np.asarray(z) - self.center) <= self.radius + atol


@dataclass(frozen=True)
class Segment:
    """The real interval ``[center - half_length, center + half_length]``."""

    center: float
    half_length: float

    def __post_init__(self):
        if not self.half_length > 0:
            raise ValueError("segment half-length must be positive")

    @property
    def a(self):
        return self.half_length

    def contains(self, z, atol=0.0) -> np.ndarray:
        z = np.asarray(z)
        return (np.abs(z.imag) <= atol) & (np.abs(z.real - self.center) <= self.half_length + atol)


@dataclass(frozen=True)
class Ellipse:
    """Horizontal ellipse with semi-axes ``semi_major >= semi_minor > 0``."""

    center: float
    semi_major: float
    semi_minor: float

    def __post_init__(self):
        if not (self.semi_major >= self.semi_minor > 0):
            raise ValueError("ellipse needs semi_major >= semi_minor > 0")

    @property
    def a(self):
        return self.semi_major

    @property
    def b(self):
        return self.semi_minor

    def contains(self, z, atol=0.0) -> np.ndarray:
        z = np.asarray(z) - self.center
        a, b = self.semi_major + atol, self.semi_minor + atol
        return (z.real / a) ** 2 + (z.imag / b) ** 2 <= 1.0


Region = (Disk, Segment, Ellipse)


def hermitian_part(A):
    if sp.issparse(A):
        return sp.csr_matrix((A + A.T) * 0.5)
    A = np.asarray(A, dtype=float)
    return 0.5 * (A + A.T)


def numerical_radius(A, tol: float = DEFAULT_TOL, max_iter: int = 10000) -> float:
    """Numerical radius of a nonnegative matrix, ``rho((A + A^T) / 2)``.

    Small matrices are handled densely; larger ones by ARPACK's Lanczos
    on the Hermitian part, started from the all-ones vector, followed by a
    residual check.
    """
    H = hermitian_part(A)
    n = H.shape[0]
    if n == 0:
        return 0.0
    if sp.issparse(H) and H.nnz == 0 or not sp.issparse(H) and not H.any():
        return 0.0
    if n < _DENSE_BELOW:
        Hd = H.toarray() if sp.issparse(H) else H
        return float(max(np.linalg.eigvalsh(Hd)[-1], 0.0))
    try:
        lam, x = eigsh(H, k=1, which="LA", v0=np.ones(n), tol=tol * 1e-2,
                       maxiter=max_iter)
    except ArpackNoConvergence as exc:
        est = float(exc.eigenvalues[-1]) if len(exc.eigenvalues) else np.nan
        raise ConvergenceError(est, np.nan) from None
    lam = float(lam[0])
    x = x[:, 0]
    residual = float(np.linalg.norm(H @ x - lam * x))
    if residual > tol * max(abs(lam), 1.0):
        raise ConvergenceError(lam, residual)
    return lam


def _is_symmetric(A) -> bool:
    if sp.issparse(A):
        return (A != A.T).nnz == 0
    return bool(np.array_equal(A, A.T))


def enclosing_region(matrix_a, matrix_b=None, kind_hint=MatrixKind.PLAIN,
                     tol: float = DEFAULT_TOL):
    """A disk or segment centred at 0 containing both fields of values.

    Normalized adjacency matrices get ``[-1, 1]``; symmetric matrices a
    segment and all others a disk, both of radius
    ``max(nu(A), nu(B)) * (1 + 10 tol)``.
    """
    kind = MatrixKind.parse(kind_hint)
    if kind is MatrixKind.NORMALIZED:
        return Segment(0.0, 1.0)
    mats = [matrix_a] if matrix_b is None else [matrix_a, matrix_b]
    nu = max(numerical_radius(M, tol) for M in mats)
    radius = max(nu * (1.0 + 10.0 * tol), np.finfo(float).tiny)
    if all(_is_symmetric(M) for M in mats):
        return Segment(0.0, radius)
    return Disk(0.0, radius)


def single_entry_shift_check(A, m: int, n: int, eps: float, tol: float = DEFAULT_TOL):
    """Radii of ``A`` and ``A + eps 1_m 1_n^T`` and their difference."""
    if m == n:
        raise ValueError("m and n must differ")
    if not eps > 0:
        raise ValueError("eps must be positive")
    if sp.issparse(A):
        B = sp.lil_matrix(A, copy=True)
        B[m, n] = B[m, n] + eps
        B = B.tocsr()
    else:
        B = np.array(A, dtype=float, copy=True)
        B[m, n] += eps
    nu_a = numerical_radius(A, tol)
    nu_b = numerical_radius(B, tol)
    return nu_a, nu_b, nu_b - nu_a
