"""Lanczos iterations for f(A)_{kl} and for shortest-path distances.

Starting a Lanczos run from a canonical vector ``1_k`` of a nonnegative
matrix, the basis vector ``v_j`` is a degree-``j`` polynomial in ``A``
applied to ``1_k``. Its entries at nodes farther than ``j`` hops are exactly
zero and its entries at distance exactly ``j`` are nonzero, so the first
step at which an entry becomes nonzero is the hop distance. The trackers
below record that step while the iteration runs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import aslinearoperator

from . import oracle

# relative size of a new Lanczos vector below which the Krylov space is
# treated as invariant
EXHAUSTION_TOL = 1e-12
# |w^T v| < BREAKDOWN_TOL * ||v|| ||w|| is a serious breakdown
BREAKDOWN_TOL = 1e-12


class KrylovError(ArithmeticError):
    pass


class LanczosBreakdown(KrylovError):
    """Serious breakdown of the two-sided recurrence.

    ``decomposition`` and ``trackers`` hold the state after the last
    completed step.
    """

    def __init__(self, step, value, decomposition=None, trackers=()):
        self.step = step
        self.value = value
        self.decomposition = decomposition
        self.trackers = tuple(trackers)
        super().__init__(f"serious breakdown at step {step}: |w^T v| = {value:.3e} "
                         "relative to ||v|| ||w||")


@dataclass
class DistanceTracker:
    """First-nonzero step per node.

    ``d[m] < exact_up_to`` is the exact hop distance; ``d[m] == exact_up_to``
    only says the distance is at least that large.
    """

    d: np.ndarray
    is_zero: np.ndarray
    exact_up_to: int
    threshold: float = 0.0

    @classmethod
    def start(cls, n_nodes: int, source, n: int, threshold: float = 0.0):
        d = np.full(n_nodes, n, dtype=np.int64)
        is_zero = np.ones(n_nodes, dtype=bool)
        src = np.atleast_1d(source)
        d[src] = 0
        is_zero[src] = False
        return cls(d, is_zero, n, threshold)

    def update(self, vec: np.ndarray, j: int) -> int:
        """Mark nodes where ``vec`` is nonzero for the first time at step ``j``."""
        hit = self.is_zero & (np.abs(vec) > self.threshold)
        self.d[hit] = j
        self.is_zero[hit] = False
        return int(hit.sum())

    def distances(self, unreached=None) -> np.ndarray:
        """Float copy of ``d``; sentinels replaced by ``unreached`` if given."""
        out = self.d.astype(float)
        if unreached is not None:
            out[self.is_zero] = unreached
        return out


@dataclass
class KrylovDecomposition:
    """Tridiagonal coefficients and bases of a (two-sided) Lanczos run.

    ``A v_j = beta[j-1] v_{j-1} + alpha[j] v_j + gamma[j] v_{j+1}``; in the
    Hermitian case ``beta == gamma`` and ``W`` is ``V``.
    """

    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    V: np.ndarray
    W: np.ndarray
    scale: float = 1.0
    exhausted: bool = False
    breakdown: Optional[tuple] = None

    @property
    def steps(self) -> int:
        return self.alpha.size

    def tridiagonal(self) -> np.ndarray:
        n = self.steps
        T = np.diag(self.alpha)
        if n > 1:
            T[np.arange(1, n), np.arange(n - 1)] = self.gamma[:n - 1]
            T[np.arange(n - 1), np.arange(1, n)] = self.beta[:n - 1]
        return T


def _operator(A):
    if callable(A) and not hasattr(A, "shape"):
        raise TypeError("pass a matrix or a scipy LinearOperator, not a bare callable")
    return aslinearoperator(A)


def _unit(n, k):
    e = np.zeros(n)
    e[k] = 1.0
    return e


def _start_vector(n, start):
    if np.isscalar(start):
        return _unit(n, int(start)), int(start)
    b = np.asarray(start, dtype=float).copy()
    return b, np.flatnonzero(b)


def lanczos_hermitian(matvec, start, n: int, threshold: float = 0.0,
                      reorthogonalize: bool = True):
    """Symmetric Lanczos from ``1_start`` (or a start vector).

    Parameters
    ----------
    matvec : sparse matrix, ndarray or LinearOperator
        Symmetric operator.
    start : int or array
        Start node (or start vector; its support is distance 0).
    n : int
        Number of basis vectors ``v_0 .. v_{n-1}``; ``T`` is ``n x n``.
    threshold : float
        Entries with ``|v_j(m)| <= threshold`` count as zero for the tracker.

    Returns
    -------
    (KrylovDecomposition, DistanceTracker)
        The run ends early, without error, when the Krylov space becomes
        invariant; reached distances stay valid.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    op = _operator(matvec)
    N = op.shape[0]
    b, support = _start_vector(N, start)
    scale = float(np.linalg.norm(b))
    if scale == 0:
        raise ValueError("start vector is zero")
    tracker = DistanceTracker.start(N, support, n, threshold)

    V = np.zeros((N, n))
    alpha = np.zeros(n)
    beta = np.zeros(n)
    V[:, 0] = b / scale
    norm_est = 0.0
    exhausted = False
    steps = n
    for j in range(n):
        w = op.matvec(V[:, j])
        norm_est = max(norm_est, float(np.linalg.norm(w)))
        alpha[j] = V[:, j] @ w
        w = w - alpha[j] * V[:, j]
        if j > 0:
            w -= beta[j - 1] * V[:, j - 1]
        if reorthogonalize:
            for _ in range(2):
                w -= V[:, :j + 1] @ (V[:, :j + 1].T @ w)
        if j == n - 1:
            break
        beta[j] = np.linalg.norm(w)
        fresh = tracker.is_zero & (np.abs(w) > threshold)
        if beta[j] == 0 or (beta[j] <= EXHAUSTION_TOL * max(norm_est, 1.0)
                            and not fresh.any()):
            exhausted = True
            steps = j + 1
            break
        V[:, j + 1] = w / beta[j]
        tracker.update(V[:, j + 1], j + 1)

    beta = beta[:max(steps - 1, 0)]
    dec = KrylovDecomposition(alpha=alpha[:steps], beta=beta, gamma=beta.copy(),
                              V=V[:, :steps], W=V[:, :steps], scale=scale ** 2,
                              exhausted=exhausted)
    return dec, tracker


def _propagate(op_matvec, vec, tracker, j0, n):
    """Carry a tracker on by plain powers once its partner side stopped.

    On the new frontier only the previous frontier contributes, and there
    the entries share one sign, so no cancellation can hide a node.
    """
    for j in range(j0 + 1, n):
        if not tracker.is_zero.any():
            return
        vec = op_matvec(vec)
        nrm = np.linalg.norm(vec)
        if nrm == 0:
            return
        vec = vec / nrm
        tracker.update(vec, j)


def lanczos_nonhermitian(matvec_A, matvec_AT=None, v0=0, w0=0, n: int = 1,
                         threshold: float = 0.0, reorthogonalize: bool = True):
    """Two-sided Lanczos for ``K_n(A, v0)`` and ``K_n(A^T, w0)``.

    ``v0`` and ``w0`` are node ids (canonical vectors) or vectors. The right
    tracker reads ``dist(m, v0)`` off the ``v_j``, the left tracker
    ``dist(w0, m)`` off the ``w_j``.

    The bases are scaled so that ``w_j^T v_j = 1`` and ``||v_j|| = ||w_j||``.

    Returns
    -------
    (KrylovDecomposition, right DistanceTracker, left DistanceTracker)

    Raises
    ------
    LanczosBreakdown
        When ``|w_j^T v_j|`` vanishes relative to ``||v_j|| ||w_j||``;
        carries the completed steps.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    opA = _operator(matvec_A)
    opAT = _operator(matvec_AT) if matvec_AT is not None else opA.adjoint()
    N = opA.shape[0]
    b, bsupp = _start_vector(N, v0)
    c, csupp = _start_vector(N, w0)
    right = DistanceTracker.start(N, bsupp, n, threshold)
    left = DistanceTracker.start(N, csupp, n, threshold)

    V = np.zeros((N, n))
    W = np.zeros((N, n))
    alpha = np.zeros(n)
    beta = np.zeros(n)
    gamma = np.zeros(n)

    s0 = float(c @ b)
    nb, nc = np.linalg.norm(b), np.linalg.norm(c)
    if nb == 0 or nc == 0:
        raise ValueError("start vector is zero")
    empty = KrylovDecomposition(alpha[:0], beta[:0], gamma[:0], V[:, :0], W[:, :0], s0)
    if abs(s0) < BREAKDOWN_TOL * nb * nc:
        raise LanczosBreakdown(0, abs(s0) / (nb * nc), empty, (right, left))
    c1, c2 = _split_scaling(nb, nc, s0)
    V[:, 0] = b * c1
    W[:, 0] = c * c2

    norm_est = 0.0
    steps = n
    exhausted = False
    for j in range(n):
        av = opA.matvec(V[:, j])
        aw = opAT.matvec(W[:, j])
        norm_est = max(norm_est, float(np.linalg.norm(av)) / max(np.linalg.norm(V[:, j]), 1e-300))
        alpha[j] = W[:, j] @ av
        vh = av - alpha[j] * V[:, j]
        wh = aw - alpha[j] * W[:, j]
        if j > 0:
            vh -= beta[j - 1] * V[:, j - 1]
            wh -= gamma[j - 1] * W[:, j - 1]
        if reorthogonalize:
            for _ in range(2):
                vh -= V[:, :j + 1] @ (W[:, :j + 1].T @ vh)
                wh -= W[:, :j + 1] @ (V[:, :j + 1].T @ wh)
        if j == n - 1:
            break
        nv, nw = np.linalg.norm(vh), np.linalg.norm(wh)
        tol = EXHAUSTION_TOL * max(norm_est, 1.0)
        v_done = nv == 0 or (nv <= tol * np.linalg.norm(V[:, j])
                             and not (right.is_zero & (np.abs(vh) > threshold)).any())
        w_done = nw == 0 or (nw <= tol * np.linalg.norm(W[:, j])
                             and not (left.is_zero & (np.abs(wh) > threshold)).any())
        if v_done or w_done:
            exhausted = True
            steps = j + 1
            if not v_done:
                _propagate(opA.matvec, V[:, j], right, j, n)
            if not w_done:
                _propagate(opAT.matvec, W[:, j], left, j, n)
            break
        s = float(wh @ vh)
        if abs(s) < BREAKDOWN_TOL * nv * nw:
            part = KrylovDecomposition(alpha[:j + 1].copy(), beta[:j].copy(),
                                       gamma[:j].copy(), V[:, :j + 1].copy(),
                                       W[:, :j + 1].copy(), s0)
            raise LanczosBreakdown(j + 1, abs(s) / (nv * nw), part, (right, left))
        c1, c2 = _split_scaling(nv, nw, s)
        V[:, j + 1] = vh * c1
        W[:, j + 1] = wh * c2
        gamma[j] = 1.0 / c1
        beta[j] = 1.0 / c2
        right.update(V[:, j + 1], j + 1)
        left.update(W[:, j + 1], j + 1)

    m = max(steps - 1, 0)
    dec = KrylovDecomposition(alpha=alpha[:steps], beta=beta[:m], gamma=gamma[:m],
                              V=V[:, :steps], W=W[:, :steps], scale=s0,
                              exhausted=exhausted)
    return dec, right, left


def _split_scaling(nv, nw, s):
    """Factors with ``c1 c2 s = 1`` and ``c1 nv = |c2| nw``."""
    c1 = np.sqrt(nw / (nv * abs(s)))
    c2 = np.sign(s) * np.sqrt(nv / (nw * abs(s)))
    return c1, c2


def _quadrature(f, dec: KrylovDecomposition) -> float:
    T = dec.tridiagonal()
    try:
        F = oracle.matrix_function(f, T, cap=max(T.shape[0], 1))
    except (oracle.OracleError, np.linalg.LinAlgError) as exc:
        raise KrylovError(f"cannot evaluate {f} on the tridiagonal matrix: {exc}") from exc
    return float(dec.scale * F[0, 0])


def _is_symmetric(A) -> bool:
    if sp.issparse(A):
        return (A != A.T).nnz == 0
    A = np.asarray(A)
    return bool(np.array_equal(A, A.T))


def _bilinear(f, A, c, b, n, threshold, retries, rng):
    """``c^T f(A) b`` by two-sided Lanczos.

    After a breakdown the pair is replaced by ``(c + z, b)`` and ``(z, b)``
    with ``z`` a random positive vector, which removes the structural
    breakdowns of canonical start vectors on directed graphs.
    """
    try:
        dec, _, _ = lanczos_nonhermitian(A, A.T, b, c, n, threshold)
        return _quadrature(f, dec)
    except LanczosBreakdown:
        if retries <= 0:
            raise
    z = rng.uniform(0.5, 1.5, size=b.size)
    z *= np.linalg.norm(c) / np.linalg.norm(z)
    return (_bilinear(f, A, c + z, b, n, threshold, retries - 1, rng)
            - _bilinear(f, A, z, b, n, threshold, retries - 1, rng))


def estimate_entry(f, matrix, k: int, l: int, n: int, symmetric: Optional[bool] = None,
                   threshold: float = 0.0, retries: int = 2, seed: int = 0) -> float:
    """Lanczos estimate of ``f(A)_{kl}``.

    Symmetric matrices use Hermitian Lanczos; for ``k != l`` the entry comes
    from the polarization identity
    ``f_kl = (q(1_k + 1_l) - q(1_k - 1_l)) / 4`` with ``q(b) = b^T f(A) b``.
    Nonsymmetric matrices use the two-sided recurrence; for ``k != l`` the
    start pair ``(1_l, 1_k + 1_l)`` avoids the breakdown of ``(1_l, 1_k)``
    and ``f_ll`` is subtracted afterwards. ``retries`` bounds the number of
    randomized restarts after a breakdown (``0`` re-raises immediately).

    Raises
    ------
    LanczosBreakdown
        If the two-sided recurrence still breaks down.
    KrylovError
        If ``f`` cannot be evaluated on the tridiagonal matrix.
    """
    N = matrix.shape[0]
    if symmetric is None:
        symmetric = _is_symmetric(matrix)
    if symmetric:
        if k == l:
            dec, _ = lanczos_hermitian(matrix, k, n, threshold)
            return _quadrature(f, dec)
        ek, el = _unit(N, k), _unit(N, l)
        plus, _ = lanczos_hermitian(matrix, ek + el, n, threshold)
        minus, _ = lanczos_hermitian(matrix, ek - el, n, threshold)
        return 0.25 * (_quadrature(f, plus) - _quadrature(f, minus))
    rng = np.random.default_rng(seed)
    el = _unit(N, l)
    if k == l:
        return _bilinear(f, matrix, el, el, n, threshold, retries, rng)
    return (_bilinear(f, matrix, _unit(N, k) + el, el, n, threshold, retries, rng)
            - _bilinear(f, matrix, el, el, n, threshold, retries, rng))


def tracker_distances(matrix, source: int, n: int, directed: Optional[bool] = None,
                      threshold: float = 0.0) -> np.ndarray:
    """Hop counts ``d_n(source, m)`` read off a Lanczos run of ``n`` steps.

    Distances of ``n`` or more show up as ``n``.
    """
    if directed is None:
        directed = not _is_symmetric(matrix)
    if not directed:
        _, tr = lanczos_hermitian(matrix, source, n, threshold)
        return tr.d.copy()
    try:
        _, _, left = lanczos_nonhermitian(matrix, matrix.T, source, source, n, threshold)
    except LanczosBreakdown as exc:
        left = exc.trackers[1]
        _propagate(aslinearoperator(matrix.T).matvec,
                   _frontier_vector(exc, left), left, max(exc.step - 1, 0), n)
    return left.d.copy()


def _frontier_vector(exc: LanczosBreakdown, tracker: DistanceTracker):
    W = exc.decomposition.W
    if W.shape[1]:
        return W[:, -1]
    return (~tracker.is_zero).astype(float)
