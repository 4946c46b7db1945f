"""Logistic preferential-attachment random graphs.

An edge ``i -> j`` (``i != j``) is present independently with probability
``s_alpha(c_j - c_i)`` where ``s_alpha(x) = 1 / (1 + exp(-alpha x))`` and
``c`` is a centrality vector. Links towards more central nodes are likely,
links from central nodes to peripheral ones are rare.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import expit, gammaln

from .graph import Graph


def sigmoid(x, alpha: float = 1.0):
    """``1 / (1 + exp(-alpha x))``, overflow-safe."""
    return expit(alpha * np.asarray(x, dtype=float))


@dataclass(frozen=True)
class LogisticModel:
    """Model parameters.

    With ``strict=True`` (default) centralities must lie in ``[0, 1]`` and
    ``0 < alpha <= 1``. Since only ``alpha * (c_j - c_i)`` matters,
    ``strict=False`` admits any real centralities and any positive slope,
    which is how the sharp regimes of the distance bound are reached.
    """

    centralities: np.ndarray
    alpha: float = 1.0
    seed: Optional[int] = None
    strict: bool = True

    def __post_init__(self):
        c = np.asarray(self.centralities, dtype=float).copy()
        c.setflags(write=False)
        object.__setattr__(self, "centralities", c)
        if c.ndim != 1 or not np.all(np.isfinite(c)):
            raise ValueError("centralities must be a finite vector")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if self.strict:
            if np.any(c < 0) or np.any(c > 1):
                raise ValueError("centralities must lie in [0, 1]")
            if self.alpha > 1:
                raise ValueError("alpha must lie in (0, 1]")

    @property
    def n_nodes(self) -> int:
        return self.centralities.size

    def edge_probabilities(self) -> np.ndarray:
        c = self.centralities
        P = sigmoid(c[None, :] - c[:, None], self.alpha)
        np.fill_diagonal(P, 0.0)
        return P


def sample_adjacency(model: LogisticModel, size=None, rng=None) -> np.ndarray:
    """Boolean adjacency sample(s); ``size`` adds leading batch dimensions."""
    rng = np.random.default_rng(model.seed) if rng is None else rng
    P = model.edge_probabilities()
    shape = P.shape if size is None else tuple(np.atleast_1d(size)) + P.shape
    return rng.random(shape) < P


def sample_graph(model: LogisticModel, rng=None) -> Graph:
    """One directed unweighted graph drawn from the model."""
    M = sample_adjacency(model, rng=rng)
    return Graph(M.astype(float), directed=True)


def log_binomial(n: int, k: int) -> float:
    if k < 0 or k > n:
        return -math.inf
    return float(gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1))


def distance_prob_lower_bound(N: int, s_size: int, c_S: float, c_i: float,
                              alpha: float, n: int) -> float:
    """Lower bound on ``P(dist(i, S) > n)`` for ``i`` outside ``S``.

    ``(1 - C(N - |S|, n) s_alpha(c_S - c_i))^n``, clamped at 0 when the base
    is negative. ``c_S`` is the largest centrality in ``S``.
    """
    if not 0 < s_size < N:
        raise ValueError("need 0 < |S| < N")
    if n < 1:
        raise ValueError("n must be a positive integer")
    log_c = log_binomial(N - s_size, n)
    if log_c == -math.inf:
        return 1.0
    log_s = -float(np.logaddexp(0.0, -alpha * (c_S - c_i)))
    base = 1.0 - math.exp(min(log_c + log_s, 700.0))
    if base <= 0:
        return 0.0
    return base ** n


def empirical_distance_prob(model: LogisticModel, i: int, S, n: int,
                            n_graphs: int, batch: int = 2000, rng=None) -> float:
    """Monte Carlo estimate of ``P(dist(i, S) > n)``."""
    rng = np.random.default_rng(model.seed) if rng is None else rng
    S = np.asarray(sorted(set(S)), dtype=np.int64)
    N = model.n_nodes
    P = model.edge_probabilities()
    far = 0
    done = 0
    while done < n_graphs:
        b = min(batch, n_graphs - done)
        A = (rng.random((b, N, N)) < P).astype(np.float32)
        reach = np.zeros((b, 1, N), dtype=np.float32)
        reach[:, 0, i] = 1.0
        for _ in range(n):
            reach = np.minimum(reach + reach @ A, 1.0)
        hit = reach[:, 0, S].any(axis=1)
        far += int((~hit).sum())
        done += b
    return far / n_graphs
