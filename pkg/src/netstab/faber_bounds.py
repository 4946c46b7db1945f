"""A priori bounds on ``|f(A)_kl - f(A~)_kl|`` for localized edge changes.

If every changed edge leaves a node of ``S`` and enters a node of ``T``,
walks from ``k`` to ``l`` shorter than ``delta = dist(k, S) + dist(T, l) + 1``
are the same in both graphs, so every polynomial of degree ``<= delta``
agrees on the ``(k, l)`` entry. Expanding ``f`` in Faber polynomials of a
convex set containing both fields of values then gives bounds that decay
geometrically in ``delta``.

All closed forms are evaluated in log space and exponentiated at the end.
Bounds that do not apply (too small ``delta``) are reported as ``inf``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import logsumexp

from . import spectral
from .functions import Custom, Exp, Resolvent
from .graph import EdgeDelta, Graph, MatrixKind, apply_delta, build_matrix, set_distances
from .spectral import Disk, Ellipse, Segment

INF = math.inf
_LOG4 = math.log(4.0)
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class PreconditionError(ValueError):
    pass


class QuadratureError(ArithmeticError):
    pass


# --------------------------------------------------------------------------
# effective delta


@dataclass(frozen=True)
class DistanceTables:
    """Distances of every node to and from the changed node sets."""

    to_sources: np.ndarray    # dist(m, S)
    from_tips: np.ndarray     # dist(T, m)
    from_sources: np.ndarray  # dist(S, m)
    sources: frozenset
    tips: frozenset

    @classmethod
    def build(cls, g: Graph, d: EdgeDelta) -> "DistanceTables":
        n = g.n_nodes
        if not d:
            inf = np.full(n, INF)
            return cls(inf, inf, inf, frozenset(), frozenset())
        return cls(
            to_sources=set_distances(g, d.sources, reverse=True),
            from_tips=set_distances(g, d.tips),
            from_sources=set_distances(g, d.sources),
            sources=d.sources,
            tips=d.tips,
        )

    def raw(self, k, l):
        return self.to_sources[k] + self.from_tips[l]

    def effective(self, k: int, l: int, kind) -> float:
        kind = MatrixKind.parse(kind)
        dk_s = self.to_sources[k]
        if kind is MatrixKind.PLAIN:
            return float(dk_s + self.from_tips[l])
        if kind is MatrixKind.NORMALIZED:
            if k in self.sources or l in self.sources:
                raise PreconditionError(
                    f"normalized bound needs k, l outside the changed set (k={k}, l={l})")
            return float(dk_s + self.from_sources[l] - 1)
        return float(dk_s + min(self.from_tips[l], self.from_sources[l] - 1))


def effective_delta(g: Graph, k: int, l: int, d: EdgeDelta, kind=MatrixKind.PLAIN) -> float:
    """Degree up to which polynomials in the ``kind`` matrix keep entry ``(k, l)``.

    ``inf`` when the changed edges cannot be reached (or the delta is empty).
    """
    return DistanceTables.build(g, d).effective(k, l, kind)


# --------------------------------------------------------------------------
# closed forms


def _pq(t, r2):
    """``p(t)`` and ``q(t)`` for ``r2 = a^2 - b^2`` (``a^2`` on a segment)."""
    root = math.sqrt(t * t + r2)
    p = 1.0 + root / t
    q = 1.0 + r2 / (t * t + t * root)
    return p, q


def p_factor(t: float, a: float, b: float = 0.0) -> float:
    return _pq(t, a * a - b * b)[0]


def q_factor(t: float, a: float, b: float = 0.0) -> float:
    return _pq(t, a * a - b * b)[1]


def _finite_delta(delta):
    if delta is None or (isinstance(delta, float) and math.isnan(delta)):
        raise ValueError("delta must be a number")
    return not math.isinf(delta)


def exp_log_bound(region, delta) -> tuple:
    """Log of the exponential bound and the contour radius it uses."""
    if not _finite_delta(delta):
        return -INF, INF
    t = float(delta) + 1.0
    c = float(region.center)
    if isinstance(region, Disk):
        a = region.radius
        if not delta > a - 1:
            return INF, math.nan
        return (_LOG4 + c + math.log(t / (t - a)) + t * (math.log(a / t) + 1.0)), t / a
    if isinstance(region, Segment):
        if not delta > 0:
            return INF, math.nan
        s, r2 = region.half_length, region.half_length ** 2
    elif isinstance(region, Ellipse):
        a, b = region.semi_major, region.semi_minor
        if not delta > b - 1:
            return INF, math.nan
        s, r2 = a + b, a * a - b * b
    else:
        raise TypeError(f"unsupported region {region!r}")
    p, q = _pq(t, r2)
    gap = p - s / t
    if gap <= 0:
        return INF, math.nan
    log_bound = _LOG4 + c + math.log(p / gap) + t * (math.log(s / t) + q - math.log(p))
    return log_bound, t * p / s


def exp_bound(region, delta) -> float:
    """Bound for ``|exp(A)_kl - exp(A~)_kl|`` over a disk, segment or ellipse."""
    log_bound, _ = exp_log_bound(region, delta)
    return math.exp(log_bound) if log_bound < 700 else INF


def _pole_distance(region, alpha):
    if not alpha > 0:
        raise PreconditionError("resolvent parameter must be positive")
    d = abs(1.0 / alpha - region.center)
    margin = d - region.a
    if not margin > 0:
        raise PreconditionError(
            f"1/alpha = {1.0 / alpha:.6g} lies in the region (radius {region.a:.6g}); "
            "the resolvent bound needs the pole outside")
    return d, margin


def _resolvent_terms(region, d, eps):
    """``(log 1/tau_eps, log(4 / (1 - 1/tau_eps)))`` for a given ``eps``."""
    L = d - eps
    if isinstance(region, Disk):
        ratio = region.radius / L
    else:
        if isinstance(region, Segment):
            s, r2 = region.half_length, region.half_length ** 2
        else:
            s = region.semi_major + region.semi_minor
            r2 = region.semi_major ** 2 - region.semi_minor ** 2
        p_eps = 1.0 + math.sqrt(max(1.0 - r2 / (L * L), 0.0))
        ratio = s / (L * p_eps)
    return ratio


def _resolvent_log(region, alpha, delta, d, eps):
    ratio = _resolvent_terms(region, d, eps)
    if not 0 < ratio < 1:
        return INF
    return (_LOG4 - math.log1p(-ratio) - math.log(alpha * eps)
            + (delta + 1.0) * math.log(ratio))


def golden_section(fun, lo, hi, rtol=1e-6, max_iter=200):
    """Minimize a unimodal ``fun`` on ``(lo, hi)``."""
    a, b = lo, hi
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f1, f2 = fun(x1), fun(x2)
    for _ in range(max_iter):
        if b - a <= rtol * max(abs(a), abs(b), 1e-300):
            break
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _GOLDEN * (b - a)
            f1 = fun(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLDEN * (b - a)
            f2 = fun(x2)
    return (x1, f1) if f1 <= f2 else (x2, f2)


def resolvent_log_bound(region, alpha, delta, eps="auto") -> tuple:
    """Log of the resolvent bound and the ``eps`` used."""
    d, margin = _pole_distance(region, alpha)
    if not _finite_delta(delta):
        return -INF, math.nan
    if not delta > 0:
        return INF, math.nan
    if eps == "auto" or eps is None:
        # golden section in log(eps) keeps resolution when the optimum is tiny
        lo, hi = math.log(margin * 1e-14), math.log(margin * (1 - 1e-12))
        u, val = golden_section(lambda u: _resolvent_log(region, alpha, delta, d, math.exp(u)),
                                lo, hi, rtol=1e-6)
        return val, math.exp(u)
    eps = float(eps)
    if not 0 < eps < margin:
        raise PreconditionError(f"eps must lie in (0, {margin:.6g}), got {eps:.6g}")
    return _resolvent_log(region, alpha, delta, d, eps), eps


def resolvent_bound(region, alpha: float, delta, eps="auto") -> float:
    """Bound for ``|r_alpha(A)_kl - r_alpha(A~)_kl|``.

    On the contour used, ``|1 / (1 - alpha z)| <= 1 / (alpha eps)``.
    ``eps="auto"`` picks the ``eps`` giving the smallest bound.
    """
    log_bound, _ = resolvent_log_bound(region, alpha, delta, eps)
    return math.exp(log_bound) if log_bound < 700 else INF


# --------------------------------------------------------------------------
# generic contour bound


def conformal_inverse(region):
    """The map ``psi`` from ``|z| > 1`` onto the exterior of ``region``."""
    c = region.center
    if isinstance(region, Disk):
        a = region.radius
        return lambda z: c + a * z
    if isinstance(region, Segment):
        a = region.half_length
        return lambda z: 0.5 * a * (z + 1.0 / z) + c
    a, b = region.semi_major, region.semi_minor
    if a == b:
        return lambda z: c + a * z
    rho = math.sqrt(a * a - b * b)
    R = (a + b) / rho
    return lambda z: 0.5 * rho * (R * z + 1.0 / (R * z)) + c


def _log_abs_f(f, w):
    if isinstance(f, Exp):
        return w.real
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        return np.log(np.abs(f(w)))


def _check_analytic(f, region, tau):
    if isinstance(f, Resolvent):
        pole = f.pole
        psi = conformal_inverse(region)
        # the level curve |z| = tau is a horizontal ellipse (or circle); the
        # pole is real, so compare with the right-most point
        if pole - psi(tau + 0j).real <= 0:
            raise PreconditionError(
                f"resolvent pole {pole:.6g} inside the level set for tau={tau:.6g}")


def log_mu(f, region, tau: float, rtol: float = 1e-8, m0: int = 64,
           max_points: int = 1 << 20) -> float:
    """``log`` of the contour integral of ``|f(psi(z))|`` over ``|z| = tau``."""
    psi = conformal_inverse(region)
    m = m0
    prev = None
    while m <= max_points:
        theta = 2.0 * math.pi * np.arange(m) / m
        vals = _log_abs_f(f, psi(tau * np.exp(1j * theta)))
        if not np.all(np.isfinite(vals) | (vals == -INF)):
            raise QuadratureError("f is singular on the contour; choose a smaller tau")
        cur = math.log(2.0 * math.pi * tau / m) + float(logsumexp(vals))
        if prev is not None and abs(math.expm1(cur - prev)) < rtol:
            return cur
        prev = cur
        m *= 2
    raise QuadratureError(
        f"contour quadrature did not converge at tau={tau:.6g}; f may be near-singular "
        "on the contour, choose a smaller tau")


def generic_tau_log_bound(f, region, tau: float, delta) -> float:
    if not tau > 1:
        raise ValueError("tau must exceed 1")
    if not _finite_delta(delta):
        return -INF
    _check_analytic(f, region, tau)
    lt = math.log(tau)
    return (log_mu(f, region, tau) + math.log(2.0 / math.pi)
            + lt - math.log(tau - 1.0) - (delta + 2.0) * lt)


def generic_tau_bound(f, region, tau: float, delta) -> float:
    """``mu_tau(f) (2/pi) tau/(tau-1) tau^-(delta+2)`` by trapezoidal quadrature."""
    log_bound = generic_tau_log_bound(f, region, tau, delta)
    return math.exp(log_bound) if log_bound < 700 else INF


def _tau_ceiling(f, region):
    if isinstance(f, Resolvent):
        # largest tau keeping the pole outside the level set
        d = f.pole - region.center
        if d <= region.a:
            raise PreconditionError("resolvent pole lies in the region")
        if isinstance(region, Disk) or (isinstance(region, Ellipse)
                                        and region.semi_major == region.semi_minor):
            return d / region.a
        if isinstance(region, Segment):
            s, r2 = region.half_length, region.half_length ** 2
        else:
            s = region.semi_major + region.semi_minor
            r2 = region.semi_major ** 2 - region.semi_minor ** 2
        return (d + math.sqrt(d * d - r2)) / s
    return 1e6


def minimize_tau_bound(f, region, delta, tau_max=None) -> tuple:
    """Smallest generic bound over ``tau``; returns ``(bound, tau)``."""
    if not _finite_delta(delta):
        return 0.0, math.nan
    hi = tau_max if tau_max is not None else _tau_ceiling(f, region)
    lo_u, hi_u = math.log1p(1e-9), math.log(hi) - 1e-9

    def obj(u):
        try:
            return generic_tau_log_bound(f, region, math.exp(u), delta)
        except (QuadratureError, PreconditionError):
            return INF

    res = minimize_scalar(obj, bounds=(lo_u, hi_u), method="bounded",
                          options={"xatol": 1e-8})
    val = float(res.fun)
    return (math.exp(val) if val < 700 else INF), math.exp(float(res.x))


# --------------------------------------------------------------------------
# reports


@dataclass
class BoundReport:
    k: int
    l: int
    dist_k_S: float
    dist_T_l: float
    delta_raw: float
    delta_eff: float
    region: object
    function: object
    bound: float
    params: dict = field(default_factory=dict)
    actual: Optional[float] = None
    error: Optional[str] = None

    @property
    def tau_or_eps(self):
        if "eps" in self.params:
            return self.params["eps"]
        return self.params.get("tau", math.nan)


def bound_for(f, region, delta) -> tuple:
    """``(bound, params)`` for a descriptor and an effective delta."""
    if math.isinf(delta):
        return 0.0, {}
    if isinstance(f, Exp):
        log_bound, tau = exp_log_bound(region, delta)
        return (math.exp(log_bound) if log_bound < 700 else INF), {"tau": tau}
    if isinstance(f, Resolvent):
        log_bound, eps = resolvent_log_bound(region, f.alpha, delta)
        return (math.exp(log_bound) if log_bound < 700 else INF), {"eps": eps}
    if isinstance(f, Custom):
        bound, tau = minimize_tau_bound(f, region, delta)
        return bound, {"tau": tau}
    raise TypeError(f"unsupported function descriptor {f!r}")


def stability_report(g: Graph, d: EdgeDelta, kind, f, pairs, region=None,
                     tol: float = spectral.DEFAULT_TOL) -> list:
    """One :class:`BoundReport` per ``(k, l)`` pair.

    The enclosing region is computed once from both matrices unless given.
    A pair whose bound cannot be formed carries the message in ``error``
    and ``bound = nan``.
    """
    kind = MatrixKind.parse(kind)
    pairs = [(int(k), int(l)) for k, l in pairs]
    tables = DistanceTables.build(g, d)
    if region is None:
        if d:
            region = spectral.enclosing_region(
                build_matrix(g, kind), build_matrix(apply_delta(g, d), kind), kind, tol)
        else:
            region = spectral.enclosing_region(build_matrix(g, kind), None, kind, tol)
    if isinstance(f, Resolvent):
        _pole_distance(region, f.alpha)
    cache = {}
    reports = []
    for k, l in pairs:
        dk, dl = float(tables.to_sources[k]), float(tables.from_tips[l])
        rep = BoundReport(k, l, dk, dl, dk + dl, math.nan, region, f, math.nan)
        try:
            delta = tables.effective(k, l, kind) if d else INF
            rep.delta_eff = delta
            if delta not in cache:
                cache[delta] = bound_for(f, region, delta)
            rep.bound, rep.params = cache[delta][0], dict(cache[delta][1])
        except (PreconditionError, QuadratureError, ValueError) as exc:
            rep.error = str(exc)
        reports.append(rep)
    return reports


CSV_COLUMNS = ("k", "l", "dist_k_S", "dist_T_l", "delta_eff", "bound", "actual", "tau_or_eps")


def format_number(x):
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if x.is_integer() and abs(x) < 2 ** 53:
        return str(int(x))
    return f"{x:.17g}"


def write_reports_csv(reports, fh) -> None:
    """Write reports as CSV (17 significant digits, '.' decimal point)."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in reports:
        w.writerow([r.k, r.l, format_number(r.dist_k_S), format_number(r.dist_T_l), format_number(r.delta_eff),
                    format_number(r.bound), format_number(r.actual), format_number(r.tau_or_eps)])
