"""Real-axis resolvent integrals for fractional powers.

Every integral here has the shape ``int_0^inf s**a f(s) ds`` with ``f``
bounded near 0 and ``f(s) ~ s**-q`` at infinity.  The half line is split at
``split_point``; the tail is mapped by ``s = 1/u``.  Each half is covered by
panels graded geometrically towards its singular end, Gauss-Legendre on the
graded panels and Gauss-Jacobi (weight ``x**a`` resp. ``u**(q-a-2)``) on the
innermost one.  The grading depth follows the spectrum of the operator so
that resolvent poles stay a fixed relative distance away from every panel.
Accuracy is controlled by doubling the nodes per panel until two successive
results agree to ``rel_tol``.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.special import roots_jacobi, roots_legendre

from .errors import DivergentIntegral, InvalidAlpha, InvalidParams, NotConverged
from .operators import as_operator, certify_positive, eigenvalues
from .oracle import matrix_power

ALPHA_EDGE = 1e-3
# graded levels added below the spectrum-derived depth
_EXTRA_LEVELS = 6


@dataclass(frozen=True)
class QuadratureScheme:
    rel_tol: float = 1e-8
    max_doublings: int = 8
    split_point: float = 1.0
    base_nodes: int = 32

    def __post_init__(self):
        if not 0.0 < self.rel_tol < 1.0:
            raise ValueError("rel_tol must lie in (0, 1)")
        if self.max_doublings < 1:
            raise ValueError("max_doublings must be >= 1")
        if self.split_point <= 0.0:
            raise ValueError("split_point must be positive")
        if self.base_nodes < 8:
            raise ValueError("base_nodes must be >= 8")


DEFAULT_SCHEME = QuadratureScheme()


@dataclass
class QuadratureResult:
    value: np.ndarray
    converged: bool
    nodes_per_panel: int
    n_panels: int
    distances: list = field(default_factory=list)


@functools.lru_cache(maxsize=64)
def _legendre(n):
    return roots_legendre(n)


@functools.lru_cache(maxsize=256)
def _jacobi(n, b):
    # weight (1+x)**b on [-1, 1]
    return roots_jacobi(n, 0.0, b)


def _graded_edges(length, h_min):
    levels = max(0, math.ceil(math.log2(length / h_min))) + _EXTRA_LEVELS
    return [length * 0.5 ** k for k in range(levels + 1)]  # decreasing


def _segment(g, weight_exp, smooth, edges, n):
    """``int_0^{edges[0]} x**weight_exp * smooth(x) dx`` where ``g`` is the full
    integrand used on the graded panels."""
    total = None
    x, w = _legendre(n)
    for hi, lo in zip(edges[:-1], edges[1:]):
        mid, half = 0.5 * (hi + lo), 0.5 * (hi - lo)
        for xi, wi in zip(x, w):
            term = (wi * half) * g(mid + half * xi)
            total = term if total is None else total + term
    h = edges[-1]
    xj, wj = _jacobi(n, weight_exp)
    scale = (0.5 * h) ** (weight_exp + 1.0)
    for xi, wi in zip(xj, wj):
        term = (wi * scale) * smooth(0.5 * h * (1.0 + xi))
        total = term if total is None else total + term
    return total


def integrate_half_line(f, a: float, q: float, scheme: QuadratureScheme = DEFAULT_SCHEME,
                        scales: tuple | None = None) -> QuadratureResult:
    """``int_0^inf s**a f(s) ds`` by graded panels and node doubling.

    Parameters
    ----------
    f : callable
        ``f(s)`` for ``s > 0``; array valued.  Must be smooth on ``[0, c]``
        and behave like ``s**-q`` (times a smooth function of ``1/s``) at
        infinity.
    a, q : float
        Weight exponent and decay order; need ``a > -1`` and ``a - q < -1``.
    scales : (lo, hi), optional
        Smallest and largest modulus of the singularities of ``f`` in the
        left half plane (typically eigenvalue moduli).  Panels are graded so
        that no panel is longer than half its distance to them.

    Raises
    ------
    DivergentIntegral
        The exponents do not give an integrable integrand.
    NotConverged
        ``max_doublings`` exhausted.
    """
    if not a > -1.0 or not a - q < -1.0:
        raise DivergentIntegral(f"weight s**{a} with decay s**-{q} is not integrable on (0, inf)")
    c = scheme.split_point
    lo, hi = scales if scales is not None else (c, 1.0 / c)
    left_edges = _graded_edges(c, min(c, 0.5 * lo))
    right_edges = _graded_edges(1.0 / c, min(1.0 / c, 0.5 / hi))
    b = q - a - 2.0

    def tail(u):
        return u ** (-a - 2.0) * f(1.0 / u)

    def tail_smooth(u):
        return u ** (-q) * f(1.0 / u)

    def head(s):
        return s ** a * f(s)

    def evaluate(n):
        return _segment(head, a, f, left_edges, n) + _segment(tail, b, tail_smooth, right_edges, n)

    n = scheme.base_nodes
    prev = evaluate(n)
    distances = []
    n_panels = len(left_edges) + len(right_edges)
    for _ in range(scheme.max_doublings):
        n *= 2
        cur = evaluate(n)
        ref = _norm(cur)
        dist = _norm(cur - prev) / ref if ref > 0 else _norm(cur - prev)
        distances.append(dist)
        if dist <= scheme.rel_tol:
            return QuadratureResult(cur, True, n, n_panels, distances)
        prev = cur
    raise NotConverged(f"no convergence after {scheme.max_doublings} doublings "
                       f"(last relative change {distances[-1]:.3g})", prev, cur, distances[-1])


def _norm(X):
    X = np.asarray(X)
    if X.ndim == 2:
        return float(np.linalg.norm(X, 2))
    return float(np.linalg.norm(X))


def spectral_scales(A):
    """(min, max) eigenvalue modulus: the pole scales of ``(s + A)^{-1}``."""
    mods = np.abs(eigenvalues(A))
    return float(mods.min()), float(mods.max())


def resolvent_integrand(A, p: int = 1, right=None):
    """``s -> (s + A)^{-p} @ right`` with one LU factorisation per node."""
    A = as_operator(A)
    n = A.shape[0]
    rhs0 = np.eye(n) if right is None else np.asarray(right)
    dtype = np.result_type(A, rhs0, float)
    eye = np.eye(n, dtype=dtype)

    def f(s):
        lu = sla.lu_factor(A + s * eye, check_finite=False)
        X = rhs0
        for _ in range(p):
            X = sla.lu_solve(lu, X, check_finite=False)
        return X

    return f


def _check_positive(A, certify):
    if certify:
        certify_positive(A, strict=False)


def balakrishnan_e1(A, alpha: float, scheme: QuadratureScheme = DEFAULT_SCHEME, *,
                    certify: bool = True, return_info: bool = False):
    """``A**-alpha = sin(pi alpha)/pi * int_0^inf s**-alpha (s+A)^{-1} ds``, 0 < alpha < 1.

    ``alpha`` within 1e-3 of 0 or 1 is rejected: the vanishing prefactor
    and the diverging integral cancel catastrophically there; use
    :func:`balakrishnan_e2` instead.
    """
    A = as_operator(A)
    alpha = float(alpha)
    if not ALPHA_EDGE <= alpha <= 1.0 - ALPHA_EDGE:
        raise InvalidAlpha(f"e1 needs alpha in [{ALPHA_EDGE}, {1 - ALPHA_EDGE}], got {alpha}")
    _check_positive(A, certify)
    res = integrate_half_line(resolvent_integrand(A), -alpha, 1.0, scheme, spectral_scales(A))
    value = math.sin(math.pi * alpha) / math.pi * res.value
    return (value, res) if return_info else value


def e2_coefficient(alpha: float, m: int) -> float:
    """``sin(pi alpha)/pi * m! / prod_{j=1..m} (j - alpha)``."""
    c = math.sin(math.pi * alpha) / math.pi
    for j in range(1, m + 1):
        c *= j / (j - alpha)
    return c


def balakrishnan_e2(A, alpha: float, m: int, scheme: QuadratureScheme = DEFAULT_SCHEME, *,
                    certify: bool = True, return_info: bool = False):
    """``A**-alpha`` from ``int_0^inf s**(m-alpha) (s+A)^{-m-1} ds``; 0 < alpha < m+1,
    alpha not an integer."""
    A = as_operator(A)
    alpha = float(alpha)
    m = int(m)
    if m < 1:
        raise InvalidAlpha(f"m must be >= 1, got {m}")
    if not 0.0 < alpha < m + 1 or abs(alpha - round(alpha)) < 1e-9:
        raise InvalidAlpha(f"e2 with m={m} needs non-integer alpha in (0, {m + 1}), got {alpha}")
    _check_positive(A, certify)
    res = integrate_half_line(resolvent_integrand(A, m + 1), m - alpha, m + 1.0, scheme,
                              spectral_scales(A))
    value = e2_coefficient(alpha, m) * res.value
    return (value, res) if return_info else value


def balakrishnan_e3_apply(A, alpha: float, x, scheme: QuadratureScheme = DEFAULT_SCHEME, *,
                          certify: bool = True, return_info: bool = False):
    """``A**-alpha @ x = sin(pi alpha)/(pi alpha) * int_0^inf s**-alpha (s+A)^{-2} A x ds``.

    Valid for -1 < alpha < 1, alpha != 0; negative alpha gives positive powers.
    """
    A = as_operator(A)
    alpha = float(alpha)
    x = np.asarray(x)
    if not -1.0 < alpha < 1.0 or alpha == 0.0:
        raise InvalidAlpha(f"e3 needs alpha in (-1, 1) without 0, got {alpha}")
    if x.shape[0] != A.shape[0]:
        raise InvalidParams(f"vector length {x.shape[0]} does not match operator dim {A.shape[0]}")
    _check_positive(A, certify)
    res = integrate_half_line(resolvent_integrand(A, 2, A @ x), -alpha, 2.0, scheme,
                              spectral_scales(A))
    value = math.sin(math.pi * alpha) / (math.pi * alpha) * res.value
    return (value, res) if return_info else value


def weighted_resolvent_integral(A, exponent: float, p: int = 1,
                                scheme: QuadratureScheme = DEFAULT_SCHEME, *,
                                return_info: bool = False):
    """``int_0^inf s**exponent (s+A)^{-p} ds``.

    ``exponent = 1 - gamma, p = 2`` is the ``pi/sin(pi gamma) (1-gamma) A**-gamma``
    identity.
    """
    A = as_operator(A)
    p = int(p)
    if p < 1:
        raise InvalidParams("p must be >= 1")
    res = integrate_half_line(resolvent_integrand(A, p), float(exponent), float(p), scheme,
                              spectral_scales(A))
    return (res.value, res) if return_info else res.value


def weighted_resolvent_closed_form(A, gamma: float):
    """``pi/sin(pi gamma) * (1-gamma) * A**-gamma`` for 0 < gamma < 2, gamma != 1."""
    if not 0.0 < gamma < 2.0 or gamma == 1.0:
        raise InvalidParams(f"gamma must lie in (0, 2) without 1, got {gamma}")
    return math.pi / math.sin(math.pi * gamma) * (1.0 - gamma) * matrix_power(A, -gamma)


def _check_cov(gamma, omega, theta):
    if not omega > 0 or not theta > 0:
        raise InvalidParams("omega and theta must be positive")
    if not 1.0 - theta < gamma < 1.0:
        raise InvalidParams(f"need 1 - theta < gamma < 1, got gamma={gamma}, theta={theta}")


def cov_beta(gamma: float, theta: float) -> float:
    return 1.0 + (gamma - 1.0) / theta


def change_of_variables_integral(A, gamma: float, omega: float, theta: float,
                                 scheme: QuadratureScheme = DEFAULT_SCHEME, *,
                                 certify: bool = True, return_info: bool = False):
    """``int_0^inf s**-gamma (omega s**theta + A)^{-1} ds`` integrated as written.

    No substitution is applied, so comparing against
    :func:`change_of_variables_closed_form` actually tests the identity.
    """
    A = as_operator(A)
    _check_cov(gamma, omega, theta)
    _check_positive(A, certify)
    n = A.shape[0]
    eye = np.eye(n)

    def f(s):
        return np.linalg.solve(omega * s ** theta * eye + A, eye)

    lo, hi = spectral_scales(A)
    scales = ((lo / omega) ** (1.0 / theta), (hi / omega) ** (1.0 / theta))
    res = integrate_half_line(f, -gamma, theta, scheme, scales)
    return (res.value, res) if return_info else res.value


def change_of_variables_closed_form(A, gamma: float, omega: float, theta: float):
    """``(1/theta) omega**(-(1-gamma)/theta) pi/sin(pi beta) A**-beta``,
    ``beta = 1 + (gamma-1)/theta``."""
    _check_cov(gamma, omega, theta)
    beta = cov_beta(gamma, theta)
    coef = (1.0 / theta) * omega ** (-(1.0 - gamma) / theta) * math.pi / math.sin(math.pi * beta)
    return coef * matrix_power(A, -beta)


def scalar_identity_integral(alpha: float, scheme: QuadratureScheme = DEFAULT_SCHEME) -> float:
    """Quadrature of ``int_0^inf s**-alpha / (s + 1) ds`` (exact: pi/sin(pi alpha))."""
    res = integrate_half_line(lambda s: np.array([[1.0 / (s + 1.0)]]), -alpha, 1.0, scheme,
                              (1.0, 1.0))
    return float(res.value[0, 0])
