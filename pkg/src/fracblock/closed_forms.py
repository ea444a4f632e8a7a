"""Explicit fractional powers of the four block families.

Scalar powers of the entries (``A**-alpha/2`` and friends) always come from
the dense oracle, never from quadrature, so these formulas stay an
independent route.

Families (``A`` positive, ``I`` identity)::

    lambda1   = [[A, 0, 0], [0, A, 0], [I, 0, A]]
    lambda312 = [[0, -I, 0], [A, 2 A^1/2, 0], [0, 0, 2 A^1/2]]
    lambda4   = [[0, 0, -I], [0, A, 0], [A, 0, 0]]
    lambda3   = [[A1, 0, 0], [0, A2, 0], [I, 0, A3]]
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .block3 import (BlockOperator3, assemble, block_fracpow_quadrature,
                     commutation_report)
from .errors import (BranchCutViolation, InvalidAlpha, NonCommuting,
                     SingularDifference)
from .operators import as_operator, certify_positive, eigenvalues, spectral_norm
from .oracle import matrix_power
from .quadrature import (DEFAULT_SCHEME, QuadratureScheme, integrate_half_line,
                         spectral_scales)

COMMUTATION_RTOL = 1e-10
FAMILIES = ("lambda1", "lambda312", "lambda3", "lambda4")


# --- builders ---------------------------------------------------------------

def lambda1(A) -> BlockOperator3:
    A = as_operator(A)
    Z, I = np.zeros_like(A), np.eye(A.shape[0])
    return assemble([[A, Z, Z], [Z, A, Z], [I, Z, A]])


def lambda312(A, sqrt_A=None) -> BlockOperator3:
    A = as_operator(A)
    S = matrix_power(A, 0.5) if sqrt_A is None else as_operator(sqrt_A)
    Z, I = np.zeros_like(A), np.eye(A.shape[0])
    return assemble([[Z, -I, Z], [A, 2 * S, Z], [Z, Z, 2 * S]])


def lambda4(A) -> BlockOperator3:
    A = as_operator(A)
    Z, I = np.zeros_like(A), np.eye(A.shape[0])
    return assemble([[Z, Z, -I], [Z, A, Z], [A, Z, Z]])


def lambda3(A1, A2, A3) -> BlockOperator3:
    A1, A2, A3 = (as_operator(X) for X in (A1, A2, A3))
    Z, I = np.zeros_like(A1), np.eye(A1.shape[0])
    return assemble([[A1, Z, Z], [Z, A2, Z], [I, Z, A3]])


def build_family(family: str, A=None, A1=None, A2=None, A3=None) -> BlockOperator3:
    if family == "lambda3":
        return lambda3(A1, A2, A3)
    return {"lambda1": lambda1, "lambda312": lambda312, "lambda4": lambda4}[family](A)


# --- closed forms -------------------------------------------------------------

def _sign(sign) -> int:
    if sign in ("-", -1):
        return -1
    if sign in ("+", 1):
        return 1
    raise ValueError(f"sign must be '+' or '-', got {sign!r}")


def _check(alpha, extended):
    hi_ok = alpha <= 1.0 if extended else alpha < 1.0
    if not (alpha > 0.0 and hi_ok):
        rng = "(0, 1]" if extended else "(0, 1)"
        raise InvalidAlpha(f"alpha must lie in {rng}, got {alpha}")


def lambda1_fracpow(A, alpha: float, sign="-", *, extended: bool = False,
                    certify: bool = True) -> BlockOperator3:
    """``lambda1**(-+alpha)``: diagonal ``A**(-+alpha)``, corner ``-+alpha A**(-+alpha - 1)``."""
    A = as_operator(A)
    alpha = float(alpha)
    _check(alpha, extended)
    if certify:
        certify_positive(A)
    sg = _sign(sign)
    z = sg * alpha
    P = matrix_power(A, z)
    C = z * matrix_power(A, z - 1.0)
    Z = np.zeros_like(P)
    return assemble([[P, Z, Z], [Z, P, Z], [C, Z, P]])


def lambda312_fracpow(A, alpha: float, sign="-", *, extended: bool = False,
                      certify: bool = True) -> BlockOperator3:
    A = as_operator(A)
    alpha = float(alpha)
    _check(alpha, extended)
    if certify:
        certify_positive(A)
    Z = np.zeros(A.shape, dtype=np.result_type(A, float))
    if _sign(sign) < 0:
        H = matrix_power(A, -alpha / 2)
        return assemble([
            [(1 + alpha) * H, alpha * matrix_power(A, -(1 + alpha) / 2), Z],
            [-alpha * matrix_power(A, (1 - alpha) / 2), (1 - alpha) * H, Z],
            [Z, Z, 2.0 ** -alpha * H],
        ])
    H = matrix_power(A, alpha / 2)
    return assemble([
        [(1 - alpha) * H, -alpha * matrix_power(A, (alpha - 1) / 2), Z],
        [alpha * matrix_power(A, (1 + alpha) / 2), (1 + alpha) * H, Z],
        [Z, Z, 2.0 ** alpha * H],
    ])


def lambda4_fracpow(A, alpha: float, sign="-", *, extended: bool = False,
                    certify: bool = True) -> BlockOperator3:
    A = as_operator(A)
    alpha = float(alpha)
    _check(alpha, extended)
    if certify:
        certify_positive(A)
    c, s = math.cos(math.pi * alpha / 2), math.sin(math.pi * alpha / 2)
    Z = np.zeros(A.shape, dtype=np.result_type(A, float))
    if _sign(sign) < 0:
        H = matrix_power(A, -alpha / 2)
        return assemble([
            [c * H, Z, s * matrix_power(A, -(alpha + 1) / 2)],
            [Z, matrix_power(A, -alpha), Z],
            [-s * matrix_power(A, (1 - alpha) / 2), Z, c * H],
        ])
    H = matrix_power(A, alpha / 2)
    return assemble([
        [c * H, Z, -s * matrix_power(A, (alpha - 1) / 2)],
        [Z, matrix_power(A, alpha), Z],
        [s * matrix_power(A, (1 + alpha) / 2), Z, c * H],
    ])


def _commute_tol(*mats):
    return COMMUTATION_RTOL * max(1.0, *(spectral_norm(M) for M in mats))


def _inv_difference(A1, A2):
    D = A1 - A2
    if spectral_norm(D) == 0.0 or np.linalg.cond(D) * np.finfo(float).eps * D.shape[0] > 1.0:
        raise SingularDifference("A1 - A2 is not invertible")
    return np.linalg.inv(D)


def lambda3_fracpow(A1, A2, A3, alpha: float, sign="-", *, extended: bool = False,
                    certify: bool = True, commutation_tol: float | None = None) -> BlockOperator3:
    """Corner block ``(A1 - A3)^{-1} (A1**z - A3**z)``, ``z = -+alpha``."""
    A1, A2, A3 = (as_operator(X) for X in (A1, A2, A3))
    alpha = float(alpha)
    _check(alpha, extended)
    if certify:
        for X in (A1, A2, A3):
            certify_positive(X)
    tol = _commute_tol(A1, A2, A3) if commutation_tol is None else commutation_tol
    for X, Y in ((A1, A2), (A1, A3), (A2, A3)):
        if spectral_norm(X @ Y - Y @ X) > tol:
            raise NonCommuting("A1, A2, A3 must commute pairwise")
    for X, Y in ((A1, A2), (A1, A3), (A2, A3)):
        _inv_difference(X, Y)
    z = _sign(sign) * alpha
    P1, P2, P3 = (matrix_power(X, z) for X in (A1, A2, A3))
    C = _inv_difference(A1, A3) @ (P1 - P3)
    Z = np.zeros_like(P1)
    return assemble([[P1, Z, Z], [Z, P2, Z], [C, Z, P3]])


def family_fracpow(family: str, alpha: float, sign="-", *, A=None, A1=None, A2=None, A3=None,
                   extended: bool = False, certify: bool = True) -> BlockOperator3:
    if family == "lambda3":
        return lambda3_fracpow(A1, A2, A3, alpha, sign, extended=extended, certify=certify)
    fn = {"lambda1": lambda1_fracpow, "lambda312": lambda312_fracpow,
          "lambda4": lambda4_fracpow}[family]
    return fn(A, alpha, sign, extended=extended, certify=certify)


def family_block_quadrature(family: str, alpha: float, scheme: QuadratureScheme = DEFAULT_SCHEME,
                            **operands) -> BlockOperator3:
    """Cofactor-resolvent quadrature of ``family**-alpha``."""
    return block_fracpow_quadrature(build_family(family, **operands), alpha, scheme)


# --- second resolvent identity ---------------------------------------------

@dataclass(frozen=True)
class ResolventProduct:
    value: np.ndarray
    direct: np.ndarray
    discrepancy: float


def second_resolvent_product(A1, A2, lam: float, *,
                             commutation_tol: float | None = None) -> ResolventProduct:
    """``(A1-A2)^{-1} [(lam+A2)^{-1} - (lam+A1)^{-1}]`` next to the direct
    product ``(lam+A2)^{-1} (lam+A1)^{-1}``."""
    from .errors import SingularResolvent

    A1, A2 = as_operator(A1), as_operator(A2)
    n = A1.shape[0]
    Dinv = _inv_difference(A1, A2)
    I = np.eye(n)
    try:
        R1 = np.linalg.solve(lam * I + A1, I)
        R2 = np.linalg.solve(lam * I + A2, I)
    except np.linalg.LinAlgError as exc:
        raise SingularResolvent(f"-{lam} is an eigenvalue of A1 or A2") from exc
    D = A1 - A2
    tol = _commute_tol(D, R2) if commutation_tol is None else commutation_tol
    if spectral_norm(D @ R2 - R2 @ D) > tol * max(1.0, spectral_norm(D) * spectral_norm(R2)):
        raise NonCommuting("A1 - A2 does not commute with the resolvent of A2")
    value = Dinv @ (R2 - R1)
    direct = R2 @ R1
    return ResolventProduct(value, direct, spectral_norm(value - direct))


@dataclass(frozen=True)
class FracProduct:
    value: np.ndarray
    quadrature: np.ndarray
    discrepancy: float  # relative, spectral norm


def resolvent_product_fracpow(A1, A2, alpha: float,
                              scheme: QuadratureScheme = DEFAULT_SCHEME) -> FracProduct:
    """``(A1-A2)^{-1} [A2**-alpha - A1**-alpha]`` checked against quadrature of
    ``sin(pi alpha)/pi int s**-alpha (s+A2)^{-1} (s+A1)^{-1} ds``."""
    A1, A2 = as_operator(A1), as_operator(A2)
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise InvalidAlpha(f"alpha must lie in (0, 1), got {alpha}")
    Dinv = _inv_difference(A1, A2)
    value = Dinv @ (matrix_power(A2, -alpha) - matrix_power(A1, -alpha))
    n = A1.shape[0]
    I = np.eye(n)

    def f(s):
        return np.linalg.solve(s * I + A2, np.linalg.solve(s * I + A1, I))

    lo1, hi1 = spectral_scales(A1)
    lo2, hi2 = spectral_scales(A2)
    res = integrate_half_line(f, -alpha, 2.0, scheme, (min(lo1, lo2), max(hi1, hi2)))
    quad = math.sin(math.pi * alpha) / math.pi * res.value
    return FracProduct(value, quad, spectral_norm(value - quad) / spectral_norm(value))


# --- spectra ------------------------------------------------------------------

def spectral_map(eigs, alpha: float) -> np.ndarray:
    """Principal powers ``exp(alpha Log sigma)``."""
    w = np.asarray(eigs, dtype=complex)
    scale = max(1.0, float(np.abs(w).max(initial=0.0)))
    bad = (np.abs(w.imag) <= 1e-14 * scale) & (w.real <= 0.0)
    if np.any(bad):
        raise BranchCutViolation(f"eigenvalue(s) {w[bad][:3]} on the closed negative real axis")
    return np.exp(alpha * np.log(w))


def lambda4_base_spectrum(mu) -> np.ndarray:
    """``{mu_k} U {+-i sqrt(mu_k)}``."""
    mu = np.asarray(mu, dtype=float)
    r = np.sqrt(mu)
    return np.concatenate([mu.astype(complex), 1j * r, -1j * r])


def match_spectra(predicted, observed):
    """Greedy nearest-neighbour pairing after a lexicographic sort.

    Returns the permutation of ``observed`` aligned with sorted ``predicted``
    and the per-pair distances.
    """
    p = np.asarray(predicted, dtype=complex)
    o = np.asarray(observed, dtype=complex)
    if len(p) != len(o):
        raise ValueError("spectra of different sizes")
    order = np.lexsort((p.imag, p.real))
    used = np.zeros(len(o), dtype=bool)
    picked = np.empty(len(p), dtype=int)
    for k, i in enumerate(order):
        d = np.where(used, np.inf, np.abs(o - p[i]))
        j = int(np.argmin(d))
        used[j] = True
        picked[k] = j
    return order, picked, np.abs(o[picked] - p[order])


@dataclass(frozen=True)
class SpectrumReport:
    base_eigs: np.ndarray
    alpha: float
    predicted: np.ndarray
    observed: np.ndarray
    max_match_residual: float
    residuals: np.ndarray

    def rows(self):
        for b, p, o, r in zip(self.base_eigs, self.predicted, self.observed, self.residuals):
            yield (b.real, b.imag, p.real, p.imag, o.real, o.imag, r)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["re_base", "im_base", "re_pred", "im_pred", "re_obs", "im_obs", "residual"])
            for row in self.rows():
                w.writerow([repr(float(x)) for x in row])


def spectrum_report(B, alpha: float, power) -> SpectrumReport:
    """Compare ``eig(power)`` with ``eig(B)**alpha``.

    ``power`` must approximate ``B**alpha`` (``alpha`` signed: pass
    ``-alpha`` for negative powers).  Rows are ordered by predicted value.
    """
    M = B.assembled if isinstance(B, BlockOperator3) else as_operator(B)
    base = eigenvalues(M)
    pred = spectral_map(base, alpha)
    obs = eigenvalues(power)
    order, picked, res = match_spectra(pred, obs)
    return SpectrumReport(base[order], float(alpha), pred[order], obs[picked],
                          float(res.max(initial=0.0)), res)
