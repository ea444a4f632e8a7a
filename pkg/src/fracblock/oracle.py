"""Brute-force principal matrix powers and exponentials.

This is the ground truth every other route is compared against, so it uses
nothing but dense factorisations: an eigendecomposition when the
eigenvector basis is well conditioned, otherwise a blocked Schur-Parlett
recurrence with clustered eigenvalues (Davies & Higham, 2003).  Defective
inputs such as the assembled lower-triangular block operators always take
the Schur path.
"""
from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.linalg import lapack

from .errors import (BranchCutViolation, DimensionMismatch,
                     IllConditionedSimilarity, ZeroReference)
from .operators import as_operator, spectral_norm

EIG_COND_CAP = 1e8
BRANCH_ARG_MARGIN = 1e-6
BRANCH_ABS_MIN = 1e-12
CLUSTER_RTOL = 1e-6
SCHUR_COND_CAP = 1e14
_TAYLOR_MAX_TERMS = 400


class Method(enum.Enum):
    EIGEN = "eigen"
    SCHUR_RECURRENCE = "schur"
    DIRECT = "direct"  # integer exponents: repeated multiplication / inversion


@dataclass(frozen=True)
class MatrixFunctionResult:
    value: np.ndarray
    method: Method
    condition_estimate: float


class _Power:
    def __init__(self, z):
        self.z = z

    def __call__(self, x):
        return np.exp(self.z * np.log(np.asarray(x, dtype=complex)))

    def taylor(self, sigma):
        c = cmath.exp(self.z * cmath.log(sigma))
        k = 0
        while True:
            yield c
            c = c * (self.z - k) / ((k + 1) * sigma)
            k += 1


class _Exp:
    def __call__(self, x):
        return np.exp(np.asarray(x, dtype=complex))

    def taylor(self, sigma):
        c = cmath.exp(sigma)
        k = 0
        while True:
            yield c
            c = c / (k + 1)
            k += 1


def cluster_eigenvalues(w, rtol: float = CLUSTER_RTOL) -> np.ndarray:
    """Label eigenvalues so that chains of relatively close values share a label."""
    w = np.asarray(w)
    n = len(w)
    labels = -np.ones(n, dtype=int)
    nxt = 0
    for i in range(n):
        if labels[i] >= 0:
            continue
        labels[i] = nxt
        stack = [i]
        while stack:
            a = stack.pop()
            for b in range(n):
                if labels[b] < 0:
                    scale = max(abs(w[a]), abs(w[b]), 1e-300)
                    if abs(w[a] - w[b]) <= rtol * scale:
                        labels[b] = nxt
                        stack.append(b)
        nxt += 1
    return labels


def _reorder_schur(T, Z, labels):
    """Make equal labels contiguous on the diagonal of ``T`` (ztrexc swaps)."""
    T = np.asfortranarray(T.copy())
    Z = np.asfortranarray(Z.copy())
    labels = list(labels)
    order = []
    for lab in labels:
        if lab not in order:
            order.append(lab)
    pos = 0
    for lab in order:
        i = pos
        while i < len(labels):
            if labels[i] == lab:
                if i != pos:
                    T, Z, info = lapack.ztrexc(T, Z, i + 1, pos + 1, wantq=1)
                    if info != 0:
                        raise IllConditionedSimilarity(f"ztrexc failed (info={info})")
                    labels.insert(pos, labels.pop(i))
                pos += 1
            i += 1
    return np.asarray(T), np.asarray(Z), np.array(labels)


def _block_function(Tb, fn):
    m = Tb.shape[0]
    if m == 1:
        return fn(Tb.diagonal()).reshape(1, 1)
    sigma = complex(np.mean(Tb.diagonal()))
    N = Tb - sigma * np.eye(m)
    F = np.zeros_like(Tb, dtype=complex)
    P = np.eye(m, dtype=complex)
    small = 0
    for k, c in enumerate(fn.taylor(sigma)):
        term = c * P
        F += term
        tn = np.abs(term).max()
        if k >= m and tn <= np.finfo(float).eps * max(np.abs(F).max(), 1e-300):
            small += 1
            if small >= 2:
                return F
        else:
            small = 0
        if k >= _TAYLOR_MAX_TERMS:
            raise IllConditionedSimilarity("Taylor series on an eigenvalue cluster did not converge")
        P = P @ N
    return F  # pragma: no cover


def schur_parlett(A, fn, rtol: float = CLUSTER_RTOL):
    """Evaluate ``fn(A)`` by blocked Schur-Parlett.

    Returns the value and a condition proxy: ``||T||`` over the smallest
    separation between distinct clusters (1 when there is a single cluster).
    """
    A = as_operator(A).astype(complex)
    n = A.shape[0]
    T, Z = sla.schur(A, output="complex")
    labels = cluster_eigenvalues(T.diagonal(), rtol)
    T, Z, labels = _reorder_schur(T, Z, labels)

    starts = [0] + [i for i in range(1, n) if labels[i] != labels[i - 1]] + [n]
    blocks = [slice(starts[k], starts[k + 1]) for k in range(len(starts) - 1)]
    F = np.zeros((n, n), dtype=complex)
    for b in blocks:
        F[b, b] = _block_function(T[b, b], fn)

    min_sep = math.inf
    for j in range(len(blocks)):
        bj = blocks[j]
        for i in range(j - 1, -1, -1):
            bi = blocks[i]
            rhs = F[bi, bi] @ T[bi, bj] - T[bi, bj] @ F[bj, bj]
            for k in range(i + 1, j):
                bk = blocks[k]
                rhs += F[bi, bk] @ T[bk, bj] - T[bi, bk] @ F[bk, bj]
            F[bi, bj] = sla.solve_sylvester(T[bi, bi], -T[bj, bj], rhs)
            sep = np.min(np.abs(T.diagonal()[bi][:, None] - T.diagonal()[bj][None, :]))
            min_sep = min(min_sep, sep)
    cond = 1.0 if not math.isfinite(min_sep) else max(1.0, np.linalg.norm(T, 2) / min_sep)
    if cond > SCHUR_COND_CAP:
        raise IllConditionedSimilarity(f"cluster separation too small (cond proxy {cond:.3g})")
    return Z @ F @ Z.conj().T, cond


def _check_branch(w):
    bad = (np.abs(w) < BRANCH_ABS_MIN) | (np.abs(np.angle(w)) > math.pi - BRANCH_ARG_MARGIN)
    if np.any(bad):
        raise BranchCutViolation(f"eigenvalue(s) {w[bad][:3]} on or near the closed negative real axis")


def _maybe_real(A, X):
    # principal functions of real matrices are real
    if not np.iscomplexobj(A):
        if np.abs(X.imag).max(initial=0.0) <= 1e-12 * max(np.abs(X).max(initial=0.0), 1e-300):
            return X.real.copy()
    return X


def oracle_power(A, z: float, *, method: str | None = None,
                 eig_cond_cap: float = EIG_COND_CAP) -> MatrixFunctionResult:
    """Principal power ``A**z``.

    ``method`` forces ``"eigen"`` or ``"schur"``; by default the eigen path is
    used only when the eigenvector matrix is well conditioned and no two
    eigenvalues cluster.
    """
    A = as_operator(A)
    z = float(z)
    if method is None and z == round(z):
        k = int(round(z))
        if k >= 0:
            X = np.linalg.matrix_power(A, k)
        else:
            if np.linalg.cond(A) * np.finfo(float).eps > 1.0:
                raise BranchCutViolation(f"negative power {k} of a singular matrix")
            X = np.linalg.matrix_power(np.linalg.inv(A), -k)
        return MatrixFunctionResult(X, Method.DIRECT, max(1.0, float(np.linalg.cond(A))))

    w, V = np.linalg.eig(A)
    _check_branch(w)
    fn = _Power(z)

    if method in (None, "eigen"):
        vcond = float(np.linalg.cond(V))
        clustered = len(set(cluster_eigenvalues(w))) < len(w)
        if method == "eigen" or (vcond <= eig_cond_cap and not clustered):
            if vcond > 1.0 / np.finfo(float).eps:
                raise IllConditionedSimilarity(f"eigenvector matrix singular (cond {vcond:.3g})")
            X = np.linalg.solve(V.T, (V * fn(w)).T).T
            return MatrixFunctionResult(_maybe_real(A, X), Method.EIGEN, max(1.0, vcond))
    elif method != "schur":
        raise ValueError(f"unknown method {method!r}")

    X, cond = schur_parlett(A, fn)
    return MatrixFunctionResult(_maybe_real(A, X), Method.SCHUR_RECURRENCE, cond)


def matrix_power(A, z: float, **kw) -> np.ndarray:
    """Shorthand for ``oracle_power(A, z).value``."""
    return oracle_power(A, z, **kw).value


def matrix_exp(A) -> np.ndarray:
    """``exp(A)`` on the Schur form with clustered diagonal handling."""
    A = as_operator(A)
    X, _ = schur_parlett(A, _Exp())
    return _maybe_real(A, X)


def relative_error(X, Y) -> float:
    """``||X - Y|| / ||Y||`` in the spectral norm."""
    X = np.asarray(X)
    Y = np.asarray(Y)
    if X.shape != Y.shape:
        raise DimensionMismatch(f"shapes differ: {X.shape} vs {Y.shape}")
    ref = spectral_norm(Y) if Y.ndim == 2 else float(np.linalg.norm(Y))
    if ref == 0.0:
        raise ZeroReference("reference has zero norm")
    diff = X - Y
    num = spectral_norm(diff) if diff.ndim == 2 else float(np.linalg.norm(diff))
    return num / ref
