"""Dense operators, resolvents and grid-sampled positivity certificates.

Operators are plain square numpy arrays.  :class:`OperatorMatrix` only
exists to carry a label through the JSON format; every function accepts
anything :func:`numpy.asarray` understands.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg as sla

from .errors import (DimensionMismatch, EigenFailure, IllConditioned,
                     NotPositive, SingularResolvent)

COND_CAP = 1e12
RESIDUAL_FACTOR = 1e-10


@dataclass(frozen=True)
class OperatorMatrix:
    """A labelled dense square matrix (the JSON-facing operator type)."""

    entries: np.ndarray
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "entries", as_operator(self.entries))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)

    def to_json(self) -> dict:
        return matrix_to_json(self.entries, self.label)

    @classmethod
    def from_json(cls, obj: dict) -> "OperatorMatrix":
        return cls(matrix_from_json(obj), obj.get("label", ""))


def as_operator(A) -> np.ndarray:
    """Validate ``A`` as a finite square matrix and return it as an array."""
    A = np.asarray(A)
    if A.ndim == 0:
        A = A.reshape(1, 1)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {A.shape}")
    if not np.issubdtype(A.dtype, np.number):
        raise DimensionMismatch(f"non-numeric matrix dtype {A.dtype}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    if not np.iscomplexobj(A):
        A = A.astype(float)
    return A


def spectral_norm(A) -> float:
    """Largest singular value."""
    A = as_operator(A)
    if A.size == 0:
        return 0.0
    return float(np.linalg.norm(A, 2))


def eigenvalues(A) -> np.ndarray:
    """All eigenvalues (multiplicities kept), sorted by (real, imag)."""
    A = as_operator(A)
    try:
        w = np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(str(exc)) from exc
    w = w.astype(complex)
    return w[np.lexsort((w.imag, w.real))]


def _shifted(A, s):
    n = A.shape[0]
    M = A + s * np.eye(n)
    return M


def resolvent(A, s, *, cond_cap: float = COND_CAP) -> np.ndarray:
    """Return ``(sI + A)^{-1}`` with a verified residual.

    Raises
    ------
    SingularResolvent
        ``-s`` is numerically an eigenvalue of ``A``.
    IllConditioned
        ``cond(sI + A)`` exceeds ``cond_cap``.
    """
    A = as_operator(A)
    n = A.shape[0]
    M = _shifted(A, s)
    cond = np.linalg.cond(M)
    if not np.isfinite(cond) or cond * np.finfo(float).eps * n > 1.0:
        raise SingularResolvent(f"-{s} is numerically an eigenvalue (cond={cond:.3g})")
    if cond > cond_cap:
        raise IllConditioned(f"cond(sI+A)={cond:.3g} exceeds cap {cond_cap:.3g}")
    R = np.linalg.solve(M, np.eye(n, dtype=M.dtype))
    resid = spectral_norm(M @ R - np.eye(n))
    if resid > RESIDUAL_FACTOR * max(1.0, spectral_norm(A)):
        raise IllConditioned(f"resolvent residual {resid:.3g} too large")
    return R


def resolvent_power(A, s, p: int = 1, rhs=None) -> np.ndarray:
    """``(sI + A)^{-p} @ rhs`` by ``p`` solves against one LU factorisation.

    Unchecked fast path used at quadrature nodes.
    """
    A = np.asarray(A)
    n = A.shape[0]
    lu = sla.lu_factor(_shifted(A, s), check_finite=False)
    X = np.eye(n, dtype=np.result_type(A, s, float)) if rhs is None else rhs
    for _ in range(p):
        X = sla.lu_solve(lu, X, check_finite=False)
    return X


@dataclass(frozen=True)
class GridSpec:
    """Sampling of ``s >= 0``: zero plus log-spaced points up to
    ``max(s_max_min, s_max_factor * ||A||)``."""

    n_points: int = 64
    s_min: float = 1e-6
    s_max_factor: float = 1e3
    s_max_min: float = 1e3

    def __post_init__(self):
        if self.n_points < 32:
            raise ValueError("positivity grid needs at least 32 points")
        if self.s_max_factor < 1e3:
            raise ValueError("s_max must be at least 1e3 * ||A||")

    def points(self, norm_A: float) -> np.ndarray:
        s_max = max(self.s_max_min, self.s_max_factor * norm_A)
        tail = np.logspace(math.log10(self.s_min), math.log10(s_max), self.n_points - 1)
        return np.concatenate([[0.0], tail])


@dataclass(frozen=True)
class PositivityCertificate:
    M: float
    theta_M: float
    r0: float
    s_grid: tuple = field(repr=False)
    sup_bound: float

    def to_json(self) -> dict:
        return {"M": self.M, "theta_M": self.theta_M, "r0": self.r0,
                "sup_bound": self.sup_bound, "grid": list(self.s_grid)}


def sector_angle(M: float) -> float:
    return math.asin(1.0 / (2.0 * M))


def certify_positive(A, grid: GridSpec | None = None, *, strict: bool = True) -> PositivityCertificate:
    """Grid evidence that ``(1+s)||(s+A)^{-1}|| <= M`` for all ``s >= 0``.

    With ``strict`` (default) any eigenvalue with ``Re <= 0`` is rejected.
    ``strict=False`` only rejects eigenvalues on the closed negative real
    axis, which is exactly what the resolvent condition requires; operators
    such as the rotation-like block with spectrum ``+-i sqrt(mu)`` need it.
    """
    A = as_operator(A)
    grid = grid or GridSpec()
    w = eigenvalues(A)
    scale = max(1.0, float(np.max(np.abs(w)))) if w.size else 1.0
    if strict:
        bad = w[w.real <= 0]
    else:
        tol = 1e-12 * scale
        bad = w[(np.abs(w.imag) <= tol) & (w.real <= tol)]
    if bad.size:
        raise NotPositive(f"eigenvalue(s) {bad[:3]} violate positivity")

    s_grid = grid.points(spectral_norm(A))
    n = A.shape[0]
    sup = 0.0
    for s in s_grid:
        M_s = _shifted(A, s)
        sv = np.linalg.svd(M_s, compute_uv=False)
        if sv[-1] <= np.finfo(float).eps * n * sv[0]:
            raise NotPositive(f"sI+A singular at s={s:g}")
        sup = max(sup, (1.0 + s) / sv[-1])
    M = max(1.0, sup)
    return PositivityCertificate(M=M, theta_M=sector_angle(M), r0=0.99 / (2.0 * M),
                                 s_grid=tuple(float(s) for s in s_grid), sup_bound=sup)


# --- JSON matrix format ---------------------------------------------------

def matrix_to_json(A, label: str = "") -> dict:
    A = as_operator(A)
    flat = A.reshape(-1)
    if np.iscomplexobj(flat) and np.any(flat.imag != 0):
        entries = [[float(z.real), float(z.imag)] for z in flat]
    else:
        entries = [float(np.real(z)) for z in flat]
    obj = {"dim": A.shape[0], "entries": entries}
    if label:
        obj["label"] = label
    return obj


def matrix_from_json(obj: dict) -> np.ndarray:
    try:
        n = int(obj["dim"])
        raw = obj["entries"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed matrix JSON: {exc}") from exc
    if n < 1 or len(raw) != n * n:
        raise ValueError(f"matrix JSON: expected {n * n} entries, got {len(raw)}")
    vals = []
    for e in raw:
        if isinstance(e, (list, tuple)):
            if len(e) != 2:
                raise ValueError(f"complex entry must be [re, im], got {e!r}")
            vals.append(complex(float(e[0]), float(e[1])))
        else:
            vals.append(complex(float(e)))
    A = np.array(vals, dtype=complex).reshape(n, n)
    if not np.any(A.imag):
        A = A.real.copy()
    return as_operator(A)


def load_matrix(path) -> np.ndarray:
    return matrix_from_json(json.loads(Path(path).read_text()))


def save_matrix(path, A, label: str = "") -> None:
    Path(path).write_text(json.dumps(matrix_to_json(A, label), indent=1) + "\n")
