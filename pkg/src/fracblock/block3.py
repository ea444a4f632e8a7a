"""3x3 block operator matrices and the cofactor resolvent.

All three component spaces have the same dimension ``n``.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (AdjugateFormulaFailed, DimensionMismatch, InvalidAlpha,
                     NonCommuting, SingularDeterminant)
from .operators import (as_operator, certify_positive, matrix_from_json,
                        matrix_to_json, spectral_norm)
from .quadrature import (ALPHA_EDGE, DEFAULT_SCHEME, QuadratureScheme,
                         balakrishnan_e1, integrate_half_line, spectral_scales)

COMMUTATION_RTOL = 1e-10
RESIDUAL_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class BlockOperator3:
    """Nine ``n x n`` blocks and their assembled ``3n x 3n`` form."""

    blocks: np.ndarray  # shape (3, 3, n, n)

    @property
    def n(self) -> int:
        return self.blocks.shape[-1]

    @property
    def assembled(self) -> np.ndarray:
        return self._assembled

    def __post_init__(self):
        B = self.blocks
        if B.ndim != 4 or B.shape[:2] != (3, 3) or B.shape[2] != B.shape[3]:
            raise DimensionMismatch(f"expected (3, 3, n, n) blocks, got {B.shape}")
        object.__setattr__(self, "_assembled", np.block([[B[i, j] for j in range(3)] for i in range(3)]))

    def __getitem__(self, ij):
        return self.blocks[ij]

    @classmethod
    def from_assembled(cls, M) -> "BlockOperator3":
        M = as_operator(M)
        if M.shape[0] % 3:
            raise DimensionMismatch(f"size {M.shape[0]} is not divisible by 3")
        n = M.shape[0] // 3
        return cls(M.reshape(3, n, 3, n).transpose(0, 2, 1, 3).copy())

    def to_json(self) -> dict:
        return {"n": self.n,
                "blocks": [[matrix_to_json(self.blocks[i, j]) for j in range(3)] for i in range(3)]}

    @classmethod
    def from_json(cls, obj: dict) -> "BlockOperator3":
        try:
            grid = obj["blocks"]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed block JSON: {exc}") from exc
        if len(grid) != 3 or any(len(row) != 3 for row in grid):
            raise ValueError("block JSON must hold a 3x3 grid")
        out = assemble([[matrix_from_json(m) for m in row] for row in grid])
        if "n" in obj and int(obj["n"]) != out.n:
            raise DimensionMismatch(f"declared n={obj['n']} but blocks are {out.n}x{out.n}")
        return out


def assemble(entries) -> BlockOperator3:
    """Build a :class:`BlockOperator3` from a 3x3 nested list of matrices."""
    if len(entries) != 3 or any(len(row) != 3 for row in entries):
        raise DimensionMismatch("need a 3x3 grid of blocks")
    mats = [[as_operator(entries[i][j]) for j in range(3)] for i in range(3)]
    shapes = {m.shape for row in mats for m in row}
    if len(shapes) != 1:
        raise DimensionMismatch(f"blocks have differing shapes {sorted(shapes)}")
    dtype = np.result_type(*[m for row in mats for m in row])
    return BlockOperator3(np.array(mats, dtype=dtype))


def load_block(path) -> BlockOperator3:
    return BlockOperator3.from_json(json.loads(Path(path).read_text()))


def save_block(path, B: BlockOperator3) -> None:
    Path(path).write_text(json.dumps(B.to_json(), indent=1) + "\n")


@dataclass(frozen=True)
class CommutationReport:
    max_commutator_norm: float
    worst_pair: tuple


def commutation_report(B: BlockOperator3) -> CommutationReport:
    """Largest ``||X Y - Y X||`` over the 36 unordered pairs of blocks."""
    idx = [(i, j) for i in range(3) for j in range(3)]
    worst, pair = 0.0, (idx[0], idx[1])
    for p, q in itertools.combinations(idx, 2):
        X, Y = B.blocks[p], B.blocks[q]
        c = spectral_norm(X @ Y - Y @ X)
        if c > worst:
            worst, pair = c, (p, q)
    return CommutationReport(worst, pair)


def default_commutation_tol(B: BlockOperator3) -> float:
    return COMMUTATION_RTOL * max(1.0, max(spectral_norm(B.blocks[i, j])
                                           for i in range(3) for j in range(3)))


def _cofactors(B, s):
    """Cofactor grid and determinant expression of ``s + Lambda`` (operator order kept)."""
    A = B.blocks
    n = B.n
    I = np.eye(n)
    a11, a12, a13 = A[0, 0], A[0, 1], A[0, 2]
    a21, a22, a23 = A[1, 0], A[1, 1], A[1, 2]
    a31, a32, a33 = A[2, 0], A[2, 1], A[2, 2]
    s11, s22, s33 = s * I + a11, s * I + a22, s * I + a33
    adj = [
        [s22 @ s33 - a23 @ a32, a32 @ a13 - a12 @ s33, a12 @ a23 - a13 @ s22],
        # (2,1): cofactor is a23 a31 - a21 (s + a33)
        [a23 @ a31 - a21 @ s33, s11 @ s33 - a13 @ a31, a21 @ a13 - a23 @ s11],
        [a21 @ a32 - a31 @ s22, a31 @ a12 - a32 @ s11, s22 @ s11 - a21 @ a12],
    ]
    det = (s11 @ s22 @ s33 - a21 @ a12 @ s33 - a31 @ a13 @ s22
           - a23 @ a32 @ s11 + a21 @ a13 @ a32 + a31 @ a12 @ a23)
    return adj, det


def _adjugate_raw(B, s):
    adj, det = _cofactors(B, s)
    try:
        dinv = np.linalg.inv(det)
    except np.linalg.LinAlgError as exc:
        raise SingularDeterminant(f"determinant expression singular at s={s}") from exc
    if not np.all(np.isfinite(dinv)) or np.linalg.cond(det) * np.finfo(float).eps > 1.0:
        raise SingularDeterminant(f"determinant expression singular at s={s}")
    return np.block([[adj[i][j] @ dinv for j in range(3)] for i in range(3)])


def _resolvent_residual(B, s, R):
    N = B.assembled.shape[0]
    return spectral_norm((s * np.eye(N) + B.assembled) @ R - np.eye(N))


@dataclass(frozen=True, eq=False)
class AdjugateResolvent:
    value: BlockOperator3
    residual: float


def adjugate_resolvent(B: BlockOperator3, s: float, *, commutation_tol: float | None = None,
                       residual_tol: float = RESIDUAL_TOL,
                       check_commutation: bool = True) -> AdjugateResolvent:
    """``(s + Lambda)^{-1}`` from the cofactor formula, residual-checked.

    Raises
    ------
    NonCommuting
        Some pair of blocks fails to commute within ``commutation_tol``.
    SingularDeterminant
        The operator determinant is not invertible.
    AdjugateFormulaFailed
        The cofactor expression does not invert ``s + Lambda``.
    """
    if check_commutation:
        tol = default_commutation_tol(B) if commutation_tol is None else commutation_tol
        rep = commutation_report(B)
        if rep.max_commutator_norm > tol:
            raise NonCommuting(f"blocks {rep.worst_pair} have commutator norm "
                               f"{rep.max_commutator_norm:.3g} > {tol:.3g}")
    R = _adjugate_raw(B, s)
    resid = _resolvent_residual(B, s, R)
    if not resid <= residual_tol:
        raise AdjugateFormulaFailed(f"cofactor resolvent residual {resid:.3g} > {residual_tol:.3g} "
                                    f"at s={s}", resid)
    return AdjugateResolvent(BlockOperator3.from_assembled(R), resid)


def _check_alpha(alpha):
    if not ALPHA_EDGE <= alpha <= 1.0 - ALPHA_EDGE:
        raise InvalidAlpha(f"alpha must lie in [{ALPHA_EDGE}, {1 - ALPHA_EDGE}], got {alpha}")


def block_fracpow_quadrature(B: BlockOperator3, alpha: float,
                             scheme: QuadratureScheme = DEFAULT_SCHEME, *,
                             commutation_tol: float | None = None,
                             residual_tol: float = RESIDUAL_TOL,
                             certify: bool = True) -> BlockOperator3:
    """``Lambda**-alpha`` entrywise: ``sin(pi alpha)/pi int s**-alpha A~_ij(s) ds``
    with ``A~(s)`` the cofactor resolvent at each node.

    The residual of every node resolvent is checked, so a failure of the
    cofactor formula anywhere on the path raises instead of integrating a
    wrong resolvent.
    """
    alpha = float(alpha)
    _check_alpha(alpha)
    tol = default_commutation_tol(B) if commutation_tol is None else commutation_tol
    rep = commutation_report(B)
    if rep.max_commutator_norm > tol:
        raise NonCommuting(f"blocks {rep.worst_pair} have commutator norm "
                           f"{rep.max_commutator_norm:.3g} > {tol:.3g}")
    if certify:
        certify_positive(B.assembled, strict=False)

    def f(s):
        R = _adjugate_raw(B, s)
        resid = _resolvent_residual(B, s, R)
        if not resid <= residual_tol:
            raise AdjugateFormulaFailed(f"cofactor resolvent residual {resid:.3g} at s={s:g}", resid)
        return R

    res = integrate_half_line(f, -alpha, 1.0, scheme, spectral_scales(B.assembled))
    return BlockOperator3.from_assembled(math.sin(math.pi * alpha) / math.pi * res.value)


def assembled_fracpow_quadrature(B: BlockOperator3, alpha: float,
                                 scheme: QuadratureScheme = DEFAULT_SCHEME) -> np.ndarray:
    """e1 applied to the assembled matrix, ignoring block structure."""
    alpha = float(alpha)
    _check_alpha(alpha)
    certify_positive(B.assembled, strict=False)
    return balakrishnan_e1(B.assembled, alpha, scheme, certify=False)
