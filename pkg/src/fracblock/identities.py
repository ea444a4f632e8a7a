"""Numerical reproduction of the integral identities, as a pass/fail table."""
from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import quadrature as q
from .closed_forms import resolvent_product_fracpow, second_resolvent_product
from .oracle import relative_error
from .pde_lab import dirichlet_laplacian

ALPHAS = tuple(round(0.1 * k, 1) for k in range(1, 10))
WEIGHTED_GAMMAS = (0.25, 0.5, 0.75, 1.25, 1.75)
COV_GRID = tuple(itertools.product((0.25, 0.5, 0.75), (0.5, 1.0, 2.0), (1.5, 2.0, 3.0)))


@dataclass(frozen=True)
class IdentityCheck:
    identity: str
    params: str
    error: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(self.error <= self.tol)


def scalar_balakrishnan(scheme=q.DEFAULT_SCHEME, tol: float = 1e-8):
    for a in ALPHAS:
        exact = math.pi / math.sin(math.pi * a)
        err = abs(q.scalar_identity_integral(a, scheme) - exact) / exact
        yield IdentityCheck("scalar_balakrishnan", f"alpha={a}", err, tol)


def weighted_resolvent_identity(A, scheme=q.DEFAULT_SCHEME, tol: float | None = None):
    tol = 10 * scheme.rel_tol if tol is None else tol
    for g in WEIGHTED_GAMMAS:
        val = q.weighted_resolvent_integral(A, 1.0 - g, 2, scheme)
        err = relative_error(val, q.weighted_resolvent_closed_form(A, g))
        yield IdentityCheck("weighted_resolvent", f"gamma={g}", err, tol)


def change_of_variables_identity(A, scheme=q.DEFAULT_SCHEME, tol: float | None = None):
    tol = 10 * scheme.rel_tol if tol is None else tol
    for g, w, th in COV_GRID:
        val = q.change_of_variables_integral(A, g, w, th, scheme, certify=False)
        err = relative_error(val, q.change_of_variables_closed_form(A, g, w, th))
        yield IdentityCheck("change_of_variables", f"gamma={g},omega={w},theta={th}", err, tol)


def second_resolvent_identity(A1, A2, scheme=q.DEFAULT_SCHEME, lams=(0.0, 1.0, 10.0),
                           alphas=(0.25, 0.5, 0.75), tol_product: float = 1e-10,
                           tol_frac: float = 1e-6):
    for lam in lams:
        r = second_resolvent_product(A1, A2, lam)
        err = r.discrepancy / np.linalg.norm(r.value, 2)
        yield IdentityCheck("second_resolvent", f"lambda={lam}", err, tol_product)
    for a in alphas:
        r = resolvent_product_fracpow(A1, A2, a, scheme)
        yield IdentityCheck("second_resolvent_fracpow", f"alpha={a}", r.discrepancy, tol_frac)


def run_all(n: int = 8, scheme=q.DEFAULT_SCHEME) -> list:
    L = dirichlet_laplacian(n).matrix
    checks = list(scalar_balakrishnan(scheme))
    checks += weighted_resolvent_identity(L, scheme)
    checks += change_of_variables_identity(L, scheme)
    checks += second_resolvent_identity(2.0 * L, L, scheme)
    return checks


def write_table(checks, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["identity", "params", "error", "tol", "pass"])
        for c in checks:
            w.writerow([c.identity, c.params, f"{c.error:.3e}", f"{c.tol:.1e}", int(c.passed)])
