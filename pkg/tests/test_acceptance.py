"""Acceptance gate: one test per criterion, summarized as PASS/FAIL lines at the end of the run.

Run alone with ``pytest tests/test_acceptance.py -v`` or ``python3 tests/test_acceptance.py``.
"""
import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from fracblock import closed_forms as cf
from fracblock import pde_lab as pl
from fracblock.block3 import adjugate_resolvent, load_block
from fracblock.cli import main
from fracblock.errors import AdjugateFormulaFailed, NonCommuting
from fracblock.operators import certify_positive, eigenvalues, spectral_norm
from fracblock.oracle import matrix_power, relative_error
from fracblock.quadrature import (balakrishnan_e1, balakrishnan_e2, change_of_variables_closed_form,
                                  change_of_variables_integral, weighted_resolvent_closed_form,
                                  scalar_identity_integral, weighted_resolvent_integral)

DATA = Path(__file__).parent / "data"
ALPHAS = [0.25, 0.5, 0.75]


def operands(family, A):
    if family == "lambda3":
        return {"A1": A, "A2": 2 * A, "A3": 3 * A}
    return {"A": A}


def diagonal_power(lap, z):
    # the Laplacian modes are known in closed form, so this oracle avoids any matrix function code
    V = np.column_stack([lap.mode(k) for k in range(1, lap.n + 1)])
    return (V * lap.analytic_eigs ** z) @ V.T


def test_criterion_01_scalar_identity():
    t0 = time.perf_counter()
    worst = 0.0
    for k in range(1, 10):
        a = 0.1 * k
        exact = math.pi / math.sin(math.pi * a)
        worst = max(worst, abs(scalar_identity_integral(a) - exact) / exact)
    elapsed = time.perf_counter() - t0
    assert worst <= 1e-8
    assert elapsed < 1.0


def test_criterion_02_e1_vs_oracle():
    A = pl.dirichlet_laplacian(32).matrix
    t0 = time.perf_counter()
    errs = [relative_error(balakrishnan_e1(A, a), matrix_power(A, -a)) for a in ALPHAS]
    elapsed = time.perf_counter() - t0
    assert max(errs) <= 1e-6
    assert elapsed < 5.0


def test_criterion_03_e2_routes():
    lap = pl.dirichlet_laplacian(16)
    A = lap.matrix
    for a in (0.1, 0.3, 0.5, 0.7, 0.9):
        e1 = balakrishnan_e1(A, a)
        for m in (1, 2):
            assert relative_error(balakrishnan_e2(A, a, m), e1) <= 1e-6
    for a in (1.1, 1.25, 1.5, 1.75, 1.9):
        ref = diagonal_power(lap, -a)
        for m in (1, 2):
            assert relative_error(balakrishnan_e2(A, a, m), ref) <= 1e-6


def test_criterion_04_integral_identities():
    A = pl.dirichlet_laplacian(8).matrix
    for g in (0.25, 0.5, 0.75, 1.25, 1.75):
        got = weighted_resolvent_integral(A, 1 - g, 2)
        assert relative_error(got, weighted_resolvent_closed_form(A, g)) <= 1e-6
    for g in (0.25, 0.5, 0.75):
        for w in (0.5, 1.0, 2.0):
            for th in (1.5, 2.0, 3.0):
                got = change_of_variables_integral(A, g, w, th)
                assert relative_error(got, change_of_variables_closed_form(A, g, w, th)) <= 1e-6


def test_criterion_05_closed_forms():
    t0 = time.perf_counter()
    for n in (4, 8):
        L = pl.dirichlet_laplacian(n).matrix
        for family in cf.FAMILIES:
            ops = operands(family, L)
            B = cf.build_family(family, **ops)
            for a in ALPHAS:
                closed = cf.family_fracpow(family, a, "-", **ops).assembled
                assert relative_error(closed, matrix_power(B.assembled, -a)) <= 1e-6
                quad = cf.family_block_quadrature(family, a, **ops).assembled
                assert relative_error(quad, closed) <= 1e-5
    assert time.perf_counter() - t0 < 30.0


def test_criterion_06_continuity():
    L = pl.dirichlet_laplacian(8).matrix
    for family in cf.FAMILIES:
        ops = operands(family, L)
        B = cf.build_family(family, **ops)
        P = cf.family_fracpow(family, 1.0, "-", extended=True, **ops).assembled
        assert relative_error(P, np.linalg.inv(B.assembled)) <= 1e-10


def test_criterion_07_inverse_and_semigroup():
    L = pl.dirichlet_laplacian(8).matrix
    for family in cf.FAMILIES:
        ops = operands(family, L)
        for a in ALPHAS:
            P = cf.family_fracpow(family, a, "+", **ops).assembled
            Q = cf.family_fracpow(family, a, "-", **ops).assembled
            assert spectral_norm(P @ Q - np.eye(P.shape[0])) <= 1e-8
        for a, b in ((0.25, 0.5), (0.1, 0.3), (0.45, 0.45)):
            Pa = cf.family_fracpow(family, a, "-", **ops).assembled
            Pb = cf.family_fracpow(family, b, "-", **ops).assembled
            Pab = cf.family_fracpow(family, a + b, "-", **ops).assembled
            assert spectral_norm(Pa @ Pb - Pab) <= 1e-6 * spectral_norm(Pab)


def test_criterion_08_spectral_mapping(tmp_path):
    lap = pl.dirichlet_laplacian(8)
    alpha = 0.85
    B = cf.lambda4(lap.matrix)
    mu = lap.analytic_eigs
    _, _, res = cf.match_spectra(cf.lambda4_base_spectrum(mu), eigenvalues(B.assembled))
    assert res.max() <= 1e-8 * mu.max()
    P = cf.lambda4_fracpow(lap.matrix, alpha, "+").assembled
    predicted = np.concatenate([mu ** alpha,
                                mu ** (alpha / 2) * np.exp(1j * math.pi * alpha / 2),
                                mu ** (alpha / 2) * np.exp(-1j * math.pi * alpha / 2)])
    _, _, res = cf.match_spectra(predicted, eigenvalues(P))
    assert res.max() <= 1e-6
    out = tmp_path / "rotation_spectrum.csv"
    assert main(["spectrum", "--kind", "lambda4", "--n", "8", "--alpha", str(alpha),
                 "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 1 + 24


def test_criterion_09_second_resolvent():
    L = pl.dirichlet_laplacian(8).matrix
    pairs = [(2 * L, L), (L + np.eye(8), L), (3 * L, 0.5 * L)]
    for A1, A2 in pairs:
        for lam in (0.0, 0.5, 1.0, 10.0):
            r = cf.second_resolvent_product(A1, A2, lam)
            assert r.discrepancy <= 1e-10 * spectral_norm(r.value)
        for a in ALPHAS:
            assert cf.resolvent_product_fracpow(A1, A2, a).discrepancy <= 1e-6


def test_criterion_10_uniform_bound():
    A = pl.dirichlet_laplacian(16).matrix
    M = certify_positive(A).M
    sup = max(spectral_norm(balakrishnan_e1(A, a)) for a in np.arange(0.05, 0.96, 0.05))
    assert sup <= M + 1e-6


def test_criterion_11_pde_demo():
    lap = pl.dirichlet_laplacian(16)
    M = pl.build_system("EDP1", lap).assembled
    u0 = pl.initial_state("first_mode", lap)
    ref = pl.exact_propagator(M, u0, None, np.array([0.0, 1.0]))[-1]
    errs = []
    for dt in (1e-3, 5e-4):
        res = pl.evolve(M, u0, None, dt, 1.0, pl.Method.IMPLICIT_EULER)
        errs.append(float(np.abs(res.states[-1] - ref).max()))
    assert errs[0] <= 5e-3
    assert 1.7 <= errs[0] / errs[1] <= 2.3


def test_criterion_12_adjugate_guardrail():
    B = load_block(DATA / "noncommuting_block.json")
    with pytest.raises(NonCommuting):
        adjugate_resolvent(B, 1.0)
    for s in (0.0, 0.5, 1.0, 10.0):
        with pytest.raises(AdjugateFormulaFailed):
            adjugate_resolvent(B, s, check_commutation=False)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
