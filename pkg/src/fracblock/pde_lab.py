"""1D Dirichlet-Laplacian PDE systems in block form, and their time evolution.

Systems are written as ``U' + Lambda U = F`` with constant forcing ``F``:

* ``EDP1``  heat equations coupled through ``u`` (the ``lambda1`` layout)
* ``OSC16`` the oscillator system on the ``lambda312`` layout
* ``RD16``  the reaction-diffusion system whose operator is ``lambda4``
* ``EDP3``  weakly coupled diffusions ``A_i = a_i L`` (the ``lambda3`` layout)
"""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from . import closed_forms as cf
from .block3 import BlockOperator3
from .errors import InvalidAlpha, InvalidParams, OperatorError, OracleFailure, SingularStep
from .oracle import matrix_exp, matrix_power


class SystemKind(enum.Enum):
    EDP1 = "EDP1"
    OSC16 = "OSC16"
    RD16 = "RD16"
    EDP3 = "EDP3"


FAMILY_OF = {SystemKind.EDP1: "lambda1", SystemKind.OSC16: "lambda312",
             SystemKind.RD16: "lambda4", SystemKind.EDP3: "lambda3"}


class Method(enum.Enum):
    IMPLICIT_EULER = "implicit_euler"
    EIGEN_EXACT = "eigen_exact"


@dataclass(frozen=True)
class DirichletLaplacian:
    n: int
    length: float
    matrix: np.ndarray
    analytic_eigs: np.ndarray

    @property
    def grid(self) -> np.ndarray:
        return self.length * np.arange(1, self.n + 1) / (self.n + 1)

    def mode(self, k: int = 1) -> np.ndarray:
        """Unit-norm eigenvector ``sin(k pi x / L)`` at the interior points."""
        v = np.sin(k * math.pi * self.grid / self.length)
        return v / np.linalg.norm(v)


def dirichlet_laplacian(n: int, length: float = 1.0) -> DirichletLaplacian:
    """``-d2/dx2`` on ``(0, length)`` with zero boundary values, ``n`` interior points."""
    if n < 1 or length <= 0:
        raise InvalidParams("need n >= 1 and length > 0")
    h2 = (length / (n + 1)) ** 2
    M = (2.0 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1)) / h2
    k = np.arange(1, n + 1)
    mu = 2.0 / h2 * (1.0 - np.cos(k * math.pi / (n + 1)))
    return DirichletLaplacian(n, float(length), M, mu)


def _kind(kind) -> SystemKind:
    return kind if isinstance(kind, SystemKind) else SystemKind(str(kind).upper())


def _coefficients(a):
    if a is None or len(a) != 3:
        raise InvalidParams("EDP3 needs three coefficients a1, a2, a3")
    a = [float(x) for x in a]
    if min(a) <= 0:
        raise InvalidParams(f"EDP3 coefficients must be strictly positive, got {a}")
    if len(set(a)) < 3:
        raise InvalidParams(f"EDP3 coefficients must be pairwise distinct, got {a}")
    return a


def build_system(kind, lap: DirichletLaplacian, a=None) -> BlockOperator3:
    kind = _kind(kind)
    L = lap.matrix
    if kind is SystemKind.EDP1:
        return cf.lambda1(L)
    if kind is SystemKind.OSC16:
        return cf.lambda312(L, matrix_power(L, 0.5))
    if kind is SystemKind.RD16:
        return cf.lambda4(L)
    a1, a2, a3 = _coefficients(a)
    return cf.lambda3(a1 * L, a2 * L, a3 * L)


def system_power(kind, lap: DirichletLaplacian, alpha: float, a=None, *,
                 extended: bool = False) -> BlockOperator3:
    """Positive fractional power of the system operator from its closed form."""
    kind = _kind(kind)
    L = lap.matrix
    family = FAMILY_OF[kind]
    if kind is SystemKind.EDP3:
        a1, a2, a3 = _coefficients(a)
        return cf.lambda3_fracpow(a1 * L, a2 * L, a3 * L, alpha, "+", extended=extended)
    return cf.family_fracpow(family, alpha, "+", A=L, extended=extended)


@dataclass
class EvolutionResult:
    times: np.ndarray
    states: np.ndarray  # (n_steps + 1, 3n)
    method: Method
    alpha: float = 1.0

    def write_csv(self, path) -> None:
        """Long format ``t,component,value_re,value_im``."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "component", "value_re", "value_im"])
            for t, U in zip(self.times, self.states):
                for c, z in enumerate(U):
                    w.writerow([repr(float(t)), c, repr(float(np.real(z))), repr(float(np.imag(z)))])


def _time_grid(dt, T):
    if not dt > 0 or not T > 0 or dt > T:
        raise InvalidParams(f"need 0 < dt <= T, got dt={dt}, T={T}")
    steps = int(round(T / dt))
    if abs(steps * dt - T) > 1e-9 * T:
        raise InvalidParams(f"T={T} is not an integer multiple of dt={dt}")
    return steps, dt * np.arange(steps + 1)


def implicit_euler(M, u0, forcing, dt, T) -> EvolutionResult:
    """``U_{k+1} = (I + dt M)^{-1} (U_k + dt F)``."""
    M = np.asarray(M)
    steps, times = _time_grid(dt, T)
    N = M.shape[0]
    S = np.eye(N) + dt * M
    if np.linalg.cond(S) * np.finfo(float).eps > 1.0:
        raise SingularStep(f"I + dt*Lambda is singular for dt={dt}")
    lu = sla.lu_factor(S)
    u = np.asarray(u0)
    F = np.zeros(N) if forcing is None else np.asarray(forcing)
    dtype = np.result_type(M, u, F, float)
    states = np.empty((steps + 1, N), dtype=dtype)
    states[0] = u
    for k in range(steps):
        states[k + 1] = sla.lu_solve(lu, states[k] + dt * F)
    return EvolutionResult(times, states, Method.IMPLICIT_EULER)


def exact_propagator(M, u0, forcing, times) -> np.ndarray:
    """``U(t) = e^{-tM} (U0 - M^{-1} F) + M^{-1} F`` at each time, via Schur exponentials."""
    M = np.asarray(M)
    u0 = np.asarray(u0)
    N = M.shape[0]
    F = np.zeros(N) if forcing is None else np.asarray(forcing)
    try:
        steady = np.linalg.solve(M, F) if np.any(F) else np.zeros(N)
        dt = times[1] - times[0] if len(times) > 1 else 0.0
        uniform = len(times) > 2 and np.allclose(np.diff(times), dt, rtol=1e-12, atol=0)
        out = np.empty((len(times), N), dtype=np.result_type(M, u0, F, float))
        if uniform:
            step = matrix_exp(-dt * M)
            # repeated multiplication keeps the cost at one Schur exponential
            v = u0 - steady
            for k in range(len(times)):
                out[k] = v + steady
                v = step @ v
            # re-anchor the endpoint with a direct exponential
            out[-1] = matrix_exp(-times[-1] * M) @ (u0 - steady) + steady
        else:
            for k, t in enumerate(times):
                out[k] = matrix_exp(-t * M) @ (u0 - steady) + steady
    except (OperatorError, np.linalg.LinAlgError) as exc:
        raise OracleFailure(f"exact propagator failed: {exc}") from exc
    return out


def evolve(B, u0, forcing=None, dt: float = 1e-3, T: float = 1.0,
           method=Method.IMPLICIT_EULER) -> EvolutionResult:
    """Time-step ``U' + Lambda U = F`` from ``U(0) = u0``."""
    M = B.assembled if isinstance(B, BlockOperator3) else np.asarray(B)
    method = Method(method) if not isinstance(method, Method) else method
    u0 = np.asarray(u0)
    if u0.shape != (M.shape[0],):
        raise InvalidParams(f"initial state must have length {M.shape[0]}")
    if method is Method.IMPLICIT_EULER:
        return implicit_euler(M, u0, forcing, dt, T)
    _, times = _time_grid(dt, T)
    return EvolutionResult(times, exact_propagator(M, u0, forcing, times), Method.EIGEN_EXACT)


def fractional_evolve(kind, lap: DirichletLaplacian, alpha: float, u0, dt: float, T: float, *,
                      a=None, extended: bool = False, method=Method.IMPLICIT_EULER) -> EvolutionResult:
    """``U' + Lambda**alpha U = 0`` with the closed-form power of the system operator."""
    alpha = float(alpha)
    if not (0.0 < alpha < 1.0 or (extended and alpha == 1.0)):
        raise InvalidAlpha(f"alpha must lie in (0, 1), got {alpha}")
    P = system_power(kind, lap, alpha, a, extended=extended)
    res = evolve(P, u0, None, dt, T, method)
    res.alpha = alpha
    return res


def initial_state(spec, lap: DirichletLaplacian) -> np.ndarray:
    """``"zero"``, ``"first_mode"`` (first Laplacian mode in every component) or an explicit array."""
    n3 = 3 * lap.n
    if isinstance(spec, str):
        if spec == "zero":
            return np.zeros(n3)
        if spec == "first_mode":
            return np.tile(lap.mode(1), 3)
        raise InvalidParams(f"unknown initial condition {spec!r}")
    u = np.asarray(spec, dtype=float)
    if u.shape != (n3,):
        raise InvalidParams(f"explicit initial state must have length {n3}")
    return u


def first_decay_time(res: EvolutionResult) -> float:
    """Earliest time after which ``||U_k||`` never increases again."""
    norms = np.linalg.norm(res.states, axis=1)
    k = len(norms) - 1
    while k > 0 and norms[k] <= norms[k - 1] * (1 + 1e-14):
        k -= 1
    return float(res.times[k])
