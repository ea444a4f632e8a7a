"""``fracblock`` command line.

Exit codes: 0 ok, 2 mathematical precondition violated, 3 I/O or parse
error, 4 convergence or tolerance breach.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import closed_forms as cf
from . import identities
from . import pde_lab as pl
from .block3 import BlockOperator3, RESIDUAL_TOL, block_fracpow_quadrature
from .errors import InvalidParams, PreconditionError, ToleranceError
from .operators import GridSpec, as_operator, certify_positive, matrix_from_json, matrix_to_json
from .oracle import matrix_power, relative_error
from .quadrature import DEFAULT_SCHEME, QuadratureScheme, balakrishnan_e1, balakrishnan_e2

EXIT_OK, EXIT_MATH, EXIT_IO, EXIT_TOL = 0, 2, 3, 4
FAMILY_MATCH_RTOL = 1e-12
SPECTRUM_TOL = 1e-6
PDE_EXACT_TOL = 5e-3
AGREE_TOL = 1e-6


class CheckFailed(ToleranceError):
    """A post-condition checked by the CLI did not hold."""


@dataclass
class RunManifest:
    command: str
    inputs: list = field(default_factory=list)
    outputs: list = field(default_factory=list)
    tolerances: dict = field(default_factory=dict)
    wall_time: float = 0.0
    checks: dict = field(default_factory=dict)
    timestamp: str = ""

    def write(self, path) -> None:
        Path(path).write_text(json.dumps(asdict(self), indent=1, sort_keys=True) + "\n")


# --- I/O helpers --------------------------------------------------------------

def _read_json(path):
    return json.loads(Path(path).read_text())


def _write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=1) + "\n")


def _load_operand(path):
    """Matrix JSON or block JSON, decided by the presence of ``blocks``."""
    obj = _read_json(path)
    if isinstance(obj, dict) and "blocks" in obj:
        return BlockOperator3.from_json(obj)
    return matrix_from_json(obj)


def _scheme(args) -> QuadratureScheme:
    return QuadratureScheme(rel_tol=args.rel_tol) if args.rel_tol else DEFAULT_SCHEME


def _tolerances(args, **extra) -> dict:
    tol = {"rel_tol": args.rel_tol or DEFAULT_SCHEME.rel_tol,
           "residual_tol": args.residual_tol or RESIDUAL_TOL,
           "commutation_tol": args.commutation_tol}
    tol.update(extra)
    return tol


# --- family recognition -------------------------------------------------------

def family_operands(B: BlockOperator3, family: str) -> dict:
    """Recover the generating operators of ``family`` from ``B``.

    Raises :class:`InvalidParams` when ``B`` does not have the family's layout.
    """
    if family not in cf.FAMILIES:
        raise InvalidParams(f"unknown family {family!r}; choose from {cf.FAMILIES}")
    blk = B.blocks
    if family == "lambda1":
        ops = {"A": blk[0, 0]}
        rebuilt = cf.lambda1(blk[0, 0])
    elif family == "lambda312":
        ops = {"A": blk[1, 0]}
        rebuilt = cf.lambda312(blk[1, 0], blk[1, 1] / 2.0)
    elif family == "lambda4":
        ops = {"A": blk[1, 1]}
        rebuilt = cf.lambda4(blk[1, 1])
    else:
        ops = {"A1": blk[0, 0], "A2": blk[1, 1], "A3": blk[2, 2]}
        rebuilt = cf.lambda3(*ops.values())
    scale = max(1.0, float(np.abs(B.assembled).max()))
    if np.abs(rebuilt.assembled - B.assembled).max() > FAMILY_MATCH_RTOL * scale:
        raise InvalidParams(f"block input does not have the {family} layout")
    return ops


def detect_family(B: BlockOperator3) -> str | None:
    for family in cf.FAMILIES:
        try:
            family_operands(B, family)
        except InvalidParams:
            continue
        return family
    return None


# --- commands -----------------------------------------------------------------

def cmd_certify(args, man: RunManifest) -> None:
    A = _load_operand(args.matrix)
    if isinstance(A, BlockOperator3):
        A = A.assembled
    grid = GridSpec(n_points=args.points, s_min=args.s_min, s_max_factor=args.s_max_factor)
    cert = certify_positive(A, grid, strict=not args.relaxed)
    _write_json(args.out, cert.to_json())
    man.inputs.append(args.matrix)
    man.outputs.append(args.out)
    man.tolerances = {"grid_points": args.points, "s_min": args.s_min,
                      "s_max_factor": args.s_max_factor, "strict": not args.relaxed}
    print(f"M = {cert.M:.6g}  theta_M = {cert.theta_M:.6g}  r0 = {cert.r0:.6g}")


def _run_route(route: str, X, alpha: float, sign: str, args):
    """Return the power ``X**(sign alpha)`` computed along ``route`` as a dense matrix."""
    scheme = _scheme(args)
    M = X.assembled if isinstance(X, BlockOperator3) else X
    z = -alpha if sign == "-" else alpha
    if route == "oracle":
        return matrix_power(M, z)
    if route == "quad-e1" or route.startswith("quad-e2:"):
        if sign != "-":
            raise InvalidParams(f"route {route} only computes negative powers")
        if route == "quad-e1":
            return balakrishnan_e1(M, alpha, scheme)
        try:
            m = int(route.split(":", 1)[1])
        except ValueError as exc:
            raise InvalidParams(f"bad route {route!r}, expected quad-e2:<m>") from exc
        return balakrishnan_e2(M, alpha, m, scheme)
    if route.startswith("closed:"):
        if not isinstance(X, BlockOperator3):
            raise InvalidParams(f"route {route} needs a block JSON input")
        family = route.split(":", 1)[1]
        ops = family_operands(X, family)
        return cf.family_fracpow(family, alpha, sign, extended=True, **ops).assembled
    raise InvalidParams(f"unknown route {route!r}")


def cmd_fracpow(args, man: RunManifest) -> None:
    X = _load_operand(args.input)
    routes = args.route or ["oracle"]
    results = {r: _run_route(r, X, args.alpha, args.sign, args) for r in routes}
    _write_json(args.out, matrix_to_json(results[routes[0]], label=f"{routes[0]} alpha={args.alpha}"))
    man.inputs.append(args.input)
    man.outputs.append(args.out)
    man.tolerances = _tolerances(args, agree_tol=args.agree_tol)
    pairs = []
    for i, a in enumerate(routes):
        for b in routes[i + 1:]:
            pairs.append({"a": a, "b": b, "relative_error": relative_error(results[a], results[b])})
    if len(routes) > 1:
        worst = max(p["relative_error"] for p in pairs)
        report = {"alpha": args.alpha, "sign": args.sign, "routes": routes,
                  "pairwise": pairs, "max_relative_error": worst}
        rpath = args.report or str(Path(args.out).with_suffix(".report.json"))
        _write_json(rpath, report)
        man.outputs.append(rpath)
        man.checks["routes_agree"] = worst <= args.agree_tol
        for p in pairs:
            print(f"{p['a']} vs {p['b']}: {p['relative_error']:.3e}")
        if worst > args.agree_tol:
            raise CheckFailed(f"routes disagree: {worst:.3e} > {args.agree_tol:.1e}")


def cmd_block_fracpow(args, man: RunManifest) -> None:
    B = _load_operand(args.block)
    if not isinstance(B, BlockOperator3):
        raise InvalidParams("block-fracpow needs a block JSON input")
    P = block_fracpow_quadrature(B, args.alpha, _scheme(args),
                                 commutation_tol=args.commutation_tol,
                                 residual_tol=args.residual_tol or RESIDUAL_TOL)
    _write_json(args.out, P.to_json())
    man.inputs.append(args.block)
    man.outputs.append(args.out)
    man.tolerances = _tolerances(args, agree_tol=args.agree_tol)
    if args.compare:
        err = relative_error(P.assembled, matrix_power(B.assembled, -args.alpha))
        man.checks["oracle_agree"] = err <= args.agree_tol
        print(f"block quadrature vs oracle: {err:.3e}")
        if err > args.agree_tol:
            raise CheckFailed(f"block quadrature disagrees with oracle: {err:.3e}")


def _spectrum_operator(args):
    if args.block:
        B = _load_operand(args.block)
        if not isinstance(B, BlockOperator3):
            raise InvalidParams("--block needs a block JSON input")
        return B, args.family or detect_family(B), None
    n = args.n
    base = pl.dirichlet_laplacian(n, args.length).matrix if args.base == "laplacian" else np.eye(n)
    family = args.kind
    if family == "lambda3":
        a = args.a or [1.0, 2.0, 3.0]
        if len(a) != 3:
            raise InvalidParams("--a needs three coefficients")
        ops = {"A1": a[0] * base, "A2": a[1] * base, "A3": a[2] * base}
    else:
        ops = {"A": base}
    return cf.build_family(family, **ops), family, ops


def cmd_spectrum(args, man: RunManifest) -> None:
    B, family, ops = _spectrum_operator(args)
    if family is None:
        P = matrix_power(B.assembled, args.alpha)
    else:
        ops = ops or family_operands(B, family)
        P = cf.family_fracpow(family, args.alpha, "+", extended=True, **ops).assembled
    rep = cf.spectrum_report(B, args.alpha, P)
    rep.write_csv(args.out)
    if args.block:
        man.inputs.append(args.block)
    man.outputs.append(args.out)
    tol = args.residual_tol or SPECTRUM_TOL
    man.tolerances = {"spectrum_tol": tol}
    man.checks["spectral_mapping"] = rep.max_match_residual <= tol
    print(f"{len(rep.base_eigs)} eigenvalues, max match residual {rep.max_match_residual:.3e}")
    if rep.max_match_residual > tol:
        raise CheckFailed(f"spectral residual {rep.max_match_residual:.3e} > {tol:.1e}")


def _forcing(spec, n3):
    if spec is None:
        return None
    if isinstance(spec, (int, float)):
        return np.full(n3, float(spec))
    F = np.asarray(spec, dtype=float)
    if F.shape != (n3,):
        raise InvalidParams(f"forcing must have length {n3}")
    return F


def cmd_pde(args, man: RunManifest) -> None:
    sc = _read_json(args.scenario)
    if not isinstance(sc, dict):
        raise ValueError("scenario must be a JSON object")
    try:
        kind = pl.SystemKind(str(sc["kind"]).upper())
        n = int(sc.get("n", 16))
        dt = float(sc.get("dt", 1e-3))
        T = float(sc.get("T", 1.0))
    except (KeyError, ValueError) as exc:
        raise ValueError(f"malformed scenario: {exc}") from exc
    lap = pl.dirichlet_laplacian(n, float(sc.get("length", 1.0)))
    a = sc.get("a")
    method = pl.Method(sc.get("method", "implicit_euler"))
    u0 = pl.initial_state(sc.get("initial", "zero"), lap)
    alpha = sc.get("alpha")
    if alpha is None:
        M = pl.build_system(kind, lap, a).assembled
        F = _forcing(sc.get("forcing"), 3 * n)
    else:
        M = pl.system_power(kind, lap, float(alpha), a, extended=True).assembled
        F = None
    res = pl.evolve(M, u0, F, dt, T, method)
    if alpha is not None:
        res.alpha = float(alpha)
    res.write_csv(args.out)
    man.inputs.append(args.scenario)
    man.outputs.append(args.out)
    tol = args.residual_tol or PDE_EXACT_TOL
    man.tolerances = {"exact_endpoint_tol": tol}
    if method is pl.Method.IMPLICIT_EULER and sc.get("check_exact", True):
        ref = pl.exact_propagator(M, u0, F, res.times[[0, -1]])[-1]
        err = float(np.abs(res.states[-1] - ref).max())
        man.checks["endpoint_vs_exact"] = err <= tol
        man.checks["endpoint_error"] = err
        print(f"endpoint max-norm error vs exact propagator: {err:.3e}")
        if err > tol:
            raise CheckFailed(f"endpoint error {err:.3e} > {tol:.1e}")


def cmd_verify_identities(args, man: RunManifest) -> None:
    checks = identities.run_all(args.n, _scheme(args))
    identities.write_table(checks, args.out)
    man.outputs.append(args.out)
    man.tolerances = _tolerances(args)
    for c in checks:
        man.checks[f"{c.identity}[{c.params}]"] = c.passed
    failed = [c for c in checks if not c.passed]
    print(f"{len(checks) - len(failed)}/{len(checks)} identity checks passed")
    if failed:
        raise CheckFailed(f"{len(failed)} identity checks failed, first: {failed[0]}")


# --- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--rel-tol", type=float, default=None, help="quadrature relative tolerance")
    common.add_argument("--residual-tol", type=float, default=None,
                        help="resolvent residual (or command-specific check) tolerance")
    common.add_argument("--commutation-tol", type=float, default=None,
                        help="absolute commutator-norm tolerance for block inputs")
    common.add_argument("--manifest", default=None, help="write a run manifest JSON here")

    p = argparse.ArgumentParser(prog="fracblock", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("certify", parents=[common], help="grid positivity certificate")
    c.add_argument("matrix")
    c.add_argument("--out", default="certificate.json")
    c.add_argument("--points", type=int, default=64)
    c.add_argument("--s-min", type=float, default=1e-6)
    c.add_argument("--s-max-factor", type=float, default=1e3)
    c.add_argument("--relaxed", action="store_true",
                   help="only reject eigenvalues on the closed negative real axis")
    c.set_defaults(func=cmd_certify)

    f = sub.add_parser("fracpow", parents=[common], help="fractional power along one or more routes")
    f.add_argument("input")
    f.add_argument("--alpha", type=float, required=True)
    f.add_argument("--route", action="append",
                   help="quad-e1, quad-e2:<m>, closed:<family> or oracle; repeatable")
    f.add_argument("--sign", choices=["-", "+"], default="-")
    f.add_argument("--out", default="fracpow.json")
    f.add_argument("--report", default=None)
    f.add_argument("--agree-tol", type=float, default=AGREE_TOL)
    f.set_defaults(func=cmd_fracpow)

    b = sub.add_parser("block-fracpow", parents=[common], help="entrywise block quadrature")
    b.add_argument("block")
    b.add_argument("--alpha", type=float, required=True)
    b.add_argument("--out", default="block_fracpow.json")
    b.add_argument("--compare", action="store_true", help="check against the dense oracle")
    b.add_argument("--agree-tol", type=float, default=1e-5)
    b.set_defaults(func=cmd_block_fracpow)

    s = sub.add_parser("spectrum", parents=[common], help="spectral mapping table")
    src = s.add_mutually_exclusive_group(required=True)
    src.add_argument("--block")
    src.add_argument("--kind", choices=cf.FAMILIES)
    s.add_argument("--family", choices=cf.FAMILIES, default=None,
                   help="layout of a --block input; detected when omitted")
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--n", type=int, default=8)
    s.add_argument("--length", type=float, default=1.0)
    s.add_argument("--base", choices=["laplacian", "identity"], default="laplacian")
    s.add_argument("--a", type=float, nargs=3, default=None)
    s.add_argument("--out", default="spectrum.csv")
    s.set_defaults(func=cmd_spectrum)

    d = sub.add_parser("pde", parents=[common], help="run a PDE scenario")
    d.add_argument("scenario")
    d.add_argument("--out", default="trajectory.csv")
    d.set_defaults(func=cmd_pde)

    v = sub.add_parser("verify-identities", parents=[common], help="integral identity table")
    v.add_argument("--n", type=int, default=8)
    v.add_argument("--out", default="identities.csv")
    v.set_defaults(func=cmd_verify_identities)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    man = RunManifest(command=" ".join(["fracblock", *(argv if argv is not None else sys.argv[1:])]))
    t0 = time.perf_counter()
    code = EXIT_OK
    try:
        args.func(args, man)
    except PreconditionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        code = EXIT_MATH
    except ToleranceError as exc:
        print(f"tolerance breach: {exc}", file=sys.stderr)
        code = EXIT_TOL
    except (OSError, ValueError, KeyError, TypeError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        code = EXIT_IO
    man.wall_time = time.perf_counter() - t0
    man.timestamp = datetime.now(timezone.utc).isoformat()
    man.checks["exit_code"] = code
    manifest = args.manifest
    if manifest is None and args.command == "pde":
        manifest = str(Path(args.out).with_suffix(".manifest.json"))
    if manifest:
        try:
            man.write(manifest)
        except OSError as exc:
            print(f"could not write manifest: {exc}", file=sys.stderr)
            code = code or EXIT_IO
    return code


if __name__ == "__main__":
    sys.exit(main())
