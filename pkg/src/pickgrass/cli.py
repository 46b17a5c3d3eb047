"""Command-line front end: JSON in, JSON out.

Exit codes: 0 success, 1 unknown subcommand, 2 validation error or
malformed input, 3 numerical degeneracy.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import io as jio
from .ball import optimal_matching_distance, symmetric_distance
from .blaschke import build_blaschke
from .errors import DegeneracyError, PickGrassError
from .fock import TruncVec, kernel_coefficients
from .grassmann import phi, psi, round_trip
from .hypersurface import compress, fiber, gleason_decompose, irreducibility_check, metric_curvature
from .pick import embedding_dimension, is_regular, pick_matrix, stratum
from .spectra import DEFAULT_SEED, joint_spectrum, spectral_perturbation_check

EXIT_OK, EXIT_UNKNOWN, EXIT_INVALID, EXIT_DEGENERATE = 0, 1, 2, 3


class InputError(PickGrassError, ValueError):
    pass


def load_json(arg: str):
    """Inline JSON if the argument starts with '{' or '[', otherwise a file path."""
    text = arg.strip()
    if not text.startswith(("{", "[")):
        path = Path(arg)
        if not path.is_file():
            raise InputError(f"no such file: {arg}")
        text = path.read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON in {arg[:40]!r}: {exc}") from exc


def parse_complex_flag(s: str) -> complex:
    """'re,im' or 're'."""
    try:
        parts = [float(x) for x in s.split(",")]
    except ValueError as exc:
        raise InputError(f"cannot read {s!r} as a complex number") from exc
    if len(parts) == 1:
        return complex(parts[0])
    if len(parts) == 2:
        return complex(parts[0], parts[1])
    raise InputError(f"cannot read {s!r} as a complex number")


def parse_complex_list(s: str) -> list[complex]:
    """Semicolon-separated complex values."""
    return [parse_complex_flag(x) for x in s.split(";") if x.strip()]


def parse_index_list(s: str) -> list[int]:
    try:
        return [int(x) for x in s.split(",") if x.strip()]
    except ValueError as exc:
        raise InputError(f"cannot read {s!r} as a list of indices") from exc


# ---------------------------------------------------------------------------
# subcommands; each returns (report, degenerate flag)


def cmd_dist(a):
    X, Y = jio.divisor_from_json(load_json(a.x)), jio.divisor_from_json(load_json(a.y))
    return {"d_s": symmetric_distance(X, Y), "d_o": optimal_matching_distance(X, Y)}, False


def cmd_pick_check(a):
    prob = jio.pick_from_json(load_json(a.problem))
    r = pick_matrix(prob)
    tol = 1e-10 if a.tol is None else a.tol
    lo = r["min_eigenvalue"]
    return {"min_eigenvalue": lo, "feasible": lo >= -tol, "marginal": abs(lo) <= max(tol, 1e-8)}, False


def cmd_spectrum(a):
    X = joint_spectrum(jio.tuple_from_json(load_json(a.tuple)), seed=a.seed)
    return jio.divisor_to_json(X), False


def cmd_perturb(a):
    A, B = jio.tuple_from_json(load_json(a.a)), jio.tuple_from_json(load_json(a.b))
    r = spectral_perturbation_check(A, B, seed=a.seed)
    return {k: r[k] for k in ("hausdorff", "matching", "elsner_bound", "holds")}, False


def _chain_json(b) -> dict:
    return {
        "d": b.d,
        "points": [list(p) for p in b.points],
        "unitaries": [None if U is None else U.tolist() for U in b.unitaries],
        "width": b.width,
    }


def cmd_blaschke(a):
    b = build_blaschke(jio.divisor_from_json(load_json(a.x)))
    out = {"chain": _chain_json(b)}
    if a.probes:
        probes = [jio.parse_point(p) for p in load_json(a.probes)]
        out["rows"] = [b(z).tolist() for z in probes]
    return out, False


def cmd_psi(a):
    return jio.divisor_to_json(psi(jio.model_from_json(load_json(a.model)), seed=a.seed)), False


def cmd_phi(a):
    X = jio.divisor_from_json(load_json(a.x))
    r = phi(X)
    chain = _chain_json(r.chain) if X.d > 1 else {"d": 1, "points": list(r.chain.points), "mults": list(r.chain.mults)}
    return {"chain": chain, "model": jio.model_to_json(r.model)}, False


def cmd_roundtrip(a):
    X = jio.divisor_from_json(load_json(a.x))
    r = round_trip(X, rng=np.random.default_rng(a.seed), seed=a.seed)
    return {"d_o_error": r["d_o_error"], "kernel_identity_error": r["kernel_identity_error"]}, False


def cmd_strat(a):
    return {"stratum": stratum(jio.divisor_from_json(load_json(a.x)))}, False


def cmd_embdim(a):
    return {"embedding_dimension": embedding_dimension(jio.divisor_from_json(load_json(a.x)))}, False


def cmd_regular(a):
    tol = 1e-10 if a.tol is None else a.tol
    return {"regular": is_regular(jio.divisor_from_json(load_json(a.x)), tol=tol)}, False


def cmd_compress(a):
    q = compress(jio.poly_from_json(load_json(a.poly)), a.N)
    D = q.defect()
    dims = q.graded_dims()
    lower = np.nonzero((q.col_degrees >= 1) & (q.col_degrees <= q.N - 1))[0]
    out = {
        "dim": q.dim,
        "graded_dims": dims,
        "defect_norm": float(np.linalg.norm(D[np.ix_(lower, lower)], 2)) if lower.size else 0.0,
    }
    if a.emit_shifts:
        out["shifts"] = {"n": q.dim, "d": q.d, "matrices": [S.tolist() for S in q.shifts]}
    return out, False


def cmd_fiber(a):
    q = compress(jio.poly_from_json(load_json(a.poly)), a.N)
    r = fiber(q, parse_index_list(a.base), parse_complex_list(a.t), rtol=1e-8 if a.tol is None else a.tol)
    return {
        "dimension": r["dimension"],
        "expected_dimension": r["expected_dimension"],
        "discrepancy": r["discrepancy"],
        "points": [{"coords": list(p), "mult": m} for p, m in zip(r["points"], r["multiplicities"])],
        "completing": r["completing"],
        "slice_ratio": r["slice_ratio"],
    }, False


def cmd_gleason(a):
    q = compress(jio.poly_from_json(load_json(a.poly)), a.N)
    f = jio.truncvec_from_json(load_json(a.f)) if a.f else kernel_coefficients(np.zeros(q.d), (0,) * q.d, q.N)[0]
    r = gleason_decompose(q, parse_index_list(a.base), parse_complex_list(a.t), f)
    tol = 1e-8 if a.tol is None else a.tol
    return {
        "residual": r["residual"],
        "in_range": r["residual"] <= tol,
        "h": [jio.truncvec_to_json(_prune(h)) for h in r["h"]],
    }, False


def _prune(h: TruncVec, tol: float = 1e-15) -> TruncVec:
    c = h.coeffs.copy()
    c[np.abs(c) < tol] = 0
    return TruncVec(h.d, h.N, c)


def cmd_curvature(a):
    r = metric_curvature(parse_complex_flag(a.lam), parse_complex_flag(a.mu), step=a.step, richardson=a.richardson)
    return {
        "curvature_at_0": r["curvature_at_0"],
        "formula_value": r["formula_value"],
        "abs_err": abs(r["curvature_at_0"] - r["formula_value"]),
    }, False


def cmd_irreducible(a):
    r = irreducibility_check(parse_complex_flag(a.lam), parse_complex_flag(a.mu), n_samples=a.n_samples, seed=a.seed)
    return {
        "commutant_dimension": r["commutant_dimension"],
        "irreducible": r["irreducible"],
        "status": r["status"],
        "degenerate_samples": r["degenerate_samples"],
        "second_derivative_diagonal": r["second_derivative_diagonal"].tolist(),
    }, r["degenerate_samples"]


COMMANDS = {
    "dist": cmd_dist,
    "pick-check": cmd_pick_check,
    "spectrum": cmd_spectrum,
    "perturb": cmd_perturb,
    "blaschke": cmd_blaschke,
    "psi": cmd_psi,
    "phi": cmd_phi,
    "roundtrip": cmd_roundtrip,
    "strat": cmd_strat,
    "embdim": cmd_embdim,
    "regular": cmd_regular,
    "compress": cmd_compress,
    "fiber": cmd_fiber,
    "gleason": cmd_gleason,
    "curvature": cmd_curvature,
    "irreducible": cmd_irreducible,
}

INPUTS = {
    "dist": {"x": "Divisor", "y": "Divisor"},
    "pick-check": {"problem": "PickProblem"},
    "spectrum": {"tuple": "Tuple"},
    "perturb": {"a": "Tuple", "b": "Tuple"},
    "blaschke": {"x": "Divisor", "probes": "[[[re, im], ...], ...] (optional)"},
    "psi": {"model": "Model"},
    "phi": {"x": "Divisor"},
    "roundtrip": {"x": "Divisor"},
    "strat": {"x": "Divisor"},
    "embdim": {"x": "Divisor"},
    "regular": {"x": "Divisor"},
    "compress": {"poly": "HomogPoly"},
    "fiber": {"poly": "HomogPoly"},
    "gleason": {"poly": "HomogPoly", "f": "TruncVec (optional, default the constant 1)"},
    "curvature": {},
    "irreducible": {},
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pickgrass", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="store_true", help="print version metadata as JSON")
    ap.add_argument("--schema", action="store_true", help="print input schemas as JSON")
    sub = ap.add_subparsers(dest="command")

    def add(name, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--out", help="output path (default stdout)")
        p.add_argument("--tol", type=float, default=None, help="override the default tolerance")
        p.add_argument("--seed", type=int, default=DEFAULT_SEED)
        return p

    p = add("dist", "symmetric and optimal matching distances")
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p = add("pick-check", "Pick matrix positivity (default tol 1e-10)")
    p.add_argument("--problem", required=True)
    p = add("spectrum", "joint spectrum with multiplicities")
    p.add_argument("--tuple", required=True)
    p = add("perturb", "spectral perturbation bound check")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p = add("blaschke", "Blaschke chain for a multiplicity-free divisor")
    p.add_argument("--x", required=True)
    p.add_argument("--probes")
    p = add("psi", "divisor of a coinvariant model")
    p.add_argument("--model", required=True)
    p = add("phi", "Blaschke product and model of a divisor")
    p.add_argument("--x", required=True)
    p = add("roundtrip", "Psi(Phi(X)) against X and the kernel identity")
    p.add_argument("--x", required=True)
    p = add("strat", "stratum of a configuration")
    p.add_argument("--x", required=True)
    p = add("embdim", "embedding dimension of a configuration")
    p.add_argument("--x", required=True)
    p = add("regular", "distinct pairwise distances (default tol 1e-10)")
    p.add_argument("--x", required=True)
    p = add("compress", "truncated quotient model for a homogeneous polynomial")
    p.add_argument("--poly", required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--emit-shifts", action="store_true")
    p = add("fiber", "joint eigenspace of the compressed shifts (default tol 1e-8)")
    p.add_argument("--poly", required=True)
    p.add_argument("--N", type=int, default=60)
    p.add_argument("--base", required=True, help="0-based base coordinates, comma separated")
    p.add_argument("--t", required=True, help="base values 're,im;re,im;...'")
    p = add("gleason", "Gleason decomposition on a fiber (default tol 1e-8)")
    p.add_argument("--poly", required=True)
    p.add_argument("--N", type=int, default=40)
    p.add_argument("--base", required=True)
    p.add_argument("--t", required=True)
    p.add_argument("--f")
    p = add("curvature", "curvature of the two-line example at 0")
    p.add_argument("--lambda", dest="lam", required=True)
    p.add_argument("--mu", required=True)
    p.add_argument("--step", type=float, default=1e-3)
    p.add_argument("--richardson", action="store_true")
    p = add("irreducible", "commutant dimension for the two-line example")
    p.add_argument("--lambda", dest="lam", required=True)
    p.add_argument("--mu", required=True)
    p.add_argument("--n-samples", type=int, default=25)
    return ap


def _write(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def _attach_negative_values(argv: list[str]) -> list[str]:
    """Rewrite '--mu -0.5,0' as '--mu=-0.5,0' so argparse does not read the value as a flag."""
    out: list[str] = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        nxt = argv[i + 1] if i + 1 < len(argv) else None
        if tok.startswith("--") and "=" not in tok and nxt is not None and re.match(r"-[\d.]", nxt):
            out.append(f"{tok}={nxt}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    first = next((x for x in argv if not x.startswith("-")), None)
    if first is not None and first not in COMMANDS:
        sys.stderr.write(f"pickgrass: unknown subcommand {first!r}\n")
        return EXIT_UNKNOWN
    parser = build_parser()
    try:
        args = parser.parse_args(_attach_negative_values(argv))
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    if args.version:
        _write(jio.dumps({"name": "pickgrass", "version": __version__}), None)
        return EXIT_OK
    if args.schema:
        _write(jio.dumps({"types": jio.SCHEMAS, "inputs": INPUTS}), None)
        return EXIT_OK
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_UNKNOWN
    try:
        report, degenerate = COMMANDS[args.command](args)
    except DegeneracyError as exc:
        _write(jio.dumps({"error": str(exc), "flags": exc.flags}), None)
        return EXIT_DEGENERATE
    except (ValueError, TypeError, NotImplementedError) as exc:
        sys.stderr.write(f"pickgrass: {exc}\n")
        return EXIT_INVALID
    _write(jio.dumps(report), args.out)
    return EXIT_DEGENERATE if degenerate else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
