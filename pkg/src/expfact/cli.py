"""Command line entry point: ``expfact <command> ...``.

Exit codes: 0 when every certificate check passes, 1 when a check fails,
2 for a malformed spec or certificate, 3 when a pipeline step fails (the
partial reduction trace is included in the output).
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .algebra import MatrixOverAlgebra, log_exp1, make_backend, matrix_from_json, matrix_to_json
from .certify import certificate_from_json, dumps, reverify, run_T_suite
from .errors import ConfigurationError, ExpFactError, StructuralError
from .general import check_unipotent_factors, factorize_two_exp, regroup_unitriangular, replay_trace, single_exp_finite
from .spectra import spectrum
from .triangular import two_exp_triangular

EXIT_OK, EXIT_FAILED, EXIT_SPEC, EXIT_PIPELINE = 0, 1, 2, 3
REPLAY_TOL = 1e-6
REGROUP_TOL = 1e-10


class SpecError(Exception):
    pass


def _load(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise SpecError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path} is not valid JSON: {exc}") from exc


def load_matrix_spec(doc):
    """``{"backend", "n", "entries", "normalize_det"}`` -> MatrixOverAlgebra."""
    if not isinstance(doc, dict) or "backend" not in doc:
        raise SpecError("matrix spec needs a 'backend'")
    try:
        space = make_backend(doc["backend"])
        A = matrix_from_json(space, doc)
    except (ConfigurationError, StructuralError, ValueError, TypeError) as exc:
        raise SpecError(str(exc)) from exc
    if doc.get("normalize_det", False):
        # divide by a continuous n-th root of det A
        delta = log_exp1(A.det())
        A = MatrixOverAlgebra(space, A.data * np.exp(-delta.values / A.n)[:, None, None])
    return A


def _emit(doc, text, args):
    out = dumps(doc) if args.output == "json" else text
    if getattr(args, "out", None):
        with open(args.out, "w") as fh:
            fh.write(out + "\n")
    else:
        print(out)


def _cert_text(cert):
    lines = [
        f"factors: {cert.factor_count}",
        f"residual: {cert.reconstruction_residual:.3e} (tol {cert.tol:.1e})",
        f"norms: {', '.join(f'{x:.4g}' for x in cert.factor_norms)}",
    ]
    for c in cert.spectral_claims:
        lines.append(f"claim {c.claim} on factor {c.factor}: {'ok' if c.verified else 'FAILED'} (margin {c.margin:.3e})")
    if cert.continuity_jump is not None:
        lines.append(f"continuity: factors {cert.continuity_jump:.3e}, input {cert.input_continuity:.3e}")
    if cert.holomorphy_residual is not None:
        lines.append(f"holomorphy residual: {cert.holomorphy_residual:.3e}")
    lines.append("verified" if cert.verified else "NOT verified")
    return "\n".join(lines)


def cmd_factorize(args):
    A = load_matrix_spec(_load(args.spec))
    if args.triangular:
        _, _, cert = two_exp_triangular(A, args.epsilon, tol=args.tol)
    else:
        _, _, cert = factorize_two_exp(A, args.epsilon, tol=args.tol, seed=args.seed)
    _emit(cert.to_json(A, trace_matrices=True), _cert_text(cert), args)
    return EXIT_OK if cert.verified else EXIT_FAILED


def cmd_spectrum(args):
    A = load_matrix_spec(_load(args.spec))
    S = spectrum(A)
    doc = S.to_json()
    doc["backend"] = A.space.descriptor()
    _emit(doc, f"{len(doc['points'])} points, resolution {S.resolution:.3e}", args)
    return EXIT_OK


def cmd_verify(args):
    doc = _load(args.certificate)
    try:
        A, *_ = certificate_from_json(doc)
        cert = reverify(doc)
    except (ConfigurationError, StructuralError, KeyError, TypeError, ValueError) as exc:
        raise SpecError(f"malformed certificate: {exc}") from exc
    ok = cert.verified
    out = {"verified": cert.verified, "residual": cert.reconstruction_residual, "tol": cert.tol,
           "claims": [c.to_json() for c in cert.spectral_claims]}
    text = _cert_text(cert)
    if args.replay:
        if "trace" not in doc:
            raise SpecError("certificate has no trace to replay")
        dev = replay_trace(A, doc["trace"])
        out["replay_deviation"] = dev
        ok = ok and dev <= REPLAY_TOL
        text += f"\nreplay deviation: {dev:.3e}"
    _emit(out, text, args)
    return EXIT_OK if ok else EXIT_FAILED


def cmd_regroup(args):
    doc = _load(args.spec)
    try:
        space = make_backend(doc["backend"])
        factors = [matrix_from_json(space, f) for f in doc["factors"]]
    except (ConfigurationError, StructuralError, KeyError, TypeError, ValueError) as exc:
        raise SpecError(str(exc)) from exc
    out = regroup_unitriangular(factors)
    before, after = factors[0].data, out[0].data
    for F in factors[1:]:
        before = before @ F.data
    for F in out[1:]:
        after = after @ F.data
    residual = float(np.abs(before - after).max())
    check_unipotent_factors(out)
    ok = residual <= REGROUP_TOL and len(out) == len(factors) // 2 + 1
    result = {"factors": [matrix_to_json(F) for F in out], "count": len(out), "product_residual": residual,
              "unipotent": True}
    _emit(result, f"{len(factors)} -> {len(out)} unipotent factors, product residual {residual:.3e}", args)
    return EXIT_OK if ok else EXIT_FAILED


def cmd_demo(args):
    rows = run_T_suite(samples=args.samples, eps=args.epsilon, seed=args.seed)
    doc = {"rows": [{"matrix": r.matrix, "check": r.check, "outcome": r.outcome, "passed": r.passed} for r in rows],
           "passed": all(r.passed for r in rows)}
    width = max(len(r.check) for r in rows)
    text = "\n".join(f"{r.matrix:<3} {r.check:<{width}}  {'PASS' if r.passed else 'FAIL'}  {r.outcome}" for r in rows)
    _emit(doc, text, args)
    return EXIT_OK if doc["passed"] else EXIT_FAILED


def cmd_singleexp(args):
    A = load_matrix_spec(_load(args.spec))
    _, cert = single_exp_finite(A)
    _emit(cert.to_json(A), _cert_text(cert), args)
    return EXIT_OK if cert.verified else EXIT_FAILED


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--epsilon", type=float, default=0.25, help="radius of the disks around the n-th roots of unity")
    common.add_argument("--tol", type=float, default=1e-8, help="residual tolerance recorded in the certificate")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--output", choices=("json", "text"), default="json")
    common.add_argument("-o", dest="out", metavar="FILE", help="write output to FILE instead of stdout")

    parser = argparse.ArgumentParser(prog="expfact", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("factorize", parents=[common], help="factor a matrix as exp(B1) exp(B2)")
    p.add_argument("spec")
    p.add_argument("--triangular", action="store_true", help="use the triangular construction directly")
    p.set_defaults(func=cmd_factorize)

    p = sub.add_parser("spectrum", parents=[common], help="pointwise eigenvalues as a point cloud")
    p.add_argument("spec")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("verify", parents=[common], help="recheck a certificate")
    p.add_argument("certificate")
    p.add_argument("--replay", action="store_true", help="also replay the stored reduction trace")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("regroup", parents=[common], help="regroup alternating unitriangular factors")
    p.add_argument("spec")
    p.set_defaults(func=cmd_regroup)

    p = sub.add_parser("demo", parents=[common], help="built-in demonstrations")
    p.add_argument("name", choices=("t-counterexample",))
    p.add_argument("--samples", type=int, default=257)
    p.set_defaults(func=cmd_demo)

    p = sub.add_parser("singleexp", parents=[common], help="one exponential on FinitePoints")
    p.add_argument("spec")
    p.set_defaults(func=cmd_singleexp)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SPEC
    except ExpFactError as exc:
        trace = getattr(exc, "trace", None)
        doc = {"error": type(exc).__name__, "message": str(exc)}
        if trace is not None:
            doc["trace"] = trace.to_json()
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        print(dumps(doc))
        return EXIT_PIPELINE


if __name__ == "__main__":
    sys.exit(main())
