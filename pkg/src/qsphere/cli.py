"""Command-line front end.

    qsphere verify --sphere 4 --check unipotent
    qsphere rep --sphere 2 --kind even_plus --report spectrum --poly x0
    qsphere trace --sphere 2 --functional tau1 --poly x0
    qsphere pair --sphere 3 --exact --json

Exit status: 0 when every requested check passes, 1 when one fails, 2 on
usage errors (bad flags, unparsable polynomials, wrong sphere parity).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .algebra import ContextError, SphereCtx, confluence_probe, sphere
from .coefficients import PoleError
from .fredholm import (
    DivergentTraceError,
    EvenModule,
    OddModule,
    default_cutoff,
    pairing_matrix,
    phi_exact,
    phi_numeric,
    tau0,
    tau0_numeric,
    tau1_exact,
    tau1_numeric,
)
from .kmatrices import (
    build_idempotent,
    build_unipotent,
    build_unitary,
    check_interrelations,
    check_q_inverse_isomorphism,
    verify_identity,
)
from .parser import ParseError, parse_poly, render_poly
from .representations import (
    KINDS,
    Cutoff,
    build_rep,
    generator_norms,
    relation_residual,
    rho_covariance_check,
    sigma_intertwine_check,
    spec_identity_check,
    spectrum_report,
)

CHECKS = ("unipotent", "idempotent", "unitary", "selfadjoint", "interrelations", "q-inverse", "confluence")
REPORTS = ("residuals", "spectrum", "spec-id", "sigma-intertwine", "rho", "norms")


class UsageError(Exception):
    pass


def _seed() -> int:
    raw = os.environ.get("QSPHERE_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"QSPHERE_SEED must be an integer, got {raw!r}") from None


def _ctx(args) -> SphereCtx:
    if args.sphere < 1:
        raise UsageError("--sphere takes a dimension >= 1")
    return sphere(args.sphere)


def _emit(args, payload: dict, lines: list[str]):
    if args.json:
        print(json.dumps(payload, indent=2, default=str))
    else:
        print("\n".join(lines))


def _verdict(ok: bool) -> str:
    return "PASS" if ok else "FAIL"


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def cmd_verify(args) -> int:
    ctx = _ctx(args)
    c = args.check
    if c in ("unipotent", "selfadjoint"):
        rep = verify_identity(build_unipotent(ctx), c)
        ok, payload = rep.passed, rep.to_json()
    elif c == "idempotent":
        rep = verify_identity(build_idempotent(ctx), c)
        ok, payload = rep.passed, rep.to_json()
    elif c == "unitary":
        rep = verify_identity(build_unitary(ctx), c)
        ok, payload = rep.passed, rep.to_json()
    elif c == "interrelations":
        rep = check_interrelations(ctx)
        ok, payload = rep.passed, rep.to_json()
    elif c == "q-inverse":
        rep = check_q_inverse_isomorphism(ctx)
        ok, payload = rep.passed, rep.to_json()
    else:
        rep = confluence_probe(ctx, trials=args.trials, max_len=args.max_len, seed=_seed())
        ok = rep.all_unique
        payload = {
            "check": c,
            "pass": ok,
            "trials": rep.trials,
            "strategies": list(rep.strategies),
            "witnesses": [str(w) for w in rep.witnesses],
        }
    payload = {"sphere": args.sphere, **payload}
    _emit(args, payload, [f"{c} on {ctx}: {_verdict(ok)}"])
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# rep
# ---------------------------------------------------------------------------

def _rep_cutoff(ctx: SphereCtx, args, kind: str) -> Cutoff:
    window = args.window if kind == "odd_fourier" else 0
    K = args.cutoff if args.cutoff is not None else default_cutoff(ctx, base=12, window=window)
    return Cutoff(K, window)


def cmd_rep(args) -> int:
    ctx = _ctx(args)
    kind = args.kind or ("even_plus" if ctx.is_even else "odd_lambda")
    cutoff = _rep_cutoff(ctx, args, kind)
    report = args.report
    if report == "sigma-intertwine":
        ok = sigma_intertwine_check(ctx, args.q, cutoff)
        payload = {"report": report, "pass": ok}
        lines = [f"psi_+ o sigma = psi_- on {ctx}: {_verdict(ok)}"]
    elif report == "rho":
        lam = complex(args.lam)
        ok = rho_covariance_check(ctx, args.q, cutoff, lam)
        payload = {"report": report, "pass": ok, "lam": str(lam)}
        lines = [f"rho covariance on {ctx} at lam={lam}: {_verdict(ok)}"]
    else:
        rep = build_rep(ctx, kind, args.q, cutoff, complex(args.lam))
        if report == "residuals":
            res = relation_residual(rep)
            ok = res["max_residual"] <= args.tol
            payload = {"report": report, "kind": kind, "pass": ok, **res}
            lines = [f"{r['relation']}: {r['residual']:.3e}" for r in res["per_relation"]]
            lines.append(f"max residual {res['max_residual']:.3e} on {res['interior_size']} interior vectors: "
                         f"{_verdict(ok)}")
        elif report == "spectrum":
            if not args.poly:
                raise UsageError("--report spectrum needs --poly")
            p = parse_poly(args.poly, ctx)
            res = spectrum_report(rep, p, args.reference, tol=args.tol)
            ok = res["pass"]
            payload = {"report": report, "kind": kind, **res,
                       "eigenvalues": [v.real if v.imag == 0 else str(v) for v in res["eigenvalues"]]}
            lines = [f"exponent {m}: multiplicity {c}" for m, c in res["multiplicities"].items()]
            lines.append(f"max deviation {res['max_deviation']:.3e}: {_verdict(ok)}")
        elif report == "spec-id":
            res = spec_identity_check(rep, tol=args.tol)
            ok = res["pass"]
            payload = {"report": report, "kind": kind, **res}
            lines = [f"nonzero spectra of T*T and TT*: deviation {res['max_deviation']:.3e}: {_verdict(ok)}"]
        else:
            norms = generator_norms(rep)
            ok = all(v <= 1 + args.tol for v in norms.values())
            payload = {"report": report, "kind": kind, "pass": ok, "norms": norms}
            lines = [f"||{g}|| = {v:.12f}" for g, v in norms.items()]
            lines.append(f"all norms <= 1: {_verdict(ok)}")
    _emit(args, {"sphere": args.sphere, **payload}, lines)
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# trace
# ---------------------------------------------------------------------------

def cmd_trace(args) -> int:
    ctx = _ctx(args)
    p = parse_poly(args.poly, ctx)
    f = args.functional
    if f == "tau0":
        exact = tau0(ctx, p)
        num = None if args.exact else tau0_numeric(ctx, p, args.q)
    elif f == "tau1":
        if not ctx.is_even:
            raise UsageError("tau1 needs an even sphere")
        exact = tau1_exact(ctx, p)
        num = None
        if not args.exact:
            K = args.cutoff if args.cutoff is not None else default_cutoff(ctx)
            num = tau1_numeric(EvenModule(ctx, args.q, K), p)
    else:
        if ctx.is_even:
            raise UsageError("phi needs an odd sphere")
        if not args.poly2:
            raise UsageError("phi needs --poly2")
        b = parse_poly(args.poly2, ctx)
        exact = phi_exact(ctx, p, b)
        num = None
        if not args.exact:
            L = max([len(w) for w in p.terms] + [0]) + max([len(w) for w in b.terms] + [0])
            window = max(2 * L, 2)
            K = args.cutoff if args.cutoff is not None else default_cutoff(ctx, window=window)
            num = phi_numeric(OddModule(ctx, args.q, Cutoff(K, window)), p, b)
    payload = {"sphere": args.sphere, "functional": f, "poly": render_poly(p), "exact": str(exact)}
    lines = [f"{f} exact: {exact}"]
    ok = True
    if num is not None:
        ev = exact.evaluate(args.q)
        err = abs(num["value"] - ev)
        ok = err <= num["tail_bound"]
        payload.update(q=args.q, numeric=num["value"], bound=num["tail_bound"], exact_at_q=ev, consistent=ok)
        lines.append(f"{f} at q={args.q}: {num['value']:.15g} +/- {num['tail_bound']:.3e}")
        lines.append(f"exact at q={args.q}: {ev:.15g}; within bound: {_verdict(ok)}")
    _emit(args, payload, lines)
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# pair
# ---------------------------------------------------------------------------

def cmd_pair(args) -> int:
    ctx = _ctx(args)
    mode = "exact" if args.exact else "numeric"
    rep = pairing_matrix(ctx, mode, q=args.q, cutoff=args.cutoff)
    ok = rep.integral and (mode == "exact" or rep.numeric_ok())
    lines = []
    for c in rep.cells:
        line = f"<{c.khom}, {c.ktheory}> = {c.exact}"
        if c.numeric is not None:
            line += f"   numeric {c.numeric:.12g} +/- {c.bound:.3e}"
        lines.append(line)
    lines.append(_verdict(ok))
    _emit(args, rep.to_json(), lines)
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _real_q(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"q must be a real number, got {text!r}") from None
    if abs(v) <= 1:
        raise argparse.ArgumentTypeError(f"|q| must exceed 1 (use 1/q instead), got {v}")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qsphere", description="Quantum Euclidean spheres: algebra, K-theory, K-homology.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, numeric=True):
        p.add_argument("--sphere", type=int, required=True, help="dimension M of the sphere S^M_q")
        p.add_argument("--json", action="store_true", help="emit JSON")
        if numeric:
            p.add_argument("--q", type=_real_q, default=2.0, help="deformation parameter, |q| > 1 (default 2)")
            p.add_argument("--cutoff", type=_positive, default=None,
                           help="per-mode truncation (default 40 for one mode, shrunk to keep the basis under 1e6)")

    v = sub.add_parser("verify", help="symbolic identities")
    common(v, numeric=False)
    v.add_argument("--check", choices=CHECKS, required=True)
    v.add_argument("--trials", type=_positive, default=2000, help="random words for --check confluence")
    v.add_argument("--max-len", type=_positive, default=8)
    v.set_defaults(func=cmd_verify)

    r = sub.add_parser("rep", help="truncated representations")
    common(r)
    r.add_argument("--kind", choices=KINDS, default=None)
    r.add_argument("--report", choices=REPORTS, default="residuals")
    r.add_argument("--poly", default=None, help="element for --report spectrum")
    r.add_argument("--reference", choices=("q_pow_minus2k", "q_pow_minusk_signed"), default="q_pow_minus2k")
    r.add_argument("--lam", default="1", help="unit phase, Python complex syntax (e.g. 0.6+0.8j)")
    r.add_argument("--window", type=_positive, default=6, help="Fourier window K0 for odd_fourier")
    r.add_argument("--tol", type=float, default=1e-10)
    r.set_defaults(func=cmd_rep)

    t = sub.add_parser("trace", help="trace functionals tau0, tau1, phi")
    common(t)
    t.add_argument("--functional", choices=("tau0", "tau1", "phi"), required=True)
    t.add_argument("--poly", required=True)
    t.add_argument("--poly2", default=None, help="second argument of phi")
    t.add_argument("--exact", action="store_true", help="skip the numeric cross-check")
    t.set_defaults(func=cmd_trace)

    p = sub.add_parser("pair", help="pairing of K-homology with K-theory")
    common(p)
    p.add_argument("--exact", action="store_true", help="exact values only")
    p.set_defaults(func=cmd_pair)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    try:
        return args.func(args)
    except (UsageError, ParseError, ContextError, DivergentTraceError, PoleError, ValueError) as exc:
        print(f"qsphere: error: {exc}", file=sys.stderr)
        return 2


def run_cli(argv: list[str]) -> int:
    return main(argv)


if __name__ == "__main__":
    sys.exit(main())
