"""Irreducible representations on truncated orthonormal bases.

Every family acts by weighted shifts on a multi-index basis ``|k>``.  The
truncation is a hard wall: matrix elements leading out of ``{0..K}`` are
dropped, so identities are exact only on the *interior*, the basis vectors
at distance ``>= d`` from the wall, where ``d`` bounds the word length.

Kinds
-----
``even_plus`` / ``even_minus``
    even sphere, modes ``k_0..k_{n-1}``.
``odd_lambda``
    odd sphere at a fixed unit phase, modes ``k_1..k_n``.
``odd_fourier``
    odd sphere in the Fourier basis ``|k_0, k_1..k_n>``, ``k_0`` in
    ``{-K0..K0}``; the phase is the shift ``k_0 -> k_0 + 1``.
``point_lambda``
    one-dimensional: the top generator acts by the phase, the rest by zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
import scipy.sparse as sp

from .algebra import (
    ContextError,
    NCPoly,
    SphereCtx,
    _idx,
    _starred,
    apply_rho,
    apply_sigma,
    defining_relations,
)
from .coefficients import PoleError, Scalar

__all__ = [
    "Cutoff",
    "RepHandle",
    "KINDS",
    "build_rep",
    "with_generator",
    "rep_apply",
    "word_operator",
    "interior_mask",
    "relation_residual",
    "spectrum_report",
    "spec_identity_check",
    "sigma_intertwine_check",
    "rho_covariance_check",
    "operator_norm",
]

KINDS = ("even_plus", "even_minus", "odd_lambda", "odd_fourier", "point_lambda")


@dataclass(frozen=True)
class Cutoff:
    K: int
    K0: int = 0

    def __post_init__(self):
        if self.K < 1:
            raise ValueError(f"cutoff K must be >= 1, got {self.K}")
        if self.K0 < 0:
            raise ValueError(f"Fourier window K0 must be >= 0, got {self.K0}")


@dataclass
class RepHandle:
    ctx: SphereCtx
    kind: str
    q: float
    cutoff: Cutoff
    lam: complex
    shape: tuple[int, ...]
    fourier: bool
    gens: dict[int, sp.csr_matrix] = field(repr=False)

    @property
    def dim(self) -> int:
        return int(np.prod(self.shape, dtype=np.int64)) if self.shape else 1

    @property
    def modes(self) -> int:
        return len(self.shape) - (1 if self.fourier else 0)

    def grid(self) -> list[np.ndarray]:
        """Per-axis index arrays over the flattened basis (``k_0`` axis first when Fourier)."""
        if not self.shape:
            return []
        axes = np.indices(self.shape).reshape(len(self.shape), -1)
        out = [a.copy() for a in axes]
        if self.fourier:
            out[0] -= self.cutoff.K0
        return out

    def identity(self) -> sp.csr_matrix:
        return sp.identity(self.dim, dtype=complex, format="csr")


def _weighted_shift(shape, axis, shift, weights) -> sp.csr_matrix:
    """Operator ``|k> -> weights[k] |k + shift e_axis>`` with the hard wall."""
    dim = int(np.prod(shape, dtype=np.int64)) if shape else 1
    cols = np.arange(dim)
    if axis is None:
        return sp.csr_matrix((weights.astype(complex), (cols, cols)), shape=(dim, dim))
    idx = np.unravel_index(cols, shape)
    k = idx[axis]
    target = k + shift
    ok = (target >= 0) & (target < shape[axis]) & (weights != 0)
    new = list(idx)
    new[axis] = target
    new = [a[ok] for a in new]
    rows = np.ravel_multi_index(tuple(new), shape)
    return sp.csr_matrix((weights[ok].astype(complex), (rows, cols[ok])), shape=(dim, dim))


def _check_args(ctx: SphereCtx, kind: str, q: float):
    if kind not in KINDS:
        raise ValueError(f"unknown representation kind {kind!r}; choose from {KINDS}")
    if isinstance(q, complex) or not math.isfinite(q):
        raise ValueError("q must be a finite real number")
    if abs(q) <= 1:
        raise ValueError(
            f"|q| = {abs(q)} <= 1: use the q -> 1/q isomorphism and pass 1/q instead"
        )
    if kind.startswith("even") and not ctx.is_even:
        raise ContextError(f"{kind} needs an even sphere, got {ctx}")
    if kind.startswith("odd") and ctx.is_even:
        raise ContextError(f"{kind} needs an odd sphere, got {ctx}")


def build_rep(ctx: SphereCtx, kind: str, q: float, cutoff: Cutoff | int = 10, lam: complex = 1.0) -> RepHandle:
    """Generator operators of the chosen representation family."""
    q = float(q)
    _check_args(ctx, kind, q)
    if isinstance(cutoff, int):
        cutoff = Cutoff(cutoff, cutoff if kind == "odd_fourier" else 0)
    lam = complex(lam)
    if kind in ("odd_lambda", "point_lambda") and not math.isclose(abs(lam), 1.0, rel_tol=1e-12):
        raise ValueError(f"phase must lie on the unit circle, got |lam| = {abs(lam)}")
    K = cutoff.K
    gens: dict[int, sp.csr_matrix] = {}

    if kind == "point_lambda":
        shape: tuple[int, ...] = ()
        t = ctx.top
        for i in ctx.indices:
            for s in ((False,) if i == 0 else (False, True)):
                code = 1 if i == 0 else 2 * i + (0 if s else 1)
                v = 0.0
                if i == t:
                    v = lam.conjugate() if s else lam
                gens[code] = sp.csr_matrix(np.array([[v]], dtype=complex))
        return RepHandle(ctx, kind, q, cutoff, lam, shape, False, gens)

    fourier = kind == "odd_fourier"
    if fourier and cutoff.K0 < 1:
        raise ValueError("odd_fourier needs a Fourier window K0 >= 1")
    if ctx.is_even:
        n = ctx.top
        shape = (K + 1,) * n
    else:
        n = ctx.top - 1
        shape = ((2 * cutoff.K0 + 1,) if fourier else ()) + (K + 1,) * n
    base = 1 if fourier else 0
    dim = int(np.prod(shape, dtype=np.int64)) if shape else 1
    ks = [a.astype(float) for a in np.indices(shape).reshape(len(shape), -1)] if shape else []
    mode_k = ks[base:]

    def tail_power(first: int) -> np.ndarray:
        # q^{-(k_first + ... + k_last)} over the mode axes
        e = np.zeros(dim)
        for a in range(first, n):
            e = e + mode_k[a]
        return q ** (-e)

    def lowering(mode: int, first: int):
        w = np.sqrt(1.0 - q ** (-2.0 * mode_k[mode])) * tail_power(first)
        return _weighted_shift(shape, base + mode, -1, w)

    def raising(mode: int, first: int):
        w = np.sqrt(1.0 - q ** (-2.0 * (mode_k[mode] + 1))) * tail_power(first)
        return _weighted_shift(shape, base + mode, +1, w)

    if ctx.is_even:
        sign = 1.0 if kind == "even_plus" else -1.0
        gens[1] = _weighted_shift(shape, None, 0, sign * tail_power(0))
        for i in range(1, n + 1):
            gens[2 * i + 1] = lowering(i - 1, i)
            gens[2 * i] = raising(i - 1, i)
    else:
        if fourier:
            w = tail_power(0)
            gens[3] = _weighted_shift(shape, 0, +1, w)
            gens[2] = _weighted_shift(shape, 0, -1, w)
        else:
            gens[3] = _weighted_shift(shape, None, 0, lam * tail_power(0))
            gens[2] = _weighted_shift(shape, None, 0, lam.conjugate() * tail_power(0))
        for i in range(2, n + 2):
            gens[2 * i + 1] = lowering(i - 2, i - 1)
            gens[2 * i] = raising(i - 2, i - 1)
    for m in gens.values():
        m.eliminate_zeros()
    return RepHandle(ctx, kind, q, cutoff, lam, shape, fourier, gens)


def with_generator(rep: RepHandle, code: int, op) -> RepHandle:
    """Copy of ``rep`` with one generator operator replaced."""
    gens = dict(rep.gens)
    gens[code] = sp.csr_matrix(op, dtype=complex)
    return RepHandle(rep.ctx, rep.kind, rep.q, rep.cutoff, rep.lam, rep.shape, rep.fourier, gens)


def word_operator(rep: RepHandle, word) -> sp.csr_matrix:
    out = rep.identity()
    for g in reversed(tuple(word)):
        out = rep.gens[g] @ out
    return out


def _phase_shift(rep: RepHandle, d: int) -> sp.csr_matrix:
    return _weighted_shift(rep.shape, 0, d, np.ones(rep.dim))


def _scalar_operator(rep: RepHandle, s: Scalar, phase: complex | None):
    """A coefficient as an operator (or number); the formal phase becomes a shift in the Fourier basis."""
    out = None
    for d, c in sorted(s.terms.items()):
        try:
            v = c.evaluate(rep.q)
        except PoleError as exc:
            raise PoleError(f"coefficient {c} has a pole at q = {rep.q}") from exc
        if rep.fourier and phase is None and d != 0:
            term = _phase_shift(rep, d) * v
        else:
            lam = rep.lam if phase is None else complex(phase)
            # unit phases: a negative power is the conjugate, exactly
            term = v * (lam ** d if d >= 0 else lam.conjugate() ** -d)
        out = term if out is None else out + term
    return out


def rep_apply(rep: RepHandle, p: NCPoly, phase: complex | None = None) -> sp.csr_matrix:
    """``psi(p)`` as a sparse matrix; ``phase`` overrides the value of the formal phase."""
    if p.ctx != rep.ctx:
        raise ContextError(f"polynomial on {p.ctx}, representation on {rep.ctx}")
    return terms_operator(rep, [(c, w) for w, c in sorted(p.terms.items())], phase)


def terms_operator(rep: RepHandle, terms, phase: complex | None = None) -> sp.csr_matrix:
    """Operator of an unreduced combination ``[(coeff, word)]``."""
    acc = sp.csr_matrix((rep.dim, rep.dim), dtype=complex)
    for c, w in terms:
        s = Scalar.of(c)
        if not s:
            continue
        op = word_operator(rep, w)
        k = _scalar_operator(rep, s, phase)
        acc = acc + (k @ op if sp.issparse(k) else op * k)
    acc.eliminate_zeros()
    return acc


def interior_mask(rep: RepHandle, margin: int) -> np.ndarray:
    """Basis vectors whose every index stays ``margin`` away from the wall."""
    if not rep.shape:
        return np.ones(1, dtype=bool)
    mask = np.ones(rep.dim, dtype=bool)
    g = rep.grid()
    for a, k in enumerate(g):
        if rep.fourier and a == 0:
            mask &= np.abs(k) <= rep.cutoff.K0 - margin
        else:
            mask &= k <= rep.cutoff.K - margin
    return mask


def _max_abs(m) -> float:
    m = sp.csr_matrix(m)
    return float(np.max(np.abs(m.data))) if m.nnz else 0.0


def relation_residual(rep: RepHandle, margin: int | None = None) -> dict:
    """Largest entry of each defining relation on the interior columns."""
    rels = defining_relations(rep.ctx)
    d = max(r.max_len for r in rels) if margin is None else margin
    mask = interior_mask(rep, d)
    per = []
    for r in rels:
        op = terms_operator(rep, r.terms)
        per.append({"relation": r.name, "residual": _max_abs(op[:, mask])})
    return {
        "max_residual": max((p["residual"] for p in per), default=0.0),
        "margin": d,
        "interior_size": int(mask.sum()),
        "dim": rep.dim,
        "per_relation": per,
    }


def operator_norm(op) -> float:
    """Spectral norm of a truncated operator (dense at desk scale)."""
    m = sp.csr_matrix(op)
    if m.shape[0] == 0 or m.nnz == 0:
        return 0.0
    # weighted shifts: one entry per row and column means the norm is the max modulus
    if np.all(np.diff(m.indptr) <= 1) and np.all(np.bincount(m.indices, minlength=m.shape[1]) <= 1):
        return _max_abs(m)
    return float(np.linalg.norm(m.toarray(), 2))


def _interior_eigenvalues(rep: RepHandle, p: NCPoly, margin: int) -> np.ndarray:
    op = rep_apply(rep, p)
    mask = interior_mask(rep, margin)
    block = op[mask][:, mask]
    off = block - sp.diags(block.diagonal())
    if _max_abs(off) == 0.0:
        return np.sort_complex(block.diagonal())
    dense = block.toarray()
    if np.abs(dense @ dense.conj().T - dense.conj().T @ dense).max() > 1e-10:
        raise ValueError("spectrum_report needs a normal operator")
    return np.sort_complex(np.linalg.eigvals(dense))


def spectrum_report(rep: RepHandle, p: NCPoly, reference: str, tol: float = 1e-10) -> dict:
    """Match the interior eigenvalues of ``psi(p)`` against a power-of-q family.

    ``q_pow_minus2k``: each eigenvalue is ``q^{-2m}``.  ``q_pow_minusk_signed``:
    each eigenvalue is ``s q^{-m}`` with ``s`` the sign of the representation.
    Returns the eigenvalues, their exponents ``m`` and a multiplicity histogram.
    """
    if reference not in ("q_pow_minus2k", "q_pow_minusk_signed"):
        raise ValueError(f"unknown reference {reference!r}")
    ev = _interior_eigenvalues(rep, p, margin=max(p.degree(), 1))
    q = rep.q
    step = 2 if reference == "q_pow_minus2k" else 1
    sign = -1.0 if rep.kind == "even_minus" and reference == "q_pow_minusk_signed" else 1.0
    exps, worst, hist = [], 0.0, {}
    for lam in ev:
        mag = abs(lam)
        if mag == 0.0:
            worst = max(worst, 1.0)
            exps.append(None)
            continue
        m = max(0, round(-math.log(mag) / (step * math.log(abs(q)))))
        target = sign * float(q) ** (-step * m)
        worst = max(worst, abs(lam - target))
        exps.append(m)
        hist[m] = hist.get(m, 0) + 1
    return {
        "reference": reference,
        "eigenvalues": [complex(v) for v in ev],
        "exponents": exps,
        "multiplicities": dict(sorted(hist.items())),
        "max_deviation": worst,
        "pass": worst <= tol,
    }


def spec_identity_check(rep: RepHandle, i: int | None = None, tol: float = 1e-10) -> dict:
    """Nonzero spectra of ``T*T`` and ``TT*`` coincide for ``T = psi(x_i)``."""
    ctx = rep.ctx
    i = ctx.top if i is None else i
    T = rep.gens[1 if i == 0 else 2 * i + 1]
    a = (T.conj().T @ T).toarray()
    b = (T @ T.conj().T).toarray()
    ea = np.sort(np.linalg.eigvalsh(a))
    eb = np.sort(np.linalg.eigvalsh(b))
    cut = max(tol, 1e-14)
    ea = ea[np.abs(ea) > cut]
    eb = eb[np.abs(eb) > cut]
    if len(ea) != len(eb):
        return {"pass": False, "max_deviation": math.inf, "count": (len(ea), len(eb))}
    dev = float(np.max(np.abs(ea - eb))) if len(ea) else 0.0
    return {"pass": dev <= tol, "max_deviation": dev, "count": len(ea)}


def _generators(ctx: SphereCtx):
    for c in ctx.letters:
        yield c, NCPoly.monomial(ctx, (c,))


def sigma_intertwine_check(ctx: SphereCtx, q: float, cutoff: Cutoff | int, use_sigma: bool = True,
                           tol: float = 1e-12) -> bool:
    """``psi_+ o sigma = psi_-`` on every generator, entrywise."""
    plus = build_rep(ctx, "even_plus", q, cutoff)
    minus = build_rep(ctx, "even_minus", q, cutoff)
    for _, g in _generators(ctx):
        lhs = rep_apply(plus, apply_sigma(g) if use_sigma else g)
        if _max_abs(lhs - rep_apply(minus, g)) > tol:
            return False
    return True


def rho_covariance_check(ctx: SphereCtx, q: float, cutoff: Cutoff | int, lam: complex,
                         tol: float = 0.0) -> bool:
    """``psi_lam(g) = psi_1(rho_lam(g))`` on generators, in the stored entries."""
    at_lam = build_rep(ctx, "odd_lambda", q, cutoff, lam)
    at_one = build_rep(ctx, "odd_lambda", q, cutoff, 1.0)
    for _, g in _generators(ctx):
        lhs = rep_apply(at_lam, g)
        rhs = rep_apply(at_one, apply_rho(g), phase=lam)
        if _max_abs(lhs - rhs) > tol:
            return False
    return True


def generator_norms(rep: RepHandle) -> Mapping[str, float]:
    out = {}
    for c, m in sorted(rep.gens.items()):
        i, s = _idx(c), _starred(c)
        out[f"x{i}{'*' if s else ''}"] = operator_norm(m)
    return out
