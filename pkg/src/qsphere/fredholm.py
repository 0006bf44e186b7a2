"""Fredholm modules, their trace functionals and the pairing with K-theory.

Exact traces
------------
In every representation a monomial acts as a weighted shift, so its diagonal
entry at ``|k>`` is read off by walking the word from the right.  Each
letter contributes a power ``q^{-(k_i + offset)}`` and, when it moves along
mode ``a``, a square-root factor attached to the edge it crosses.  For a
word with zero net shift every edge is crossed an even number of times,
so the square roots pair up and the entry becomes::

    q^c * q^{-e.k} * prod_edges (1 - q^{-2 l} q^{-2 k_a})^{count/2}

Expanding the binomials gives finitely many pure exponentials in ``k``; each
mode is then summed with ``q^m / (q^m - 1)``.  Walks that would dip below
level zero pick up the vanishing factor at level zero automatically.

Numeric traces
--------------
Truncated traces are summed over the interior box, where they agree with the
infinite-dimensional entries, and the rest is bounded by a geometric tail.
"""

from __future__ import annotations

import cmath
import math
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from math import comb

import numpy as np
import scipy.sparse as sp

from .algebra import ContextError, NCPoly, SphereCtx
from .coefficients import QRat, Scalar, geometric_series_sum
from .kmatrices import chern0_idempotent, chern_half_unitary
from .representations import (
    Cutoff,
    RepHandle,
    build_rep,
    interior_mask,
    rep_apply,
)

__all__ = [
    "DivergentTraceError",
    "EvenModule",
    "OddModule",
    "PairingReport",
    "tau0",
    "tau0_numeric",
    "tau1_exact",
    "tau1_numeric",
    "monomial_trace",
    "commutator_F",
    "trace_norm",
    "phi_exact",
    "phi_numeric",
    "pairing_matrix",
    "chi",
]


class DivergentTraceError(ArithmeticError):
    """The requested trace is not finite (an index is summed without decay)."""


def chi(m):
    """``1`` for ``m > 0`` and ``-1`` for ``m <= 0``."""
    return np.where(np.asarray(m) > 0, 1.0, -1.0)


# ---------------------------------------------------------------------------
# word walks
# ---------------------------------------------------------------------------

def _modes(ctx: SphereCtx) -> int:
    return ctx.top if ctx.is_even else ctx.top - 1


@lru_cache(maxsize=None)
def _actions(ctx: SphereCtx) -> dict:
    """code -> (mode or None, step, first mode of the q-power, Fourier step)."""
    M = _modes(ctx)
    out = {}
    if ctx.is_even:
        out[1] = (None, 0, 0, 0)
        for i in range(1, ctx.top + 1):
            out[2 * i + 1] = (i - 1, -1, i, 0)
            out[2 * i] = (i - 1, +1, i, 0)
    else:
        out[3] = (None, 0, 0, +1)
        out[2] = (None, 0, 0, -1)
        for i in range(2, ctx.top + 1):
            out[2 * i + 1] = (i - 2, -1, i - 1, 0)
            out[2 * i] = (i - 2, +1, i - 1, 0)
    assert all(a[2] <= M for a in out.values())
    return out


@dataclass(frozen=True)
class Walk:
    shift: tuple[int, ...]
    d0: int
    qconst: int
    kexp: tuple[int, ...]
    edges: tuple[tuple[tuple[int, int], int], ...]

    @property
    def closed(self) -> bool:
        return not any(self.shift)


@lru_cache(maxsize=100_000)
def walk(ctx: SphereCtx, word: tuple[int, ...]) -> Walk:
    M = _modes(ctx)
    act = _actions(ctx)
    off = [0] * M
    kexp = [0] * M
    qconst = 0
    d0 = 0
    edges: Counter = Counter()
    for g in reversed(word):
        mode, step, first, f = act[g]
        for j in range(first, M):
            kexp[j] += 1
            qconst -= off[j]
        if step < 0:
            edges[(mode, off[mode])] += 1
            off[mode] -= 1
        elif step > 0:
            edges[(mode, off[mode] + 1)] += 1
            off[mode] += 1
        d0 += f
    return Walk(tuple(off), d0, qconst, tuple(kexp), tuple(sorted(edges.items())))


def _series(w: Walk) -> dict[tuple[int, ...], dict[int, int]]:
    """Diagonal entry as ``{k-exponent vector: Laurent coefficient in q}``."""
    series = {w.kexp: {w.qconst: 1}}
    for (a, lvl), cnt in w.edges:
        p = cnt // 2
        nxt: dict = {}
        for e, lau in series.items():
            for j in range(p + 1):
                c = comb(p, j) * (-1) ** j
                e2 = list(e)
                e2[a] += 2 * j
                e2 = tuple(e2)
                tgt = nxt.setdefault(e2, {})
                for qe, v in lau.items():
                    k = qe - 2 * lvl * j
                    tgt[k] = tgt.get(k, 0) + c * v
        series = nxt
    return series


@lru_cache(maxsize=100_000)
def _closed_trace(ctx: SphereCtx, word: tuple[int, ...]) -> QRat:
    w = walk(ctx, word)
    total = QRat.of(0)
    for e, lau in _series(w).items():
        lau = {k: v for k, v in lau.items() if v}
        if not lau:
            continue
        if any(x <= 0 for x in e):
            raise DivergentTraceError(f"trace of {word} diverges")
        term = QRat.from_laurent(lau)
        for x in e:
            term = term * geometric_series_sum(x)
        total = total + term
    return total


def monomial_trace(ctx: SphereCtx, word) -> QRat:
    """``sum_k <k| psi(word) |k>`` over the non-Fourier modes (``x0`` taken with sign +)."""
    word = tuple(word)
    if not walk(ctx, word).closed:
        return QRat.of(0)
    return _closed_trace(ctx, word)


# ---------------------------------------------------------------------------
# tau^0
# ---------------------------------------------------------------------------

def tau0(ctx: SphereCtx, p: NCPoly) -> QRat:
    """Average of the point evaluations over the circle: the ``lam^0`` coefficient."""
    t = ctx.top
    up, down = 2 * t + 1, 2 * t
    if t == 0:
        raise ContextError("tau0 needs a sphere of dimension >= 1")
    acc = Scalar.of(0)
    for w, c in p.terms.items():
        if any(g not in (up, down) for g in w):
            continue
        acc = acc + c * Scalar.lam(w.count(up) - w.count(down))
    return acc.coeff(0)


def tau0_numeric(ctx: SphereCtx, p: NCPoly, q: float) -> dict:
    """Exact quadrature of the circle average with enough roots of unity."""
    span = max((len(w) for w in p.terms), default=0)
    span += max((abs(d) for c in p.terms.values() for d in c.terms), default=0)
    m = 2 * span + 1
    total = 0.0 + 0.0j
    for j in range(m):
        lam = cmath.exp(2j * math.pi * j / m)
        rep = build_rep(ctx, "point_lambda", q, 1, lam)
        total += complex(rep_apply(rep, p).toarray()[0, 0]) if p.terms else 0.0
    value = (total / m).real
    mass = sum(abs(x.evaluate(q)) for c in p.terms.values() for x in c.terms.values())
    return {"value": value, "tail_bound": _roundoff(m, len(p.terms) * (span + 1), mass)}


# ---------------------------------------------------------------------------
# even module and tau^1
# ---------------------------------------------------------------------------

class EvenModule:
    """``psi_+ (+) psi_-`` with grading ``diag(1, -1)`` and ``F`` the swap."""

    def __init__(self, ctx: SphereCtx, q: float, cutoff: Cutoff | int):
        if not ctx.is_even:
            raise ContextError(f"the even module lives on even spheres, got {ctx}")
        self.ctx = ctx
        self.q = float(q)
        self.plus = build_rep(ctx, "even_plus", q, cutoff)
        self.minus = build_rep(ctx, "even_minus", q, cutoff)
        self.cutoff = self.plus.cutoff

    @property
    def half_dim(self) -> int:
        return self.plus.dim

    def psi(self, p: NCPoly) -> sp.csr_matrix:
        return sp.block_diag((rep_apply(self.plus, p), rep_apply(self.minus, p)), format="csr")

    def gamma(self) -> sp.csr_matrix:
        d = self.half_dim
        return sp.diags(np.r_[np.ones(d), -np.ones(d)].astype(complex), format="csr")

    def F(self) -> sp.csr_matrix:
        d = self.half_dim
        eye = sp.identity(d, dtype=complex, format="csr")
        return sp.bmat([[None, eye], [eye, None]], format="csr")


def _max_len(p: NCPoly) -> int:
    return max((len(w) for w in p.terms), default=0)


def _tail(M: int, B: int, r: float) -> float:
    """``sum r^{|k|}`` over ``k in N^M`` outside the box ``{0..B}^M``."""
    if M == 0:
        return 0.0
    full = 1.0 / (1.0 - r)
    box = (1.0 - r ** (B + 1)) / (1.0 - r)
    return full ** M - box ** M


_EPS = float(np.finfo(float).eps)


def _roundoff(entries: int, depth: int, mass: float) -> float:
    """Floating-point allowance for a sum of ``entries`` diagonal values.

    Every generator has norm at most one, so each entry of a word operator is
    at most one in modulus and each diagonal value at most ``mass``; ``depth``
    counts the rounded operations behind one entry.
    """
    return _EPS * (depth + math.log2(max(entries, 2)) + 2) * entries * mass


def _word_bound(ctx: SphereCtx, word, q: float) -> float:
    """``C`` with ``|<k|psi(word)|k>| <= C |q|^{-|k|}`` (infinite if there is no decay)."""
    w = walk(ctx, tuple(word))
    if not w.closed:
        return 0.0
    if any(x < 1 for x in w.kexp):
        return math.inf
    return abs(q) ** w.qconst


def _phase_free(c: Scalar, what: str) -> QRat:
    if not c.is_phase_free():
        raise ValueError(f"{what} needs phase-free coefficients")
    return c.as_qrat()


def tau1_exact(ctx: SphereCtx, p: NCPoly) -> QRat:
    """``Tr(psi_+(p) - psi_-(p))``; monomials even in ``x0`` cancel."""
    if not ctx.is_even:
        raise ContextError(f"tau1 lives on even spheres, got {ctx}")
    total = QRat.of(0)
    for w, c in p.terms.items():
        if w.count(1) % 2 == 0:
            continue
        total = total + 2 * _phase_free(c, "tau1") * monomial_trace(ctx, w)
    return total


def tau1_numeric(mod: EvenModule, p: NCPoly) -> dict:
    ctx = mod.ctx
    if p.ctx != ctx:
        raise ContextError(f"polynomial on {p.ctx}, module on {ctx}")
    L = max(_max_len(p), 1)
    K = mod.cutoff.K
    if K < L:
        raise ValueError(f"cutoff {K} is below the word length {L}")
    op = rep_apply(mod.plus, p) - rep_apply(mod.minus, p)
    mask = interior_mask(mod.plus, L)
    diag = op.diagonal()[mask]
    value = float(np.sum(diag).real)
    r = 1.0 / abs(mod.q)
    C = 0.0
    for w, c in p.terms.items():
        if w.count(1) % 2:
            C += 2 * abs(c.as_qrat().evaluate(mod.q)) * _word_bound(ctx, w, mod.q)
    tail = C * _tail(_modes(ctx), K - L, r) if C else 0.0
    mass = 2 * sum(abs(c.as_qrat().evaluate(mod.q)) for c in p.terms.values())
    roundoff = _roundoff(int(mask.sum()), len(p.terms) * (L + 1), mass)
    return {"value": value, "tail_bound": tail + roundoff, "interior": int(mask.sum())}


# ---------------------------------------------------------------------------
# odd module and phi
# ---------------------------------------------------------------------------

class OddModule:
    """Fourier basis ``|k_0, k_1..k_n>``, ``D = k_0`` and ``F = chi(D)``."""

    def __init__(self, ctx: SphereCtx, q: float, cutoff: Cutoff | int, window: int | None = None):
        if ctx.is_even:
            raise ContextError(f"the odd module lives on odd spheres, got {ctx}")
        if isinstance(cutoff, int):
            cutoff = Cutoff(cutoff, window if window is not None else 8)
        self.ctx = ctx
        self.q = float(q)
        self.rep: RepHandle = build_rep(ctx, "odd_fourier", q, cutoff)
        self.cutoff = cutoff

    @property
    def dim(self) -> int:
        return self.rep.dim

    def psi(self, p: NCPoly) -> sp.csr_matrix:
        return rep_apply(self.rep, p)

    def D(self) -> sp.csr_matrix:
        return sp.diags(self.rep.grid()[0].astype(complex), format="csr")

    def F(self) -> sp.csr_matrix:
        return sp.diags(chi(self.rep.grid()[0]).astype(complex), format="csr")

    def d_multiplicities(self) -> dict[int, int]:
        k0 = self.rep.grid()[0]
        vals, counts = np.unique(k0, return_counts=True)
        return {int(v): int(c) for v, c in zip(vals, counts)}


def commutator_F(mod, p: NCPoly) -> sp.csr_matrix:
    if isinstance(mod, EvenModule):
        delta = rep_apply(mod.plus, p) - rep_apply(mod.minus, p)
        return sp.bmat([[None, -delta], [delta, None]], format="csr")
    a = mod.psi(p)
    F = mod.F()
    out = (F @ a - a @ F).tocsr()
    out.eliminate_zeros()
    return out


def trace_norm(op) -> float:
    """Sum of singular values."""
    m = sp.csr_matrix(op)
    m.eliminate_zeros()
    if m.nnz == 0:
        return 0.0
    rows_ok = np.all(np.diff(m.indptr) <= 1)
    cols_ok = np.all(np.bincount(m.indices, minlength=m.shape[1]) <= 1)
    if rows_ok and cols_ok:
        # a partial permutation times a diagonal: singular values are the moduli
        return float(np.sum(np.abs(m.data)))
    # restrict to the support before the dense SVD
    rows = np.unique(m.nonzero()[0])
    cols = np.unique(m.indices)
    block = m[rows][:, cols].toarray()
    if block.size > 25_000_000:
        raise ValueError("operator too large for a dense singular value decomposition")
    return float(np.sum(np.linalg.svd(block, compute_uv=False)))


def _phase_terms(ctx, p: NCPoly):
    for w, c in sorted(p.terms.items()):
        for d, x in sorted(c.terms.items()):
            yield w, d, x


def phi_exact(ctx: SphereCtx, a: NCPoly, b: NCPoly) -> QRat:
    """``1/2 Tr(psi(a) [F, psi(b)])``.

    For a pair of monomials with zero total shift the commutator multiplies
    the diagonal by ``chi(k0 + d0) - chi(k0)``, whose sum over ``k0`` is
    ``2 d0``; ``d0`` is the Fourier shift of the ``b`` monomial.
    """
    if ctx.is_even:
        raise ContextError(f"phi lives on odd spheres, got {ctx}")
    total = QRat.of(0)
    for wa, da, xa in _phase_terms(ctx, a):
        d0a = walk(ctx, wa).d0 + da
        for wb, db, xb in _phase_terms(ctx, b):
            d0b = walk(ctx, wb).d0 + db
            if d0b == 0 or d0a + d0b != 0:
                continue
            total = total + xa * xb * d0b * monomial_trace(ctx, wa + wb)
    return total


def phi_numeric(mod: OddModule, a: NCPoly, b: NCPoly) -> dict:
    ctx = mod.ctx
    La, Lb = _max_len(a), _max_len(b)
    L = max(La + Lb, 1)
    K0, K = mod.cutoff.K0, mod.cutoff.K
    if K0 < 2 * L:
        raise ValueError(f"Fourier window {K0} too small for words of total length {L}; need {2 * L}")
    if K < L:
        raise ValueError(f"cutoff {K} is below the word length {L}")
    prod = mod.psi(a) @ commutator_F(mod, b)
    mask = interior_mask(mod.rep, L)
    diag = prod.diagonal()[mask]
    value = 0.5 * float(np.sum(diag).real)
    r = 1.0 / abs(mod.q)
    C = 0.0
    for wa, da, xa in _phase_terms(ctx, a):
        d0a = walk(ctx, wa).d0 + da
        for wb, db, xb in _phase_terms(ctx, b):
            d0b = walk(ctx, wb).d0 + db
            if d0b == 0 or d0a + d0b != 0:
                continue
            C += abs(xa.evaluate(mod.q) * xb.evaluate(mod.q)) * abs(d0b) * _word_bound(ctx, wa + wb, mod.q)
    tail = C * _tail(_modes(ctx), K - L, r) if C else 0.0
    mass = sum(abs(x.evaluate(mod.q)) for _, _, x in _phase_terms(ctx, a))
    mass *= sum(abs(x.evaluate(mod.q)) for _, _, x in _phase_terms(ctx, b))
    roundoff = _roundoff(int(mask.sum()), len(a.terms) * len(b.terms) * (L + 2), mass)
    return {"value": value, "tail_bound": tail + roundoff}


# ---------------------------------------------------------------------------
# pairing
# ---------------------------------------------------------------------------

@dataclass
class PairingCell:
    khom: str
    ktheory: str
    exact: QRat
    numeric: float | None = None
    bound: float | None = None

    def to_json(self) -> dict:
        return {
            "khom": self.khom,
            "ktheory": self.ktheory,
            "exact": str(self.exact),
            "numeric": self.numeric,
            "bound": self.bound,
        }


@dataclass
class PairingReport:
    N: int
    n: int
    mode: str
    q: float | None
    cutoff: int | None
    cells: list[PairingCell] = field(default_factory=list)

    def cell(self, khom: str, ktheory: str) -> PairingCell:
        for c in self.cells:
            if (c.khom, c.ktheory) == (khom, ktheory):
                return c
        raise KeyError((khom, ktheory))

    @property
    def integral(self) -> bool:
        return all(c.exact.is_integer() for c in self.cells)

    def numeric_ok(self, tol: float = 0.0) -> bool:
        """Every numeric value lies within its bound (plus ``tol``) of the exact value."""
        for c in self.cells:
            if c.numeric is None:
                continue
            if abs(c.numeric - c.exact.evaluate(self.q)) > c.bound + tol:
                return False
        return True

    def to_json(self) -> dict:
        return {
            "sphere": self.N,
            "n": self.n,
            "mode": self.mode,
            "q": self.q,
            "cutoff": self.cutoff,
            "cells": [c.to_json() for c in self.cells],
        }


def default_cutoff(ctx: SphereCtx, base: int = 40, cap: int = 10**6, window: int = 0) -> int:
    """Per-mode cutoff: ``base`` for one mode, shrunk so the basis stays below ``cap``."""
    M = _modes(ctx)
    extra = 2 * window + 1 if window else 1
    if M == 0:
        return base
    K = base
    while K > 1 and extra * (K + 1) ** M > cap:
        K -= 1
    return K


def pairing_matrix(ctx: SphereCtx, mode: str = "exact", q: float = 2.0, cutoff: int | None = None) -> PairingReport:
    """Pairings of ``epsilon``, ``mu`` with ``[1]`` and ``e`` (even) or ``V`` (odd)."""
    if mode not in ("exact", "numeric"):
        raise ValueError(f"mode must be 'exact' or 'numeric', got {mode!r}")
    one = ctx.one()
    numeric = mode == "numeric"
    if ctx.is_even:
        ch0 = chern0_idempotent(ctx)
        cells = [
            PairingCell("epsilon", "one", tau0(ctx, one)),
            PairingCell("epsilon", "e", tau0(ctx, ch0)),
            PairingCell("mu", "one", tau1_exact(ctx, one)),
            PairingCell("mu", "e", tau1_exact(ctx, ch0)),
        ]
        if numeric:
            K = cutoff if cutoff is not None else default_cutoff(ctx)
            mod = EvenModule(ctx, q, K)
            for cell, p in zip(cells, (one, ch0, one, ch0)):
                r = tau0_numeric(ctx, p, q) if cell.khom == "epsilon" else tau1_numeric(mod, p)
                cell.numeric, cell.bound = r["value"], r["tail_bound"]
    else:
        chain = chern_half_unitary(ctx)
        total = QRat.of(0)
        for (wa, wb), c in chain.items():
            total = total + _phase_free(c, "pairing") * phi_exact(
                ctx, NCPoly.monomial(ctx, wa), NCPoly.monomial(ctx, wb)
            )
        cells = [
            PairingCell("epsilon", "one", tau0(ctx, one)),
            PairingCell("mu", "V", total),
        ]
        if numeric:
            L = max(len(wa) + len(wb) for wa, wb in chain.terms)
            window = 2 * L
            K = cutoff if cutoff is not None else default_cutoff(ctx, window=window)
            mod = OddModule(ctx, q, Cutoff(K, window))
            r0 = tau0_numeric(ctx, one, q)
            cells[0].numeric, cells[0].bound = r0["value"], r0["tail_bound"]
            val, bound = 0.0, 0.0
            for (wa, wb), c in chain.items():
                cq = c.as_qrat().evaluate(q)
                r = phi_numeric(mod, NCPoly.monomial(ctx, wa), NCPoly.monomial(ctx, wb))
                val += cq * r["value"]
                bound += abs(cq) * r["tail_bound"]
            cells[1].numeric, cells[1].bound = val, bound
    return PairingReport(
        ctx.N,
        _modes(ctx),
        mode,
        float(q) if numeric else None,
        K if numeric else None,
        cells,
    )
