"""Matrices over the sphere algebra: the unipotent, idempotent and unitary.

Also the symbolic checks built on them (identities, the ``q -> 1/q``
antidiagonal conjugation, interrelations between spheres) and the low-degree
Chern characters.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

from .algebra import (
    ContextError,
    NCPoly,
    SphereCtx,
    adjoint,
    render_monomial,
    structural_hom,
    substitute,
)
from .coefficients import QRat, Scalar

__all__ = [
    "AlgMatrix",
    "CyclicChain1",
    "IdentityReport",
    "build_unipotent",
    "build_idempotent",
    "build_unitary",
    "matrix_product",
    "matrix_adjoint",
    "matrix_trace",
    "verify_identity",
    "check_q_inverse_isomorphism",
    "check_interrelations",
    "chern0_idempotent",
    "chern_half_unitary",
    "chern0_closed_form",
    "chern_half_closed_form",
    "trace_closed_form",
    "unipotency_relations",
    "relations_outside_unipotency_span",
]

HALF = QRat.of(1) / 2


class AlgMatrix:
    """Square matrix of normal-form :class:`NCPoly` entries over one sphere."""

    __slots__ = ("ctx", "rows")

    def __init__(self, ctx: SphereCtx, rows: Sequence[Sequence[NCPoly]]):
        d = len(rows)
        if any(len(r) != d for r in rows):
            raise ValueError("AlgMatrix must be square")
        self.ctx = ctx
        self.rows = tuple(tuple(r) for r in rows)

    @classmethod
    def identity(cls, ctx, d: int) -> "AlgMatrix":
        return cls(ctx, [[ctx.one() if i == j else ctx.zero() for j in range(d)] for i in range(d)])

    @classmethod
    def zeros(cls, ctx, d: int) -> "AlgMatrix":
        return cls(ctx, [[ctx.zero()] * d for _ in range(d)])

    @property
    def dim(self) -> int:
        return len(self.rows)

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def map(self, f: Callable[[NCPoly], NCPoly]) -> "AlgMatrix":
        return AlgMatrix(self.ctx, [[f(e) for e in r] for r in self.rows])

    def _same(self, other: "AlgMatrix"):
        if other.ctx != self.ctx:
            raise ContextError(f"mixing {self.ctx} and {other.ctx}")
        if other.dim != self.dim:
            raise ValueError(f"dimension mismatch {self.dim} vs {other.dim}")

    def __add__(self, other: "AlgMatrix") -> "AlgMatrix":
        self._same(other)
        return AlgMatrix(self.ctx, [[a + b for a, b in zip(r, s)] for r, s in zip(self.rows, other.rows)])

    def __sub__(self, other: "AlgMatrix") -> "AlgMatrix":
        self._same(other)
        return AlgMatrix(self.ctx, [[a - b for a, b in zip(r, s)] for r, s in zip(self.rows, other.rows)])

    def __neg__(self):
        return self.map(lambda e: -e)

    def scale(self, c) -> "AlgMatrix":
        return self.map(lambda e: e * c)

    def __matmul__(self, other: "AlgMatrix") -> "AlgMatrix":
        return matrix_product(self, other)

    def is_zero(self) -> bool:
        return all(e.is_zero() for r in self.rows for e in r)

    def __eq__(self, other):
        if not isinstance(other, AlgMatrix):
            return NotImplemented
        return self.ctx == other.ctx and self.rows == other.rows

    __hash__ = None

    def to_json(self) -> list:
        from .parser import render_scalar

        return [
            [{render_monomial(w): render_scalar(c) for w, c in sorted(e.terms.items())} for e in r]
            for r in self.rows
        ]

    def __repr__(self):
        body = "; ".join(", ".join(str(e) for e in r) for r in self.rows)
        return f"AlgMatrix[{self.ctx}]({body})"


def _blocks(ctx, tl, tr, bl, br) -> AlgMatrix:
    rows = [list(a) + list(b) for a, b in zip(tl.rows, tr.rows)]
    rows += [list(a) + list(b) for a, b in zip(bl.rows, br.rows)]
    return AlgMatrix(ctx, rows)


def _diag(ctx, e: NCPoly, d: int) -> AlgMatrix:
    return AlgMatrix(ctx, [[e if i == j else ctx.zero() for j in range(d)] for i in range(d)])


def matrix_product(a: AlgMatrix, b: AlgMatrix) -> AlgMatrix:
    a._same(b)
    d = a.dim
    cols = [[b.rows[k][j] for k in range(d)] for j in range(d)]
    out = []
    for i in range(d):
        row = []
        for j in range(d):
            acc = a.ctx.zero()
            for x, y in zip(a.rows[i], cols[j]):
                if x and y:
                    acc = acc + x * y
            row.append(acc)
        out.append(row)
    return AlgMatrix(a.ctx, out)


def matrix_adjoint(a: AlgMatrix) -> AlgMatrix:
    d = a.dim
    return AlgMatrix(a.ctx, [[adjoint(a.rows[j][i]) for j in range(d)] for i in range(d)])


def matrix_trace(a: AlgMatrix) -> NCPoly:
    acc = a.ctx.zero()
    for i in range(a.dim):
        acc = acc + a.rows[i][i]
    return acc


def kron_identity(a: AlgMatrix, k: int = 2) -> AlgMatrix:
    """``a (x) 1_k``: each entry becomes a scalar ``k x k`` block."""
    d = a.dim
    rows = []
    for i in range(d):
        for s in range(k):
            row = []
            for j in range(d):
                for t in range(k):
                    row.append(a.rows[i][j] if s == t else a.ctx.zero())
            rows.append(row)
    return AlgMatrix(a.ctx, rows)


# ---------------------------------------------------------------------------
# the three recursive matrices
# ---------------------------------------------------------------------------

def _unipotent_even(ctx: SphereCtx, m: int) -> AlgMatrix:
    """``u_(2m)`` written with generators x0..xm of ``ctx``; x0 may be absent."""
    x0 = ctx.x(0) if ctx.is_even else ctx.zero()
    u = AlgMatrix(ctx, [[x0]])
    qi = QRat.q_power(-1)
    for k in range(1, m + 1):
        d = u.dim
        u = _blocks(ctx, u.scale(qi), _diag(ctx, ctx.x(k), d), _diag(ctx, ctx.xs(k), d), -u)
    return u


def build_unipotent(ctx: SphereCtx) -> AlgMatrix:
    """``u_(2n)`` on ``S^{2n}``; on odd spheres the same matrix with ``x0 = 0``."""
    return _unipotent_even(ctx, ctx.top)


def build_idempotent(ctx: SphereCtx) -> AlgMatrix:
    if not ctx.is_even:
        raise ContextError(f"the idempotent e lives on even spheres, got {ctx}")
    u = build_unipotent(ctx)
    return (AlgMatrix.identity(ctx, u.dim) + u).scale(HALF)


def _unitary(ctx: SphereCtx, m: int) -> AlgMatrix:
    if m == 1:
        return AlgMatrix(ctx, [[ctx.x(1)]])
    v = _unitary(ctx, m - 1)
    d = v.dim
    return _blocks(
        ctx,
        _diag(ctx, ctx.x(m), d),
        v.scale(QRat.q_power(-1)),
        -matrix_adjoint(v),
        _diag(ctx, ctx.xs(m), d),
    )


def build_unitary(ctx: SphereCtx) -> AlgMatrix:
    """``V_(2n+1)`` on ``S^{2n+1}``, built from ``V_(1) = x1``."""
    if ctx.is_even:
        raise ContextError(f"the unitary V lives on odd spheres, got {ctx}")
    return _unitary(ctx, ctx.top)


# ---------------------------------------------------------------------------
# identity checks
# ---------------------------------------------------------------------------

@dataclass
class IdentityReport:
    target: str
    passed: bool
    residual: AlgMatrix | tuple

    def to_json(self) -> dict:
        res = self.residual
        if isinstance(res, tuple):
            res = [r.to_json() for r in res]
        else:
            res = res.to_json()
        return {"target": self.target, "pass": self.passed, "residual": res}


def verify_identity(a: AlgMatrix, target: str) -> IdentityReport:
    one = AlgMatrix.identity(a.ctx, a.dim)
    if target == "unipotent":
        res = a @ a - one
        return IdentityReport(target, res.is_zero(), res)
    if target == "idempotent":
        res = a @ a - a
        return IdentityReport(target, res.is_zero(), res)
    if target == "unitary":
        ad = matrix_adjoint(a)
        r1 = a @ ad - one
        r2 = ad @ a - one
        return IdentityReport(target, r1.is_zero() and r2.is_zero(), (r1, r2))
    if target == "selfadjoint":
        res = a - matrix_adjoint(a)
        return IdentityReport(target, res.is_zero(), res)
    raise ValueError(f"unknown identity {target!r}")


@dataclass
class CheckReport:
    name: str
    passed: bool
    details: dict

    def to_json(self) -> dict:
        return {"check": self.name, "pass": self.passed, **self.details}


def _generator_scaling(ctx: SphereCtx, flip_generators: bool) -> dict[int, NCPoly]:
    n = ctx.top
    mq = QRat.of(-1) * QRat.q_power(1)
    images = {1: ctx.x(0) * (mq ** n)}
    for i in range(1, n + 1):
        c = mq ** (n - i)
        if flip_generators:
            images[2 * i + 1] = ctx.xs(i) * c
            images[2 * i] = ctx.x(i) * c
        else:
            images[2 * i + 1] = ctx.x(i) * c
            images[2 * i] = ctx.xs(i) * c
    return images


def check_q_inverse_isomorphism(ctx: SphereCtx, flip_q: bool = True) -> CheckReport:
    """Antidiagonal conjugation of ``u_(2n)`` realises ``A(S_{1/q}) = A(S_q)``.

    Substitute ``x0 -> (-q)^n x0``, ``x_i -> (-q)^(n-i) x_i*`` in ``u_(2n)``,
    then ``q -> 1/q`` in every coefficient (scalings included), then
    conjugate by the antidiagonal permutation; the result must be ``u_(2n)``.
    ``flip_q=False`` skips the parameter flip (negative control).
    """
    if not ctx.is_even:
        raise ContextError("the q -> 1/q check is formulated on even spheres")
    u = build_unipotent(ctx)
    images = _generator_scaling(ctx, flip_generators=True)
    m = u.map(lambda e: substitute(e, images, ctx))
    if flip_q:
        m = m.map(lambda e: e.map_coeffs(Scalar.invert_q))
    d = m.dim
    conj = AlgMatrix(ctx, [[m.rows[d - 1 - i][d - 1 - j] for j in range(d)] for i in range(d)])
    diff = conj - u
    return CheckReport("q-inverse", diff.is_zero(), {"n": ctx.top, "flip_q": flip_q})


def _block_substitute(u: AlgMatrix, images: dict[int, AlgMatrix], tgt: SphereCtx, k: int = 2) -> AlgMatrix:
    """Replace each generator in the entries of ``u`` by a ``k x k`` block."""
    d = u.dim
    big = [[tgt.zero()] * (d * k) for _ in range(d * k)]
    for i in range(d):
        for j in range(d):
            block = AlgMatrix.zeros(tgt, k)
            for w, c in u.rows[i][j].terms.items():
                term = AlgMatrix.identity(tgt, k)
                for g in w:
                    term = term @ images[g]
                block = block + term.scale(c)
            for s in range(k):
                for t in range(k):
                    big[i * k + s][j * k + t] = block.rows[s][t]
    return AlgMatrix(tgt, big)


def check_interrelations(ctx: SphereCtx) -> CheckReport:
    """On ``S^{2n+1}``: ``u'`` equals ``u_(2n-1) (x) 1_2`` and ``u''`` equals
    ``u_(2n)`` with ``x0 -> [[0, x0], [x0, 0]]``, ``x_j -> x_j 1_2``."""
    if ctx.is_even or ctx.top < 2:
        raise ContextError(f"interrelations need an odd sphere S^3 or larger, got {ctx}")
    u = build_unipotent(ctx)
    # u': x1 -> 0 and relabel, inside S^{2n-1}
    u1 = u.map(lambda e: structural_hom(e, "drop_x1_relabel"))
    small = SphereCtx(ctx.N - 2)
    u1 = AlgMatrix(small, u1.rows)
    lower = build_unipotent(small)
    tensor_ok = u1 == kron_identity(lower, 2)
    # u'': x1 = x1* = x0 and relabel, inside S^{2n}
    u2 = u.map(lambda e: structural_hom(e, "embed_even_in_odd"))
    even = SphereCtx(ctx.N - 1)
    u2 = AlgMatrix(even, u2.rows)
    ue = build_unipotent(even)
    z, x0 = even.zero(), even.x(0)
    images = {1: AlgMatrix(even, [[z, x0], [x0, z]])}
    for i in range(1, even.top + 1):
        images[2 * i + 1] = _diag(even, even.x(i), 2)
        images[2 * i] = _diag(even, even.xs(i), 2)
    block_ok = u2 == _block_substitute(ue, images, even)
    return CheckReport(
        "interrelations",
        tensor_ok and block_ok,
        {"u_prime_tensor": tensor_ok, "u_double_prime_blocks": block_ok},
    )


# ---------------------------------------------------------------------------
# Chern characters
# ---------------------------------------------------------------------------

def trace_closed_form(ctx: SphereCtx) -> NCPoly:
    """``(q^-1 - 1)^n x0``."""
    c = (QRat.q_power(-1) - 1) ** ctx.top
    return ctx.x(0) * c


def chern0_idempotent(ctx: SphereCtx) -> NCPoly:
    return matrix_trace(build_idempotent(ctx))


def chern0_closed_form(ctx: SphereCtx) -> NCPoly:
    n = ctx.top
    return NCPoly.constant(ctx, 2 ** (n - 1) if n >= 1 else HALF) + trace_closed_form(ctx) * HALF


class CyclicChain1:
    """``sum coeff * (a (x) b)`` with literal monomial tensor factors."""

    __slots__ = ("ctx", "terms")

    def __init__(self, ctx: SphereCtx, triples: Iterable[tuple[NCPoly, NCPoly, Scalar]] = ()):
        self.ctx = ctx
        acc: dict[tuple, Scalar] = {}
        for a, b, c in triples:
            c = Scalar.of(c)
            for wa, ca in a.terms.items():
                for wb, cb in b.terms.items():
                    v = c * ca * cb
                    key = (wa, wb)
                    acc[key] = acc[key] + v if key in acc else v
        self.terms = {k: v for k, v in acc.items() if v}

    def items(self):
        return self.terms.items()

    def __eq__(self, other):
        if not isinstance(other, CyclicChain1):
            return NotImplemented
        return self.ctx == other.ctx and self.terms == other.terms

    __hash__ = None

    def __repr__(self):
        from .parser import render_scalar

        parts = [
            f"{render_scalar(c)}*({render_monomial(a)} (x) {render_monomial(b)})"
            for (a, b), c in sorted(self.terms.items())
        ]
        return "CyclicChain1(" + " + ".join(parts) + ")"


def chern_half_unitary(ctx: SphereCtx) -> CyclicChain1:
    """``1/2 tr(V (x) V* - V* (x) V)`` as a literal chain."""
    v = build_unitary(ctx)
    vs = matrix_adjoint(v)
    d = v.dim
    triples = []
    for i in range(d):
        for j in range(d):
            triples.append((v.rows[i][j], vs.rows[j][i], HALF))
            triples.append((vs.rows[i][j], v.rows[j][i], -HALF))
    return CyclicChain1(ctx, triples)


def chern_half_closed_form(ctx: SphereCtx) -> CyclicChain1:
    """``1/2 (q^-2 - 1)^n (x1 (x) x1* - x1* (x) x1)`` on ``S^{2n+1}``."""
    n = ctx.top - 1
    c = HALF * (QRat.q_power(-2) - 1) ** n
    x1, x1s = ctx.x(1), ctx.xs(1)
    return CyclicChain1(ctx, [(x1, x1s, c), (x1s, x1, -c)])


# ---------------------------------------------------------------------------
# relations read off from u^2 = 1
# ---------------------------------------------------------------------------

def _raw_unipotent(ctx: SphereCtx) -> list[list[dict]]:
    """``u`` with entries as unreduced ``{word: QRat}`` maps (the recursion only
    places single letters, so no reduction is needed)."""
    d = 1
    x0 = {(1,): QRat.of(1)} if ctx.is_even else {}
    u = [[x0]]
    qi = QRat.q_power(-1)
    for k in range(1, ctx.top + 1):
        xk, xks = {(2 * k + 1,): QRat.of(1)}, {(2 * k,): QRat.of(1)}
        new = [[{} for _ in range(2 * d)] for _ in range(2 * d)]
        for i in range(d):
            for j in range(d):
                new[i][j] = {w: c * qi for w, c in u[i][j].items()}
                new[d + i][d + j] = {w: -c for w, c in u[i][j].items()}
            new[i][d + i] = dict(xk)
            new[d + i][i] = dict(xks)
        u, d = new, 2 * d
    return u


def unipotency_relations(ctx: SphereCtx) -> list[dict]:
    """Entries of ``u^2 - 1`` computed in the free algebra (no rewriting)."""
    u = _raw_unipotent(ctx)
    d = len(u)
    out = []
    for i in range(d):
        for j in range(d):
            acc: dict = {(): QRat.of(-1)} if i == j else {}
            for k in range(d):
                for wa, ca in u[i][k].items():
                    for wb, cb in u[k][j].items():
                        w = wa + wb
                        acc[w] = acc[w] + ca * cb if w in acc else ca * cb
            acc = {w: c for w, c in acc.items() if c}
            if acc:
                out.append(acc)
    return out


def _row_reduce(rows: list[dict]) -> list[tuple]:
    """Echelon basis of a span of ``{word: QRat}`` vectors, as (pivot, row) pairs."""
    basis: list[tuple] = []
    for r in rows:
        r = dict(r)
        for piv, b in basis:
            c = r.get(piv)
            if c:
                for w, v in b.items():
                    nv = r.get(w, QRat.of(0)) - c * v
                    if nv:
                        r[w] = nv
                    else:
                        r.pop(w, None)
        if r:
            piv = min(r)
            inv = r[piv].inverse()
            r = {w: v * inv for w, v in r.items()}
            new_basis = []
            for p2, b in basis:
                c = b.get(piv)
                if c:
                    b = dict(b)
                    for w, v in r.items():
                        nv = b.get(w, QRat.of(0)) - c * v
                        if nv:
                            b[w] = nv
                        else:
                            b.pop(w, None)
                new_basis.append((p2, b))
            basis = new_basis + [(piv, r)]
    return basis


def relations_outside_unipotency_span(ctx: SphereCtx) -> list[str]:
    """Names of defining relations that are not linear combinations of the
    free-algebra entries of ``u^2 - 1``; empty when every relation is one."""
    from .algebra import defining_relations

    basis = _row_reduce(unipotency_relations(ctx))
    missing = []
    for rel in defining_relations(ctx):
        vec: dict = {}
        for c, w in rel.terms:
            vec[w] = vec.get(w, QRat.of(0)) + QRat.of(c)
        vec = {w: c for w, c in vec.items() if c}
        for piv, b in basis:
            c = vec.get(piv)
            if c:
                for w, v in b.items():
                    nv = vec.get(w, QRat.of(0)) - c * v
                    if nv:
                        vec[w] = nv
                    else:
                        vec.pop(w, None)
        if vec:
            missing.append(rel.name)
    return missing
