"""Polynomial *-algebra of the quantum Euclidean sphere and its normal forms.

Letters are encoded as small integers: ``x_i -> 2 i + 1`` and
``x_i* -> 2 i`` (``x_0`` is self-adjoint and always encoded as ``1``).
Sorting by code is exactly the monomial order used for normal forms:
index ascending, starred letters before unstarred ones within an index.

Oriented rules (``t`` is the top index, ``i < j``)::

    x_j  x_i  -> q^-1 x_i  x_j        x_j  x_i* -> q^-1 x_i* x_j
    x_j* x_i  -> q    x_i  x_j*       x_j* x_i* -> q    x_i* x_j*
    x_i  x_i* -> x_i* x_i + (1 - q^-2) s_{i-1}        (i < t)
    x_t* x_t  -> 1 - s_{t-1}
    x_t  x_t* -> 1 - q^-2 s_{t-1}

with ``s_0 = x_0^2`` on even spheres and ``s_0 = 0`` on odd spheres.

Termination: every rule either removes an inversion while keeping the letter
multiset, or lowers the multiset of indices (two letters of index ``i``
become two letters of a smaller index, or two top letters disappear); word
length never grows.  Confluence is checked empirically by
:func:`confluence_probe`.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Iterator, Mapping, NamedTuple, Sequence

from .coefficients import QRat, S_ZERO, Scalar

__all__ = [
    "SphereCtx",
    "GenSym",
    "NCPoly",
    "ContextError",
    "Relation",
    "sphere",
    "letter",
    "normal_form",
    "multiply",
    "adjoint",
    "s_element",
    "apply_sigma",
    "apply_rho",
    "structural_hom",
    "substitute",
    "defining_relations",
    "reduce_terms",
    "confluence_probe",
    "ProbeReport",
    "render_monomial",
]


class ContextError(ValueError):
    """Operation used on a sphere of the wrong parity or with foreign letters."""


# ---------------------------------------------------------------------------
# context and letters
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SphereCtx:
    """The sphere ``S^{N-1}_q``.

    ``N = 2n + 1`` gives the even sphere ``S^{2n}`` with generators
    ``x_0, x_1 .. x_n``; even ``N`` gives an odd sphere with generators
    ``x_1 .. x_{N/2}``.
    """

    N: int

    def __post_init__(self):
        if not isinstance(self.N, int) or self.N < 2:
            raise ContextError(f"sphere needs N >= 2, got {self.N!r}")

    @property
    def dim(self) -> int:
        return self.N - 1

    @property
    def is_even(self) -> bool:
        """True for even-dimensional spheres (odd N, generator x0 present)."""
        return self.N % 2 == 1

    @property
    def top(self) -> int:
        return self.N // 2

    @property
    def n(self) -> int:
        """``n`` in ``S^{2n}`` or ``S^{2n+1}``."""
        return self.dim // 2

    @property
    def indices(self) -> tuple[int, ...]:
        lo = 0 if self.is_even else 1
        return tuple(range(lo, self.top + 1))

    @property
    def letters(self) -> tuple[int, ...]:
        out = []
        for i in self.indices:
            if i > 0:
                out.append(2 * i)
            out.append(2 * i + 1)
        return tuple(out)

    def x(self, i: int) -> "NCPoly":
        return NCPoly.monomial(self, (letter(self, i),))

    def xs(self, i: int) -> "NCPoly":
        return NCPoly.monomial(self, (letter(self, i, True),))

    def one(self) -> "NCPoly":
        return NCPoly.constant(self, 1)

    def zero(self) -> "NCPoly":
        return NCPoly(self, {})

    def __str__(self):
        return f"S^{self.dim}_q"


def sphere(dim: int) -> SphereCtx:
    """Context for ``S^dim_q``."""
    return SphereCtx(dim + 1)


class GenSym(NamedTuple):
    index: int
    starred: bool = False

    @property
    def code(self) -> int:
        if self.index == 0:
            return 1
        return 2 * self.index + (0 if self.starred else 1)

    @classmethod
    def from_code(cls, code: int) -> "GenSym":
        return cls(code >> 1, code & 1 == 0)

    def __str__(self):
        return f"x{self.index}{'*' if self.starred else ''}"


def letter(ctx: SphereCtx, i: int, starred: bool = False) -> int:
    if i not in ctx.indices:
        raise ContextError(f"generator x{i} does not exist on {ctx}")
    if i == 0:
        return 1
    return 2 * i + (0 if starred else 1)


def _idx(code: int) -> int:
    return code >> 1


def _starred(code: int) -> bool:
    return code & 1 == 0


def _star(code: int) -> int:
    if code == 1:
        return 1
    return code ^ 1


def _as_word(ctx: SphereCtx, word) -> tuple[int, ...]:
    out = []
    allowed = set(ctx.letters)
    for g in word:
        if isinstance(g, GenSym):
            c = g.code
        elif isinstance(g, tuple):
            c = GenSym(*g).code
        else:
            c = int(g)
        if c == 0:
            c = 1  # x0* is x0
        if c not in allowed:
            raise ContextError(f"letter {GenSym.from_code(c)} does not exist on {ctx}")
        out.append(c)
    return tuple(out)


def render_monomial(word: Sequence[int]) -> str:
    if not word:
        return "1"
    parts = []
    i = 0
    while i < len(word):
        j = i
        while j < len(word) and word[j] == word[i]:
            j += 1
        g = str(GenSym.from_code(word[i]))
        parts.append(g if j - i == 1 else f"{g}^{j - i}")
        i = j
    return " ".join(parts)


# ---------------------------------------------------------------------------
# rewriting kernel on integer Laurent coefficients {exponent: int}
# ---------------------------------------------------------------------------

def _lmul(a: Mapping[int, int], b: Mapping[int, int]) -> dict[int, int]:
    out: dict[int, int] = {}
    for e1, c1 in a.items():
        for e2, c2 in b.items():
            e = e1 + e2
            out[e] = out.get(e, 0) + c1 * c2
    return {e: c for e, c in out.items() if c}


def _ladd_into(acc: dict, word, coeff: Mapping[int, int]) -> None:
    cur = acc.get(word)
    if cur is None:
        acc[word] = dict(coeff)
        return
    for e, c in coeff.items():
        v = cur.get(e, 0) + c
        if v:
            cur[e] = v
        else:
            cur.pop(e, None)


def _s_words(ctx: SphereCtx, i: int) -> list[tuple[int, ...]]:
    """Words summing to ``s_i`` for ``0 <= i < top``."""
    out = [(1, 1)] if ctx.is_even else []
    for j in range(1, i + 1):
        out.append((2 * j, 2 * j + 1))
    return out


@lru_cache(maxsize=None)
def _rules(ctx: SphereCtx) -> dict[tuple[int, int], tuple]:
    t = ctx.top
    rules: dict[tuple[int, int], tuple] = {}
    letters = ctx.letters
    for a in letters:
        for b in letters:
            ia, ib = _idx(a), _idx(b)
            if ia > ib:
                c = {1: 1} if _starred(a) else {-1: 1}
                rules[(a, b)] = ((c, (b, a)),)
    for i in ctx.indices:
        if i == 0:
            continue
        xi, xis = 2 * i + 1, 2 * i
        s_prev = _s_words(ctx, i - 1)
        if i < t:
            rhs = [({0: 1}, (xis, xi))]
            rhs += [({0: 1, -2: -1}, w) for w in s_prev]
            rules[(xi, xis)] = tuple(rhs)
        else:
            rules[(xis, xi)] = tuple([({0: 1}, ())] + [({0: -1}, w) for w in s_prev])
            rules[(xi, xis)] = tuple([({0: 1}, ())] + [({-2: -1}, w) for w in s_prev])
    return rules


def _redexes(rules, word) -> list[int]:
    return [p for p in range(len(word) - 1) if (word[p], word[p + 1]) in rules]


def _rewrite_at(rules, word, p):
    pre, post = word[:p], word[p + 2:]
    return [(c, pre + mid + post) for c, mid in rules[(word[p], word[p + 1])]]


@lru_cache(maxsize=200_000)
def _nf_kernel(ctx: SphereCtx, word: tuple[int, ...]) -> tuple:
    """Leftmost-redex normal form, memoised; returns ((word, laurent), ...)."""
    rules = _rules(ctx)
    for p in range(len(word) - 1):
        if (word[p], word[p + 1]) in rules:
            break
    else:
        return ((word, {0: 1}),)
    acc: dict = {}
    for c, w in _rewrite_at(rules, word, p):
        for w2, c2 in _nf_kernel(ctx, w):
            _ladd_into(acc, w2, _lmul(c, c2))
    return tuple((w, c) for w, c in acc.items() if c)


@lru_cache(maxsize=200_000)
def _nf_qrat(ctx: SphereCtx, word: tuple[int, ...]) -> tuple:
    return tuple((w, QRat.from_laurent(c)) for w, c in _nf_kernel(ctx, word))


def _reduce_with_strategy(ctx: SphereCtx, word, strategy: str, rng: random.Random):
    """Unmemoised exhaustive rewriting of one word; returns {word: laurent}."""
    rules = _rules(ctx)
    state: dict = {tuple(word): {0: 1}}
    done: dict = {}
    while state:
        nxt: dict = {}
        for w, c in state.items():
            reds = _redexes(rules, w)
            if not reds:
                _ladd_into(done, w, c)
                continue
            if strategy == "leftmost":
                p = reds[0]
            elif strategy == "rightmost":
                p = reds[-1]
            else:
                p = rng.choice(reds)
            for c2, w2 in _rewrite_at(rules, w, p):
                _ladd_into(nxt, w2, _lmul(c, c2))
        state = {w: c for w, c in nxt.items() if c}
    return {w: c for w, c in done.items() if c}


# ---------------------------------------------------------------------------
# NCPoly
# ---------------------------------------------------------------------------

class NCPoly:
    """Normal-ordered element of the sphere algebra: ``{monomial: Scalar}``.

    The constructor trusts its input; use :func:`normal_form`,
    :meth:`from_terms` or arithmetic to build values.
    """

    __slots__ = ("ctx", "terms", "_hash")

    def __init__(self, ctx: SphereCtx, terms: Mapping[tuple[int, ...], Scalar]):
        self.ctx = ctx
        self.terms = {w: c for w, c in terms.items() if c}
        self._hash = None

    # constructors ---------------------------------------------------------
    @classmethod
    def constant(cls, ctx, value) -> "NCPoly":
        s = Scalar.of(value)
        return cls(ctx, {(): s} if s else {})

    @classmethod
    def monomial(cls, ctx, word, coeff=1) -> "NCPoly":
        return normal_form(ctx, word) * Scalar.of(coeff)

    @classmethod
    def from_terms(cls, ctx, terms: Iterable[tuple]) -> "NCPoly":
        """Reduce an arbitrary linear combination ``[(coeff, word), ...]``."""
        return reduce_terms(ctx, terms)

    # queries ----------------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def items(self):
        return self.terms.items()

    def __iter__(self) -> Iterator[tuple[tuple[int, ...], Scalar]]:
        return iter(self.terms.items())

    def __len__(self):
        return len(self.terms)

    def coeff(self, word) -> Scalar:
        return self.terms.get(tuple(word), S_ZERO)

    def constant_term(self) -> Scalar:
        return self.terms.get((), S_ZERO)

    def is_scalar(self) -> bool:
        return all(not w for w in self.terms)

    def degree(self) -> int:
        return max((len(w) for w in self.terms), default=0)

    # arithmetic -------------------------------------------------------------
    def _check(self, other: "NCPoly"):
        if other.ctx != self.ctx:
            raise ContextError(f"mixing {self.ctx} and {other.ctx}")

    def __add__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        out = dict(self.terms)
        for w, c in other.terms.items():
            out[w] = out[w] + c if w in out else c
        return NCPoly(self.ctx, out)

    __radd__ = __add__

    def __neg__(self):
        return NCPoly(self.ctx, {w: -c for w, c in self.terms.items()})

    def __sub__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, NCPoly):
            return multiply(self, other)
        if isinstance(other, (int, QRat, Scalar)):
            s = Scalar.of(other)
            if not s:
                return NCPoly(self.ctx, {})
            return NCPoly(self.ctx, {w: c * s for w, c in self.terms.items()})
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, QRat, Scalar)):
            return self * other
        return NotImplemented

    def __pow__(self, k: int):
        out = self.ctx.one()
        for _ in range(k):
            out = out * self
        return out

    def _lift(self, other):
        if isinstance(other, NCPoly):
            self._check(other)
            return other
        if isinstance(other, (int, QRat, Scalar)):
            return NCPoly.constant(self.ctx, other)
        return NotImplemented

    def map_coeffs(self, f) -> "NCPoly":
        return NCPoly(self.ctx, {w: f(c) for w, c in self.terms.items()})

    # comparison ---------------------------------------------------------------
    def __eq__(self, other):
        if isinstance(other, (int, QRat, Scalar)):
            other = NCPoly.constant(self.ctx, other)
        if not isinstance(other, NCPoly):
            return NotImplemented
        return self.ctx == other.ctx and self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.ctx, frozenset(self.terms.items())))
        return self._hash

    def __str__(self):
        from .parser import render_poly

        return render_poly(self)

    def __repr__(self):
        return f"NCPoly[{self.ctx}]({self})"


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def normal_form(ctx: SphereCtx, word) -> NCPoly:
    """Unique irreducible form of a word under the oriented relations."""
    w = _as_word(ctx, word)
    return NCPoly(ctx, {m: Scalar({0: c}) for m, c in _nf_qrat(ctx, w)})


def reduce_terms(ctx: SphereCtx, terms: Iterable[tuple]) -> NCPoly:
    """Normal form of ``sum coeff * word`` for arbitrary (unreduced) words."""
    acc: dict[tuple[int, ...], Scalar] = {}
    for coeff, word in terms:
        s = Scalar.of(coeff)
        if not s:
            continue
        for m, c in _nf_qrat(ctx, _as_word(ctx, word)):
            v = s * c
            acc[m] = acc[m] + v if m in acc else v
    return NCPoly(ctx, acc)


def multiply(p: NCPoly, r: NCPoly) -> NCPoly:
    p._check(r)
    ctx = p.ctx
    acc: dict[tuple[int, ...], Scalar] = {}
    for w1, c1 in p.terms.items():
        for w2, c2 in r.terms.items():
            c12 = c1 * c2
            for m, c in _nf_qrat(ctx, w1 + w2):
                v = c12 * c
                acc[m] = acc[m] + v if m in acc else v
    return NCPoly(ctx, acc)


def adjoint(p: NCPoly) -> NCPoly:
    """Antilinear, antimultiplicative involution."""
    return reduce_terms(
        p.ctx, ((c.conj(), tuple(_star(g) for g in reversed(w))) for w, c in p.terms.items())
    )


def s_element(ctx: SphereCtx, i: int) -> NCPoly:
    """Partial radius ``s_i``; ``s_top = 1``."""
    if not 0 <= i <= ctx.top:
        raise ValueError(f"s_{i} undefined on {ctx} (0 <= i <= {ctx.top})")
    if i == ctx.top:
        return ctx.one()
    return reduce_terms(ctx, ((1, w) for w in _s_words(ctx, i)))


def substitute(p: NCPoly, images: Mapping[int, NCPoly], target: SphereCtx) -> NCPoly:
    """Apply the algebra map sending letter code ``c`` to ``images[c]``."""
    out = target.zero()
    cache: dict[tuple[int, ...], NCPoly] = {}
    for w, c in p.terms.items():
        img = cache.get(w)
        if img is None:
            img = target.one()
            for g in w:
                img = img * images[g]
                if not img:
                    break
            cache[w] = img
        out = out + img * c
    return out


def _require(ctx: SphereCtx, even: bool, what: str):
    if ctx.is_even != even:
        kind = "even" if even else "odd"
        raise ContextError(f"{what} needs an {kind} sphere, got {ctx}")


def apply_sigma(p: NCPoly) -> NCPoly:
    """Reflection ``x0 -> -x0`` on an even sphere."""
    _require(p.ctx, True, "sigma")
    # x0 occurs only in monomials; the sign is the parity of its degree
    return NCPoly(p.ctx, {w: (-c if w.count(1) % 2 else c) for w, c in p.terms.items()})


def apply_rho(p: NCPoly, power: int = 1) -> NCPoly:
    """Torus action ``x1 -> lam^power x1`` with the phase kept formal."""
    _require(p.ctx, False, "rho")
    out = {}
    for w, c in p.terms.items():
        d = power * (w.count(3) - w.count(2))
        out[w] = c * Scalar.lam(d) if d else c
    return NCPoly(p.ctx, out)


def _hom_images(ctx: SphereCtx, which: str) -> tuple[SphereCtx, dict[int, NCPoly]]:
    if which == "drop_x0":
        _require(ctx, True, which)
        tgt = SphereCtx(ctx.N - 1)
        images = {1: tgt.zero()}
        for i in range(1, ctx.top + 1):
            images[2 * i + 1] = tgt.x(i)
            images[2 * i] = tgt.xs(i)
    elif which == "drop_x1_relabel":
        _require(ctx, False, which)
        if ctx.N < 4:
            raise ContextError("drop_x1_relabel needs S^3 or larger")
        tgt = SphereCtx(ctx.N - 2)
        images = {2: tgt.zero(), 3: tgt.zero()}
        for i in range(2, ctx.top + 1):
            images[2 * i + 1] = tgt.x(i - 1)
            images[2 * i] = tgt.xs(i - 1)
    elif which == "embed_even_in_odd":
        _require(ctx, False, which)
        tgt = SphereCtx(ctx.N - 1)
        images = {2: tgt.x(0), 3: tgt.x(0)}
        for i in range(2, ctx.top + 1):
            images[2 * i + 1] = tgt.x(i - 1)
            images[2 * i] = tgt.xs(i - 1)
    else:
        raise ValueError(f"unknown structural map {which!r}")
    return tgt, images


def structural_hom(p: NCPoly, which: str) -> NCPoly:
    """Quotient maps between spheres.

    ``drop_x0``: S^{2n} -> S^{2n-1}; ``drop_x1_relabel``: S^{2n+1} -> S^{2n-1}
    (x1 -> 0, x_j -> x_{j-1}); ``embed_even_in_odd``: S^{2n+1} -> S^{2n}
    (x1, x1* -> x0, x_j -> x_{j-1}), the quotient by ``x1 - x1*``.
    """
    tgt, images = _hom_images(p.ctx, which)
    return substitute(p, images, tgt)


def structural_hom_terms(ctx: SphereCtx, which: str, terms) -> NCPoly:
    """Image of an unreduced combination ``[(coeff, word)]`` under a structural map."""
    tgt, images = _hom_images(ctx, which)
    out = tgt.zero()
    for coeff, word in terms:
        img = NCPoly.constant(tgt, coeff)
        for g in _as_word(ctx, word):
            img = img * images[g]
        out = out + img
    return out


# ---------------------------------------------------------------------------
# defining relations as unreduced combinations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Relation:
    name: str
    terms: tuple  # ((coeff, word), ...), meaning sum coeff * word = 0

    @property
    def max_len(self) -> int:
        return max((len(w) for _, w in self.terms), default=0)


def defining_relations(ctx: SphereCtx) -> list[Relation]:
    """Commutation relations, ``[x_i, x_i*]`` relations and the sphere relation."""
    q, qi2 = QRat.q_power(1), QRat.q_power(-2)
    rels = []
    idx = ctx.indices
    g = lambda i, s=False: 1 if i == 0 else 2 * i + (0 if s else 1)  # noqa: E731
    for i in idx:
        for j in idx:
            if i < j:
                rels.append(Relation(f"x{i} x{j} = q x{j} x{i}", ((1, (g(i), g(j))), (-q, (g(j), g(i))))))
                if i > 0:
                    rels.append(Relation(
                        f"x{j}* x{i}* = q x{i}* x{j}*",
                        ((1, (g(j, True), g(i, True))), (-q, (g(i, True), g(j, True)))),
                    ))
            if i != j and (i > 0 or j > 0):
                if i == 0 and j > 0:
                    # x0* x_j = q x_j x0* is the first family
                    continue
                rels.append(Relation(
                    f"x{i}* x{j} = q x{j} x{i}*",
                    ((1, (g(i, True), g(j))), (-q, (g(j), g(i, True)))),
                ))
    one_minus = QRat.of(1) - qi2
    for i in idx:
        if i == 0:
            continue
        s_prev = _s_words(ctx, i - 1)
        terms = [(1, (g(i), g(i, True))), (-1, (g(i, True), g(i)))]
        terms += [(-one_minus, w) for w in s_prev]
        rels.append(Relation(f"[x{i}, x{i}*] = (1-q^-2) s{i - 1}", tuple(terms)))
    t = ctx.top
    s_prev = _s_words(ctx, t - 1)
    rels.append(Relation(
        f"s{t - 1} + x{t}* x{t} = 1",
        tuple([(1, w) for w in s_prev] + [(1, (g(t, True), g(t))), (-1, ())]),
    ))
    rels.append(Relation(
        f"q^-2 s{t - 1} + x{t} x{t}* = 1",
        tuple([(qi2, w) for w in s_prev] + [(1, (g(t), g(t, True))), (-1, ())]),
    ))
    return rels


# ---------------------------------------------------------------------------
# confluence probe
# ---------------------------------------------------------------------------

@dataclass
class ProbeReport:
    all_unique: bool
    trials: int
    strategies: tuple[str, ...]
    witnesses: list = field(default_factory=list)


def confluence_probe(ctx: SphereCtx, trials: int = 1000, max_len: int = 8, seed=0,
                     strategies: Sequence[str] = ("leftmost", "rightmost", "random")) -> ProbeReport:
    """Reduce random words under several redex-selection strategies and compare.

    The memoised :func:`normal_form` result is compared as well.
    """
    rng = random.Random(seed)
    letters = ctx.letters
    witnesses = []
    for _ in range(trials):
        length = rng.randint(0, max_len)
        word = tuple(rng.choice(letters) for _ in range(length))
        ref = {w: c for w, c in _nf_kernel(ctx, word)}
        for strat in strategies:
            got = _reduce_with_strategy(ctx, word, strat, rng)
            if got != ref:
                witnesses.append((render_monomial(word), strat))
                break
    return ProbeReport(not witnesses, trials, tuple(strategies), witnesses)
