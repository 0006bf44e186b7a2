import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qsphere.algebra import (
    ContextError,
    GenSym,
    NCPoly,
    SphereCtx,
    adjoint,
    apply_rho,
    apply_sigma,
    confluence_probe,
    defining_relations,
    multiply,
    normal_form,
    render_monomial,
    s_element,
    sphere,
    structural_hom,
    structural_hom_terms,
)
from qsphere.coefficients import QRat, Scalar
from oracles import apply_word
from strategies import ctx_and, polys, words

Q = QRat.q_power(1)


def mono(ctx, *letters):
    return NCPoly.monomial(ctx, letters)


def test_context_shape():
    s2, s3 = sphere(2), sphere(3)
    assert s2.N == 3 and s2.is_even and s2.indices == (0, 1)
    assert s3.N == 4 and not s3.is_even and s3.indices == (1, 2)
    assert sphere(1).letters == (2, 3)
    with pytest.raises(ContextError):
        SphereCtx(1)
    with pytest.raises(ContextError):
        s3.x(0)
    assert GenSym(2, True).code == 4 and GenSym.from_code(5) == GenSym(2, False)


def test_normal_form_examples():
    s2, s3 = sphere(2), sphere(3)
    x0, x1, x1s = s2.x(0), s2.x(1), s2.xs(1)
    assert mono(s2, 3, 1) == x0 * x1 * Q.inverse()
    assert normal_form(s3, (3, 2)) == normal_form(s3, (2, 3))
    assert normal_form(s2, (3, 2)) == s2.one() - x0 * x0 * QRat.q_power(-2)
    assert normal_form(s3, (4, 5)) == s3.one() - s3.xs(1) * s3.x(1)
    assert multiply(x1, x0) == x0 * x1 * Q.inverse()
    assert multiply(s2.one(), x1s) == x1s


def test_adjoint_examples():
    s2 = sphere(2)
    x0, x1 = s2.x(0), s2.x(1)
    assert adjoint(x0) == x0
    # x1* x0 = q x0 x1*, from the adjoint of x0 x1 = q x1 x0
    assert adjoint(x0 * x1) == x0 * s2.xs(1) * Q


def test_circle_is_commutative_unitary():
    s1 = sphere(1)
    assert normal_form(s1, (2, 3)) == s1.one()
    assert normal_form(s1, (3, 2)) == s1.one()
    assert normal_form(s1, (3, 3, 2)) == s1.x(1)


@pytest.mark.parametrize("dim", range(1, 9))
def test_defining_relations_reduce_to_zero(dim):
    ctx = sphere(dim)
    for rel in defining_relations(ctx):
        assert NCPoly.from_terms(ctx, rel.terms).is_zero(), rel.name


@pytest.mark.parametrize("dim", range(1, 7))
def test_normal_form_agrees_with_matrix_elements(dim):
    """Oracle: the reduced form acts like the word in the explicit representation."""
    ctx = sphere(dim)
    q = 3.0
    modes = ctx.top if ctx.is_even else ctx.top - 1
    kind = "even_minus" if ctx.is_even else "odd_fourier"
    states = list(itertools.product(range(4), repeat=modes))
    if not ctx.is_even:
        states = [(k0,) + s for k0 in (-1, 0, 2) for s in states]
    rng = random.Random(dim)
    for _ in range(25):
        word = tuple(rng.choice(ctx.letters) for _ in range(rng.randint(0, 5)))
        nf = normal_form(ctx, word)
        for s in states:
            out = {}
            a, t = apply_word(dim, word, s, q, kind)
            if t is not None:
                out[t] = out.get(t, 0.0) + a
            for w, c in nf.terms.items():
                b, u = apply_word(dim, w, s, q, kind)
                if u is not None:
                    out[u] = out.get(u, 0.0) - c.as_qrat().evaluate(q) * b
            assert all(abs(v) < 1e-12 for v in out.values()), (word, s)


def test_rule_coefficients_against_matrix_elements():
    # x2* x1 = q x1 x2* and x2* x1* = q x1* x2* on S^5, checked in the Fourier model
    q = 2.0
    for lhs, rhs in (((4, 3), (3, 4)), ((4, 2), (2, 4)), ((6, 5), (5, 6))):
        for s in itertools.product((-1, 0, 1), range(3), range(3)):
            a, t = apply_word(5, lhs, s, q, "odd_fourier")
            b, u = apply_word(5, rhs, s, q, "odd_fourier")
            assert t == u
            assert a == pytest.approx(q * b, abs=1e-14)


@pytest.mark.parametrize("dim", range(1, 7))
def test_confluence_probe(dim):
    rep = confluence_probe(sphere(dim), trials=300, max_len=8, seed=dim)
    assert rep.all_unique, rep.witnesses


def test_probe_trivial_words():
    ctx = sphere(2)
    assert normal_form(ctx, ()) == ctx.one()
    for c in ctx.letters:
        nf = normal_form(ctx, (c,))
        assert nf.terms == {(c,): Scalar.of(1)}


@settings(max_examples=150, deadline=None)
@given(ctx_and(lambda c: st.tuples(polys(c), polys(c), polys(c))))
def test_associativity(data):
    ctx, (a, b, c) = data
    assert (a * b) * c == a * (b * c)


@settings(max_examples=150, deadline=None)
@given(ctx_and(lambda c: st.tuples(polys(c), polys(c))))
def test_adjoint_is_antimultiplicative_involution(data):
    ctx, (a, b) = data
    assert adjoint(adjoint(a)) == a
    assert adjoint(a * b) == adjoint(b) * adjoint(a)


@settings(max_examples=100, deadline=None)
@given(ctx_and(lambda c: words(c, 6)))
def test_normal_form_is_idempotent(data):
    ctx, word = data
    for m, c in normal_form(ctx, word).terms.items():
        assert normal_form(ctx, m).terms == {m: Scalar.of(1)}


@pytest.mark.parametrize("dim", range(1, 9))
def test_two_expressions_for_partial_radii(dim):
    ctx = sphere(dim)
    for i in range(1, ctx.top + 1):
        prev = s_element(ctx, i - 1) if (i > 1 or ctx.is_even) else ctx.zero()
        a = prev + ctx.xs(i) * ctx.x(i)
        b = prev * QRat.q_power(-2) + ctx.x(i) * ctx.xs(i)
        assert a == b == s_element(ctx, i)


def test_partial_radius_examples():
    assert s_element(sphere(4), 0) == sphere(4).x(0) ** 2
    s3 = sphere(3)
    assert s_element(s3, 1) == s3.xs(1) * s3.x(1)
    assert s_element(sphere(2), 1) == sphere(2).one()
    with pytest.raises(ValueError):
        s_element(s3, 5)


@pytest.mark.parametrize("dim", range(2, 8))
def test_partial_radii_commutation_pattern(dim):
    ctx = sphere(dim)
    q2 = QRat.q_power(2)
    for i in range(0 if ctx.is_even else 1, ctx.top):
        s = s_element(ctx, i)
        for j in ctx.indices:
            for g in (ctx.x(j), ctx.xs(j)):
                if i < j:
                    expected = g * s * (q2 if g == ctx.x(j) or j == 0 else q2.inverse())
                    assert s * g == expected
                else:
                    assert s * g == g * s
        for k in range(i, ctx.top):
            assert s * s_element(ctx, k) == s_element(ctx, k) * s


def test_partial_radius_commutes_with_x_up_to_q_squared():
    # s_i x_j = q^2 x_j s_i for i < j
    ctx = sphere(4)
    s0, s1, x2 = s_element(ctx, 0), s_element(ctx, 1), ctx.x(2)
    assert s0 * x2 == x2 * s0 * QRat.q_power(2)
    assert s1 * x2 == x2 * s1 * QRat.q_power(2)
    assert s1 * ctx.x(1) == ctx.x(1) * s1


def test_sigma():
    ctx = sphere(4)
    assert apply_sigma(ctx.x(0)) == -ctx.x(0)
    assert apply_sigma(s_element(ctx, 1)) == s_element(ctx, 1)
    with pytest.raises(ContextError):
        apply_sigma(sphere(3).x(1))


@settings(max_examples=100, deadline=None)
@given(ctx_and(lambda c: st.tuples(polys(c), polys(c)), dims=(2, 4, 6)))
def test_sigma_is_star_automorphism(data):
    ctx, (a, b) = data
    assert apply_sigma(apply_sigma(a)) == a
    assert apply_sigma(a * b) == apply_sigma(a) * apply_sigma(b)
    assert apply_sigma(adjoint(a)) == adjoint(apply_sigma(a))


def test_rho_examples():
    ctx = sphere(3)
    lam = Scalar.lam(1)
    assert apply_rho(ctx.x(1)) == ctx.x(1) * lam
    assert apply_rho(ctx.xs(1) * ctx.x(1)) == ctx.xs(1) * ctx.x(1)
    assert apply_rho(ctx.x(2)) == ctx.x(2)
    with pytest.raises(ContextError):
        apply_rho(sphere(2).x(1))


@settings(max_examples=100, deadline=None)
@given(ctx_and(lambda c: st.tuples(polys(c), polys(c), st.integers(-3, 3), st.integers(-3, 3)), dims=(1, 3, 5)))
def test_rho_is_a_group_action(data):
    ctx, (a, b, m, n) = data
    assert apply_rho(apply_rho(a, m), n) == apply_rho(a, m + n)
    assert apply_rho(a * b, m) == apply_rho(a, m) * apply_rho(b, m)


@pytest.mark.parametrize("dim,which", [(2, "drop_x0"), (4, "drop_x0"), (6, "drop_x0"),
                                       (3, "drop_x1_relabel"), (5, "drop_x1_relabel"), (7, "drop_x1_relabel"),
                                       (3, "embed_even_in_odd"),
                                       (5, "embed_even_in_odd")])
def test_structural_maps_respect_relations(dim, which):
    ctx = sphere(dim)
    for rel in defining_relations(ctx):
        assert structural_hom_terms(ctx, which, rel.terms).is_zero(), rel.name


def test_structural_map_examples():
    s4, s5 = sphere(4), sphere(5)
    img = structural_hom(s_element(s4, 1), "drop_x0")
    assert img.ctx == sphere(3) and img == sphere(3).xs(1) * sphere(3).x(1)
    s3 = sphere(3)
    assert structural_hom(s5.x(1), "drop_x1_relabel").is_zero()
    assert structural_hom(s5.x(2), "drop_x1_relabel") == s3.x(1)
    assert structural_hom(s5.xs(3), "drop_x1_relabel") == s3.xs(2)
    assert structural_hom(s3.xs(1), "embed_even_in_odd") == sphere(2).x(0)
    with pytest.raises(ContextError):
        structural_hom(s4.x(0), "drop_x1_relabel")
    with pytest.raises(ContextError):
        structural_hom(sphere(1).x(1), "embed_even_in_odd")


def test_mixing_contexts_is_rejected():
    with pytest.raises(ContextError):
        sphere(2).x(1) + sphere(3).x(1)


def test_monomial_rendering():
    assert render_monomial((1, 1, 4, 5)) == "x0^2 x2* x2"
    assert render_monomial(()) == "1"
