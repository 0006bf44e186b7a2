import math
import random

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from qsphere.algebra import ContextError, NCPoly, adjoint, s_element, sphere
from qsphere.representations import (
    Cutoff,
    build_rep,
    generator_norms,
    interior_mask,
    operator_norm,
    relation_residual,
    rep_apply,
    rho_covariance_check,
    sigma_intertwine_check,
    spec_identity_check,
    spectrum_report,
    with_generator,
)
from oracles import apply_word
from strategies import polys

PHASE = np.exp(0.7j)


def column(rep, state):
    """Flat index of a basis state and the per-axis offsets."""
    shape = rep.shape
    offs = [rep.cutoff.K0 if (rep.fourier and a == 0) else 0 for a in range(len(shape))]
    flat = np.ravel_multi_index(tuple(s + o for s, o in zip(state, offs)), shape)
    return flat, offs


def test_two_sphere_examples():
    s2 = sphere(2)
    rep = build_rep(s2, "even_plus", 2.0, 12)
    x0 = rep_apply(rep, s2.x(0)).toarray()
    assert np.allclose(np.diag(x0), [2.0 ** -k for k in range(13)], rtol=0, atol=1e-15)
    x1 = rep_apply(rep, s2.x(1)).toarray()
    assert x1[0, 1] == pytest.approx(math.sqrt(0.75), abs=1e-15)
    assert np.count_nonzero(x1[:, 1]) == 1


def test_odd_lambda_diagonal():
    s3 = sphere(3)
    rep = build_rep(s3, "odd_lambda", 3.0, 8, lam=1.0)
    x1 = rep_apply(rep, s3.x(1)).toarray()
    assert np.allclose(x1, np.diag([3.0 ** -k for k in range(9)]), atol=1e-15)


@pytest.mark.parametrize("dim", (1, 2, 3, 4, 5))
def test_point_representation(dim):
    ctx = sphere(dim)
    if ctx.is_even:
        with pytest.raises(ContextError):
            build_rep(ctx, "odd_lambda", 2.0, 4)
        return
    rep = build_rep(ctx, "point_lambda", 2.0, 1, lam=PHASE)
    assert rep.dim == 1
    for c in ctx.letters:
        v = rep.gens[c].toarray()[0, 0]
        if c == 2 * ctx.top + 1:
            assert v == PHASE
        elif c == 2 * ctx.top:
            assert v == PHASE.conjugate()
        else:
            assert v == 0
    assert relation_residual(rep)["max_residual"] < 1e-15


def test_rep_apply_basics():
    s4 = sphere(4)
    rep = build_rep(s4, "even_plus", 2.0, 6)
    one = rep_apply(rep, s4.one())
    assert (one != rep.identity()).nnz == 0
    s2 = sphere(2)
    r2 = build_rep(s2, "even_plus", 2.0, 10)
    s0 = rep_apply(r2, s_element(s2, 0)).toarray()
    assert np.allclose(s0, np.diag([4.0 ** -k for k in range(11)]), atol=1e-15)
    s3 = sphere(3)
    r3 = build_rep(s3, "odd_lambda", 2.0, 8, lam=PHASE)
    comm = rep_apply(r3, s3.xs(1) * s3.x(1) - s3.x(1) * s3.xs(1))
    assert operator_norm(comm) < 1e-15


def test_matrix_elements_against_oracle():
    rng = random.Random(5)
    for dim, kind in [(4, "even_minus"), (5, "odd_fourier"), (6, "even_plus")]:
        ctx = sphere(dim)
        rep = build_rep(ctx, kind, 2.5, Cutoff(6, 6))
        for _ in range(20):
            word = tuple(rng.choice(ctx.letters) for _ in range(rng.randint(1, 4)))
            modes = rep.modes
            state = tuple(rng.randint(0, 2) for _ in range(modes))
            if rep.fourier:
                state = (rng.randint(-2, 2),) + state
            amp, out = apply_word(dim, word, state, 2.5, kind)
            flat, offs = column(rep, state)
            op = rep.identity()
            for g in reversed(word):
                op = rep.gens[g] @ op
            col = op.toarray()[:, flat]
            if out is None:
                assert np.max(np.abs(col)) < 1e-15
            else:
                tgt = np.ravel_multi_index(tuple(s + o for s, o in zip(out, offs)), rep.shape)
                assert col[tgt] == pytest.approx(amp, abs=1e-14)
                assert np.count_nonzero(col) == 1


@pytest.mark.parametrize("q", (2.0, 3.0, -2.0))
@pytest.mark.parametrize(
    "dim,kind,cutoff",
    [
        (2, "even_plus", 12), (2, "even_minus", 12), (4, "even_plus", 8), (4, "even_minus", 8),
        (6, "even_plus", 8), (1, "odd_lambda", 8), (1, "odd_fourier", 8), (3, "odd_lambda", 10),
        (3, "odd_fourier", 8), (5, "odd_lambda", 8), (5, "odd_fourier", Cutoff(8, 4)), (7, "odd_lambda", 8),
    ],
)
def test_relation_residuals(dim, kind, cutoff, q):
    rep = build_rep(sphere(dim), kind, q, cutoff, lam=PHASE)
    res = relation_residual(rep)
    assert res["interior_size"] > 0
    assert res["max_residual"] < 1e-12, res["per_relation"]


def test_corrupted_square_root_is_caught():
    s2 = sphere(2)
    rep = build_rep(s2, "even_plus", 2.0, 12)
    k = np.arange(13, dtype=float)
    # drop the square root in the lowering weight
    bad = sp.diags(1.0 - 2.0 ** (-2 * k[1:]), offsets=1, shape=(13, 13))
    broken = with_generator(rep, 3, bad)
    assert relation_residual(broken)["max_residual"] > 0.1


def test_spectrum_of_top_partial_radius():
    s4 = sphere(4)
    K = 10
    rep = build_rep(s4, "even_plus", 2.0, K)
    p = s_element(s4, 1)
    rep_ = spectrum_report(rep, p, "q_pow_minus2k")
    assert rep_["pass"] and rep_["max_deviation"] < 1e-10
    inner = K - p.degree()
    assert rep_["multiplicities"] == {m: inner + 1 for m in range(inner + 1)}


def test_signed_spectrum_of_x0():
    s2 = sphere(2)
    rep = build_rep(s2, "even_minus", 2.0, 10)
    r = spectrum_report(rep, s2.x(0), "q_pow_minusk_signed")
    assert r["pass"]
    assert all(v.real < 0 for v in r["eigenvalues"])
    with pytest.raises(ValueError):
        spectrum_report(rep, s2.x(0), "linear")


def test_nonnormal_input_rejected():
    s2 = sphere(2)
    rep = build_rep(s2, "even_plus", 2.0, 8)
    with pytest.raises(ValueError):
        spectrum_report(rep, s2.x(1), "q_pow_minus2k")


@pytest.mark.parametrize("dim,kind", [(2, "even_plus"), (4, "even_minus"), (3, "odd_lambda"), (5, "odd_fourier")])
def test_spec_identity(dim, kind):
    rep = build_rep(sphere(dim), kind, 2.0, 6, lam=PHASE)
    r = spec_identity_check(rep)
    assert r["pass"] and r["max_deviation"] < 1e-10


def test_sigma_intertwining():
    assert sigma_intertwine_check(sphere(2), 2.0, 10)
    assert sigma_intertwine_check(sphere(4), 3.0, 6)
    assert not sigma_intertwine_check(sphere(2), 2.0, 10, use_sigma=False)


@pytest.mark.parametrize("dim", (1, 3, 5))
def test_rho_covariance(dim):
    assert rho_covariance_check(sphere(dim), 2.0, 6, PHASE)
    assert rho_covariance_check(sphere(dim), -3.0, 5, np.exp(2.1j))


REPS = {
    2: ("even_plus", 10),
    3: ("odd_fourier", 8),
    4: ("even_minus", 7),
    5: ("odd_lambda", 7),
}


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(sorted(REPS)).flatmap(lambda d: st.tuples(st.just(d), polys(sphere(d), max_terms=3, max_len=4))))
def test_adjoint_compatibility(data):
    dim, p = data
    kind, K = REPS[dim]
    rep = build_rep(sphere(dim), kind, 2.0, K, lam=PHASE)
    mask = interior_mask(rep, 4)
    lhs = rep_apply(rep, adjoint(p)).toarray()
    rhs = rep_apply(rep, p).toarray().conj().T
    # both sides act on interior vectors; the adjoint's columns read rows of psi(p)
    assert np.max(np.abs((lhs - rhs)[np.ix_(mask, mask)]), initial=0.0) < 1e-12


@settings(max_examples=60, deadline=None)
@given(
    st.sampled_from(sorted(REPS)).flatmap(
        lambda d: st.tuples(st.just(d), polys(sphere(d), max_terms=3, max_len=3), polys(sphere(d), max_terms=3, max_len=3))
    )
)
def test_homomorphism_on_interior(data):
    dim, a, b = data
    kind, K = REPS[dim]
    rep = build_rep(sphere(dim), kind, 2.0, K, lam=PHASE)
    mask = interior_mask(rep, 6)
    lhs = rep_apply(rep, a * b).toarray()[:, mask]
    rhs = (rep_apply(rep, a) @ rep_apply(rep, b)).toarray()[:, mask]
    scale = 1.0 + np.max(np.abs(rhs), initial=0.0)
    assert np.max(np.abs(lhs - rhs), initial=0.0) < 1e-11 * scale


@pytest.mark.parametrize("dim,kind", [(2, "even_plus"), (4, "even_minus"), (3, "odd_fourier"), (5, "odd_lambda"), (3, "point_lambda")])
@pytest.mark.parametrize("q", (1.5, 2.0, -4.0))
def test_generator_norms_bounded(dim, kind, q):
    rep = build_rep(sphere(dim), kind, q, 8, lam=PHASE)
    norms = generator_norms(rep)
    assert max(norms.values()) <= 1.0 + 1e-15
    if kind != "point_lambda":
        assert norms["x1" if dim % 2 else "x0"] == pytest.approx(1.0)


def test_argument_errors():
    with pytest.raises(ValueError, match="1/q"):
        build_rep(sphere(2), "even_plus", 0.5, 4)
    with pytest.raises(ValueError):
        build_rep(sphere(2), "even_plus", 1.0, 4)
    with pytest.raises(ContextError):
        build_rep(sphere(3), "even_plus", 2.0, 4)
    with pytest.raises(ContextError):
        build_rep(sphere(2), "odd_fourier", 2.0, 4)
    with pytest.raises(ValueError):
        build_rep(sphere(2), "odd", 2.0, 4)
    with pytest.raises(ValueError):
        Cutoff(0)
    with pytest.raises(ValueError):
        build_rep(sphere(3), "odd_lambda", 2.0, 4, lam=2.0)
    with pytest.raises(ContextError):
        rep_apply(build_rep(sphere(2), "even_plus", 2.0, 4), sphere(4).x(0))
