import numpy as np
import pytest

from qsphere.algebra import ContextError, NCPoly, SphereCtx, sphere
from qsphere.coefficients import QRat
from qsphere.kmatrices import (
    AlgMatrix,
    build_idempotent,
    build_unipotent,
    build_unitary,
    chern0_closed_form,
    chern0_idempotent,
    chern_half_closed_form,
    chern_half_unitary,
    check_interrelations,
    check_q_inverse_isomorphism,
    matrix_adjoint,
    matrix_trace,
    relations_outside_unipotency_span,
    trace_closed_form,
    unipotency_relations,
    verify_identity,
)
from qsphere.representations import build_rep, interior_mask, rep_apply

QI = QRat.q_power(-1)


def test_small_examples():
    s2 = sphere(2)
    u = build_unipotent(s2)
    assert u == AlgMatrix(s2, [[s2.x(0) * QI, s2.x(1)], [s2.xs(1), -s2.x(0)]])
    s1 = sphere(1)
    assert build_unipotent(s1) == AlgMatrix(s1, [[s1.zero(), s1.x(1)], [s1.xs(1), s1.zero()]])
    s3 = sphere(3)
    v = build_unitary(s3)
    assert v == AlgMatrix(s3, [[s3.x(2), s3.x(1) * QI], [-s3.xs(1), s3.xs(2)]])
    assert build_unitary(s1) == AlgMatrix(s1, [[s1.x(1)]])


def test_four_sphere_block_structure():
    s4 = sphere(4)
    u = build_unipotent(s4)
    assert u.dim == 4
    assert u[0, 0] == s4.x(0) * QRat.q_power(-2)
    assert u[0, 2] == s4.x(2) and u[1, 3] == s4.x(2)
    assert u[2, 0] == s4.xs(2) and u[0, 3].is_zero()
    assert u[3, 3] == s4.x(0)


def test_idempotent_example():
    s2 = sphere(2)
    half = QRat.of(1) / 2
    e = build_idempotent(s2)
    assert e[0, 0] == (s2.one() + s2.x(0) * QI) * half
    assert e[1, 1] == (s2.one() - s2.x(0)) * half
    assert e[0, 1] == s2.x(1) * half


@pytest.mark.parametrize("dim", range(1, 10))
def test_unipotent_and_selfadjoint(dim):
    u = build_unipotent(sphere(dim))
    assert u.dim == 2 ** ((dim + 1) // 2 if dim % 2 else dim // 2)
    assert verify_identity(u, "unipotent").passed
    assert verify_identity(u, "selfadjoint").passed


@pytest.mark.parametrize("dim", (2, 4, 6, 8))
def test_idempotent(dim):
    e = build_idempotent(sphere(dim))
    assert verify_identity(e, "idempotent").passed
    assert verify_identity(e, "selfadjoint").passed


@pytest.mark.parametrize("dim", (1, 3, 5, 7))
def test_unitary(dim):
    v = build_unitary(sphere(dim))
    assert v.dim == 2 ** ((dim - 1) // 2)
    assert verify_identity(v, "unitary").passed


def test_broken_entry_fails():
    s2 = sphere(2)
    u = build_unipotent(s2)
    rows = [list(r) for r in u.rows]
    rows[0][1] = s2.x(1) * 2
    rep = verify_identity(AlgMatrix(s2, rows), "unipotent")
    assert not rep.passed
    assert not rep.residual.is_zero()
    assert rep.to_json()["pass"] is False


def test_broken_unitary_fails():
    s3 = sphere(3)
    v = build_unitary(s3)
    rows = [list(r) for r in v.rows]
    rows[0][1] = s3.x(1)  # drop the q^-1
    assert not verify_identity(AlgMatrix(s3, rows), "unitary").passed


def test_wrong_parity_rejected():
    with pytest.raises(ContextError):
        build_idempotent(sphere(3))
    with pytest.raises(ContextError):
        build_unitary(sphere(4))
    with pytest.raises(ContextError):
        check_q_inverse_isomorphism(sphere(3))
    with pytest.raises(ContextError):
        check_interrelations(sphere(1))
    with pytest.raises(ValueError):
        verify_identity(build_unipotent(sphere(2)), "nilpotent")


@pytest.mark.parametrize("dim", (2, 4, 6, 8))
def test_trace_closed_form(dim):
    ctx = sphere(dim)
    tr = matrix_trace(build_unipotent(ctx))
    assert tr == trace_closed_form(ctx)
    assert tr == ctx.x(0) * (QRat.q_power(-1) - 1) ** ctx.top


def test_trace_two_sphere():
    s2 = sphere(2)
    assert matrix_trace(build_unipotent(s2)) == s2.x(0) * (QI - 1)


@pytest.mark.parametrize("dim", (2, 4, 6, 8))
def test_chern0_closed_form(dim):
    ctx = sphere(dim)
    ch = chern0_idempotent(ctx)
    assert ch == chern0_closed_form(ctx)
    assert ch.constant_term() == QRat.of(2 ** (ctx.top - 1))


@pytest.mark.parametrize("dim", (1, 3, 5, 7))
def test_chern_half_closed_form(dim):
    ctx = sphere(dim)
    assert chern_half_unitary(ctx) == chern_half_closed_form(ctx)


def test_chern_half_circle():
    s1 = sphere(1)
    ch = chern_half_unitary(s1)
    half = QRat.of(1) / 2
    assert ch.terms == {((3,), (2,)): half, ((2,), (3,)): -half}


@pytest.mark.parametrize("dim", (2, 4, 6))
def test_q_inverse_isomorphism(dim):
    ctx = sphere(dim)
    assert check_q_inverse_isomorphism(ctx).passed
    assert not check_q_inverse_isomorphism(ctx, flip_q=False).passed


@pytest.mark.parametrize("dim", (3, 5, 7))
def test_interrelations(dim):
    rep = check_interrelations(sphere(dim))
    assert rep.passed, rep.details
    assert rep.to_json()["u_prime_tensor"] is True


@pytest.mark.parametrize("dim", range(1, 8))
def test_relations_and_unipotency_contain_each_other(dim):
    ctx = sphere(dim)
    raw = unipotency_relations(ctx)
    assert raw
    for r in raw:
        assert NCPoly.from_terms(ctx, [(c, w) for w, c in r.items()]).is_zero()
    assert relations_outside_unipotency_span(ctx) == []


@pytest.mark.parametrize("dim,kind", [(2, "even_plus"), (4, "even_minus"), (3, "odd_fourier"), (5, "odd_lambda")])
def test_numeric_identities_on_the_interior(dim, kind):
    """psi(u)^2 = 1 and psi(V) psi(V)* = 1 as block operators, away from the cutoff wall."""
    import scipy.sparse as sp

    ctx = sphere(dim)
    rep = build_rep(ctx, kind, 2.5, 9, lam=np.exp(0.4j))
    mask = interior_mask(rep, 3)
    mats = [(build_unipotent(ctx), False)]
    if not ctx.is_even:
        mats.append((build_unitary(ctx), True))
    for m, unitary in mats:
        big = sp.bmat([[rep_apply(rep, m[i, j]) for j in range(m.dim)] for i in range(m.dim)]).tocsr()
        prod = big @ (big.conj().T if unitary else big)
        cols = np.tile(mask, m.dim)
        diff = (prod - sp.identity(prod.shape[0])).toarray()[:, cols]
        assert np.max(np.abs(diff)) < 1e-12


def test_to_json_and_mixing():
    s2 = sphere(2)
    js = build_unipotent(s2).to_json()
    assert js[0][1] == {"x1": "(1)"}
    with pytest.raises(ContextError):
        build_unipotent(s2) + build_unipotent(sphere(4))
    one = AlgMatrix.identity(SphereCtx(3), 2)
    assert build_idempotent(s2) @ one - build_idempotent(s2) == AlgMatrix.zeros(s2, 2)
