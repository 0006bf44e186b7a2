"""Quantum Euclidean spheres: exact algebra, K-theory matrices, Fredholm modules, pairings."""

from .algebra import (
    ContextError,
    NCPoly,
    SphereCtx,
    adjoint,
    apply_rho,
    apply_sigma,
    confluence_probe,
    multiply,
    normal_form,
    s_element,
    sphere,
)
from .coefficients import PoleError, QRat, Scalar, geometric_series_sum
from .fredholm import (
    DivergentTraceError,
    EvenModule,
    OddModule,
    PairingReport,
    commutator_F,
    pairing_matrix,
    phi_exact,
    phi_numeric,
    tau0,
    tau1_exact,
    tau1_numeric,
    trace_norm,
)
from .kmatrices import (
    AlgMatrix,
    build_idempotent,
    build_unipotent,
    build_unitary,
    chern0_idempotent,
    chern_half_unitary,
    check_interrelations,
    check_q_inverse_isomorphism,
    verify_identity,
)
from .parser import ParseError, parse_poly, render_poly
from .representations import Cutoff, RepHandle, build_rep, rep_apply, relation_residual

__version__ = "0.1.0"
