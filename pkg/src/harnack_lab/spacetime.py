"""Degenerate space-time geometry built over a flow solution.

Space-time indices run over ``0..n`` with ``0`` the time direction.  The
inverse metric is degenerate: its spatial block is ``g^{-1}`` and its time
row and column vanish.  The connection is the torsion-free, compatible one

* ``G~^k_ij = G^k_ij`` on spatial indices,
* ``G~^0_ab = 0``,
* ``G~^k_i0 = G~^k_0i = -R_i^k + nabla_i nabla^k f``,
* ``G~^k_00 = nabla^k(-R/2 + d_t f - |grad f|^2 / 2)``,

with ``f`` the potential of a modified flow (zero on plain flows).  Every
right-hand quantity is evaluated at ``(x, t + tau)``, which is implemented by
building the spatial geometry at the shifted time: a jet in ``t + tau`` has
the same derivatives as one in ``t``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

from .checks import Residual, compare, vanishes
from .harnack import HarnackData, harnack_parts
from .jets import ConfigurationError, Jet, OrderExceededError, jet_einsum, num_coeffs
from .solutions import FlowSolution, PointGeometry
from .tensor import (
    Connection,
    as_array,
    covariant_derivative,
    curvature_from_connection,
    laplacian,
    partials,
    ricci_and_scalar,
    spacetime_vars,
)

__all__ = [
    "SpacetimeConnection",
    "SpacetimeCurvature",
    "bianchi_identity_residuals",
    "build_spacetime_connection",
    "compatibility_and_torsion",
    "curvature_quadratic_form",
    "curvature_residuals",
    "degenerate_flow_residual",
    "embed_mixed",
    "four_term_expansion",
    "harnack_equals_curvature",
    "ricci_residuals",
    "spacetime_T_derivatives",
    "spacetime_curvature",
    "spacetime_ricci",
]

DIRECT = "direct"
CLOSED_FORM = "closed_form"


def _assemble(n: int, rank: int, blocks, nv: int, order: int | None = None) -> Jet:
    """Space-time tensor from spatial blocks.

    ``blocks`` pairs an index expression (each entry ``0`` for the time slot or
    ``S`` for the spatial range) with a jet of the matching spatial shape.
    """
    if order is None:
        order = min(j.order for _, j in blocks)
    c = np.zeros((n + 1,) * rank + (num_coeffs(nv, order),))
    for key, jet in blocks:
        idx = tuple(slice(1, None) if k == "S" else 0 for k in key)
        c[idx] = jet.truncate(order).c
    return Jet(c, nv, order)


S = "S"


class SpacetimeConnection:
    """Connection coefficients ``gamma[k, i, j]`` on space-time about one point."""

    def __init__(self, solution: FlowSolution, point, tau: float, geo: PointGeometry):
        self.solution = solution
        self.point = np.asarray(point, dtype=float)
        self.tau = float(tau)
        self.geo = geo
        self.n = geo.n
        self.modified = solution.flow_potential is not None

    # pieces -------------------------------------------------------------

    @cached_property
    def f(self) -> Jet:
        return self.geo.flow_f

    @cached_property
    def grad_f(self) -> Jet:
        """Spatial gradient ``nabla^p f``."""
        geo = self.geo
        return jet_einsum("pq,q->p", geo.g_inv, covariant_derivative(self.f, "", geo.conn))

    @cached_property
    def hess_f_mixed(self) -> Jet:
        """``nabla_i nabla^k f`` as ``[i, k]``."""
        geo = self.geo
        df = covariant_derivative(self.f, "", geo.conn)
        hess = covariant_derivative(df, "d", geo.conn)
        return jet_einsum("im,km->ik", hess, geo.g_inv)

    @cached_property
    def mixed_block(self) -> Jet:
        """``G~^k_i0`` as ``[k, i]``."""
        return (self.hess_f_mixed - self.geo.ric_mixed).T

    @cached_property
    def time_block(self) -> Jet:
        """``G~^k_00``."""
        geo = self.geo
        df = covariant_derivative(self.f, "", geo.conn)
        norm2 = jet_einsum("p,p->", df, jet_einsum("pq,q->p", geo.g_inv, df))
        pot = -0.5 * geo.scal + geo.dt(self.f) - 0.5 * norm2
        return jet_einsum("kl,l->k", geo.g_inv, covariant_derivative(pot, "", geo.conn))

    @cached_property
    def gamma(self) -> Jet:
        geo = self.geo
        mb = self.mixed_block
        return _assemble(
            self.n,
            3,
            [
                ((S, S, S), geo.gamma),
                ((S, S, 0), mb),
                ((S, 0, S), mb),
                ((S, 0, 0), self.time_block),
            ],
            self.n + 1,
        )

    @property
    def order(self) -> int:
        return self.gamma.order

    @cached_property
    def conn(self) -> Connection:
        return Connection(self.gamma, spacetime_vars(self.n))

    @cached_property
    def g_inv(self) -> Jet:
        """Degenerate inverse metric ``g~^{ab}``."""
        return _assemble(self.n, 2, [((S, S), self.geo.g_inv)], self.n + 1)

    @cached_property
    def g_low(self) -> Jet:
        """Spatial metric padded with a zero time row and column (lowers spatial slots)."""
        return _assemble(self.n, 2, [((S, S), self.geo.g)], self.n + 1)


def build_spacetime_connection(
    s: FlowSolution, point, tau: float = 0.0, order: int = 5
) -> SpacetimeConnection:
    """Space-time connection at ``(x, t)`` from the solution at ``(x, t + tau)``."""
    if tau < 0:
        raise ConfigurationError("tau must be non-negative")
    geo = s.geometry(point, order=order, tau=tau)
    return SpacetimeConnection(s, point, tau, geo)


# ---------------------------------------------------------------------------
# curvature


@dataclass(frozen=True)
class SpacetimeCurvature:
    riem: Jet
    method: str


def _closed_form_blocks(c: SpacetimeConnection, form: str = "elliptic"):
    """Closed-form curvature blocks ``(ij0l, i0kl, i00l)`` with first spatial slot."""
    geo = c.geo
    gf = c.grad_f
    riem = geo.riem
    d_rm = geo.d_ric_mixed  # [a, j, l] = nabla_a R_j^l
    d_up = jet_einsum("lm,mik->ikl", geo.g_inv, geo.d_ric)  # [i, k, l] = nabla^l R_ik
    rf = jet_einsum("ijpl,p->ijl", riem, gf)  # R_ijp^l nabla^p f
    ij0 = d_rm.transpose(1, 0, 2) - d_rm + rf
    i0k = d_rm.transpose(1, 0, 2) - d_up + jet_einsum("ipkl,p->ikl", riem, gf)
    return ij0, i0k, _i00_block(c, form)


def _i00_block(c: SpacetimeConnection, form: str) -> Jet:
    geo = c.geo
    gf = c.grad_f
    g_inv = geo.g_inv
    rm = geo.ric_mixed
    hess_up = jet_einsum("im,ml->il", geo.hess_scal, g_inv)  # nabla_i nabla^l R
    ric_sq = jet_einsum("im,ml->il", rm, rm)
    rff = jet_einsum("ipl,p->il", jet_einsum("ipql,q->ipl", geo.riem, gf), gf)
    if form == "parabolic":
        d_rm = geo.d_ric_mixed  # [p, i, l]
        d_up = jet_einsum("lm,mip->ipl", g_inv, geo.d_ric)  # nabla^l R_ip as [i, p, l]
        hf = c.hess_f_mixed  # [i, k] = nabla_i nabla^k f
        d_pi = d_rm.transpose(1, 0, 2)  # nabla_p R_i^l as [i, p, l]
        return (
            geo.dt(rm)
            - jet_einsum("p,pil->il", gf, d_rm)
            - 0.5 * hess_up
            - ric_sq
            - jet_einsum("ipl,p->il", d_rm - d_pi, gf)
            - jet_einsum("ipl,p->il", d_up - d_pi, gf)
            + jet_einsum("ip,pl->il", rm, hf)
            - jet_einsum("pl,ip->il", rm, hf)
            + rff
        )
    if form == "elliptic":
        lap_up = jet_einsum("im,ml->il", geo.lap_ric, g_inv)
        quad = 2.0 * jet_einsum(
            "lm,pim->il", g_inv, jet_einsum("pimq,qp->pim", geo.riem, rm)
        )
        d = geo.d_ric
        P = d - d.transpose(1, 0, 2)  # P_ijk = nabla_i R_jk - nabla_j R_ik
        P_up = jet_einsum("ipq,ql->ipl", P, g_inv)  # g^ql P_ipq
        P2_up = jet_einsum("qpi,ql->ipl", P, g_inv)  # g^ql P_qpi
        return (
            lap_up
            - 0.5 * hess_up
            + quad
            - ric_sq
            - jet_einsum("ipl,p->il", P_up, gf)
            - jet_einsum("ipl,p->il", P2_up, gf)
            + rff
        )
    raise ConfigurationError(f"unknown closed-form variant {form!r}")


def spacetime_curvature(
    c: SpacetimeConnection, method: str = DIRECT, form: str = "elliptic"
) -> SpacetimeCurvature:
    """Curvature ``R~[i, j, k, l]`` (upper ``l``) by differentiation or closed forms."""
    if method == DIRECT:
        if c.order < 1:
            raise OrderExceededError("direct curvature needs jet order >= 4")
        return SpacetimeCurvature(curvature_from_connection(c.conn), DIRECT)
    if method != CLOSED_FORM:
        raise ConfigurationError(f"unknown curvature method {method!r}")
    ij0, i0k, i00 = _closed_form_blocks(c, form)
    riem = _assemble(
        c.n,
        4,
        [
            ((S, S, S, S), c.geo.riem),
            ((S, S, 0, S), ij0),
            ((S, 0, S, S), i0k),
            ((0, S, S, S), -i0k),
            ((S, 0, 0, S), i00),
            ((0, S, 0, S), -i00),
        ],
        c.n + 1,
    )
    return SpacetimeCurvature(riem, CLOSED_FORM)


def curvature_residuals(c: SpacetimeConnection) -> dict[str, Residual]:
    """Direct vs closed-form curvature, block by block, plus internal consistency."""
    direct = as_array(spacetime_curvature(c, DIRECT).riem)
    closed = as_array(spacetime_curvature(c, CLOSED_FORM).riem)
    n1 = c.n + 1
    sp = slice(1, n1)
    out = {
        "spatial": compare(direct[sp, sp, sp, sp], closed[sp, sp, sp, sp]),
        "time_upper_vanishes": vanishes(direct[..., 0]),
        "ij0": compare(direct[sp, sp, 0, sp], closed[sp, sp, 0, sp]),
        "i0k": compare(direct[sp, 0, sp, sp], closed[sp, 0, sp, sp]),
        "i00": compare(direct[sp, 0, 0, sp], closed[sp, 0, 0, sp]),
        "all_components": compare(direct, closed),
    }
    ell = as_array(_i00_block(c, "elliptic"))
    par = as_array(_i00_block(c, "parabolic"))
    out["i00_forms_agree"] = compare(ell, par)
    return out


# ---------------------------------------------------------------------------
# Ricci


def spacetime_ricci(c: SpacetimeConnection) -> tuple[Jet, Jet]:
    """Ricci ``R~_jk = R~_pjk^p`` (sum over ``0..n``) and the scalar ``g~^jk R~_jk``."""
    riem = spacetime_curvature(c, DIRECT).riem
    return ricci_and_scalar(riem, c.g_inv)


def ricci_residuals(c: SpacetimeConnection) -> dict[str, Residual]:
    """Traced curvature against the closed forms for ``R~_ij``, ``R~_0j``, ``R~_00``."""
    geo = c.geo
    ric, scal = spacetime_ricci(c)
    ric = as_array(ric)
    gf = as_array(c.grad_f)
    R = as_array(geo.ric)
    dR = as_array(geo.d_scal)
    dtR = float(as_array(geo.dt(geo.scal)))
    lapR = float(as_array(geo.lap_scal))
    norm2 = float(as_array(geo.ric_norm2))
    r0j = 0.5 * dR + R @ gf
    rff = gf @ R @ gf
    r00_time = 0.5 * dtR + rff + dR @ gf
    r00_space = 0.5 * lapR + norm2 + dR @ gf + rff
    # on a modified flow d_t R carries the Lie derivative term <grad R, grad f>,
    # so the evolution form needs half of the gradient pairing
    r00_corrected = 0.5 * dtR + rff + 0.5 * dR @ gf
    return {
        "spatial": compare(ric[1:, 1:], R),
        "time_space": compare(ric[0, 1:], r0j),
        "space_time": compare(ric[1:, 0], r0j),
        "time_time_evolution_form": compare(ric[0, 0], r00_time, 0.5 * dtR, rff, dR @ gf),
        "time_time_evolution_form_corrected": compare(
            ric[0, 0], r00_corrected, 0.5 * dtR, rff, dR @ gf
        ),
        "time_time_elliptic_form": compare(ric[0, 0], r00_space, 0.5 * lapR, norm2, rff),
        "scalar": compare(as_array(scal), as_array(geo.scal)),
    }


# ---------------------------------------------------------------------------
# compatibility and flow


def compatibility_and_torsion(c: SpacetimeConnection) -> dict[str, Residual]:
    dg = covariant_derivative(c.g_inv, "uu", c.conn)
    gam = as_array(c.gamma)
    return {
        "compatibility": vanishes(dg, partials(c.g_inv, c.conn.dvars)),
        "torsion": vanishes(gam - gam.transpose(0, 2, 1), gam),
        "time_upper_connection": vanishes(gam[0]),
    }


def _hessian_tilde(c: SpacetimeConnection) -> Jet:
    df = covariant_derivative(c.f, "", c.conn)
    return covariant_derivative(df, "d", c.conn)


def degenerate_flow_residual(c: SpacetimeConnection) -> dict[str, Residual]:
    """Residuals of the degenerate (modified) flow for ``g~^{-1}`` and ``G~``.

    The connection equation is reported per index case: all indices spatial,
    ``j = 0`` with ``i, k`` spatial, ``i = j = 0`` with ``k`` spatial, and the
    time row ``k = 0``.
    """
    if c.order < 2:
        raise OrderExceededError("degenerate flow residual needs jet order >= 5")
    ric, _ = ricci_and_scalar(curvature_from_connection(c.conn), c.g_inv)
    S_ = ric - _hessian_tilde(c)
    gi = c.g_inv
    dt_ginv = c.g_inv.diff(c.n)
    rhs = 2.0 * jet_einsum("ik,jk->ij", gi, jet_einsum("jl,kl->jk", gi, S_))
    out = {"metric": compare(dt_ginv, rhs)}
    dS = covariant_derivative(S_, "dd", c.conn)  # [a, b, c] = nabla~_a S_bc
    bracket = dS + dS.transpose(1, 0, 2) - dS.transpose(1, 2, 0)
    # bracket[i, j, l] = nabla_i S_jl + nabla_j S_il - nabla_l S_ij
    rhs_g = -jet_einsum("kl,ijl->kij", gi, bracket)
    lhs_g = c.gamma.diff(c.n)
    L, Rh = as_array(lhs_g), as_array(rhs_g)
    sp = slice(1, None)
    out["connection_spatial"] = compare(L[sp, sp, sp], Rh[sp, sp, sp])
    out["connection_mixed_index"] = compare(L[sp, sp, 0], Rh[sp, sp, 0])
    out["connection_time_time"] = compare(L[sp, 0, 0], Rh[sp, 0, 0])
    out["connection_time_row"] = compare(L[0], Rh[0])
    out["connection_all"] = compare(L, Rh)
    return out


# ---------------------------------------------------------------------------
# Harnack quantity as curvature


def embed_mixed(U, W, g_inv) -> np.ndarray:
    """``T[i, j] = T_i^j``: ``T_i^j = g^jp U_ip``, ``T_i^0 = W_i``, ``T_0 = 0``."""
    U = np.asarray(U, dtype=float)
    n = len(U)
    T = np.zeros((n + 1, n + 1))
    T[1:, 1:] = U @ np.asarray(g_inv).T
    T[1:, 0] = W
    return T


def curvature_quadratic_form(riem: np.ndarray, g_inv_tilde: np.ndarray, T: np.ndarray) -> float:
    """``g~^ip R~_pjk^l T_i^j T_l^k``."""
    up = np.einsum("ip,pjkl->ijkl", g_inv_tilde, riem)
    return float(np.einsum("ijkl,ij,lk->", up, T, T))


def harnack_equals_curvature(
    c: SpacetimeConnection, d: HarnackData
) -> tuple[float, float, float]:
    """``(Rm~(T, T), Z, difference)`` with ``T = U (+) W`` in mixed form."""
    if c.modified:
        raise ConfigurationError(
            "harnack_equals_curvature requires a plain flow (zero flow potential)"
        )
    riem = as_array(spacetime_curvature(c, DIRECT).riem)
    gi = as_array(c.g_inv)
    T = embed_mixed(d.U, d.W, as_array(c.geo.g_inv))
    lhs = curvature_quadratic_form(riem, gi, T)
    z = harnack_parts(c.geo).z(d.U, d.W)
    return lhs, z, lhs - z


def four_term_expansion(riem: np.ndarray, g_inv_tilde: np.ndarray, T: np.ndarray) -> float:
    """The curvature form split into its ``UU``, ``UW``, ``WU`` and ``WW`` blocks."""
    up = np.einsum("ip,pjkl->ijkl", g_inv_tilde, riem)
    U, W = T[1:, 1:], T[1:, 0]
    s = slice(1, None)
    return float(
        np.einsum("ijkl,ij,lk->", up[s, s, s, s], U, U)
        + np.einsum("ijl,ij,l->", up[s, s, 0, s], U, W)
        + np.einsum("ikl,i,lk->", up[s, 0, s, s], W, U)
        + np.einsum("il,i,l->", up[s, 0, 0, s], W, W)
    )


# ---------------------------------------------------------------------------
# Bianchi-type identities


def bianchi_identity_residuals(c: SpacetimeConnection) -> dict[str, Residual]:
    """Contracted and second Bianchi identities, the curvature/Ricci-derivative
    relations, the Ricci-minus-Hessian symmetry, and the commutation formulas."""
    if c.order < 2:
        raise OrderExceededError("Bianchi residuals need jet order >= 5")
    geo = c.geo
    n = c.n
    conn = c.conn
    gi = c.g_inv
    riem = curvature_from_connection(conn)
    ric, scal = ricci_and_scalar(riem, gi)
    out: dict[str, Residual] = {}

    # contracted Bianchi chain for the scalar curvature (plain flows)
    if not c.modified:
        half_dt = 0.5 * float(as_array(geo.dt(geo.scal)))
        half_d0 = 0.5 * float(as_array(scal.diff(n)))
        d_ric = covariant_derivative(ric, "dd", conn)
        div = float(as_array(jet_einsum("ij,ij->", gi, d_ric[:, :, 0])))
        gam_i0 = as_array(c.gamma)[1:, 1:, 0]  # [m, i] = G~^m_i0
        ricA = as_array(ric)[1:, 1:]
        g_inv = as_array(geo.g_inv)
        third = 0.5 * float(as_array(geo.lap_scal)) - float(
            np.einsum("ij,mi,jm->", g_inv, gam_i0, ricA)
        )
        fourth = 0.5 * float(as_array(geo.lap_scal)) + float(as_array(geo.ric_norm2))
        out["scalar_chain_time_derivative"] = compare(half_dt, half_d0)
        out["scalar_chain_divergence"] = compare(half_dt, div)
        out["scalar_chain_expanded"] = compare(half_dt, third)
        out["scalar_chain_elliptic"] = compare(half_dt, fourth)

    # second Bianchi identity over all space-time indices
    dR = covariant_derivative(riem, "dddu", conn)  # [a, i, j, k, l]
    cyc = dR + dR.transpose(1, 2, 0, 3, 4) + dR.transpose(2, 0, 1, 3, 4)
    out["second_bianchi"] = vanishes(cyc, dR)
    dRa = as_array(dR)
    # nabla_0 R_ij = -nabla_i R_j0 - nabla_j R_0i
    out["second_bianchi_time_display"] = compare(
        dRa[0], -dRa[:, :, 0] - np.swapaxes(dRa[:, 0, :], 0, 1)
    )

    # R~_i0j^k = nabla~_j R~_i^k - nabla~^k R~_ij + R~_ipj^k nabla^p f
    ric_mixed = jet_einsum("il,kl->ik", ric, gi)  # R~_i^k
    d_mixed = as_array(covariant_derivative(ric_mixed, "du", conn))  # [j, i, k]
    d_ric = as_array(covariant_derivative(ric, "dd", conn))  # [l, i, j]
    gia = as_array(gi)
    rA = as_array(riem)
    gf = np.concatenate([[0.0], as_array(c.grad_f)])
    rhs = (
        d_mixed.transpose(1, 0, 2)
        - np.einsum("kl,lij->ijk", gia, d_ric)
        + np.einsum("ipjk,p->ijk", rA, gf)
    )
    lhs = rA[:, 0, :, :]  # [i, j, k] = R~_i0j^k
    sp = slice(1, None)
    out["curvature_ricci_derivative_spatial"] = compare(lhs[sp, sp, sp], rhs[sp, sp, sp])
    out["curvature_ricci_derivative_time_last"] = compare(lhs[sp, 0, sp], rhs[sp, 0, sp])
    out["curvature_ricci_derivative_time_first"] = vanishes(rhs[0, sp, sp])
    out["curvature_ricci_derivative_time_both"] = vanishes(rhs[0, 0, sp])
    out["curvature_ricci_derivative_time_first_lhs"] = vanishes(lhs[0, sp, sp])
    out["curvature_ricci_derivative_time_both_lhs"] = vanishes(lhs[0, 0, sp])

    # nabla~_j S_ki = nabla~_k S_ji + R~_kj0i with S = Ric~ - Hess~ f
    S_ = ric - _hessian_tilde(c)
    dS = as_array(covariant_derivative(S_, "dd", conn))  # [j, k, i]
    rk = np.einsum("kjp,pi->kji", rA[:, :, 0, :], as_array(c.g_low))  # g_pi R~_kj0^p
    rk[:, :, 0] = 0.0
    diff = dS - dS.transpose(1, 0, 2) - rk.transpose(1, 0, 2)
    # diff[j, k, i] = nabla_j S_ki - nabla_k S_ji - R~_kj0i
    scale = max(np.abs(dS).max(), np.abs(rk).max())
    out["ricci_hessian_unified"] = Residual(float(np.abs(diff).max()), float(scale))
    for name, (j, k, i) in {
        "ricci_hessian_spatial": (sp, sp, sp),
        "ricci_hessian_time_derivative": (0, sp, sp),
        "ricci_hessian_mixed": (sp, sp, 0),
        "ricci_hessian_time_time": (0, sp, 0),
    }.items():
        out[name] = Residual(float(np.abs(diff[j, k, i]).max()), float(scale))

    # commutation formulas
    f = c.f
    sdf = covariant_derivative(f, "", geo.conn)
    grad = jet_einsum("lm,m->l", geo.g_inv, sdf)
    d2 = covariant_derivative(covariant_derivative(grad, "u", geo.conn), "du", geo.conn)
    comm = d2 - d2.transpose(1, 0, 2)
    target = jet_einsum("ijpl,p->ijl", geo.riem, grad)
    out["commutation_spatial"] = compare(comm, target)
    tdf = covariant_derivative(f, "", conn)
    t3 = covariant_derivative(covariant_derivative(tdf, "d", conn), "dd", conn)
    tcomm = t3 - t3.transpose(1, 0, 2)
    ttarget = -jet_einsum("ijkp,p->ijk", riem, tdf)
    out["commutation_spacetime"] = compare(tcomm, ttarget)
    return out


# ---------------------------------------------------------------------------
# U (+) W as a space-time 2-form

FieldFn = Callable[[list, Jet], Jet]


def _two_form(U: Jet, W: Jet) -> Jet:
    """``a_ij = U_ij``, ``a_i0 = W_i``, ``a_0i = -W_i``."""
    n = U.shape[0]
    return _assemble(n, 2, [((S, S), U), ((S, 0), W), ((0, S), -W)], U.num_vars)


def spacetime_T_derivatives(
    c: SpacetimeConnection, U_field: FieldFn, W_field: FieldFn
) -> dict[str, Residual]:
    """Space-time derivatives of ``U (+) W`` against spatial expressions.

    The time derivative on the spatial side is the evolving-frame derivative
    ``D_t U_jk = d_t U_jk + R_j^m U_mk + R_k^m U_jm`` (and ``D_t W_j = d_t W_j +
    R_j^m W_m``), which is what the space-time connection produces.
    """
    if c.modified:
        raise ConfigurationError("spacetime_T_derivatives requires a plain flow")
    geo = c.geo
    U = U_field(geo.coords, geo.time)
    W = W_field(geo.coords, geo.time)
    if U.shape != (c.n, c.n) or W.shape != (c.n,):
        raise ConfigurationError("U_field must return an n x n jet and W_field an n-vector")
    alpha = _two_form(U, W)
    d_alpha = covariant_derivative(alpha, "dd", c.conn)
    lap_alpha = laplacian(alpha, "dd", c.conn, c.g_inv)
    dA, lA = as_array(d_alpha), as_array(lap_alpha)
    sp = slice(1, None)

    rm = geo.ric_mixed
    dU = covariant_derivative(U, "dd", geo.conn)
    dW = covariant_derivative(W, "d", geo.conn)
    lapU = laplacian(U, "dd", geo.conn, geo.g_inv)
    lapW = laplacian(W, "d", geo.conn, geo.g_inv)
    grad_r = jet_einsum("mp,p->m", geo.g_inv, geo.d_scal)
    DtU = geo.dt(U) + jet_einsum("jm,mk->jk", rm, U) + jet_einsum("km,jm->jk", rm, U)
    DtW = geo.dt(W) + jet_einsum("jm,m->j", rm, W)
    gradR_U = 0.5 * jet_einsum("m,jm->j", grad_r, U)
    ric_dU = 2.0 * jet_einsum("bm,bjm->j", geo.ric_up, dU)
    ric_U = jet_einsum("ip,jp->ij", rm, U)  # R_i^p U_jp

    out = {
        "spatial_two_form": compare(dA[sp, sp, sp], dU),
        "spatial_one_form": compare(dA[sp, sp, 0], dW + ric_U, dW, ric_U),
        "time_two_form": compare(dA[0, sp, sp], DtU),
        "time_one_form": compare(dA[0, sp, 0], DtW + gradR_U, DtW, gradR_U),
        "laplacian_two_form": compare(lA[sp, sp], lapU),
        "laplacian_one_form": compare(lA[sp, 0], lapW + gradR_U + ric_dU, lapW, gradR_U, ric_dU),
    }
    if np.abs(as_array(dU)).max() <= 1e-10 * max(1.0, np.abs(as_array(U)).max()):
        # with nabla U = 0 the one-form block of the Laplacian is Lap W + 1/2 nabla^p R U_jp
        out["laplacian_one_form_parallel"] = compare(lA[sp, 0], lapW + gradR_U, lapW, gradR_U)
    heat = dA[0] - lA
    out["heat_two_form"] = compare(heat[sp, sp], as_array(DtU - lapU))
    out["heat_one_form"] = compare(heat[sp, 0], as_array(DtW - lapW - ric_dU))
    return out
