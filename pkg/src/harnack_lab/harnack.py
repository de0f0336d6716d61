"""Harnack tensors, the quadratic Harnack form, and the Lie algebra on 2-forms plus 1-forms.

Every "repeated lower index" contraction of the classical formulas is carried
out here by explicitly raising through ``g^{-1}``.  For example the trace
Harnack term ``R_ij V_i V_j`` is ``Ric(V, V)`` for a vector ``V``, and the
curvature term of ``Z`` is ``R_ijkl U^ij U^lk`` with ``U^ij`` fully raised.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .checks import Residual, compare, vanishes
from .jets import ConfigurationError, Jet, jet_einsum
from .solutions import DomainError, FlowSolution, MissingPotentialError, PointGeometry
from .tensor import ShapeError, as_array, covariant_derivative, laplacian

__all__ = [
    "HarnackData",
    "LieAlgebraElement",
    "bracket_and_inner",
    "compute_M",
    "compute_P",
    "harnack_Z",
    "harnack_parts",
    "interior",
    "random_two_form",
    "sharp_square",
    "soliton_uw_checks",
    "structure_constants",
    "trace_harnack",
    "two_form_basis",
    "wedge_substitution_residual",
]


@dataclass(frozen=True)
class HarnackData:
    """A 2-form ``U`` (lower indices) and 1-form ``W`` at a point, optional vector ``V``."""

    U: np.ndarray
    W: np.ndarray
    V: np.ndarray | None = None

    def __post_init__(self):
        U = np.asarray(self.U, dtype=float)
        if U.ndim != 2 or U.shape[0] != U.shape[1]:
            raise ShapeError("U must be a square 2-tensor")
        if np.any(U + U.T != 0.0):
            raise ShapeError("U must be antisymmetric")
        W = np.asarray(self.W, dtype=float)
        if W.shape != U.shape[:1]:
            raise ShapeError("W must be a 1-form of matching dimension")
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "W", W)


def random_two_form(rng: np.random.Generator, n: int, scale: float = 1.0) -> np.ndarray:
    a = rng.normal(scale=scale, size=(n, n))
    return np.triu(a, 1) - np.triu(a, 1).T


def _geo(s_or_geo, p, order):
    if isinstance(s_or_geo, PointGeometry):
        return s_or_geo
    return s_or_geo.geometry(p, order=order)


def compute_P(s: FlowSolution | PointGeometry, p=None, order: int = 3) -> np.ndarray:
    """``P_ijk = nabla_i R_jk - nabla_j R_ik`` at the point."""
    geo = _geo(s, p, order)
    d = as_array(geo.d_ric)
    return d - d.transpose(1, 0, 2)


def compute_M(
    s: FlowSolution | PointGeometry, p=None, with_time_term: bool = False, order: int = 4
) -> np.ndarray:
    """``M_ij = Lap R_ij - 1/2 nabla_i nabla_j R + 2 R_kijl R^kl - R_ik R^k_j``.

    With ``with_time_term`` the ``Ric / 2t`` correction is added.
    """
    geo = _geo(s, p, order)
    t = geo.point[-1]
    if with_time_term and t <= 0:
        raise DomainError("time term requires t > 0")
    ric = as_array(geo.ric)
    m = (
        as_array(geo.lap_ric)
        - 0.5 * as_array(geo.hess_scal)
        + 2.0 * np.einsum("kijl,kl->ij", as_array(geo.riem_low), as_array(geo.ric_up))
        - ric @ as_array(geo.ric_mixed).T
    )
    if with_time_term:
        m = m + ric / (2.0 * t)
    return m


@dataclass(frozen=True)
class HarnackParts:
    """Point values needed by ``Z`` with every index already raised where used."""

    M: np.ndarray
    P: np.ndarray
    riem_low: np.ndarray
    ric: np.ndarray
    g: np.ndarray
    g_inv: np.ndarray
    t: float

    def z(self, U, W, with_time_term: bool = False) -> float:
        gi = self.g_inv
        U = np.asarray(U, dtype=float)
        W = np.asarray(W, dtype=float)
        if np.any(U + U.T != 0.0):
            raise ShapeError("U must be antisymmetric")
        Wu = gi @ W
        Uu = gi @ U @ gi
        val = (
            Wu @ self.M @ Wu
            - 2.0 * np.einsum("ijk,ij,k->", self.P, Uu, Wu)
            + np.einsum("ijkl,ij,lk->", self.riem_low, Uu, Uu)
        )
        if with_time_term:
            if self.t <= 0:
                raise DomainError("time term requires t > 0")
            val += (Wu @ self.ric @ Wu) / (2.0 * self.t)
        return float(val)


def harnack_parts(s: FlowSolution | PointGeometry, p=None, order: int = 4) -> HarnackParts:
    geo = _geo(s, p, order)
    return HarnackParts(
        M=compute_M(geo),
        P=compute_P(geo),
        riem_low=as_array(geo.riem_low),
        ric=as_array(geo.ric),
        g=as_array(geo.g),
        g_inv=as_array(geo.g_inv),
        t=float(geo.point[-1]),
    )


def harnack_Z(s, p, d: HarnackData, with_time_term: bool = False, order: int = 4) -> float:
    """``Z = M(W, W) - 2 P(U, W) + Rm(U, U)``, optionally plus ``Ric(W, W) / 2t``."""
    return harnack_parts(s, p, order).z(d.U, d.W, with_time_term)


def trace_harnack(s, p, V, with_time_term: bool = False, order: int = 3) -> float:
    """``dR/dt [+ R/t] + 2 <grad R, V> + 2 Ric(V, V)`` for a tangent vector ``V``."""
    geo = _geo(s, p, order)
    t = geo.point[-1]
    if with_time_term and t <= 0:
        raise DomainError("time term requires t > 0")
    V = np.asarray(V, dtype=float)
    r = float(as_array(geo.scal))
    val = (
        float(as_array(geo.dt(geo.scal)))
        + 2.0 * as_array(geo.d_scal) @ V
        + 2.0 * V @ as_array(geo.ric) @ V
    )
    if with_time_term:
        val += r / t
    return float(val)


# ---------------------------------------------------------------------------
# Lie algebra structure on 2-forms (+) 1-forms

LOWERED = "lowered"
MIXED = "mixed"


@dataclass(frozen=True)
class LieAlgebraElement:
    """``U (+) W`` in the lowered representation (2-form, 1-form)."""

    two_form: np.ndarray
    one_form: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.one_form)

    def as_vector(self) -> np.ndarray:
        n = self.dim
        iu = np.triu_indices(n, 1)
        return np.concatenate([self.two_form[iu], self.one_form])

    @classmethod
    def from_vector(cls, v, n: int) -> "LieAlgebraElement":
        v = np.asarray(v, dtype=float)
        k = n * (n - 1) // 2
        u = np.zeros((n, n))
        u[np.triu_indices(n, 1)] = v[:k]
        return cls(u - u.T, v[k:].copy())

    def __add__(self, o):
        return LieAlgebraElement(self.two_form + o.two_form, self.one_form + o.one_form)

    def __sub__(self, o):
        return LieAlgebraElement(self.two_form - o.two_form, self.one_form - o.one_form)

    def __mul__(self, c):
        return LieAlgebraElement(c * self.two_form, c * self.one_form)

    __rmul__ = __mul__


def interior(U: np.ndarray, X: np.ndarray, g_inv: np.ndarray) -> np.ndarray:
    """``(U _| X)_i = -U_ij g^jk X_k``."""
    return -U @ g_inv @ X


def _two_form_bracket(U, V, g_inv):
    # sign fixed so that U |-> (X |-> U _| X) is a representation
    return V @ g_inv @ U - U @ g_inv @ V


def _bracket_direct(a, b, g_inv):
    two = _two_form_bracket(a.two_form, b.two_form, g_inv)
    one = interior(a.two_form, b.one_form, g_inv) - interior(b.two_form, a.one_form, g_inv)
    return LieAlgebraElement(two, one)


def _inner_direct(a, b, g_inv):
    return float(np.einsum("ik,jl,ij,kl->", g_inv, g_inv, a.two_form, b.two_form))


# The space-time pictures use the algebra isomorphism U (+) W -> (-U) (+) W.


def _to_spacetime_form(a: LieAlgebraElement) -> np.ndarray:
    n = a.dim
    alpha = np.zeros((n + 1, n + 1))
    alpha[1:, 1:] = -a.two_form
    alpha[1:, 0] = a.one_form
    alpha[0, 1:] = -a.one_form
    return alpha


def _from_spacetime_form(alpha: np.ndarray) -> LieAlgebraElement:
    return LieAlgebraElement(-alpha[1:, 1:], alpha[1:, 0].copy())


def _degenerate_inverse(g_inv):
    n = len(g_inv)
    gt = np.zeros((n + 1, n + 1))
    gt[1:, 1:] = g_inv
    return gt


def _to_mixed(a: LieAlgebraElement, g_inv) -> np.ndarray:
    """``T_i^j = -U_ip g^pj``, ``T_i^0 = W_i``, ``T_0^. = 0`` (rows lower, columns upper)."""
    n = a.dim
    t = np.zeros((n + 1, n + 1))
    t[1:, 1:] = -a.two_form @ g_inv
    t[1:, 0] = a.one_form
    return t


def _from_mixed(t: np.ndarray, g: np.ndarray) -> LieAlgebraElement:
    return LieAlgebraElement(-t[1:, 1:] @ g, t[1:, 0].copy())


def bracket_and_inner(
    a: LieAlgebraElement,
    b: LieAlgebraElement,
    g: np.ndarray,
    mode: str = "direct",
) -> tuple[LieAlgebraElement, float]:
    """Bracket and degenerate inner product, computed in one of three pictures.

    ``direct``
        ``[U+W, V+X] = [U, V] + (U _| X - V _| W)`` and ``<U, V>``.
    ``spacetime``
        via the space-time 2-form and the degenerate inverse metric,
        ``[a, b]_ij = a_ik g~^kl b_lj - b_ik g~^kl a_lj``.
    ``mixed``
        via ``(1,1)``-tensors: ``[a, b]_i^j = a_i^k b_k^j - b_i^k a_k^j``
        and ``<a, b> = -a_i^j b_j^i``.
    """
    g = np.asarray(g, dtype=float)
    if a.dim != b.dim or a.dim != len(g):
        raise ShapeError("elements and metric differ in dimension")
    g_inv = np.linalg.inv(g)
    if mode == "direct":
        return _bracket_direct(a, b, g_inv), _inner_direct(a, b, g_inv)
    if mode == "spacetime":
        gt = _degenerate_inverse(g_inv)
        x, y = _to_spacetime_form(a), _to_spacetime_form(b)
        br = x @ gt @ y - y @ gt @ x
        inner = float(np.einsum("ik,jl,ij,kl->", gt, gt, x, y))
        return _from_spacetime_form(br), inner
    if mode == "mixed":
        x, y = _to_mixed(a, g_inv), _to_mixed(b, g_inv)
        br = x @ y - y @ x
        inner = float(-np.einsum("ij,ji->", x, y))
        return _from_mixed(br, g), inner
    raise ConfigurationError(f"unknown bracket mode {mode!r}")


def two_form_basis(g: np.ndarray, rng: np.random.Generator | None = None) -> list[LieAlgebraElement]:
    """Basis of 2-forms (+) 1-forms, orthonormal in each summand.

    The 2-form part is Gram-Schmidt orthonormalized for ``<U, V>``; the
    1-form part for ``g^{-1}``.  A generator randomizes the starting vectors.
    """
    g = np.asarray(g, dtype=float)
    n = len(g)
    g_inv = np.linalg.inv(g)
    k = n * (n - 1) // 2
    start2 = np.eye(k) if rng is None else rng.normal(size=(k, k))
    start1 = np.eye(n) if rng is None else rng.normal(size=(n, n))
    basis2: list[np.ndarray] = []
    for v in start2:
        u = LieAlgebraElement.from_vector(np.concatenate([v, np.zeros(n)]), n).two_form
        for e in basis2:
            u = u - np.einsum("ik,jl,ij,kl->", g_inv, g_inv, u, e) * e
        u = u / np.sqrt(np.einsum("ik,jl,ij,kl->", g_inv, g_inv, u, u))
        basis2.append(u)
    basis1: list[np.ndarray] = []
    for w in start1:
        for e in basis1:
            w = w - (w @ g_inv @ e) * e
        basis1.append(w / np.sqrt(w @ g_inv @ w))
    z2, z1 = np.zeros((n, n)), np.zeros(n)
    return [LieAlgebraElement(u, z1) for u in basis2] + [
        LieAlgebraElement(z2, w) for w in basis1
    ]


def _coords(x: LieAlgebraElement, basis, g) -> np.ndarray:
    mat = np.column_stack([e.as_vector() for e in basis])
    return np.linalg.solve(mat, x.as_vector())


def structure_constants(basis, g, mode: str = "direct") -> np.ndarray:
    """``c[a, b, d]`` with ``[e_b, e_d] = sum_a c[a, b, d] e_a``."""
    N = len(basis)
    c = np.zeros((N, N, N))
    for b in range(N):
        for d in range(N):
            br, _ = bracket_and_inner(basis[b], basis[d], g, mode)
            c[:, b, d] = _coords(br, basis, g)
    return c


def sharp_square(Q: np.ndarray, c: np.ndarray) -> np.ndarray:
    """``(Q#)_ab = c_a^gd c_b^mn Q_gm Q_dn``."""
    Q = np.asarray(Q, dtype=float)
    if not np.allclose(Q, Q.T, rtol=0, atol=1e-12 * max(1.0, np.abs(Q).max())):
        raise ShapeError("sharp_square requires a symmetric form")
    return np.einsum("agd,bmn,gm,dn->ab", c, c, Q, Q, optimize=True)


# ---------------------------------------------------------------------------
# Soliton 2-form / 1-form relations


def wedge_substitution_residual(ric, V, W) -> Residual:
    """Product rule for ``nabla (V ^ W)`` with ``nabla V = Ric`` and ``nabla W = 0``.

    Uses ``(V ^ W)_jk = 1/2 (V_j W_k - V_k W_j)`` and compares against
    ``1/2 (R_ij W_k - R_ik W_j)``.
    """
    ric, V, W = (np.asarray(x, dtype=float) for x in (ric, V, W))
    dV, dW = ric, np.zeros((len(W), len(W)))
    expanded = 0.5 * (
        np.einsum("ij,k->ijk", dV, W)
        + np.einsum("j,ik->ijk", V, dW)
        - np.einsum("ik,j->ijk", dV, W)
        - np.einsum("k,ij->ijk", V, dW)
    )
    target = 0.5 * (np.einsum("ij,k->ijk", ric, W) - np.einsum("ik,j->ijk", ric, W))
    return compare(expanded, target)


def volume_form(geo: PointGeometry, scale: float = 1.0) -> Jet:
    """``scale * sqrt(det g) dx^1 ^ dx^2`` as a jet field (two dimensions only)."""
    if geo.n != 2:
        raise ConfigurationError("volume_form is implemented for surfaces")
    g = geo.g
    det = g[0, 0] * g[1, 1] - g[0, 1] * g[1, 0]
    from . import jets

    mu = scale * jets.sqrt(det)
    zero = Jet.constant(0.0, mu.num_vars, mu.order)
    from .jets import stack

    return stack([stack([zero, mu]), stack([-mu, zero])])


def soliton_uw_checks(
    s: FlowSolution,
    p,
    U_field=None,
    order: int = 5,
    parallel_tol: float = 1e-8,
) -> dict[str, Residual]:
    """Relations for ``W = U _| V`` with ``V = df`` and a parallel 2-form ``U``.

    ``U_field`` maps a :class:`PointGeometry` to a 2-form jet; the default is
    the Riemannian volume form.  Keys:

    ``grad_w``
        ``nabla_i W_j + R_i^p U_jp`` vanishes.
    ``w_heat``
        ``d_t W_i - Lap W_i + U_ij R^jk V_k`` vanishes, where ``d_t W`` is
        expanded from ``W = -U g^{-1} V`` with ``d_t U = Lap U``.  On a plain
        flow the time derivatives of ``V`` and ``g^{-1}`` are taken from the
        solution; otherwise the Ricci-flow evolutions ``d_t V = Lap V - Ric(V)``
        and ``d_t g^{-1} = 2 Ric^#`` are substituted.
    ``w_heat_gradient_form``
        the same with ``-U_ij R^jk V_k`` replaced by ``1/2 U_ip nabla^p R``.
    ``wedge_substitution``
        algebraic product-rule identity for ``nabla (V ^ W)``.
    """
    if not s.has_potential:
        raise MissingPotentialError(f"{s.name} has no potential")
    geo = s.geometry(p, order=order)
    U = volume_form(geo) if U_field is None else U_field(geo)
    dU = covariant_derivative(U, "dd", geo.conn)
    if np.abs(as_array(dU)).max() > parallel_tol * max(1.0, np.abs(as_array(U)).max()):
        raise ConfigurationError("U_field is not parallel at the sample point")
    V = geo.df
    g_inv = geo.g_inv
    W = -jet_einsum("ij,j->i", U, jet_einsum("jk,k->j", g_inv, V))
    out: dict[str, Residual] = {}
    dW = covariant_derivative(W, "d", geo.conn)
    ric_u = jet_einsum("ip,jp->ij", geo.ric_mixed, U)
    out["grad_w"] = vanishes(dW + ric_u, dW, ric_u)

    lapW = laplacian(W, "d", geo.conn, g_inv)
    lapU = laplacian(U, "dd", geo.conn, g_inv)
    if s.mode == "plain_flow":
        dtV = geo.dt(V)
        dt_ginv = geo.dt(g_inv)
    else:
        dtV = laplacian(V, "d", geo.conn, g_inv) - jet_einsum("jk,k->j", geo.ric_mixed, V)
        dt_ginv = 2.0 * geo.ric_up
    Vu = jet_einsum("jk,k->j", g_inv, V)
    dtW = (
        -jet_einsum("ij,j->i", lapU, Vu)
        - jet_einsum("ij,j->i", U, jet_einsum("jk,k->j", g_inv, dtV))
        - jet_einsum("ij,j->i", U, jet_einsum("jk,k->j", dt_ginv, V))
    )
    uric_v = jet_einsum("ij,j->i", U, jet_einsum("jk,k->j", geo.ric_up, V))
    out["w_heat"] = compare(dtW, lapW - uric_v, lapW, uric_v)
    grad_r_term = 0.5 * jet_einsum("ip,p->i", U, jet_einsum("pq,q->p", g_inv, geo.d_scal))
    out["w_heat_gradient_form"] = compare(dtW, lapW + grad_r_term, lapW, grad_r_term)
    out["wedge_substitution"] = wedge_substitution_residual(
        as_array(geo.ric), as_array(V), as_array(W)
    )
    return out
