"""Nondegenerate space-time metrics ``g + G dt^2`` and their limits.

Here ``G = R + eps / (2 (t + delta))``.  The Levi-Civita connection and
curvature of this family are compared against closed forms, and two limit
regimes are swept: ``eps, delta -> infinity`` (the connection tends to the
degenerate space-time connection) and ``eps -> infinity`` then
``delta -> 0`` (the curvature form tends to the Harnack quantity with its
``1/2t`` term).

The time-derivative term of ``d_t G`` is ``-eps / (2 (t + delta)^2)``, so
the ``eps``-dependent pieces below carry ``(t + delta)^2`` denominators.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .checks import Residual, compare, vanishes
from .harnack import HarnackData, LieAlgebraElement, harnack_parts
from .jets import ConfigurationError, Jet, num_coeffs
from .solutions import FlowSolution, PointGeometry
from .spacetime import build_spacetime_connection, curvature_quadratic_form, embed_mixed
from .tensor import (
    MetricSample,
    as_array,
    christoffel,
    covariant_derivative,
    curvature_from_connection,
    spacetime_vars,
)

__all__ = [
    "ApproxSample",
    "DefinitenessError",
    "SweepResult",
    "approx_connection_check",
    "approx_curvature_check",
    "approx_metric",
    "time_component_gap",
    "induced_structure",
    "lambda2_decomposition",
    "limit_sweep",
]


class DefinitenessError(ValueError):
    """The time-time entry ``R + eps / (2 (t + delta))`` is not positive."""


def _check_params(eps: float, delta: float) -> None:
    if not (eps > 0 and delta > 0):
        raise ConfigurationError(f"epsilon and delta must be positive, got {eps}, {delta}")


def _require_plain(s: FlowSolution) -> None:
    if s.flow_potential is not None:
        raise ConfigurationError(
            f"{s.name}: the approximating metrics are defined for the unmodified flow"
        )


class ApproxSample:
    """Jets of ``g~_{eps,delta}`` and its Levi-Civita geometry about one point."""

    def __init__(self, s: FlowSolution, eps: float, delta: float, point, order: int = 5):
        _check_params(eps, delta)
        self.solution = s
        self.eps = float(eps)
        self.delta = float(delta)
        self.geo: PointGeometry = s.geometry(point, order=order)
        self.n = s.dim
        geo = self.geo
        self.G = geo.scal + (0.5 * self.eps) * (geo.time + self.delta) ** -1
        g00 = float(as_array(self.G))
        if not g00 > 0:
            raise DefinitenessError(
                f"R + eps/(2(t+delta)) = {g00:.6g} <= 0 at {tuple(geo.point)}"
            )
        n, nv = self.n, self.n + 1
        order = min(geo.g.order, self.G.order)
        c = np.zeros((n + 1, n + 1, num_coeffs(nv, order)))
        c[1:, 1:] = geo.g.truncate(order).c
        c[0, 0] = self.G.truncate(order).c
        self.metric = MetricSample.from_metric(Jet(c, nv, order), spacetime_vars(n))

    @property
    def g00(self) -> float:
        return float(as_array(self.G))

    @cached_property
    def conn(self):
        return christoffel(self.metric)

    @cached_property
    def riem(self) -> Jet:
        return curvature_from_connection(self.conn)


def approx_metric(s: FlowSolution, eps: float, delta: float, point, order: int = 5) -> ApproxSample:
    _require_plain(s)
    return ApproxSample(s, eps, delta, point, order)


def _closed_connection(a: ApproxSample) -> dict[str, np.ndarray]:
    geo = a.geo
    G = a.g00
    t = geo.point[-1]
    A = as_array
    grad_r = A(geo.g_inv) @ A(geo.d_scal)
    dtR = float(A(geo.dt(geo.scal)))
    return {
        "item1_spatial": A(geo.gamma),
        "item2_time_upper": A(geo.ric) / G,
        "item3_mixed": -A(geo.ric_mixed).T,  # [k, i]
        "item4_time_time": -0.5 * grad_r,
        "item5_time_upper_mixed": A(geo.d_scal) / (2.0 * G),
        "item6_time_upper_time_time": dtR / (2.0 * G)
        - a.eps / (4.0 * (t + a.delta) ** 2 * G),
    }


def approx_connection_check(
    s: FlowSolution, eps: float, delta: float, point, order: int = 5
) -> dict[str, Residual]:
    """Levi-Civita connection of ``g~_{eps,delta}`` against its six closed forms."""
    a = approx_metric(s, eps, delta, point, order)
    gam = as_array(a.conn.gamma)
    ref = _closed_connection(a)
    sp = slice(1, None)
    out = {
        "item1_spatial": compare(gam[sp, sp, sp], ref["item1_spatial"]),
        "item2_time_upper": compare(gam[0, sp, sp], ref["item2_time_upper"]),
        "item3_mixed": compare(gam[sp, sp, 0], ref["item3_mixed"]),
        "item4_time_time": compare(gam[sp, 0, 0], ref["item4_time_time"]),
        "item5_time_upper_mixed": compare(gam[0, sp, 0], ref["item5_time_upper_mixed"]),
        "item6_time_upper_time_time": compare(gam[0, 0, 0], ref["item6_time_upper_time_time"]),
    }
    out["compatibility"] = vanishes(covariant_derivative(a.metric.g, "dd", a.conn))
    out["torsion"] = vanishes(gam - gam.transpose(0, 2, 1), gam)
    return out


def _closed_curvature(a: ApproxSample) -> dict[str, np.ndarray]:
    geo = a.geo
    G = a.g00
    t = geo.point[-1]
    A = as_array
    rm = A(geo.ric_mixed)  # [i, l] = R_i^l
    ric = A(geo.ric)
    g_inv = A(geo.g_inv)
    dR = A(geo.d_scal)
    grad_r = g_inv @ dR
    dtR = float(A(geo.dt(geo.scal)))
    correction1 = (np.einsum("il,jk->ijkl", rm, ric) - np.einsum("jl,ik->ijkl", rm, ric)) / G
    d_rm = A(geo.d_ric_mixed)  # [k, j, l] = nabla_k R_j^l
    d_up = np.einsum("lm,mjk->jkl", g_inv, A(geo.d_ric))  # [j, k, l] = nabla^l R_jk
    correction2 = 0.5 * (
        np.einsum("jk,l->jkl", ric, grad_r) - np.einsum("jl,k->jkl", rm, dR)
    ) / G
    hess_up = A(geo.hess_scal) @ g_inv
    coef = 0.5 * dtR - a.eps / (4.0 * (t + a.delta) ** 2)
    correction3 = (coef * rm - 0.25 * np.outer(dR, grad_r)) / G
    return {
        "item1_spatial": A(geo.riem) - correction1,
        "item1_correction": -correction1,
        "item2_time_first": -d_rm.transpose(1, 0, 2) + d_up - correction2,
        "item3_time_time": A(geo.dt(geo.ric_mixed)) - 0.5 * hess_up - rm @ rm - correction3,
    }


def approx_curvature_check(
    s: FlowSolution, eps: float, delta: float, point, order: int = 5
) -> dict[str, Residual]:
    """Curvature of ``g~_{eps,delta}`` against its three closed forms."""
    a = approx_metric(s, eps, delta, point, order)
    riem = as_array(a.riem)
    ref = _closed_curvature(a)
    sp = slice(1, None)
    return {
        "item1_spatial": compare(riem[sp, sp, sp, sp], ref["item1_spatial"]),
        "item2_time_first": compare(riem[0, sp, sp, sp], ref["item2_time_first"]),
        "item3_time_time": compare(riem[sp, 0, 0, sp], ref["item3_time_time"]),
    }


def item1_correction(s: FlowSolution, eps: float, delta: float, point, order: int = 5) -> float:
    """Size of the ``1/G`` correction in the spatial curvature block."""
    a = approx_metric(s, eps, delta, point, order)
    return float(np.abs(_closed_curvature(a)["item1_correction"]).max())


# ---------------------------------------------------------------------------
# limits


def connection_error(s: FlowSolution, eps: float, delta: float, point, order: int = 5) -> float:
    """Max component gap between ``G~_{eps,delta}`` and the degenerate connection."""
    a = approx_metric(s, eps, delta, point, order)
    deg = build_spacetime_connection(s, point, 0.0, order)
    return float(np.abs(as_array(a.conn.gamma) - as_array(deg.gamma)).max())


def gamma000(s: FlowSolution, eps: float, delta: float, point, order: int = 5) -> float:
    a = approx_metric(s, eps, delta, point, order)
    return float(as_array(a.conn.gamma)[0, 0, 0])


def time_component_gap(s: FlowSolution, eps: float, delta: float, point, order: int = 5) -> float:
    """``|G~^0_00 + 1/(2(t + delta))|``, the fixed-``delta`` limit gap."""
    t = float(np.asarray(point)[-1])
    return abs(gamma000(s, eps, delta, point, order) + 1.0 / (2.0 * (t + delta)))


def _form(a: ApproxSample, d: HarnackData) -> float:
    g_inv = as_array(a.metric.g_inv)
    T = embed_mixed(d.U, d.W, as_array(a.geo.g_inv))
    return curvature_quadratic_form(as_array(a.riem), g_inv, T)


def curvature_form(
    s: FlowSolution, eps: float, delta: float, point, d: HarnackData, order: int = 5
) -> float:
    """``g~^ip R~_pjk^l T_i^j T_l^k`` for ``T = U (+) W`` in mixed form."""
    return _form(approx_metric(s, eps, delta, point, order), d)


def harnack_target(s: FlowSolution, point, d: HarnackData, shift: float = 0.0) -> float:
    """``Z + Ric(W, W) / (2 (t + shift))`` with ``W`` raised through ``g``."""
    geo = s.geometry(point, order=4)
    parts = harnack_parts(geo)
    t = geo.point[-1]
    Wu = as_array(geo.g_inv) @ d.W
    return parts.z(d.U, d.W) + float(Wu @ parts.ric @ Wu) / (2.0 * (t + shift))


@dataclass
class SweepResult:
    """Per-schedule-entry errors of a limit sweep."""

    name: str
    epsilon: np.ndarray
    delta: np.ndarray
    conn_err: np.ndarray
    curv_form_err: np.ndarray
    gamma000: np.ndarray
    target_gap: np.ndarray
    notes: dict = field(default_factory=dict)

    def rows(self):
        for k in range(len(self.epsilon)):
            yield {
                "epsilon": float(self.epsilon[k]),
                "delta": float(self.delta[k]),
                "conn_err": float(self.conn_err[k]),
                "curv_form_err": float(self.curv_form_err[k]),
                "gamma000": float(self.gamma000[k]),
                "target_gap": float(self.target_gap[k]),
            }

    @staticmethod
    def ratios(err: np.ndarray) -> np.ndarray:
        err = np.asarray(err, dtype=float)
        return err[1:] / err[:-1]


def limit_sweep(
    s: FlowSolution,
    point,
    d: HarnackData,
    schedule,
    name: str = "sweep",
    order: int = 5,
) -> SweepResult:
    """Evaluate both limit targets along a schedule of ``(eps, delta)`` pairs.

    ``curv_form_err`` is the gap between the curvature form and its
    fixed-``delta`` limit ``Z + Ric(W, W) / (2 (t + delta))``; ``target_gap``
    is the gap to the Harnack target ``Z + Ric(W, W) / 2t``.
    """
    _require_plain(s)
    t = float(np.asarray(point)[-1])
    if t <= 0:
        raise ConfigurationError("limit sweeps need t > 0")
    sched = [(float(e), float(dl)) for e, dl in schedule]
    if len(sched) < 2:
        raise ConfigurationError("a sweep needs at least two schedule entries")
    geo = s.geometry(point, order=4)
    parts = harnack_parts(geo)
    Wu = as_array(geo.g_inv) @ d.W
    z, ric_ww = parts.z(d.U, d.W), float(Wu @ parts.ric @ Wu)
    deg = as_array(build_spacetime_connection(s, point, 0.0, order).gamma)
    cols = {k: [] for k in ("conn_err", "curv_form_err", "gamma000", "target_gap")}
    for eps, delta in sched:
        a = approx_metric(s, eps, delta, point, order)
        gam = as_array(a.conn.gamma)
        form = _form(a, d)
        cols["conn_err"].append(float(np.abs(gam - deg).max()))
        cols["curv_form_err"].append(abs(form - (z + ric_ww / (2.0 * (t + delta)))))
        cols["gamma000"].append(float(gam[0, 0, 0]))
        cols["target_gap"].append(abs(form - (z + ric_ww / (2.0 * t))))
    e, dl = np.array(sched).T
    return SweepResult(name, e, dl, *(np.array(cols[k]) for k in cols))


def joint_schedule(kmax: int = 10) -> list[tuple[float, float]]:
    """``eps = delta = 2^k`` for ``k = 1..kmax``."""
    return [(2.0**k, 2.0**k) for k in range(1, kmax + 1)]


def balanced_schedule(kmax: int = 10) -> list[tuple[float, float]]:
    """``eps = 4^k``, ``delta = 2^k``: ``G`` grows like ``eps / delta``."""
    return [(4.0**k, 2.0**k) for k in range(1, kmax + 1)]


def halving(err, lo: float = 0.4, hi: float = 0.6) -> bool:
    r = SweepResult.ratios(err)
    return bool(np.all((r >= lo) & (r <= hi)))


# ---------------------------------------------------------------------------
# 2-forms on space-time


def lambda2_decomposition(
    s: FlowSolution, eps: float, delta: float, point, alpha
) -> tuple[np.ndarray, np.ndarray]:
    """Split a space-time 2-form ``alpha`` (index 0 is time) into 2-form and 1-form parts.

    ``dx^a ^ dx^b`` maps to itself and ``dx^c ^ dt`` maps to ``G^{-1/2} dx^c``.
    """
    a = approx_metric(s, eps, delta, point, order=2)
    alpha = np.asarray(alpha, dtype=float)
    n = s.dim
    if alpha.shape != (n + 1, n + 1) or np.any(alpha + alpha.T != 0):
        raise ConfigurationError("alpha must be an antisymmetric (n+1) x (n+1) array")
    return alpha[1:, 1:].copy(), alpha[1:, 0] / np.sqrt(a.g00)


def _as_spacetime(x: LieAlgebraElement) -> np.ndarray:
    n = x.dim
    al = np.zeros((n + 1, n + 1))
    al[1:, 1:] = -x.two_form
    al[1:, 0] = x.one_form
    al[0, 1:] = -x.one_form
    return al


def induced_structure(
    s: FlowSolution, eps: float, delta: float, point, x: LieAlgebraElement, y: LieAlgebraElement
) -> tuple[LieAlgebraElement, float]:
    """Bracket and inner product induced by the nondegenerate ``g~_{eps,delta}``.

    The 1-form part is identified with its wedge against ``dt``; as ``eps``
    grows both converge to the semidirect structure, with ``1/eps`` rate.
    """
    a = approx_metric(s, eps, delta, point, order=2)
    gi = as_array(a.metric.g_inv)
    p, q = _as_spacetime(x), _as_spacetime(y)
    br = p @ gi @ q - q @ gi @ p
    inner = float(np.einsum("ik,jl,ij,kl->", gi, gi, p, q))
    return LieAlgebraElement(-br[1:, 1:], br[1:, 0].copy()), inner
