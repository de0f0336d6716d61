"""Catalog of exact Ricci-flow solutions and the residual checks built on them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from scipy.stats import qmc

from . import jets
from .checks import Residual, compare, vanishes
from .jets import ConfigurationError, Jet, jet_einsum, jet_seed
from .tensor import (
    Connection,
    MetricSample,
    christoffel,
    covariant_derivative,
    curvature_from_connection,
    hodge_laplacian,
    laplacian,
    lower_last,
    ricci_and_scalar,
    spatial_vars,
)

__all__ = [
    "DomainError",
    "FlowSolution",
    "MissingPotentialError",
    "PointGeometry",
    "SOLUTION_NAMES",
    "flow_residual",
    "make_solution",
    "sample_points",
    "soliton_residuals",
]

PLAIN_FLOW = "plain_flow"
MODIFIED_FLOW = "modified_flow"
STEADY_SOLITON = "steady_soliton"

SOLUTION_NAMES = ("flat", "shrinking_sphere", "cigar_flow", "cigar_static")


class DomainError(ValueError):
    """A point lies outside the declared domain of a solution."""


class MissingPotentialError(ConfigurationError):
    """An operation needs a potential function the solution does not carry."""


MetricFn = Callable[[Sequence[Jet], Jet], Jet]
PotentialFn = Callable[[Sequence[Jet], Jet], Jet]


@dataclass(frozen=True)
class FlowSolution:
    """A closed-form solution of Ricci flow (plain or modified by a gradient field).

    ``potential`` is the function ``f`` whose gradient generates the soliton
    field ``V = df``.  It enters the flow equation only when ``mode`` is not
    ``plain_flow``; for ``cigar_flow`` it is carried for soliton checks only.
    """

    name: str
    dim: int
    mode: str
    metric: MetricFn
    potential: PotentialFn | None
    r_max: float
    t_min: float
    t_max: float
    sample_t: tuple[float, float]
    params: dict = field(default_factory=dict)

    @property
    def has_potential(self) -> bool:
        return self.potential is not None

    @property
    def flow_potential(self) -> PotentialFn | None:
        """Potential entering the (modified) flow equation, or ``None``."""
        return None if self.mode == PLAIN_FLOW else self.potential

    @property
    def nonzero_flow_potential(self) -> bool:
        return self.flow_potential is not None and not self.params.get("zero_potential")

    def check_point(self, point) -> np.ndarray:
        p = np.asarray(point, dtype=float)
        if p.shape != (self.dim + 1,):
            raise DomainError(f"point must have {self.dim + 1} coordinates (x..., t)")
        x, t = p[:-1], p[-1]
        if np.linalg.norm(x) > self.r_max + 1e-12:
            raise DomainError(f"|x| = {np.linalg.norm(x):.4g} exceeds r_max = {self.r_max}")
        if not (self.t_min <= t < self.t_max):
            raise DomainError(f"t = {t} outside [{self.t_min}, {self.t_max})")
        return p

    def geometry(self, point, order: int = 5, tau: float = 0.0) -> "PointGeometry":
        """Jets of every spatial quantity about ``(x, t + tau)``."""
        p = np.array(point, dtype=float)
        p[-1] += tau
        p = self.check_point(p)
        return PointGeometry(self, p, order)


def _radius2(x: Sequence[Jet]) -> Jet:
    out = x[0] * x[0]
    for xi in x[1:]:
        out = out + xi * xi
    return out


def _conformal(u: Jet, n: int) -> Jet:
    eye = np.eye(n)
    return Jet(eye[..., None] * u.c, u.num_vars, u.order)


def make_solution(name: str, **params) -> FlowSolution:
    """Build a catalog entry.

    ``flat``: ``n`` (default 2), optional ``a`` (affine potential ``f = a.x``).
    ``shrinking_sphere``: ``n`` in {2, 3}, ``c0 > 0``.
    ``cigar_flow`` and ``cigar_static`` are two-dimensional and take no parameters.
    """
    if name == "flat":
        n = int(params.get("n", 2))
        if n < 1:
            raise ConfigurationError("flat: n must be positive")
        a = params.get("a")

        def metric(x, t):
            return Jet.constant(np.eye(n), t.num_vars, t.order)

        potential = None
        mode = PLAIN_FLOW
        if a is not None:
            a = np.asarray(a, dtype=float)
            if a.shape != (n,):
                raise ConfigurationError(f"flat: a must have length {n}")

            def potential(x, t, a=a):
                out = Jet.constant(0.0, t.num_vars, t.order)
                for ai, xi in zip(a, x):
                    out = out + ai * xi
                return out

            mode = MODIFIED_FLOW
        return FlowSolution(
            "flat", n, mode, metric, potential, 2.0, -1.0, 1.0, (0.05, 0.4),
            {"n": n, "a": None if a is None else a.tolist(),
             "zero_potential": a is not None and not np.any(a)},
        )

    if name == "shrinking_sphere":
        n = int(params.get("n", 2))
        c0 = float(params.get("c0", 1.0))
        if n not in (2, 3):
            raise ConfigurationError("shrinking_sphere: n must be 2 or 3")
        if not c0 > 0:
            raise ConfigurationError("shrinking_sphere: c0 must be positive")
        t_max = c0 / (2 * (n - 1))

        def metric(x, t, n=n, c0=c0):
            c = c0 - 2 * (n - 1) * t
            u = 4.0 * c * (1.0 + _radius2(x)) ** -2
            return _conformal(u, n)

        return FlowSolution(
            "shrinking_sphere", n, PLAIN_FLOW, metric, None, 2.0, 0.0, t_max,
            (0.1 * t_max, 0.8 * t_max), {"n": n, "c0": c0},
        )

    if name == "cigar_flow":
        _no_params(name, params)

        def metric(x, t):
            return _conformal(1.0 / (jets.exp(4.0 * t) + _radius2(x)), 2)

        def potential(x, t):
            return jets.log(jets.exp(4.0 * t) + _radius2(x))

        return FlowSolution(
            "cigar_flow", 2, PLAIN_FLOW, metric, potential, 2.0, -1.0, 1.0,
            (0.05, 0.4), {},
        )

    if name == "cigar_static":
        _no_params(name, params)

        def metric(x, t):
            return _conformal(1.0 / (1.0 + _radius2(x)), 2)

        def potential(x, t):
            return jets.log(1.0 + _radius2(x))

        return FlowSolution(
            "cigar_static", 2, STEADY_SOLITON, metric, potential, 2.0, -1.0, 1.0,
            (0.05, 0.4), {},
        )

    raise ConfigurationError(f"unknown solution {name!r}; expected one of {SOLUTION_NAMES}")


def _no_params(name, params):
    extra = set(params) - {"n"}
    if extra or params.get("n", 2) != 2:
        raise ConfigurationError(f"{name} takes no parameters besides n=2, got {params}")


class PointGeometry:
    """Lazily computed spatial geometry of a solution about one point.

    All attributes are jets in the variables ``(x^1..x^n, t)``.  The
    derivative chain costs one jet order per derivative, so e.g. ``lap_ric``
    has order ``order - 4``.
    """

    def __init__(self, solution: FlowSolution, point: np.ndarray, order: int):
        self.solution = solution
        self.point = point
        self.order = order
        self.n = solution.dim
        nv = self.n + 1
        self.coords = [jet_seed(i, point[i], nv, order) for i in range(self.n)]
        self.time = jet_seed(self.n, point[-1], nv, order)

    def dt(self, j: Jet) -> Jet:
        return j.diff(self.n)

    # metric and curvature ------------------------------------------------

    @cached_property
    def metric(self) -> MetricSample:
        return MetricSample.from_metric(
            self.solution.metric(self.coords, self.time), spatial_vars(self.n)
        )

    @property
    def g(self) -> Jet:
        return self.metric.g

    @property
    def g_inv(self) -> Jet:
        return self.metric.g_inv

    @cached_property
    def conn(self) -> Connection:
        return christoffel(self.metric)

    @property
    def gamma(self) -> Jet:
        return self.conn.gamma

    @cached_property
    def riem(self) -> Jet:
        return curvature_from_connection(self.conn)

    @cached_property
    def riem_low(self) -> Jet:
        return lower_last(self.riem, self.g)

    @cached_property
    def _ricci(self) -> tuple[Jet, Jet]:
        return ricci_and_scalar(self.riem, self.metric)

    @property
    def ric(self) -> Jet:
        return self._ricci[0]

    @property
    def scal(self) -> Jet:
        return self._ricci[1]

    @cached_property
    def ric_mixed(self) -> Jet:
        """``R_i^k`` stored as ``[i, k]``."""
        return jet_einsum("im,km->ik", self.ric, self.g_inv)

    @cached_property
    def ric_up(self) -> Jet:
        return jet_einsum("ak,ik->ai", self.g_inv, self.ric_mixed)

    @cached_property
    def d_ric(self) -> Jet:
        """``nabla_a R_jk`` as ``[a, j, k]``."""
        return covariant_derivative(self.ric, "dd", self.conn)

    @cached_property
    def d_ric_mixed(self) -> Jet:
        """``nabla_a R_j^l`` as ``[a, j, l]``."""
        return jet_einsum("ajm,lm->ajl", self.d_ric, self.g_inv)

    @cached_property
    def lap_ric(self) -> Jet:
        return laplacian(self.ric, "dd", self.conn, self.g_inv)

    @cached_property
    def d_scal(self) -> Jet:
        return covariant_derivative(self.scal, "", self.conn)

    @cached_property
    def hess_scal(self) -> Jet:
        return covariant_derivative(self.d_scal, "d", self.conn)

    @cached_property
    def lap_scal(self) -> Jet:
        return jet_einsum("ab,ab->", self.g_inv, self.hess_scal)

    @cached_property
    def ric_norm2(self) -> Jet:
        return jet_einsum("ik,ki->", self.ric_mixed, self.ric_mixed)

    # potential -------------------------------------------------------------

    @cached_property
    def f(self) -> Jet:
        """Soliton potential (zero jet when the solution carries none)."""
        pot = self.solution.potential
        if pot is None:
            return Jet.constant(0.0, self.n + 1, self.order)
        return pot(self.coords, self.time)

    @cached_property
    def flow_f(self) -> Jet:
        """Potential entering the flow equation (zero for plain flows)."""
        if self.solution.flow_potential is None:
            return Jet.constant(0.0, self.n + 1, self.order)
        return self.f

    @cached_property
    def df(self) -> Jet:
        return covariant_derivative(self.f, "", self.conn)

    @cached_property
    def grad_f(self) -> Jet:
        return jet_einsum("kl,l->k", self.g_inv, self.df)

    @cached_property
    def hess_f(self) -> Jet:
        return covariant_derivative(self.df, "d", self.conn)


def flow_residual(s: FlowSolution, point, order: int = 3, tau: float = 0.0) -> Residual:
    """Residual of the flow equation at a point.

    Plain flow: ``d_t g + 2 Ric``.  Modified flow: ``d_t g + 2 Ric - 2 Hess f``.
    """
    geo = s.geometry(point, order=order, tau=tau)
    dtg = geo.dt(geo.g)
    rhs = -2.0 * geo.ric
    terms = [dtg, 2.0 * geo.ric]
    if s.flow_potential is not None:
        hess = 2.0 * geo.hess_f
        rhs = rhs + hess
        terms.append(hess)
    return compare(dtg, rhs, *terms)


def soliton_residuals(s: FlowSolution, point, order: int = 4) -> dict[str, Residual]:
    """Steady-soliton identities with ``V = df``, every contraction raised through ``g``.

    Keys: ``ric_eq_hess`` (Ric equals the Hessian of f), ``closed`` (dV = 0),
    ``trace`` (R equals div V), ``divergence`` (1/2 dR + Ric(V) = 0),
    ``hodge_weitzenbock`` (Hodge Laplacian equals rough Laplacian minus Ric),
    and, on plain flows only, ``v_heat`` (time derivative of V matches
    ``Delta V - Ric(V)``).
    """
    if not s.has_potential:
        raise MissingPotentialError(f"{s.name} has no potential")
    geo = s.geometry(point, order=order)
    v = geo.df
    hess = geo.hess_f
    out = {
        "ric_eq_hess": compare(geo.ric, hess),
        "closed": vanishes(hess - hess.T, hess),
        "trace": compare(geo.scal, jet_einsum("ij,ij->", geo.g_inv, hess)),
    }
    ric_v = jet_einsum("jk,k->j", geo.ric_mixed, v)
    out["divergence"] = vanishes(0.5 * geo.d_scal + ric_v, 0.5 * geo.d_scal, ric_v)
    rough = laplacian(v, "d", geo.conn, geo.g_inv)
    hodge = hodge_laplacian(v, geo.conn, geo.g_inv)
    out["hodge_weitzenbock"] = compare(hodge, rough - ric_v, rough, ric_v)
    if s.mode == PLAIN_FLOW:
        dtv = geo.dt(v)
        out["v_heat"] = compare(dtv, rough - ric_v, rough, ric_v)
    return out


def sample_points(s: FlowSolution, count: int, seed: int, t_range=None) -> np.ndarray:
    """Deterministic low-discrepancy sample of ``count`` points inside the domain."""
    if count < 1:
        raise ConfigurationError("sample count must be at least 1")
    n = s.dim
    lo_t, hi_t = t_range if t_range is not None else s.sample_t
    sampler = qmc.Halton(d=n + 1, scramble=True, seed=np.random.default_rng(seed))
    u = sampler.random(count)
    half = s.r_max / math.sqrt(n)
    x = (2.0 * u[:, :n] - 1.0) * half
    t = lo_t + (hi_t - lo_t) * u[:, n]
    return np.column_stack([x, t])
