"""Batch verification runner.

Usage::

    harnack-lab --config run.toml --suite deg-flow --seed 42 --out report/ --format json

Exit codes: 0 when every check passes, 1 when a check fails, 2 for a
configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable, Mapping

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import approx, harnack, jets, spacetime
from .checks import DEFAULT_TOL, Residual, compare, vanishes
from .jets import ConfigurationError, jet_einsum, stack
from .solutions import (
    PLAIN_FLOW,
    DomainError,
    FlowSolution,
    flow_residual,
    make_solution,
    sample_points,
    soliton_residuals,
)
from .tensor import as_array, partials, spatial_vars

SUITES = (
    "flow",
    "soliton",
    "harnack-defs",
    "harnack-ineq",
    "spacetime-conn",
    "spacetime-curv",
    "deg-flow",
    "bianchi",
    "harnack-curvature",
    "approx-conn",
    "approx-curv",
    "limits",
)

SUITE_TOLERANCE = {
    "soliton": 1e-8,
    "bianchi": 1e-8,
    "limits": 0.2,
}

# checks whose residual is not a scaled identity gap
CHECK_TOLERANCE = {
    "approx.curv_item1_rate": 0.2,
    "limits.harnack_target": 1e-6,
    "limits.joint_monotone": 1e-12,
}

# check id -> anchor describing the identity being checked
ANCHORS: dict[str, str] = {
    "flow.equation": "flow equation: d_t g = -2 Ric (+ 2 Hess f on a modified flow)",
    "soliton.ric_eq_hess": "gradient soliton: Ric equals the Hessian of the potential",
    "soliton.closed": "gradient soliton: the soliton 1-form is closed",
    "soliton.trace": "gradient soliton: scalar curvature equals div V",
    "soliton.divergence": "gradient soliton: 1/2 dR + Ric(V) = 0",
    "soliton.hodge_weitzenbock": "gradient soliton: Hodge Laplacian of V equals Lap V - Ric(V)",
    "soliton.v_heat": "gradient soliton: d_t V = Lap V - Ric(V)",
    "soliton.grad_w": "interior product W = U _| V: nabla W + Ric U = 0",
    "soliton.w_heat": "interior product W = U _| V: heat equation with the -U Ric V term",
    "soliton.w_heat_gradient_form": "interior product W = U _| V: heat equation with 1/2 grad R",
    "soliton.wedge_substitution": "wedge U = V ^ W: product-rule substitution for nabla U",
    "harnack.p_antisymmetry": "Harnack tensor P is antisymmetric in its first two slots",
    "harnack.p_cyclic": "Harnack tensor P has vanishing cyclic sum",
    "harnack.m_symmetry": "Harnack tensor M is symmetric",
    "harnack.z_quadratic": "Harnack form Z is quadratic in (U, W)",
    "harnack.z_reduces_to_m": "Harnack form Z with U = 0 is M(W, W)",
    "algebra.jacobi": "semidirect bracket on 2-forms plus 1-forms: Jacobi identity",
    "algebra.interior": "semidirect bracket: [U + 0, 0 + X] = 0 + U _| X",
    "algebra.inner_ignores_one_form": "degenerate inner product sees only the 2-form part",
    "algebra.modes_bracket": "bracket agrees across lowered, space-time and mixed pictures",
    "algebra.modes_inner": "inner product agrees across lowered, space-time and mixed pictures",
    "algebra.mixed_antisymmetry": "mixed representation is g-antisymmetric",
    "algebra.sharp_symmetry": "sharp square of a symmetric form is symmetric",
    "algebra.sharp_rotation": "sharp square is independent of the orthonormal basis",
    "algebra.sharp_modes": "sharp square agrees for lowered and mixed structure constants",
    "harnack.trace_inequality": "trace Harnack inequality with the R/t term",
    "harnack.matrix_inequality": "matrix Harnack inequality with the Ric/2t term",
    "harnack.steady_trace_equality": "steady soliton: trace Harnack expression vanishes at V = grad f",
    "spacetime.conn_time_upper_zero": "space-time connection: upper time index vanishes",
    "spacetime.conn_spatial_block": "space-time connection: spatial block is Levi-Civita",
    "spacetime.conn_mixed_block": "space-time connection: mixed block is -Ric + Hess f",
    "spacetime.conn_time_block": "space-time connection: time-time block is a gradient",
    "spacetime.degenerate_metric": "degenerate inverse metric: time row and column vanish",
    "spacetime.compatibility": "space-time connection is compatible with the degenerate metric",
    "spacetime.torsion": "space-time connection is torsion-free",
    "spacetime.curv_spatial": "space-time curvature: spatial block equals Rm",
    "spacetime.curv_time_upper_vanishes": "space-time curvature: upper time index vanishes",
    "spacetime.curv_ij0": "space-time curvature: block with time in the third slot",
    "spacetime.curv_i0k": "space-time curvature: block with time in the second slot",
    "spacetime.curv_i00": "space-time curvature: time-time block",
    "spacetime.curv_all_components": "space-time curvature: every component, direct vs closed form",
    "spacetime.curv_i00_forms_agree": "space-time curvature: time-time block, elliptic vs evolution form",
    "spacetime.ricci_spatial": "space-time Ricci: spatial block equals Ric",
    "spacetime.ricci_time_space": "space-time Ricci: time-space entries",
    "spacetime.ricci_space_time": "space-time Ricci: space-time entries",
    "spacetime.ricci_time_time_evolution_form": "space-time Ricci: time-time entry, evolution form as printed",
    "spacetime.ricci_time_time_evolution_form_corrected": "space-time Ricci: time-time entry, evolution form with Lie-derivative term",
    "spacetime.ricci_time_time_elliptic_form": "space-time Ricci: time-time entry, elliptic form",
    "spacetime.ricci_scalar": "space-time scalar curvature equals R at the shifted time",
    "degflow.metric": "degenerate flow: inverse metric equation",
    "degflow.connection_spatial": "degenerate flow: connection equation, spatial indices",
    "degflow.connection_mixed_index": "degenerate flow: connection equation, one time index",
    "degflow.connection_time_time": "degenerate flow: connection equation, two time indices",
    "degflow.connection_time_row": "degenerate flow: connection equation, upper time index",
    "degflow.connection_all": "degenerate flow: connection equation, all indices",
    "bianchi.scalar_chain_time_derivative": "contracted Bianchi chain: 1/2 d_t R = 1/2 nabla_0 R",
    "bianchi.scalar_chain_divergence": "contracted Bianchi chain: divergence of the time column",
    "bianchi.scalar_chain_expanded": "contracted Bianchi chain: connection-expanded divergence",
    "bianchi.scalar_chain_elliptic": "contracted Bianchi chain: 1/2 Lap R + |Ric|^2",
    "bianchi.second_bianchi": "second Bianchi identity on space-time",
    "bianchi.second_bianchi_time_display": "second Bianchi identity solved for the time derivative",
    "bianchi.curvature_ricci_derivative_spatial": "curvature as Ricci derivatives: spatial indices",
    "bianchi.curvature_ricci_derivative_time_last": "curvature as Ricci derivatives: time in the last lower slot",
    "bianchi.curvature_ricci_derivative_time_first": "curvature as Ricci derivatives: time-first expression vanishes",
    "bianchi.curvature_ricci_derivative_time_both": "curvature as Ricci derivatives: double-time expression vanishes",
    "bianchi.curvature_ricci_derivative_time_first_lhs": "curvature with time in two lower slots vanishes",
    "bianchi.curvature_ricci_derivative_time_both_lhs": "curvature with time in three lower slots vanishes",
    "bianchi.ricci_hessian_unified": "Ricci-minus-Hessian derivative symmetry, all indices",
    "bianchi.ricci_hessian_spatial": "Ricci-minus-Hessian derivative symmetry: spatial",
    "bianchi.ricci_hessian_time_derivative": "Ricci-minus-Hessian derivative symmetry: time derivative",
    "bianchi.ricci_hessian_mixed": "Ricci-minus-Hessian derivative symmetry: time entry",
    "bianchi.ricci_hessian_time_time": "Ricci-minus-Hessian derivative symmetry: time derivative of time entry",
    "bianchi.commutation_spatial": "commuting covariant derivatives of grad f",
    "bianchi.commutation_spacetime": "commuting space-time covariant derivatives of df",
    "harnack_curvature.equality": "space-time curvature form equals the Harnack quantity Z",
    "harnack_curvature.four_term": "space-time curvature form: four-block expansion",
    "harnack_curvature.spatial_two_form": "U + W derivatives: spatial derivative of the 2-form part",
    "harnack_curvature.spatial_one_form": "U + W derivatives: spatial derivative of the 1-form part",
    "harnack_curvature.time_two_form": "U + W derivatives: time derivative of the 2-form part",
    "harnack_curvature.time_one_form": "U + W derivatives: time derivative of the 1-form part",
    "harnack_curvature.laplacian_two_form": "U + W derivatives: Laplacian of the 2-form part",
    "harnack_curvature.laplacian_one_form": "U + W derivatives: Laplacian of the 1-form part",
    "harnack_curvature.laplacian_one_form_parallel": "U + W derivatives: 1-form Laplacian for parallel U",
    "harnack_curvature.heat_two_form": "U + W heat operator: 2-form part",
    "harnack_curvature.heat_one_form": "U + W heat operator: 1-form part",
    "approx.conn_item1_spatial": "approximating connection: spatial block",
    "approx.conn_item2_time_upper": "approximating connection: upper time, spatial lower",
    "approx.conn_item3_mixed": "approximating connection: mixed block is -Ric",
    "approx.conn_item4_time_time": "approximating connection: time-time block is -grad R / 2",
    "approx.conn_item5_time_upper_mixed": "approximating connection: upper time, one lower time",
    "approx.conn_item6_time_upper_time_time": "approximating connection: all-time component",
    "approx.conn_compatibility": "approximating connection is metric-compatible",
    "approx.conn_torsion": "approximating connection is torsion-free",
    "approx.curv_item1_spatial": "approximating curvature: spatial block",
    "approx.curv_item2_time_first": "approximating curvature: time in the first slot",
    "approx.curv_item3_time_time": "approximating curvature: time-time block",
    "approx.curv_item1_rate": "approximating curvature: spatial correction scales like 1/eps",
    "limits.joint_rate": "connection limit along eps = delta: error halves per doubling",
    "limits.joint_monotone": "connection limit along eps = delta: error decreases",
    "limits.time_component_rate": "all-time connection component at delta = 1, t = 0: gap to -1/(2(t+delta)) halves",
    "limits.harnack_target": "curvature form tends to Z + Ric(W, W)/2t",
    "limits.fixed_delta_rate": "curvature form at fixed delta: gap halves as eps doubles",
    "limits.delta_rate": "curvature form as delta -> 0: gap halves as delta halves",
}


@dataclass(frozen=True)
class RunConfig:
    """Everything that determines a report."""

    solution: str = "shrinking_sphere"
    params: Mapping = field(default_factory=lambda: {"n": 2, "c0": 1.0})
    tau: float = 0.0
    order: int = 5
    samples: int = 32
    seed: int = 0
    suites: tuple[str, ...] = ()
    tolerances: Mapping = field(default_factory=dict)
    draws: int = 32
    approx_eps: tuple[float, ...] = (10.0, 100.0, 1000.0)
    approx_delta: float = 1.0
    sweep_kmax: int = 10
    sweep_points: int = 4
    out_dir: str | None = None
    format: str = "json"
    # wall-clock time is the only non-deterministic report field, so it is opt-in
    timing: bool = False

    def __post_init__(self):
        if not 4 <= self.order <= 6:
            raise ConfigurationError(f"run.order must be in [4, 6], got {self.order}")
        if self.samples < 1:
            raise ConfigurationError("run.samples must be at least 1")
        if self.tau < 0:
            raise ConfigurationError("run.tau must be non-negative")
        unknown = [s for s in self.suites if s not in SUITES]
        if unknown:
            raise ConfigurationError(f"run.suites: unknown suite(s) {unknown}; known: {SUITES}")
        if self.format not in ("json", "text"):
            raise ConfigurationError(f"output.format must be json or text, got {self.format!r}")
        if self.sweep_kmax < 10:
            raise ConfigurationError("sweep.kmax must be at least 10 (rates use the last five steps)")
        if self.seed < 0 or self.seed >= 2**64:
            raise ConfigurationError("run.seed must be an unsigned 64-bit integer")

    @classmethod
    def from_mapping(cls, data: Mapping) -> "RunConfig":
        known = {"solution", "run", "tolerances", "approx", "sweep", "output"}
        extra = set(data) - known
        if extra:
            raise ConfigurationError(f"unknown config table(s) {sorted(extra)}")
        sol = dict(data.get("solution", {}))
        run = dict(data.get("run", {}))
        ap = dict(data.get("approx", {}))
        sw = dict(data.get("sweep", {}))
        out = dict(data.get("output", {}))
        kw: dict = {}
        if sol:
            if "name" not in sol:
                raise ConfigurationError("solution.name is required")
            kw["solution"] = str(sol.pop("name"))
            kw["params"] = sol
        mapping = {
            "tau": (run, "tau", float),
            "order": (run, "order", int),
            "samples": (run, "samples", int),
            "seed": (run, "seed", int),
            "draws": (run, "draws", int),
            "suites": (run, "suites", tuple),
            "approx_eps": (ap, "epsilon", lambda v: tuple(float(x) for x in v)),
            "approx_delta": (ap, "delta", float),
            "sweep_kmax": (sw, "kmax", int),
            "sweep_points": (sw, "points", int),
            "out_dir": (out, "dir", str),
            "format": (out, "format", str),
            "timing": (out, "timing", bool),
        }
        for name, (table, key, conv) in mapping.items():
            if key in table:
                try:
                    kw[name] = conv(table.pop(key))
                except (TypeError, ValueError) as exc:
                    raise ConfigurationError(f"bad value for {key!r}: {exc}") from None
        for label, table in (("run", run), ("approx", ap), ("sweep", sw), ("output", out)):
            if table:
                raise ConfigurationError(f"unknown key(s) in [{label}]: {sorted(table)}")
        tol = dict(data.get("tolerances", {}))
        for k, v in tol.items():
            if k not in SUITES and k not in ANCHORS and k != "default":
                raise ConfigurationError(f"tolerances: unknown suite or check {k!r}")
            if not (isinstance(v, (int, float)) and v > 0):
                raise ConfigurationError(f"tolerances.{k} must be a positive number")
        kw["tolerances"] = tol
        return cls(**kw)

    @classmethod
    def from_toml(cls, path: str | os.PathLike) -> "RunConfig":
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from None
        except tomllib.TOMLDecodeError as exc:
            raise ConfigurationError(f"malformed config {path}: {exc}") from None
        return cls.from_mapping(data)

    def tolerance(self, suite: str, check: str) -> float:
        t = self.tolerances
        if check in t:
            return float(t[check])
        if check in CHECK_TOLERANCE:
            return CHECK_TOLERANCE[check]
        if suite in t:
            return float(t[suite])
        if suite in SUITE_TOLERANCE:
            return SUITE_TOLERANCE[suite]
        return float(t.get("default", DEFAULT_TOL))

    def to_dict(self) -> dict:
        """Report view of the config; the output directory is a destination, not a parameter."""
        d = asdict(self)
        del d["out_dir"]
        d["params"] = dict(self.params)
        d["suites"] = list(self.suites)
        d["approx_eps"] = list(self.approx_eps)
        d["tolerances"] = dict(self.tolerances)
        return d


# ---------------------------------------------------------------------------
# result collection


@dataclass
class CheckResult:
    id: str
    anchor: str
    residual: float
    tolerance: float
    passed: bool
    point: list[float] | None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "anchor": self.anchor,
            "residual": self.residual,
            "tolerance": self.tolerance,
            "pass": self.passed,
            "point": self.point,
        }


class _Collector:
    """Worst case per check id over sample points, in first-seen order."""

    def __init__(self, cfg: RunConfig, suite: str):
        self.cfg = cfg
        self.suite = suite
        self.items: dict[str, CheckResult] = {}

    def add(self, cid: str, r: Residual | float, point=None) -> None:
        if cid not in ANCHORS:
            raise KeyError(f"check {cid!r} has no anchor")
        tol = self.cfg.tolerance(self.suite, cid)
        value = r.value / r.bound_scale if isinstance(r, Residual) else float(r)
        if math.isnan(value):
            value = math.inf
        pt = None if point is None else [float(x) for x in np.asarray(point).ravel()]
        cur = self.items.get(cid)
        ok = value <= tol
        if cur is None:
            self.items[cid] = CheckResult(cid, ANCHORS[cid], value, tol, ok, pt)
        elif value > cur.residual:
            cur.residual, cur.point = value, pt
            cur.passed = cur.passed and ok
        else:
            cur.passed = cur.passed and ok


def _threads() -> int:
    raw = os.environ.get("HARNACK_LAB_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigurationError(f"HARNACK_LAB_THREADS must be an integer, got {raw!r}") from None


def _rng(cfg: RunConfig, suite: str, index: int) -> np.random.Generator:
    return np.random.default_rng([cfg.seed, zlib.crc32(suite.encode()), index])


def _points(cfg: RunConfig, s: FlowSolution, suite: str, t_range=None) -> np.ndarray:
    lo, hi = t_range if t_range is not None else s.sample_t
    hi = min(hi, s.t_max - cfg.tau - 1e-9)
    if hi <= lo:
        raise ConfigurationError(f"run.tau = {cfg.tau} leaves no sampling interval")
    seed = int(np.random.default_rng([cfg.seed, zlib.crc32(suite.encode())]).integers(2**32))
    return sample_points(s, cfg.samples, seed, (lo, hi))


def _per_point(cfg, s, suite, fn: Callable, points=None) -> _Collector:
    pts = _points(cfg, s, suite) if points is None else points
    col = _Collector(cfg, suite)
    jobs = [(i, p) for i, p in enumerate(pts)]

    def run(job):
        i, p = job
        return p, fn(p, _rng(cfg, suite, i))

    workers = _threads()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(run, jobs))
    else:
        results = [run(j) for j in jobs]
    for p, recs in results:
        for cid, r in recs:
            col.add(cid, r, p)
    return col


def _recs(prefix: str, rec: Mapping[str, Residual]):
    return [(f"{prefix}.{k}", r) for k, r in rec.items()]


# ---------------------------------------------------------------------------
# suites


def _require(cond: bool, suite: str, msg: str) -> None:
    if not cond:
        raise ConfigurationError(f"suite {suite!r}: {msg}")


def suite_flow(cfg, s):
    return _per_point(
        cfg, s, "flow", lambda p, rng: [("flow.equation", flow_residual(s, p, 3, cfg.tau))]
    )


def suite_soliton(cfg, s):
    _require(s.has_potential, "soliton", f"solution.name = {s.name!r} has no potential")

    def fn(p, rng):
        out = _recs("soliton", soliton_residuals(s, p, order=4))
        if s.dim == 2:
            out += _recs("soliton", harnack.soliton_uw_checks(s, p, order=cfg.order))
        else:
            n = s.dim
            r = harnack.wedge_substitution_residual(
                rng.normal(size=(n, n)) + rng.normal(size=(n, n)).T,
                rng.normal(size=n),
                rng.normal(size=n),
            )
            out.append(("soliton.wedge_substitution", r))
        return out

    return _per_point(cfg, s, "soliton", fn)


def _algebra_records(g: np.ndarray, rng: np.random.Generator):
    n = len(g)
    el = lambda: harnack.LieAlgebraElement(  # noqa: E731
        harnack.random_two_form(rng, n), rng.normal(size=n)
    )
    a, b, c = el(), el(), el()
    out = []
    br = lambda x, y, m="direct": harnack.bracket_and_inner(x, y, g, m)[0]  # noqa: E731
    jac = br(a, br(b, c)) + br(b, br(c, a)) + br(c, br(a, b))
    out.append(("algebra.jacobi", vanishes(jac.as_vector(), br(a, br(b, c)).as_vector())))
    zero2, zero1 = np.zeros((n, n)), np.zeros(n)
    u0 = harnack.LieAlgebraElement(a.two_form, zero1)
    x0 = harnack.LieAlgebraElement(zero2, b.one_form)
    g_inv = np.linalg.inv(g)
    want = harnack.LieAlgebraElement(zero2, harnack.interior(a.two_form, b.one_form, g_inv))
    out.append(("algebra.interior", compare(br(u0, x0).as_vector(), want.as_vector())))
    _, i1 = harnack.bracket_and_inner(a, a, g)
    _, i2 = harnack.bracket_and_inner(u0, u0, g)
    out.append(("algebra.inner_ignores_one_form", compare(i1, i2)))
    bd, idr = harnack.bracket_and_inner(a, b, g, "direct")
    for mode in ("spacetime", "mixed"):
        bm, im = harnack.bracket_and_inner(a, b, g, mode)
        out.append(("algebra.modes_bracket", compare(bm.as_vector(), bd.as_vector())))
        out.append(("algebra.modes_inner", compare(im, idr)))
    T = spacetime.embed_mixed(a.two_form, a.one_form, g_inv)
    low = T[1:, 1:] @ g
    out.append(("algebra.mixed_antisymmetry", vanishes(low + low.T, low)))
    basis = harnack.two_form_basis(g)
    basis_r = harnack.two_form_basis(g, rng)
    cd = harnack.structure_constants(basis, g)
    cm = harnack.structure_constants(basis, g, "mixed")
    cr = harnack.structure_constants(basis_r, g)
    N = len(basis)
    Q = rng.normal(size=(N, N))
    Q = Q + Q.T
    sq = harnack.sharp_square(Q, cd)
    out.append(("algebra.sharp_symmetry", vanishes(sq - sq.T, sq)))
    out.append(("algebra.sharp_modes", compare(harnack.sharp_square(Q, cm), sq)))
    M1 = np.column_stack([e.as_vector() for e in basis])
    M2 = np.column_stack([e.as_vector() for e in basis_r])
    O = np.linalg.solve(M1, M2)
    rot = O.T @ sq @ O
    out.append(("algebra.sharp_rotation", compare(harnack.sharp_square(O.T @ Q @ O, cr), rot)))
    return out


def suite_harnack_defs(cfg, s):
    def fn(p, rng):
        geo = s.geometry(p, order=cfg.order)
        parts = harnack.harnack_parts(geo)
        P = parts.P
        n = s.dim
        out = [
            ("harnack.p_antisymmetry", vanishes(P + P.transpose(1, 0, 2), P)),
            (
                "harnack.p_cyclic",
                vanishes(P + P.transpose(1, 2, 0) + P.transpose(2, 0, 1), P),
            ),
            ("harnack.m_symmetry", vanishes(parts.M - parts.M.T, parts.M)),
        ]
        U, W = harnack.random_two_form(rng, n), rng.normal(size=n)
        lam = float(rng.uniform(0.5, 2.0))
        z = parts.z(U, W)
        out.append(("harnack.z_quadratic", compare(parts.z(lam * U, lam * W), lam**2 * z)))
        Wu = parts.g_inv @ W
        out.append(
            ("harnack.z_reduces_to_m", compare(parts.z(np.zeros((n, n)), W), Wu @ parts.M @ Wu))
        )
        if n >= 2:
            out += _algebra_records(parts.g, rng)
        return out

    return _per_point(cfg, s, "harnack-defs", fn)


def suite_harnack_ineq(cfg, s):
    _require(s.mode == PLAIN_FLOW, "harnack-ineq", f"solution.name = {s.name!r} is not a plain flow")
    lo, hi = max(s.sample_t[0], 0.05), min(s.sample_t[1], 0.4)
    lo = max(lo, s.t_min + 1e-9, 1e-6)
    pts = _points(cfg, s, "harnack-ineq", (lo, hi))

    def fn(p, rng):
        geo = s.geometry(p, order=cfg.order)
        parts = harnack.harnack_parts(geo)
        n = s.dim
        worst_t, worst_z = math.inf, math.inf
        for _ in range(cfg.draws):
            V = rng.normal(scale=2.0, size=n)
            worst_t = min(worst_t, harnack.trace_harnack(geo, None, V, with_time_term=True))
            U, W = harnack.random_two_form(rng, n), rng.normal(size=n)
            worst_z = min(worst_z, parts.z(U, W, with_time_term=True))
        out = [
            ("harnack.trace_inequality", max(0.0, -worst_t)),
            ("harnack.matrix_inequality", max(0.0, -worst_z)),
        ]
        if s.has_potential:
            V = as_array(geo.grad_f)
            val = harnack.trace_harnack(geo, None, V)
            out.append(
                ("harnack.steady_trace_equality", compare(val, 0.0, as_array(geo.dt(geo.scal))))
            )
        return out

    return _per_point(cfg, s, "harnack-ineq", fn, pts)


def suite_spacetime_conn(cfg, s):
    def fn(p, rng):
        c = spacetime.build_spacetime_connection(s, p, cfg.tau, cfg.order)
        gam = as_array(c.gamma)
        gi = as_array(c.g_inv)
        geo = c.geo
        mixed = as_array(c.hess_f_mixed - geo.ric_mixed).T
        out = [
            ("spacetime.conn_time_upper_zero", vanishes(gam[0])),
            ("spacetime.conn_spatial_block", compare(gam[1:, 1:, 1:], as_array(geo.gamma))),
            ("spacetime.conn_mixed_block", compare(gam[1:, 1:, 0], mixed)),
            ("spacetime.conn_mixed_block", compare(gam[1:, 0, 1:], mixed)),
            (
                "spacetime.degenerate_metric",
                compare(gi, np.pad(as_array(geo.g_inv), ((1, 0), (1, 0)))),
            ),
        ]
        # the lowered time-time block is a differential, so its derivative is symmetric
        low = jet_einsum("kl,l->k", geo.g, c.time_block)
        d_low = as_array(partials(low, spatial_vars(s.dim)))
        out.append(("spacetime.conn_time_block", vanishes(d_low - d_low.T, d_low)))
        rec = spacetime.compatibility_and_torsion(c)
        out.append(("spacetime.compatibility", rec["compatibility"]))
        out.append(("spacetime.torsion", rec["torsion"]))
        return out

    return _per_point(cfg, s, "spacetime-conn", fn)


def suite_spacetime_curv(cfg, s):
    def fn(p, rng):
        c = spacetime.build_spacetime_connection(s, p, cfg.tau, cfg.order)
        out = [
            (f"spacetime.curv_{k}", r)
            for k, r in spacetime.curvature_residuals(c).items()
        ]
        out += [(f"spacetime.ricci_{k}", r) for k, r in spacetime.ricci_residuals(c).items()]
        return out

    return _per_point(cfg, s, "spacetime-curv", fn)


def suite_deg_flow(cfg, s):
    def fn(p, rng):
        c = spacetime.build_spacetime_connection(s, p, cfg.tau, cfg.order)
        return _recs("degflow", spacetime.degenerate_flow_residual(c))

    return _per_point(cfg, s, "deg-flow", fn)


def suite_bianchi(cfg, s):
    def fn(p, rng):
        c = spacetime.build_spacetime_connection(s, p, cfg.tau, cfg.order)
        return _recs("bianchi", spacetime.bianchi_identity_residuals(c))

    return _per_point(cfg, s, "bianchi", fn)


def polynomial_fields(rng: np.random.Generator, n: int):
    """Random quadratic-in-space, linear-in-time 2-form and 1-form fields."""
    cu = rng.normal(scale=0.5, size=(n, n, n + 3))
    cw = rng.normal(scale=0.5, size=(n, n + 3))

    def poly(c, x, t):
        out = c[0] + c[1] * t
        for i, xi in enumerate(x):
            out = out + c[2 + i] * xi
        return out + c[-1] * x[0] * x[-1]

    def U_field(x, t):
        rows = []
        for i in range(n):
            row = []
            for j in range(n):
                if i == j:
                    row.append(x[0] * 0.0)
                elif i < j:
                    row.append(poly(cu[i, j], x, t))
                else:
                    row.append(-poly(cu[j, i], x, t))
            rows.append(stack(row))
        return stack(rows)

    def W_field(x, t):
        return stack([poly(cw[i], x, t) for i in range(n)])

    return U_field, W_field


def volume_fields(s: FlowSolution):
    """Volume form of a surface and ``W = vol _| grad f`` (zero without a potential)."""

    def U_field(x, t):
        g = s.metric(x, t)
        mu = jets.sqrt(g[0, 0] * g[1, 1] - g[0, 1] * g[1, 0])
        z = mu * 0.0
        return stack([stack([z, mu]), stack([-mu, z])])

    def W_field(x, t):
        U = U_field(x, t)
        if s.potential is None:
            return stack([x[0] * 0.0, x[0] * 0.0])
        f = s.potential(x, t)
        df = stack([f.diff(0), f.diff(1)])
        g_inv = jets.jet_inv(s.metric(x, t))
        return -jet_einsum("ij,j->i", U, jet_einsum("jk,k->j", g_inv, df))

    return U_field, W_field


def suite_harnack_curvature(cfg, s):
    _require(
        s.flow_potential is None,
        "harnack-curvature",
        f"solution.name = {s.name!r} has a nonzero flow potential; the curvature/Z identity "
        "is stated for the unmodified flow",
    )

    def fn(p, rng):
        c = spacetime.build_spacetime_connection(s, p, cfg.tau, cfg.order)
        n = s.dim
        riem = as_array(spacetime.spacetime_curvature(c).riem)
        gi = as_array(c.g_inv)
        out = []
        for _ in range(max(1, cfg.draws // 8)):
            d = harnack.HarnackData(harnack.random_two_form(rng, n), rng.normal(size=n))
            lhs, z, _ = spacetime.harnack_equals_curvature(c, d)
            out.append(("harnack_curvature.equality", compare(lhs, z)))
            T = spacetime.embed_mixed(d.U, d.W, as_array(c.geo.g_inv))
            out.append(
                ("harnack_curvature.four_term", compare(spacetime.four_term_expansion(riem, gi, T), lhs))
            )
        fields = [polynomial_fields(rng, n)]
        if n == 2:
            fields.append(volume_fields(s))
        for U_field, W_field in fields:
            out += _recs("harnack_curvature", spacetime.spacetime_T_derivatives(c, U_field, W_field))
        return out

    return _per_point(cfg, s, "harnack-curvature", fn)


def suite_approx_conn(cfg, s):
    _require(s.flow_potential is None, "approx-conn", f"solution.name = {s.name!r} is a modified flow")

    def fn(p, rng):
        out = []
        for eps in cfg.approx_eps:
            rec = approx.approx_connection_check(s, eps, cfg.approx_delta, p, cfg.order)
            out += [(f"approx.conn_{k}", r) for k, r in rec.items()]
        return out

    return _per_point(cfg, s, "approx-conn", fn)


def _rate_residual(err, target: float = 0.5) -> float:
    """Largest relative departure of consecutive ratios from ``target``."""
    err = np.asarray(err, dtype=float)
    if np.all(np.abs(err) <= 1e-13):
        return 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        r = err[1:] / err[:-1]
    return float(np.max(np.abs(r / target - 1.0)))


def suite_approx_curv(cfg, s):
    _require(s.flow_potential is None, "approx-curv", f"solution.name = {s.name!r} is a modified flow")

    def fn(p, rng):
        out = []
        for eps in cfg.approx_eps:
            rec = approx.approx_curvature_check(s, eps, cfg.approx_delta, p, cfg.order)
            out += [(f"approx.curv_{k}", r) for k, r in rec.items()]
        # far enough out that eps / 2(t + delta) dominates R on every catalog entry
        e0 = 1e4
        corr = [approx.item1_correction(s, e, cfg.approx_delta, p, cfg.order) for e in (e0, 2 * e0)]
        out.append(("approx.curv_item1_rate", _rate_residual(corr)))
        return out

    return _per_point(cfg, s, "approx-curv", fn)


@dataclass
class LimitsOutput:
    collector: _Collector
    sweeps: dict[str, approx.SweepResult]
    notes: dict


def suite_limits(cfg, s) -> LimitsOutput:
    _require(s.flow_potential is None, "limits", f"solution.name = {s.name!r} is a modified flow")
    lo, hi = s.sample_t
    lo = max(lo, 1e-3)
    pts = _points(cfg, s, "limits", (lo, hi))[: max(1, cfg.sweep_points)]
    col = _Collector(cfg, "limits")
    sweeps: dict[str, approx.SweepResult] = {}
    kmax = cfg.sweep_kmax
    n = s.dim
    fitted_c = 0.0
    balanced_ratio = 0.0
    for i, p in enumerate(pts):
        rng = _rng(cfg, "limits", i)
        W = rng.normal(size=n)
        g_inv = as_array(s.geometry(p, order=2).g_inv)
        W = W / math.sqrt(W @ g_inv @ W)
        d_rate = harnack.HarnackData(0.5 * harnack.random_two_form(rng, n), W)
        d_lit = harnack.HarnackData(np.zeros((n, n)), W)
        last = slice(kmax - 6, kmax)  # last five ratios
        joint = approx.limit_sweep(s, p, d_rate, approx.joint_schedule(kmax), "joint")
        col.add("limits.joint_rate", _rate_residual(joint.conn_err[last]), p)
        dif = np.diff(joint.conn_err[last])
        col.add("limits.joint_monotone", float(max(0.0, dif.max()) / max(1e-300, joint.conn_err[last].max())), p)
        bal = approx.limit_sweep(s, p, d_rate, approx.balanced_schedule(kmax), "balanced")
        balanced_ratio = max(balanced_ratio, float(bal.ratios(bal.conn_err)[-1]))
        p0 = np.append(p[:-1], max(0.0, s.t_min))
        eps = 2.0 ** np.arange(1, kmax + 1)
        gaps = np.array([approx.time_component_gap(s, e, 1.0, p0) for e in eps])
        col.add("limits.time_component_rate", _rate_residual(gaps[last]), p0)
        fitted_c = max(fitted_c, float(np.max(gaps * eps)))
        fixed = approx.limit_sweep(
            s, p, d_rate, [(2.0**k, 1.0) for k in range(kmax, kmax + 6)], "fixed_delta"
        )
        col.add("limits.fixed_delta_rate", _rate_residual(fixed.curv_form_err), p)
        dsweep = approx.limit_sweep(
            s, p, d_rate, [(2.0**40, 2.0 ** -k) for k in range(kmax - 4, kmax + 2)], "delta"
        )
        col.add("limits.delta_rate", _rate_residual(dsweep.target_gap), p)
        target = approx.limit_sweep(
            s, p, d_lit, [(2.0**20, 2.0**-10), (2.0**21, 2.0**-10)], "target"
        )
        gap = float(target.target_gap[0])
        col.add("limits.harnack_target", gap, p)
        if i == 0:
            sweeps = {"joint": joint, "balanced": bal, "fixed_delta": fixed, "delta": dsweep, "target": target}
    return LimitsOutput(col, sweeps, {"time_component_C": fitted_c, "balanced_last_ratio": balanced_ratio})


SUITE_FUNCS: dict[str, Callable] = {
    "flow": suite_flow,
    "soliton": suite_soliton,
    "harnack-defs": suite_harnack_defs,
    "harnack-ineq": suite_harnack_ineq,
    "spacetime-conn": suite_spacetime_conn,
    "spacetime-curv": suite_spacetime_curv,
    "deg-flow": suite_deg_flow,
    "bianchi": suite_bianchi,
    "harnack-curvature": suite_harnack_curvature,
    "approx-conn": suite_approx_conn,
    "approx-curv": suite_approx_curv,
    "limits": suite_limits,
}


def applicable_suites(s: FlowSolution) -> tuple[str, ...]:
    """Suites whose preconditions the solution meets."""
    out = []
    for name in SUITES:
        if name == "soliton" and not s.has_potential:
            continue
        if name == "harnack-ineq" and s.mode != PLAIN_FLOW:
            continue
        if name in ("harnack-curvature", "approx-conn", "approx-curv", "limits") and (
            s.flow_potential is not None
        ):
            continue
        out.append(name)
    return tuple(out)


# ---------------------------------------------------------------------------
# running and reporting


@dataclass
class Report:
    config: dict
    suites: list[dict]
    passed: bool
    elapsed_ms: float
    sweeps: dict[str, approx.SweepResult] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "suites": self.suites,
            "pass": self.passed,
            "elapsed_ms": self.elapsed_ms,
        }

    def failing(self) -> Iterable[tuple[str, dict]]:
        for su in self.suites:
            for ch in su["checks"]:
                if not ch["pass"]:
                    yield su["name"], ch


def run_suites(cfg: RunConfig) -> Report:
    """Execute the configured suites; the result depends only on ``cfg`` (and timing)."""
    start = time.perf_counter()
    try:
        s = make_solution(cfg.solution, **dict(cfg.params))
    except TypeError as exc:
        raise ConfigurationError(f"solution parameters: {exc}") from None
    names = cfg.suites or applicable_suites(s)
    suites = []
    sweeps: dict[str, approx.SweepResult] = {}
    for name in names:
        try:
            res = SUITE_FUNCS[name](cfg, s)
        except DomainError as exc:
            raise ConfigurationError(f"suite {name!r}: {exc}") from None
        notes = None
        if isinstance(res, LimitsOutput):
            sweeps = res.sweeps
            notes = res.notes
            res = res.collector
        checks = [c.to_dict() for c in res.items.values()]
        entry = {"name": name, "checks": checks, "pass": all(c["pass"] for c in checks)}
        if notes:
            entry["notes"] = notes
        suites.append(entry)
    elapsed = (time.perf_counter() - start) * 1e3 if cfg.timing else 0.0
    return Report(
        cfg.to_dict(), suites, all(su["pass"] for su in suites), round(elapsed, 3), sweeps
    )


def format_text(report: Report) -> str:
    lines = []
    for su in report.suites:
        lines.append(f"== {su['name']}: {'PASS' if su['pass'] else 'FAIL'}")
        for ch in su["checks"]:
            flag = "PASS" if ch["pass"] else "FAIL"
            lines.append(
                f"  [{flag}] {ch['id']:<52} {ch['residual']:.3e} <= {ch['tolerance']:.1e}  "
                f"({ch['anchor']})"
            )
        for k, v in su.get("notes", {}).items():
            lines.append(f"  note {k} = {v:.6g}")
    failing = list(report.failing())
    if failing:
        lines.append("failing checks:")
        for suite, ch in failing:
            lines.append(f"  {suite}/{ch['id']}: {ch['anchor']}")
    lines.append(f"overall: {'PASS' if report.passed else 'FAIL'}")
    return "\n".join(lines) + "\n"


def format_json(report: Report) -> str:
    return json.dumps(report.to_dict(), indent=2, sort_keys=False, allow_nan=True) + "\n"


CSV_COLUMNS = ("epsilon", "delta", "conn_err", "curv_form_err", "gamma000", "target_gap")


def write_sweep_csv(sweep: approx.SweepResult, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        w.writeheader()
        for row in sweep.rows():
            w.writerow({k: repr(v) for k, v in row.items()})


def emit(report: Report, fmt: str, out_dir: str | None, stream=None) -> None:
    """Write the report (and sweep CSVs) to ``out_dir``, or the report to ``stream``."""
    text = format_json(report) if fmt == "json" else format_text(report)
    if out_dir is None:
        (stream or sys.stdout).write(text)
        return
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / ("report.json" if fmt == "json" else "report.txt")).write_text(text)
    for name, sweep in report.sweeps.items():
        write_sweep_csv(sweep, out / f"sweep_{name}.csv")
    if stream is not None:
        stream.write(format_text(report) if fmt == "text" else text)


def anchor_manifest() -> str:
    return "".join(f"{k}\t{v}\n" for k, v in sorted(ANCHORS.items()))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="harnack-lab",
        description="Verify Ricci-flow Harnack identities on exact solutions.",
    )
    ap.add_argument("--config", help="TOML run configuration")
    ap.add_argument(
        "--suite",
        action="append",
        choices=SUITES,
        help="suite to run (repeatable; overrides the config list)",
    )
    ap.add_argument("--seed", type=int, help="sampling seed (unsigned 64-bit)")
    ap.add_argument("--out", help="output directory for report and sweep CSVs")
    ap.add_argument("--format", choices=("json", "text"), help="report format")
    ap.add_argument(
        "--list-anchors", action="store_true", help="print the check id / anchor manifest"
    )
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    if args.list_anchors:
        sys.stdout.write(anchor_manifest())
        return 0
    try:
        cfg = RunConfig.from_toml(args.config) if args.config else RunConfig()
        over = {}
        if args.suite:
            over["suites"] = tuple(dict.fromkeys(args.suite))
        if args.seed is not None:
            over["seed"] = args.seed
        if args.out is not None:
            over["out_dir"] = args.out
        if args.format is not None:
            over["format"] = args.format
        if over:
            cfg = replace(cfg, **over)
        report = run_suites(cfg)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    try:
        emit(report, cfg.format, cfg.out_dir, sys.stdout if cfg.out_dir is None else None)
    except OSError as exc:
        print(f"cannot write output: {exc}", file=sys.stderr)
        return 2
    if cfg.out_dir is not None:
        sys.stdout.write(format_text(report))
    elif cfg.format == "json" and not report.passed:
        for suite, ch in report.failing():
            print(f"FAIL {suite}/{ch['id']}: {ch['anchor']}", file=sys.stderr)
    return 0 if report.passed else 1


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":  # pragma: no cover
    main_entry()
