"""Chart-based tensor calculus on jets.

Tensors are :class:`~harnack_lab.jets.Jet` arrays whose leading axes are
tensor indices.  Index conventions:

* ``Gamma[k, i, j]`` is the connection coefficient with upper index ``k``.
* ``Riem[i, j, k, l]`` is the curvature with upper index ``l``::

      R_ijk^l = d_i G^l_jk - d_j G^l_ik + G^m_jk G^l_im - G^m_ik G^l_jm

* Ricci is the trace over the first lower and the upper slot,
  ``Ric[j, k] = Riem[p, j, k, p]``.
* A covariant derivative puts the new (differentiation) index first.

An index range is described by the tuple of jet variables that the chart
partial derivatives map to.  The spatial range of an ``n``-manifold uses
variables ``0..n-1``; the space-time range puts time (jet variable ``n``)
in slot 0, followed by the spatial variables.

Raising and lowering are never implicit: every contraction in this module
pairs an upper index with a lower one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .jets import Jet, OrderExceededError, jet_einsum, jet_inv, stack

__all__ = [
    "Connection",
    "MetricSample",
    "ShapeError",
    "christoffel",
    "covariant_derivative",
    "curvature_from_connection",
    "hodge_laplacian",
    "laplacian",
    "lower_last",
    "partials",
    "ricci_and_scalar",
    "spacetime_vars",
    "spatial_vars",
]

_LETTERS = "bcdfghmnopqrsuvwxy"


class ShapeError(ValueError):
    """Tensor and connection disagree on index range or arity."""


def spatial_vars(n: int) -> tuple[int, ...]:
    return tuple(range(n))


def spacetime_vars(n: int) -> tuple[int, ...]:
    return (n,) + tuple(range(n))


def partials(t: Jet, dvars: tuple[int, ...]) -> Jet:
    """Chart partial derivatives, new index first."""
    return stack([t.diff(v) for v in dvars])


@dataclass(frozen=True)
class MetricSample:
    """Metric and inverse metric jets at a base point."""

    g: Jet
    g_inv: Jet
    dvars: tuple[int, ...]

    @classmethod
    def from_metric(cls, g: Jet, dvars: tuple[int, ...] | None = None) -> "MetricSample":
        n = g.shape[0]
        if g.shape != (n, n):
            raise ShapeError(f"metric must be square, got {g.shape}")
        g0 = np.asarray(g.value)
        if not np.allclose(g0, g0.T, rtol=0, atol=1e-12 * max(1.0, np.abs(g0).max())):
            raise ShapeError("metric is not symmetric")
        try:
            np.linalg.cholesky(g0)
        except np.linalg.LinAlgError:
            raise np.linalg.LinAlgError("metric is not positive-definite") from None
        return cls(g, jet_inv(g), dvars if dvars is not None else spatial_vars(n))

    @property
    def dim(self) -> int:
        return self.g.shape[0]


@dataclass(frozen=True)
class Connection:
    """Connection coefficients ``gamma[k, i, j]`` over an index range."""

    gamma: Jet
    dvars: tuple[int, ...]

    @property
    def dim(self) -> int:
        return self.gamma.shape[0]


def christoffel(m: MetricSample) -> Connection:
    """Levi-Civita connection ``G^k_ij = 1/2 g^kl (d_i g_jl + d_j g_il - d_l g_ij)``."""
    dg = partials(m.g, m.dvars)  # dg[a, b, c] = d_a g_bc
    lowered = 0.5 * (dg.transpose(0, 1, 2) + dg.transpose(1, 0, 2) - dg.transpose(1, 2, 0))
    # lowered[i, j, l] = 1/2 (d_i g_jl + d_j g_il - d_l g_ij)
    gamma = jet_einsum("kl,ijl->kij", m.g_inv, lowered)
    return Connection(gamma, m.dvars)


def curvature_from_connection(conn: Connection) -> Jet:
    """Curvature ``Riem[i, j, k, l]`` (upper ``l``) of a connection."""
    gam = conn.gamma
    if gam.order < 1:
        raise OrderExceededError("curvature needs connection jets of order >= 1")
    dgam = partials(gam, conn.dvars)  # dgam[i, l, j, k] = d_i G^l_jk
    first = dgam.transpose(0, 2, 3, 1)  # [i, j, k, l]
    quad = jet_einsum("mjk,lim->ijkl", gam, gam)
    t = first + quad
    return t - t.transpose(1, 0, 2, 3)


def ricci_and_scalar(riem: Jet, m: MetricSample | Jet) -> tuple[Jet, Jet]:
    """Ricci tensor and scalar curvature.

    ``m`` may be a :class:`MetricSample` or an (upper-upper) inverse metric jet;
    the latter is how degenerate space-time metrics are supplied.
    """
    if riem.ndim != 4:
        raise ShapeError(f"expected a 4-index curvature, got shape {riem.shape}")
    ric = riem.transpose(1, 2, 0, 3)
    n = ric.shape[0]
    ric = Jet(np.einsum("jkpp...->jk...", ric.c), ric.num_vars, ric.order)
    g_inv = m.g_inv if isinstance(m, MetricSample) else m
    if g_inv.shape != (n, n):
        raise ShapeError("metric and curvature index ranges differ")
    scal = jet_einsum("jk,jk->", g_inv, ric)
    return ric, scal


def lower_last(riem: Jet, g: Jet) -> Jet:
    """``R_ijkl = g_lm R_ijk^m``."""
    return jet_einsum("ijkm,lm->ijkl", riem, g)


def covariant_derivative(t: Jet, variance: str, conn: Connection) -> Jet:
    """Covariant derivative of a tensor field, new index first.

    ``variance`` has one character per tensor index: ``"u"`` (upper) or
    ``"d"`` (lower).  A scalar has ``variance == ""``.
    """
    if len(variance) != t.ndim or set(variance) - {"u", "d"}:
        raise ShapeError(f"variance {variance!r} does not match tensor of shape {t.shape}")
    n = conn.dim
    if any(s != n for s in t.shape):
        raise ShapeError(
            f"tensor index range {t.shape} does not match connection range {n}"
        )
    out = partials(t, conn.dvars)
    letters = _LETTERS[: t.ndim]
    res = "a" + letters
    for p, kind in enumerate(variance):
        src = letters[:p] + "e" + letters[p + 1 :]
        x = letters[p]
        if kind == "d":
            out = out - jet_einsum(f"ea{x},{src}->{res}", conn.gamma, t)
        else:
            out = out + jet_einsum(f"{x}ae,{src}->{res}", conn.gamma, t)
    return out


def laplacian(t: Jet, variance: str, conn: Connection, g_inv: Jet) -> Jet:
    """Rough Laplacian ``g^ab nabla_a nabla_b T``."""
    d1 = covariant_derivative(t, variance, conn)
    d2 = covariant_derivative(d1, "d" + variance, conn)
    rest = _LETTERS[: t.ndim]
    return jet_einsum(f"AB,AB{rest}->{rest}", g_inv, d2)


def hodge_laplacian(w: Jet, conn: Connection, g_inv: Jet) -> Jet:
    """Hodge Laplacian ``-(d delta + delta d) W`` of a 1-form.

    Written out, ``nabla_j nabla^i W_i + nabla^i nabla_i W_j - nabla^i nabla_j W_i``.
    """
    if w.ndim != 1:
        raise ShapeError("hodge_laplacian expects a 1-form")
    d1 = covariant_derivative(w, "d", conn)  # [i, j] = nabla_i W_j
    d2 = covariant_derivative(d1, "dd", conn)  # [a, i, j] = nabla_a nabla_i W_j
    grad_div = jet_einsum("ai,jai->j", g_inv, d2)  # nabla_j (g^ai nabla_a W_i)
    rough = jet_einsum("ai,aij->j", g_inv, d2)
    curl = jet_einsum("ai,ija->j", g_inv, d2)  # g^ai nabla_i nabla_j W_a
    return grad_div + rough - curl


def check_order(t: Jet, needed: int, what: str) -> None:
    if t.order < needed:
        raise OrderExceededError(f"{what} needs jet order >= {needed}, have {t.order}")


def as_array(x) -> np.ndarray:
    """Constant terms of a jet (or pass-through for arrays)."""
    if isinstance(x, Jet):
        return np.asarray(x.c[..., 0])
    return np.asarray(x, dtype=float)
