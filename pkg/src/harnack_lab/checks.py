"""Residual records shared by every verification routine."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .jets import Jet

DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class Residual:
    """Maximum absolute residual of an identity and the size of its terms.

    A check passes when ``value <= tol * max(1, scale)``.
    """

    value: float
    scale: float = 0.0

    @property
    def bound_scale(self) -> float:
        return max(1.0, self.scale)

    def passes(self, tol: float = DEFAULT_TOL) -> bool:
        return bool(self.value <= tol * self.bound_scale)

    def merge(self, other: "Residual") -> "Residual":
        return Residual(max(self.value, other.value), max(self.scale, other.scale))


def _arr(x) -> np.ndarray:
    if isinstance(x, Jet):
        return np.asarray(x.c[..., 0])
    return np.asarray(x, dtype=float)


def compare(lhs, rhs, *terms) -> Residual:
    """Residual of ``lhs == rhs``; ``terms`` are extra summands that feed the scale."""
    a, b = _arr(lhs), _arr(rhs)
    value = float(np.max(np.abs(a - b), initial=0.0))
    scale = max(
        float(np.max(np.abs(x), initial=0.0)) for x in (a, b, *map(_arr, terms))
    )
    return Residual(value, scale)


def vanishes(x, *terms) -> Residual:
    return compare(x, np.zeros_like(_arr(x)), *terms)


def merge_records(records) -> dict[str, Residual]:
    """Componentwise worst case over a sequence of residual dicts."""
    out: dict[str, Residual] = {}
    for rec in records:
        for k, r in rec.items():
            out[k] = out[k].merge(r) if k in out else r
    return out
