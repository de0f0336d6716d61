"""Truncated multivariate Taylor series (jets).

A :class:`Jet` stores the Taylor coefficients of a scalar (or of every
component of a tensor, via leading array axes) about a fixed base point,
truncated at total degree ``order``.  Coefficients live in a dense array
whose last axis runs over multi-indices in graded order: all degree-0
entries, then degree 1, and so on.  Because the ordering is graded, the
truncation of a jet to a lower order is a prefix slice of that axis.

Differentiating a jet with respect to one variable drops its order by one,
which is how every curvature quantity downstream gets its derivatives.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "ConfigurationError",
    "DerivativeDomainError",
    "Jet",
    "OrderExceededError",
    "extract_partial",
    "jet_einsum",
    "jet_inv",
    "jet_map",
    "jet_seed",
    "num_coeffs",
    "stack",
]


class ConfigurationError(ValueError):
    """Invalid parameters passed to a constructor or operation."""


class OrderExceededError(ValueError):
    """A derivative was requested beyond the truncation order of a jet."""


class DerivativeDomainError(ValueError):
    """An elementary function was composed outside its domain."""

    def __init__(self, fn: str, constant_term):
        self.fn = fn
        self.constant_term = constant_term
        super().__init__(f"{fn} undefined at constant term {constant_term!r}")


def num_coeffs(num_vars: int, order: int) -> int:
    return math.comb(num_vars + order, order)


@dataclass(frozen=True)
class _Tables:
    multi_indices: tuple[tuple[int, ...], ...]
    index: Mapping[tuple[int, ...], int]
    # product: flattened (i, j) pairs sorted by the index k of m_i + m_j
    pair_i: np.ndarray
    pair_j: np.ndarray
    pair_starts: np.ndarray
    # diff[v] = (source indices, factors) mapping an order-K jet to order K-1
    diff: tuple[tuple[np.ndarray, np.ndarray], ...]
    factorials: np.ndarray


def _graded(num_vars: int, order: int) -> list[tuple[int, ...]]:
    out = []
    for deg in range(order + 1):
        block = [
            m
            for m in itertools.product(range(deg + 1), repeat=num_vars)
            if sum(m) == deg
        ]
        block.sort(reverse=True)
        out.extend(block)
    return out


@lru_cache(maxsize=None)
def _tables(num_vars: int, order: int) -> _Tables:
    mis = _graded(num_vars, order)
    index = {m: k for k, m in enumerate(mis)}
    pi, pj, pk = [], [], []
    for i, a in enumerate(mis):
        da = sum(a)
        for j, b in enumerate(mis):
            if da + sum(b) > order:
                continue
            pi.append(i)
            pj.append(j)
            pk.append(index[tuple(x + y for x, y in zip(a, b))])
    perm = np.argsort(np.asarray(pk), kind="stable")
    pk_sorted = np.asarray(pk)[perm]
    starts = np.searchsorted(pk_sorted, np.arange(len(mis)))
    diff = []
    if order >= 1:
        lower = mis[: num_coeffs(num_vars, order - 1)]
        for v in range(num_vars):
            src, fac = [], []
            for m in lower:
                up = list(m)
                up[v] += 1
                src.append(index[tuple(up)])
                fac.append(up[v])
            diff.append((np.asarray(src), np.asarray(fac, dtype=float)))
    facts = np.array(
        [math.prod(math.factorial(e) for e in m) for m in mis], dtype=float
    )
    return _Tables(
        multi_indices=tuple(mis),
        index=index,
        pair_i=np.asarray(pi)[perm],
        pair_j=np.asarray(pj)[perm],
        pair_starts=starts,
        diff=tuple(diff),
        factorials=facts,
    )


class Jet:
    """Array of truncated Taylor expansions sharing one base point.

    Parameters
    ----------
    coeffs : ndarray
        Shape ``(*shape, num_coeffs(num_vars, order))``.
    num_vars : int
        Number of expansion variables.
    order : int
        Maximum total degree kept.
    """

    __slots__ = ("c", "num_vars", "order")
    __array_priority__ = 1000

    def __init__(self, coeffs, num_vars: int, order: int):
        c = np.asarray(coeffs, dtype=float)
        if c.shape[-1:] != (num_coeffs(num_vars, order),):
            raise ConfigurationError(
                f"coefficient axis has length {c.shape[-1:]}, expected "
                f"{num_coeffs(num_vars, order)} for {num_vars} vars, order {order}"
            )
        self.c = c
        self.num_vars = num_vars
        self.order = order

    # construction -------------------------------------------------------

    @classmethod
    def constant(cls, value, num_vars: int, order: int) -> "Jet":
        value = np.asarray(value, dtype=float)
        c = np.zeros(value.shape + (num_coeffs(num_vars, order),))
        c[..., 0] = value
        return cls(c, num_vars, order)

    @classmethod
    def zeros(cls, shape, num_vars: int, order: int) -> "Jet":
        shape = tuple(np.atleast_1d(shape)) if shape != () else ()
        return cls(np.zeros(shape + (num_coeffs(num_vars, order),)), num_vars, order)

    @classmethod
    def from_dict(
        cls, coeffs: Mapping[tuple[int, ...], float], num_vars: int, order: int
    ) -> "Jet":
        tab = _tables(num_vars, order)
        c = np.zeros(len(tab.multi_indices))
        for mi, v in coeffs.items():
            mi = tuple(mi) if len(mi) else (0,) * num_vars
            if sum(mi) > order:
                raise OrderExceededError(f"multi-index {mi} exceeds order {order}")
            c[tab.index[mi]] = v
        return cls(c, num_vars, order)

    def as_dict(self) -> dict[tuple[int, ...], float]:
        if self.shape:
            raise ValueError("as_dict is only defined for scalar jets")
        tab = _tables(self.num_vars, self.order)
        return {m: float(v) for m, v in zip(tab.multi_indices, self.c) if v != 0.0}

    # array-like surface ---------------------------------------------------

    @property
    def shape(self) -> tuple[int, ...]:
        return self.c.shape[:-1]

    @property
    def ndim(self) -> int:
        return self.c.ndim - 1

    @property
    def value(self) -> np.ndarray:
        """Constant terms, i.e. the function values at the base point."""
        v = self.c[..., 0]
        return v if v.ndim else float(v)

    def __getitem__(self, key) -> "Jet":
        if not isinstance(key, tuple):
            key = (key,)
        return Jet(self.c[key + (Ellipsis, slice(None))], self.num_vars, self.order)

    def __len__(self) -> int:
        return self.shape[0]

    def __iter__(self):
        for k in range(len(self)):
            yield self[k]

    def transpose(self, *axes) -> "Jet":
        if not axes:
            axes = tuple(reversed(range(self.ndim)))
        elif len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return Jet(self.c.transpose(*axes, self.ndim), self.num_vars, self.order)

    @property
    def T(self) -> "Jet":
        return self.transpose()

    def reshape(self, *shape) -> "Jet":
        if len(shape) == 1 and isinstance(shape[0], tuple):
            shape = shape[0]
        return Jet(self.c.reshape(*shape, self.c.shape[-1]), self.num_vars, self.order)

    def sum(self, axis=None) -> "Jet":
        if axis is None:
            axis = tuple(range(self.ndim))
        elif isinstance(axis, int):
            axis = (axis,)
        axis = tuple(a % self.ndim for a in axis)
        return Jet(self.c.sum(axis=axis), self.num_vars, self.order)

    def copy(self) -> "Jet":
        return Jet(self.c.copy(), self.num_vars, self.order)

    def __repr__(self) -> str:
        return f"Jet(shape={self.shape}, num_vars={self.num_vars}, order={self.order})"

    # truncation / differentiation -----------------------------------------

    def truncate(self, order: int) -> "Jet":
        if order > self.order:
            raise OrderExceededError(
                f"cannot raise jet order from {self.order} to {order}"
            )
        if order == self.order:
            return self
        n = num_coeffs(self.num_vars, order)
        return Jet(self.c[..., :n], self.num_vars, order)

    def diff(self, var: int) -> "Jet":
        """Partial derivative with respect to variable ``var``."""
        if not 0 <= var < self.num_vars:
            raise ConfigurationError(f"variable index {var} out of range")
        if self.order < 1:
            raise OrderExceededError("cannot differentiate an order-0 jet")
        src, fac = _tables(self.num_vars, self.order).diff[var]
        return Jet(self.c[..., src] * fac, self.num_vars, self.order - 1)

    def grad(self) -> "Jet":
        """All first partials stacked on a new leading axis."""
        return stack([self.diff(v) for v in range(self.num_vars)])

    # arithmetic -----------------------------------------------------------

    def _coerce(self, other) -> tuple["Jet", "Jet"]:
        if isinstance(other, Jet):
            if other.num_vars != self.num_vars:
                raise ConfigurationError("jets over different variable counts")
            k = min(self.order, other.order)
            return self.truncate(k), other.truncate(k)
        return self, Jet.constant(other, self.num_vars, self.order)

    def __add__(self, other) -> "Jet":
        a, b = self._coerce(other)
        return Jet(a.c + b.c, a.num_vars, a.order)

    __radd__ = __add__

    def __sub__(self, other) -> "Jet":
        a, b = self._coerce(other)
        return Jet(a.c - b.c, a.num_vars, a.order)

    def __rsub__(self, other) -> "Jet":
        a, b = self._coerce(other)
        return Jet(b.c - a.c, a.num_vars, a.order)

    def __neg__(self) -> "Jet":
        return Jet(-self.c, self.num_vars, self.order)

    def __mul__(self, other) -> "Jet":
        if isinstance(other, Jet):
            a, b = self._coerce(other)
            return _mul(a, b)
        other = np.asarray(other, dtype=float)
        return Jet(self.c * other[..., None], self.num_vars, self.order)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Jet":
        if isinstance(other, Jet):
            return self * jet_map("recip", other)
        other = np.asarray(other, dtype=float)
        return Jet(self.c / other[..., None], self.num_vars, self.order)

    def __rtruediv__(self, other) -> "Jet":
        return jet_map("recip", self) * other

    def __pow__(self, p) -> "Jet":
        if isinstance(p, int) and p >= 0:
            out = Jet.constant(np.ones(self.shape), self.num_vars, self.order)
            base = self
            while p:
                if p & 1:
                    out = out * base
                p >>= 1
                if p:
                    base = base * base
            return out
        return jet_map(("pow", float(p)), self)


def _mul(a: Jet, b: Jet) -> Jet:
    tab = _tables(a.num_vars, a.order)
    prod = a.c[..., tab.pair_i] * b.c[..., tab.pair_j]
    return Jet(np.add.reduceat(prod, tab.pair_starts, axis=-1), a.num_vars, a.order)


def stack(jets: Sequence[Jet], axis: int = 0) -> Jet:
    """Stack jets along a new leading-shape axis (truncating to the lowest order)."""
    jets = list(jets)
    k = min(j.order for j in jets)
    nv = jets[0].num_vars
    if any(j.num_vars != nv for j in jets):
        raise ConfigurationError("jets over different variable counts")
    ndim = jets[0].ndim
    if axis < 0:
        axis += ndim + 1
    return Jet(np.stack([j.truncate(k).c for j in jets], axis=axis), nv, k)


def jet_einsum(subscripts: str, a: Jet, b) -> Jet:
    """Two-operand einsum over the leading (tensor) axes of jets.

    ``b`` may be a plain array, in which case it is treated as constant.
    """
    if not isinstance(b, Jet):
        b = np.asarray(b, dtype=float)
        lhs, out = subscripts.split("->")
        sa, sb = lhs.split(",")
        return Jet(
            np.einsum(f"{sa}z,{sb}->{out}z", a.c, b), a.num_vars, a.order
        )
    a, b = a._coerce(b)
    lhs, out = subscripts.split("->")
    sa, sb = lhs.split(",")
    tab = _tables(a.num_vars, a.order)
    pa = a.c[..., tab.pair_i]
    pb = b.c[..., tab.pair_j]
    prod = np.einsum(f"{sa}z,{sb}z->{out}z", pa, pb, optimize=True)
    return Jet(np.add.reduceat(prod, tab.pair_starts, axis=-1), a.num_vars, a.order)


def jet_seed(var_index: int, value: float, num_vars: int, order: int) -> Jet:
    """Jet of the coordinate function ``x[var_index]`` about ``value``."""
    if not 0 <= var_index < num_vars:
        raise ConfigurationError(
            f"var_index {var_index} out of range for {num_vars} variables"
        )
    if order < 0:
        raise ConfigurationError("order must be non-negative")
    c = np.zeros(num_coeffs(num_vars, order))
    c[0] = value
    if order >= 1:
        c[1 + var_index] = 1.0
    return Jet(c, num_vars, order)


def _series_coeffs(fn, a0: np.ndarray, order: int) -> list[np.ndarray]:
    """Taylor coefficients f^(k)(a0)/k! for k = 0..order."""
    if isinstance(fn, tuple):
        name, p = fn
    else:
        name, p = fn, None
    if name == "exp":
        e = np.exp(a0)
        return [e / math.factorial(k) for k in range(order + 1)]
    if name == "log":
        if np.any(a0 <= 0):
            raise DerivativeDomainError("log", a0)
        out = [np.log(a0)]
        out += [(-1.0) ** (k + 1) / (k * a0**k) for k in range(1, order + 1)]
        return out
    if name == "sqrt":
        name, p = "pow", 0.5
        if np.any(a0 <= 0):
            raise DerivativeDomainError("sqrt", a0)
    if name == "recip":
        if np.any(a0 == 0):
            raise DerivativeDomainError("recip", a0)
        return [(-1.0) ** k / a0 ** (k + 1) for k in range(order + 1)]
    if name == "pow":
        if p is None:
            raise ConfigurationError("pow requires an exponent")
        if not float(p).is_integer() and np.any(a0 <= 0):
            raise DerivativeDomainError(f"pow({p})", a0)
        if np.any(a0 == 0) and p < order:
            raise DerivativeDomainError(f"pow({p})", a0)
        out = []
        binom = 1.0
        for k in range(order + 1):
            out.append(binom * a0 ** (p - k))
            binom *= (p - k) / (k + 1)
        return out
    raise ConfigurationError(f"unknown elementary function {fn!r}")


def jet_map(fn, a: Jet) -> Jet:
    """Compose an elementary function with a jet.

    ``fn`` is one of ``"exp"``, ``"log"``, ``"sqrt"``, ``"recip"`` or
    ``("pow", p)``.  The composition is the univariate Taylor series of
    ``fn`` about the constant term, evaluated on the non-constant part.
    """
    a0 = a.c[..., 0]
    coeffs = _series_coeffs(fn, a0, a.order)
    h = Jet(a.c.copy(), a.num_vars, a.order)
    h.c[..., 0] = 0.0
    # Horner in h: c0 + h (c1 + h (c2 + ...))
    acc = Jet.constant(coeffs[a.order], a.num_vars, a.order)
    for k in range(a.order - 1, -1, -1):
        acc = acc * h
        acc.c[..., 0] += coeffs[k]
    return acc


def exp(a: Jet) -> Jet:
    return jet_map("exp", a)


def log(a: Jet) -> Jet:
    return jet_map("log", a)


def sqrt(a: Jet) -> Jet:
    return jet_map("sqrt", a)


def extract_partial(a: Jet, idx: Iterable[int]) -> np.ndarray | float:
    """Value of the partial derivative with multi-index ``idx`` at the base point."""
    idx = tuple(int(i) for i in idx)
    if len(idx) != a.num_vars:
        raise ConfigurationError(
            f"multi-index {idx} has wrong length for {a.num_vars} variables"
        )
    if sum(idx) > a.order:
        raise OrderExceededError(
            f"partial of total order {sum(idx)} exceeds jet order {a.order}"
        )
    tab = _tables(a.num_vars, a.order)
    k = tab.index[idx]
    v = a.c[..., k] * tab.factorials[k]
    return v if np.ndim(v) else float(v)


def jet_inv(m: Jet) -> Jet:
    """Inverse of a square matrix of jets (last two tensor axes).

    Uses the terminating Neumann series ``sum_k (-A0^{-1} H)^k A0^{-1}``
    where ``H`` is the non-constant part; powers beyond ``order`` vanish.
    """
    a0 = m.c[..., 0]
    try:
        a0_inv = np.linalg.inv(a0)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"singular metric at base point: {exc}") from None
    h = Jet(m.c.copy(), m.num_vars, m.order)
    h.c[..., 0] = 0.0
    x = -jet_einsum("...ij,...jk->...ik", Jet.constant(a0_inv, m.num_vars, m.order), h)
    inv0 = Jet.constant(a0_inv, m.num_vars, m.order)
    acc = inv0
    for _ in range(m.order):
        acc = inv0 + jet_einsum("...ij,...jk->...ik", x, acc)
    return acc
