"""Truncated multivariate Taylor series (jets) with array-valued coefficients.

A :class:`Jet` stores the Taylor coefficients of one or more functions of
``nvars`` variables around a base point, up to total degree ``order``.  The
coefficient array has shape ``shape + (M,)`` where ``M`` is the number of
monomials of total degree ``<= space.order``; the last axis runs over the
graded monomial basis of the :class:`JetSpace`.  Leading axes behave like a
numpy array of scalar jets, so a matrix of symbols is a single ``Jet`` of
shape ``(n + 1, n + 1)``.

Every jet carries its own trustworthy order.  Products keep the minimum of
their inputs, each partial derivative drops one order, and coefficients above
the trustworthy order are always stored as zero.
"""

from __future__ import annotations

import functools
import itertools
import math
from numbers import Number
from typing import Iterable, Sequence

import numpy as np


class JetError(Exception):
    """Base class for jet algebra errors."""


class IncompatibleJetsError(JetError):
    """Raised when jets from different spaces are combined."""


class SingularJetError(JetError):
    """Raised for reciprocals or roots of jets with a bad constant term."""


class OrderExhaustedError(JetError):
    """Raised when a computation needs more Taylor orders than available."""

    def __init__(self, message: str, needed: int | None = None):
        super().__init__(message)
        self.needed = needed


@functools.lru_cache(maxsize=None)
def _tables(nvars: int, order: int):
    exps = []
    for deg in range(order + 1):
        # compositions of deg into nvars parts, lexicographically descending
        for bars in itertools.combinations(range(deg + nvars - 1), nvars - 1):
            parts, prev = [], -1
            for b in bars:
                parts.append(b - prev - 1)
                prev = b
            parts.append(deg + nvars - 1 - prev - 1)
            exps.append(tuple(parts))
    exps_arr = np.array(exps, dtype=np.int64).reshape(len(exps), nvars)
    index = {e: i for i, e in enumerate(exps)}
    degree = exps_arr.sum(axis=1)

    ia, ib, ic = [], [], []
    for i, ei in enumerate(exps):
        di = degree[i]
        for j, ej in enumerate(exps):
            if di + degree[j] > order:
                # monomials are graded, so later j only get larger
                break
            ia.append(i)
            ib.append(j)
            ic.append(index[tuple(a + b for a, b in zip(ei, ej))])
    ia, ib, ic = (np.asarray(v, dtype=np.int64) for v in (ia, ib, ic))
    perm = np.argsort(ic, kind="stable")
    ia, ib, ic = ia[perm], ib[perm], ic[perm]
    starts = np.flatnonzero(np.r_[True, ic[1:] != ic[:-1]])
    # number of monomials / product pairs with output degree <= k
    nmono = np.searchsorted(degree, np.arange(order + 1), side="right")
    npairs = np.searchsorted(ic, nmono, side="left")

    deriv = []
    for v in range(nvars):
        src = np.flatnonzero(exps_arr[:, v] > 0)
        dst = np.array(
            [index[tuple(e - (k == v) for k, e in enumerate(exps[s]))] for s in src],
            dtype=np.int64,
        )
        deriv.append((src, dst, exps_arr[src, v].astype(float)))
    for arr in (exps_arr, degree, ia, ib, starts, nmono, npairs):
        arr.setflags(write=False)
    return exps_arr, index, degree, ia, ib, starts, nmono, npairs, tuple(deriv)


class JetSpace:
    """The algebra of jets in ``nvars`` variables through total degree ``order``.

    Parameters
    ----------
    nvars : int
        Number of variables.
    order : int
        Maximal total degree ``K``.
    base_point : array_like, optional
        Expansion point, zeros by default.  Only used by :meth:`variable`
        and :meth:`Jet.evaluate`; jets in spaces that differ only in the base
        point cannot be combined.
    names : sequence of str, optional
        Variable names, for display only.
    """

    def __init__(self, nvars: int, order: int, base_point=None, names=None):
        if nvars < 1:
            raise ValueError("a jet space needs at least one variable")
        if order < 0:
            raise ValueError("truncation order must be non-negative")
        self.nvars = int(nvars)
        self.order = int(order)
        if base_point is None:
            base_point = np.zeros(self.nvars)
        self.base_point = np.array(base_point, dtype=float).reshape(self.nvars)
        self.base_point.setflags(write=False)
        self.names = tuple(names) if names is not None else tuple(f"v{i}" for i in range(nvars))
        (self.exponents, self._index, self.degree, self._ia, self._ib,
         self._starts, self._nmono, self._npairs, self._deriv) = _tables(self.nvars, self.order)
        self.size = len(self.exponents)

    def __repr__(self):
        return f"JetSpace(nvars={self.nvars}, order={self.order}, base_point={self.base_point.tolist()})"

    def __eq__(self, other):
        return (
            isinstance(other, JetSpace)
            and self.nvars == other.nvars
            and self.order == other.order
            and np.array_equal(self.base_point, other.base_point)
        )

    def __hash__(self):
        return hash((self.nvars, self.order, self.base_point.tobytes()))

    def index(self, multi_index: Sequence[int]) -> int | None:
        """Position of a multi-index in the coefficient axis, ``None`` if absent."""
        return self._index.get(tuple(int(k) for k in multi_index))

    def nmono(self, order: int) -> int:
        """Number of monomials of total degree ``<= order``."""
        if order < 0:
            return 0
        return int(self._nmono[min(order, self.order)])

    # constructors -----------------------------------------------------------

    def zeros(self, shape=()) -> Jet:
        return Jet(self, np.zeros(tuple(shape) + (self.size,), dtype=complex))

    def constant(self, value) -> Jet:
        value = np.asarray(value, dtype=complex)
        c = np.zeros(value.shape + (self.size,), dtype=complex)
        c[..., 0] = value
        return Jet(self, c)

    def identity(self, n: int) -> Jet:
        return self.constant(np.eye(n))

    def variable(self, i: int) -> Jet:
        """The coordinate function ``v_i`` (base value plus displacement)."""
        c = np.zeros(self.size, dtype=complex)
        c[0] = self.base_point[i]
        e = [0] * self.nvars
        e[i] = 1
        if self.order >= 1:
            c[self._index[tuple(e)]] = 1.0
        return Jet(self, c)

    def monomial(self, multi_index: Sequence[int], coeff=1.0) -> Jet:
        """The displacement monomial ``coeff * prod (v_k - base_k)**e_k``."""
        c = np.zeros(self.size, dtype=complex)
        k = self.index(multi_index)
        if k is not None:
            c[k] = coeff
        return Jet(self, c)

    def from_dict(self, coeffs: dict, order: int | None = None) -> Jet:
        c = np.zeros(self.size, dtype=complex)
        for mi, v in coeffs.items():
            k = self.index(mi)
            if k is None:
                raise KeyError(f"multi-index {mi} outside {self}")
            c[k] = v
        return Jet(self, c, order)

    def from_dense(self, dense: np.ndarray, order: int | None = None) -> Jet:
        """Inverse of :meth:`Jet.to_dense` (entries of degree > order are ignored)."""
        dense = np.asarray(dense)
        nlead = dense.ndim - self.nvars
        c = np.zeros(dense.shape[:nlead] + (self.size,), dtype=complex)
        for k, e in enumerate(self.exponents):
            if all(ei < s for ei, s in zip(e, dense.shape[nlead:])):
                c[..., k] = dense[(Ellipsis,) + tuple(e)]
        return Jet(self, c, order)

    def random(self, rng: np.random.Generator, shape=(), scale=1.0, decay=0.5, real=True) -> Jet:
        """Random jet whose degree-``d`` coefficients have size ``scale * decay**d``."""
        shape = tuple(shape)
        c = rng.uniform(-1.0, 1.0, size=shape + (self.size,))
        if not real:
            c = c + 1j * rng.uniform(-1.0, 1.0, size=shape + (self.size,))
        c = c * scale * decay ** self.degree
        return Jet(self, c.astype(complex))


def _as_order(space: JetSpace, order) -> int:
    return space.order if order is None else min(int(order), space.order)


class Jet:
    """Array of truncated Taylor expansions.  See the module docstring."""

    __slots__ = ("space", "coeffs", "order")
    __array_ufunc__ = None

    def __init__(self, space: JetSpace, coeffs, order: int | None = None):
        coeffs = np.asarray(coeffs, dtype=complex)
        if coeffs.shape[-1:] != (space.size,):
            raise ValueError(
                f"coefficient axis has length {coeffs.shape[-1:]}, expected {space.size}"
            )
        order = _as_order(space, order)
        if order < 0:
            raise OrderExhaustedError("jet with negative trustworthy order", needed=0)
        if order < space.order:
            coeffs = coeffs.copy()
            coeffs[..., space.nmono(order):] = 0.0
        self.space = space
        self.coeffs = coeffs
        self.order = order

    # array behaviour --------------------------------------------------------

    @property
    def shape(self) -> tuple:
        return self.coeffs.shape[:-1]

    @property
    def ndim(self) -> int:
        return self.coeffs.ndim - 1

    def __len__(self):
        return self.shape[0]

    def __iter__(self):
        for k in range(len(self)):
            yield self[k]

    def __getitem__(self, idx) -> Jet:
        if not isinstance(idx, tuple):
            idx = (idx,)
        if any(i is Ellipsis for i in idx):
            idx = idx + (slice(None),)
        else:
            idx = idx + (Ellipsis, slice(None))
        return Jet(self.space, self.coeffs[idx], self.order)

    def __repr__(self):
        return f"Jet(shape={self.shape}, order={self.order}, space={self.space!r})"

    @property
    def T(self) -> Jet:
        return self.swapaxes(-1, -2)

    def swapaxes(self, a: int, b: int) -> Jet:
        a = a % self.ndim
        b = b % self.ndim
        return Jet(self.space, np.swapaxes(self.coeffs, a, b), self.order)

    def transpose(self, *axes) -> Jet:
        if not axes:
            axes = tuple(reversed(range(self.ndim)))
        elif len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return Jet(self.space, np.transpose(self.coeffs, tuple(axes) + (self.ndim,)), self.order)

    def reshape(self, *shape) -> Jet:
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return Jet(self.space, self.coeffs.reshape(shape + (self.space.size,)), self.order)

    def sum(self, axis=None) -> Jet:
        if axis is None:
            axis = tuple(range(self.ndim))
        elif isinstance(axis, int):
            axis = axis % self.ndim
        else:
            axis = tuple(a % self.ndim for a in axis)
        return Jet(self.space, self.coeffs.sum(axis=axis), self.order)

    def trace(self) -> Jet:
        return Jet(self.space, np.trace(self.coeffs, axis1=-3, axis2=-2), self.order)

    def diagonal(self) -> Jet:
        return Jet(self.space, np.moveaxis(np.diagonal(self.coeffs, axis1=-3, axis2=-2), -2, -1), self.order)

    def with_order(self, order: int) -> Jet:
        """Truncate to a lower trustworthy order (never raises it)."""
        return Jet(self.space, self.coeffs, min(order, self.order))

    def copy(self) -> Jet:
        return Jet(self.space, self.coeffs.copy(), self.order)

    # coefficient access -----------------------------------------------------

    @property
    def value(self) -> np.ndarray:
        """Value at the base point."""
        return self.coeffs[..., 0]

    def coefficient(self, multi_index: Sequence[int]):
        k = self.space.index(multi_index)
        if k is None or self.space.degree[k] > self.order:
            return np.zeros(self.shape, dtype=complex) if self.shape else 0j
        return self.coeffs[..., k]

    def to_dict(self, tol: float = 0.0) -> dict:
        """Map multi-index -> coefficient for a scalar jet (zero entries dropped)."""
        if self.shape:
            raise ValueError("to_dict needs a scalar jet")
        out = {}
        for k in range(self.space.nmono(self.order)):
            v = self.coeffs[k]
            if abs(v) > tol:
                out[tuple(int(e) for e in self.space.exponents[k])] = complex(v)
        return out

    def to_dense(self) -> np.ndarray:
        """Coefficients as a dense array indexed by exponent tuples."""
        K = self.space.order
        out = np.zeros(self.shape + (K + 1,) * self.space.nvars, dtype=complex)
        for k, e in enumerate(self.space.exponents):
            out[(Ellipsis,) + tuple(e)] = self.coeffs[..., k]
        return out

    def evaluate(self, point) -> np.ndarray:
        """Evaluate the truncated polynomial at an absolute point."""
        d = np.asarray(point, dtype=float) - self.space.base_point
        powers = np.prod(d[None, :] ** self.space.exponents, axis=1)
        return self.coeffs @ powers

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.coeffs), initial=0.0))

    def imag_max(self) -> float:
        return float(np.max(np.abs(self.coeffs.imag), initial=0.0))

    @property
    def real(self) -> Jet:
        return Jet(self.space, self.coeffs.real, self.order)

    @property
    def imag(self) -> Jet:
        return Jet(self.space, self.coeffs.imag, self.order)

    def conj(self) -> Jet:
        return Jet(self.space, self.coeffs.conj(), self.order)

    # arithmetic -------------------------------------------------------------

    def _check(self, other: Jet):
        if other.space is not self.space and other.space != self.space:
            raise IncompatibleJetsError(f"cannot combine jets from {self.space} and {other.space}")

    def __add__(self, other):
        if isinstance(other, Jet):
            self._check(other)
            order = min(self.order, other.order)
            return Jet(self.space, self.coeffs + other.coeffs, order)
        other = np.asarray(other)
        if other.dtype == object:
            return NotImplemented
        c = np.array(np.broadcast_to(self.coeffs, np.broadcast_shapes(self.coeffs.shape, other.shape + (1,))))
        c[..., 0] += other
        return Jet(self.space, c, self.order)

    __radd__ = __add__

    def __neg__(self):
        return Jet(self.space, -self.coeffs, self.order)

    def __pos__(self):
        return self

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            return _bilinear(self, other, np.multiply)
        if isinstance(other, Number):
            return Jet(self.space, self.coeffs * other, self.order)
        other = np.asarray(other)
        if other.dtype == object:
            return NotImplemented
        return Jet(self.space, self.coeffs * other[..., None], self.order)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * reciprocal(other)
        return self * (1.0 / np.asarray(other, dtype=complex))

    def __rtruediv__(self, other):
        return reciprocal(self) * other

    def __pow__(self, exponent):
        if isinstance(exponent, int) and exponent >= 0:
            result = self.space.constant(np.ones(self.shape)).with_order(self.order)
            base = self
            while exponent:
                if exponent & 1:
                    result = result * base
                exponent >>= 1
                if exponent:
                    base = base * base
            return result
        return power(self, exponent)

    def __matmul__(self, other):
        if isinstance(other, Jet):
            return _bilinear(self, other, _pair_matmul)
        other = np.asarray(other, dtype=complex)
        return Jet(self.space, np.einsum("...ijz,...jk->...ikz", self.coeffs, other), self.order)

    def __rmatmul__(self, other):
        other = np.asarray(other, dtype=complex)
        return Jet(self.space, np.einsum("...ij,...jkz->...ikz", other, self.coeffs), self.order)

    def partial(self, var: int) -> Jet:
        return partial(self, var)


def _pair_matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.moveaxis(np.matmul(np.moveaxis(a, -1, 0), np.moveaxis(b, -1, 0)), 0, -1)


def _bilinear(a: Jet, b: Jet, combine) -> Jet:
    """Truncated Cauchy product with an arbitrary bilinear map on the leading axes."""
    a._check(b)
    sp = a.space
    order = min(a.order, b.order)
    npairs = int(sp._npairs[order])
    ia = sp._ia[:npairs]
    ib = sp._ib[:npairs]
    prod = combine(a.coeffs[..., ia], b.coeffs[..., ib])
    m = sp.nmono(order)
    head = np.add.reduceat(prod, sp._starts[:m], axis=-1)
    out = np.zeros(head.shape[:-1] + (sp.size,), dtype=complex)
    out[..., :m] = head
    return Jet(sp, out, order)


# ---------------------------------------------------------------------------
# module-level operations


def add(a: Jet, b: Jet) -> Jet:
    """Coefficientwise sum."""
    if not isinstance(a, Jet) or not isinstance(b, Jet):
        raise TypeError("add expects two jets")
    return a + b


def mul(a: Jet, b: Jet) -> Jet:
    """Truncated product, exact through ``min(a.order, b.order)``."""
    if not isinstance(a, Jet) or not isinstance(b, Jet):
        raise TypeError("mul expects two jets")
    return a * b


def einsum(subscripts: str, a: Jet, b: Jet) -> Jet:
    """Bilinear ``np.einsum`` contraction of two jets, e.g. ``"ij,jk->ik"``."""
    ins, out = subscripts.replace(" ", "").split("->")
    sa, sb = ins.split(",")
    sub = f"{sa}z,{sb}z->{out}z"
    return _bilinear(a, b, lambda x, y: np.einsum(sub, x, y))


def _binomial_series(a: Jet, coefficients) -> Jet:
    """Evaluate ``sum_k coefficients[k] * t**k`` with ``t = a - a(0)`` by Horner."""
    sp = a.space
    t = Jet(sp, a.coeffs.copy(), a.order)
    t.coeffs[..., 0] = 0.0
    ks = list(coefficients)
    result = sp.constant(ks[-1] * np.ones(a.shape)).with_order(a.order)
    for ck in reversed(ks[:-1]):
        result = result * t + ck
    return result


def power(a: Jet, s: float) -> Jet:
    """``a**s`` for a real exponent via the binomial series around ``a(0)``.

    The constant term must be non-zero; for non-integer ``s`` it must have a
    positive real part and uses the principal branch.
    """
    a0 = a.value
    if np.any(a0 == 0):
        raise SingularJetError("power of a jet with zero constant term")
    if float(s) != int(s) and np.any(a0.real <= 0):
        raise SingularJetError("fractional power needs a positive constant term")
    s = float(s)
    K = a.order
    # coefficients of (a0 + t)**s = sum_k binom(s, k) a0**(s-k) t**k
    coeffs, b = [], 1.0
    for k in range(K + 1):
        coeffs.append(b * a0 ** (s - k))
        b = b * (s - k) / (k + 1)
    return _binomial_series(a, coeffs)


def reciprocal(a: Jet) -> Jet:
    """Multiplicative inverse; requires a non-zero constant term."""
    if np.any(a.value == 0):
        raise SingularJetError("reciprocal of a jet with zero constant term")
    return power(a, -1)


def sqrt(a: Jet) -> Jet:
    """Principal square root; requires a positive constant term."""
    a0 = a.value
    if np.any(a0.real <= 0) or np.any(np.abs(a0.imag) > 1e-12 * np.abs(a0.real)):
        raise SingularJetError("square root needs a positive real constant term")
    return power(a, 0.5)


def exp(a: Jet) -> Jet:
    """Exponential, used for building positive test jets."""
    a0 = a.value
    coeffs = [np.exp(a0) / math.factorial(k) for k in range(a.order + 1)]
    return _binomial_series(a, coeffs)


def partial(a: Jet, var: int) -> Jet:
    """Formal partial derivative in variable ``var``; the order drops by one."""
    if a.order < 1:
        raise OrderExhaustedError("partial derivative of an order-0 jet", needed=1)
    src, dst, fac = a.space._deriv[var]
    out = np.zeros_like(a.coeffs)
    out[..., dst] = a.coeffs[..., src] * fac
    return Jet(a.space, out, a.order - 1)


def partial_multi(a: Jet, multi_index: Sequence[int]) -> Jet:
    """Apply ``prod_k d_k**multi_index[k]``."""
    for var, count in enumerate(multi_index):
        for _ in range(count):
            a = partial(a, var)
    return a


def gradient(a: Jet, variables: Iterable[int] | None = None) -> Jet:
    """Stack of partials along a new trailing leading-axis (shape ``a.shape + (m,)``)."""
    if variables is None:
        variables = range(a.space.nvars)
    return stack([partial(a, v) for v in variables], axis=-1)


def stack(jets: Sequence[Jet], axis: int = 0) -> Jet:
    jets = list(jets)
    if not jets:
        raise ValueError("need at least one jet to stack")
    sp = jets[0].space
    for j in jets[1:]:
        jets[0]._check(j)
    order = min(j.order for j in jets)
    ndim = jets[0].ndim + 1
    axis = axis % ndim
    return Jet(sp, np.stack([j.coeffs for j in jets], axis=axis), order)


def block(rows: Sequence[Sequence[Jet]]) -> Jet:
    """Assemble a matrix jet from a nested list of scalar jets."""
    return stack([stack(list(r), axis=0) for r in rows], axis=0)


def inv(a: Jet) -> Jet:
    """Inverse of a square matrix jet whose base value is invertible."""
    a0 = a.value
    try:
        x0 = np.linalg.inv(a0)
    except np.linalg.LinAlgError as exc:
        raise SingularJetError("matrix jet is singular at the base point") from exc
    if not np.all(np.isfinite(x0)) or np.linalg.cond(a0) > 1e14:
        raise SingularJetError("matrix jet is singular at the base point")
    sp = a.space
    n = a0.shape[-1]
    nil = a - sp.constant(a0)
    # a^{-1} = sum_k (-x0 nil)^k x0, nil has no constant term
    step = x0 @ nil
    result = sp.constant(np.broadcast_to(np.eye(n), a.shape)).with_order(a.order)
    for _ in range(a.order):
        result = sp.constant(np.broadcast_to(np.eye(n), a.shape)) - step @ result
    return result @ x0


def det(a: Jet) -> Jet:
    """Determinant of a small square matrix jet by cofactor expansion."""
    n = a.shape[-1]
    if n == 1:
        return a[..., 0, 0]
    if n == 2:
        return a[..., 0, 0] * a[..., 1, 1] - a[..., 0, 1] * a[..., 1, 0]
    total = None
    for j in range(n):
        cols = [c for c in range(n) if c != j]
        minor = a[..., 1:, :][..., cols]
        term = a[..., 0, j] * det(minor)
        if j % 2:
            term = -term
        total = term if total is None else total + term
    return total


@functools.lru_cache(maxsize=None)
def _restrict_map(snv, sord, tnv, tord, var_map, order):
    sexp, _, sdeg = _tables(snv, sord)[:3]
    tindex = _tables(tnv, tord)[1]
    dropped = [v for v in range(snv) if v not in var_map]
    keep = sdeg <= order
    if dropped:
        keep &= np.all(sexp[:, dropped] == 0, axis=1)
    sel = np.flatnonzero(keep)
    tgt = np.array([tindex[tuple(int(sexp[k][v]) for v in var_map)] for k in sel], dtype=np.int64)
    return sel, tgt


@functools.lru_cache(maxsize=None)
def _embed_map(snv, sord, tnv, tord, var_map, order):
    sexp, _, sdeg = _tables(snv, sord)[:3]
    tindex = _tables(tnv, tord)[1]
    sel = np.flatnonzero(sdeg <= order)
    tgt = []
    for k in sel:
        e = [0] * tnv
        for i, v in enumerate(var_map):
            e[v] = int(sexp[k][i])
        tgt.append(tindex[tuple(e)])
    return sel, np.array(tgt, dtype=np.int64)


def restrict(a: Jet, target: JetSpace, var_map: Sequence[int]) -> Jet:
    """Set every source variable not listed in ``var_map`` to its base value.

    ``var_map[i]`` is the source variable that becomes target variable ``i``.
    The target base point must agree with the source base point on mapped
    variables.
    """
    src = a.space
    var_map = list(var_map)
    if len(var_map) != target.nvars:
        raise ValueError("var_map must name one source variable per target variable")
    if not np.allclose(src.base_point[var_map], target.base_point):
        raise IncompatibleJetsError("restriction would move the base point")
    order = min(a.order, target.order)
    sel, tgt = _restrict_map(src.nvars, src.order, target.nvars, target.order, tuple(var_map), order)
    out = np.zeros(a.shape + (target.size,), dtype=complex)
    out[..., tgt] = a.coeffs[..., sel]
    return Jet(target, out, order)


def embed(a: Jet, target: JetSpace, var_map: Sequence[int]) -> Jet:
    """Regard a jet as constant in extra variables.

    ``var_map[i]`` is the target variable corresponding to source variable
    ``i``.  The trustworthy order is preserved.
    """
    src = a.space
    var_map = list(var_map)
    if len(var_map) != src.nvars:
        raise ValueError("var_map must place every source variable")
    if not np.allclose(target.base_point[var_map], src.base_point):
        raise IncompatibleJetsError("embedding would move the base point")
    order = min(a.order, target.order)
    sel, tgt = _embed_map(src.nvars, src.order, target.nvars, target.order, tuple(var_map), order)
    out = np.zeros(a.shape + (target.size,), dtype=complex)
    out[..., tgt] = a.coeffs[..., sel]
    return Jet(target, out, order)


def euler_residual(a: Jet, variables: Sequence[int], degree: float, scale: float = 0.0) -> float:
    """Relative defect of ``sum_v v d_v a = degree * a`` (Euler homogeneity).

    The defect is divided by the larger of ``max|a|`` and ``scale``; pass the
    size of the operands when ``a`` is a difference that may cancel to roundoff.
    """
    sp = a.space
    lhs = None
    for v in variables:
        term = sp.variable(v) * partial(a, v)
        lhs = term if lhs is None else lhs + term
    diff = lhs - degree * a
    scale = max(a.with_order(diff.order).max_abs(), scale, 1e-300)
    return diff.max_abs() / scale
