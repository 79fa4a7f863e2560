"""Full symbol of the factorization operator ``Q`` of the transformed system.

All symbols are matrix jets in the joint variables ``(x_1..x_n, xi_1..xi_{n-1})``
expanded around ``(0, xi0)`` for one cotangent direction ``xi0``.  The
principal symbol is ``|xi'| I`` and lower-order terms follow from
``q_{-m-1} = E_{-m} / (2 |xi'|)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import jets
from .geometry import BoundaryNormalMetric
from .jets import Jet, JetSpace, OrderExhaustedError
from .stokes_system import SystemMatrices, assemble

__all__ = [
    "SymbolContext",
    "SymbolMatrix",
    "SymbolSequence",
    "compute_E",
    "composition_pairs",
    "full_symbol_residual",
    "multi_indices",
    "next_symbol",
    "normalize_direction",
    "principal_symbol",
    "required_order",
    "run_recursion",
    "symbol_space",
    "symbolize",
]


@dataclass(frozen=True)
class SymbolMatrix:
    entries: Jet
    degree: int

    @property
    def trustworthy_order(self) -> int:
        return self.entries.order

    def euler_defect(self, n: int) -> float:
        """Relative defect of the Euler identity at this symbol's degree."""
        return jets.euler_residual(self.entries, xi_vars(n), self.degree)


@dataclass
class SymbolSequence:
    """Symbols ``q_1, q_0, ..., q_{1-D}`` for one direction."""

    n: int
    direction: np.ndarray
    depth: int
    symbols: list
    space: JetSpace
    b: SymbolMatrix | None = field(default=None, repr=False)
    c: dict | None = field(default=None, repr=False)
    residual_order_achieved: int | None = None

    def q(self, j: int) -> SymbolMatrix:
        """The symbol of homogeneity degree ``j``."""
        k = 1 - j
        if not 0 <= k < len(self.symbols):
            raise KeyError(f"q_{j} not computed (depth {self.depth})")
        return self.symbols[k]


def xi_vars(n: int) -> list:
    return list(range(n, 2 * n - 1))


def symbol_space(n: int, order: int, direction) -> JetSpace:
    direction = np.asarray(direction, dtype=float).reshape(n - 1)
    names = [f"x{i + 1}" for i in range(n)] + [f"xi{i + 1}" for i in range(n - 1)]
    return JetSpace(2 * n - 1, order, np.r_[np.zeros(n), direction], names)


def required_order(depth: int, tangential_order: int = 0) -> int:
    """Smallest jet order accepted for a recursion of the given depth.

    Assembling ``C0`` takes three derivatives of the metric, hence the floor of 3.
    """
    return max(depth + 2 + tangential_order, 3)


def normalize_direction(m: BoundaryNormalMetric, direction) -> np.ndarray:
    """Scale ``direction`` to unit length in the base-point metric ``g^{ab}(0)``."""
    d = np.asarray(direction, dtype=float).reshape(m.n - 1)
    h0 = m.tangential.value.real
    length = math.sqrt(float(d @ h0 @ d))
    if not length > 0:
        raise ValueError("degenerate cotangent direction")
    return d / length


def multi_indices(nvars: int, total: int):
    """All multi-indices of length ``nvars`` with the given total degree."""
    for bars in itertools.combinations(range(total + nvars - 1), nvars - 1):
        parts, prev = [], -1
        for b in bars:
            parts.append(b - prev - 1)
            prev = b
        parts.append(total + nvars - 2 - prev)
        yield tuple(parts)


def _factorial(J) -> int:
    return math.prod(math.factorial(k) for k in J)


def symbolize(mats: SystemMatrices, space: JetSpace):
    """Symbols ``b, c2, c1, c0`` of ``B`` and ``C`` (``d_a -> i xi_a``).

    ``mats`` lives in the coordinate-only jet space; coefficients are embedded
    into ``space`` as constants in ``xi``.
    """
    n = mats.n
    xmap = list(range(n))
    xi = [space.variable(n + a) for a in range(n - 1)]
    b = SymbolMatrix(jets.embed(mats.B, space, xmap), 0)
    cs = []
    for deg, op in zip((2, 1, 0), mats.C):
        total = None
        for key, coeff in op.terms.items():
            if sum(key) != deg:
                raise ValueError(f"C{deg} has a term of order {sum(key)}")
            if key[n - 1]:
                raise ValueError("C contains a normal derivative")
            term = jets.embed(coeff, space, xmap)
            for a in range(n - 1):
                for _ in range(key[a]):
                    term = term * (1j * xi[a])
            total = term if total is None else total + term
        if total is None:
            total = space.zeros((n + 1, n + 1))
        cs.append(SymbolMatrix(total, deg))
    return b, cs[0], cs[1], cs[2]


def xi_norm(m: BoundaryNormalMetric, space: JetSpace) -> Jet:
    """``|xi'| = sqrt(g^{ab}(x) xi_a xi_b)`` as a joint jet."""
    n = m.n
    h = m.tangential
    if h.space != space:
        h = jets.embed(h, space, list(range(n)))
    xi = jets.stack([space.variable(n + a) for a in range(n - 1)])
    return jets.sqrt(jets.einsum("a,a->", xi, jets.einsum("ab,b->a", h, xi)))


def principal_symbol(m: BoundaryNormalMetric, space: JetSpace) -> SymbolMatrix:
    """``q_1 = |xi'| I_{n+1}``, the positive root of ``q_1^2 + c_2 = 0``."""
    if np.allclose(space.base_point[m.n:], 0.0):
        raise ValueError("degenerate cotangent direction")
    norm = xi_norm(m, space)
    return SymbolMatrix(norm * np.eye(m.n + 1), 1)


class SymbolContext:
    """Symbols computed so far plus cached derivatives of them."""

    def __init__(self, n: int, space: JetSpace, b: SymbolMatrix, c: dict, q1: SymbolMatrix):
        self.n = n
        self.space = space
        self.b = b
        self.c = c
        self.q = {1: q1}
        self.norm = q1.entries[0, 0]
        self._cache = {}

    def d(self, j: int, kind: str, J: tuple) -> Jet:
        """``d_xi^J q_j`` (``kind='xi'``) or ``d_x'^J q_j`` (``kind='x'``)."""
        key = (j, kind, J)
        if key not in self._cache:
            offset = self.n if kind == "xi" else 0
            out = self.q[j].entries
            for a, count in enumerate(J):
                for _ in range(count):
                    out = jets.partial(out, offset + a)
            self._cache[key] = out
        return self._cache[key]

    def dn(self, j: int) -> Jet:
        """Normal derivative ``d q_j / d x_n``."""
        key = (j, "n", ())
        if key not in self._cache:
            self._cache[key] = jets.partial(self.q[j].entries, self.n - 1)
        return self._cache[key]

    def composition(self, j: int, k: int, total: int) -> Jet:
        """``sum_{|J| = total} (-i)^{|J|} / J! d_xi^J q_j d_x'^J q_k``."""
        out = None
        for J in multi_indices(self.n - 1, total):
            term = self.d(j, "xi", J) @ self.d(k, "x", J)
            term = term * ((-1j) ** total / _factorial(J))
            out = term if out is None else out + term
        return out


def composition_pairs(m: int):
    """``(j, k, |J|)`` triples summed in ``E_{-m}``: ``-m <= j, k <= 1``, ``|J| = j + k + m``."""
    lo = min(-m, 0) if m >= 0 else 1
    out = []
    for j in range(1, lo - 1, -1):
        for k in range(1, lo - 1, -1):
            if j + k + m >= 0:
                out.append((j, k, j + k + m))
    return out


def _E_generic(m: int, ctx: SymbolContext) -> Jet:
    out = ctx.b.entries @ ctx.q[-m].entries + ctx.dn(-m)
    if -m in ctx.c:
        out = out - ctx.c[-m].entries
    for j, k, total in composition_pairs(m):
        out = out - ctx.composition(j, k, total)
    return out


def _E1_display(ctx: SymbolContext) -> Jet:
    q1 = ctx.q[1].entries
    out = ctx.b.entries @ q1 + ctx.dn(1) - ctx.c[1].entries
    for a in range(ctx.n - 1):
        e = tuple(int(i == a) for i in range(ctx.n - 1))
        out = out + 1j * (ctx.d(1, "xi", e) @ ctx.d(1, "x", e))
    return out


def _E0_display(ctx: SymbolContext) -> Jet:
    q0 = ctx.q[0].entries
    out = ctx.b.entries @ q0 + ctx.dn(0) - ctx.c[0].entries - q0 @ q0
    t = ctx.n - 1
    for a in range(t):
        e = tuple(int(i == a) for i in range(t))
        out = out + 1j * (ctx.d(1, "xi", e) @ ctx.d(0, "x", e) + ctx.d(0, "xi", e) @ ctx.d(1, "x", e))
    for a in range(t):
        for b in range(t):
            e = tuple(int(i == a) + int(i == b) for i in range(t))
            out = out + 0.5 * (ctx.d(1, "xi", e) @ ctx.d(1, "x", e))
    return out


def compute_E(mode, ctx: SymbolContext) -> SymbolMatrix:
    """``E_1``, ``E_0`` or ``E_{-m}``.

    ``mode`` is ``"E1"`` or ``"E0"`` for the explicit displays, or an integer
    ``m >= -1`` for the generic grouping (``m = -1, 0`` reproduce ``E1, E0``).
    """
    if mode == "E1":
        m, fn = -1, _E1_display
    elif mode == "E0":
        m, fn = 0, _E0_display
    else:
        m = int(mode)
        if m < -1:
            raise ValueError("E_{-m} is defined for m >= -1")
        fn = lambda c: _E_generic(m, c)  # noqa: E731
    missing = [j for j in range(1, -m - 1, -1) if j not in ctx.q]
    if missing:
        raise KeyError(f"E_{-m} needs q_{missing[0]} first")
    entries = fn(ctx)
    if entries.order < 0:
        raise OrderExhaustedError(f"E_{-m} exhausted the jet order", needed=ctx.space.order + 1)
    return SymbolMatrix(entries, -m)


def next_symbol(E: SymbolMatrix, q1: SymbolMatrix) -> SymbolMatrix:
    """Solve ``q_1 X + X q_1 = E`` for scalar ``q_1 = |xi'| I``: ``X = E / (2 |xi'|)``."""
    norm = q1.entries[0, 0]
    return SymbolMatrix(E.entries * jets.reciprocal(2.0 * norm), E.degree - 1)


def run_recursion(
    m: BoundaryNormalMetric,
    direction,
    depth: int,
    order: int | None = None,
    tangential_order: int = 0,
    mats: SystemMatrices | None = None,
    normalize: bool = True,
) -> SymbolSequence:
    """Compute ``q_1, ..., q_{1-depth}`` in one cotangent direction.

    ``m`` lives in the coordinate-only jet space.  The joint jet order
    defaults to the order of ``m`` and must be at least
    :func:`required_order`.
    """
    n = m.n
    if depth < 0:
        raise ValueError("depth must be non-negative")
    K = m.space.order if order is None else order
    need = required_order(depth, tangential_order)
    if K < need:
        raise OrderExhaustedError(
            f"depth {depth} with tangential order {tangential_order} needs jet order K >= {need}, got {K}",
            needed=need,
        )
    xi0 = normalize_direction(m, direction) if normalize else np.asarray(direction, dtype=float)
    space = symbol_space(n, K, xi0)
    if mats is None:
        mats = assemble(m)
    b, c2, c1, c0 = symbolize(mats, space)
    q1 = principal_symbol(m, space)
    ctx = SymbolContext(n, space, b, {2: c2, 1: c1, 0: c0}, q1)
    for mm in range(-1, depth - 1):
        E = compute_E(mm, ctx)
        ctx.q[-mm - 1] = next_symbol(E, q1)
    symbols = [ctx.q[j] for j in range(1, -depth, -1)]
    return SymbolSequence(n, xi0, depth, symbols, space, b, {2: c2, 1: c1, 0: c0})


def full_symbol_residual(seq: SymbolSequence, b: SymbolMatrix | None = None, c: dict | None = None) -> dict:
    """Relative size of each homogeneous part of the full symbol equation.

    For every degree ``d`` whose terms involve only computed symbols
    (``d = 2, 1, ..., 2 - depth``) the degree-``d`` part of

        sum_J (-i)^|J|/J! d_xi^J q d_x'^J q - b q - d_n q + c

    is formed directly from the composition formula and its max coefficient
    is divided by the largest coefficient among the contributing terms.
    Returns ``{d: (relative, absolute, order)}``.
    """
    b = seq.b if b is None else b
    c = seq.c if c is None else c
    n = seq.n
    t = n - 1
    avail = {s.degree: s.entries for s in seq.symbols}
    out = {}
    for d in range(2, 1 - seq.depth, -1):
        terms = []
        for j in avail:
            for k in avail:
                total = j + k - d
                if total < 0:
                    continue
                for J in multi_indices(t, total):
                    left = jets.partial_multi(avail[j], (0,) * n + J)
                    right = jets.partial_multi(avail[k], J + (0,) * t)
                    terms.append((left @ right) * ((-1j) ** total / _factorial(J)))
        if d in avail:
            terms.append(-(b.entries @ avail[d]))
            terms.append(-jets.partial(avail[d], n - 1))
        if d in c:
            terms.append(c[d].entries)
        order = min(tm.order for tm in terms)
        total_jet = sum(tm.with_order(order) for tm in terms[1:]) + terms[0].with_order(order)
        scale = max(tm.with_order(order).max_abs() for tm in terms)
        absolute = total_jet.max_abs()
        out[d] = (absolute / max(scale, 1e-300), absolute, order)
    seq.residual_order_achieved = min(v[2] for v in out.values())
    return out
