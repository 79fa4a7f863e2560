"""Boundary determination of ``g^{ab}`` and its normal derivatives from symbols.

Order 0 comes from ``q_1 = |xi'| I``.  Order ``r >= 1`` compares the
symbols with those of a reference metric that shares the already recovered
boundary jets and has vanishing ``r``-th normal derivative.  The trace of
``q_{1-r}`` then differs by ``-k_r^{ab} xi_a xi_b / (2|xi'|)^{r+1}`` with

    k_r = (n + 3) h_r g - (n + 2r - 1) d_n^r g,    h_r = g_{ab} d_n^r g^{ab},

and the potential-column entry ``q_{2-r}[n, n+1]`` (``r >= 2``) differs by
``mu^{-1/2} h_r / (2 (2|xi'|)^{r-2})``.  Contracting ``k_r`` with ``g_{ab}``
gives ``h_r`` unless the contraction constant vanishes, in which case the
potential column supplies it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import jets
from .geometry import BoundaryNormalMetric
from .jets import Jet, JetSpace, OrderExhaustedError
from .symbol_calculus import SymbolSequence, run_recursion, xi_vars

__all__ = [
    "QuadraticFormSample",
    "RecoveredOrder",
    "RecoveryError",
    "RecoveryReport",
    "default_directions",
    "extract_quadratic_form",
    "recover_metric_0",
    "recover_normal_1",
    "recover_normal_r",
    "reference_extension",
    "run_recovery",
    "symbol_difference",
    "trace_relation",
    "true_normal_derivative",
]

SYMMETRY_TOL = 1e-10
HOMOGENEITY_TOL = 1e-9


class RecoveryError(ValueError):
    """Raised when the data do not determine the requested quantity."""


def trace_relation(n: int, r: int) -> tuple:
    """``(a, b, c)`` with ``k_r = a h_r g - b d_n^r g`` and ``k_r . g = c h_r``.

    Besides the transport terms, the Ricci tensor in the potential column of
    ``b`` and ``c_1`` feeds ``d_n^r g`` into the trace, which is why ``b``
    grows with ``r``.  ``c`` vanishes for ``(n, r) = (2, 2)``.
    """
    if r < 1:
        raise ValueError("the trace relation is defined for r >= 1")
    a = n + 3
    b = n + 2 * r - 1
    return a, b, a * (n - 1) - b


def default_directions(n: int) -> np.ndarray:
    """Coordinate directions ``e_a`` followed by the pair sums ``e_a + e_b``."""
    t = n - 1
    eye = np.eye(t)
    dirs = [eye[a] for a in range(t)]
    dirs += [eye[a] + eye[b] for a in range(t) for b in range(a + 1, t)]
    return np.array(dirs)


def tangential_space(n: int, order: int) -> JetSpace:
    return JetSpace(n - 1, order, names=[f"x{i + 1}" for i in range(n - 1)])


def _to_tangential(a: Jet, n: int, target: JetSpace) -> Jet:
    """Restrict a joint jet to the boundary ``x_n = 0`` at ``xi = xi0``."""
    return jets.restrict(a, target, list(range(n - 1)))


@dataclass
class QuadraticFormSample:
    """Values ``k^{ab}(x) xi_a xi_b`` sampled at unit directions.

    ``values[d]`` is a joint jet expanded around ``(0, directions[d])``;
    ``scales[d]``, if given, is the size of the quantities whose difference
    produced it and serves as the floor in the homogeneity check.
    """

    n: int
    directions: np.ndarray
    values: list
    scales: list | None = None

    def design_matrix(self) -> np.ndarray:
        t = self.n - 1
        pairs = [(a, b) for a in range(t) for b in range(a, t)]
        rows = []
        for xi in self.directions:
            rows.append([xi[a] * xi[b] * (1.0 if a == b else 2.0) for a, b in pairs])
        return np.array(rows).reshape(len(self.directions), len(pairs))


def extract_quadratic_form(sample: QuadraticFormSample, expected_degree: int = 2, target: JetSpace | None = None) -> Jet:
    """Fit the symmetric tensor ``k^{ab}`` of tangential jets to the samples."""
    n = sample.n
    t = n - 1
    M = sample.design_matrix()
    sv = np.linalg.svd(M, compute_uv=False)
    if len(sv) < M.shape[1] or sv[-1] < 1e-8 * sv[0]:
        raise RecoveryError("direction set does not determine a symmetric form")
    order = min(v.order for v in sample.values)
    if target is None:
        target = tangential_space(n, sample.values[0].space.order)
    rows = []
    scales = sample.scales or [0.0] * len(sample.values)
    for v, scale in zip(sample.values, scales):
        if v.shape:
            raise ValueError("quadratic form samples must be scalar jets")
        if v.order >= 1 and v.max_abs() > 0:
            defect = jets.euler_residual(v, xi_vars(n), expected_degree, scale)
            if defect > HOMOGENEITY_TOL:
                raise RecoveryError(f"sample is not homogeneous of degree {expected_degree} (defect {defect:.2e})")
        rows.append(_to_tangential(v.with_order(order), n, target).coeffs)
    coef, *_ = np.linalg.lstsq(M, np.array(rows), rcond=None)
    k = target.zeros((t, t)).coeffs
    for i, (a, b) in enumerate((a, b) for a in range(t) for b in range(a, t)):
        k[a, b] = coef[i]
        k[b, a] = coef[i]
    return Jet(target, k, min(order, target.order))


def _scalar_part(q1: Jet) -> Jet:
    return q1.trace() * (1.0 / q1.shape[0])


def recover_metric_0(seqs: list) -> Jet:
    """``g^{ab}`` on the boundary with its tangential jets, from ``q_1``."""
    if not seqs:
        raise RecoveryError("no symbol sequences supplied")
    n = seqs[0].n
    values = []
    for seq in seqs:
        s = _scalar_part(seq.q(1).entries)
        values.append(s * s)
    sample = QuadraticFormSample(n, np.array([s.direction for s in seqs]), values)
    return extract_quadratic_form(sample, 2)


def _normal_shift(a: Jet, target: JetSpace, power: int) -> tuple:
    """Coefficients of ``x_n**power * a(x') / power!`` in the coordinate space."""
    t = a.space.nvars
    out = np.zeros(a.shape + (target.size,), dtype=complex)
    for k in range(a.space.nmono(a.order)):
        e = tuple(int(v) for v in a.space.exponents[k]) + (power,)
        idx = target.index(e)
        if idx is not None:
            out[..., idx] = a.coeffs[..., k] / math.factorial(power)
    assert len(e) == t + 1
    return out, a.order + power


def reference_extension(known: list, mu: Jet) -> BoundaryNormalMetric:
    """Metric with ``d_n^s g^{ab}(x', 0) = known[s]`` and higher normal derivatives zero."""
    space = mu.space
    n = space.nvars
    t = n - 1
    coeffs = np.zeros((t, t, space.size), dtype=complex)
    order = space.order
    for s, tensor in enumerate(known):
        c, o = _normal_shift(tensor, space, s)
        coeffs += c
        order = min(order, o)
    h = Jet(space, coeffs, order)
    return BoundaryNormalMetric.from_tangential(h, mu, check=False)


def _symmetrize(k: Jet, what: str) -> tuple:
    asym = (k - k.T).max_abs()
    return 0.5 * (k + k.T), asym


@dataclass
class SymbolDifference:
    """Per-direction differences between the data and a reference metric at order ``r``.

    ``values[d]`` is ``-(2|xi'|)^{r+1} (tr q_{1-r} - tr q~_{1-r})``, a quadratic
    form in ``xi'``, and ``scales[d]`` the size of ``(2|xi'|)^{r+1} tr q_{1-r}``;
    ``potential[d]`` is the ``h_r`` estimate from the potential column of
    ``q_{2-r}`` (``None`` for ``r = 1``).  Euler defects are relative to the
    traces being subtracted, since the difference itself may vanish.
    """

    r: int
    values: list
    potential: list
    euler_defects: list
    order: int
    scales: list = field(default_factory=list)


def symbol_difference(seqs: list, known: list, mu: Jet, r: int) -> SymbolDifference:
    ref = reference_extension(known, mu)
    values, potential, defects, scales = [], [], [], []
    order = None
    for seq in seqs:
        n = seq.n
        if seq.depth < r:
            raise OrderExhaustedError(f"normal order {r} needs symbols of depth {r}, got {seq.depth}", needed=None)
        ref_seq = run_recursion(ref, seq.direction, r, order=seq.space.order, normalize=False)
        data = seq.q(1 - r).entries.trace()
        diff = data - ref_seq.q(1 - r).entries.trace()
        if diff.order < 1:
            defects.append(float("nan"))  # no derivative left to test homogeneity with
        elif diff.max_abs() == 0:
            defects.append(0.0)
        else:
            defects.append(jets.euler_residual(diff, xi_vars(n), 1 - r, data.with_order(diff.order).max_abs()))
        norm = _scalar_part(seq.q(1).entries)
        weight = (2.0 * norm) ** (r + 1)
        vals = -weight * diff
        values.append(vals)
        scales.append((weight * data).with_order(vals.order).max_abs())
        order = vals.order if order is None else min(order, vals.order)
        if r >= 2:
            col = seq.q(2 - r).entries[n - 1, n] - ref_seq.q(2 - r).entries[n - 1, n]
            root_mu = jets.sqrt(jets.embed(mu, seq.space, list(range(n))))
            potential.append(2.0 * (2.0 * norm) ** (r - 2) * root_mu * col)
        else:
            potential.append(None)
    return SymbolDifference(r, values, potential, defects, order, scales)


def _worst(values: list) -> float:
    finite = [v for v in values if not math.isnan(v)]
    return max(finite) if finite else float("nan")


@dataclass
class NormalStep:
    """Intermediate quantities of one recovery step."""

    tensor: Jet
    k: Jet
    h: Jet
    h_source: str
    h_mismatch: float | None
    difference: SymbolDifference


def recover_normal_r(seqs: list, known: list, r: int, mu: Jet) -> NormalStep:
    """``d_n^r g^{ab}`` on the boundary given orders ``0 .. r-1``."""
    if r < 1:
        raise ValueError("use recover_metric_0 for r = 0")
    if len(known) < r:
        raise RecoveryError(f"normal order {r} needs orders 0..{r - 1} first")
    n = seqs[0].n
    target = known[0].space
    sd = symbol_difference(seqs, known[:r], mu, r)
    sample = QuadraticFormSample(n, np.array([s.direction for s in seqs]), sd.values, sd.scales)
    k = extract_quadratic_form(sample, 2, target=target)
    g0 = known[0]
    a, b, c = trace_relation(n, r)
    h_pot = None
    if r >= 2:
        est = [_to_tangential(p, n, target) for p in sd.potential]
        h_pot = sum(est[1:], est[0]) * (1.0 / len(est))
    if c != 0:
        h = jets.einsum("ab,ab->", k, jets.inv(g0).with_order(k.order)) * (1.0 / c)
        source = "trace"
    else:
        h = h_pot
        source = "potential column"
    mismatch = None
    if h_pot is not None:
        o = min(h.order, h_pot.order)
        mismatch = (h.with_order(o) - h_pot.with_order(o)).max_abs()
    g = (a * h * g0 - k) * (1.0 / b)
    return NormalStep(g, k, h, source, mismatch, sd)


def recover_normal_1(seqs: list, g0: Jet, mu: Jet) -> Jet:
    """``d_n g^{ab}`` on the boundary."""
    return recover_normal_r(seqs, [g0], 1, mu).tensor


def true_normal_derivative(m: BoundaryNormalMetric, r: int, target: JetSpace | None = None) -> Jet:
    """Ground truth ``d_n^r g^{ab}(x', 0)`` as tangential jets."""
    n = m.n
    h = m.tangential
    for _ in range(r):
        h = jets.partial(h, n - 1)
    if target is None:
        target = tangential_space(n, m.space.order)
    return jets.restrict(h, target, list(range(n - 1)))


@dataclass
class RecoveredOrder:
    r: int
    tensor: Jet
    trustworthy_order: int
    constant: int | None = None
    h_source: str | None = None
    h_mismatch: float | None = None
    asymmetry: float = 0.0
    imag_max: float = 0.0
    euler_defect: float = 0.0
    abs_error: float | None = None
    rel_error: float | None = None


@dataclass
class RecoveryReport:
    n: int
    depth: int
    jet_order: int
    directions: np.ndarray
    orders: list = field(default_factory=list)
    constants: dict = field(default_factory=dict)

    @property
    def max_rel_error(self) -> float | None:
        errs = [o.rel_error for o in self.orders if o.rel_error is not None]
        return max(errs) if errs else None

    @property
    def max_abs_error(self) -> float | None:
        errs = [o.abs_error for o in self.orders if o.abs_error is not None]
        return max(errs) if errs else None

    def tensor(self, r: int) -> Jet:
        return self.orders[r].tensor


def compare(recovered: Jet, truth: Jet) -> tuple:
    """Absolute and normwise relative error through the recovered order."""
    order = min(recovered.order, truth.order)
    diff = (recovered.with_order(order) - truth.with_order(order)).max_abs()
    scale = truth.with_order(order).max_abs()
    rel = diff / scale if scale > 0 else diff
    return diff, rel


def run_recovery(seqs: list, mu: Jet, depth: int, truth: BoundaryNormalMetric | None = None) -> RecoveryReport:
    """Recover ``d_n^r g^{ab}`` for ``r = 0 .. depth`` from per-direction symbols."""
    if not seqs:
        raise RecoveryError("no symbol sequences supplied")
    n = seqs[0].n
    K = seqs[0].space.order
    if any(s.depth < depth for s in seqs):
        raise OrderExhaustedError("symbol sequences are shallower than the requested depth", needed=None)
    report = RecoveryReport(n, depth, K, np.array([s.direction for s in seqs]))
    for r in range(1, depth + 1):
        report.constants[r] = trace_relation(n, r)[2]

    g0 = recover_metric_0(seqs)
    g0, asym = _symmetrize(g0, "g0")
    if np.min(np.linalg.eigvalsh(g0.value.real)) <= 0:
        raise RecoveryError("recovered boundary metric is not positive definite")
    known = [g0]
    report.orders.append(RecoveredOrder(0, g0, g0.order, asymmetry=asym, imag_max=g0.imag_max()))
    for r in range(1, depth + 1):
        step = recover_normal_r(seqs, known, r, mu)
        g, asym = _symmetrize(step.tensor, f"order {r}")
        if asym > SYMMETRY_TOL * max(1.0, g.max_abs()):
            raise RecoveryError(f"recovered order {r} is not symmetric (defect {asym:.2e})")
        known.append(g)
        report.orders.append(
            RecoveredOrder(
                r, g, g.order, report.constants[r], step.h_source, step.h_mismatch,
                asym, g.imag_max(), _worst(step.difference.euler_defects),
            )
        )
    if truth is not None:
        target = g0.space
        for rec in report.orders:
            rec.abs_error, rec.rel_error = compare(rec.tensor, true_normal_derivative(truth, rec.r, target))
    return report
