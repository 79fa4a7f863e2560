"""The transformed Stokes system ``L_g U = 0`` with ``U = (w, f)``.

Two independent routes are implemented here:

* :func:`assemble` builds the operator matrices ``A, B, C2, C1, C0`` entry by
  entry, so that ``A^{-1} L_g = d_n^2 + B d_n + C``;
* :func:`transform`, :func:`strain`, :func:`stress`, :func:`div_stress` compute
  ``(div sigma(u, p), div u)`` straight from the definitions of strain and
  stress, with ``(u, p)`` obtained from ``(w, f)``.

:func:`verify_transformation` compares the two.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace

import numpy as np

from . import jets
from .geometry import (
    BoundaryNormalMetric,
    covariant_derivative_vector,
    divergence,
    divergence_sym2,
    gradient_vector,
    hessian_upper,
    laplace_beltrami,
    partials,
    ricci_upper,
    scalar_hessian,
)
from .jets import Jet

__all__ = [
    "FluidState",
    "OperatorMatrix",
    "SystemMatrices",
    "TransformationCheck",
    "apply_Lg",
    "assemble",
    "check_transformation",
    "div_stress",
    "mutate",
    "strain",
    "strain_upper",
    "stress",
    "transform",
    "verify_transformation",
]


@dataclass(frozen=True)
class FluidState:
    w: Jet
    f: Jet
    u: Jet
    p: Jet


# -- first-principles side -------------------------------------------------


def strain_upper(m: BoundaryNormalMetric, u: Jet) -> Jet:
    """``(Su)^{jk} = nabla^j u^k + nabla^k u^j``."""
    e = covariant_derivative_vector(m, u) @ m.g_upper  # e[j, k] = nabla^k u^j
    return e + e.T


def strain(m: BoundaryNormalMetric, u: Jet) -> Jet:
    """Mixed strain ``(Su)^j_k = nabla^j u_k + nabla_k u^j``."""
    return strain_upper(m, u) @ m.g_lower


def stress(m: BoundaryNormalMetric, u: Jet, p: Jet) -> Jet:
    """Contravariant stress ``sigma^{jk} = mu (Su)^{jk} - p g^{jk}``."""
    return m.mu * strain_upper(m, u) - p * m.g_upper


def div_stress(m: BoundaryNormalMetric, u: Jet, p: Jet) -> Jet:
    """``(div sigma)^j = nabla_k sigma^{jk}``."""
    return divergence_sym2(m, stress(m, u, p))


def transform(m: BoundaryNormalMetric, w: Jet, f: Jet) -> FluidState:
    """Velocity and pressure generated by the potentials ``(w, f)``."""
    mu = m.mu
    inv_mu = jets.reciprocal(mu)
    u = jets.power(mu, -0.5) * w + inv_mu * gradient_vector(m, f) - f * gradient_vector(m, inv_mu)
    p = divergence(m, jets.sqrt(mu) * w) + 2.0 * laplace_beltrami(m, f)
    return FluidState(w=w, f=f, u=u, p=p)


# -- assembled operator ------------------------------------------------------


@dataclass(frozen=True)
class OperatorMatrix:
    """Matrix differential operator ``sum_J coeffs[J] d^J``.

    Keys are derivative multi-indices over the ``n`` coordinates; values are
    ``(n+1) x (n+1)`` coefficient jets.
    """

    n: int
    terms: dict = field(default_factory=dict)

    def apply(self, U: Jet) -> Jet:
        out = None
        for key, coeff in self.terms.items():
            term = jets.einsum("ij,j->i", coeff, jets.partial_multi(U, key))
            out = term if out is None else out + term
        return out

    def order(self) -> int:
        return max((sum(k) for k in self.terms), default=0)


@dataclass(frozen=True)
class SystemMatrices:
    """``A^{-1} L_g = I d_n^2 + B d_n + C2 + C1 + C0``; ``A`` and ``B`` are multipliers."""

    n: int
    A: Jet
    B: Jet
    C2: OperatorMatrix
    C1: OperatorMatrix
    C0: OperatorMatrix

    @property
    def C(self) -> list:
        return [self.C2, self.C1, self.C0]


def _unit(n: int, *idx: int) -> tuple:
    e = [0] * n
    for i in idx:
        e[i] += 1
    return tuple(e)


def assemble(m: BoundaryNormalMetric) -> SystemMatrices:
    """Entries of ``A``, ``B`` and ``C = C2 + C1 + C0`` in boundary normal coordinates.

    Row/column ``j < n`` refer to the components of ``w``; the last
    row/column refers to ``f``.  Index ``n - 1`` is the normal direction.
    """
    n = m.n
    N = n - 1  # normal coordinate
    F = n  # potential component
    t = n - 1  # number of tangential coordinates
    sp = m.space
    g = m.g_upper
    gam = m.gamma
    mu = m.mu
    s = jets.sqrt(mu)
    si = jets.power(mu, -0.5)
    mi = jets.reciprocal(mu)
    r_up = ricci_upper(m)
    grad_s = gradient_vector(m, s)  # nabla^j mu^{1/2}
    hess_mi = hessian_upper(m, mi)  # nabla^j nabla^k mu^{-1}
    trace_gam_n = sum(gam[a, a, N] for a in range(t))  # Gamma^a_{a n}
    eye = np.eye(n + 1)

    A = jets.block(
        [[s if i == j and i < n else (mi if i == j else sp.zeros()) for j in range(n + 1)] for i in range(n + 1)]
    )

    # B
    B = trace_gam_n * eye
    Bc = B.coeffs.copy()
    Bc[:n, :n] += 2.0 * gam[:, :, N].coeffs
    Bc[:n, N] += (-2.0 * si * grad_s).coeffs
    Bc[:n, F] += (2.0 * si * (r_up[:, N] - mu * hess_mi[:, N])).coeffs
    Bc[F, N] += s.coeffs
    B = Jet(sp, Bc, min(B.order, r_up.order, hess_mi.order))

    # C2 = (g^{ab} d_a d_b) I
    c2 = {}
    for a in range(t):
        for b in range(t):
            key = _unit(n, a, b)
            c2[key] = c2.get(key, 0.0) + g[a, b] * eye

    # C1
    dg = partials(m.tangential, t)  # dg[a, b, c] = d_c g^{ab}
    trace_gam_tan = [sum(gam[c, a, c] for c in range(t)) for a in range(t)]  # Gamma^c_{a c}
    c1 = {}
    for b in range(t):
        key = _unit(n, b)
        scal = sum(g[a, b] * trace_gam_tan[a] + dg[a, b, a] for a in range(t))
        coeff = (scal * eye).coeffs.copy()
        mix = sum(g[a, b] * gam[:, :, a] for a in range(t))  # g^{ab} Gamma^j_{k a}
        coeff[:n, :n] += 2.0 * mix.coeffs
        coeff[:n, F] += (2.0 * si * (r_up[:, b] - mu * hess_mi[:, b])).coeffs
        coeff[F, b] += s.coeffs
        coeff[:n, b] += (-2.0 * si * grad_s).coeffs
        c1[key] = Jet(sp, coeff, min(scal.order, mix.order, r_up.order, hess_mi.order, grad_s.order))

    # C0
    lap_s = laplace_beltrami(m, s)
    dgam = partials(gam, n)  # dgam[j, m, l, k] = d_k Gamma^j_{ml}
    g_dgam = jets.einsum("ml,jmlk->jk", g, dgam)
    trace_gam = sum(gam[l_, l_, :] for l_ in range(n))  # Gamma^l_{l k}
    hess_s = scalar_hessian(m, s)  # nabla^j nabla_k mu^{1/2}
    div_t = divergence_sym2(m, mu * hess_mi)
    lap_mi = laplace_beltrami(m, mi)
    d_si = partials(si, n)

    top_left = (
        (-si * lap_s) * np.eye(n)
        + g_dgam
        - 2.0 * si * jets.einsum("j,k->jk", grad_s, trace_gam)
        - 2.0 * si * hess_s
    )
    top_right = -2.0 * si * div_t
    bottom_left = s * trace_gam + mu * d_si
    bottom_right = -mu * lap_mi
    c0c = sp.zeros((n + 1, n + 1)).coeffs
    c0c[:n, :n] = top_left.coeffs
    c0c[:n, F] = top_right.coeffs
    c0c[F, :n] = bottom_left.coeffs
    c0c[F, F] = bottom_right.coeffs
    C0 = Jet(sp, c0c, min(top_left.order, top_right.order, bottom_left.order, bottom_right.order))

    return SystemMatrices(
        n=n,
        A=A,
        B=B,
        C2=OperatorMatrix(n, c2),
        C1=OperatorMatrix(n, c1),
        C0=OperatorMatrix(n, {(0,) * n: C0}),
    )


def apply_Lg(mats: SystemMatrices, w: Jet, f: Jet) -> Jet:
    """``L_g U = A (U'' + B U' + C U)`` with ``' = d_n``; returns an ``(n+1)``-vector."""
    n = mats.n
    U = jets.stack(list(w) + [f])
    dU = jets.partial(U, n - 1)
    inner = jets.partial(dU, n - 1) + jets.einsum("ij,j->i", mats.B, dU)
    for op in mats.C:
        inner = inner + op.apply(U)
    return jets.einsum("ij,j->i", mats.A, inner)


@dataclass(frozen=True)
class TransformationCheck:
    absolute: float
    scale: float
    order: int

    @property
    def relative(self) -> float:
        return self.absolute / max(self.scale, 1.0)


def check_transformation(m: BoundaryNormalMetric, w: Jet, f: Jet, mats: SystemMatrices | None = None) -> TransformationCheck:
    """Compare ``L_g U`` with ``(div sigma(u, p), div u)`` coefficientwise."""
    if m.space.order < 4:
        raise jets.OrderExhaustedError("the transformation check needs jet order >= 4", needed=4)
    if mats is None:
        mats = assemble(m)
    lhs = apply_Lg(mats, w, f)
    st = transform(m, w, f)
    rhs = jets.stack(list(div_stress(m, st.u, st.p)) + [divergence(m, st.u)])
    order = min(lhs.order, rhs.order)
    diff = lhs.with_order(order) - rhs.with_order(order)
    scale = max(lhs.with_order(order).max_abs(), rhs.with_order(order).max_abs())
    return TransformationCheck(absolute=diff.max_abs(), scale=scale, order=order)


def verify_transformation(m: BoundaryNormalMetric, w: Jet, f: Jet, mats: SystemMatrices | None = None) -> float:
    """Max-norm over all coefficients of ``L_g U - (div sigma, div u)``."""
    return check_transformation(m, w, f, mats).absolute


_ENTRY = re.compile(r"^\s*(B|C0|C1)\s*\[\s*(\d+)\s*,\s*(\d+)\s*\]\s*$")


def mutate(mats: SystemMatrices, entry: str, delta: float = 1e-3) -> SystemMatrices:
    """Copy of ``mats`` with ``delta`` added to one entry (fault injection).

    ``entry`` is ``"B[i,j]"``, ``"C0[i,j]"`` or ``"C1[i,j]"``; for ``C1`` the
    coefficient of ``d_{x_1}`` is perturbed.
    """
    match = _ENTRY.match(entry)
    if not match:
        raise ValueError(f"cannot parse matrix entry {entry!r}; expected e.g. 'C0[1,2]'")
    name, i, j = match.group(1), int(match.group(2)), int(match.group(3))
    n = mats.n
    if not (0 <= i <= n and 0 <= j <= n):
        raise ValueError(f"entry {entry!r} outside a {n + 1}x{n + 1} matrix")
    bump = np.zeros((n + 1, n + 1))
    bump[i, j] = delta
    if name == "B":
        return replace(mats, B=mats.B + bump)
    op = mats.C0 if name == "C0" else mats.C1
    key = (0,) * n if name == "C0" else _unit(n, 0)
    terms = dict(op.terms)
    terms[key] = terms[key] + bump
    return replace(mats, **{name: OperatorMatrix(n, terms)})
