"""Riemannian geometry in boundary normal coordinates, computed on jets.

Coordinates are the first ``n`` variables of the jet space; index ``n - 1``
is the normal coordinate.  Any further variables (the cotangent variables
used by the symbol calculus) are inert here.

Array index conventions:

* ``christoffel(m)[j, k, l]`` is the Christoffel symbol with upper index
  ``j`` and lower indices ``k, l``;
* ``ricci(m)[k, l]`` is the covariant Ricci tensor;
* ``covariant_derivative_vector(m, w)[j, k]`` is ``nabla_k w^j``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import jets
from .jets import Jet, JetSpace


class MetricError(ValueError):
    """Raised for metrics violating the boundary normal form."""


def _lin(subscripts: str, a: Jet) -> Jet:
    """Linear einsum on the leading axes (traces, transposes, index moves)."""
    ins, out = subscripts.replace(" ", "").split("->")
    return Jet(a.space, np.einsum(f"{ins}z->{out}z", a.coeffs), a.order)


@dataclass(frozen=True, eq=False)
class BoundaryNormalMetric:
    """Inverse metric ``g^{jk}`` in boundary normal coordinates plus viscosity.

    ``g_upper`` is the full ``n x n`` inverse metric jet; its last row and
    column are ``(0, ..., 0, 1)``.  Use :meth:`from_tangential` to build one
    from the tangential block ``g^{alpha beta}``.
    """

    g_upper: Jet
    mu: Jet
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        if self.check:
            self.validate()

    @classmethod
    def from_tangential(cls, h: Jet, mu: Jet, check: bool = True) -> BoundaryNormalMetric:
        n = h.shape[0] + 1
        sp = h.space
        g = sp.zeros((n, n)).coeffs
        g[: n - 1, : n - 1] = h.coeffs
        g[n - 1, n - 1, 0] = 1.0
        return cls(Jet(sp, g, h.order), mu, check)

    @property
    def n(self) -> int:
        return self.g_upper.shape[0]

    @property
    def space(self) -> JetSpace:
        return self.g_upper.space

    @property
    def tangential(self) -> Jet:
        return self.g_upper[: self.n - 1, : self.n - 1]

    def validate(self, tol: float = 1e-12):
        g, n = self.g_upper, self.n
        if g.shape != (n, n) or n < 2:
            raise MetricError("g_upper must be a square matrix jet with n >= 2")
        if self.space.nvars < n:
            raise MetricError("jet space has fewer variables than the dimension")
        if self.mu.space != self.space:
            raise MetricError("viscosity and metric live in different jet spaces")
        c = g.coeffs
        if np.max(np.abs(c - np.swapaxes(c, 0, 1)), initial=0.0) > tol:
            raise MetricError("g_upper is not symmetric")
        e_n = np.zeros(g.space.size)
        e_n[0] = 1.0
        if np.max(np.abs(c[: n - 1, n - 1]), initial=0.0) > tol or np.max(np.abs(c[n - 1, n - 1] - e_n)) > tol:
            raise MetricError("metric is not in boundary normal form (g^{an} = 0, g^{nn} = 1)")
        base = g.value[: n - 1, : n - 1]
        if np.max(np.abs(base.imag), initial=0.0) > tol:
            raise MetricError("metric must be real")
        if np.min(np.linalg.eigvalsh(base.real)) <= 0:
            raise MetricError("g^{alpha beta} is not positive definite at the base point")
        mu0 = self.mu.value
        if abs(mu0.imag) > tol or mu0.real <= 0:
            raise MetricError("viscosity must be positive at the base point")

    @cached_property
    def g_lower(self) -> Jet:
        return lower_metric(self)

    @cached_property
    def gamma(self) -> Jet:
        return christoffel(self)

    def promote(self, space: JetSpace) -> BoundaryNormalMetric:
        """Embed the metric jets into a larger space whose first variables are x."""
        vmap = list(range(self.space.nvars))
        return BoundaryNormalMetric(
            jets.embed(self.g_upper, space, vmap), jets.embed(self.mu, space, vmap), check=False
        )


def lower_metric(m: BoundaryNormalMetric) -> Jet:
    """``g_{jk}``, the jet inverse of ``g^{jk}``."""
    n = m.n
    h_inv = jets.inv(m.tangential)
    g = m.space.zeros((n, n)).coeffs
    g[: n - 1, : n - 1] = h_inv.coeffs
    g[n - 1, n - 1, 0] = 1.0
    return Jet(m.space, g, h_inv.order)


def partials(a: Jet, n: int) -> Jet:
    """``a.shape + (n,)`` jet of the coordinate derivatives ``d_m a``."""
    return jets.gradient(a, range(n))


def christoffel(m: BoundaryNormalMetric) -> Jet:
    r"""Christoffel symbols ``Gamma^j_{kl} = 1/2 g^{jm}(d_l g_{km} + d_k g_{lm} - d_m g_{kl})``."""
    dg = partials(m.g_lower, m.n)  # dg[a, b, c] = d_c g_{ab}
    t = dg.transpose(0, 2, 1) + dg.transpose(2, 0, 1) - dg  # t[k, l, m]
    return 0.5 * jets.einsum("jm,klm->jkl", m.g_upper, t)


def ricci(m: BoundaryNormalMetric) -> Jet:
    """Covariant Ricci tensor from the contracted curvature formula."""
    gam = m.gamma
    dgam = partials(gam, m.n)  # dgam[j, k, l, a] = d_a Gamma^j_{kl}
    r = _lin("jklj->kl", dgam) - _lin("jjlk->kl", dgam)
    contracted = _lin("jjm->m", gam)
    r = r + jets.einsum("m,mkl->kl", contracted, gam) - jets.einsum("jkm,mjl->kl", gam, gam)
    return r


def raise_both(m: BoundaryNormalMetric, t: Jet) -> Jet:
    """``T^{jk} = g^{ja} g^{kb} T_{ab}``."""
    return m.g_upper @ t @ m.g_upper


def ricci_upper(m: BoundaryNormalMetric) -> Jet:
    return raise_both(m, ricci(m))


def gradient_vector(m: BoundaryNormalMetric, f: Jet) -> Jet:
    """``nabla^j f = g^{jk} d_k f``."""
    return jets.einsum("jk,k->j", m.g_upper, partials(f, m.n))


def laplace_beltrami(m: BoundaryNormalMetric, f: Jet) -> Jet:
    """Laplace-Beltrami operator written in boundary normal coordinates.

    ``d_n^2 f + Gamma^a_{an} d_n f + g^{ab} d_a d_b f + (g^{ab} Gamma^c_{ca} + d_a g^{ab}) d_b f``
    with Greek indices tangential.
    """
    n = m.n
    t = n - 1
    gam = m.gamma
    h = m.tangential
    df = partials(f, n)
    ddf = partials(df, n)
    out = ddf[t, t] + _lin("aa->", gam[:t, :t, t]) * df[t]
    out = out + jets.einsum("ab,ab->", h, ddf[:t, :t])
    trace_gam = _lin("cca->a", gam[:t, :t, :t])
    div_h = _lin("aba->b", partials(h, t))
    coeff = jets.einsum("ab,a->b", h, trace_gam) + div_h
    return out + jets.einsum("b,b->", coeff, df[:t])


def divergence(m: BoundaryNormalMetric, w: Jet) -> Jet:
    """``div w = d_k w^k + Gamma^k_{kl} w^l``."""
    dw = partials(w, m.n)
    return _lin("kk->", dw) + jets.einsum("l,l->", _lin("kkl->l", m.gamma), w)


def covariant_derivative_vector(m: BoundaryNormalMetric, w: Jet) -> Jet:
    """``D[j, k] = nabla_k w^j = d_k w^j + Gamma^j_{kl} w^l``."""
    return partials(w, m.n) + jets.einsum("jkl,l->jk", m.gamma, w)


def hessian_lower(m: BoundaryNormalMetric, f: Jet) -> Jet:
    """``nabla_l nabla_k f = d_l d_k f - Gamma^m_{lk} d_m f``."""
    df = partials(f, m.n)
    return partials(df, m.n) - jets.einsum("mlk,m->lk", m.gamma, df)


def scalar_hessian(m: BoundaryNormalMetric, f: Jet) -> Jet:
    """Mixed Hessian ``H[j, k] = nabla^j nabla_k f``."""
    return m.g_upper @ hessian_lower(m, f)


def hessian_upper(m: BoundaryNormalMetric, f: Jet) -> Jet:
    """``nabla^j nabla^k f``."""
    return raise_both(m, hessian_lower(m, f))


def divergence_sym2(m: BoundaryNormalMetric, t: Jet) -> Jet:
    """``(div T)^j = nabla_k T^{jk}`` for a contravariant 2-tensor."""
    dt = partials(t, m.n)
    gam = m.gamma
    return (
        _lin("jkk->j", dt)
        + jets.einsum("jkl,lk->j", gam, t)
        + jets.einsum("kkl,jl->j", gam, t)
    )


def covariant_derivative_11(m: BoundaryNormalMetric, t: Jet) -> Jet:
    """``X[j, k, l] = nabla_l T^j_k`` for a (1,1)-tensor ``T[j, k]``."""
    gam = m.gamma
    return (
        partials(t, m.n)
        + jets.einsum("jla,ak->jkl", gam, t)
        - jets.einsum("alk,ja->jkl", gam, t)
    )


def second_covariant_vector(m: BoundaryNormalMetric, w: Jet) -> Jet:
    """``X[j, k, l] = nabla_l nabla_k w^j``."""
    return covariant_derivative_11(m, covariant_derivative_vector(m, w))


def bochner_laplacian(m: BoundaryNormalMetric, w: Jet) -> Jet:
    """Rough Laplacian ``nabla^k nabla_k w^j`` from raw covariant derivatives."""
    return jets.einsum("lk,jkl->j", m.g_upper, second_covariant_vector(m, w))


def sqrt_det_lower(m: BoundaryNormalMetric) -> Jet:
    """Riemannian volume density ``sqrt(det g_{jk})``."""
    return jets.sqrt(jets.det(m.g_lower))
