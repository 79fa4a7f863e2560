import numpy as np
import pytest
import sympy as sp_
from hypothesis import given
from hypothesis import strategies as st

from stokesdtn import jets
from stokesdtn.geometry import (
    BoundaryNormalMetric,
    MetricError,
    bochner_laplacian,
    christoffel,
    covariant_derivative_vector,
    divergence,
    gradient_vector,
    hessian_lower,
    laplace_beltrami,
    lower_metric,
    partials,
    ricci,
    scalar_hessian,
    sqrt_det_lower,
)
from stokesdtn.jets import JetSpace

from conftest import flat_metric, random_metric

seeds = st.integers(0, 2**32 - 1)


def close(a, b, tol):
    o = min(a.order, b.order)
    scale = max(a.with_order(o).max_abs(), b.with_order(o).max_abs(), 1.0)
    return (a.with_order(o) - b.with_order(o)).max_abs() <= tol * scale


# -- metric construction ------------------------------------------------------


def test_lower_metric_identity():
    m = flat_metric(3, 3)
    assert (lower_metric(m) - m.space.identity(3)).max_abs() == 0


def test_lower_metric_geometric_series():
    sp = JetSpace(2, 2)
    x2 = sp.variable(1)
    m = BoundaryNormalMetric.from_tangential((1 + x2) * np.eye(1), sp.constant(1.0))
    g = lower_metric(m)
    assert g[0, 0].to_dict() == {(0, 0): 1, (0, 1): -1, (0, 2): 1}
    assert g[1, 1].to_dict() == {(0, 0): 1}


@given(seeds, st.sampled_from([2, 3]))
def test_lower_metric_multiply_back(seed, n):
    m = random_metric(n, 4, seed)
    assert close(m.g_upper @ m.g_lower, m.space.identity(n), 1e-12)


def test_validation_rejects_bad_metrics():
    sp = JetSpace(2, 2)
    with pytest.raises(MetricError):
        BoundaryNormalMetric.from_tangential(-1.0 * sp.identity(1), sp.constant(1.0))
    with pytest.raises(MetricError):
        BoundaryNormalMetric.from_tangential(sp.identity(1), sp.constant(-1.0))
    g = sp.identity(2).coeffs.copy()
    g[0, 1, 0] = g[1, 0, 0] = 0.1
    with pytest.raises(MetricError):
        BoundaryNormalMetric(jets.Jet(sp, g), sp.constant(1.0))


# -- Christoffel and Ricci ------------------------------------------------------


def test_christoffel_flat_is_zero():
    assert christoffel(flat_metric(3, 3)).max_abs() == 0


def test_christoffel_example():
    # g_11 = 1 + 2 x_2, so Gamma^1_{12} = 1/2 g^{11} d_2 g_11 = 1 at the base point
    sp = JetSpace(2, 3)
    h = jets.reciprocal(1 + 2 * sp.variable(1)) * np.eye(1)
    gam = christoffel(BoundaryNormalMetric.from_tangential(h, sp.constant(1.0)))
    assert gam[0, 0, 1].value == pytest.approx(1.0, abs=1e-14)
    assert gam[0, 1, 0].value == pytest.approx(1.0, abs=1e-14)


@given(seeds, st.sampled_from([2, 3]))
def test_christoffel_symmetric_and_boundary_normal(seed, n):
    m = random_metric(n, 4, seed)
    gam = m.gamma
    assert (gam - gam.transpose(0, 2, 1)).max_abs() < 1e-14
    N = n - 1
    # Gamma^n_{nk} = Gamma^k_{nn} = 0
    assert gam[N, N, :].max_abs() < 1e-15
    assert gam[:, N, N].max_abs() < 1e-15


def sympy_ricci(g, coords):
    """Covariant Ricci tensor of a sympy metric matrix (independent implementation)."""
    n = len(coords)
    ginv = g.inv()
    gam = [[[sum(ginv[a, d] * (sp_.diff(g[d, b], coords[c]) + sp_.diff(g[d, c], coords[b])
                               - sp_.diff(g[b, c], coords[d])) for d in range(n)) / 2
             for c in range(n)] for b in range(n)] for a in range(n)]
    ric = sp_.zeros(n, n)
    for b in range(n):
        for c in range(n):
            ric[b, c] = sum(
                sp_.diff(gam[a][b][c], coords[a]) - sp_.diff(gam[a][b][a], coords[c])
                + sum(gam[a][a][d] * gam[d][b][c] - gam[a][c][d] * gam[d][b][a] for d in range(n))
                for a in range(n)
            )
    return ric


def test_ricci_round_sphere_against_sympy():
    # unit sphere, geodesic distance to the equator-parallel r0 as normal coordinate
    K = 5
    r0 = sp_.Rational(1)
    x1, x2 = sp_.symbols("x1 x2")
    g_sym = sp_.diag(sp_.sin(r0 + x2) ** 2, 1)
    ric_sym = sp_.simplify(sympy_ricci(g_sym, [x1, x2]))
    g11_upper = sp_.series(1 / sp_.sin(r0 + x2) ** 2, x2, 0, K + 1).removeO()
    sp = JetSpace(2, K)
    h = sp.from_dict({(0, k): float(g11_upper.coeff(x2, k)) for k in range(K + 1)}) * np.eye(1)
    m = BoundaryNormalMetric.from_tangential(h, sp.constant(1.0))
    ric = ricci(m)
    assert ric.order == K - 2
    for a in range(2):
        for b in range(2):
            series = sp_.series(ric_sym[a, b], x2, 0, K - 1).removeO()
            for k in range(K - 1):
                assert complex(ric[a, b].coefficient((0, k))).real == pytest.approx(
                    float(series.coeff(x2, k)), abs=1e-11
                )
    # constant curvature one: R_kl = g_kl
    np.testing.assert_allclose(ric.value, m.g_lower.value, atol=1e-12)


@given(seeds, st.sampled_from([2, 3]))
def test_ricci_symmetric(seed, n):
    r = ricci(random_metric(n, 4, seed))
    assert (r - r.T).max_abs() < 1e-13


def test_ricci_flat_is_zero():
    assert ricci(flat_metric(3, 3)).max_abs() == 0


# -- differential operators -------------------------------------------------------


def test_laplace_beltrami_flat_examples():
    m = flat_metric(2, 3)
    x1, x2 = m.space.variable(0), m.space.variable(1)
    assert laplace_beltrami(m, x1 * x1).to_dict() == {(0, 0): 2}
    assert laplace_beltrami(m, x1 * x2).max_abs() == 0


def divergence_form_laplacian(m, f):
    vol = sqrt_det_lower(m)
    flux = vol * gradient_vector(m, f)
    return jets.reciprocal(vol) * sum(jets.partial(flux[k], k) for k in range(m.n))


@given(seeds, st.sampled_from([2, 3]))
def test_laplace_beltrami_matches_divergence_form(seed, n):
    m = random_metric(n, 5, seed)
    f = m.space.random(np.random.default_rng(seed + 1))
    assert close(laplace_beltrami(m, f), divergence_form_laplacian(m, f), 1e-11)


def test_divergence_flat_examples():
    m = flat_metric(3, 3)
    sp = m.space
    w = jets.stack([sp.variable(0), sp.zeros(), sp.zeros()])
    assert divergence(m, w).to_dict() == {(0, 0, 0): 1}
    assert divergence(m, sp.constant(np.array([1.0, 2.0, 3.0]))).max_abs() == 0


@given(seeds, st.sampled_from([2, 3]))
def test_divergence_matches_volume_form(seed, n):
    m = random_metric(n, 5, seed)
    w = m.space.random(np.random.default_rng(seed + 2), (n,))
    vol = sqrt_det_lower(m)
    expected = jets.reciprocal(vol) * sum(jets.partial(vol * w[k], k) for k in range(n))
    assert close(divergence(m, w), expected, 1e-11)


def test_scalar_hessian_flat_and_constant(rng):
    m = flat_metric(3, 4)
    f = m.space.random(rng)
    second = partials(partials(f, 3), 3)
    assert (scalar_hessian(m, f) - second).max_abs() < 1e-15
    assert scalar_hessian(random_metric(3, 4, 1), m.space.constant(2.0)).max_abs() == 0


@given(seeds, st.sampled_from([2, 3]))
def test_scalar_hessian_trace_is_laplacian(seed, n):
    m = random_metric(n, 5, seed)
    f = m.space.random(np.random.default_rng(seed + 3))
    assert close(scalar_hessian(m, f).trace(), laplace_beltrami(m, f), 1e-11)


def test_covariant_derivative_examples(rng):
    m = flat_metric(2, 3)
    w = m.space.random(rng, (2,))
    assert (covariant_derivative_vector(m, w) - partials(w, 2)).max_abs() == 0
    pos = jets.stack([m.space.variable(0), m.space.variable(1)])
    assert (covariant_derivative_vector(m, pos) - m.space.identity(2)).max_abs() == 0


@given(seeds, st.sampled_from([2, 3]))
def test_covariant_derivative_contraction_is_divergence(seed, n):
    m = random_metric(n, 4, seed)
    w = m.space.random(np.random.default_rng(seed + 4), (n,))
    assert close(covariant_derivative_vector(m, w).trace(), divergence(m, w), 1e-12)


# -- identities --------------------------------------------------------------------


@given(seeds, st.sampled_from([2, 3]))
def test_metric_compatibility(seed, n):
    m = random_metric(n, 5, seed)
    g, gam = m.g_lower, m.gamma
    dg = partials(g, n)  # dg[k, l, j] = d_j g_kl
    nabla = dg - jets.einsum("mjk,ml->klj", gam, g) - jets.einsum("mjl,km->klj", gam, g)
    assert nabla.order == 4
    assert nabla.max_abs() < 1e-12


@given(seeds, st.sampled_from([2, 3]))
def test_contracted_christoffel_identity(seed, n):
    m = random_metric(n, 5, seed)
    t = n - 1
    lhs = sum(m.gamma[a, t, a] for a in range(t))
    h_up, h_low = m.tangential, m.g_lower[:t, :t]
    via_lower = 0.5 * jets.einsum("ab,ab->", h_up, jets.partial(h_low, t))
    via_upper = -0.5 * jets.einsum("ab,ab->", h_low, jets.partial(h_up, t))
    assert close(lhs, via_lower, 1e-11)
    assert close(lhs, via_upper, 1e-11)


@given(seeds, st.sampled_from([2, 3]))
def test_trace_of_metric_product(seed, n):
    m = random_metric(n, 5, seed)
    t = n - 1
    tr = jets.einsum("ab,ab->", m.g_lower[:t, :t], m.tangential)
    assert close(tr, m.space.constant(float(t)), 1e-12)


@given(seeds, st.sampled_from([2, 3]))
def test_hessian_lower_symmetric(seed, n):
    m = random_metric(n, 4, seed)
    hl = hessian_lower(m, m.space.random(np.random.default_rng(seed)))
    assert (hl - hl.T).max_abs() < 1e-13


@given(seeds, st.sampled_from([2, 3]))
def test_bochner_identity_on_gradients(seed, n):
    """nabla^k nabla_k grad f = grad(Delta f) + Ric(grad f)."""
    m = random_metric(n, 6, seed)
    f = m.space.random(np.random.default_rng(seed + 5))
    w = gradient_vector(m, f)
    lhs = bochner_laplacian(m, w)
    ric_mixed = jets.einsum("jk,kl->jl", m.g_upper, ricci(m))
    rhs = gradient_vector(m, laplace_beltrami(m, f)) + jets.einsum("jl,l->j", ric_mixed, w)
    assert close(lhs, rhs, 1e-11)


def test_bochner_flat_is_componentwise(rng):
    m = flat_metric(3, 4)
    w = m.space.random(rng, (3,))
    expected = jets.stack([laplace_beltrami(m, w[j]) for j in range(3)])
    assert (bochner_laplacian(m, w) - expected).max_abs() < 1e-14


@given(seeds, st.sampled_from([2, 3]))
def test_bochner_coordinate_expansion(seed, n):
    """Rough Laplacian against Delta_g w^j - Ric(w)^j + Christoffel corrections."""
    m = random_metric(n, 6, seed)
    w = m.space.random(np.random.default_rng(seed + 6), (n,))
    g, gam = m.g_upper, m.gamma
    lap = jets.stack([laplace_beltrami(m, w[j]) for j in range(n)])
    ric_w = jets.einsum("jl,l->j", jets.einsum("jk,kl->jl", g, ricci(m)), w)
    dw = partials(w, n)  # dw[m, l] = d_l w^m
    dgam = partials(gam, n)  # dgam[j, k, l, m] = d_m Gamma^j_{kl}
    first = 2.0 * jets.einsum("kl,jmkl->j", g, jets.einsum("jmk,ml->jmkl", gam, dw))
    second = jets.einsum("jm,m->j", jets.einsum("kl,jklm->jm", g, dgam), w)
    assert close(bochner_laplacian(m, w), lap - ric_w + first + second, 1e-11)
