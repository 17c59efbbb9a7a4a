import math

import numpy as np
import pytest
from scipy import integrate

from conftest import direct_phases
from rieszlab.errors import ResourceExceeded
from rieszlab.freq import (
    SparseTrigPoly,
    collinear_centers,
    exp_polynomial,
    product_form,
    riesz_product_expand,
    z_polynomial,
)
from rieszlab.torus import (
    Builder,
    DyadicPoints,
    Method,
    QuadratureSpec,
    eval_at,
    evaluate,
    evaluate_dyadic,
    growth_profile,
    l1_norm,
    sup_norm,
)

# int_0^1 |cos 2 pi t| dt by adaptive quadrature, independent of the library
ABS_COS_MEAN = integrate.quad(lambda t: abs(math.cos(2 * math.pi * t)), 0, 1, points=[0.25, 0.75])[0]


def test_abs_cos_oracle():
    assert ABS_COS_MEAN == pytest.approx(2 / math.pi, abs=1e-12)


def test_eval_at_examples(rng):
    assert eval_at(SparseTrigPoly({(0, 0): 1}), (0.3, 0.9)) == 1
    p = SparseTrigPoly({(3, 0): 0.5, (-3, 0): 0.5})
    assert abs(eval_at(p, (1 / 12, 0.7))) < 1e-15
    cs = [(1, 0), (16, 0), (256, 0)]
    r = riesz_product_expand(cs)
    pts = rng.random((10, 2))
    want = product_form("riesz", direct_phases(cs, pts))
    got = np.array([eval_at(r, x).real for x in pts])
    np.testing.assert_allclose(got, want, atol=1e-12)


def test_norm_of_constant():
    est = l1_norm(SparseTrigPoly({(0, 0): 1}))
    assert est.value == 1 and est.error_bound == 0


@pytest.mark.parametrize("n", [1, 3, 10])
def test_norm_of_cosine(n):
    p = SparseTrigPoly({(n, 0): 0.5, (-n, 0): 0.5})
    est = l1_norm(p, QuadratureSpec.fixed_grid((4096, 2)))
    assert est.method is Method.GRID_EXACT
    assert abs(est.value - ABS_COS_MEAN) <= est.error_bound
    assert est.error_bound < 1e-2


@pytest.mark.parametrize("s", [1, 2, 3, 4])
def test_riesz_product_has_unit_norm(s):
    est = l1_norm(riesz_product_expand(collinear_centers(s, 4)))
    assert est.value == pytest.approx(1.0, abs=1e-12)


def test_riesz_product_2d_unit_norm():
    est = l1_norm(riesz_product_expand([(1, 1), (5, -7), (40, 33)]))
    assert est.value == pytest.approx(1.0, abs=1e-12)
    assert est.method is Method.GRID_EXACT


def test_streaming_rows_match_full_grid():
    poly = z_polynomial([(1, 2), (9, -7)])
    n1, n2 = 32, 16
    g = np.stack(np.meshgrid(np.arange(n1) / n1, np.arange(n2) / n2, indexing="ij"), -1).reshape(-1, 2)
    full = np.mean(np.abs(evaluate(poly, g)))
    est = l1_norm(poly, QuadratureSpec.fixed_grid((n1, n2)))
    assert est.value == pytest.approx(full, rel=1e-12)
    threaded = l1_norm(poly, QuadratureSpec.fixed_grid((n1, n2), workers=4))
    assert threaded.value == pytest.approx(full, rel=1e-12)


@pytest.mark.parametrize("s", [2, 3, 4])
def test_monte_carlo_agrees_with_grid(s):
    for poly in (z_polynomial([(1, 1), (7, -5), (60, 45), (500, -400)][:s]),
                 exp_polynomial(collinear_centers(s, 8))):
        grid = l1_norm(poly, QuadratureSpec(mode="auto"))
        mc = l1_norm(poly, QuadratureSpec.monte_carlo(200_000, seed=s))
        assert mc.method is Method.MONTE_CARLO and mc.rng_seed == s
        assert abs(grid.value - mc.value) <= grid.error_bound + mc.error_bound


def test_norm_bounds_triangle_and_coefficients():
    poly = z_polynomial([(1, 1), (7, -5), (60, 45)])
    est = l1_norm(poly)
    assert est.lower <= poly.coefficient_l1()
    assert all(est.upper >= abs(complex(c)) for c in poly.coeffs.values())


def test_huge_frequencies_keep_exact_phases():
    # scaling all centers by an integer preserves the joint law of the phases
    base = collinear_centers(4, 16)
    big = [c.scaled(3 * 2**90 + 1) for c in base]
    spec = QuadratureSpec.monte_carlo(100_000, seed=5)
    a = l1_norm(z_polynomial(base), spec)
    b = l1_norm(z_polynomial(big), spec)
    assert abs(a.value - b.value) <= a.error_bound + b.error_bound


def test_bigint_points_evaluate_like_floats(rng):
    poly = z_polynomial([(1, 3), (11, -20)])
    pts = DyadicPoints.random(50, 130, rng)
    np.testing.assert_allclose(
        evaluate_dyadic(poly, pts).real, evaluate(poly, pts.as_float()), atol=1e-9
    )


def test_resource_exceeded_without_fallback():
    poly = z_polynomial(collinear_centers(6, 64))
    spec = QuadratureSpec(max_grid_points=1 << 10, allow_mc_fallback=False)
    with pytest.raises(ResourceExceeded):
        l1_norm(poly, spec)


def test_auto_falls_back_to_monte_carlo():
    poly = z_polynomial([(1, 1), (700, 900)])
    est = l1_norm(poly, QuadratureSpec(max_grid_points=1 << 10, samples=20_000))
    assert est.method is Method.MONTE_CARLO


def test_sup_norm_of_riesz_product():
    est = sup_norm(riesz_product_expand(collinear_centers(3, 4)))
    assert est.value == pytest.approx(8.0)


def test_growth_profile_edges():
    rows = growth_profile(Builder.SYMMETRIC_Z, lambda s: collinear_centers(s, 16), [1],
                          QuadratureSpec.fixed_grid((8192, 2)))
    assert abs(rows[0].norm.value - ABS_COS_MEAN) <= rows[0].norm.error_bound
    rows = growth_profile("AsymmetricExp", lambda s: collinear_centers(s, 16), [1])
    assert rows[0].norm.value == 1.0


def test_growth_profile_deterministic():
    spec = QuadratureSpec.monte_carlo(20_000, seed=3)
    a = growth_profile("SymmetricZ", lambda s: collinear_centers(s, 16), [2, 3], spec)
    b = growth_profile("SymmetricZ", lambda s: collinear_centers(s, 16), [2, 3], spec)
    assert a == b
