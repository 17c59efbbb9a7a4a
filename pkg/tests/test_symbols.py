import math
from fractions import Fraction

import numpy as np
import pytest
from scipy import integrate

from rieszlab.errors import ConfigError, SampleOnSingularity
from rieszlab.symbols import (
    CATALOG,
    GAUSSIAN_PROFILE,
    RadialCase,
    classify_radial,
    deleeuw_sample,
    extrapolate_to_zero,
    get_symbol,
    parse_expression,
    sup_norm_probe,
)


@pytest.mark.parametrize(
    "text, x, y, want",
    [
        ("x + y * 2", 1.0, 3.0, 7.0),
        ("-x^2", 3.0, 0.0, -9.0),
        ("|x - y| / 2", 1.0, 5.0, 2.0),
        ("exp(-(x*x+y*y))", 0.0, 0.0, 1.0),
        ("cos(pi * log2(|x|))", 0.25, 7.0, 1.0),
        ("2 ** 3 - 1e1", 0.0, 0.0, -2.0),
    ],
)
def test_expression_grammar(text, x, y, want):
    assert parse_expression(text)(np.array(x), np.array(y)) == pytest.approx(want)


@pytest.mark.parametrize("bad", ["x +", "foo(x)", "(x", "x $ y", "|x"])
def test_expression_errors(bad):
    with pytest.raises(ConfigError):
        parse_expression(bad)


def test_gaussian_is_star_with_constant_omega():
    c = classify_radial(CATALOG["gaussian"])
    assert c.case is RadialCase.STAR
    assert c.omega_constant
    assert np.allclose(c.omega, 1.0, atol=1e-3)


def test_riesz_symbol_star_with_nonconstant_omega():
    c = classify_radial(CATALOG["riesz1"])
    assert c.case is RadialCase.STAR
    assert c.bonami_poornima_obstruction
    np.testing.assert_allclose(c.omega, np.cos(c.omega_directions), atol=1e-12)


def test_logcos_is_case_iia():
    c = classify_radial(CATALOG["logcos"])
    assert c.case is RadialCase.IIA
    assert c.direction == (1.0, 0.0)
    assert (c.a, c.b) == (pytest.approx(1.0), pytest.approx(-1.0))
    # dyadic sampling oracle: m(2^-k, delta) ~ (-1)^k
    m = CATALOG["logcos"]
    for k in range(1, 12):
        assert m.at((2.0**-k, 1e-9)) == pytest.approx((-1) ** k)


def test_signed_logcos_is_case_iib():
    c = classify_radial(CATALOG["signed-logcos"])
    assert c.case is RadialCase.IIB
    assert sorted([c.a, c.b]) == [pytest.approx(0.0), pytest.approx(1.0)]


@pytest.mark.parametrize("sym", ["gaussian", "one", "exp(-(x*x+y*y)) * 3 + 1"])
def test_continuous_symbols_have_constant_omega(sym):
    c = classify_radial(get_symbol(sym))
    assert c.case is RadialCase.STAR and c.omega_constant


@pytest.mark.parametrize("sym", ["riesz1", "riesz12"])
def test_homogeneous_omega_scale_invariant(sym):
    a = classify_radial(CATALOG[sym], scale_depth=20)
    b = classify_radial(CATALOG[sym], scale_depth=24)
    np.testing.assert_allclose(a.omega, b.omega, atol=1e-3)


def test_gaussian_profile_constants():
    f = lambda r: math.exp(-math.pi * r * r)
    mass = integrate.quad(lambda r: 2 * math.pi * r * f(r), 0, np.inf)[0]
    grad = integrate.quad(lambda r: 2 * math.pi * r * (2 * math.pi * r * f(r)), 0, np.inf)[0]
    assert GAUSSIAN_PROFILE.ft_at_zero == pytest.approx(mass, rel=1e-10)
    assert GAUSSIAN_PROFILE.grad_l1 == pytest.approx(grad, rel=1e-10)


def test_probe_constant_symbol():
    rows = sup_norm_probe(CATALOG["one"], (1.0, 0.0))
    assert rows[-1].lam == 0.0 and rows[-1].ratio == 1.0
    assert extrapolate_to_zero(rows) == pytest.approx(1.0, abs=1e-3)


def test_probe_monotone_and_bounded():
    m = get_symbol("-sign(x)")
    rows = sup_norm_probe(m, (2.0, 1.0))
    ratios = [r.ratio for r in rows]  # lambda decreasing
    assert all(a <= b + 1e-15 for a, b in zip(ratios, ratios[1:]))
    assert max(ratios) <= 1.0
    assert ratios[-1] == 1.0
    assert ratios[-2] > 0.98


def test_deleeuw_constant_and_gaussian():
    assert set(deleeuw_sample(CATALOG["one"], 1, 2).values()) == {1}
    vals = deleeuw_sample(CATALOG["gaussian"], 1, 2)
    assert len(vals) == 25
    for n, v in vals.items():
        assert v == pytest.approx(math.exp(-(n.k1**2 + n.k2**2)))


def test_deleeuw_singularity():
    with pytest.raises(SampleOnSingularity):
        deleeuw_sample(CATALOG["logcos"], 1, [(0, 3)])
    with pytest.raises(SampleOnSingularity):
        deleeuw_sample(CATALOG["riesz1"], 1, 1)


def test_deleeuw_commutes_with_rescaling():
    m = CATALOG["logcos"]
    window = [(3, 1), (-5, 2), (40, -7)]
    a = deleeuw_sample(m.rescaled(8), 1, window)
    b = deleeuw_sample(m, Fraction(1, 8), window)
    for n in a:
        assert a[n] == pytest.approx(b[n], abs=1e-14)
