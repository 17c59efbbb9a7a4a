from fractions import Fraction

import numpy as np
import pytest

from conftest import as_plain
from rieszlab.errors import BallAssignmentAmbiguous, GapExceeded, SampleOnSingularity
from rieszlab.freq import riesz_product_expand
from rieszlab.scheme import construct_scheme, rescale_to_integers, tamper
from rieszlab.symbols import MultiplierSymbol, get_symbol
from rieszlab.torus import QuadratureSpec, l1_norm
from rieszlab.witness import (
    WitnessParams,
    calibrate_c_hat,
    gap_bound,
    p_polynomial,
    reports_to_csv,
    witness_epsilon,
    witness_report,
    z_target,
)

C_HAT = 0.346


@pytest.fixture(scope="module")
def iia3():
    return rescale_to_integers(construct_scheme(get_symbol("logcos"), "IIa", 3, witness_epsilon(C_HAT, 3)))


@pytest.fixture(scope="module")
def iib3():
    return rescale_to_integers(construct_scheme(get_symbol("signed-logcos"), "IIb", 3, witness_epsilon(C_HAT, 3)))


def test_symbol_one_gives_riesz_product(iia3):
    p = p_polynomial(get_symbol("one"), iia3)
    # Lambda_s omits the origin, so P is the product with its constant removed
    want = as_plain(riesz_product_expand(iia3.frequencies).add_constant(-1))
    want = {q: v for q, v in want.items() if v != 0}
    got = as_plain(p)
    assert set(got) == set(want)
    for q, v in want.items():
        assert got[q] == pytest.approx(float(v), abs=1e-15)


def test_symbol_zero_gives_zero(iia3):
    p = p_polynomial(get_symbol("zero"), iia3)
    assert all(v == 0 for v in as_plain(p).values())


def test_singular_sample_propagates(iia3):
    # a symbol singular along the horizontal axis, which contains the first center
    axis = MultiplierSymbol("axis", lambda a, b: 1.0 / b, singular=lambda a, b: np.asarray(b) == 0)
    with pytest.raises(SampleOnSingularity):
        p_polynomial(axis, tamper(iia3, centers=((Fraction(1), Fraction(0)),) + iia3.centers[1:]))


def test_iia_coefficients_match_ideal_signs(iia3):
    p, z = p_polynomial(None, iia3), z_target(iia3)
    for q, v in as_plain(z).items():
        assert abs(p.coeff(q) - complex(v)) < iia3.epsilon


def test_iib_target_is_half_the_asymmetric_sum(iib3):
    z = z_target(iib3)
    # every coefficient is 2^-chi on the positive balls and absent elsewhere
    assert set(as_plain(z).values()) <= {Fraction(1, 2**k) for k in range(1, 4)}
    p = p_polynomial(None, iib3)
    assert gap_bound(iib3, p, z).ok


def test_ambiguous_ball_assignment_raises(iia3):
    # radii so large that neighbouring balls overlap
    big = tamper(iia3, radii=tuple(Fraction(abs(c[0]) + abs(c[1])) for c in iia3.frequencies))
    with pytest.raises(BallAssignmentAmbiguous):
        z_target(big)


def test_gap_bound_value():
    sch = rescale_to_integers(construct_scheme(get_symbol("logcos"), "IIa", 3, 0.01))
    z = z_target(sch)
    rep = gap_bound(sch, p_polynomial(None, sch), z)
    assert rep.bound == pytest.approx(0.27)
    assert rep.measured <= rep.bound


def test_gap_exceeded_for_foreign_symbol(iia3):
    z = z_target(iia3)
    with pytest.raises(GapExceeded):
        gap_bound(iia3, p_polynomial(get_symbol("gaussian"), iia3), z)
    assert not gap_bound(iia3, p_polynomial(get_symbol("gaussian"), iia3), z, strict=False).ok


def test_calibrated_c_hat():
    assert calibrate_c_hat() == pytest.approx(2.0748 / 6, rel=2e-3)


@pytest.fixture(scope="module")
def small_reports():
    params = WitnessParams(c_hat=C_HAT, torus_samples=60_000, plane_samples=30_000, seed=7)
    return witness_report("logcos", "IIa", [2, 3], params)


def test_report_sandwich(small_reports):
    for r in small_reports:
        assert r.certified
        assert r.p_norm_lower <= r.p_direct.value + r.p_direct.error_bound
        assert r.h_norm_upper.value >= r.h_norm.value
        assert r.ratio == pytest.approx(r.p_norm_lower / r.h_norm_upper.value)
        assert r.seed == 7 + r.s


def test_report_is_deterministic(small_reports):
    params = WitnessParams(c_hat=C_HAT, torus_samples=60_000, plane_samples=30_000, seed=7, workers=2)
    again = witness_report("logcos", "IIa", [2, 3], params)
    assert reports_to_csv(again) == reports_to_csv(small_reports)
    assert [r.to_dict() for r in again] == [r.to_dict() for r in small_reports]


def test_gaussian_control_stays_bounded():
    params = WitnessParams(c_hat=C_HAT, torus_samples=60_000, plane_samples=30_000, scheme_symbol="logcos")
    for r in witness_report("gaussian", "IIa", [2, 3], params):
        assert not r.certified
        assert r.p_direct.value <= 2.0


def test_direct_norm_of_p_close_to_z(iia3):
    spec = QuadratureSpec.monte_carlo(50_000, seed=1)
    p = l1_norm(p_polynomial(None, iia3), spec)
    z = l1_norm(z_target(iia3), spec)
    assert abs(p.value - z.value) <= 3 ** 3 * iia3.epsilon
