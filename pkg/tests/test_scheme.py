import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rieszlab.errors import ConfigError, ConstructionFailed, ScaleOverflow
from rieszlab.freq import build_lambda_set
from rieszlab.scheme import (
    Case,
    IntegerScheme,
    LacunaryScheme,
    construct_scheme,
    lambda_slope_max,
    rescale_to_integers,
    scheme_from_json,
    tamper,
    verify_conditions,
)
from rieszlab.symbols import CATALOG


@pytest.fixture(scope="module")
def logcos3():
    return construct_scheme(CATALOG["logcos"], "IIa", 3, 0.1)


@pytest.mark.parametrize("name, case", [("logcos", "IIa"), ("signed-logcos", "IIb")])
@pytest.mark.parametrize("s", [1, 2, 3, 4, 5])
def test_constructed_schemes_verify(name, case, s):
    sc = construct_scheme(CATALOG[name], case, s, 0.1)
    rep = verify_conditions(sc)
    assert rep.passed, rep.failures()
    assert lambda_slope_max(sc) <= Fraction(1, 2 * 3**s)
    # the printed orientations are informational and cannot hold for s >= 2
    assert rep["D_literal"].ok == (s == 1)
    assert rep["I_literal"].ok == (s == 1)


def test_logcos_centers_near_dyadic_axis(logcos3):
    m = CATALOG["logcos"]
    for k, (c, r) in enumerate(zip(logcos3.centers, logcos3.radii), start=1):
        assert c[1] > 0 and c[1] / c[0] <= Fraction(1, 3**5 * 3)
        j = -math.log2(c[0])
        assert j == int(j)
        assert m.at(c) == pytest.approx((-1) ** k, abs=1e-9)
        assert m.at((-c[0], -c[1])) == pytest.approx((-1) ** k, abs=1e-9)


def test_construction_is_deterministic():
    a = construct_scheme(CATALOG["logcos"], "IIa", 4, 0.05)
    b = construct_scheme(CATALOG["logcos"], "IIa", 4, 0.05)
    assert a == b and a.to_json() == b.to_json()


def test_gaussian_fails_at_depth_one():
    with pytest.raises(ConstructionFailed) as info:
        construct_scheme(CATALOG["gaussian"], "IIa", 3, 0.1)
    assert info.value.depth == 1


def test_small_budget_fails():
    # the first exponent tried has the wrong parity for k = 1 when s = 1
    with pytest.raises(ConstructionFailed) as info:
        construct_scheme(CATALOG["logcos"], "IIa", 1, 0.1, sampler_budget=1, start_exponent=20)
    assert info.value.condition == "A"


@pytest.mark.parametrize("kw", [{"N": 0}, {"epsilon": 0.0}, {"s": 0}])
def test_parameter_validation(kw):
    args = dict(symbol=CATALOG["logcos"], case="IIa", s=2, epsilon=0.1, N=8)
    args.update(kw)
    with pytest.raises(ConfigError):
        construct_scheme(**args)


def test_s1_vacuous_conditions():
    sc = construct_scheme(CATALOG["logcos"], "IIa", 1, 0.1)
    rep = verify_conditions(sc)
    for letter in "BDFHI":
        assert rep[letter].ok and rep[letter].index is None


# --- tampering -------------------------------------------------------------


def _tampers(sc):
    c, r = list(sc.centers), list(sc.radii)
    p = 0
    while (4**p * c[0][0]) * 256 < r[1]:
        p += 1
    return {
        # target: (changes, expected failure set, index of the target)
        "A": ({"symbol": sc.symbol.affine(-1.0, 0.0, "neg")}, {"A"}, 1),
        "B": ({"radii": (r[0], r[0], r[2])}, {"B", "D", "I"}, 1),
        "D": ({"centers": ((c[0][0] * 4**p, c[0][1] * 4**p), c[1], c[2])}, {"D"}, 1),
        "E": ({"centers": (c[0], c[1], (c[2][0], c[2][0] / 2))}, {"E"}, 3),
        "F": (
            {"centers": (c[0], (c[0][0] * 128, c[0][1] * 128), c[2]), "radii": (r[0], r[0] * 128, r[2])},
            {"B", "D", "F", "H", "I"},
            1,
        ),
        "G": ({"centers": (c[0], c[1], (c[2][0], r[2]))}, {"G"}, 3),
        "H": ({"centers": (c[0], (c[1][0], c[0][1] * 2), c[2]), "radii": (r[0], r[0], r[2])}, {"B", "D", "H", "I"}, 1),
        "I": ({"centers": (c[0], (c[1][0] * 4**6, c[1][1] * 4**6), c[2])}, {"D", "I"}, 3),
    }


@pytest.mark.parametrize("target", list("ABDEFGHI"))
def test_single_condition_tamper(logcos3, target):
    changes, expected, index = _tampers(logcos3)[target]
    rep = verify_conditions(tamper(logcos3, **changes))
    assert not rep[target].ok and rep[target].index == index
    assert rep.failures() == expected


def test_tamper_c_float_coordinate(logcos3):
    bad = tamper(logcos3)
    object.__setattr__(bad, "centers", (logcos3.centers[0], (float(logcos3.centers[1][0]), logcos3.centers[1][1]), logcos3.centers[2]))
    rep = verify_conditions(bad)
    assert rep.failures() == {"C"} and rep["C"].index == 2


def test_tamper_center_on_axis(logcos3):
    c = logcos3.centers
    rep = verify_conditions(tamper(logcos3, centers=(c[0], c[1], (Fraction(0), c[2][1]))))
    assert not rep["G"].ok


def test_tamper_equal_radii_flags_b(logcos3):
    r = logcos3.radii
    rep = verify_conditions(tamper(logcos3, radii=(r[1], r[1], r[2])))
    assert not rep["B"].ok and rep["B"].index == 1


@settings(max_examples=40, deadline=None)
@given(
    k=st.integers(0, 2),
    i=st.integers(0, 1),
    shift=st.integers(-40, 40),
    rshift=st.integers(-40, 40),
)
def test_d_and_g_imply_b_f_h_i(logcos3, k, i, shift, rshift):
    c = [list(p) for p in logcos3.centers]
    c[k][i] = c[k][i] * Fraction(2) ** shift
    r = list(logcos3.radii)
    r[k] = r[k] * Fraction(2) ** rshift
    rep = verify_conditions(tamper(logcos3, centers=tuple(map(tuple, c)), radii=tuple(r)))
    if rep["D"].ok and rep["G"].ok:
        assert rep["B"].ok and rep["F"].ok and rep["H"].ok and rep["I"].ok


# --- rescaling and serialization -------------------------------------------


def _manual_scheme(centers, radii, s=2):
    return LacunaryScheme(
        s=s, centers=centers, radii=radii, epsilon=0.1, N=1, case="IIa", symbol_id="logcos", a=1.0, b=-1.0
    )


def test_rescale_lcm_example():
    sc = _manual_scheme([(Fraction(3, 4), Fraction(1, 8)), (Fraction(5, 2), Fraction(1, 16))], [Fraction(1, 64), Fraction(1, 32)])
    ig = rescale_to_integers(sc)
    assert ig.scale == 16
    assert ig.frequencies == ((12, 2), (40, 1))
    assert ig.radii == (Fraction(1, 4), Fraction(1, 2))


def test_rescale_identity_for_integers():
    sc = _manual_scheme([(3, 1), (300, 7)], [Fraction(1, 2), 5])
    ig = rescale_to_integers(sc)
    assert ig.scale == 1 and ig.frequencies == ((3, 1), (300, 7))


def test_rescale_overflow(logcos3):
    with pytest.raises(ScaleOverflow):
        rescale_to_integers(logcos3, max_scale_bits=32)


@pytest.mark.parametrize("s", [2, 3, 4])
def test_integer_scheme_properties(s):
    sc = construct_scheme(CATALOG["logcos"], "IIa", s, 0.1)
    ig = rescale_to_integers(sc)
    assert all(int(x) == x * 1 and x == int(x) for c in ig.centers for x in c)
    assert all(math.hypot(*map(float, c)) >= 1 for c in ig.centers)
    assert verify_conditions(sc).results == verify_conditions(ig).results
    lam = build_lambda_set(ig.frequencies)  # unique representations or it raises
    assert len(lam) == 3**s - 1
    assert lam.min_separation() >= 1
    # the rescaled companion symbol agrees with the rational one
    q = ig.frequencies[-1]
    assert ig.scaled_symbol.at(q) == pytest.approx(sc.symbol.at(sc.centers[-1]))


def test_json_round_trip(logcos3):
    ig = rescale_to_integers(logcos3)
    for obj in (logcos3, ig):
        back = scheme_from_json(obj.to_json())
        assert back == obj and type(back) is type(obj)
        assert back.to_json() == obj.to_json()
        assert verify_conditions(back).passed
    assert isinstance(scheme_from_json(ig.to_json()), IntegerScheme)


def test_case_parse():
    assert Case.parse("iia") is Case.IIA
    with pytest.raises(ConfigError):
        Case.parse("III")
