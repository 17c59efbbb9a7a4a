"""Assembly of the unboundedness witness for an oscillating symbol.

For each ``s`` the pipeline is: rational scheme -> integer scheme -> ``H^theta``
with theta from :func:`theta_search` -> torus polynomials ``P`` (symbol samples
times ``H`` on Lambda_s) and ``Z`` (ideal signs) -> the certified chain::

    ||P||_1 >= ||Z||_1 - ||Z - P||_1 >= ||Z||_1 - eps 3^s

set against the upper bound ``||F^-1 H|| + ||F^-1((xi2/xi1) H)||`` for the
Sobolev norm of the test function.  The passage from ``||P||_{L^1(T^2)}`` to
the plane (deLeeuw's restriction theorem) is assumed, not recomputed.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Sequence

from .errors import BallAssignmentAmbiguous, GapExceeded, RieszLabError
from .freq import SparseTrigPoly, build_lambda_set, collinear_centers, exp_polynomial, z_polynomial
from .kernels import PlaneFunction, ThetaChoice, h_theta, inv_ft_l1, theta_search
from .scheme import Case, IntegerScheme, construct_scheme, rescale_to_integers
from .symbols import MultiplierSymbol, deleeuw_sample, get_symbol
from .torus import Builder, Method, NormEstimate, QuadratureSpec, growth_profile, l1_norm

DELEEUW_NOTE = (
    "The step from ||P||_{L1(T2)} to the plane norm of T_m h is deLeeuw's restriction "
    "theorem, used as an assumption; T_m h itself is never computed."
)


def p_polynomial(symbol: MultiplierSymbol | None, scheme: IntegerScheme, h: PlaneFunction | None = None) -> SparseTrigPoly:
    """``P = sum_q m(q) H(q) e(<q, .>)`` over Lambda_s.

    ``symbol`` lives in the rational frame of the scheme (default: the
    scheme's normalized symbol) and is sampled at ``q / scale``.
    """
    symbol = scheme.symbol if symbol is None else symbol
    lam = build_lambda_set(scheme.frequencies)
    samples = deleeuw_sample(symbol, Fraction(1, scheme.scale), list(lam.elements))
    coeffs = {}
    for q, p in lam.elements.items():
        hq = Fraction(1, 2**p.chi) if h is None else h.at(q)
        val = samples[q] * complex(hq)
        coeffs[q] = val.real if val.imag == 0 else val
    return SparseTrigPoly(coeffs, basis=lam.centers, zetas=lam.zetas())


def _in_ball(q, center, r: Fraction) -> bool:
    d1 = q[0] - center[0]
    d2 = q[1] - center[1]
    return d1 * d1 + d2 * d2 <= r * r


def z_target(scheme: IntegerScheme, case: Case | str | None = None) -> SparseTrigPoly:
    """The ideal coefficients ``a(p)`` read off the ball each Lambda_s point lies in.

    IIa: ``(-1)^k H(p)`` on ``B(+-c^k, r_k)``; IIb: ``H(p)`` on ``B(c^k, r_k)``
    and 0 on ``B(-c^k, r_k)``.  The result is checked against the builders:
    ``z_polynomial`` with signs ``(-1)^k`` (IIa) and ``exp_polynomial / 2``
    (IIb; ``H(p) = 2^-chi`` while the asymmetric sum carries ``2^-(chi-1)``).
    """
    case = Case.parse(case if case is not None else scheme.case)
    freqs = scheme.frequencies
    lam = build_lambda_set(freqs)
    coeffs = {}
    for q, p in lam.elements.items():
        hits = []
        for k, (c, r) in enumerate(zip(freqs, scheme.radii), start=1):
            if _in_ball(q, c, r):
                hits.append((k, +1))
            if _in_ball(q, (-c[0], -c[1]), r):
                hits.append((k, -1))
        if len(hits) > 1:
            raise BallAssignmentAmbiguous(f"{tuple(q)} lies in the balls {hits}")
        if not hits:
            continue
        k, side = hits[0]
        h = Fraction(1, 2**p.chi)
        if case is Case.IIA:
            coeffs[q] = (-1) ** k * h
        elif side > 0:
            coeffs[q] = h
    z = SparseTrigPoly(coeffs, basis=lam.centers, zetas=lam.zetas())
    if case is Case.IIA:
        ref = z_polynomial(lam, [(-1) ** k for k in range(1, len(freqs) + 1)])
    else:
        ref = exp_polynomial(lam).scale(Fraction(1, 2))
    if dict(z.items()) != dict(ref.items()):
        raise BallAssignmentAmbiguous("ball assignment disagrees with the Riesz-sum builder")
    return z


@dataclass(frozen=True)
class GapReport:
    bound: float
    measured: float

    @property
    def ok(self) -> bool:
        return self.measured <= self.bound


def gap_bound(scheme: IntegerScheme, P: SparseTrigPoly, Z: SparseTrigPoly, strict: bool = True) -> GapReport:
    """``eps 3^s`` together with the exact coefficient distance ``sum |P_q - Z_q|``."""
    bound = scheme.epsilon * 3**scheme.s
    keys = set(P.coeffs) | set(Z.coeffs)
    measured = float(sum(abs(P.coeff(q) - Z.coeff(q)) for q in keys))
    rep = GapReport(bound, measured)
    if strict and not rep.ok:
        raise GapExceeded(f"sum |P - Z| = {measured:.6g} exceeds eps 3^s = {bound:.6g}")
    return rep


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


def calibrate_c_hat(s_max: int = 6, ratio: int = 16, spec: QuadratureSpec | None = None) -> float:
    """``min_{s <= s_max} ||Z_s|| / s`` for collinear centers with the given ratio."""
    rows = growth_profile(Builder.SYMMETRIC_Z, lambda s: collinear_centers(s, ratio), range(1, s_max + 1), spec)
    return min(r.per_s for r in rows)


@dataclass(frozen=True)
class WitnessParams:
    N: int = 8
    c_hat: float | None = None  # None: calibrate
    torus_samples: int = 200_000
    plane_samples: int = 100_000
    seed: int = 0
    theta_max: int = 20
    sampler_budget: int = 64
    # build the scheme from another symbol (negative controls); the chain is then not certified
    scheme_symbol: str | None = None
    slope_exponent: int | None = None
    direct_p: bool = True
    workers: int = 1


@dataclass(frozen=True)
class WitnessReport:
    s: int
    case: str
    symbol_id: str
    epsilon: float
    c_hat: float
    theta: ThetaChoice
    h_norm: NormEstimate
    ratio_norm: NormEstimate
    h_norm_upper: NormEstimate
    z_norm: NormEstimate
    pz_gap_bound: float
    pz_gap_measured: float
    p_norm_lower: float
    ratio: float
    p_direct: NormEstimate | None
    scheme_fingerprint: str
    scale_bits: int
    certified: bool
    seed: int
    note: str = field(default=DELEEUW_NOTE)

    CSV_FIELDS = (
        "s",
        "case",
        "symbol_id",
        "epsilon",
        "c_hat",
        "theta",
        "h_norm",
        "ratio_norm",
        "h_norm_upper",
        "z_norm",
        "z_error",
        "pz_gap_bound",
        "pz_gap_measured",
        "p_norm_lower",
        "p_direct",
        "p_direct_error",
        "ratio",
        "certified",
        "scale_bits",
        "seed",
        "scheme_fingerprint",
    )

    def csv_row(self) -> dict:
        return {
            "s": self.s,
            "case": self.case,
            "symbol_id": self.symbol_id,
            "epsilon": repr(self.epsilon),
            "c_hat": repr(self.c_hat),
            "theta": self.theta.theta,
            "h_norm": repr(self.h_norm.value),
            "ratio_norm": repr(self.ratio_norm.value),
            "h_norm_upper": repr(self.h_norm_upper.value),
            "z_norm": repr(self.z_norm.value),
            "z_error": repr(self.z_norm.error_bound),
            "pz_gap_bound": repr(self.pz_gap_bound),
            "pz_gap_measured": repr(self.pz_gap_measured),
            "p_norm_lower": repr(self.p_norm_lower),
            "p_direct": "" if self.p_direct is None else repr(self.p_direct.value),
            "p_direct_error": "" if self.p_direct is None else repr(self.p_direct.error_bound),
            "ratio": repr(self.ratio),
            "certified": self.certified,
            "scale_bits": self.scale_bits,
            "seed": self.seed,
            "scheme_fingerprint": self.scheme_fingerprint,
        }

    def to_dict(self) -> dict:
        d = {
            "s": self.s,
            "case": self.case,
            "symbol_id": self.symbol_id,
            "epsilon": self.epsilon,
            "c_hat": self.c_hat,
            "theta": self.theta.to_dict(),
            "h_norm": self.h_norm.to_dict(),
            "ratio_norm": self.ratio_norm.to_dict(),
            "h_norm_upper": self.h_norm_upper.to_dict(),
            "z_norm": self.z_norm.to_dict(),
            "pz_gap_bound": self.pz_gap_bound,
            "pz_gap_measured": self.pz_gap_measured,
            "p_norm_lower": self.p_norm_lower,
            "ratio": self.ratio,
            "p_direct": None if self.p_direct is None else self.p_direct.to_dict(),
            "scheme_fingerprint": self.scheme_fingerprint,
            "scale_bits": self.scale_bits,
            "certified": self.certified,
            "seed": self.seed,
            "note": self.note,
        }
        return d


def witness_epsilon(c_hat: float, s: int) -> float:
    return c_hat * 3.0 ** (-s - 1) * s


def _one_report(symbol: MultiplierSymbol, case: Case, s: int, params: WitnessParams, c_hat: float) -> WitnessReport:
    seed = params.seed + s
    eps = witness_epsilon(c_hat, s)
    geometry = get_symbol(params.scheme_symbol) if params.scheme_symbol else symbol
    try:
        rational = construct_scheme(
            geometry, case, s, eps, params.N, params.sampler_budget, slope_exponent=params.slope_exponent
        )
        ig = rescale_to_integers(rational)
        plane = QuadratureSpec(samples=params.plane_samples, seed=seed)
        choice = theta_search(ig, plane, params.theta_max)
        H = h_theta(ig, choice.theta)
        hn = inv_ft_l1(H, None, plane)
        rn = choice.ratio_norm
        upper = NormEstimate(
            hn.value + rn.value,
            hn.error_bound + rn.error_bound + hn.tail + getattr(rn, "tail", 0.0),
            Method.MONTE_CARLO,
            plane.samples,
            seed,
        )
        torus = QuadratureSpec(mode="mc", samples=params.torus_samples, seed=seed)
        Z = z_target(ig, case)
        z_norm = l1_norm(Z, torus)
        own = params.scheme_symbol is None
        sym = ig.symbol if own else symbol
        P = p_polynomial(sym, ig, H)
        gap = gap_bound(ig, P, Z, strict=own)
        p_direct = l1_norm(P, torus) if params.direct_p else None
    except RieszLabError as exc:
        exc.args = (f"[s={s}, stage {exc.stage}] {exc.args[0] if exc.args else ''}",)
        raise
    lower = z_norm.value - z_norm.error_bound - gap.bound
    return WitnessReport(
        s=s,
        case=case.value,
        symbol_id=symbol.id,
        epsilon=eps,
        c_hat=c_hat,
        theta=choice,
        h_norm=hn,
        ratio_norm=rn,
        h_norm_upper=upper,
        z_norm=z_norm,
        pz_gap_bound=gap.bound,
        pz_gap_measured=gap.measured,
        p_norm_lower=lower,
        ratio=lower / upper.value,
        p_direct=p_direct,
        scheme_fingerprint=ig.fingerprint(),
        scale_bits=ig.scale.bit_length(),
        certified=gap.ok,
        seed=seed,
    )


def witness_report(
    symbol: MultiplierSymbol | str,
    case: Case | str,
    s_list: Sequence[int],
    params: WitnessParams | None = None,
) -> list[WitnessReport]:
    """One report per ``s`` with ``eps_s = c_hat 3^{-s-1} s``; reports are independent and seeded by ``seed + s``."""
    params = params or WitnessParams()
    if isinstance(symbol, str):
        symbol = get_symbol(symbol)
    case = Case.parse(case)
    c_hat = params.c_hat if params.c_hat is not None else calibrate_c_hat()
    if params.workers > 1:
        with ThreadPoolExecutor(params.workers) as pool:
            return list(pool.map(lambda s: _one_report(symbol, case, s, params, c_hat), s_list))
    return [_one_report(symbol, case, s, params, c_hat) for s in s_list]


def reports_to_csv(reports: Sequence[WitnessReport]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=WitnessReport.CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in reports:
        w.writerow(r.csv_row())
    return buf.getvalue()
