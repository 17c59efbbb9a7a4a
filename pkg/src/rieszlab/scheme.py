"""Lacunary ball schemes: backward-induction construction, verification, rescaling.

A scheme is a list of centers ``c^1, ..., c^s`` (exact rationals, growing
with ``k``) and radii ``r_1 < ... < r_s`` such that the (normalized) symbol is
close to a prescribed value on each ball ``B(+-c^k, r_k)``.

Two orientations of the separation conditions are reported.  The *operative*
ones are those the ball-inclusion estimate actually needs::

    D:  |c^n| < 2^-N r_{n+1}
    I:  B(sum_{j<=k} z_j c^j, r_1) inside B(z_k c^k, r_k)

The *literal* variants ``D_literal`` (``|c^{n+1}| < 2^-N r_n``) and
``I_literal`` (inner radius ``r_s``) are evaluated as well; for ``s >= 2`` they
are incompatible with the remaining conditions and always fail, so they are
informational only and never count towards :attr:`VerificationReport.passed`.
"""

from __future__ import annotations

import enum
import hashlib
import itertools
import json
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import ConfigError, ConstructionFailed, ScaleOverflow
from .freq import Frequency, build_lambda_set
from .symbols import MultiplierSymbol, RadialCase, classify_radial, get_symbol

Point = tuple[Fraction, Fraction]

OPERATIVE = ("A", "B", "C", "D", "E", "F", "G", "H", "I")
LITERAL = ("D_literal", "I_literal")


class Case(str, enum.Enum):
    IIA = "IIa"
    IIB = "IIb"

    @classmethod
    def parse(cls, value) -> "Case":
        if isinstance(value, Case):
            return value
        for c in cls:
            if str(value).lower() == c.value.lower():
                return c
        raise ConfigError(f"unknown case {value!r}; expected IIa or IIb")


def normalized_symbol(symbol: MultiplierSymbol, case: Case, a: float, b: float, direction=(1.0, 0.0)) -> MultiplierSymbol:
    """Rotate so the oscillation direction is the first axis and map the two limits to +-1 (IIa) or 1, 0 (IIb)."""
    if a == b:
        raise ConstructionFailed("A", 1, "the two accumulation values coincide")
    m = symbol.rotated(direction)
    if case is Case.IIA:
        return m.affine(2.0 / (a - b), -(a + b) / (a - b), "norm")
    return m.affine(1.0 / (a - b), -b / (a - b), "norm")


def _frac_point(p) -> Point:
    return (Fraction(p[0]), Fraction(p[1]))


@dataclass(frozen=True)
class LacunaryScheme:
    s: int
    centers: tuple[Point, ...]
    radii: tuple[Fraction, ...]
    epsilon: float
    N: int
    case: Case
    symbol_id: str
    a: float
    b: float
    direction: tuple[float, float] = (1.0, 0.0)
    # the normalized symbol the A conditions refer to
    symbol: MultiplierSymbol | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "centers", tuple(_frac_point(c) for c in self.centers))
        object.__setattr__(self, "radii", tuple(Fraction(r) for r in self.radii))
        object.__setattr__(self, "case", Case.parse(self.case))
        if len(self.centers) != self.s or len(self.radii) != self.s:
            raise ConfigError("scheme needs exactly s centers and s radii")
        if self.symbol is None:
            base = get_symbol(self.symbol_id)
            object.__setattr__(self, "symbol", normalized_symbol(base, self.case, self.a, self.b, self.direction))

    @property
    def scale(self) -> int:
        return 1

    def to_dict(self) -> dict:
        return {
            "kind": type(self).__name__,
            "s": self.s,
            "scale": self.scale,
            "centers": [[str(x), str(y)] for x, y in self.centers],
            "radii": [str(r) for r in self.radii],
            "epsilon": self.epsilon,
            "N": self.N,
            "case": self.case.value,
            "symbol_id": self.symbol_id,
            "a": self.a,
            "b": self.b,
            "direction": list(self.direction),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def fingerprint(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()[:16]


@dataclass(frozen=True)
class IntegerScheme(LacunaryScheme):
    """A scheme multiplied by ``scale``.

    ``symbol`` stays the normalized symbol of the rational scheme;
    :attr:`scaled_symbol` is its companion ``xi -> m~(xi / scale)`` on the
    integer frame.
    """

    scale_factor: int = 1

    @property
    def scale(self) -> int:
        return self.scale_factor

    @property
    def scaled_symbol(self) -> MultiplierSymbol:
        return self.symbol.rescaled(self.scale_factor) if self.scale_factor != 1 else self.symbol

    @property
    def frequencies(self) -> tuple[Frequency, ...]:
        return tuple(Frequency(int(x), int(y)) for x, y in self.centers)


def scheme_from_dict(doc: dict) -> LacunaryScheme:
    common = dict(
        s=int(doc["s"]),
        centers=[(Fraction(x), Fraction(y)) for x, y in doc["centers"]],
        radii=[Fraction(r) for r in doc["radii"]],
        epsilon=float(doc["epsilon"]),
        N=int(doc["N"]),
        case=doc["case"],
        symbol_id=doc["symbol_id"],
        a=float(doc["a"]),
        b=float(doc["b"]),
        direction=tuple(float(v) for v in doc.get("direction", (1.0, 0.0))),
    )
    if doc.get("kind") == "IntegerScheme":
        return IntegerScheme(scale_factor=int(doc["scale"]), **common)
    return LacunaryScheme(**common)


def scheme_from_json(text: str) -> LacunaryScheme:
    return scheme_from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# Verification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConditionResult:
    ok: bool
    index: int | None = None  # first violating (1-based) index
    detail: str = ""


@dataclass(frozen=True)
class VerificationReport:
    results: dict

    def __getitem__(self, key) -> ConditionResult:
        return self.results[key]

    @property
    def passed(self) -> bool:
        return all(self.results[k].ok for k in OPERATIVE)

    def failures(self, include_literal: bool = False) -> set[str]:
        keys = OPERATIVE + (LITERAL if include_literal else ())
        return {k for k in keys if not self.results[k].ok}

    def to_dict(self) -> dict:
        return {k: {"ok": v.ok, "index": v.index, "detail": v.detail} for k, v in self.results.items()}


def _first(bad: Sequence[bool], offset: int = 1) -> ConditionResult:
    for i, b in enumerate(bad):
        if b:
            return ConditionResult(False, i + offset)
    return ConditionResult(True)


def _norm_sq(p) -> Fraction:
    return p[0] * p[0] + p[1] * p[1]


def _lt_norm(p, bound: Fraction) -> bool:
    """|p| < bound, exactly."""
    return bound > 0 and _norm_sq(p) < bound * bound


def _le_norm(p, bound: Fraction) -> bool:
    return bound >= 0 and _norm_sq(p) <= bound * bound


def _ball_samples(center: Point, r: Fraction, scale: int, rings: int = 3, per_ring: int = 32) -> np.ndarray:
    """Sample points of the closed ball in the unscaled frame (center, rings, boundary)."""
    c = np.array([float(center[0] / scale), float(center[1] / scale)])
    rad = float(r / scale)
    pts = [c]
    ang = 2 * np.pi * np.arange(per_ring) / per_ring
    for i in range(1, rings + 1):
        rr = rad * i / rings
        pts.append(np.stack([c[0] + rr * np.cos(ang), c[1] + rr * np.sin(ang)], 1))
    return np.vstack(pts)


def ball_targets(case: Case, k: int) -> tuple[float, float]:
    """Required values of the normalized symbol on ``B(+c^k)`` and ``B(-c^k)``."""
    if case is Case.IIA:
        v = float((-1) ** k)
        return v, v
    return 1.0, 0.0


def ball_deviation(symbol: MultiplierSymbol, scale: int, center: Point, r: Fraction, target: float) -> float:
    """max |m~ - target| over sampled points of ``B(center, r)``; ``inf`` on singular or non-finite samples."""
    pts = _ball_samples(center, r, scale)
    if np.any(symbol.singular(pts[:, 0], pts[:, 1])):
        return math.inf
    vals = symbol(pts[:, 0], pts[:, 1])
    if not np.all(np.isfinite(vals)):
        return math.inf
    return float(np.max(np.abs(vals - target)))


def _check_a(scheme: LacunaryScheme, base: MultiplierSymbol) -> ConditionResult:
    tol = scheme.epsilon * 0.99
    for k, (c, r) in enumerate(zip(scheme.centers, scheme.radii), start=1):
        tp, tm = ball_targets(scheme.case, k)
        neg = (-c[0], -c[1])
        dp = ball_deviation(base, scheme.scale, c, r, tp)
        dm = ball_deviation(base, scheme.scale, neg, r, tm)
        if not (dp < tol and dm < tol):
            return ConditionResult(False, k, f"deviation {max(dp, dm):.3g} vs {tol:.3g}")
    return ConditionResult(True)


def _inclusion(scheme: LacunaryScheme, inner: Fraction | None) -> ConditionResult:
    """Ball inclusion over all sign patterns with top index k (closed balls)."""
    cs, rs = scheme.centers, scheme.radii
    for k in range(2, scheme.s + 1):
        r_in = rs[0] if inner is None else inner
        room = rs[k - 1] - r_in
        for zeta in itertools.product((-1, 0, 1), repeat=k - 1):
            v0 = sum(z * c[0] for z, c in zip(zeta, cs))
            v1 = sum(z * c[1] for z, c in zip(zeta, cs))
            if not _le_norm((Fraction(v0), Fraction(v1)), room):
                return ConditionResult(False, k)
    return ConditionResult(True)


def verify_conditions(scheme: LacunaryScheme) -> VerificationReport:
    """Check every condition; B-I exactly in rational arithmetic, A by sampling with margin eps/100."""
    s, N = scheme.s, scheme.N
    cs, rs = scheme.centers, scheme.radii
    two_n = Fraction(1, 2**N)
    res: dict[str, ConditionResult] = {}
    res["A"] = _check_a(scheme, scheme.symbol)
    res["B"] = _first([not (rs[n] <= two_n * rs[n + 1]) for n in range(s - 1)])
    res["C"] = _first([not all(isinstance(v, Fraction) for v in c) for c in cs])
    res["D"] = _first([not _lt_norm(cs[n], two_n * rs[n + 1]) for n in range(s - 1)])
    res["D_literal"] = _first([not _lt_norm(cs[n + 1], two_n * rs[n]) for n in range(s - 1)])
    e_bound = 3 ** (s + 2) * s
    res["E"] = _first([c[0] == 0 or abs(c[1]) * e_bound > abs(c[0]) for c in cs])
    res["F"] = _first([not (_norm_sq(cs[n]) < two_n * two_n * _norm_sq(cs[n + 1])) for n in range(s - 1)])
    res["G"] = _first([not (r < abs(c[0]) and r < abs(c[1])) for c, r in zip(cs, rs)])
    res["H"] = _first(
        [not all(abs(cs[n][i]) < two_n * abs(cs[n + 1][i]) for i in (0, 1)) for n in range(s - 1)]
    )
    res["I"] = _inclusion(scheme, None)
    res["I_literal"] = _inclusion(scheme, rs[-1])
    if not all(r > 0 for r in rs):
        res["G"] = ConditionResult(False, next(i for i, r in enumerate(rs, 1) if r <= 0), "nonpositive radius")
    return VerificationReport(res)


def lambda_slope_max(scheme: LacunaryScheme) -> Fraction:
    """max |q2/q1| over Lambda_s, exactly (``q1 = 0`` gives an infinite ratio)."""
    best = Fraction(0)
    for zeta in itertools.product((-1, 0, 1), repeat=scheme.s):
        if not any(zeta):
            continue
        q0 = sum(z * c[0] for z, c in zip(zeta, scheme.centers))
        q1 = sum(z * c[1] for z, c in zip(zeta, scheme.centers))
        if q0 == 0:
            return Fraction(10**100)
        best = max(best, abs(Fraction(q1) / Fraction(q0)))
    return best


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------


def e_exponent(s: int) -> int:
    """Smallest m with 2^-m <= 1/(3^{s+2} s)."""
    return (3 ** (s + 2) * s - 1).bit_length()


def construct_scheme(
    symbol: MultiplierSymbol | str,
    case: Case | str,
    s: int,
    epsilon: float,
    N: int = 8,
    sampler_budget: int = 64,
    start_exponent: int | None = None,
    classification=None,
    radius_halvings: int = 6,
    slope_exponent: int | None = None,
) -> LacunaryScheme:
    """Backward induction from ``k = s`` down to 1.

    In the frame where the oscillation direction is the first axis, level
    ``k`` uses ``c^k = (2^-j, 2^-(j+m))`` with ``2^-m <= 1/(3^{s+2}s)`` and
    ``r_k = 2^-(j+m+1+h)``.  Dyadic exponents ``j`` are scanned upwards from
    the smallest one compatible with ``|c^k| < 2^-N r_{k+1}`` until the
    sampled symbol is within ``0.99 eps`` of the target on both balls;
    ``sampler_budget`` bounds the number of exponents tried per level.
    ``slope_exponent`` fixes ``m`` (it must satisfy E for this ``s``), which
    keeps the geometry comparable across different ``s``.
    """
    if isinstance(symbol, str):
        symbol = get_symbol(symbol)
    case = Case.parse(case)
    if s < 1:
        raise ConfigError("s must be positive")
    if N < 1:
        raise ConfigError("N must be a positive integer")
    if not epsilon > 0:
        raise ConfigError("epsilon must be positive")

    cls = classification if classification is not None else classify_radial(symbol)
    want = RadialCase.IIA if case is Case.IIA else RadialCase.IIB
    if cls.case is not want:
        raise ConstructionFailed(
            "A", 1, f"classifier reports {cls.case.value}; no second accumulation value for case {case.value}"
        )
    direction = tuple(float(v) for v in cls.direction)
    norm = normalized_symbol(symbol, case, cls.a, cls.b, direction)
    if start_exponent is None:
        start_exponent = round(-math.log2(max(cls.scales_a + cls.scales_b)))

    m = e_exponent(s)
    if slope_exponent is not None:
        if slope_exponent < m:
            raise ConfigError(f"slope_exponent {slope_exponent} violates condition E for s={s} (needs >= {m})")
        m = slope_exponent
    tol = 0.99 * epsilon
    two_n = Fraction(1, 2**N)
    centers: list[Point] = [None] * s  # type: ignore[list-item]
    radii: list[Fraction] = [None] * s  # type: ignore[list-item]
    for k in range(s, 0, -1):
        depth = s - k + 1
        tp, tm = ball_targets(case, k)
        j = start_exponent
        if k < s:
            bound = two_n * radii[k]
            while not _lt_norm((Fraction(1, 2**j), Fraction(1, 2 ** (j + m))), bound):
                j += 1
        found = False
        for _ in range(sampler_budget):
            c = (Fraction(1, 2**j), Fraction(1, 2 ** (j + m)))
            neg = (-c[0], -c[1])
            for h in range(radius_halvings + 1):
                r = Fraction(1, 2 ** (j + m + 1 + h))
                if (ball_deviation(norm, 1, c, r, tp) < tol and ball_deviation(norm, 1, neg, r, tm) < tol):
                    found = True
                    break
            if found:
                break
            j += 1
        if not found:
            raise ConstructionFailed("A", depth, f"no admissible dyadic scale within budget {sampler_budget}")
        centers[k - 1], radii[k - 1] = c, r

    scheme = LacunaryScheme(
        s=s,
        centers=tuple(centers),
        radii=tuple(radii),
        epsilon=float(epsilon),
        N=N,
        case=case,
        symbol_id=symbol.id,
        a=float(cls.a),
        b=float(cls.b),
        direction=direction,
        symbol=norm,
    )
    report = verify_conditions(scheme)
    if not report.passed:
        bad = sorted(report.failures())
        raise ConstructionFailed(bad[0], s, f"verification failed for {bad}")
    return scheme


# ---------------------------------------------------------------------------
# Rescaling
# ---------------------------------------------------------------------------


def rescale_to_integers(scheme: LacunaryScheme, max_scale_bits: int = 512) -> IntegerScheme:
    """Multiply centers and radii by the lcm of the center denominators."""
    scale = 1
    for c in scheme.centers:
        for v in c:
            scale = math.lcm(scale, v.denominator)
    if scale.bit_length() > max_scale_bits:
        raise ScaleOverflow(f"scale needs {scale.bit_length()} bits (cap {max_scale_bits})")
    return IntegerScheme(
        s=scheme.s,
        centers=tuple((x * scale, y * scale) for x, y in scheme.centers),
        radii=tuple(r * scale for r in scheme.radii),
        epsilon=scheme.epsilon,
        N=scheme.N,
        case=scheme.case,
        symbol_id=scheme.symbol_id,
        a=scheme.a,
        b=scheme.b,
        direction=scheme.direction,
        symbol=scheme.symbol,
        scale_factor=scale,
    )


def integer_lambda_set(scheme: IntegerScheme):
    return build_lambda_set(scheme.frequencies)


def tamper(scheme: LacunaryScheme, **changes) -> LacunaryScheme:
    """A copy with some fields replaced (verification is not rerun)."""
    return replace(scheme, **changes)
