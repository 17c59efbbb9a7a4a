"""Multiplier symbols, the radial classifier, the sup-norm probe and lattice sampling.

A symbol is a vectorized function of ``(xi1, xi2)`` defined off the origin
(and off an optional declared singular locus).  Symbols can come from the
built-in catalog or from a small expression language::

    expr   = term { ("+" | "-") term } ;
    term   = unary { ("*" | "/") unary } ;
    unary  = "-" unary | power ;
    power  = atom [ "^" unary ] ;
    atom   = number | "x" | "y" | "pi" | func "(" expr ")"
           | "|" expr "|" | "(" expr ")" ;
    func   = "log" | "log2" | "cos" | "sin" | "exp" | "abs" | "sqrt" | "sign" ;

``x`` and ``y`` are the two frequency coordinates.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import ConfigError, SampleOnSingularity
from .freq import Frequency, as_frequency


class SymbolClass(str, enum.Enum):
    CONTINUOUS = "Continuous"
    HOMOGENEOUS0 = "Homogeneous0"
    OSCILLATORY_SYMMETRIC = "OscillatorySymmetric"
    OSCILLATORY_ASYMMETRIC = "OscillatoryAsymmetric"
    CUSTOM = "Custom"


def _origin_only(x1, x2):
    return (x1 == 0) & (x2 == 0)


def _no_locus(x1, x2):
    return np.zeros(np.broadcast(x1, x2).shape, dtype=bool)


@dataclass(frozen=True)
class MultiplierSymbol:
    id: str
    fn: Callable[[np.ndarray, np.ndarray], np.ndarray] = field(repr=False, compare=False)
    declared_class: SymbolClass = SymbolClass.CUSTOM
    sup_norm_hint: float | None = None
    singular: Callable[[np.ndarray, np.ndarray], np.ndarray] = field(
        default=_origin_only, repr=False, compare=False
    )

    def __call__(self, xi1, xi2=None) -> np.ndarray:
        if xi2 is None:
            pts = np.asarray(xi1, dtype=np.float64)
            xi1, xi2 = pts[..., 0], pts[..., 1]
        x1 = np.asarray(xi1, dtype=np.float64)
        x2 = np.asarray(xi2, dtype=np.float64)
        with np.errstate(all="ignore"):
            return self.fn(x1, x2)

    def at(self, point) -> complex:
        """Value at one point; exact rationals are rounded to the nearest double."""
        x1, x2 = (float(Fraction(v)) if isinstance(v, (int, Fraction)) else float(v) for v in point)
        if bool(self.singular(np.float64(x1), np.float64(x2))):
            raise SampleOnSingularity(f"symbol {self.id} is singular at {(x1, x2)}")
        val = complex(np.asarray(self(x1, x2)))
        if not np.isfinite(val):
            raise SampleOnSingularity(f"symbol {self.id} is not finite at {(x1, x2)}")
        return val

    def rescaled(self, scale) -> "MultiplierSymbol":
        """The symbol ``xi -> m(xi / scale)``."""
        sc = float(scale)
        fn, sing = self.fn, self.singular
        return MultiplierSymbol(
            id=f"{self.id}/({scale})",
            fn=lambda a, b: fn(a / sc, b / sc),
            declared_class=self.declared_class,
            sup_norm_hint=self.sup_norm_hint,
            singular=lambda a, b: sing(np.asarray(a) / sc, np.asarray(b) / sc),
        )

    def affine(self, slope: float, offset: float, label: str) -> "MultiplierSymbol":
        """The symbol ``slope * m + offset``."""
        fn = self.fn
        hint = None if self.sup_norm_hint is None else abs(slope) * self.sup_norm_hint + abs(offset)
        return MultiplierSymbol(
            id=f"{label}({self.id})",
            fn=lambda a, b: slope * fn(a, b) + offset,
            declared_class=self.declared_class,
            sup_norm_hint=hint,
            singular=self.singular,
        )

    def rotated(self, direction) -> "MultiplierSymbol":
        """``xi -> m(R xi)`` where R is the rotation taking (1, 0) to ``direction``."""
        c, s = (float(v) for v in direction)
        n = math.hypot(c, s)
        c, s = c / n, s / n
        if c == 1.0 and s == 0.0:
            return self
        fn, sing = self.fn, self.singular
        return MultiplierSymbol(
            id=f"rot({self.id})",
            fn=lambda a, b: fn(c * a - s * b, s * a + c * b),
            declared_class=self.declared_class,
            sup_norm_hint=self.sup_norm_hint,
            singular=lambda a, b: sing(c * np.asarray(a) - s * np.asarray(b), s * np.asarray(a) + c * np.asarray(b)),
        )


# ---------------------------------------------------------------------------
# Catalog
# ---------------------------------------------------------------------------


def _axis1(x1, x2):
    return x1 == 0


def _gaussian(a, b):
    return np.exp(-(a * a + b * b))


def _riesz1(a, b):
    return a / np.hypot(a, b)


def _riesz12(a, b):
    return a * b / (a * a + b * b)


def _logcos(a, b):
    return np.cos(np.pi * np.log2(np.abs(a)))


def _signed_logcos(a, b):
    return 0.5 * (1.0 + np.sign(a) * np.cos(np.pi * np.log2(np.abs(a))))


def _one(a, b):
    return np.ones(np.broadcast(a, b).shape)


def _zero(a, b):
    return np.zeros(np.broadcast(a, b).shape)


CATALOG: dict[str, MultiplierSymbol] = {
    "one": MultiplierSymbol("one", _one, SymbolClass.CONTINUOUS, 1.0, _no_locus),
    "zero": MultiplierSymbol("zero", _zero, SymbolClass.CONTINUOUS, 0.0, _no_locus),
    "gaussian": MultiplierSymbol("gaussian", _gaussian, SymbolClass.CONTINUOUS, 1.0, _no_locus),
    "riesz1": MultiplierSymbol("riesz1", _riesz1, SymbolClass.HOMOGENEOUS0, 1.0),
    "riesz12": MultiplierSymbol("riesz12", _riesz12, SymbolClass.HOMOGENEOUS0, 0.5),
    # m(2^-k, y) = (-1)^k on both half-planes: two symmetric accumulation values
    "logcos": MultiplierSymbol("logcos", _logcos, SymbolClass.OSCILLATORY_SYMMETRIC, 1.0, _axis1),
    # 1 at xi1 = 2^-2k, 0 at -2^-2k: asymmetric accumulation values
    "signed-logcos": MultiplierSymbol(
        "signed-logcos", _signed_logcos, SymbolClass.OSCILLATORY_ASYMMETRIC, 1.0, _axis1
    ),
}

CASE_IIA_REPRESENTATIVE = "logcos"
CASE_IIB_REPRESENTATIVE = "signed-logcos"


# ---------------------------------------------------------------------------
# Expression language
# ---------------------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(\d+\.\d*|\.\d+|\d+)(?:[eE][-+]?\d+)?|([A-Za-z_][A-Za-z_0-9]*)|(\*\*|[-+*/^|()]))")

_FUNCS = {
    "log": np.log,
    "log2": np.log2,
    "cos": np.cos,
    "sin": np.sin,
    "exp": np.exp,
    "abs": np.abs,
    "sqrt": np.sqrt,
    "sign": np.sign,
}


def _tokenize(text: str) -> list[str]:
    tokens, pos = [], 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ConfigError(f"unexpected character in expression at {pos}: {text[pos:pos + 10]!r}")
        tokens.append(m.group(0).strip())
        pos = m.end()
    return [t for t in tokens if t]


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def take(self, expected=None):
        tok = self.peek()
        if tok is None or (expected is not None and tok != expected):
            raise ConfigError(f"expected {expected or 'token'}, got {tok!r}")
        self.i += 1
        return tok

    def parse(self):
        node = self.expr()
        if self.peek() is not None:
            raise ConfigError(f"trailing input at {self.peek()!r}")
        return node

    def expr(self):
        node = self.term()
        while self.peek() in ("+", "-"):
            op = self.take()
            rhs = self.term()
            node = (lambda l, r: lambda x, y: l(x, y) + r(x, y))(node, rhs) if op == "+" else \
                (lambda l, r: lambda x, y: l(x, y) - r(x, y))(node, rhs)
        return node

    def term(self):
        node = self.unary()
        while self.peek() in ("*", "/"):
            op = self.take()
            rhs = self.unary()
            node = (lambda l, r: lambda x, y: l(x, y) * r(x, y))(node, rhs) if op == "*" else \
                (lambda l, r: lambda x, y: l(x, y) / r(x, y))(node, rhs)
        return node

    def unary(self):
        if self.peek() == "-":
            self.take()
            inner = self.unary()
            return lambda x, y: -inner(x, y)
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek() in ("^", "**"):
            self.take()
            exp = self.unary()
            return lambda x, y: base(x, y) ** exp(x, y)
        return base

    def atom(self):
        tok = self.take()
        if tok == "(":
            node = self.expr()
            self.take(")")
            return node
        if tok == "|":
            node = self.expr()
            self.take("|")
            return lambda x, y: np.abs(node(x, y))
        if tok == "x":
            return lambda x, y: x
        if tok == "y":
            return lambda x, y: y
        if tok == "pi":
            return lambda x, y: np.pi
        if tok in _FUNCS:
            f = _FUNCS[tok]
            self.take("(")
            arg = self.expr()
            self.take(")")
            return lambda x, y: f(arg(x, y))
        try:
            val = float(tok)
        except ValueError:
            raise ConfigError(f"unknown name {tok!r} in expression") from None
        return lambda x, y: val


def parse_expression(text: str) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    node = _Parser(text).parse()

    def fn(x, y):
        out = node(x, y)
        return np.broadcast_to(np.asarray(out, dtype=np.float64), np.broadcast(x, y).shape).copy()

    return fn


def get_symbol(spec: str) -> MultiplierSymbol:
    """Catalog id, or an expression in ``x`` and ``y``."""
    if spec in CATALOG:
        return CATALOG[spec]
    return MultiplierSymbol(spec, parse_expression(spec), SymbolClass.CUSTOM)


# ---------------------------------------------------------------------------
# Radial classification
# ---------------------------------------------------------------------------


class RadialCase(str, enum.Enum):
    STAR = "StarCondition"
    IIA = "IIa"
    IIB = "IIb"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class RadialClassification:
    case: RadialCase
    direction: tuple[float, float] | None = None
    a: float | None = None
    b: float | None = None
    # scales t with m(+-t v) near a, and near b (IIa); for IIb the scales
    # where m(t v) ~ a and m(-t v) ~ b
    scales_a: tuple[float, ...] = ()
    scales_b: tuple[float, ...] = ()
    omega_directions: tuple[float, ...] = ()
    omega: tuple[float, ...] = ()
    omega_constant: bool | None = None
    note: str = ""

    @property
    def bonami_poornima_obstruction(self) -> bool:
        return self.case is RadialCase.STAR and self.omega_constant is False

    def to_dict(self) -> dict:
        return {
            "case": self.case.value,
            "direction": self.direction,
            "a": self.a,
            "b": self.b,
            "scales_a": list(self.scales_a),
            "scales_b": list(self.scales_b),
            "omega_directions": list(self.omega_directions),
            "omega": list(self.omega),
            "omega_constant": self.omega_constant,
            "bonami_poornima_obstruction": self.bonami_poornima_obstruction,
            "note": self.note,
        }


def _clusters(values: np.ndarray, gap: float) -> list[float]:
    """Centers of groups of sorted values separated by more than ``gap``."""
    v = np.sort(values)
    groups = [[v[0]]]
    for x in v[1:]:
        if x - groups[-1][-1] > gap:
            groups.append([x])
        else:
            groups[-1].append(x)
    return [float(np.mean(g)) for g in groups]


def _nearest(values: np.ndarray, centers: Sequence[float]) -> np.ndarray:
    c = np.asarray(centers)
    return np.argmin(np.abs(values[:, None] - c[None, :]), axis=1)


def classify_radial(
    symbol: MultiplierSymbol,
    direction_count: int = 64,
    scale_depth: int = 40,
    tol: float = 1e-3,
    jump_tol: float = 0.5,
) -> RadialClassification:
    """Finite-sample proxy for the almost-radial-limit trichotomy.

    The symbol is sampled at ``t v`` for dyadic ``t = 2**-j`` (j up to
    ``scale_depth``) along ``direction_count`` equally spaced unit vectors;
    only the deeper half of the scales counts as the tail.
    """
    if direction_count < 4 or direction_count % 2:
        raise ValueError("direction_count must be an even number >= 4")
    js = np.arange(scale_depth // 2, scale_depth + 1)
    ts = 2.0 ** (-js.astype(float))
    angles = 2 * np.pi * np.arange(direction_count) / direction_count
    dirs = np.stack([np.cos(angles), np.sin(angles)], 1)
    dirs[np.abs(dirs) < 1e-15] = 0.0
    gap = 10 * tol

    omega = []
    kept = []
    oscillating = []
    for i, v in enumerate(dirs):
        x1, x2 = ts * v[0], ts * v[1]
        if np.any(symbol.singular(x1, x2)):
            continue
        vals = np.real(symbol(x1, x2))
        if not np.all(np.isfinite(vals)):
            continue
        kept.append(i)
        if np.ptp(vals) < tol:
            omega.append(float(vals[-1]))
        else:
            omega.append(float("nan"))
            oscillating.append(i)

    if not kept:
        return RadialClassification(RadialCase.INCONCLUSIVE, note="no sampleable direction")

    if not oscillating:
        om = np.array(omega)
        kept_angles = angles[kept]
        # continuity proxy on the sampled circle (wrap-around neighbours)
        jumps = np.abs(np.diff(np.append(om, om[0])))
        contiguous = np.abs(np.diff(np.append(kept_angles, kept_angles[0] + 2 * np.pi))) < 1.5 * (2 * np.pi / direction_count)
        if np.any(jumps[contiguous] > jump_tol):
            return RadialClassification(
                RadialCase.INCONCLUSIVE,
                omega_directions=tuple(float(a) for a in kept_angles),
                omega=tuple(omega),
                note="radial limits exist but jump between neighbouring directions",
            )
        return RadialClassification(
            RadialCase.STAR,
            omega_directions=tuple(float(a) for a in kept_angles),
            omega=tuple(omega),
            omega_constant=bool(np.ptp(om) < tol),
        )

    # order candidate directions so that the positive first axis is tried first
    oscillating.sort(key=lambda i: (min(angles[i], 2 * np.pi - angles[i]), angles[i]))
    for i in oscillating:
        v = dirs[i]
        plus = np.real(symbol(ts * v[0], ts * v[1]))
        minus = np.real(symbol(-ts * v[0], -ts * v[1]))
        if not (np.all(np.isfinite(plus)) and np.all(np.isfinite(minus))):
            continue
        centers = _clusters(np.concatenate([plus, minus]), gap)
        if len(centers) < 2:
            continue
        lp, lm = _nearest(plus, centers), _nearest(minus, centers)
        sym = lp == lm
        labels = sorted(set(lp[sym].tolist()), key=lambda k: -np.sum(lp[sym] == k))
        if len(labels) >= 2:
            ka, kb = labels[0], labels[1]
            sa = ts[sym & (lp == ka)]
            sb = ts[sym & (lp == kb)]
            if len(sa) >= 2 and len(sb) >= 2:
                # a is the limit along the sequence whose first (largest) scale
                # has an even dyadic exponent
                a, b = centers[ka], centers[kb]
                if round(-math.log2(sa[0])) % 2:
                    a, b, sa, sb = b, a, sb, sa
                return RadialClassification(
                    RadialCase.IIA,
                    direction=(float(v[0]), float(v[1])),
                    a=a,
                    b=b,
                    scales_a=tuple(float(t) for t in sa),
                    scales_b=tuple(float(t) for t in sb),
                )
        pairs = [(int(x), int(y)) for x, y in zip(lp, lm) if x != y]
        if pairs:
            best = max(set(pairs), key=pairs.count)
            if pairs.count(best) >= 2:
                mask = (lp == best[0]) & (lm == best[1])
                return RadialClassification(
                    RadialCase.IIB,
                    direction=(float(v[0]), float(v[1])),
                    a=centers[best[0]],
                    b=centers[best[1]],
                    scales_a=tuple(float(t) for t in ts[mask]),
                )
    return RadialClassification(RadialCase.INCONCLUSIVE, note="oscillation without a detectable limit pattern")


# ---------------------------------------------------------------------------
# Sup-norm probe
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProbeProfile:
    """Nonnegative rapidly decaying profile f with its two needed integrals."""

    name: str
    ft_at_zero: float  # integral of f
    grad_l1: float  # L^1 norm of |grad f|


# f(x) = exp(-pi |x|^2) on R^2: integral 1, int |grad f| = pi
GAUSSIAN_PROFILE = ProbeProfile("gaussian", 1.0, math.pi)


@dataclass(frozen=True)
class ProbeRow:
    lam: float
    ratio: float


def sup_norm_probe(
    symbol: MultiplierSymbol,
    xi0,
    profile: ProbeProfile = GAUSSIAN_PROFILE,
    lambda_list: Iterable[float] = (1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125, 0.0),
) -> list[ProbeRow]:
    """Lower bounds ``|2 pi m(xi0) F f(0)| / (2 pi F f(0) + lam ||grad f||_1)`` for ||T_m||."""
    m0 = abs(symbol.at(xi0))
    num = 2 * math.pi * m0 * profile.ft_at_zero
    rows = []
    for lam in sorted(lambda_list, reverse=True):
        if lam < 0:
            raise ValueError("lambda must be nonnegative")
        rows.append(ProbeRow(float(lam), num / (2 * math.pi * profile.ft_at_zero + lam * profile.grad_l1)))
    return rows


def extrapolate_to_zero(rows: Sequence[ProbeRow], degree: int = 2) -> float:
    """Polynomial extrapolation of the ratio to lambda = 0 from the positive rows."""
    pts = [(r.lam, r.ratio) for r in rows if r.lam > 0]
    pts.sort()
    pts = pts[: max(degree + 2, 4)]
    lam = np.array([p[0] for p in pts])
    rat = np.array([p[1] for p in pts])
    coef = np.polyfit(lam, rat, min(degree, len(pts) - 1))
    return float(np.polyval(coef, 0.0))


# ---------------------------------------------------------------------------
# deLeeuw lattice sampling
# ---------------------------------------------------------------------------


def _window(window) -> list[Frequency]:
    if isinstance(window, int):
        r = range(-window, window + 1)
        return [Frequency(a, b) for a in r for b in r]
    return sorted(as_frequency(q) for q in window)


def deleeuw_sample(symbol: MultiplierSymbol, epsilon_scale=1, window: int | Iterable = 2) -> dict[Frequency, complex]:
    """``{n: m(epsilon * n)}`` over a box ``|n_i| <= window`` or an explicit frequency list.

    ``epsilon_scale`` may be a ``Fraction``; products are formed exactly before
    conversion to floating point.
    """
    eps = Fraction(epsilon_scale)
    out = {}
    for n in _window(window):
        out[n] = symbol.at((eps * n.k1, eps * n.k2))
    return out
