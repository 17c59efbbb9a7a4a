"""Integer-lattice frequency algebra.

Frequencies are points of Z^2.  Trigonometric polynomials are stored as a
sparse map from frequency to coefficient, kept in lexicographic order so
that every iteration (and hence every CSV row or hash built from it) is
deterministic.

Signed subset sums of a lacunary family of centers are enumerated
exhaustively; a repeated sum is a hard error because every coefficient
formula downstream depends on the representation being unique.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from types import MappingProxyType
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import RepresentationCollision


class Frequency(NamedTuple):
    k1: int
    k2: int

    def __neg__(self) -> "Frequency":
        return Frequency(-self.k1, -self.k2)

    def __add__(self, other) -> "Frequency":  # type: ignore[override]
        return Frequency(self.k1 + other[0], self.k2 + other[1])

    def __sub__(self, other) -> "Frequency":
        return Frequency(self.k1 - other[0], self.k2 - other[1])

    def scaled(self, factor: int) -> "Frequency":
        return Frequency(self.k1 * factor, self.k2 * factor)

    def norm(self) -> float:
        return math.hypot(self.k1, self.k2)

    def norm_sq(self) -> int:
        return self.k1 * self.k1 + self.k2 * self.k2

    def is_zero(self) -> bool:
        return self.k1 == 0 and self.k2 == 0


ZERO = Frequency(0, 0)


def as_frequency(value) -> Frequency:
    if isinstance(value, Frequency):
        return value
    k1, k2 = value
    if int(k1) != k1 or int(k2) != k2:
        raise ValueError(f"frequency must have integer coordinates, got {value!r}")
    return Frequency(int(k1), int(k2))


def _is_zero(c) -> bool:
    return c == 0


class SparseTrigPoly:
    """Finite sum ``sum_q coeff(q) exp(2 pi i <q, x>)`` on the torus [0,1)^2.

    Coefficients are either exact ``Fraction`` values (all builders in this
    module produce dyadic rationals) or Python/numpy complex numbers.  Zero
    coefficients are never stored.

    ``basis`` and ``zetas`` are optional: when every frequency is an integer
    combination of a few generators, the evaluator reduces phases generator
    by generator, which stays exact for frequencies far beyond 2**63.
    """

    __slots__ = ("_coeffs", "real", "basis", "zetas")

    def __init__(
        self,
        coeffs: Mapping | Iterable = (),
        *,
        real: bool | None = None,
        basis: Sequence[Frequency] | None = None,
        zetas: Mapping[Frequency, tuple[int, ...]] | None = None,
    ):
        items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
        acc: dict[Frequency, object] = {}
        for q, c in items:
            q = as_frequency(q)
            acc[q] = acc[q] + c if q in acc else c
        ordered = {q: acc[q] for q in sorted(acc) if not _is_zero(acc[q])}
        self._coeffs = MappingProxyType(ordered)
        self.basis = tuple(as_frequency(b) for b in basis) if basis is not None else None
        if self.basis is not None:
            if zetas is None:
                raise ValueError("basis given without zeta representations")
            missing = [q for q in ordered if q not in zetas and not q.is_zero()]
            if missing:
                raise ValueError(f"no zeta representation for {missing[0]}")
            self.zetas = MappingProxyType(
                {q: tuple(zetas[q]) if not q.is_zero() else (0,) * len(self.basis) for q in ordered}
            )
        else:
            self.zetas = None
        self.real = self._detect_real() if real is None else bool(real)

    # -- mapping-like access -------------------------------------------------
    @property
    def coeffs(self) -> Mapping[Frequency, object]:
        return self._coeffs

    def __getitem__(self, q) -> object:
        return self._coeffs.get(as_frequency(q), 0)

    def coeff(self, q) -> complex:
        return complex(self[q])

    def __contains__(self, q) -> bool:
        return as_frequency(q) in self._coeffs

    def __len__(self) -> int:
        return len(self._coeffs)

    def __iter__(self):
        return iter(self._coeffs)

    def items(self):
        return self._coeffs.items()

    def __eq__(self, other) -> bool:
        if not isinstance(other, SparseTrigPoly):
            return NotImplemented
        return dict(self._coeffs) == dict(other._coeffs)

    def __repr__(self) -> str:
        body = ", ".join(f"{tuple(q)}: {c}" for q, c in list(self.items())[:6])
        more = ", ..." if len(self) > 6 else ""
        return f"SparseTrigPoly({{{body}{more}}}, terms={len(self)})"

    @property
    def is_exact(self) -> bool:
        return all(isinstance(c, (Fraction, int)) for c in self._coeffs.values())

    def _detect_real(self) -> bool:
        for q, c in self._coeffs.items():
            if complex(self[-q]) != complex(c).conjugate():
                return False
        return True

    # -- arithmetic ------------------------------------------------------------
    def _merge_meta(self, other: "SparseTrigPoly"):
        if self.basis is not None and self.basis == other.basis:
            z = dict(self.zetas)
            z.update(other.zetas)
            return self.basis, z
        return None, None

    def __add__(self, other: "SparseTrigPoly") -> "SparseTrigPoly":
        basis, zetas = self._merge_meta(other)
        return SparseTrigPoly(
            itertools.chain(self.items(), other.items()), basis=basis, zetas=zetas
        )

    def __neg__(self) -> "SparseTrigPoly":
        return SparseTrigPoly(
            {q: -c for q, c in self.items()}, real=self.real, basis=self.basis, zetas=self.zetas
        )

    def __sub__(self, other: "SparseTrigPoly") -> "SparseTrigPoly":
        return self + (-other)

    def scale(self, factor) -> "SparseTrigPoly":
        return SparseTrigPoly(
            {q: c * factor for q, c in self.items()}, basis=self.basis, zetas=self.zetas
        )

    def add_constant(self, value) -> "SparseTrigPoly":
        return self + SparseTrigPoly({ZERO: value})

    def map_coefficients(self, fn) -> "SparseTrigPoly":
        """New polynomial with ``fn(q, coeff)`` at every stored frequency."""
        return SparseTrigPoly(
            {q: fn(q, c) for q, c in self.items()}, basis=self.basis, zetas=self.zetas
        )

    # -- summaries ------------------------------------------------------------
    def frequency_array(self) -> np.ndarray:
        """(n, 2) array; dtype object when coordinates exceed int64."""
        qs = list(self._coeffs)
        if not qs:
            return np.zeros((0, 2), dtype=np.int64)
        big = max(max(abs(q.k1), abs(q.k2)) for q in qs)
        dtype = np.int64 if big < 2**62 else object
        return np.array([[q.k1, q.k2] for q in qs], dtype=dtype)

    def coefficient_array(self) -> np.ndarray:
        return np.array([complex(c) for c in self._coeffs.values()], dtype=np.complex128)

    def max_abs_frequency(self) -> tuple[int, int]:
        """Largest |k1| and largest |k2| over the support."""
        if not self._coeffs:
            return 0, 0
        return (
            max(abs(q.k1) for q in self._coeffs),
            max(abs(q.k2) for q in self._coeffs),
        )

    def coefficient_l1(self) -> float:
        return float(sum(abs(complex(c)) for c in self._coeffs.values()))

    def coefficient_l2_sq(self) -> float:
        return float(sum(abs(complex(c)) ** 2 for c in self._coeffs.values()))

    def gradient_weight(self) -> tuple[float, float]:
        """``(sum |q1||c_q|, sum |q2||c_q|)``; drives the grid error bound."""
        w1 = w2 = 0.0
        for q, c in self._coeffs.items():
            a = abs(complex(c))
            w1 += abs(q.k1) * a
            w2 += abs(q.k2) * a
        return w1, w2


# ---------------------------------------------------------------------------
# Signed subset sums
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LambdaPoint:
    zeta: tuple[int, ...]
    chi: int
    top_index: int  # 0-based position of the last nonzero entry of zeta


@dataclass(frozen=True)
class LambdaSet:
    centers: tuple[Frequency, ...]
    elements: Mapping[Frequency, LambdaPoint] = field(repr=False)

    @property
    def s(self) -> int:
        return len(self.centers)

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __contains__(self, q) -> bool:
        return as_frequency(q) in self.elements

    def __getitem__(self, q) -> LambdaPoint:
        return self.elements[as_frequency(q)]

    def chi(self, q) -> int:
        return self[q].chi

    def zetas(self) -> dict[Frequency, tuple[int, ...]]:
        return {q: p.zeta for q, p in self.elements.items()}

    def min_separation(self) -> float:
        """Smallest distance between two distinct elements, by brute force."""
        pts = np.array(list(self.elements), dtype=object)
        if len(pts) < 2:
            return math.inf
        best = None
        for i in range(len(pts) - 1):
            d = pts[i + 1 :] - pts[i]
            sq = d[:, 0] * d[:, 0] + d[:, 1] * d[:, 1]
            m = min(sq)
            best = m if best is None or m < best else best
        return math.sqrt(best)


def _check_centers(centers) -> tuple[Frequency, ...]:
    cs = tuple(as_frequency(c) for c in centers)
    if not cs:
        raise ValueError("need at least one center")
    if any(c.is_zero() for c in cs):
        raise ValueError("centers must be nonzero")
    if len(set(cs)) != len(cs):
        raise ValueError("centers must be pairwise distinct")
    return cs


def build_lambda_set(centers: Sequence) -> LambdaSet:
    """Enumerate all 3**s signed sums of ``centers`` and index the nonzero ones.

    Raises RepresentationCollision when two sign tuples give the same point
    (the zero tuple included), i.e. when the centers are not lacunary enough.
    """
    cs = _check_centers(centers)
    s = len(cs)
    seen: dict[Frequency, tuple[int, ...]] = {}
    elements: dict[Frequency, LambdaPoint] = {}
    for zeta in itertools.product((-1, 0, 1), repeat=s):
        k1 = sum(z * c.k1 for z, c in zip(zeta, cs))
        k2 = sum(z * c.k2 for z, c in zip(zeta, cs))
        q = Frequency(k1, k2)
        if q in seen:
            raise RepresentationCollision(q, seen[q], zeta)
        seen[q] = zeta
        if any(zeta):
            nz = [i for i, z in enumerate(zeta) if z]
            elements[q] = LambdaPoint(zeta=zeta, chi=len(nz), top_index=nz[-1])
    ordered = {q: elements[q] for q in sorted(elements)}
    return LambdaSet(centers=cs, elements=MappingProxyType(ordered))


def _on_lambda(lam: LambdaSet, coeffs: dict, *, real: bool) -> SparseTrigPoly:
    zetas = lam.zetas()
    return SparseTrigPoly(coeffs, real=real, basis=lam.centers, zetas=zetas)


def riesz_product_expand(centers: Sequence | LambdaSet) -> SparseTrigPoly:
    """Expansion of ``prod_k (1 + cos(2 pi <c^k, x>))``.

    The constant term is 1 and every q in the signed-sum set gets 2**-chi(q).
    Subtract the constant to obtain the modified product R_s.
    """
    lam = centers if isinstance(centers, LambdaSet) else build_lambda_set(centers)
    coeffs: dict = {ZERO: Fraction(1)}
    for q, p in lam.elements.items():
        coeffs[q] = Fraction(1, 2**p.chi)
    return _on_lambda(lam, coeffs, real=True)


def alternating_signs(s: int) -> tuple[int, ...]:
    """(-1)**j for j = 1..s."""
    return tuple(-1 if j % 2 else 1 for j in range(1, s + 1))


def z_polynomial(centers: Sequence | LambdaSet, signs: Sequence[int] | None = None) -> SparseTrigPoly:
    """Expansion of ``sum_j signs[j] cos(2 pi <c^j,x>) prod_{k<j} (1 + cos(2 pi <c^k,x>))``.

    Default signs are (-1)**j.  The coefficient at q is
    ``signs[top_index(q)] * 2**-chi(q)``.
    """
    lam = centers if isinstance(centers, LambdaSet) else build_lambda_set(centers)
    signs = alternating_signs(lam.s) if signs is None else tuple(int(x) for x in signs)
    if len(signs) != lam.s or any(x not in (-1, 1) for x in signs):
        raise ValueError(f"need {lam.s} signs in {{-1, +1}}, got {signs}")
    coeffs = {q: Fraction(signs[p.top_index], 2**p.chi) for q, p in lam.elements.items()}
    return _on_lambda(lam, coeffs, real=True)


def exp_polynomial(centers: Sequence | LambdaSet) -> SparseTrigPoly:
    """Expansion of ``sum_j exp(2 pi i <c^j,x>) prod_{k<j} (1 + cos(2 pi <c^k,x>))``.

    Only points whose top sign is +1 appear, with coefficient
    ``2**-(chi(q) - 1)``.
    """
    lam = centers if isinstance(centers, LambdaSet) else build_lambda_set(centers)
    coeffs = {
        q: Fraction(1, 2 ** (p.chi - 1))
        for q, p in lam.elements.items()
        if p.zeta[p.top_index] == 1
    }
    return _on_lambda(lam, coeffs, real=False)


def collinear_centers(s: int, ratio: int, direction=(1, 0)) -> list[Frequency]:
    """``ratio**j * direction`` for j = 0..s-1."""
    d = as_frequency(direction)
    return [d.scaled(ratio**j) for j in range(s)]


def product_form(kind: str, phases: np.ndarray, signs: Sequence[int] | None = None) -> np.ndarray:
    """Evaluate a builder directly from its product definition.

    ``phases`` has shape (s, n) and holds the angles 2 pi <c^j, x>.  This is
    the pointwise oracle the sparse expansions are checked against.
    """
    s, n = phases.shape
    running = np.ones(n)
    if kind == "riesz":
        for j in range(s):
            running = running * (1.0 + np.cos(phases[j]))
        return running
    out = np.zeros(n, dtype=complex if kind == "exp" else float)
    signs = alternating_signs(s) if signs is None else signs
    for j in range(s):
        if kind == "z":
            out = out + signs[j] * np.cos(phases[j]) * running
        elif kind == "exp":
            out = out + np.exp(1j * phases[j]) * running
        else:
            raise ValueError(f"unknown product kind {kind!r}")
        running = running * (1.0 + np.cos(phases[j]))
    return out
