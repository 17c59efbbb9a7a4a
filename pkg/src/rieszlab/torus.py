"""Evaluation and L^1 / L^inf norms of sparse trigonometric polynomials on T^2.

The torus is the unit square with normalized Lebesgue measure.  Phases
``<q, x> mod 1`` are always computed exactly: sample points are dyadic
rationals ``u / 2**K`` and the products ``q . u`` are reduced modulo 2**K in
integer arithmetic (wrapping uint64 when K <= 64, Python integers beyond).
Floating point only enters after the reduction, so frequencies of any size
are handled without loss of phase accuracy.

Two quadrature routes exist:

* grid: Riemann sum on an ``n1 x n2`` grid, streamed one row at a time with a
  1-D FFT along the first axis.  The error bound is the Lipschitz bound
  ``pi * sum_q |c_q| (|q1|/n1 + |q2|/n2)``.
* Monte Carlo: uniform samples, 99% CLT half-width as error bound.
"""

from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import ResourceExceeded
from .freq import (
    SparseTrigPoly,
    build_lambda_set,
    exp_polynomial,
    z_polynomial,
)

Z99 = 2.5758293035489004  # two-sided 99% normal quantile
MASK64 = (1 << 64) - 1
_CHUNK = 1 << 14


class Method(str, enum.Enum):
    GRID_EXACT = "GridExact"
    GRID_BOUNDED = "GridBounded"
    MONTE_CARLO = "MonteCarlo"
    CLOSED_FORM = "ClosedForm"
    FFT = "FFT"


@dataclass(frozen=True)
class NormEstimate:
    value: float
    error_bound: float
    method: Method
    samples_or_gridsize: int
    rng_seed: int | None = None

    @property
    def lower(self) -> float:
        return self.value - self.error_bound

    @property
    def upper(self) -> float:
        return self.value + self.error_bound

    def to_dict(self) -> dict:
        d = asdict(self)
        d["method"] = self.method.value
        return d


@dataclass(frozen=True)
class QuadratureSpec:
    """How to integrate.  ``mode`` is one of "auto", "grid", "mc".

    ``grid_n`` fixes the per-axis grid size for mode "grid" (both axes, or
    a pair).  "auto" picks the smallest power-of-two grid with at least
    ``4 * max|q_i|`` points per axis and falls back to Monte Carlo when the
    grid would exceed ``max_grid_points`` or ``max_memory_hint`` bytes.
    """

    mode: str = "auto"
    grid_n: int | tuple[int, int] | None = None
    samples: int = 1_000_000
    seed: int = 0
    max_memory_hint: int = 1 << 30
    max_grid_points: int = 1 << 27
    allow_mc_fallback: bool = True
    workers: int | None = None

    def __post_init__(self):
        if self.mode not in ("auto", "grid", "mc"):
            raise ValueError(f"unknown quadrature mode {self.mode!r}")
        if self.mode == "grid":
            if self.grid_n is None:
                raise ValueError("mode 'grid' needs grid_n")
            ns = self.grid_n if isinstance(self.grid_n, tuple) else (self.grid_n, self.grid_n)
            if min(ns) < 1:
                raise ValueError("grid size must be positive")
        if self.samples < 2:
            raise ValueError("need at least 2 Monte Carlo samples")

    @classmethod
    def fixed_grid(cls, n, **kw) -> "QuadratureSpec":
        return cls(mode="grid", grid_n=n, **kw)

    @classmethod
    def monte_carlo(cls, samples: int = 1_000_000, seed: int = 0, **kw) -> "QuadratureSpec":
        return cls(mode="mc", samples=samples, seed=seed, **kw)


# ---------------------------------------------------------------------------
# Exact phase reduction
# ---------------------------------------------------------------------------


def _to_u64(values: Iterable[int]) -> np.ndarray:
    return np.array([int(v) & MASK64 for v in values], dtype=np.uint64)


def _phase_uint(q1: np.ndarray, q2: np.ndarray, u1: np.ndarray, u2: np.ndarray, bits: int) -> np.ndarray:
    """Fractional parts of ``(q1*u1 + q2*u2) / 2**bits`` for ``bits <= 64``.

    ``q`` holds frequencies reduced mod 2**64; arithmetic wraps mod 2**64,
    which is exact modulo any smaller power of two.
    """
    with np.errstate(over="ignore"):
        acc = np.multiply.outer(q1, u1) + np.multiply.outer(q2, u2)
    if bits < 64:
        acc &= np.uint64((1 << bits) - 1)
    return acc.astype(np.float64) * (2.0**-bits)


def _phase_bigint(g1: int, g2: int, u1: np.ndarray, u2: np.ndarray, bits: int) -> np.ndarray:
    mod = (1 << bits) - 1
    shift = bits - 53
    vals = (u1 * g1 + u2 * g2) & mod
    if shift > 0:
        vals = vals >> shift
        return vals.astype(np.float64) * 2.0**-53
    return vals.astype(np.float64) * 2.0**-bits


@dataclass
class DyadicPoints:
    """Points ``(u1, u2) / 2**bits``; integer arrays (uint64 or object)."""

    u1: np.ndarray
    u2: np.ndarray
    bits: int

    def __len__(self) -> int:
        return len(self.u1)

    def as_float(self) -> np.ndarray:
        if self.bits <= 64:
            f1 = self.u1.astype(np.float64) * 2.0**-self.bits
            f2 = self.u2.astype(np.float64) * 2.0**-self.bits
        else:
            sh = self.bits - 53
            f1 = (self.u1 >> sh).astype(np.float64) * 2.0**-53
            f2 = (self.u2 >> sh).astype(np.float64) * 2.0**-53
        return np.stack([f1, f2], axis=1)

    def take(self, sl: slice) -> "DyadicPoints":
        return DyadicPoints(self.u1[sl], self.u2[sl], self.bits)

    @classmethod
    def from_float(cls, points) -> "DyadicPoints":
        """Exact conversion of floats in [0, 1) on the 2**-53 grid (rounded otherwise)."""
        pts = np.mod(np.atleast_2d(np.asarray(points, dtype=np.float64)), 1.0)
        u = np.round(pts * 2.0**53).astype(np.uint64) & np.uint64((1 << 53) - 1)
        return cls(u[:, 0].copy(), u[:, 1].copy(), 53)

    @classmethod
    def random(cls, n: int, bits: int, rng: np.random.Generator) -> "DyadicPoints":
        if bits <= 64:
            hi = np.iinfo(np.uint64).max
            u = rng.integers(0, hi, size=(2, n), dtype=np.uint64, endpoint=True)
            if bits < 64:
                u &= np.uint64((1 << bits) - 1)
            return cls(u[0], u[1], bits)
        words = -(-bits // 64)
        raw = rng.integers(0, np.iinfo(np.uint64).max, size=(2, words, n), dtype=np.uint64, endpoint=True)
        out = []
        for axis in range(2):
            acc = np.zeros(n, dtype=object)
            for w in range(words):
                acc = acc + (raw[axis, w].astype(object) << (64 * w))
            out.append(acc & ((1 << bits) - 1))
        return cls(out[0], out[1], bits)


def generator_phases(basis: Sequence, points: DyadicPoints) -> np.ndarray:
    """Exact fractional phases ``<c^j, x> mod 1``, shape (len(basis), n)."""
    if points.bits <= 64:
        g1 = _to_u64(c[0] for c in basis)
        g2 = _to_u64(c[1] for c in basis)
        return _phase_uint(g1, g2, points.u1, points.u2, points.bits)
    u1 = points.u1 if points.u1.dtype == object else points.u1.astype(object)
    u2 = points.u2 if points.u2.dtype == object else points.u2.astype(object)
    return np.stack([_phase_bigint(int(c[0]), int(c[1]), u1, u2, points.bits) for c in basis])


def _required_bits(poly: SparseTrigPoly) -> int:
    m1, m2 = poly.max_abs_frequency()
    big = max(m1, m2, 1)
    return big.bit_length() + 64


def _term_phases(poly: SparseTrigPoly, qs: list, points: DyadicPoints, gen_phase: np.ndarray | None) -> np.ndarray:
    if gen_phase is not None:
        zeta = np.array([poly.zetas[q] for q in qs], dtype=np.float64)
        ph = zeta @ gen_phase
        return ph - np.floor(ph)
    if points.bits <= 64:
        return _phase_uint(_to_u64(q[0] for q in qs), _to_u64(q[1] for q in qs), points.u1, points.u2, points.bits)
    u1 = points.u1.astype(object)
    u2 = points.u2.astype(object)
    return np.stack([_phase_bigint(q[0], q[1], u1, u2, points.bits) for q in qs])


def _basis_values(poly: SparseTrigPoly, qs: list, coeff: np.ndarray, gen: np.ndarray) -> np.ndarray:
    """Sum of terms via products of generator exponentials, memoized on sign prefixes."""
    e_plus = np.exp(2j * np.pi * gen)
    factors = {1: e_plus, -1: e_plus.conj()}
    ones = np.ones(gen.shape[1], dtype=np.complex128)
    cache: dict[tuple, np.ndarray] = {(): ones}
    total = np.zeros(gen.shape[1], dtype=np.complex128)
    for q, c in zip(qs, coeff):
        z = poly.zetas[q]
        # trailing zeros do not change the product
        k = len(z)
        while k and z[k - 1] == 0:
            k -= 1
        key = z[:k]
        if key not in cache:
            j = k - 1
            while z[:j] not in cache:
                j -= 1
            for i in range(j, k):
                prev = cache[z[:i]]
                cache[z[: i + 1]] = prev if z[i] == 0 else prev * factors[z[i]][i]
        total += c * cache[key]
    return total


def evaluate_dyadic(poly: SparseTrigPoly, points: DyadicPoints) -> np.ndarray:
    """Values of ``poly`` at exactly represented dyadic points."""
    n = len(points)
    out = np.zeros(n, dtype=np.complex128)
    if len(poly) == 0:
        return out
    items = list(poly.items())
    const = complex(poly[(0, 0)])
    if poly.real:
        # conjugate pairs: c_q e(q) + conj(c_q e(q)) = 2 Re(c_q e(q))
        items = [(q, c) for q, c in items if q > (0, 0)]
    qs = [q for q, _ in items]
    coeff = np.array([complex(c) for _, c in items], dtype=np.complex128)
    if not qs:
        out[:] = const
        return out
    use_basis = poly.basis is not None
    chunk = 4096 if use_basis else _CHUNK
    for start in range(0, n, chunk):
        sub = points.take(slice(start, start + chunk))
        if use_basis:
            acc = _basis_values(poly, qs, coeff, generator_phases(poly.basis, sub))
        else:
            acc = np.zeros(len(sub), dtype=np.complex128)
            for t0 in range(0, len(qs), 128):
                ph = _term_phases(poly, qs[t0 : t0 + 128], sub, None)
                acc += coeff[t0 : t0 + 128] @ np.exp(2j * np.pi * ph)
        if poly.real:
            acc = 2.0 * acc.real
        out[start : start + len(sub)] = acc
    if poly.real:
        out += const
    return out


def evaluate(poly: SparseTrigPoly, points) -> np.ndarray:
    """Values at an (n, 2) array of points in [0,1)^2 (taken modulo 1)."""
    pts = DyadicPoints.from_float(points)
    vals = evaluate_dyadic(poly, pts)
    return vals.real if poly.real else vals


def eval_at(poly: SparseTrigPoly, point) -> complex:
    """Value at one point, with the phase reduced in exact rational arithmetic."""
    x1, x2 = (Fraction(float(v)) for v in point)
    total = 0j
    for q, c in poly.items():
        ph = (q[0] * x1 + q[1] * x2) % 1
        total += complex(c) * complex(np.exp(2j * np.pi * float(ph)))
    return total


# ---------------------------------------------------------------------------
# Norms
# ---------------------------------------------------------------------------


def _next_pow2(x: int) -> int:
    return 1 if x <= 1 else 1 << (int(x) - 1).bit_length()


MIN_AUTO_GRID = 256


def auto_grid_size(poly: SparseTrigPoly) -> tuple[int, int]:
    """Per axis: the smallest power of two >= 4 max|q_i| (at least ``MIN_AUTO_GRID``), or 1 if unused."""
    m1, m2 = poly.max_abs_frequency()
    return tuple(max(_next_pow2(4 * m), MIN_AUTO_GRID) if m else 1 for m in (m1, m2))


def lipschitz_bound(poly: SparseTrigPoly, n1: int, n2: int) -> float:
    w1, w2 = poly.gradient_weight()
    return math.pi * (w1 / n1 + w2 / n2)


def _grid_rows(poly: SparseTrigPoly, n1: int, n2: int, rows: range, reducer: Callable[[np.ndarray], float]) -> list[float]:
    qs = list(poly.coeffs)
    coeff = poly.coefficient_array()
    idx1 = np.array([q[0] % n1 for q in qs], dtype=np.int64)
    r2 = np.array([q[1] % n2 for q in qs], dtype=np.int64)
    out = []
    for j2 in rows:
        # exact phase (q2 * j2 mod n2) / n2
        tw = np.exp(2j * np.pi * ((r2 * j2) % n2) / n2)
        b = np.zeros(n1, dtype=np.complex128)
        np.add.at(b, idx1, coeff * tw)
        vals = np.fft.ifft(b) * n1
        out.append(reducer(vals.real if poly.real else vals))
    return out


def _grid_reduce(poly, n1, n2, reducer, workers):
    workers = workers or min(8, os.cpu_count() or 1)
    if n2 == 1 or workers == 1:
        return _grid_rows(poly, n1, n2, range(n2), reducer)
    bounds = np.linspace(0, n2, min(workers, n2) + 1).astype(int)
    chunks = [range(a, b) for a, b in zip(bounds[:-1], bounds[1:])]
    with ThreadPoolExecutor(max_workers=len(chunks)) as ex:
        parts = list(ex.map(lambda r: _grid_rows(poly, n1, n2, r, reducer), chunks))
    return [v for p in parts for v in p]


def _grid_l1(poly: SparseTrigPoly, n1: int, n2: int, spec: QuadratureSpec) -> NormEstimate:
    row_sums = _grid_reduce(poly, n1, n2, lambda v: float(np.sum(np.abs(v))), spec.workers)
    value = math.fsum(row_sums) / (n1 * n2)
    m1, m2 = poly.max_abs_frequency()
    resolves = n1 >= 2 * m1 + 1 and n2 >= 2 * m2 + 1
    return NormEstimate(
        value=value,
        error_bound=lipschitz_bound(poly, n1, n2),
        method=Method.GRID_EXACT if resolves else Method.GRID_BOUNDED,
        samples_or_gridsize=n1 * n2,
    )


def _mc_abs_samples(poly: SparseTrigPoly, samples: int, seed: int) -> tuple[np.ndarray, int]:
    rng = np.random.default_rng(seed)
    bits = 64 if _required_bits(poly) <= 104 else _required_bits(poly)
    pts = DyadicPoints.random(samples, bits, rng)
    return np.abs(evaluate_dyadic(poly, pts)), bits


def _mc_l1(poly: SparseTrigPoly, spec: QuadratureSpec) -> NormEstimate:
    vals, bits = _mc_abs_samples(poly, spec.samples, spec.seed)
    half = Z99 * float(np.std(vals, ddof=1)) / math.sqrt(len(vals))
    # sampling on the 2**-bits grid: Riemann bias bounded by the Lipschitz term
    bias = lipschitz_bound(poly, 2**bits, 2**bits)
    return NormEstimate(
        value=float(np.mean(vals)),
        error_bound=half + bias,
        method=Method.MONTE_CARLO,
        samples_or_gridsize=len(vals),
        rng_seed=spec.seed,
    )


def _choose_grid(poly: SparseTrigPoly, spec: QuadratureSpec) -> tuple[int, int] | None:
    if spec.mode == "mc":
        return None
    if spec.mode == "grid":
        n = spec.grid_n
        return n if isinstance(n, tuple) else (n, n)
    n1, n2 = auto_grid_size(poly)
    row_bytes = 16 * n1 * (2 + (spec.workers or 1))
    if n1 * n2 > spec.max_grid_points or row_bytes > spec.max_memory_hint:
        if not spec.allow_mc_fallback:
            raise ResourceExceeded(
                f"grid {n1}x{n2} exceeds budget ({spec.max_grid_points} points, {spec.max_memory_hint} bytes)"
            )
        return None
    return n1, n2


def l1_norm(poly: SparseTrigPoly, spec: QuadratureSpec | None = None) -> NormEstimate:
    """Estimate ``int_{T^2} |poly|``."""
    spec = spec or QuadratureSpec()
    if len(poly) == 0:
        return NormEstimate(0.0, 0.0, Method.GRID_EXACT, 1)
    if len(poly) == 1 and poly.is_exact:
        # unimodular monomial: norm is |c| exactly
        (c,) = poly.coeffs.values()
        return NormEstimate(abs(float(c)), 0.0, Method.GRID_EXACT, 1)
    grid = _choose_grid(poly, spec)
    if grid is None:
        return _mc_l1(poly, spec)
    return _grid_l1(poly, *grid, spec)


def sup_norm(poly: SparseTrigPoly, spec: QuadratureSpec | None = None) -> NormEstimate:
    """Grid maximum of ``|poly|``; the true sup lies in [value, value + error_bound]."""
    spec = spec or QuadratureSpec()
    grid = _choose_grid(poly, spec)
    if grid is None:
        vals, _ = _mc_abs_samples(poly, spec.samples, spec.seed)
        return NormEstimate(float(vals.max()), poly.coefficient_l1() - float(vals.max()),
                            Method.MONTE_CARLO, len(vals), spec.seed)
    n1, n2 = grid
    maxima = _grid_reduce(poly, n1, n2, lambda v: float(np.max(np.abs(v))), spec.workers)
    w1, w2 = poly.gradient_weight()
    err = 2 * math.pi * (w1 / n1 + w2 / n2)
    return NormEstimate(max(maxima), err, Method.GRID_EXACT, n1 * n2)


# ---------------------------------------------------------------------------
# Growth profiles
# ---------------------------------------------------------------------------


class Builder(str, enum.Enum):
    SYMMETRIC_Z = "SymmetricZ"
    ASYMMETRIC_EXP = "AsymmetricExp"


@dataclass(frozen=True)
class GrowthRow:
    s: int
    norm: NormEstimate
    per_s: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "per_s", self.norm.value / self.s)


def growth_profile(
    builder: Builder | str,
    center_generator: Callable[[int], Sequence],
    s_range: Iterable[int],
    spec: QuadratureSpec | None = None,
    signs: Callable[[int], Sequence[int]] | None = None,
) -> list[GrowthRow]:
    """One row ``(s, ||poly_s||, ||poly_s|| / s)`` per s."""
    builder = Builder(builder)
    rows = []
    for s in s_range:
        lam = build_lambda_set(center_generator(s))
        if builder is Builder.SYMMETRIC_Z:
            poly = z_polynomial(lam, signs(s) if signs else None)
        else:
            poly = exp_polynomial(lam)
        rows.append(GrowthRow(s, l1_norm(poly, spec)))
    return rows
