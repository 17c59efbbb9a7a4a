"""Plane-side kernels: g, G, the lattice transfer W(phi), bump sums and L^1 norms of inverse transforms.

Conventions: ``F^-1 f(x) = int f(xi) exp(2 pi i <x, xi>) dxi``.  The one-dimensional
kernel ``g(t) = max(1 - |t|, 0)^2`` has the nonnegative inverse transform::

    g_check(x) = 4 (w - sin w) / w^3,   w = 2 pi x,

with ``g_check(0) = 2/3`` and total mass ``g(0) = 1``; ``G = g (x) g`` inherits
both facts.  A bump sum ``H(xi) = sum_q a_q G(lam (xi - q))`` over integer
``q`` therefore satisfies ``F^-1 H(x) = lam^-2 G_check(x / lam) R(x)`` with
``R(x) = sum_q a_q e(<q, x>)``, so ``||F^-1 H||_1 = E |R(lam Y)|`` for ``Y``
drawn from the density ``G_check``.  That expectation is what the Monte Carlo
path estimates, with exact dyadic phases for very large ``q``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy import special

from .errors import BumpOverlap, ConfigError, NoStabilization
from .freq import Frequency, LambdaSet, as_frequency, build_lambda_set
from .torus import Z99, DyadicPoints, Method, NormEstimate, QuadratureSpec, generator_phases

# ---------------------------------------------------------------------------
# One-dimensional kernel and its transforms
# ---------------------------------------------------------------------------


def g_kernel(t):
    """``max(1 - |t|, 0)^2``."""
    t = np.asarray(t, dtype=np.float64)
    out = np.maximum(1.0 - np.abs(t), 0.0) ** 2
    return float(out) if out.ndim == 0 else out


def G_kernel(xi1, xi2):
    return g_kernel(xi1) * g_kernel(xi2)


def g_check(x):
    """Inverse Fourier transform of ``g`` (real, even, positive)."""
    w = 2 * np.pi * np.abs(np.asarray(x, dtype=np.float64))
    small = w < 0.1
    ws = np.where(small, 1.0, w)
    big = 4.0 * (ws - np.sin(ws)) / ws**3
    w2 = w * w
    series = 4.0 * (1 / 6 - w2 / 120 + w2 * w2 / 5040 - w2**3 / 362880)
    out = np.where(small, series, big)
    return float(out) if out.ndim == 0 else out


def _F(w):
    """Antiderivative with ``int_0^X g_check = (2/pi) F(2 pi X)``; ``F(0) = 0``, ``F(inf) = pi/4``."""
    w = np.asarray(w, dtype=np.float64)
    small = w < 0.1
    ws = np.where(small, 1.0, w)
    si, _ = special.sici(ws)
    big = -1.0 / ws + np.sin(ws) / (2 * ws**2) + np.cos(ws) / (2 * ws) + si / 2
    series = w / 6 - w**3 / 360 + w**5 / 25200
    return np.where(small, series, big)


def g_check_mass(X):
    """``int_{-X}^{X} g_check`` for ``X >= 0``."""
    X = np.abs(np.asarray(X, dtype=np.float64))
    out = np.where(np.isinf(X), 1.0, (4 / np.pi) * _F(2 * np.pi * np.where(np.isinf(X), 0.0, X)))
    return float(out) if out.ndim == 0 else out


_MOMENT_TAYLOR_CUTOFF = 4.0


def _half_moment(n: int, w: np.ndarray) -> np.ndarray:
    """``int_0^1 t^n (1-t)^2 e^{i w t} dt``."""
    w = np.asarray(w, dtype=np.float64)
    out = np.empty(w.shape, dtype=np.complex128)
    small = np.abs(w) <= _MOMENT_TAYLOR_CUTOFF
    if np.any(small):
        ws = w[small]
        acc = np.zeros(ws.shape, dtype=np.complex128)
        term = np.ones(ws.shape, dtype=np.complex128)  # (i w)^k / k!
        for k in range(60):
            m = n + k
            acc += term * (2.0 / ((m + 1) * (m + 2) * (m + 3)))
            term = term * (1j * ws) / (k + 1)
        out[small] = acc
    if np.any(~small):
        wb = w[~small]
        # p(t) = t^n (1-t)^2 as a coefficient list, integrated by parts exactly
        p = np.polynomial.Polynomial([0.0] * n + [1.0]) * np.polynomial.Polynomial([1.0, -1.0]) ** 2
        acc = np.zeros(wb.shape, dtype=np.complex128)
        e1 = np.exp(1j * wb)
        sign = 1.0
        iw = 1j * wb
        d = p
        for j in range(n + 3):
            acc += sign * (d(1.0) * e1 - d(0.0)) / iw ** (j + 1)
            d = d.deriv()
            sign = -sign
        out[~small] = acc
    return out


def g_moment(n: int, y):
    """``int t^n g(t) e^{2 pi i t y} dt``; ``g_moment(0, y) = g_check(y)``."""
    w = 2 * np.pi * np.asarray(y, dtype=np.float64)
    h = _half_moment(n, np.atleast_1d(w))
    hm = _half_moment(n, np.atleast_1d(-w))
    out = h + (-1) ** n * hm
    return out.reshape(np.shape(w)) if np.ndim(w) else complex(out[0])


_CDF_X = np.logspace(-9, 13, 4000)
_CDF_V = g_check_mass(_CDF_X)
CLIP = 1e-12


def sample_g_check(rng: np.random.Generator, size) -> np.ndarray:
    """Draws from the density ``g_check`` by inverse transform (symmetric)."""
    v = rng.random(size)
    v = np.minimum(v, 1.0 - CLIP)
    X = np.exp(np.interp(v, _CDF_V, np.log(_CDF_X)))
    for _ in range(4):
        X = np.maximum(X - (g_check_mass(X) - v) / (2 * g_check(X)), 0.5 * X)
    sign = np.where(rng.random(size) < 0.5, -1.0, 1.0)
    return sign * X


# ---------------------------------------------------------------------------
# Plane functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BumpSum:
    """``sum_q a_q G(dilation (xi - q))`` over integer points ``q`` (``dilation >= 1``)."""

    coeffs: Mapping[Frequency, complex]
    dilation: Fraction
    lam: LambdaSet | None = None

    def abs_coefficient_sum(self) -> float:
        return float(sum(abs(complex(c)) for c in self.coeffs.values()))

    def value(self, xi1, xi2) -> complex:
        """Exact-coordinate evaluation (arguments may be huge ``Fraction`` values)."""
        x1, x2 = Fraction(xi1), Fraction(xi2)
        lam = self.dilation
        total = 0j
        f1, f2 = math.floor(x1), math.floor(x2)
        for n1 in (f1, f1 + 1):
            for n2 in (f2, f2 + 1):
                c = self.coeffs.get(Frequency(n1, n2))
                if c is None:
                    continue
                total += complex(c) * G_kernel(float(lam * (x1 - n1)), float(lam * (x2 - n2)))
        return total


@dataclass(frozen=True)
class PlaneFunction:
    """A function on the plane.

    ``support`` is ``"global"`` or a tuple of ``(center, radius)`` max-norm
    balls; evaluation outside them is exactly 0.  ``bumps`` carries the
    structure used by the closed-form and sampling norm paths.
    """

    label: str
    fn: Callable[[np.ndarray, np.ndarray], np.ndarray] = field(repr=False)
    support: tuple | str = "global"
    smoothness: str = "C1"
    bumps: BumpSum | None = field(default=None, repr=False)

    def __call__(self, xi1, xi2=None):
        if xi2 is None:
            pts = xi1
            if isinstance(pts, (list, tuple)) and pts and not isinstance(pts[0], (list, tuple, np.ndarray)):
                return self.at(pts)
            pts = np.asarray(pts, dtype=np.float64)
            return self.fn(pts[..., 0], pts[..., 1])
        return self.fn(np.asarray(xi1, dtype=np.float64), np.asarray(xi2, dtype=np.float64))

    def at(self, point) -> complex:
        """Value at one point; exact rationals keep full precision for bump sums."""
        if self.bumps is not None:
            return self.bumps.value(point[0], point[1])
        return complex(np.asarray(self.fn(np.float64(point[0]), np.float64(point[1]))))

    def bounding_box(self) -> tuple[float, float, float, float]:
        if self.support == "global":
            raise ConfigError(f"{self.label} has no compact support")
        lo1 = min(float(c[0]) - r for c, r in self.support)
        hi1 = max(float(c[0]) + r for c, r in self.support)
        lo2 = min(float(c[1]) - r for c, r in self.support)
        hi2 = max(float(c[1]) + r for c, r in self.support)
        return lo1, hi1, lo2, hi2


def _bump_fn(bumps: BumpSum) -> Callable:
    def fn(x1, x2):
        x1, x2 = np.broadcast_arrays(np.asarray(x1, dtype=np.float64), np.asarray(x2, dtype=np.float64))
        flat = [bumps.value(a, b) for a, b in zip(x1.ravel().tolist(), x2.ravel().tolist())]
        out = np.array(flat, dtype=np.complex128).reshape(x1.shape)
        if all(complex(c).imag == 0 for c in bumps.coeffs.values()):
            out = out.real
        return out if out.ndim else out[()]

    return fn


def bump_plane_function(coeffs: Mapping, dilation=1, label: str = "bumps", lam: LambdaSet | None = None) -> PlaneFunction:
    dil = Fraction(dilation)
    if dil < 1:
        raise ConfigError("dilation must be at least 1 for lattice bump sums")
    co = {as_frequency(q): c for q, c in coeffs.items() if c != 0}
    bumps = BumpSum(co, dil, lam)
    rad = float(1 / dil)
    support = tuple(((q.k1, q.k2), rad) for q in sorted(co))
    return PlaneFunction(label, _bump_fn(bumps), support, "C1", bumps)


def G_plane(dilation=1) -> PlaneFunction:
    """``xi -> G(dilation * xi)``."""
    return bump_plane_function({(0, 0): 1}, dilation, label=f"G({dilation}xi)")


def fejer_transfer(phi: Mapping) -> PlaneFunction:
    """``W(phi)(xi) = sum_n G(n - xi) phi(n)``; interpolates ``phi`` on the lattice."""
    return bump_plane_function(phi, 1, label="W(phi)")


def _integer_centers(scheme_or_centers) -> tuple[Frequency, ...]:
    if hasattr(scheme_or_centers, "frequencies"):
        return tuple(scheme_or_centers.frequencies)
    if hasattr(scheme_or_centers, "centers") and hasattr(scheme_or_centers, "scale"):
        if scheme_or_centers.scale != 1 or any(
            Fraction(v).denominator != 1 for c in scheme_or_centers.centers for v in c
        ):
            raise ConfigError("bump sums need an integer scheme; rescale first")
        return tuple(Frequency(int(c[0]), int(c[1])) for c in scheme_or_centers.centers)
    return tuple(as_frequency(c) for c in scheme_or_centers)


def chebyshev_separation(lam: LambdaSet) -> int:
    """Minimal max-norm distance between distinct points of Lambda_s."""
    pts = list(lam.elements)
    if len(pts) < 2:
        return 0
    a1 = np.array([p.k1 for p in pts], dtype=object)
    a2 = np.array([p.k2 for p in pts], dtype=object)
    best = None
    for i in range(len(pts) - 1):
        d = np.maximum(np.abs(a1[i + 1 :] - a1[i]), np.abs(a2[i + 1 :] - a2[i]))
        m = int(d.min())
        best = m if best is None else min(best, m)
    return best


def min_theta(lam: LambdaSet) -> int:
    """Smallest positive theta with ``2 * 2^-theta`` below the minimal separation."""
    sep = chebyshev_separation(lam)
    theta = 1
    while Fraction(2, 2**theta) >= sep:
        theta += 1
    return theta


def _lambda_for(scheme_or_centers) -> LambdaSet:
    if isinstance(scheme_or_centers, LambdaSet):
        return scheme_or_centers
    return build_lambda_set(_integer_centers(scheme_or_centers))


def h_theta(scheme_or_centers, theta: int) -> PlaneFunction:
    """``H^theta(xi) = sum_{q in Lambda_s} 2^-chi(q) G(2^theta (xi - q))``."""
    if theta < 1:
        raise ConfigError("theta must be a positive integer")
    lam = _lambda_for(scheme_or_centers)
    sep = chebyshev_separation(lam)
    if Fraction(2, 2**theta) >= sep:
        raise BumpOverlap(f"2^-{theta} is not below half the minimal separation {sep}")
    coeffs = {q: Fraction(1, 2**p.chi) for q, p in lam.elements.items()}
    return bump_plane_function(coeffs, 2**theta, label=f"H^{theta}", lam=lam)


# ---------------------------------------------------------------------------
# L^1 norms of inverse transforms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PlaneNormEstimate(NormEstimate):
    """Norm over the truncation box plus the mass outside it (``tail``)."""

    tail: float = 0.0
    truncation_radius: float | None = None


def _box_mass(X: float | None) -> float:
    return 1.0 if X is None else g_check_mass(X) ** 2


def _auto_radius(dilation: float, tail_fraction: float) -> float:
    """Smallest power-of-two radius with envelope tail below ``tail_fraction``."""
    R = 1.0
    while 1.0 - g_check_mass(R * dilation) ** 2 >= tail_fraction:
        R *= 2
    return R


def _dyadic_from_float(x: np.ndarray, bits: int, rng: np.random.Generator) -> np.ndarray:
    """Fractional parts on the ``2^-bits`` grid; bits below 2^-53 are filled at random.

    The dither keeps huge integer frequencies from seeing a collapsed set of
    phases; it moves each point by less than ``2^-53``.
    """
    frac = np.mod(x, 1.0)
    hi = np.floor(np.ldexp(frac, 53)).astype(np.uint64) & np.uint64((1 << 53) - 1)
    low_bits = bits - 53
    if bits <= 64:
        low = rng.integers(0, 1 << low_bits, size=x.shape, dtype=np.uint64)
        return (hi << np.uint64(low_bits)) | low
    low = DyadicPoints.random(len(x), low_bits, rng).u1
    return (hi.astype(object) << low_bits) + low


def _plane_points(x1: np.ndarray, x2: np.ndarray, max_q: int, rng: np.random.Generator) -> DyadicPoints:
    bits = max(64, max_q.bit_length() + 64)
    return DyadicPoints(_dyadic_from_float(x1, bits, rng), _dyadic_from_float(x2, bits, rng), bits)


def _term_phases(lam: LambdaSet, qs: list, pts: DyadicPoints) -> np.ndarray:
    gen = generator_phases(lam.centers, pts)
    zeta = np.array([lam[q].zeta for q in qs], dtype=np.float64)
    ph = zeta @ gen
    return 2 * np.pi * (ph - np.floor(ph))


def _bump_lambda(bumps: BumpSum) -> LambdaSet | None:
    if bumps.lam is not None and all(q in bumps.lam for q in bumps.coeffs):
        return bumps.lam
    return None


def _mc_bump_norm(bumps: BumpSum, spec: QuadratureSpec, truncation_radius: float | None, weights=None) -> PlaneNormEstimate:
    """``E|sum_q a_q w_q(Y) e(<q, lam Y>)|`` with ``Y ~ G_check``."""
    rng = np.random.default_rng(spec.seed)
    lam = float(bumps.dilation)
    qs = sorted(bumps.coeffs)
    a = np.array([complex(bumps.coeffs[q]) for q in qs])
    lset = _bump_lambda(bumps)
    max_q = max(max(abs(q.k1), abs(q.k2)) for q in qs)
    n = spec.samples
    chunk = max(1, min(n, 2_000_000 // max(1, len(qs))))
    vals = np.empty(n)
    for start in range(0, n, chunk):
        m = min(chunk, n - start)
        y1 = sample_g_check(rng, m)
        y2 = sample_g_check(rng, m)
        pts = _plane_points(lam * y1, lam * y2, max_q, rng)
        if lset is not None:
            ph = _term_phases(lset, qs, pts)
        else:
            ph = np.stack([2 * np.pi * p for p in _direct_phases(qs, pts)])
        terms = np.exp(1j * ph)
        if weights is None:
            s = a @ terms
        else:
            s = np.sum(a[:, None] * weights(qs, y1, y2) * terms, axis=0)
        v = np.abs(s)
        if truncation_radius is not None:
            v = np.where((np.abs(lam * y1) <= truncation_radius) & (np.abs(lam * y2) <= truncation_radius), v, 0.0)
        vals[start : start + m] = v
    half = Z99 * float(np.std(vals, ddof=1)) / math.sqrt(n) if n > 1 else math.inf
    env = bumps.abs_coefficient_sum()
    if truncation_radius is None:
        tail = 2 * CLIP * env
    else:
        tail = env * (1.0 - _box_mass(truncation_radius / lam)) + 2 * CLIP * env
    return PlaneNormEstimate(
        value=float(np.mean(vals)),
        error_bound=half,
        method=Method.MONTE_CARLO,
        samples_or_gridsize=n,
        rng_seed=spec.seed,
        tail=float(tail),
        truncation_radius=truncation_radius,
    )


def _direct_phases(qs: list, pts: DyadicPoints) -> list[np.ndarray]:
    return [generator_phases([q], pts)[0] for q in qs]


def _fft_norm(plane_fn: PlaneFunction, truncation_radius: float | None, n: int, pad: int = 4) -> tuple[float, float, float]:
    """Riemann-sum transform on the bounding box, zero-padded; returns (box norm, shell mass, radius)."""
    lo1, hi1, lo2, hi2 = plane_fn.bounding_box()
    c1, c2 = (lo1 + hi1) / 2, (lo2 + hi2) / 2
    half = max(hi1 - lo1, hi2 - lo2) / 2
    h = 2 * half / n
    t = (np.arange(n) - n / 2) * h
    vals = plane_fn(c1 + t[:, None], c2 + t[None, :])
    big = n * pad
    arr = np.zeros((big, big), dtype=np.complex128)
    arr[:n, :n] = vals
    # sum_k f(t_k) e^{2 pi i x t_k} h^2 on the x grid j / (big h)
    spec = np.fft.ifft2(arr) * big * big * h * h
    dx = 1.0 / (big * h)
    x = np.fft.fftfreq(big, d=h)
    ax = np.abs(spec)
    period_half = 1.0 / (2 * h)
    R = period_half if truncation_radius is None else min(truncation_radius, period_half)
    inside = (np.abs(x)[:, None] <= R) & (np.abs(x)[None, :] <= R)
    shell = inside & ~((np.abs(x)[:, None] <= R / 2) & (np.abs(x)[None, :] <= R / 2))
    return float(ax[inside].sum() * dx * dx), float(ax[shell].sum() * dx * dx), R


def inv_ft_l1(
    plane_fn: PlaneFunction,
    truncation_radius: float | None = None,
    spec: QuadratureSpec | None = None,
    tail_fraction: float = 0.01,
) -> PlaneNormEstimate:
    """Estimate ``int |F^-1 plane_fn|`` over ``|x_i| <= truncation_radius``.

    * a single lattice bump uses the closed form (mass of ``g_check (x) g_check``
      in the box); with no radius given, the smallest power of two whose
      envelope tail is below ``tail_fraction`` is used;
    * sums of several lattice bumps are sampled from ``G_check``;
    * anything else is transformed on a zero-padded grid over its bounding
      box (``spec.grid_n`` points per axis, default 256); the error bound is
      the change against half the resolution and the tail is the mass of the
      outer half of the box, a heuristic for fast-decaying transforms.
    """
    spec = spec or QuadratureSpec(samples=200_000)
    bumps = plane_fn.bumps
    if bumps is not None and len(bumps.coeffs) == 1:
        (q, a), = bumps.coeffs.items()
        dil = float(bumps.dilation)
        R = truncation_radius if truncation_radius is not None else _auto_radius(dil, tail_fraction)
        mass = g_check_mass(R * dil) ** 2
        amp = abs(complex(a))
        return PlaneNormEstimate(amp * mass, 1e-12 * amp, Method.CLOSED_FORM, 0, None, amp * (1 - mass), R)
    if bumps is not None:
        return _mc_bump_norm(bumps, spec, truncation_radius)
    n = spec.grid_n if isinstance(spec.grid_n, int) else 256
    fine, shell, R = _fft_norm(plane_fn, truncation_radius, n)
    coarse, _, _ = _fft_norm(plane_fn, R, n // 2)
    return PlaneNormEstimate(fine, abs(fine - coarse), Method.FFT, n, None, shell, R)


# ---------------------------------------------------------------------------
# The ratio multiplier (xi2 / xi1) H^theta
# ---------------------------------------------------------------------------


def _ratio_weights(delta: float, n_max: int):
    """Per-term factor ``k_q(y) / G_check(y)`` for the bump of ``(xi2/xi1) G(2^theta(xi - q))``.

    With ``xi = q + delta t``: the ``t2`` integral gives ``q2 g_check + delta g_1`` and
    ``1/(q1 + delta t1)`` is expanded in powers of ``delta / q1``.
    """

    def weights(qs, y1, y2):
        gc1, gc2 = g_check(y1), g_check(y2)
        r1_y2 = g_moment(1, y2) / gc2
        rn_y1 = [g_moment(k, y1) / gc1 for k in range(1, n_max + 1)]
        q1 = np.array([float(q.k1) for q in qs])[:, None]
        q2_over_q1 = np.array([float(Fraction(q.k2, q.k1)) for q in qs])[:, None]
        u = -delta / q1
        first = q2_over_q1 + (delta / q1) * r1_y2[None, :]
        second = np.ones((len(qs), len(y1)), dtype=np.complex128)
        power = np.ones_like(q1)
        for rk in rn_y1:
            power = power * u
            second = second + power * rk[None, :]
        return first * second

    return weights


def ratio_multiplier_l1(scheme_or_centers, theta: int, spec: QuadratureSpec | None = None) -> PlaneNormEstimate:
    """``||F^-1((xi2/xi1) H^theta)||_{L^1(R^2)}`` by sampling ``Y ~ G_check``."""
    spec = spec or QuadratureSpec(samples=200_000)
    H = h_theta(scheme_or_centers, theta)
    qs = list(H.bumps.coeffs)
    min_q1 = min(abs(q.k1) for q in qs)
    delta = 2.0**-theta
    if min_q1 == 0 or delta >= min_q1:
        raise BumpOverlap("a bump meets the axis xi1 = 0")
    ratio = delta / min_q1
    n_max = max(1, math.ceil(math.log(1e-17) / math.log(ratio)))
    est = _mc_bump_norm(H.bumps, spec, None, weights=_ratio_weights(delta, min(n_max, 40)))
    return est


@dataclass(frozen=True)
class ThetaChoice:
    theta: int
    s: int
    ratio_norm: NormEstimate
    search_trace: tuple[tuple[int, NormEstimate], ...]

    def to_dict(self) -> dict:
        return {
            "theta": self.theta,
            "s": self.s,
            "ratio_norm": self.ratio_norm.to_dict(),
            "search_trace": [[t, e.to_dict()] for t, e in self.search_trace],
        }


def theta_search(
    scheme_or_centers,
    spec: QuadratureSpec | None = None,
    theta_max: int = 20,
    rel_tol: float = 0.05,
) -> ThetaChoice:
    """Increase theta from the overlap threshold until the ratio norm moves by less than ``rel_tol``."""
    spec = spec or QuadratureSpec(samples=100_000)
    lam = _lambda_for(scheme_or_centers)
    theta = min_theta(lam)
    trace: list[tuple[int, NormEstimate]] = []
    prev = None
    while theta <= theta_max:
        est = ratio_multiplier_l1(lam, theta, spec)
        trace.append((theta, est))
        if prev is not None and abs(est.value - prev.value) < rel_tol * abs(prev.value):
            return ThetaChoice(theta, lam.s, est, tuple(trace))
        prev = est
        theta += 1
    raise NoStabilization(f"ratio norm did not stabilize up to theta = {theta_max}")


# ---------------------------------------------------------------------------
# Cutoff estimate
# ---------------------------------------------------------------------------


def eta_bump(xi1, xi2):
    """The fixed cutoff ``exp(1 - 1/(1 - |xi|^2))`` on the unit disc, ``eta(0) = 1``."""
    r2 = np.asarray(xi1, dtype=np.float64) ** 2 + np.asarray(xi2, dtype=np.float64) ** 2
    inside = r2 < 1
    safe = np.where(inside, r2, 0.0)
    return np.where(inside, np.exp(1.0 - 1.0 / (1.0 - safe)), 0.0)


ETA_DESCRIPTION = "exp(1 - 1/(1 - |xi|^2)) on the open unit disc"
SMOOTHNESS_K = 2  # smallest even integer above ceil(d/2) for d = 2

_FD = {
    0: ([0], [1.0]),
    1: ([-1, 1], [-0.5, 0.5]),
    2: ([-1, 0, 1], [1.0, -2.0, 1.0]),
    3: ([-2, -1, 1, 2], [-0.5, 1.0, -1.0, 0.5]),
}


def derivative_sup(f: Callable, order: int = SMOOTHNESS_K + 1, step: float = 0.05, rings: int = 8, per_ring: int = 24) -> float:
    """``sup_{|x|<=1} sum_{|alpha|<=order} |D^alpha f(x)|`` by central differences on a polar sample."""
    pts = [(0.0, 0.0)]
    for i in range(1, rings + 1):
        r = i / rings
        for a in 2 * np.pi * np.arange(per_ring) / per_ring:
            pts.append((r * math.cos(a), r * math.sin(a)))
    P = np.array(pts)
    total = np.zeros(len(P))
    for a1 in range(order + 1):
        for a2 in range(order + 1 - a1):
            o1, w1 = _FD[a1]
            o2, w2 = _FD[a2]
            acc = np.zeros(len(P), dtype=np.complex128)
            for i, wi in zip(o1, w1):
                for j, wj in zip(o2, w2):
                    acc += wi * wj * f(P[:, 0] + i * step, P[:, 1] + j * step)
            total += np.abs(acc) / step ** (a1 + a2)
    return float(total.max())


def cutoff_lhs(f: Callable, eps: float, grid_n: int = 128) -> float:
    """``||F^-1(eta(./eps) f)||_1`` computed as ``||F^-1(eta f(eps .))||_1`` (dilation invariance)."""
    pf = PlaneFunction(
        "eta*f",
        lambda a, b: eta_bump(a, b) * f(eps * a, eps * b),
        (((0.0, 0.0), 1.0),),
        "smooth",
    )
    return inv_ft_l1(pf, None, QuadratureSpec.fixed_grid(grid_n)).value


def _monomial(a1: int, a2: int) -> Callable:
    return lambda x, y: np.asarray(x, dtype=np.float64) ** a1 * np.asarray(y, dtype=np.float64) ** a2


CALIBRATION_MONOMIALS = tuple((a1, a2) for d in range(SMOOTHNESS_K + 2) for a1 in range(d + 1) for a2 in [d - a1])


DEFAULT_EPSILONS = tuple(2.0**-k for k in range(3, 9))


def fit_cutoff_constant(epsilon_list: Sequence[float] = DEFAULT_EPSILONS, grid_n: int = 128) -> float:
    """``C(eta)``: the largest ratio lhs / (|f(0)| + eps * sup) over monomials of degree <= k + 1 and the given eps."""
    best = 0.0
    for a1, a2 in CALIBRATION_MONOMIALS:
        f = _monomial(a1, a2)
        f0 = abs(complex(f(0.0, 0.0)))
        sup = derivative_sup(f)
        for eps in epsilon_list:
            best = max(best, cutoff_lhs(f, eps, grid_n) / (f0 + eps * sup))
    return best


@dataclass(frozen=True)
class CutoffRow:
    eps: float
    lhs: float
    rhs: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs


def cutoff_bound_check(
    f: Callable,
    epsilon_list: Sequence[float] = DEFAULT_EPSILONS,
    constant: float | None = None,
    grid_n: int = 128,
) -> tuple[float, list[CutoffRow]]:
    """Rows ``(eps, ||F^-1(eta_eps f)||_1, C(eta)(|f(0)| + eps sup sum |D^alpha f|))``.

    ``C(eta)`` is fitted once on the monomial family over ``epsilon_list``
    (unless given) and then held fixed; ``f`` itself plays no part in the fit.
    """
    C = fit_cutoff_constant(epsilon_list, grid_n) if constant is None else constant
    f0 = abs(complex(np.asarray(f(0.0, 0.0))))
    sup = derivative_sup(f)
    rows = [CutoffRow(float(e), cutoff_lhs(f, e, grid_n), C * (f0 + e * sup)) for e in epsilon_list]
    return C, rows


def recentered_ratio(q) -> Callable:
    """``xi -> (q2 + xi2)/(q1 + xi1) - q2/q1`` with the base ratio taken exactly."""
    q = as_frequency(q)
    base = float(Fraction(q.k2, q.k1))
    q1, q2 = float(q.k1), float(q.k2)

    def f(x, y):
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        # (q2 + y)/(q1 + x) - q2/q1 = (q1 y - q2 x) / (q1 (q1 + x))
        return (y - base * x) / (q1 + x)

    return f


def loglog_slope(eps: Sequence[float], values: Sequence[float]) -> float:
    return float(np.polyfit(np.log(eps), np.log(values), 1)[0])
