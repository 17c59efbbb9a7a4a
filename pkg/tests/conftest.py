import itertools
from fractions import Fraction

import numpy as np
import pytest

from rieszlab.freq import Frequency


def trig_mul(a: dict, b: dict) -> dict:
    """Brute-force product of two coefficient dicts (convolution)."""
    out: dict = {}
    for (p, x), (q, y) in itertools.product(a.items(), b.items()):
        k = (p[0] + q[0], p[1] + q[1])
        out[k] = out.get(k, 0) + x * y
    return {k: v for k, v in out.items() if v != 0}


def trig_add(a: dict, b: dict) -> dict:
    out = dict(a)
    for k, v in b.items():
        out[k] = out.get(k, 0) + v
    return {k: v for k, v in out.items() if v != 0}


def one_plus_cos(c) -> dict:
    return {(0, 0): Fraction(1), (c[0], c[1]): Fraction(1, 2), (-c[0], -c[1]): Fraction(1, 2)}


def cos_dict(c, sign=1) -> dict:
    return {(c[0], c[1]): Fraction(sign, 2), (-c[0], -c[1]): Fraction(sign, 2)}


def symbolic_builder(kind: str, centers, signs=None) -> dict:
    """Expand a builder symbolically by repeated dict multiplication."""
    s = len(centers)
    running = {(0, 0): Fraction(1)}
    total: dict = {}
    for j, c in enumerate(centers):
        if kind == "z":
            sg = signs[j] if signs else (-1) ** (j + 1)
            total = trig_add(total, trig_mul(cos_dict(c, sg), running))
        elif kind == "exp":
            total = trig_add(total, trig_mul({(c[0], c[1]): Fraction(1)}, running))
        running = trig_mul(running, one_plus_cos(c))
    return running if kind == "riesz" else total


def as_plain(poly) -> dict:
    return {(q[0], q[1]): v for q, v in poly.items()}


def direct_phases(centers, points) -> np.ndarray:
    """2*pi*<c^j, x> computed in exact rational arithmetic, one point at a time."""
    out = np.empty((len(centers), len(points)))
    for i, x in enumerate(points):
        x1, x2 = Fraction(float(x[0])), Fraction(float(x[1]))
        for j, c in enumerate(centers):
            out[j, i] = 2 * np.pi * float((c[0] * x1 + c[1] * x2) % 1)
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def lacunary(rng, s: int, ratio: int = 4):
    """Random 2-D centers with |c^{j+1}| >= ratio * 2 * |c^j|-ish growth."""
    cs = []
    scale = 1
    for _ in range(s):
        v = rng.integers(1, 4, size=2) * rng.choice([-1, 1], size=2)
        cs.append(Frequency(int(v[0] * scale), int(v[1] * scale)))
        scale *= 4 * ratio
    return cs


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
