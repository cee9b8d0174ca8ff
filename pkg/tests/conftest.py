import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=25, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


# -- independent oracles ------------------------------------------------------

def sphere_moment(alpha) -> float:
    """Integral of x^alpha over the unit sphere S^{n-1} (closed form via Gamma functions)."""
    if any(a % 2 for a in alpha):
        return 0.0
    b = [(a + 1) / 2 for a in alpha]
    return 2 * math.prod(math.gamma(x) for x in b) / math.gamma(sum(b))


class Poly:
    """Dense polynomial {exponent tuple: coefficient} with exact products and derivatives."""

    def __init__(self, terms: dict):
        self.terms = {k: v for k, v in terms.items() if v != 0}
        self.n = len(next(iter(terms)))

    def __mul__(self, other):
        out: dict = {}
        for a, x in self.terms.items():
            for b, y in other.terms.items():
                k = tuple(i + j for i, j in zip(a, b))
                out[k] = out.get(k, 0.0) + x * y
        return Poly(out or {(0,) * self.n: 0.0})

    def __add__(self, other):
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out.get(k, 0.0) + v
        return Poly(out or {(0,) * self.n: 0.0})

    def diff(self, i):
        out = {}
        for k, v in self.terms.items():
            if k[i]:
                kk = list(k)
                kk[i] -= 1
                out[tuple(kk)] = v * k[i]
        return Poly(out or {(0,) * self.n: 0.0})

    def __call__(self, *xs):
        return sum(v * np.prod([x**e for x, e in zip(xs, k)], axis=0) for k, v in self.terms.items())

    def sphere_integral(self, x0_zero_r: float) -> float:
        r = x0_zero_r
        return sum(v * r ** (sum(k) + self.n - 1) * sphere_moment(k) for k, v in self.terms.items())

    def ball_integral(self, r: float) -> float:
        return sum(v * r ** (sum(k) + self.n) / (sum(k) + self.n) * sphere_moment(k)
                   for k, v in self.terms.items())


def random_cubic(rng, n: int) -> Poly:
    terms = {}
    import itertools

    for k in itertools.product(range(4), repeat=n):
        if sum(k) <= 3:
            terms[k] = float(rng.normal())
    return Poly(terms)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
