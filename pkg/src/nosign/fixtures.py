"""
Closed-form fixtures: cusp solutions, homogeneous functions, perturbed
polynomial solutions and the radial classical obstacle solution.

All fixtures are plain callables ``f(x1, ..., xn)`` on broadcastable arrays,
so they can be handed to :func:`nosign.field.sample` directly.  Angles for
non-integer homogeneities are measured on [cut, cut + 2π), which puts the
branch half-line at angle ``cut`` (the positive x1-axis by default).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np


class FixtureError(ValueError):
    pass


def _angle(x1, x2, cut: float = 0.0):
    return np.mod(np.arctan2(x2, x1) - cut, 2 * np.pi)


def _is_half_odd(lam: float) -> bool:
    return abs(2 * lam - round(2 * lam)) < 1e-12 and round(2 * lam) % 2 == 1


def _is_integer(lam: float) -> bool:
    return abs(lam - round(lam)) < 1e-12


# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HomogeneousFunction:
    """v = r^λ g(θ) in the plane with g = sin(λθ) or cos(λθ)."""

    lam: float
    profile: str = "sin"
    parity: str | None = None
    cut: float = 0.0

    def __post_init__(self):
        if not self.lam > 0:
            raise FixtureError(f"homogeneity must be positive, got {self.lam}")
        if self.profile not in ("sin", "cos"):
            raise FixtureError(f"profile must be 'sin' or 'cos', got {self.profile!r}")
        actual = self.realized_parity
        if self.parity is not None and self.parity != actual:
            raise FixtureError(
                f"r^{self.lam} {self.profile}({self.lam}θ) is {actual or 'neither even nor odd'} "
                f"about the cut line, not {self.parity}")

    @property
    def realized_parity(self) -> str | None:
        """Parity under reflection across the line through the cut direction."""
        if _is_integer(self.lam):
            return "even" if self.profile == "cos" else "odd"
        # reflection maps θ -> 2π - θ; sin/cos(λ(2π-θ)) expand with 2πλ
        c, s = math.cos(2 * math.pi * self.lam), math.sin(2 * math.pi * self.lam)
        if self.profile == "sin":
            if abs(s) < 1e-12 and abs(c + 1) < 1e-12:
                return "even"
            if abs(s) < 1e-12 and abs(c - 1) < 1e-12:
                return "odd"
        else:
            if abs(s) < 1e-12 and abs(c - 1) < 1e-12:
                return "even"
            if abs(s) < 1e-12 and abs(c + 1) < 1e-12:
                return "odd"
        return None

    @property
    def harmonic_everywhere(self) -> bool:
        return _is_integer(self.lam)

    def angular(self, theta):
        return np.sin(self.lam * theta) if self.profile == "sin" else np.cos(self.lam * theta)

    def __call__(self, x1, x2):
        r = np.hypot(x1, x2)
        return r**self.lam * self.angular(_angle(x1, x2, self.cut))

    def gradient(self, x1, x2):
        r = np.hypot(x1, x2)
        th = _angle(x1, x2, self.cut)
        g = self.angular(th)
        dg = self.lam * (np.cos(self.lam * th) if self.profile == "sin" else -np.sin(self.lam * th))
        dr = self.lam * r ** (self.lam - 1) * g
        dt = r ** (self.lam - 1) * dg
        phi = th + self.cut
        return (dr * np.cos(phi) - dt * np.sin(phi), dr * np.sin(phi) + dt * np.cos(phi))


def homogeneous(lam: float, profile: str = "sin", parity: str | None = None, cut: float = 0.0):
    return HomogeneousFunction(float(lam), profile, parity, cut)


# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CuspSolution:
    """u = ½x2² − (1/(1+μ/2)) r^{1+μ/2} sin((1+μ/2)θ), the retained terms of the cusp family.

    Only the two leading terms are kept; higher-order terms are not modelled.
    """

    mu: float
    truncation: int = 2

    def __post_init__(self):
        k = (self.mu - 3) / 4
        if not (abs(k - round(k)) < 1e-12 and round(k) >= 0):
            raise FixtureError(f"mu must be 4k+3 with k >= 0, got {self.mu}")
        if self.truncation not in (1, 2):
            raise FixtureError("only the two leading terms are available (truncation 1 or 2)")

    @property
    def lam_star(self) -> float:
        return 1 + self.mu / 2

    @property
    def coefficient(self) -> float:
        return 1.0 / (1 + self.mu / 2)

    @property
    def correction(self) -> HomogeneousFunction:
        return HomogeneousFunction(self.lam_star, "sin")

    @property
    def metadata(self) -> dict:
        return {
            "p_star": [[0.0, 0.0], [0.0, 1.0]],
            "lambda_star": self.lam_star,
            "singular_point": [0.0, 0.0],
            "m": 1,
            "sigma_plus": True,
        }

    def deficit(self, x1, x2):
        """u − p_* for the retained terms."""
        return -self.coefficient * self.correction(x1, x2)

    def __call__(self, x1, x2):
        base = 0.5 * x2 * x2
        if self.truncation == 1:
            return base + 0 * x1
        return base + self.deficit(x1, x2)


def cusp(mu: float, truncation: int = 2) -> CuspSolution:
    return CuspSolution(float(mu), truncation)


# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RadialClassical:
    """Exact radially symmetric solution of the classical obstacle problem in the plane."""

    R: float

    def __post_init__(self):
        if not 0 < self.R < 1:
            raise FixtureError(f"R must lie in (0, 1), got {self.R}")

    def radial(self, r):
        R = self.R
        r = np.asarray(r, dtype=np.float64)
        out = np.zeros_like(r)
        m = r > R
        rr = r[m]
        out[m] = rr * rr / 4 - R * R / 4 - (R * R / 2) * np.log(rr / R)
        return out

    def __call__(self, x1, x2):
        return self.radial(np.hypot(x1, x2))

    def hessian(self, x1, x2):
        """Exact D²u (zero inside the disk), shape (..., 2, 2)."""
        x1, x2 = np.broadcast_arrays(np.asarray(x1, float), np.asarray(x2, float))
        r2 = x1 * x1 + x2 * x2
        R2 = self.R**2
        out = np.zeros(x1.shape + (2, 2))
        m = r2 > R2
        a, b, q = x1[m], x2[m], r2[m]
        # u = r²/4 − R²/4 − (R²/2) log(r/R)
        out[m, 0, 0] = 0.5 - (R2 / 2) * (b * b - a * a) / q**2
        out[m, 1, 1] = 0.5 - (R2 / 2) * (a * a - b * b) / q**2
        out[m, 0, 1] = out[m, 1, 0] = (R2 / 2) * 2 * a * b / q**2
        return out


def radial_classical(R: float) -> RadialClassical:
    return RadialClassical(float(R))


# ---------------------------------------------------------------------------
# polynomials

@dataclass(frozen=True)
class Polynomial:
    """Polynomial in n variables stored as {exponent tuple: coefficient}."""

    n: int
    terms: dict = field(default_factory=dict)

    def __call__(self, *xs):
        out = 0.0 * xs[0]
        for exps, c in self.terms.items():
            t = c
            for x, e in zip(xs, exps):
                if e:
                    t = t * x**e
            out = out + t
        return out

    @property
    def degree(self) -> int:
        return max((sum(e) for e, c in self.terms.items() if c != 0), default=0)

    def is_homogeneous(self) -> bool:
        degs = {sum(e) for e, c in self.terms.items() if c != 0}
        return len(degs) <= 1

    def laplacian(self) -> "Polynomial":
        out: dict = {}
        for exps, c in self.terms.items():
            for a, e in enumerate(exps):
                if e >= 2:
                    ne = list(exps)
                    ne[a] -= 2
                    out[tuple(ne)] = out.get(tuple(ne), 0.0) + c * e * (e - 1)
        return Polynomial(self.n, {k: v for k, v in out.items() if v != 0})

    def coefficient_norm(self) -> float:
        return math.sqrt(sum(c * c for c in self.terms.values()))

    def scaled(self, alpha: float) -> "Polynomial":
        return Polynomial(self.n, {k: alpha * v for k, v in self.terms.items()})


def quadratic_form(A) -> Polynomial:
    """p(x) = ½⟨Ax, x⟩ as a Polynomial."""
    A = np.asarray(A, dtype=np.float64)
    n = A.shape[0]
    terms = {}
    for i in range(n):
        for j in range(i, n):
            e = [0] * n
            e[i] += 1
            e[j] += 1
            c = 0.5 * A[i, i] if i == j else A[i, j]
            if c != 0:
                terms[tuple(e)] = terms.get(tuple(e), 0.0) + c
    return Polynomial(n, terms)


def complex_power(d: int, part: str = "im") -> Polynomial:
    """Re or Im of (x1 + i x2)^d, a degree-d harmonic polynomial in the plane."""
    terms = {}
    for k in range(d + 1):
        c = math.comb(d, k)
        # i^k contributes to the real part for even k and to the imaginary part for odd k
        sign = (-1) ** (k // 2)
        if (part == "re" and k % 2 == 0) or (part == "im" and k % 2 == 1):
            terms[(d - k, k)] = sign * c
    return Polynomial(2, terms)


@dataclass(frozen=True)
class PerturbedPolynomial:
    """u = p + ε h with Δp = 1 and h homogeneous harmonic of degree d >= 3."""

    A: tuple
    h: Polynomial
    eps: float

    @property
    def n(self) -> int:
        return len(self.A)

    @property
    def p(self) -> Polynomial:
        return quadratic_form(np.array(self.A))

    @property
    def excluded(self) -> bool:
        """ε = 0 gives u ≡ p_*, which the theory excludes."""
        return self.eps == 0

    @property
    def metadata(self) -> dict:
        A = np.array(self.A)
        eig = np.linalg.eigvalsh(A)
        return {
            "p_star": A.tolist(),
            "lambda_star": None if self.excluded else self.h.degree,
            "singular_point": [0.0] * self.n,
            "m": int(np.sum(np.abs(eig) < 1e-12)),
            "sigma_plus": bool(eig.min() >= -1e-12),
            "excluded": self.excluded,
        }

    def deficit(self, *xs):
        return self.eps * self.h(*xs)

    def __call__(self, *xs):
        return self.p(*xs) + self.deficit(*xs)


def perturbed(A, h: Polynomial, eps: float, tol: float = 1e-12) -> PerturbedPolynomial:
    A = np.asarray(A, dtype=np.float64)
    if A.shape != (h.n, h.n) or not np.allclose(A, A.T):
        raise FixtureError("A must be a symmetric n x n matrix matching h")
    if abs(np.trace(A) - 1) > 1e-12:
        raise FixtureError(f"Δp = tr A must equal 1, got {np.trace(A)}")
    if not h.is_homogeneous() or h.degree < 3:
        raise FixtureError("h must be homogeneous of degree >= 3")
    lap = h.laplacian()
    res = lap.coefficient_norm()
    if res > tol * max(1.0, h.coefficient_norm()):
        raise FixtureError(f"h is not harmonic: |Δh| coefficient norm {res:.3e}")
    return PerturbedPolynomial(tuple(map(tuple, A)), h, float(eps))


# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StructuredQuadratic:
    """u = p_* + ε q with D²p_* = diag(μ, 0_m) and D²q = diag(t·I, −N), N = ((n−m)t/m) I.

    Forward construction of a degree-2 deficit with the block structure
    expected of quadratic blowups; an optional rotation hides the frame.
    """

    mus: tuple
    m: int
    t: float = 1.0
    eps: float = 1e-2
    rotation: tuple | None = None

    def __post_init__(self):
        if abs(sum(self.mus) - 1) > 1e-12 or min(self.mus) <= 0:
            raise FixtureError("μ entries must be positive and sum to 1")
        if self.m < 1 or self.t <= 0:
            raise FixtureError("need m >= 1 and t > 0")

    @property
    def n(self) -> int:
        return len(self.mus) + self.m

    def _rot(self) -> np.ndarray:
        return np.eye(self.n) if self.rotation is None else np.asarray(self.rotation, dtype=np.float64)

    @property
    def p_matrix(self) -> np.ndarray:
        R = self._rot()
        return R @ np.diag(list(self.mus) + [0.0] * self.m) @ R.T

    @property
    def q_matrix(self) -> np.ndarray:
        k = self.n - self.m
        R = self._rot()
        return R @ np.diag([self.t] * k + [-k * self.t / self.m] * self.m) @ R.T

    @property
    def metadata(self) -> dict:
        return {
            "p_star": self.p_matrix.tolist(),
            "lambda_star": 2,
            "singular_point": [0.0] * self.n,
            "m": self.m,
            "sigma_plus": True,
            "deficit_hessian": self.q_matrix.tolist(),
        }

    def __call__(self, *xs):
        B = self.p_matrix + self.eps * self.q_matrix
        return 0.5 * sum(B[i, j] * xs[i] * xs[j] for i in range(self.n) for j in range(self.n))


def structured(mus, m: int, t: float = 1.0, eps: float = 1e-2, rotation=None) -> StructuredQuadratic:
    rot = None if rotation is None else tuple(map(tuple, np.asarray(rotation, dtype=np.float64)))
    return StructuredQuadratic(tuple(float(x) for x in mus), int(m), float(t), float(eps), rot)


# ---------------------------------------------------------------------------
# catalog addressable by name, e.g. "cusp:mu=3", "radial:R=0.5"

def _parse_params(text: str) -> dict:
    out = {}
    if not text:
        return out
    for item in text.split(","):
        if "=" not in item:
            raise FixtureError(f"bad fixture parameter {item!r}; expected key=value")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _num(s: str) -> float:
    if "/" in s:
        a, b = s.split("/", 1)
        return float(a) / float(b)
    return float(s)


def resolve(name: str):
    """Look up a fixture by catalog name.

    cusp:mu=3[,truncation=2]
    radial:R=0.5
    homogeneous:lam=5/2,profile=sin[,parity=even]
    perturbed:d=3[,eps=0.01]   (p = ½x1², h = Im z³ / Re z⁴ ...)
    perturbed:d=4,base=iso     (p = ¼|x|²)
    structured:mu=0.6;0.4,m=1[,t=1,eps=0.01]
    """
    kind, _, rest = name.partition(":")
    params = _parse_params(rest)
    kind = kind.strip()
    if kind == "cusp":
        return cusp(_num(params.get("mu", "3")), int(params.get("truncation", 2)))
    if kind == "radial":
        return radial_classical(_num(params.get("R", "0.5")))
    if kind == "homogeneous":
        return homogeneous(_num(params["lam"]), params.get("profile", "sin"), params.get("parity"))
    if kind == "perturbed":
        d = int(params.get("d", 3))
        eps = _num(params.get("eps", "0.01" if d == 3 else "0.001"))
        base = params.get("base", "axis" if d == 3 else "iso")
        A = [[1.0, 0.0], [0.0, 0.0]] if base == "axis" else [[0.5, 0.0], [0.0, 0.5]]
        part = params.get("part", "im" if d % 2 else "re")
        return perturbed(A, complex_power(d, part), eps)
    if kind == "structured":
        mus = [_num(x) for x in params.get("mu", "0.6;0.4").split(";")]
        return structured(mus, int(params.get("m", 1)), _num(params.get("t", "1")), _num(params.get("eps", "0.01")))
    raise FixtureError(f"unknown fixture {name!r}")


def as_callable(fixture) -> Callable:
    return fixture if callable(fixture) else resolve(fixture)
