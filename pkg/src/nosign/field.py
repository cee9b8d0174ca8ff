"""
Scalar fields sampled on a uniform vertex grid over [-1, 1]^n.

Everything downstream (functionals, blowups, class-P checks) works through
the operations here: tensor-product cubic interpolation, gradients of the
interpolant, sphere and ball quadratures, measures of the negativity set
{v < 0}, and the maximal inscribed radius MR of that set.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy import ndimage


class FieldError(ValueError):
    """Base class for field-level errors."""


class NonFiniteSampleError(FieldError):
    pass


class OutOfDomainError(FieldError):
    pass


class RadiusTooSmallError(FieldError):
    pass


class ClassificationError(FieldError):
    pass


# Minimum quadrature radius in units of the grid spacing.
R_MIN_CELLS = 4
# Relative threshold that separates {v < 0} from sign noise at exact zeros.
NEG_REL_THRESHOLD = 1e-12


@dataclass(frozen=True)
class GridSpec:
    """Uniform vertex grid on [-1, 1]^n with N points per axis (N odd)."""

    n: int
    N: int

    def __post_init__(self):
        if self.n not in (2, 3):
            raise FieldError(f"grid dimension must be 2 or 3, got {self.n}")
        if self.N < 33 or self.N % 2 == 0:
            raise FieldError(f"points per axis must be odd and >= 33, got {self.N}")

    @property
    def h(self) -> float:
        return 2.0 / (self.N - 1)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.n

    @property
    def coords(self) -> np.ndarray:
        return np.linspace(-1.0, 1.0, self.N)

    @property
    def origin_index(self) -> tuple[int, ...]:
        return ((self.N - 1) // 2,) * self.n

    def mesh(self) -> list[np.ndarray]:
        return np.meshgrid(*([self.coords] * self.n), indexing="ij")

    def vertices(self) -> np.ndarray:
        return np.stack([c.ravel() for c in self.mesh()], axis=-1)

    @property
    def evaluable_halfwidth(self) -> float:
        return 1.0 - 2.0 * self.h


class ScalarField:
    """Immutable grid samples plus a label.

    ``values`` has shape ``spec.shape`` (row-major, index order ``ij``).
    """

    __slots__ = ("spec", "values", "label", "_scale")

    def __init__(self, spec: GridSpec, values, label: str = ""):
        values = np.array(values, dtype=np.float64, copy=True).reshape(spec.shape)
        if not np.all(np.isfinite(values)):
            bad = np.argwhere(~np.isfinite(values))[0]
            raise NonFiniteSampleError(f"non-finite value at vertex index {tuple(bad)}")
        values.setflags(write=False)
        self.spec = spec
        self.values = values
        self.label = label
        self._scale = float(np.max(np.abs(values))) if values.size else 0.0

    def __repr__(self):
        return f"ScalarField(n={self.spec.n}, N={self.spec.N}, label={self.label!r})"

    @property
    def scale(self) -> float:
        """max |v| over the grid."""
        return self._scale

    @property
    def h(self) -> float:
        return self.spec.h

    def with_values(self, values, label: str | None = None) -> "ScalarField":
        return ScalarField(self.spec, values, self.label if label is None else label)

    def __sub__(self, other):
        if isinstance(other, ScalarField):
            _check_same_grid(self, other)
            return self.with_values(self.values - other.values, f"{self.label}-{other.label}")
        return self.with_values(self.values - other)

    def __add__(self, other):
        if isinstance(other, ScalarField):
            _check_same_grid(self, other)
            return self.with_values(self.values + other.values, f"{self.label}+{other.label}")
        return self.with_values(self.values + other)

    def __mul__(self, alpha: float):
        return self.with_values(alpha * self.values)

    __rmul__ = __mul__

    def __call__(self, x):
        return interpolate(self, x)

    def digest(self) -> str:
        return hashlib.sha256(self.values.tobytes()).hexdigest()


def _check_same_grid(a: ScalarField, b: ScalarField):
    if a.spec != b.spec:
        raise FieldError(f"grid mismatch: {a.spec} vs {b.spec}")


def sample(spec: GridSpec, f: Callable, label: str = "") -> ScalarField:
    """Evaluate ``f`` at every vertex.

    ``f`` receives the coordinate arrays ``x1, ..., xn`` (broadcastable) and
    must return an array of the same shape.
    """
    values = np.asarray(f(*spec.mesh()), dtype=np.float64)
    values = np.broadcast_to(values, spec.shape)
    if not np.all(np.isfinite(values)):
        idx = tuple(np.argwhere(~np.isfinite(values))[0])
        vertex = tuple(float(spec.coords[i]) for i in idx)
        raise NonFiniteSampleError(f"non-finite sample at vertex {vertex}")
    return ScalarField(spec, values, label)


# ---------------------------------------------------------------------------
# interpolation

def _lagrange_weights(s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cubic Lagrange weights for nodes at offsets -1, 0, 1, 2 and their s-derivatives."""
    s = s[..., None]
    w = np.concatenate(
        [
            -s * (s - 1) * (s - 2) / 6,
            (s + 1) * (s - 1) * (s - 2) / 2,
            -(s + 1) * s * (s - 2) / 2,
            (s + 1) * s * (s - 1) / 6,
        ],
        axis=-1,
    )
    dw = np.concatenate(
        [
            -(3 * s**2 - 6 * s + 2) / 6,
            (3 * s**2 - 4 * s - 1) / 2,
            -(3 * s**2 - 2 * s - 2) / 2,
            (3 * s**2 - 1) / 6,
        ],
        axis=-1,
    )
    return w, dw


def _as_points(field: ScalarField, x) -> tuple[np.ndarray, bool]:
    pts = np.asarray(x, dtype=np.float64)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if pts.shape[-1] != field.spec.n:
        raise FieldError(f"points must have {field.spec.n} components")
    lim = field.spec.evaluable_halfwidth + 1e-12
    if np.any(np.abs(pts) > lim):
        worst = pts[np.argmax(np.max(np.abs(pts), axis=1))]
        raise OutOfDomainError(f"point {tuple(worst)} outside evaluable region |x_i| <= {lim:.6g}")
    return pts, single


# One-sided stencils are taken only when clearly smoother than the centered one.
ENO_BIAS = 0.25


def _third_difference_indicator(values, starts, axis, i0_other):
    """Sum over transverse rows of |Δ³| of the 4-node stencil starting at ``starts``."""
    n = values.ndim
    others = [b for b in range(n) if b != axis]
    total = np.zeros(starts.shape[0])
    coeff = (-1.0, 3.0, -3.0, 1.0)
    for offs in itertools.product(range(4), repeat=n - 1):
        d3 = np.zeros(starts.shape[0])
        for k, c in enumerate(coeff):
            idx = [None] * n
            idx[axis] = starts + k
            for b, o in zip(others, offs):
                idx[b] = i0_other[:, b] + o - 1
            d3 += c * values[tuple(idx)]
        total += np.abs(d3)
    return total


def _stencils(field: ScalarField, pts: np.ndarray, eno: bool = True):
    """Per-axis stencil start (left node index minus one) and Lagrange weights.

    With ``eno`` the centered stencil [i-1, i+2] around the cell [i, i+1] is
    swapped for [i, i+3] or [i-2, i+1] when that one is much smoother, so
    kinks lying on grid lines are not smeared across two cells.
    """
    spec = field.spec
    t = (pts + 1.0) / spec.h
    i0 = np.clip(np.floor(t).astype(np.int64), 1, spec.N - 3)
    s = t - i0
    if eno:
        shift = np.zeros_like(i0)
        for a in range(spec.n):
            centered = _third_difference_indicator(field.values, i0[:, a] - 1, a, i0)
            left_ok = i0[:, a] - 2 >= 0
            right_ok = i0[:, a] + 3 <= spec.N - 1
            left = np.where(left_ok, _third_difference_indicator(
                field.values, np.maximum(i0[:, a] - 2, 0), a, i0), np.inf)
            right = np.where(right_ok, _third_difference_indicator(
                field.values, np.minimum(i0[:, a], spec.N - 4), a, i0), np.inf)
            go_right = (right < ENO_BIAS * centered) & (right <= left)
            go_left = (left < ENO_BIAS * centered) & (left < right)
            shift[go_right, a] = 1
            shift[go_left, a] = -1
        i0 = i0 + shift
        s = s - shift
    w, dw = _lagrange_weights(s)  # (P, n, 4)
    return i0, w, dw


def _contract(values: np.ndarray, i0: np.ndarray, weights: Sequence[np.ndarray]) -> np.ndarray:
    """Sum over the 4^n stencil with per-axis weight arrays ``weights[a]`` of shape (P, 4)."""
    n = i0.shape[1]
    out = np.zeros(i0.shape[0])
    for offs in itertools.product(range(4), repeat=n):
        idx = tuple(i0[:, a] + offs[a] - 1 for a in range(n))
        wprod = weights[0][:, offs[0]]
        for a in range(1, n):
            wprod = wprod * weights[a][:, offs[a]]
        out += wprod * values[idx]
    return out


def interpolate(field: ScalarField, x) -> np.ndarray | float:
    """Tensor-product cubic interpolant at ``x`` (one point or an (P, n) array)."""
    pts, single = _as_points(field, x)
    i0, w, _ = _stencils(field, pts)
    out = _contract(field.values, i0, [w[:, a] for a in range(field.spec.n)])
    return float(out[0]) if single else out


def gradient(field: ScalarField, x) -> np.ndarray:
    """Gradient of the cubic interpolant, shape (n,) or (P, n)."""
    pts, single = _as_points(field, x)
    i0, w, dw = _stencils(field, pts)
    n = field.spec.n
    comps = []
    for a in range(n):
        ws = [dw[:, b] / field.h if b == a else w[:, b] for b in range(n)]
        comps.append(_contract(field.values, i0, ws))
    g = np.stack(comps, axis=-1)
    return g[0] if single else g


# ---------------------------------------------------------------------------
# sphere and ball quadrature

@dataclass(frozen=True)
class SphereQuadrature:
    center: np.ndarray
    radius: float
    points: np.ndarray
    weights: np.ndarray = dc_field(repr=False)

    @property
    def total_weight(self) -> float:
        return float(math.fsum(self.weights))


def sphere_area(n: int, r: float) -> float:
    return 2 * math.pi * r if n == 2 else 4 * math.pi * r * r


def _unit_circle(count: int, offset: float = 0.0):
    theta = offset + 2 * np.pi * np.arange(count) / count
    pts = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    return pts, np.full(count, 2 * np.pi / count)


def _unit_sphere_product(target: int):
    # Gauss-Legendre in z times uniform azimuth; exact for polynomials of degree < 2*nz.
    nz = max(4, math.ceil(math.sqrt(target / 2)))
    nphi = 2 * nz
    z, wz = np.polynomial.legendre.leggauss(nz)
    phi = 2 * np.pi * np.arange(nphi) / nphi
    zz, pp = np.meshgrid(z, phi, indexing="ij")
    rho = np.sqrt(1 - zz**2)
    pts = np.stack([rho * np.cos(pp), rho * np.sin(pp), zz], axis=-1).reshape(-1, 3)
    weights = np.repeat(wz, nphi) * (2 * np.pi / nphi)
    return pts, weights


def _unit_sphere_fibonacci(count: int, seed: int | None):
    i = np.arange(count) + 0.5
    golden = (1 + 5**0.5) / 2
    z = 1 - 2 * i / count
    phi = 2 * np.pi * i / golden
    rho = np.sqrt(1 - z**2)
    pts = np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=-1)
    if seed is not None:
        from scipy.spatial.transform import Rotation

        pts = Rotation.random(random_state=seed).apply(pts)
    return pts, np.full(count, 4 * np.pi / count)


def unit_sphere_rule(n: int, r: float, h: float, rule: str = "product", seed: int | None = None):
    """Nodes and weights on the unit sphere sized for a sphere of radius ``r`` on spacing ``h``."""
    if n == 2:
        return _unit_circle(max(64, math.ceil(2 * math.pi * r / h)))
    target = max(256, math.ceil(4 * math.pi * r * r / (h * h)))
    if rule == "fibonacci":
        return _unit_sphere_fibonacci(target, seed)
    if rule != "product":
        raise FieldError(f"unknown sphere rule {rule!r}")
    return _unit_sphere_product(target)


def sphere_quadrature(spec: GridSpec, x0, r: float, rule: str = "product", seed=None) -> SphereQuadrature:
    x0 = np.asarray(x0, dtype=np.float64)
    u, w = unit_sphere_rule(spec.n, r, spec.h, rule, seed)
    return SphereQuadrature(x0, float(r), x0 + r * u, w * r ** (spec.n - 1))


def _check_ball(field: ScalarField, x0, r: float, r_min_cells: float = R_MIN_CELLS) -> np.ndarray:
    x0 = np.asarray(x0, dtype=np.float64)
    if x0.shape != (field.spec.n,):
        raise FieldError(f"center must have {field.spec.n} components")
    if r < r_min_cells * field.h * (1 - 1e-12):
        raise RadiusTooSmallError(f"radius {r:.4g} below {r_min_cells}h = {r_min_cells * field.h:.4g}")
    if np.max(np.abs(x0)) + r > field.spec.evaluable_halfwidth + 1e-12:
        raise OutOfDomainError(f"ball B_{r:.4g}({tuple(x0)}) leaves the evaluable region")
    return x0


def sphere_integral(field: ScalarField, x0, r: float, fn: Callable | None = None,
                    rule: str = "product", seed=None) -> float:
    """Integral over the sphere of ``fn(values, gradients, points)`` (or of v itself)."""
    x0 = _check_ball(field, x0, r)
    q = sphere_quadrature(field.spec, x0, r, rule, seed)
    vals = interpolate(field, q.points)
    if fn is None:
        integrand = vals
    else:
        integrand = fn(vals, q.points)
    return float(np.dot(q.weights, integrand))


def sphere_mean_sq(field: ScalarField, x0, r: float, rule: str = "product", seed=None) -> float:
    """Integral of v^2 over the sphere of radius r about x0."""
    x0 = _check_ball(field, x0, r)
    q = sphere_quadrature(field.spec, x0, r, rule, seed)
    vals = interpolate(field, q.points)
    return float(np.dot(q.weights, vals * vals))


def _ball_rule(spec: GridSpec, x0: np.ndarray, r: float, rule: str, seed):
    # Composite 4-point Gauss-Legendre in the radius, panel width <= h.
    panels = max(1, math.ceil(r / spec.h))
    gx, gw = np.polynomial.legendre.leggauss(4)
    edges = np.linspace(0.0, r, panels + 1)
    a, b = edges[:-1, None], edges[1:, None]
    radii = (0.5 * (b - a) * gx + 0.5 * (a + b)).ravel()
    rweights = (0.5 * (b - a) * gw).ravel()
    pts, wts = [], []
    for rho, wr in zip(radii, rweights):
        u, w = unit_sphere_rule(spec.n, rho, spec.h, rule, seed)
        pts.append(x0 + rho * u)
        wts.append(wr * w * rho ** (spec.n - 1))
    return np.concatenate(pts), np.concatenate(wts)


def ball_integral(field: ScalarField, x0, r: float, fn: Callable, rule: str = "product", seed=None) -> float:
    """Integral over B_r(x0) of ``fn(values, gradients)`` built from the interpolant."""
    x0 = _check_ball(field, x0, r)
    pts, wts = _ball_rule(field.spec, x0, r, rule, seed)
    return float(np.dot(wts, fn(interpolate(field, pts), gradient(field, pts))))


def ball_dirichlet(field: ScalarField, x0, r: float, rule: str = "product", seed=None) -> float:
    """Dirichlet energy of v over B_r(x0)."""
    x0 = _check_ball(field, x0, r)
    pts, wts = _ball_rule(field.spec, x0, r, rule, seed)
    g = gradient(field, pts)
    return float(np.dot(wts, np.einsum("ij,ij->i", g, g)))


# ---------------------------------------------------------------------------
# negativity set

def negative_threshold(field: ScalarField) -> float:
    return -NEG_REL_THRESHOLD * field.scale


def negative_mask(field: ScalarField) -> np.ndarray:
    return field.values < negative_threshold(field)


def negative_density(field: ScalarField, x0, rho: float, subsamples: int = 4) -> float:
    """|{v < 0} ∩ B_rho(x0)| / |B_rho|.

    Each grid cell is split into ``subsamples**n`` subcells whose centers are
    classified with the multilinear interpolant, which keeps the estimate
    monotone under pointwise decrease of v.
    """
    spec = field.spec
    x0 = np.asarray(x0, dtype=np.float64)
    if rho < R_MIN_CELLS * spec.h * (1 - 1e-12):
        raise RadiusTooSmallError(f"radius {rho:.4g} below {R_MIN_CELLS}h")
    if np.max(np.abs(x0)) + rho > 1.0 + 1e-12:
        raise OutOfDomainError("ball leaves the grid")
    step = spec.h / subsamples
    axes = []
    for a in range(spec.n):
        lo = max(-1.0, x0[a] - rho)
        hi = min(1.0, x0[a] + rho)
        k0 = math.floor((lo + 1.0) / step)
        k1 = math.ceil((hi + 1.0) / step)
        axes.append(-1.0 + (np.arange(k0, k1) + 0.5) * step)
    grids = np.meshgrid(*axes, indexing="ij")
    d2 = sum((g - c) ** 2 for g, c in zip(grids, x0))
    inside = d2 < rho * rho
    coords = [((g[inside] + 1.0) / spec.h) for g in grids]
    vals = ndimage.map_coordinates(field.values, coords, order=1, mode="nearest")
    total = int(np.count_nonzero(inside))
    if total == 0:
        return 0.0
    return float(np.count_nonzero(vals < negative_threshold(field)) / total)


def _box_slices(spec: GridSpec, y: np.ndarray, r: float):
    lo = np.maximum(np.floor((y - r + 1.0) / spec.h).astype(int), 0)
    hi = np.minimum(np.ceil((y + r + 1.0) / spec.h).astype(int) + 1, spec.N)
    return tuple(slice(int(a), int(b)) for a, b in zip(lo, hi)), lo


def max_radius_negative(field: ScalarField, y, r: float) -> float:
    """MR(B_r(y) ∩ {v < 0}) from a Euclidean distance transform; accurate to h."""
    spec = field.spec
    y = np.asarray(y, dtype=np.float64)
    if r < R_MIN_CELLS * spec.h * (1 - 1e-12):
        raise RadiusTooSmallError(f"radius {r:.4g} below {R_MIN_CELLS}h")
    if np.max(np.abs(y)) + r > 1.0 + 1e-12:
        raise OutOfDomainError("ball leaves the grid")
    sl, lo = _box_slices(spec, y, r)
    neg = negative_mask(field)[sl]
    local = [spec.coords[s] for s in sl]
    grids = np.meshgrid(*local, indexing="ij")
    dist_center = np.sqrt(sum((g - c) ** 2 for g, c in zip(grids, y)))
    member = neg & (dist_center < r)
    # A set holding no full grid cell has MR = 0 at this resolution.
    full = member
    for a in range(spec.n):
        idx_lo = [slice(None)] * spec.n
        idx_hi = [slice(None)] * spec.n
        idx_lo[a] = slice(0, -1)
        idx_hi[a] = slice(1, None)
        full = full[tuple(idx_lo)] & full[tuple(idx_hi)] if full.shape[a] > 1 else full[tuple(idx_lo)]
    if not np.any(full):
        return 0.0
    padded = np.pad(member, 1, constant_values=False)
    edt = ndimage.distance_transform_edt(padded, sampling=spec.h)[(slice(1, -1),) * spec.n]
    cand = np.minimum(edt, r - dist_center)
    return float(min(r, np.max(np.where(member, cand, 0.0))))


# ---------------------------------------------------------------------------
# discrete derivatives and the coincidence set

def one_sided_gradient_norm(field: ScalarField) -> np.ndarray:
    """Per-vertex |∇v| estimate from the larger of the forward/backward differences.

    A kink across a grid line shows up here while a central difference would
    cancel it.
    """
    v = field.values
    h = field.h
    acc = np.zeros_like(v)
    for a in range(v.ndim):
        d = np.diff(v, axis=a) / h
        pad_f = [(0, 0)] * v.ndim
        pad_b = [(0, 0)] * v.ndim
        pad_f[a] = (0, 1)
        pad_b[a] = (1, 0)
        fwd = np.pad(np.abs(d), pad_f)
        bwd = np.pad(np.abs(d), pad_b)
        acc += np.maximum(fwd, bwd) ** 2
    return np.sqrt(acc)


def laplacian(values: np.ndarray, h: float) -> np.ndarray:
    """5-point (2D) / 7-point (3D) Laplacian; boundary vertices are set to 0."""
    out = np.zeros_like(values)
    inner = (slice(1, -1),) * values.ndim
    acc = -2.0 * values.ndim * values[inner]
    for a in range(values.ndim):
        lo = [slice(1, -1)] * values.ndim
        hi = [slice(1, -1)] * values.ndim
        lo[a] = slice(0, -2)
        hi[a] = slice(2, None)
        acc = acc + values[tuple(lo)] + values[tuple(hi)]
    out[inner] = acc / (h * h)
    return out


def hessian_field(values: np.ndarray, h: float) -> np.ndarray:
    """Second-difference Hessian at interior vertices, shape (..., n, n)."""
    n = values.ndim
    inner_shape = tuple(s - 2 for s in values.shape)
    H = np.zeros(inner_shape + (n, n))
    c = (slice(1, -1),) * n

    def shifted(offsets):
        return values[tuple(slice(1 + o, values.shape[a] - 1 + o) for a, o in enumerate(offsets))]

    for a in range(n):
        e = [0] * n
        e[a] = 1
        em = [-x for x in e]
        H[..., a, a] = (shifted(e) - 2 * values[c] + shifted(em)) / (h * h)
        for b in range(a + 1, n):
            pp = [0] * n
            pp[a], pp[b] = 1, 1
            pm = [0] * n
            pm[a], pm[b] = 1, -1
            mp = [-x for x in pm]
            mm = [-x for x in pp]
            val = (shifted(pp) - shifted(pm) - shifted(mp) + shifted(mm)) / (4 * h * h)
            H[..., a, b] = val
            H[..., b, a] = val
    return H


def coincidence_mask(field: ScalarField, variant: str = "no_sign", c_u: float = 10.0,
                     c_g: float = 10.0, scale: float | None = None) -> np.ndarray:
    """Vertices numerically in the coincidence set.

    no_sign:          |v| <= c_u h^2 s  and  |∇v| <= c_g h s
    superconductivity: |∇v| <= c_g h s
    classical:        v <= 0 (the solver projects onto v >= 0)
    """
    h = field.h
    s = field.scale if scale is None else scale
    s = s if s > 0 else 1.0
    if variant == "classical":
        return field.values <= NEG_REL_THRESHOLD * s
    g = one_sided_gradient_norm(field)
    flat = g <= c_g * h * s
    if variant == "superconductivity":
        return flat
    if variant != "no_sign":
        raise FieldError(f"unknown variant {variant!r}")
    return flat & (np.abs(field.values) <= c_u * h * h * s)


def boundary_of(mask: np.ndarray) -> np.ndarray:
    """Vertices of ``mask`` with at least one axis neighbour outside it."""
    n = mask.ndim
    padded = np.pad(mask, 1, mode="edge")
    edge = np.zeros_like(mask)
    inner = (slice(1, -1),) * n
    for a in range(n):
        for o in (-1, 1):
            sl = [slice(1, -1)] * n
            sl[a] = slice(1 + o, padded.shape[a] - 1 + o)
            edge |= ~padded[tuple(sl)]
    return mask & edge & padded[inner]


def free_boundary_points(field: ScalarField, variant: str = "no_sign", c_u: float = 10.0,
                         c_g: float = 10.0) -> np.ndarray:
    """Coordinates (P, n) of grid vertices on the boundary of the coincidence set."""
    lam = coincidence_mask(field, variant, c_u, c_g)
    # the outer layer of the grid never counts as free boundary
    inner = np.zeros_like(lam)
    inner[(slice(1, -1),) * lam.ndim] = True
    gam = boundary_of(lam) & inner
    if lam.all():
        gam[:] = False
    idx = np.argwhere(gam)
    return field.spec.coords[idx]


def layer_mask(points_mask: np.ndarray, h: float, width: float) -> np.ndarray:
    """Vertices within ``width`` of any vertex in ``points_mask``."""
    if not points_mask.any():
        return np.zeros_like(points_mask)
    dist = ndimage.distance_transform_edt(~points_mask, sampling=h)
    return dist <= width + 1e-12


# ---------------------------------------------------------------------------
# class P(M, ω, ε, x0)

@dataclass
class ClassPReport:
    member: bool
    radii: list[float]
    ratios: list[float]
    omega: list[float]
    worst_point: list[list[float]]
    hessian_max: float
    hessian_ok: bool
    n_gamma: int

    def to_dict(self):
        return {
            "member": self.member,
            "radii": self.radii,
            "ratios": self.ratios,
            "omega": self.omega,
            "worst_point": self.worst_point,
            "hessian_max": self.hessian_max,
            "hessian_ok": self.hessian_ok,
            "n_gamma": self.n_gamma,
        }


def check_class_P(field: ScalarField, x0, eps: float, M: float, omega: Callable[[float], float],
                  radii: Sequence[float] | None = None, gamma_points=None,
                  variant: str = "no_sign", c_u: float = 10.0, c_g: float = 10.0) -> ClassPReport:
    """Measure condition (4) of class P over dyadic radii and the Hessian bound (3).

    ``gamma_points`` overrides free-boundary detection; otherwise the
    coincidence-set boundary within B̄_eps(x0) is used.
    """
    spec = field.spec
    x0 = np.asarray(x0, dtype=np.float64)
    if gamma_points is None:
        gamma = free_boundary_points(field, variant, c_u, c_g)
    else:
        gamma = np.atleast_2d(np.asarray(gamma_points, dtype=np.float64))
    if len(gamma):
        gamma = gamma[np.linalg.norm(gamma - x0, axis=1) <= eps + 1e-12]
    if len(gamma) == 0:
        raise ClassificationError(f"no free boundary points within {eps} of {tuple(x0)}")
    if radii is None:
        reach = 1.0 - eps - np.max(np.abs(x0))
        radii = []
        r = 0.5 * reach
        while r >= R_MIN_CELLS * spec.h:
            radii.append(r)
            r /= 2
        radii = sorted(radii)
    ratios, oms, worst = [], [], []
    for r in radii:
        best, where = 0.0, gamma[0]
        for y in gamma:
            if np.max(np.abs(y)) + r > 1.0:
                continue
            mr = max_radius_negative(field, y, r) / r
            if mr > best:
                best, where = mr, y
        ratios.append(best)
        oms.append(float(omega(r)))
        worst.append([float(c) for c in where])
    H = hessian_field(field.values, spec.h)
    hmax = float(np.max(np.linalg.norm(H, ord=2, axis=(-2, -1))))
    member = hmax <= M and all(q <= o + 1e-12 for q, o in zip(ratios, oms))
    return ClassPReport(member, [float(r) for r in radii], ratios, oms, worst, hmax, hmax <= M, len(gamma))


# ---------------------------------------------------------------------------
# dump format: JSON header + little-endian float64 payload

def save_field(field: ScalarField, path) -> tuple[Path, Path]:
    path = Path(path)
    header_path = path.with_suffix(".json")
    data_path = path.with_suffix(".bin")
    data_path.write_bytes(field.values.astype("<f8").tobytes(order="C"))
    header = {
        "n": field.spec.n,
        "N": field.spec.N,
        "label": field.label,
        "byte_order": "little",
        "dtype": "f64",
        "payload": data_path.name,
    }
    header_path.write_text(json.dumps(header, indent=2, sort_keys=True) + "\n")
    return header_path, data_path


def load_field(header_path) -> ScalarField:
    header_path = Path(header_path)
    header = json.loads(header_path.read_text())
    if header.get("byte_order") != "little" or header.get("dtype") != "f64":
        raise FieldError("only little-endian f64 payloads are supported")
    spec = GridSpec(int(header["n"]), int(header["N"]))
    data_path = header_path.with_name(header.get("payload", header_path.with_suffix(".bin").name))
    if not data_path.exists():
        raise FileNotFoundError(f"field payload missing: {data_path}")
    raw = data_path.read_bytes()
    expected = spec.N**spec.n * 8
    if len(raw) != expected:
        raise FieldError(f"payload {data_path.name} has {len(raw)} bytes, expected {expected}")
    values = np.frombuffer(raw, dtype="<f8").reshape(spec.shape)
    return ScalarField(spec, values, header.get("label", ""))
