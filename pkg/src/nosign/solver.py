"""
Grid solvers for

    no_sign            Δu = χ_Ω(u),  Λ(u) = {u = |∇u| = 0}
    classical          Δu = χ_{u>0}, u >= 0
    superconductivity  Δu = χ_{|∇u|>0}

on [-1, 1]^n with Dirichlet data on the box boundary.  The classical variant
is solved by projected red-black SOR; the other two by a damped fixed point
over the coincidence set, each step being one Poisson solve.
"""

from __future__ import annotations

import hashlib
import logging
import math
from dataclasses import dataclass, field as dc_field
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from numba import njit
from scipy import ndimage

from .field import (
    GridSpec,
    ScalarField,
    boundary_of,
    coincidence_mask,
    laplacian,
    layer_mask,
    sample,
)

logger = logging.getLogger(__name__)

VARIANTS = ("no_sign", "classical", "superconductivity")


class SolverError(ValueError):
    pass


@dataclass
class SolverConfig:
    spec: GridSpec
    boundary: Callable
    variant: str = "no_sign"
    theta: float = 0.5
    tol: float = 1e-8
    max_outer: int = 200
    c_u: float = 0.2
    c_g: float = 1.0
    inner: str = "direct"
    initial: Callable | None = None
    max_sweeps: int = 200_000

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise SolverError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if not 0 < self.theta <= 1:
            raise SolverError(f"damping must lie in (0, 1], got {self.theta}")
        if not self.tol > 0:
            raise SolverError("tolerance must be positive")
        if self.inner not in ("direct", "redblack"):
            raise SolverError(f"inner solver must be 'direct' or 'redblack', got {self.inner!r}")


@dataclass
class SolveReport:
    variant: str
    iterations: int
    residual: float
    coincidence_history: list[int] = dc_field(default_factory=list)
    converged: bool = False
    oscillating: bool = False
    coincidence_hash: str = ""
    max_update: float = float("nan")

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "iterations": self.iterations,
            "residual": self.residual,
            "coincidence_history": self.coincidence_history,
            "converged": self.converged,
            "oscillating": self.oscillating,
            "coincidence_hash": self.coincidence_hash,
            "max_update": self.max_update,
        }


# ---------------------------------------------------------------------------
# relaxation kernels

@njit(cache=True)
def _rb_sweep_2d(u, f, h2, omega, project):
    n0, n1 = u.shape
    change = 0.0
    for color in range(2):
        for i in range(1, n0 - 1):
            start = 1 + ((i + 1 + color) % 2)
            for j in range(start, n1 - 1, 2):
                gs = 0.25 * (u[i - 1, j] + u[i + 1, j] + u[i, j - 1] + u[i, j + 1] - h2 * f[i, j])
                new = u[i, j] + omega * (gs - u[i, j])
                if project and new < 0.0:
                    new = 0.0
                d = abs(new - u[i, j])
                if d > change:
                    change = d
                u[i, j] = new
    return change


@njit(cache=True)
def _rb_sweep_3d(u, f, h2, omega, project):
    n0, n1, n2 = u.shape
    change = 0.0
    for color in range(2):
        for i in range(1, n0 - 1):
            for j in range(1, n1 - 1):
                start = 1 + ((i + j + color) % 2)
                for k in range(start, n2 - 1, 2):
                    gs = (u[i - 1, j, k] + u[i + 1, j, k] + u[i, j - 1, k] + u[i, j + 1, k]
                          + u[i, j, k - 1] + u[i, j, k + 1] - h2 * f[i, j, k]) / 6.0
                    new = u[i, j, k] + omega * (gs - u[i, j, k])
                    if project and new < 0.0:
                        new = 0.0
                    d = abs(new - u[i, j, k])
                    if d > change:
                        change = d
                    u[i, j, k] = new
    return change


def sor_omega(N: int) -> float:
    return 2.0 / (1.0 + math.sin(math.pi / (N - 1)))


def redblack_relax(u: np.ndarray, f: np.ndarray, h: float, tol: float, max_sweeps: int,
                   project: bool = False, omega: float | None = None) -> tuple[int, float]:
    """Red-black SOR in place until the max update drops below ``tol``."""
    omega = sor_omega(u.shape[0]) if omega is None else omega
    sweep = _rb_sweep_2d if u.ndim == 2 else _rb_sweep_3d
    change = math.inf
    for it in range(1, max_sweeps + 1):
        change = sweep(u, f, h * h, omega, project)
        if change < tol:
            return it, change
    return max_sweeps, change


# ---------------------------------------------------------------------------
# direct Poisson solver on interior unknowns

class PoissonDirect:
    """Sparse LU of the 5/7-point Dirichlet Laplacian, factorized once per grid."""

    def __init__(self, spec: GridSpec):
        self.spec = spec
        m = spec.N - 2
        h = spec.h
        T = sp.diags([np.ones(m - 1), -2 * np.ones(m), np.ones(m - 1)], [-1, 0, 1]) / (h * h)
        I = sp.identity(m)
        if spec.n == 2:
            L = sp.kron(T, I) + sp.kron(I, T)
        else:
            L = sp.kron(sp.kron(T, I), I) + sp.kron(sp.kron(I, T), I) + sp.kron(sp.kron(I, I), T)
        self._lu = spla.splu(L.tocsc())

    def solve(self, f: np.ndarray, g: np.ndarray) -> np.ndarray:
        """Solve Δu = f inside, u = g on the box boundary."""
        h2 = self.spec.h ** 2
        inner = (slice(1, -1),) * self.spec.n
        rhs = f[inner].copy()
        # move known boundary values to the right-hand side
        n = self.spec.n
        for a in range(n):
            for end in (0, -1):
                r_sl = [slice(None)] * n
                g_sl = [slice(1, -1)] * n
                r_sl[a] = end
                g_sl[a] = end
                rhs[tuple(r_sl)] -= g[tuple(g_sl)] / h2
        u = g.copy()
        u[inner] = self._lu.solve(rhs.ravel()).reshape(rhs.shape)
        return u


_DIRECT_CACHE: dict[GridSpec, PoissonDirect] = {}


def _direct(spec: GridSpec) -> PoissonDirect:
    if spec not in _DIRECT_CACHE:
        _DIRECT_CACHE.clear()
        _DIRECT_CACHE[spec] = PoissonDirect(spec)
    return _DIRECT_CACHE[spec]


def boundary_values(spec: GridSpec, g: Callable) -> np.ndarray:
    """Grid array holding g on the box boundary and zero inside."""
    vals = np.asarray(sample(spec, g).values).copy()
    vals[(slice(1, -1),) * spec.n] = 0.0
    return vals


def poisson(spec: GridSpec, f: np.ndarray, g: np.ndarray, inner: str = "direct",
            tol: float = 1e-12, guess: np.ndarray | None = None, max_sweeps: int = 200_000) -> np.ndarray:
    if inner == "direct":
        return _direct(spec).solve(f, g)
    u = g.copy() if guess is None else guess.copy()
    b = (slice(1, -1),) * spec.n
    edge = np.ones(spec.shape, dtype=bool)
    edge[b] = False
    u[edge] = g[edge]
    redblack_relax(u, f, spec.h, tol, max_sweeps)
    return u


# ---------------------------------------------------------------------------
# residual

def gamma_layer(lam: np.ndarray, h: float, width_cells: float = 2.0) -> np.ndarray:
    """Vertices within width_cells*h of the interface between Λ and its complement."""
    inner = np.zeros_like(lam)
    inner[(slice(1, -1),) * lam.ndim] = True
    gam = (boundary_of(lam) | boundary_of(~lam)) & inner
    if lam.all() or not lam.any():
        gam[:] = False
    return layer_mask(gam, h, width_cells * h)


def residual_map(field: ScalarField, variant: str = "no_sign", c_u: float = 0.2,
                 c_g: float = 1.0, mask_width: float = 2.0) -> ScalarField:
    """|Δu − χ_Ω| at interior vertices; vertices within ``mask_width``·h of Γ and
    the outer box layer are set to 0."""
    lam = coincidence_mask(field, variant, c_u, c_g, scale=1.0)
    chi = (~lam).astype(np.float64)
    res = np.abs(laplacian(field.values, field.h) - chi)
    edge = np.ones(field.spec.shape, dtype=bool)
    edge[(slice(1, -1),) * field.spec.n] = False
    res[edge] = 0.0
    res[gamma_layer(lam, field.h, mask_width)] = 0.0
    return field.with_values(res, f"residual({field.label})")


def _hash(mask: np.ndarray) -> str:
    return hashlib.sha256(np.packbits(mask).tobytes()).hexdigest()[:16]


# ---------------------------------------------------------------------------

def _prolong(coarse: np.ndarray, fine_shape) -> np.ndarray:
    factor = (fine_shape[0] - 1) / (coarse.shape[0] - 1)
    coords = np.meshgrid(*[np.arange(s) / factor for s in fine_shape], indexing="ij")
    return ndimage.map_coordinates(coarse, coords, order=3, mode="nearest")


def _solve_classical(cfg: SolverConfig) -> tuple[ScalarField, SolveReport]:
    spec = cfg.spec
    g = sample(spec, cfg.boundary).values
    edge = np.ones(spec.shape, dtype=bool)
    edge[(slice(1, -1),) * spec.n] = False
    if cfg.initial is not None:
        u = np.maximum(sample(spec, cfg.initial).values.copy(), 0.0)
    elif spec.N >= 129 and (spec.N - 1) % 2 == 0 and ((spec.N - 1) // 2 + 1) % 2 == 1:
        coarse_cfg = SolverConfig(GridSpec(spec.n, (spec.N - 1) // 2 + 1), cfg.boundary, "classical",
                                  tol=cfg.tol * 4, max_sweeps=cfg.max_sweeps)
        coarse, _ = _solve_classical(coarse_cfg)
        u = np.maximum(_prolong(coarse.values, spec.shape), 0.0)
    else:
        u = np.zeros(spec.shape)
    u[edge] = g[edge]
    f = np.ones(spec.shape)
    sweeps, change = redblack_relax(u, f, spec.h, cfg.tol, cfg.max_sweeps, project=True)
    field = ScalarField(spec, u, "classical")
    lam = u <= 0.0
    lam[edge] = False
    res = residual_map(field, "classical")
    report = SolveReport(
        variant="classical",
        iterations=sweeps,
        residual=float(res.values.max()),
        coincidence_history=[int(lam.sum())],
        converged=change < cfg.tol,
        coincidence_hash=_hash(lam),
        max_update=float(change),
    )
    return field, report


def _solve_fixed_point(cfg: SolverConfig) -> tuple[ScalarField, SolveReport]:
    spec = cfg.spec
    g = sample(spec, cfg.boundary).values
    edge = np.ones(spec.shape, dtype=bool)
    edge[(slice(1, -1),) * spec.n] = False
    ones = np.ones(spec.shape)
    inner_tol = cfg.tol / 10
    if cfg.initial is not None:
        u = sample(spec, cfg.initial).values.copy()
        u[edge] = g[edge]
    else:
        u = poisson(spec, ones, g, cfg.inner, inner_tol, max_sweeps=cfg.max_sweeps)
    history: list[int] = []
    hashes: list[str] = []
    stable = 0
    converged = False
    oscillating = False
    change = math.inf
    it = 0
    u_tilde = u
    lam = np.zeros(spec.shape, dtype=bool)
    for it in range(1, cfg.max_outer + 1):
        cur = ScalarField(spec, u)
        lam = coincidence_mask(cur, cfg.variant, cfg.c_u, cfg.c_g, scale=1.0)
        lam[edge] = False
        key = _hash(lam)
        history.append(int(lam.sum()))
        if hashes and key == hashes[-1]:
            stable += 1
        else:
            if key in hashes:
                oscillating = True
            stable = 0
        hashes.append(key)
        f = np.where(lam, 0.0, 1.0)
        u_tilde = poisson(spec, f, g, cfg.inner, inner_tol, guess=u, max_sweeps=cfg.max_sweeps)
        new = (1 - cfg.theta) * u + cfg.theta * u_tilde
        change = float(np.max(np.abs(new - u)))
        u = new
        if stable >= 3 and change < cfg.tol:
            converged = True
            break
    # Once Λ is stable the undamped Poisson solution is the fixed point itself.
    out = u_tilde if converged else u
    field = ScalarField(spec, out, cfg.variant)
    res = residual_map(field, cfg.variant, cfg.c_u, cfg.c_g)
    report = SolveReport(
        variant=cfg.variant,
        iterations=it,
        residual=float(res.values.max()),
        coincidence_history=history,
        converged=converged,
        oscillating=oscillating and not converged,
        coincidence_hash=_hash(lam),
        max_update=change,
    )
    if not converged:
        logger.warning("fixed point did not converge in %d iterations (update %.3e)", it, change)
    return field, report


def solve(cfg: SolverConfig) -> tuple[ScalarField, SolveReport]:
    if cfg.variant == "classical":
        return _solve_classical(cfg)
    return _solve_fixed_point(cfg)
