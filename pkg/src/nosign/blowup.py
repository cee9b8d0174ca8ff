"""Blowup extraction and classification of free boundary points.

Rescalings u_{x0,r}(x) = u(x0 + r x) / r^2 are fitted by quadratics on the
unit ball; the quadratic part along shrinking radii, extrapolated to r = 0,
is the blowup p_* = ½<Ax, x>. The deficit w = u - p_* is then profiled with
the frequency functional to get λ_* and, after normalisation, its own
homogeneous blowup q.
"""
from __future__ import annotations

import itertools
import json
import logging
import math
from dataclasses import dataclass, field as dc_field
from typing import Sequence

import numpy as np

from .field import (
    ClassificationError,
    FieldError,
    GridSpec,
    OutOfDomainError,
    RadiusTooSmallError,
    ScalarField,
    interpolate,
    negative_density,
    unit_sphere_rule,
)
from .functionals import dyadic_radii, profile

log = logging.getLogger(__name__)

TAU_FIT = 1e-3
TAU_KER = 10 * TAU_FIT
TAU_TR = 5e-2
TAU_LAMBDA = 0.05
TAU_CONFIDENCE = 0.2
TAU_Q = 1e-3
TAU_STRUCT = 1e-3
RESCALE_R_MIN_CELLS = 8


class InsufficientDataError(FieldError):
    pass


# ---------------------------------------------------------------------------
# rescaling

def rescale(u: ScalarField, x0, r: float) -> ScalarField:
    """u_{x0,r} resampled on the grid of ``u``."""
    x0 = np.asarray(x0, dtype=np.float64)
    if r < RESCALE_R_MIN_CELLS * u.h * (1 - 1e-12):
        raise RadiusTooSmallError(f"rescale radius {r:.4g} below {RESCALE_R_MIN_CELLS}h")
    if np.max(np.abs(x0)) + r > u.spec.evaluable_halfwidth + 1e-12:
        raise OutOfDomainError("rescaled box leaves the evaluable region")
    pts = x0 + r * u.spec.vertices()
    vals = interpolate(u, pts).reshape(u.spec.shape) / (r * r)
    return u.with_values(vals, label=f"{u.label}@r={r:g}")


# ---------------------------------------------------------------------------
# quadratic fitting

def _ball_nodes(n: int, shells: int = 6):
    """Weighted nodes on the unit ball: Gauss-Legendre shells times sphere rule."""
    g, gw = np.polynomial.legendre.leggauss(shells)
    rho = 0.5 * (g + 1)
    rw = 0.5 * gw * rho ** (n - 1)
    dirs, dw = unit_sphere_rule(n, 1.0, 1.0 / 48)
    pts = (rho[:, None, None] * dirs[None]).reshape(-1, n)
    wts = (rw[:, None] * dw[None]).ravel()
    return pts, wts


def _quadratic_design(y: np.ndarray) -> tuple[np.ndarray, list]:
    n = y.shape[1]
    pairs = [(i, j) for i in range(n) for j in range(i, n)]
    cols = [np.ones(len(y))] + [y[:, i] for i in range(n)] + [y[:, i] * y[:, j] for i, j in pairs]
    return np.stack(cols, axis=1), pairs


def _coeffs_to_matrix(c: np.ndarray, pairs, n: int) -> np.ndarray:
    A = np.zeros((n, n))
    for (i, j), v in zip(pairs, c):
        if i == j:
            A[i, i] = 2 * v
        else:
            A[i, j] = A[j, i] = v
    return A


@dataclass(frozen=True)
class BlowupPolynomial:
    """p(x) = ½<Ax, x> with its spectral data."""

    A: np.ndarray
    tau_ker: float = TAU_KER

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigh(self.A)[0][::-1]

    @property
    def frame(self) -> np.ndarray:
        """Eigenvectors as columns, eigenvalues descending; the kernel is the tail."""
        return np.linalg.eigh(self.A)[1][:, ::-1]

    @property
    def m(self) -> int:
        return int(np.sum(np.abs(self.eigenvalues) <= self.tau_ker))

    @property
    def kernel(self) -> np.ndarray:
        return self.frame[:, self.n - self.m:]

    @property
    def nonnegative(self) -> bool:
        return bool(self.eigenvalues.min() >= -self.tau_ker)

    def __call__(self, *xs):
        return 0.5 * sum(self.A[i, j] * xs[i] * xs[j] for i in range(self.n) for j in range(self.n))

    def to_dict(self) -> dict:
        return {"A": self.A.tolist(), "eigenvalues": self.eigenvalues.tolist(), "m": self.m}


@dataclass
class FitReport:
    radii: list
    matrices: list
    residuals: list
    extrapolated: list
    converged: bool
    singular: bool
    trace_raw: float
    trace_warning: bool
    residual_slope: float
    reason: str = ""

    def to_dict(self) -> dict:
        return {
            "radii": list(map(float, self.radii)),
            "matrices": [np.asarray(a).tolist() for a in self.matrices],
            "residuals": list(map(float, self.residuals)),
            "converged": bool(self.converged),
            "singular": bool(self.singular),
            "trace_raw": self.trace_raw,
            "trace_warning": bool(self.trace_warning),
            "residual_slope": self.residual_slope,
            "reason": self.reason,
        }


def quadratic_fit(u: ScalarField, x0, r: float, nodes=None) -> tuple[np.ndarray, float]:
    """L2(B_1) projection of u_{x0,r} onto quadratics; returns (A, relative residual)."""
    n = u.spec.n
    y, w = nodes if nodes is not None else _ball_nodes(n)
    x0 = np.asarray(x0, dtype=np.float64)
    v = interpolate(u, x0 + r * y) / (r * r)
    X, pairs = _quadratic_design(y)
    sw = np.sqrt(w)
    c, *_ = np.linalg.lstsq(X * sw[:, None], v * sw, rcond=None)
    res = v - X @ c
    norm = math.sqrt(float(np.dot(w, v * v)))
    rel = math.sqrt(float(np.dot(w, res * res))) / norm if norm > 0 else float("inf")
    return _coeffs_to_matrix(c[1 + n:], pairs, n), rel


def _aitken(seq: Sequence[np.ndarray], floor: float = 1e-12) -> list[np.ndarray]:
    """Vector Aitken extrapolation of a geometrically converging matrix sequence."""
    out = []
    for a0, a1, a2 in zip(seq, seq[1:], seq[2:]):
        d0, d1 = a1 - a0, a2 - a1
        nd0 = float(np.sum(d0 * d0))
        if nd0 <= floor**2 or float(np.sum(d1 * d1)) <= floor**2:
            out.append(a2.copy())
            continue
        ratio = float(np.sum(d1 * d0)) / nd0
        if not 0 < ratio < 1:
            out.append(a2.copy())
            continue
        out.append(a2 + d1 * ratio / (1 - ratio))
    return out


def default_radii(u: ScalarField, x0, r_max: float = 0.5, count: int | None = None) -> np.ndarray:
    x0 = np.asarray(x0, dtype=np.float64)
    r_max = min(r_max, u.spec.evaluable_halfwidth - float(np.max(np.abs(x0))))
    radii = dyadic_radii(RESCALE_R_MIN_CELLS * u.h, r_max)[::-1]
    return radii if count is None else radii[:count]


def fit_blowup(u: ScalarField, x0, radii: Sequence[float] | None = None, tau_fit: float = TAU_FIT,
               tau_tr: float = TAU_TR, max_residual: float = 0.25,
               min_slope: float = 0.2) -> tuple[BlowupPolynomial, FitReport]:
    """Blowup quadratic at x0 from least-squares fits over shrinking radii.

    Radii are processed from largest to smallest. The fitted matrices are
    Aitken-extrapolated to r = 0 and accepted once successive extrapolants
    agree to ``tau_fit``. A point counts as singular when the fit residual
    either vanishes or decays like a positive power of r; a residual that
    stays put (half-space type profiles) marks a regular point.
    """
    radii = np.sort(np.asarray(default_radii(u, x0) if radii is None else radii, float))[::-1]
    if radii.size < 3:
        raise ClassificationError("fit_blowup needs at least 3 radii")
    nodes = _ball_nodes(u.spec.n)
    mats, resid = [], []
    for r in radii:
        A, rel = quadratic_fit(u, x0, r, nodes)
        mats.append(A)
        resid.append(rel)
    ext = _aitken(mats)
    steps = [float(np.linalg.norm(b - a)) for a, b in zip(ext, ext[1:])]
    converged = all(s < tau_fit for s in steps[-2:]) if steps else True
    A = ext[-1] if ext else mats[-1]
    A = 0.5 * (A + A.T)

    res = np.asarray(resid)
    if res[-1] < 1e-8:
        slope = float("inf")
    else:
        k = min(4, res.size)
        slope = float(np.polyfit(np.log(radii[-k:]), np.log(np.maximum(res[-k:], 1e-300)), 1)[0])
    decaying = res[-1] < 1e-8 or (slope >= min_slope and res[-1] < max_residual)

    tr = float(np.trace(A))
    trace_warning = abs(tr - 1) > tau_tr
    if not trace_warning and tr != 0:
        A = A / tr
    elif converged and decaying:
        log.warning("blowup trace %.4g differs from 1 by more than %.3g; not a solution?", tr, tau_tr)
    reason = ""
    if not converged:
        reason = "fits did not converge"
    elif not decaying:
        reason = "fit residual does not decay (regular point)"
    report = FitReport(list(radii), mats, resid, ext, converged, converged and decaying,
                       tr, trace_warning, slope, reason)
    return BlowupPolynomial(A, tau_ker=10 * tau_fit), report


# ---------------------------------------------------------------------------
# classification

@dataclass
class SingularPoint:
    location: np.ndarray
    blowup: BlowupPolynomial
    lam_star: float
    confidence: float
    m: int
    label: str
    sigma_plus: bool
    sigma_plus_eig: bool
    sigma_plus_density: bool
    sigma_plus_ambiguous: bool
    isolated: bool
    fit_residual: float
    densities: list = dc_field(default_factory=list)

    @property
    def margin(self) -> float:
        """Measured λ_* − 2."""
        return self.lam_star - 2

    def to_dict(self) -> dict:
        return {
            "location": np.asarray(self.location).tolist(),
            "A": self.blowup.A.tolist(),
            "eigenvalues": self.blowup.eigenvalues.tolist(),
            "lambda_star": self.lam_star,
            "confidence": self.confidence,
            "margin": self.margin,
            "m": self.m,
            "label": self.label,
            "sigma_plus": self.sigma_plus,
            "sigma_plus_eig": self.sigma_plus_eig,
            "sigma_plus_density": self.sigma_plus_density,
            "sigma_plus_ambiguous": self.sigma_plus_ambiguous,
            "isolated": self.isolated,
            "fit_residual": self.fit_residual,
            "densities": self.densities,
        }


def stratum_label(lam: float, confidence: float, m: int, n: int, tau: float = TAU_LAMBDA) -> str:
    """generic / anomalous / unresolved from the measured frequency."""
    if not math.isfinite(lam) or confidence > TAU_CONFIDENCE:
        return "unresolved"
    threshold = 2.5 if m == n - 1 else 3.0
    return "generic" if lam >= threshold - tau else "anomalous"


def density_trend(u: ScalarField, x0, radii: Sequence[float], min_slope: float = 0.1) -> tuple[bool, list]:
    """Zero-density test for {u < 0}: densities vanish or shrink like a power of ρ."""
    dens = [(float(r), negative_density(u, x0, r)) for r in sorted(radii)]
    d = np.array([v for _, v in dens])
    if np.all(d == 0):
        return True, dens
    if np.any(d == 0):
        # vanishing at the small radii already
        return bool(d[0] == 0), dens
    rr = np.array([r for r, _ in dens])
    slope = float(np.polyfit(np.log(rr), np.log(d), 1)[0])
    return bool(slope >= min_slope and np.all(np.diff(d) >= -1e-12)), dens


def classify(u: ScalarField, x0, radii: Sequence[float] | None = None, r_max: float = 0.5,
             tau_fit: float = TAU_FIT) -> SingularPoint:
    x0 = np.asarray(x0, dtype=np.float64)
    radii = default_radii(u, x0, r_max) if radii is None else np.asarray(radii, float)
    p, rep = fit_blowup(u, x0, radii, tau_fit=tau_fit)
    if not rep.singular:
        raise ClassificationError(f"not singular (regular or unresolved): {rep.reason}")
    n = u.spec.n
    pv = u.with_values(u.values - _sample_quadratic(u.spec, p.A, x0), label=f"{u.label}-p*")
    r_lo, r_hi = float(np.min(radii)), float(np.max(radii))
    prof = profile(pv, x0, r_lo, r_hi)
    lam, conf = prof.lam_star, prof.confidence
    m = p.m
    eig_flag = p.nonnegative
    dens_flag, dens = density_trend(u, x0, radii)
    return SingularPoint(
        location=x0, blowup=p, lam_star=lam, confidence=conf, m=m,
        label=stratum_label(lam, conf, m, n),
        sigma_plus=eig_flag and dens_flag, sigma_plus_eig=eig_flag, sigma_plus_density=dens_flag,
        sigma_plus_ambiguous=eig_flag != dens_flag, isolated=m == 0,
        fit_residual=float(rep.residuals[-1]), densities=dens,
    )


def _sample_quadratic(spec: GridSpec, A: np.ndarray, x0) -> np.ndarray:
    mesh = spec.mesh()
    d = [m - c for m, c in zip(mesh, x0)]
    return 0.5 * sum(A[i, j] * d[i] * d[j] for i in range(spec.n) for j in range(spec.n))


def singular_points_jsonl(points: Sequence[SingularPoint]) -> str:
    return "".join(json.dumps(p.to_dict()) + "\n" for p in points)


# ---------------------------------------------------------------------------
# Almgren blowup of the deficit

def harmonic_basis(n: int, d: int) -> tuple[list, np.ndarray]:
    """Orthonormal basis (in coefficient space) of degree-d homogeneous harmonic polynomials.

    Returns the monomial exponent list and a matrix whose columns are basis
    coefficient vectors. Built as the null space of the Laplacian map.
    """
    mons = [e for e in itertools.product(range(d + 1), repeat=n) if sum(e) == d]
    low = [e for e in itertools.product(range(d - 1), repeat=n) if sum(e) == d - 2] if d >= 2 else []
    index = {e: i for i, e in enumerate(low)}
    L = np.zeros((max(len(low), 1), len(mons)))
    for j, e in enumerate(mons):
        for a in range(n):
            if e[a] >= 2:
                f = list(e)
                f[a] -= 2
                L[index[tuple(f)], j] += e[a] * (e[a] - 1)
    _, s, vt = np.linalg.svd(L)
    rank = int(np.sum(s > 1e-10 * max(s.max(), 1.0))) if s.size else 0
    return mons, vt[rank:].T


def _eval_monomials(mons, pts: np.ndarray) -> np.ndarray:
    return np.stack([np.prod(pts ** np.array(e), axis=1) for e in mons], axis=1)


@dataclass
class AlmgrenBlowup:
    lam: float
    kind: str                       # "polynomial" or "angular"
    residual: float
    harmonic: bool
    monomials: list = dc_field(default_factory=list)
    coefficients: np.ndarray | None = None
    hessian: np.ndarray | None = None
    t: float | None = None
    N: np.ndarray | None = None
    structure_defect: float | None = None
    angular: dict = dc_field(default_factory=dict)
    radius: float = float("nan")

    @property
    def trace_gap(self) -> float | None:
        """|tr N − (n−m) t| for the degree-2 structure."""
        if self.t is None:
            return None
        k = self.hessian.shape[0] - self.N.shape[0]
        return abs(float(np.trace(self.N)) - k * self.t)

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        if self.kind != "polynomial":
            raise FieldError("only polynomial blowups can be evaluated")
        return _eval_monomials(self.monomials, np.atleast_2d(pts)) @ self.coefficients

    def to_dict(self) -> dict:
        out = {"lambda": self.lam, "kind": self.kind, "residual": self.residual,
               "harmonic": self.harmonic, "radius": self.radius}
        if self.coefficients is not None:
            out["monomials"] = [list(e) for e in self.monomials]
            out["coefficients"] = self.coefficients.tolist()
        if self.t is not None:
            out.update(t=self.t, N=self.N.tolist(), trace_gap=self.trace_gap,
                       structure_defect=self.structure_defect)
        if self.angular:
            out["angular"] = self.angular
        return out


def _normalized_deficit(u: ScalarField, p: BlowupPolynomial, x0, r: float, dirs: np.ndarray,
                        dw: np.ndarray) -> np.ndarray:
    pts = x0 + r * dirs
    w = interpolate(u, pts) - p(*(pts - x0).T)
    norm = math.sqrt(float(np.dot(dw, w * w)))
    if norm == 0:
        raise ClassificationError("deficit vanishes on the sphere")
    return w / norm


def _structure(Q: np.ndarray, p: BlowupPolynomial):
    """Split D²q in p_*'s eigenframe into the t·I block and −N on the kernel."""
    V = p.frame
    Qf = V.T @ Q @ V
    k = p.n - p.m
    top = Qf[:k, :k]
    t = float(np.trace(top) / k) if k else 0.0
    N = -Qf[k:, k:]
    defect = float(np.linalg.norm(top - t * np.eye(k)) + np.linalg.norm(Qf[:k, k:]))
    return t, N, defect


def almgren_blowup(u: ScalarField, p: BlowupPolynomial, x0, lam: float, radius: float | None = None,
                   tau_q: float = TAU_Q) -> AlmgrenBlowup:
    """Homogeneous blowup q of w = u − p_* at x0, from the normalised deficit on ∂B_r.

    Integer λ: least squares over the degree-λ harmonic polynomial basis.
    Half-integer λ (2D): fit of the angular profile by sin/cos(λθ) with θ
    measured from the slit along the kernel of p_*.
    """
    x0 = np.asarray(x0, dtype=np.float64)
    n = u.spec.n
    if radius is None:
        radius = RESCALE_R_MIN_CELLS * u.h
    dirs, dw = unit_sphere_rule(n, 1.0, 1.0 / 64)
    wt = _normalized_deficit(u, p, x0, radius, dirs, dw)
    d = round(lam)
    if abs(lam - d) < 0.25:
        mons, B = harmonic_basis(n, d)
        M = _eval_monomials(mons, dirs) @ B
        sw = np.sqrt(dw)
        c, *_ = np.linalg.lstsq(M * sw[:, None], wt * sw, rcond=None)
        res = wt - M @ c
        resid = math.sqrt(float(np.dot(dw, res * res)))
        coef = B @ c
        qn = math.sqrt(float(np.dot(dw, (M @ c) ** 2)))
        coef = coef / qn
        out = AlmgrenBlowup(float(d), "polynomial", resid, resid <= tau_q, mons, coef, radius=radius)
        if d == 2:
            Q = np.zeros((n, n))
            for e, v in zip(mons, coef):
                idx = [i for i in range(n) for _ in range(e[i])]
                i, j = idx
                if i == j:
                    Q[i, i] = 2 * v
                else:
                    Q[i, j] = Q[j, i] = v
            out.hessian = Q
            out.t, out.N, out.structure_defect = _structure(Q, p)
        if not out.harmonic:
            log.warning("blowup not harmonic-polynomial (residual %.3g), report only", resid)
        return out

    if n != 2:
        return AlmgrenBlowup(lam, "angular", float("inf"), False, radius=radius)
    best = None
    for e in (p.kernel[:, 0] if p.m else np.array([1.0, 0.0])) * np.array([[1.0], [-1.0]]):
        cut = math.atan2(e[1], e[0])
        theta = np.mod(np.arctan2(dirs[:, 1], dirs[:, 0]) - cut, 2 * np.pi)
        M = np.stack([np.sin(lam * theta), np.cos(lam * theta)], axis=1)
        sw = np.sqrt(dw)
        c, *_ = np.linalg.lstsq(M * sw[:, None], wt * sw, rcond=None)
        res = wt - M @ c
        resid = math.sqrt(float(np.dot(dw, res * res)))
        if best is None or resid < best[0]:
            best = (resid, cut, c, theta)
    resid, cut, c, theta = best
    order = np.argsort(theta)
    ang = {"slit_angle": cut, "sin": float(c[0]), "cos": float(c[1]),
           "theta": theta[order].tolist(), "profile": wt[order].tolist()}
    return AlmgrenBlowup(lam, "angular", resid, resid <= tau_q, angular=ang, radius=radius)


def from_hessian(Q: np.ndarray) -> AlmgrenBlowup:
    """Degree-2 blowup object built directly from a trace-free Hessian (for tests and sampling)."""
    n = Q.shape[0]
    mons, _ = harmonic_basis(n, 2)
    coef = []
    for e in mons:
        i, j = [a for a in range(n) for _ in range(e[a])]
        coef.append(Q[i, i] / 2 if i == j else Q[i, j])
    coef = np.array(coef)
    return AlmgrenBlowup(2.0, "polynomial", 0.0, True, mons, coef, hessian=np.asarray(Q, float))


# ---------------------------------------------------------------------------
# sign inequality over the nonnegative quadratic class

def sample_p_plus(n: int, count: int, seed: int = 0) -> np.ndarray:
    """Matrices R diag(λ) Rᵀ with Haar rotations and λ uniform on the simplex."""
    rng = np.random.default_rng(seed)
    lam = rng.dirichlet(np.ones(n), size=count)
    if n == 2:
        a = rng.uniform(0, 2 * np.pi, size=count)
        R = np.stack([np.stack([np.cos(a), -np.sin(a)], -1), np.stack([np.sin(a), np.cos(a)], -1)], -2)
    else:
        from scipy.spatial.transform import Rotation

        R = Rotation.random(count, random_state=rng.integers(2**32)).as_matrix()
    return np.einsum("sij,sj,skj->sik", R, lam, R)


def monneau_inequality(q: AlmgrenBlowup, p: BlowupPolynomial, samples: int = 10_000, seed: int = 0,
                       include: Sequence[np.ndarray] = ()) -> dict:
    """Minimum over sampled p ∈ P⁺ of ∫_{∂B_1} q (p_* − p)."""
    if q.hessian is None:
        raise FieldError("monneau_inequality needs a degree-2 blowup")
    n = p.n
    # the integrand is a quartic; the smallest rule already integrates it exactly
    dirs, dw = unit_sphere_rule(n, 1.0, 1.0)
    qv = 0.5 * np.einsum("pi,ij,pj->p", dirs, q.hessian, dirs)
    Bs = sample_p_plus(n, samples, seed)
    if len(include):
        Bs = np.concatenate([Bs, np.asarray(include, float).reshape(-1, n, n)])
    D = p.A[None] - Bs
    vals = 0.5 * np.einsum("pi,sij,pj->sp", dirs, D, dirs)
    integrals = vals @ (dw * qv)
    i = int(np.argmin(integrals))
    return {"minimum": float(integrals[i]), "argmin": Bs[i].tolist(), "samples": int(len(Bs)),
            "seed": seed, "integrals": integrals}


# ---------------------------------------------------------------------------
# regularity of x0 ↦ A_{x0}

@dataclass(frozen=True)
class HolderFit:
    exponent: float
    constant: float
    r2: float
    constant_map: bool
    pairs: int

    def to_csv(self) -> str:
        return "exponent,constant,r2,constant_map,pairs\n" + \
            f"{self.exponent!r},{self.constant!r},{self.r2!r},{self.constant_map},{self.pairs}\n"


def holder_exponent(points, bins: int = 10, rel_tol: float = 1e-12) -> HolderFit:
    """Fit |A_x − A_y| ≈ C |x − y|^β from the upper envelope of pairwise differences.

    ``points`` are SingularPoints or (location, A) pairs. Pairs are binned by
    log-distance and the largest difference per bin is regressed, since a
    Hölder bound is a statement about the worst pair at each scale.
    """
    locs, mats = [], []
    for pt in points:
        if isinstance(pt, SingularPoint):
            locs.append(np.asarray(pt.location, float))
            mats.append(pt.blowup.A)
        else:
            locs.append(np.asarray(pt[0], float))
            mats.append(np.asarray(pt[1], float))
    if len(locs) < 5:
        raise InsufficientDataError(f"need at least 5 resolved points, got {len(locs)}")
    X = np.stack(locs)
    M = np.stack(mats)
    i, j = np.triu_indices(len(X), 1)
    dist = np.linalg.norm(X[i] - X[j], axis=1)
    diff = np.linalg.norm((M[i] - M[j]).reshape(len(i), -1), axis=1)
    keep = dist > 0
    dist, diff = dist[keep], diff[keep]
    scale = max(1.0, float(np.max(np.abs(M))))
    if np.all(diff <= rel_tol * scale):
        return HolderFit(float("nan"), 0.0, float("nan"), True, int(dist.size))
    ok = diff > rel_tol * scale
    ld, la = np.log(dist[ok]), np.log(diff[ok])
    edges = np.linspace(ld.min(), ld.max() + 1e-12, bins + 1)
    which = np.clip(np.digitize(ld, edges) - 1, 0, bins - 1)
    xs, ys = [], []
    for b in range(bins):
        sel = which == b
        if sel.any():
            k = np.argmax(la[sel])
            xs.append(ld[sel][k])
            ys.append(la[sel][k])
    if len(xs) < 3:
        xs, ys = ld, la
    xs, ys = np.asarray(xs), np.asarray(ys)
    beta, logc = np.polyfit(xs, ys, 1)
    pred = beta * xs + logc
    ss = float(np.sum((ys - ys.mean()) ** 2))
    r2 = 1 - float(np.sum((ys - pred) ** 2)) / ss if ss > 0 else 1.0
    return HolderFit(float(beta), float(math.exp(logc)), r2, False, int(dist.size))
