"""Frequency, Weiss-type energy and L2-growth functionals on grid fields.

For a field v and a ball B_r(x0) write D(r) = int_B |grad v|^2 and
S(r) = int_{dB} v^2. Then

    phi(r)       = r D / S
    W_lam(r)     = r^-(n-2+2 lam) D - lam r^-(n-1+2 lam) S
    H_lam(r)     = r^-(n-1+2 lam) S
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Sequence

import numpy as np

from .field import (
    FieldError,
    ScalarField,
    ball_dirichlet,
    boundary_of,
    coincidence_mask,
    laplacian,
    layer_mask,
    sample,
    sphere_mean_sq,
)

PROFILE_R_MIN_CELLS = 8
DEGENERATE_REL = 1e-30
MONO_REL = 1e-3


class DegenerateDenominatorError(FieldError):
    pass


class ParameterError(FieldError):
    pass


def _energies(v: ScalarField, x0, r: float) -> tuple[float, float]:
    return ball_dirichlet(v, x0, r), sphere_mean_sq(v, x0, r)


def _phi(v: ScalarField, r: float, D: float, S: float) -> float:
    if S <= DEGENERATE_REL * v.scale**2:
        raise DegenerateDenominatorError(f"sphere integral {S:.3e} vanishes at r={r:.4g}")
    return r * D / S


def _weiss(n: int, r: float, lam: float, D: float, S: float) -> float:
    return r ** -(n - 2 + 2 * lam) * D - lam * r ** -(n - 1 + 2 * lam) * S


def _monneau(n: int, r: float, lam: float, S: float) -> float:
    return r ** -(n - 1 + 2 * lam) * S


def almgren(v: ScalarField, x0, r: float) -> float:
    """Almgren frequency r D(r) / S(r)."""
    D, S = _energies(v, x0, r)
    return _phi(v, r, D, S)


def weiss(v: ScalarField, x0, r: float, lam: float) -> float:
    D, S = _energies(v, x0, r)
    return _weiss(v.spec.n, r, lam, D, S)


def monneau(v: ScalarField, x0, r: float, lam: float) -> float:
    return _monneau(v.spec.n, r, lam, sphere_mean_sq(v, x0, r))


# ---------------------------------------------------------------------------

def _fmt_lam(lam: float) -> str:
    return f"{lam:g}"


@dataclass
class FrequencyProfile:
    center: np.ndarray
    radii: np.ndarray
    phi: np.ndarray
    lams: tuple = ()
    weiss: dict = dc_field(default_factory=dict)
    monneau: dict = dc_field(default_factory=dict)
    # energy part r^-(n-2+2 lam) D of each W track, used as its scale
    weiss_energy: dict = dc_field(default_factory=dict, repr=False)
    lam_star: float = float("nan")
    confidence: float = float("nan")

    def __post_init__(self):
        self.radii = np.asarray(self.radii, dtype=np.float64)
        self.phi = np.asarray(self.phi, dtype=np.float64)
        if np.any(np.diff(self.radii) <= 0):
            raise ParameterError("profile radii must be strictly increasing")
        tracks = [self.phi, *self.weiss.values(), *self.monneau.values()]
        if not all(np.all(np.isfinite(t)) for t in tracks):
            raise ParameterError("profile contains non-finite values")

    def track(self, name: str, lam: float | None = None) -> np.ndarray:
        if name in ("phi", "Φ"):
            return self.phi
        table = {"weiss": self.weiss, "W": self.weiss, "monneau": self.monneau, "H": self.monneau}.get(name)
        if table is None:
            raise ParameterError(f"unknown track {name!r}")
        key = _lookup_lam(table, lam)
        return table[key]

    def track_scale(self, name: str, lam: float | None = None) -> float:
        """Magnitude used to make monotonicity tolerances relative.

        W tracks can vanish identically, so their scale is the size of the energy term.
        """
        if name in ("weiss", "W"):
            key = _lookup_lam(self.weiss_energy, lam)
            return float(np.max(np.abs(self.weiss_energy[key])))
        return float(np.max(np.abs(self.track(name, lam))))

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        lams = list(self.weiss)
        w.writerow(["r", "phi"] + [f"w_{_fmt_lam(l)}" for l in lams] + [f"h_{_fmt_lam(l)}" for l in lams])
        for i, r in enumerate(self.radii):
            row = [repr(float(r)), repr(float(self.phi[i]))]
            row += [repr(float(self.weiss[l][i])) for l in lams]
            row += [repr(float(self.monneau[l][i])) for l in lams]
            w.writerow(row)
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    def to_dict(self) -> dict:
        return {
            "center": self.center.tolist(),
            "radii": self.radii.tolist(),
            "phi": self.phi.tolist(),
            "lambda_star": self.lam_star,
            "confidence": self.confidence,
            "weiss": {_fmt_lam(k): v.tolist() for k, v in self.weiss.items()},
            "monneau": {_fmt_lam(k): v.tolist() for k, v in self.monneau.items()},
        }


def _lookup_lam(table: dict, lam):
    if lam is None:
        if len(table) != 1:
            raise ParameterError("lambda required to select a track")
        return next(iter(table))
    for k in table:
        if abs(k - lam) < 1e-12:
            return k
    raise ParameterError(f"no track for lambda={lam}")


def dyadic_radii(r_min: float, r_max: float) -> np.ndarray:
    k = int(math.floor(math.log2(r_max / r_min) + 1e-9))
    return r_min * 2.0 ** np.arange(k + 1)


def profile(v: ScalarField, x0, r_min: float, r_max: float, lams: Sequence[float] = ()) -> FrequencyProfile:
    """Evaluate phi, W_lam and H_lam on dyadic radii r_min * 2^k <= r_max.

    The frequency at the vanishing scale is estimated by phi at r_min; the
    confidence is the spread of phi over radii within one decade of r_min.
    """
    if r_min < PROFILE_R_MIN_CELLS * v.h * (1 - 1e-12):
        raise ParameterError(f"r_min={r_min:.4g} below {PROFILE_R_MIN_CELLS}h")
    if not r_min < r_max:
        raise ParameterError("need r_min < r_max")
    x0 = np.asarray(x0, dtype=np.float64)
    radii = dyadic_radii(r_min, r_max)
    n = v.spec.n
    D = np.empty(radii.size)
    S = np.empty(radii.size)
    for i, r in enumerate(radii):
        D[i], S[i] = _energies(v, x0, r)
    phi = np.array([_phi(v, r, d, s) for r, d, s in zip(radii, D, S)])
    lams = tuple(float(l) for l in lams)
    wt = {l: np.array([_weiss(n, r, l, d, s) for r, d, s in zip(radii, D, S)]) for l in lams}
    we = {l: radii ** -(n - 2 + 2 * l) * D for l in lams}
    ht = {l: np.array([_monneau(n, r, l, s) for r, s in zip(radii, S)]) for l in lams}
    decade = phi[radii <= 10 * radii[0] * (1 + 1e-12)]
    return FrequencyProfile(
        center=x0, radii=radii, phi=phi, lams=lams, weiss=wt, monneau=ht, weiss_energy=we,
        lam_star=float(phi[0]), confidence=float(decade.max() - decade.min()),
    )


@dataclass(frozen=True)
class MonotoneVerdict:
    track: str
    lam: float | None
    monotone: bool
    worst_violation: float
    location: float | None
    tolerance: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def check_monotone(prof: FrequencyProfile, track: str = "phi", lam: float | None = None,
                   rel_tol: float = MONO_REL) -> MonotoneVerdict:
    """Nondecreasing-in-r test with tolerance ``rel_tol`` times the track scale.

    ``worst_violation`` is the most negative successive difference (0 if none);
    ``location`` is the larger radius of that pair.
    """
    if prof.radii.size < 4:
        raise ParameterError("monotonicity check needs at least 4 radii")
    vals = prof.track(track, lam)
    diffs = np.diff(vals)
    eps = rel_tol * prof.track_scale(track, lam)
    i = int(np.argmin(diffs))
    worst = float(min(diffs[i], 0.0))
    return MonotoneVerdict(
        track=track, lam=lam, monotone=bool(worst >= -eps), worst_violation=worst,
        location=float(prof.radii[i + 1]) if worst < 0 else None, tolerance=eps,
    )


def growth_ratios(prof: FrequencyProfile, lam: float) -> np.ndarray:
    """H_lam(r/2) / H_lam(r) along consecutive dyadic radii."""
    h = prof.track("H", lam)
    return h[:-1] / h[1:]


# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IdentityVerdict:
    holds: bool
    min_on_contact: float
    max_off_contact: float
    min_overall: float
    contact_vertices: int
    tolerance: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _check_p_plus(A: np.ndarray, tol: float = 1e-9):
    if A.shape[0] != A.shape[1] or not np.allclose(A, A.T, atol=tol):
        raise ParameterError("p must be given by a symmetric matrix")
    if abs(np.trace(A) - 1) > tol:
        raise ParameterError(f"trace of p's matrix is {np.trace(A):.6g}, expected 1")
    if np.linalg.eigvalsh(A).min() < -tol:
        raise ParameterError("p has a negative eigenvalue, not in the nonnegative class")


def w_laplace_identity(u: ScalarField, A, tol: float = 1e-6, variant: str = "no_sign",
                       c_u: float = 0.2, c_g: float = 1.0, layer_cells: float = 2.0) -> IdentityVerdict:
    """Check w Δw = p on {u = 0} and w Δw = 0 elsewhere, for w = u − p and p = ½<Ax,x>.

    Laplacians are 5/7-point stencils. A layer of ``layer_cells`` grid cells
    around the free boundary of ``variant``'s coincidence set and the outer
    ring of vertices are excluded.
    """
    A = np.asarray(A, dtype=np.float64)
    _check_p_plus(A)
    spec = u.spec
    p = sample(spec, lambda *xs: 0.5 * sum(A[i, j] * xs[i] * xs[j]
                                           for i in range(spec.n) for j in range(spec.n)))
    w = u.values - p.values
    wl = w * laplacian(w, spec.h)

    contact = coincidence_mask(u, "no_sign", c_u, c_g, scale=1.0)
    free = coincidence_mask(u, variant, c_u, c_g, scale=1.0)
    excluded = layer_mask(boundary_of(free) | boundary_of(contact), spec.h, layer_cells * spec.h)
    inner = np.zeros(spec.shape, dtype=bool)
    inner[(slice(1, -1),) * spec.n] = True
    on = contact & inner & ~excluded
    off = ~contact & inner & ~excluded

    min_on = float(wl[on].min()) if on.any() else float("inf")
    max_off = float(np.abs(wl[off]).max()) if off.any() else 0.0
    min_all = float(wl[inner & ~excluded].min())
    holds = min_on >= -tol and max_off <= tol
    return IdentityVerdict(holds, min_on, max_off, min_all, int(on.sum()), tol)


def verdicts_json(verdicts) -> str:
    return json.dumps([v.to_dict() for v in verdicts], indent=2)
