"""Decay of sequences obeying M_{k+1} <= M_k - C1 M_k^{2n-1} + C2 M_k^{2n-2} k^-beta.

With beta = 1/(2(n-1)) such sequences started at M_{k0} <= M satisfy
M_k <= C0 k^-beta for k >= K0, once C0 is large enough to meet four
inequalities. This module finds the smallest such C0, iterates the
recursion with equality (the worst case) and checks the bound. It also
measures the empirical sequence M_k = sup_y (-inf_{B_{2^-k}(y)} D_ii u)
on grid fields.
"""
from __future__ import annotations

import csv
import io
import itertools
import logging
import math
from dataclasses import dataclass, asdict
from typing import Callable, Sequence

import numpy as np
from numba import njit

from .field import ScalarField

log = logging.getLogger(__name__)

DEFAULT_K_MAX = 1_000_000
# worst-case iteration beyond this many steps is not attempted
ITERATION_CAP = 250_000_000


class RecursionParamError(ValueError):
    pass


def beta(n: int) -> float:
    return 1.0 / (2 * (n - 1))


def inequalities(n: int, k0: int, M: float, C1: float, C2: float) -> list[Callable[[float], float]]:
    """Slack functions s_i(C0) = rhs - lhs; C0 is admissible iff all are >= 0."""
    b = beta(n)
    return [
        lambda c: 2 * C2 * (c / 2) ** (2 * n - 3) - max(k0, 1),
        lambda c: (2.0 ** (2 * n - 5) / C2) ** (1 / (2 * n - 2)) * c ** (1 / (2 * n - 2)) - M,
        lambda c: (2 * n - 2) * C1 * c ** (2 * n - 2) / 2.0 ** (2 * n) - 2,
        lambda c: C1 * c / (2.0 ** (2 * n) * C2) - 2.0 ** (b * (2 * n - 1)),
    ]


def _smallest_root(slack: Callable[[float], float], tol: float = 1e-6) -> float:
    """Smallest c > 0 with slack(c) >= 0 for an increasing slack, returned from above."""
    lo, hi = 0.0, 1.0
    while slack(hi) < 0:
        lo, hi = hi, 2 * hi
        if hi > 1e300:
            raise RecursionParamError("inequality not satisfiable")
    while hi - lo > 1e-3 * tol:
        mid = 0.5 * (lo + hi)
        if slack(mid) >= 0:
            hi = mid
        else:
            lo = mid
    return hi


@dataclass(frozen=True)
class RecursionParams:
    n: int
    k0: int
    M: float
    C1: float
    C2: float
    C0: float
    K0: int
    bounds: tuple
    slacks: tuple

    @property
    def beta(self) -> float:
        return beta(self.n)

    @property
    def binding(self) -> int:
        """1-based index of the inequality that fixes C0."""
        return int(np.argmax(self.bounds)) + 1

    def to_dict(self) -> dict:
        d = asdict(self)
        d["beta"] = self.beta
        d["binding"] = self.binding
        return d


def derive_constants(n: int, k0: int, M: float, C1: float, C2: float, tol: float = 1e-6) -> RecursionParams:
    """Smallest C0 (to ``tol``) meeting every inequality, found by bisection on each."""
    if n < 2 or k0 < 1 or min(M, C1, C2) <= 0:
        raise RecursionParamError("need n >= 2, k0 >= 1 and M, C1, C2 > 0")
    ineqs = inequalities(n, k0, M, C1, C2)
    bounds = tuple(_smallest_root(s, tol) for s in ineqs)
    C0 = max(bounds)
    slacks = tuple(float(s(C0)) for s in ineqs)
    K0 = math.ceil(2 * C2 * (C0 / 2) ** (2 * n - 3) * (1 - 1e-15))
    return RecursionParams(n, k0, M, C1, C2, C0, max(K0, k0), bounds, slacks)


# ---------------------------------------------------------------------------

@njit(cache=True)
def _step(m, k, C1, C2, p_hi, p_lo, b, M):
    lo = m ** p_lo
    nxt = m - C1 * lo * m + C2 * lo * k ** (-b)
    if nxt < 0.0:
        nxt = 0.0
    elif nxt > M:
        nxt = M
    return nxt


@njit(cache=True)
def _iterate(n, k0, M, C1, C2, k_max, out):
    b = 1.0 / (2 * (n - 1))
    m = M
    out[0] = m
    for i in range(1, k_max - k0 + 1):
        m = _step(m, float(k0 + i - 1), C1, C2, 2 * n - 1, 2 * n - 2, b, M)
        out[i] = m


@njit(cache=True)
def _iterate_verify(n, k0, M, C1, C2, C0, K0, k_max):
    """Stream the equality recursion and check M_k <= C0 k^-b for K0 <= k <= k_max.

    Returns (violations, first violating k or -1, min margin, min relative margin,
    monotonicity failures).
    """
    b = 1.0 / (2 * (n - 1))
    m = M
    violations = 0
    first = -1
    min_margin = np.inf
    min_rel = np.inf
    mono_fail = 0
    for k in range(k0, k_max + 1):
        if k >= K0:
            bound = C0 * k ** (-b)
            margin = bound - m
            if margin < 0.0:
                violations += 1
                if first < 0:
                    first = k
            if margin < min_margin:
                min_margin = margin
            if margin / bound < min_rel:
                min_rel = margin / bound
        if k == k_max:
            break
        nxt = _step(m, float(k), C1, C2, 2 * n - 1, 2 * n - 2, b, M)
        if m > 0.0 and C1 * m >= C2 * k ** (-b) and nxt > m:
            mono_fail += 1
        m = nxt
    return violations, first, min_margin, min_rel, mono_fail


def worst_case_sequence(params: RecursionParams, k_max: int, check_pre: bool = True) -> np.ndarray:
    """M_k for k = k0..k_max from the recursion taken with equality, clamped to [0, M]."""
    if check_pre and k_max < params.K0 + 100:
        raise RecursionParamError(f"k_max={k_max} must be at least K0 + 100 = {params.K0 + 100}")
    out = np.empty(k_max - params.k0 + 1)
    _iterate(params.n, params.k0, float(params.M), float(params.C1), float(params.C2), k_max, out)
    return out


@dataclass(frozen=True)
class BoundVerdict:
    holds: bool
    first_violation: int | None
    violations: int
    min_margin: float
    min_relative_margin: float
    window: tuple
    vacuous: bool
    monotonicity_failures: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


def verify_bound(sequence: np.ndarray, params: RecursionParams, k_start: int | None = None) -> BoundVerdict:
    """Elementwise M_k <= C0 k^-beta for k >= K0; ``sequence[0]`` is M at ``k_start`` (default k0)."""
    k_start = params.k0 if k_start is None else k_start
    seq = np.asarray(sequence, dtype=np.float64)
    k = np.arange(k_start, k_start + seq.size, dtype=np.float64)
    sel = k >= params.K0
    window = (int(params.K0), int(k_start + seq.size - 1))
    if not sel.any():
        return BoundVerdict(True, None, 0, math.inf, math.inf, window, True)
    bound = params.C0 * k[sel] ** -params.beta
    margin = bound - seq[sel]
    bad = np.flatnonzero(margin < 0)
    return BoundVerdict(
        holds=bad.size == 0,
        first_violation=int(k[sel][bad[0]]) if bad.size else None,
        violations=int(bad.size),
        min_margin=float(margin.min()),
        min_relative_margin=float((margin / bound).min()),
        window=window,
        vacuous=False,
    )


def iterate_and_verify(params: RecursionParams, k_max: int = DEFAULT_K_MAX) -> BoundVerdict:
    """Streaming worst-case check without materialising the sequence.

    An empty window (K0 > k_max) is reported as vacuous.
    """
    window = (int(params.K0), int(k_max))
    if params.K0 > k_max:
        return BoundVerdict(True, None, 0, math.inf, math.inf, window, True)
    v, first, mm, mr, mono = _iterate_verify(params.n, params.k0, float(params.M), float(params.C1),
                                             float(params.C2), float(params.C0), params.K0, k_max)
    return BoundVerdict(v == 0, None if first < 0 else int(first), int(v), float(mm), float(mr),
                        window, False, int(mono))


DEFAULT_GRID = {
    "n": (2, 3, 4),
    "C1": (0.5, 1.0, 2.0),
    "C2": (0.5, 1.0, 2.0),
    "M": (0.5, 1.0),
    "k0": (1, 5),
}


@dataclass
class SuiteRow:
    params: RecursionParams
    verdict: BoundVerdict
    extended: BoundVerdict | None = None


def run_suite(grid: dict | None = None, k_max: int = DEFAULT_K_MAX, extend: int = 0,
              cap: int = ITERATION_CAP) -> list[SuiteRow]:
    """Verify the bound on every point of the parameter grid.

    With ``extend > 0``, points whose window [K0, k_max] is empty are also
    iterated to K0 + extend when that stays below ``cap`` steps.
    """
    grid = {**DEFAULT_GRID, **(grid or {})}
    rows = []
    for n, C1, C2, M, k0 in itertools.product(grid["n"], grid["C1"], grid["C2"], grid["M"], grid["k0"]):
        p = derive_constants(int(n), int(k0), float(M), float(C1), float(C2))
        v = iterate_and_verify(p, k_max)
        ext = None
        if extend and v.vacuous and p.K0 + extend <= cap:
            ext = iterate_and_verify(p, p.K0 + extend)
        rows.append(SuiteRow(p, v, ext))
    return rows


def suite_csv(rows: Sequence[SuiteRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "k0", "M", "C1", "C2", "C0", "K0", "binding", "holds", "vacuous", "first_violation",
                "violations", "min_margin", "min_relative_margin", "extended_to", "extended_holds"])
    for r in rows:
        p, v, e = r.params, r.verdict, r.extended
        w.writerow([p.n, p.k0, p.M, p.C1, p.C2, repr(p.C0), p.K0, p.binding, v.holds, v.vacuous,
                    "" if v.first_violation is None else v.first_violation, v.violations,
                    repr(v.min_margin), repr(v.min_relative_margin),
                    "" if e is None else e.window[1], "" if e is None else e.holds])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# empirical sequence on grid fields

@dataclass
class MeasuredSequence:
    ks: list
    values: list
    rate: float | None
    constant: float | None
    truncated: bool
    nonincreasing: bool

    def to_dict(self) -> dict:
        return asdict(self)


def second_difference(values: np.ndarray, h: float, axis: int) -> np.ndarray:
    """D_ii by the centred three-point stencil; +inf on the two boundary layers."""
    out = np.full(values.shape, np.inf)
    sl = [slice(None)] * values.ndim
    c, lo, hi = list(sl), list(sl), list(sl)
    c[axis], lo[axis], hi[axis] = slice(1, -1), slice(0, -2), slice(2, None)
    out[tuple(c)] = (values[tuple(lo)] - 2 * values[tuple(c)] + values[tuple(hi)]) / (h * h)
    return out


def measure_Mk(u: ScalarField, points: np.ndarray, axis: int, ks: Sequence[int]) -> MeasuredSequence:
    """M_k = sup over y in ``points`` of (−inf over B_{2^-k}(y) of D_ii u), clamped at 0.

    Values of k whose radius 2^-k is below 8h are dropped with a warning.
    The rate fit log M_k ≈ log C − rate·log k uses the positive entries only.
    """
    spec = u.spec
    h = spec.h
    ks = [int(k) for k in ks]
    keep = [k for k in ks if 2.0**-k >= 8 * h * (1 - 1e-12)]
    truncated = len(keep) < len(ks)
    if truncated:
        log.warning("k range truncated to %s: radii below 8h are not resolved", keep)
    d2 = second_difference(u.values, h, axis)
    coords = spec.coords
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    vals = []
    for k in keep:
        r = 2.0**-k
        worst = 0.0
        for y in pts:
            lo = np.searchsorted(coords, y - r - 1e-12)
            hi = np.searchsorted(coords, y + r + 1e-12, side="right")
            box = tuple(slice(int(a), int(b)) for a, b in zip(lo, hi))
            sub = [coords[s] - yi for s, yi in zip(box, y)]
            dist2 = sum(np.meshgrid(*[g * g for g in sub], indexing="ij"))
            local = d2[box][dist2 <= r * r + 1e-12]
            if local.size:
                worst = max(worst, -float(local.min()))
        vals.append(worst)
    pos = [(k, v) for k, v in zip(keep, vals) if v > 0]
    rate = const = None
    if len(pos) >= 2:
        slope, logc = np.polyfit(np.log([k for k, _ in pos]), np.log([v for _, v in pos]), 1)
        rate, const = float(-slope), float(math.exp(logc))
    nonincreasing = bool(np.all(np.diff(vals) <= 1e-12 * max(1.0, max(vals, default=0.0))))
    return MeasuredSequence(keep, vals, rate, const, truncated, nonincreasing)
