import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nosign.fixtures import (
    FixtureError,
    Polynomial,
    complex_power,
    cusp,
    homogeneous,
    perturbed,
    quadratic_form,
    radial_classical,
    resolve,
    structured,
)


def fd_laplacian(fn, pts, h=1e-4):
    """Central-difference Laplacian, used as an oracle independent of the closed forms."""
    pts = np.atleast_2d(np.asarray(pts, dtype=np.float64))
    out = -2 * pts.shape[1] * fn(*pts.T)
    for i in range(pts.shape[1]):
        e = np.zeros(pts.shape[1])
        e[i] = h
        out = out + fn(*(pts + e).T) + fn(*(pts - e).T)
    return out / h**2


def off_slit_points(rng, count=50, r_lo=0.1, r_hi=0.9, margin=0.2):
    r = rng.uniform(r_lo, r_hi, count)
    t = rng.uniform(margin, 2 * np.pi - margin, count)
    return np.c_[r * np.cos(t), r * np.sin(t)]


@pytest.mark.parametrize("mu", [3, 7, 11])
def test_cusp_solves_equation_off_slit(mu, rng):
    c = cusp(mu)
    pts = off_slit_points(rng)
    assert np.allclose(fd_laplacian(c, pts), 1.0, atol=1e-4)
    assert c.lam_star == 1 + mu / 2
    assert c.metadata["m"] == 1 and c.metadata["sigma_plus"]


def test_cusp_negative_along_slit_positive_across():
    c = cusp(3)
    # the correction is even about the slit and dominates ½x2² close to it
    assert np.all(c(np.array([0.3, 0.3]), np.array([1e-3, -1e-3])) < 0)
    assert c(0.0, 0.3) > 0 and c(0.0, -0.3) > 0


def test_cusp_rejects_bad_mu():
    for mu in (1, 4, 5, -1):
        with pytest.raises(FixtureError, match="4k\\+3"):
            cusp(mu)
    with pytest.raises(FixtureError):
        cusp(3, truncation=3)


def test_cusp_truncation_one_is_blowup():
    c = cusp(3, truncation=1)
    assert c(np.array(0.4), np.array(0.2)) == pytest.approx(0.02)


def test_radial_classical_equation_and_regularity(rng):
    f = radial_classical(0.5)
    r = rng.uniform(0.55, 0.95, 40)
    t = rng.uniform(0, 2 * np.pi, 40)
    pts = np.c_[r * np.cos(t), r * np.sin(t)]
    assert np.allclose(fd_laplacian(f, pts), 1.0, atol=1e-4)
    assert np.all(f(pts[:, 0], pts[:, 1]) > 0)
    inside = f(0.3 * np.cos(t), 0.3 * np.sin(t))
    assert np.all(inside == 0)
    # C^1 across r = R: value and radial slope vanish there
    eps = 1e-6
    assert f.radial(0.5 + eps) == pytest.approx(0, abs=1e-11)
    assert (f.radial(0.5 + eps) - f.radial(0.5)) / eps == pytest.approx(0, abs=1e-5)


def test_radial_hessian_against_finite_differences(rng):
    f = radial_classical(0.4)
    pts = off_slit_points(rng, 10, 0.5, 0.9, 0.0)
    H = f.hessian(pts[:, 0], pts[:, 1])
    h = 1e-4
    for k, (a, b) in enumerate(pts):
        fd = np.empty((2, 2))
        for i in range(2):
            for j in range(2):
                ei = np.eye(2)[i] * h
                ej = np.eye(2)[j] * h
                p = np.array([a, b])
                fd[i, j] = (f(*(p + ei + ej)) - f(*(p + ei - ej)) - f(*(p - ei + ej)) + f(*(p - ei - ej))) / (4 * h * h)
        assert np.allclose(H[k], fd, atol=1e-5)
    assert np.allclose(np.trace(H, axis1=-2, axis2=-1), 1.0)


def test_radial_rejects_bad_radius():
    for R in (0, 1, -0.2):
        with pytest.raises(FixtureError):
            radial_classical(R)


@given(st.sampled_from([1.5, 2.5, 3.5, 2.0, 3.0, 4.0]), st.sampled_from(["sin", "cos"]))
def test_homogeneous_is_harmonic_and_homogeneous(lam, profile):
    v = homogeneous(lam, profile)
    pts = off_slit_points(np.random.default_rng(0), 20, 0.2, 0.8)
    assert np.allclose(fd_laplacian(v, pts), 0.0, atol=2e-4)
    assert np.allclose(v(*(0.5 * pts).T), 0.5**lam * v(*pts.T), rtol=1e-12, atol=1e-14)


def test_homogeneous_gradient_matches_differences(rng):
    v = homogeneous(2.5)
    pts = off_slit_points(rng, 10, 0.2, 0.8)
    g = np.stack(v.gradient(pts[:, 0], pts[:, 1]), -1)
    h = 1e-6
    fd = np.stack([(v(*(pts + h * e).T) - v(*(pts - h * e).T)) / (2 * h) for e in np.eye(2)], -1)
    assert np.allclose(g, fd, atol=1e-6)


def test_homogeneous_parity():
    assert homogeneous(2.5, "sin").realized_parity == "even"
    assert homogeneous(2.5, "cos").realized_parity == "odd"
    assert homogeneous(3, "sin").realized_parity == "odd"
    assert homogeneous(1.25, "sin").realized_parity is None
    with pytest.raises(FixtureError, match="not odd"):
        homogeneous(2.5, "sin", parity="odd")
    # even about the cut: values mirror across the x1-axis
    v = homogeneous(2.5, "sin")
    assert v(0.3, 0.2) == pytest.approx(v(0.3, -0.2), rel=1e-12)


def test_homogeneous_validation():
    with pytest.raises(FixtureError):
        homogeneous(0)
    with pytest.raises(FixtureError):
        homogeneous(2, "tan")


@pytest.mark.parametrize("d", [3, 4, 5, 6])
def test_complex_power_is_harmonic(d):
    for part in ("re", "im"):
        p = complex_power(d, part)
        assert p.degree == d and p.is_homogeneous()
        assert p.laplacian().coefficient_norm() == 0
        z = 0.3 + 0.7j
        ref = (z**d).real if part == "re" else (z**d).imag
        assert p(0.3, 0.7) == pytest.approx(ref, rel=1e-12)


def test_quadratic_form_values():
    A = np.array([[0.5, 0.2], [0.2, 0.5]])
    q = quadratic_form(A)
    x = np.array([0.3, -0.4])
    assert q(*x) == pytest.approx(0.5 * x @ A @ x)
    assert q.laplacian().terms == {(0, 0): 1.0}


def test_perturbed_solves_equation(rng):
    u = perturbed([[1, 0], [0, 0]], complex_power(3, "im"), 0.01)
    pts = rng.uniform(-0.8, 0.8, (30, 2))
    assert np.allclose(fd_laplacian(u, pts), 1.0, atol=1e-5)
    assert u.metadata["lambda_star"] == 3 and u.metadata["m"] == 1


def test_perturbed_validation():
    h = complex_power(3)
    with pytest.raises(FixtureError, match="trace|tr A"):
        perturbed([[1, 0], [0, 1]], h, 0.1)
    with pytest.raises(FixtureError, match="harmonic"):
        perturbed([[1, 0], [0, 0]], Polynomial(2, {(3, 0): 1.0}), 0.1)
    with pytest.raises(FixtureError, match="degree"):
        perturbed([[1, 0], [0, 0]], complex_power(2), 0.1)
    assert perturbed([[1, 0], [0, 0]], h, 0.0).excluded


def test_structured_quadratic_blocks():
    s = structured([0.6, 0.4], m=1, t=2.0, eps=0.0)
    assert s.n == 3
    assert np.allclose(s.q_matrix, np.diag([2, 2, -4]))
    assert np.trace(s.q_matrix) == pytest.approx(0)
    assert np.trace(s.p_matrix) == pytest.approx(1)
    R, _ = np.linalg.qr(np.random.default_rng(1).normal(size=(3, 3)))
    r = structured([0.6, 0.4], 1, 2.0, 0.0, R)
    assert np.allclose(np.linalg.eigvalsh(r.q_matrix), [-4, 2, 2])
    with pytest.raises(FixtureError):
        structured([0.5, 0.4], 1)


def test_resolve_catalog():
    assert resolve("cusp:mu=7").mu == 7
    assert resolve("radial:R=0.25").R == 0.25
    assert resolve("homogeneous:lam=5/2").lam == 2.5
    assert resolve("perturbed:d=4").h.degree == 4
    s = resolve("structured:mu=0.6;0.4,m=1,eps=0.02")
    assert s.mus == (0.6, 0.4) and s.eps == 0.02
    for bad in ("blob:x=1", "cusp:mu"):
        with pytest.raises(FixtureError):
            resolve(bad)
    assert math.isclose(resolve("perturbed:d=3").eps, 0.01)
