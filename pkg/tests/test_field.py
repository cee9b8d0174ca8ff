import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from conftest import random_cubic
from nosign.field import (
    FieldError,
    GridSpec,
    NonFiniteSampleError,
    OutOfDomainError,
    RadiusTooSmallError,
    ClassificationError,
    ScalarField,
    ball_dirichlet,
    check_class_P,
    coincidence_mask,
    gradient,
    interpolate,
    load_field,
    max_radius_negative,
    negative_density,
    sample,
    save_field,
    sphere_mean_sq,
)
from nosign.fixtures import cusp, homogeneous, radial_classical

G2 = GridSpec(2, 129)
G3 = GridSpec(3, 49)
G3_FINE = GridSpec(3, 97)


def test_gridspec_validation():
    for bad in [(4, 65), (2, 64), (2, 31), (1, 65)]:
        with pytest.raises(FieldError):
            GridSpec(*bad)
    g = GridSpec(2, 65)
    assert g.h == pytest.approx(1 / 32)
    assert g.coords[g.origin_index[0]] == 0.0


def test_sample_rejects_non_finite():
    with pytest.raises(NonFiniteSampleError, match="vertex"):
        sample(G2, lambda x, y: np.where(x > 0.5, np.nan, x))


def test_field_is_immutable():
    f = sample(G2, lambda x, y: x)
    with pytest.raises(ValueError):
        f.values[0, 0] = 1.0


def test_interpolate_quadratic_exact():
    f = sample(G2, lambda x, y: 0.5 * x * x)
    assert interpolate(f, [0.3, 0.4]) == pytest.approx(0.045, abs=1e-15)


@given(st.integers(0, 2**32 - 1), st.integers(2, 3))
def test_interpolation_reproduces_cubics(seed, n):
    rng = np.random.default_rng(seed)
    poly = random_cubic(rng, n)
    spec = G2 if n == 2 else G3
    f = sample(spec, poly)
    x = rng.uniform(-0.9, 0.9, size=(20, n))
    assert np.allclose(interpolate(f, x), poly(*x.T), atol=1e-11 * (1 + f.scale))
    g = gradient(f, x)
    exact = np.stack([poly.diff(i)(*x.T) for i in range(n)], -1)
    assert np.allclose(g, exact, atol=1e-10 * (1 + f.scale))


def test_gradient_of_quadratic():
    f = sample(G2, lambda x, y: 0.5 * x * x)
    pts = np.array([[0.1, 0.2], [-0.7, 0.3]])
    assert np.allclose(gradient(f, pts), np.c_[pts[:, 0], np.zeros(2)], atol=1e-13)


def test_out_of_domain():
    f = sample(G2, lambda x, y: x)
    with pytest.raises(OutOfDomainError):
        interpolate(f, [0.999, 0.0])


def test_refinement_second_order_floor():
    fn = lambda x, y: np.sin(2 * x) * np.exp(y)
    pts = np.random.default_rng(0).uniform(-0.8, 0.8, (200, 2))
    exact = fn(*pts.T)
    gexact = np.c_[2 * np.cos(2 * pts[:, 0]) * np.exp(pts[:, 1]), np.sin(2 * pts[:, 0]) * np.exp(pts[:, 1])]
    e, eg = [], []
    for N in (65, 129):
        f = sample(GridSpec(2, N), fn)
        e.append(np.abs(interpolate(f, pts) - exact).max())
        eg.append(np.abs(gradient(f, pts) - gexact).max())
    assert e[0] / e[1] >= 3.5 and eg[0] / eg[1] >= 3.5


def test_sphere_constant_is_circumference():
    one = sample(G2, lambda x, y: 1 + 0 * x)
    assert sphere_mean_sq(one, [0, 0], 0.5) == pytest.approx(math.pi, rel=1e-13)
    one3 = sample(G3, lambda x, y, z: 1 + 0 * x)
    assert sphere_mean_sq(one3, [0, 0, 0], 0.5) == pytest.approx(math.pi, rel=1e-12)


def test_ball_dirichlet_examples():
    spec = GridSpec(2, 257)
    v = sample(spec, homogeneous(3))
    assert ball_dirichlet(v, [0, 0], 0.5) == pytest.approx(3 * math.pi * 0.5**6, rel=1e-8)
    q = sample(spec, lambda x, y: 0.5 * x * x)
    assert ball_dirichlet(q, [0, 0], 0.5) == pytest.approx(math.pi * 0.5**4 / 4, rel=1e-10)
    assert ball_dirichlet(sample(spec, lambda x, y: 0 * x + 3), [0, 0], 0.5) == pytest.approx(0, abs=1e-20)


def test_sphere_integral_against_adaptive_quadrature():
    spec = GridSpec(2, 257)
    fn = lambda x, y: np.cos(3 * x) + x * y
    v = sample(spec, fn)
    x0, r = np.array([0.1, -0.2]), 0.4
    ref, _ = integrate.quad(lambda t: fn(x0[0] + r * np.cos(t), x0[1] + r * np.sin(t)) ** 2 * r, 0, 2 * np.pi)
    assert sphere_mean_sq(v, x0, r) == pytest.approx(ref, rel=1e-7)


@settings(max_examples=8)
@given(st.integers(0, 2**32 - 1), st.integers(2, 3), st.floats(0.35, 0.6))
def test_quadrature_exact_on_cubics(seed, n, r):
    rng = np.random.default_rng(seed)
    poly = random_cubic(rng, n)
    spec = G2 if n == 2 else G3_FINE
    assert r >= 16 * spec.h
    f = sample(spec, poly)
    s_ref = (poly * poly).sphere_integral(r)
    grad2 = sum((poly.diff(i) * poly.diff(i) for i in range(1, n)), poly.diff(0) * poly.diff(0))
    d_ref = grad2.ball_integral(r)
    assert sphere_mean_sq(f, np.zeros(n), r) == pytest.approx(s_ref, rel=1e-8)
    assert ball_dirichlet(f, np.zeros(n), r) == pytest.approx(d_ref, rel=1e-8)


def test_fibonacci_rule_is_seeded():
    f = sample(G3, lambda x, y, z: x * x + y)
    a = sphere_mean_sq(f, [0, 0, 0], 0.5, rule="fibonacci", seed=3)
    b = sphere_mean_sq(f, [0, 0, 0], 0.5, rule="fibonacci", seed=3)
    c = sphere_mean_sq(f, [0, 0, 0], 0.5, rule="fibonacci", seed=4)
    exact = sphere_mean_sq(f, [0, 0, 0], 0.5)
    assert a == b and a != c
    assert a == pytest.approx(exact, rel=5e-2)


def test_radius_too_small():
    f = sample(G2, lambda x, y: x)
    with pytest.raises(RadiusTooSmallError):
        sphere_mean_sq(f, [0, 0], 3 * G2.h)
    with pytest.raises(RadiusTooSmallError):
        negative_density(f, [0, 0], 2 * G2.h)


# -- negativity set --------------------------------------------------------

def test_negative_density_examples():
    spec = GridSpec(2, 257)
    assert negative_density(sample(spec, lambda x, y: x * x + y * y), [0, 0], 0.3) == 0.0
    rho = 0.3
    d = negative_density(sample(spec, lambda x, y: x), [0, 0], rho)
    assert abs(d - 0.5) <= 2 * spec.h / rho


def _monte_carlo_density(fn, rho, n=400_000, seed=0):
    rng = np.random.default_rng(seed)
    r = rho * np.sqrt(rng.random(n))
    t = 2 * np.pi * rng.random(n)
    return float(np.mean(fn(r * np.cos(t), r * np.sin(t)) < 0))


def test_cusp_density_matches_oracle_and_shrinks():
    spec = GridSpec(2, 513)
    c = cusp(3)
    u = sample(spec, c)
    dens = []
    for rho in (0.05, 0.1, 0.2):
        d = negative_density(u, [0, 0], rho)
        assert d == pytest.approx(_monte_carlo_density(c, rho), abs=2 * spec.h / rho)
        dens.append(d)
    assert dens[0] < dens[1] < dens[2]


def test_max_radius_negative_examples():
    spec = GridSpec(2, 257)
    h = spec.h
    assert max_radius_negative(sample(spec, lambda x, y: 1 + 0 * x), [0, 0], 0.5) == 0.0
    assert max_radius_negative(sample(spec, lambda x, y: -1 + 0 * x), [0, 0], 0.5) == pytest.approx(0.5, abs=h)
    assert max_radius_negative(sample(spec, lambda x, y: x), [0, 0], 0.5) == pytest.approx(0.25, abs=h)


def test_max_radius_zero_iff_no_cell():
    spec = GridSpec(2, 129)
    vals = np.ones(spec.shape)
    vals[64, 64] = -1.0  # a single negative vertex holds no full cell
    f = ScalarField(spec, vals)
    assert max_radius_negative(f, [0, 0], 0.3) == 0.0
    vals[64:66, 64:66] = -1.0
    assert max_radius_negative(ScalarField(spec, vals), [0, 0], 0.3) > 0.0


@given(st.integers(0, 2**32 - 1), st.floats(0.13, 0.5))
def test_negativity_measures_monotone_under_decrease(seed, r):
    rng = np.random.default_rng(seed)
    spec = GridSpec(2, 65)
    base = rng.normal(size=spec.shape)
    v2 = ScalarField(spec, base)
    v1 = ScalarField(spec, base - np.abs(rng.normal(size=spec.shape)) - 1e-3)
    assert negative_density(v1, [0, 0], r) >= negative_density(v2, [0, 0], r)
    m1 = max_radius_negative(v1, [0, 0], r)
    assert m1 >= max_radius_negative(v2, [0, 0], r)
    assert m1 <= r


# -- coincidence set and class P ---------------------------------------------

def test_coincidence_of_quadratic_is_its_zero_line():
    spec = GridSpec(2, 129)
    f = sample(spec, lambda x, y: 0.5 * x * x)
    lam = coincidence_mask(f, "no_sign", c_u=0.2, c_g=1.0, scale=1.0)
    assert lam.sum() == spec.N
    assert lam[spec.origin_index[0]].all()


def test_class_p_classical_member_with_zero_omega():
    spec = GridSpec(2, 257)
    u = sample(spec, radial_classical(0.5))
    rep = check_class_P(u, [0.5, 0.0], 0.1, 2.0, lambda r: 0.0, variant="classical")
    assert rep.member and max(rep.ratios) == 0.0 and rep.hessian_ok


def test_class_p_half_space_plumbing():
    spec = GridSpec(2, 257)
    v = sample(spec, lambda x, y: x)
    rep = check_class_P(v, [0, 0], 0.1, 1.0, lambda r: r, gamma_points=[[0.0, 0.0]])
    assert all(abs(q - 0.5) <= 2 * spec.h / r for q, r in zip(rep.ratios, rep.radii))
    assert not rep.member


def test_class_p_cusp_ratio_decays():
    spec = GridSpec(2, 513)
    u = sample(spec, cusp(3))
    rep = check_class_P(u, [0, 0], 0.05, 1e9, lambda r: r**0.25, gamma_points=[[0.0, 0.0]])
    assert rep.member
    assert rep.ratios[0] <= rep.ratios[-1]
    assert np.all(np.diff(rep.ratios) >= -1e-12)


def test_class_p_without_free_boundary():
    f = sample(G2, lambda x, y: 1 + x * x)
    with pytest.raises(ClassificationError):
        check_class_P(f, [0, 0], 0.1, 1, lambda r: 0)


# -- dump format -----------------------------------------------------------

def test_dump_round_trip(tmp_path):
    f = sample(G3, lambda x, y, z: x + 2 * y - z, "lin")
    header, data = save_field(f, tmp_path / "f")
    assert data.stat().st_size == G3.N**3 * 8
    g = load_field(header)
    assert np.array_equal(g.values, f.values) and g.label == "lin"


def test_dump_validation(tmp_path):
    f = sample(G2, lambda x, y: x)
    header, data = save_field(f, tmp_path / "f")
    data.write_bytes(data.read_bytes()[:-8])
    with pytest.raises(FieldError, match="bytes"):
        load_field(header)
    data.unlink()
    with pytest.raises(FileNotFoundError):
        load_field(header)
