import math

import numpy as np
import pytest
import sympy as sp
from scipy.integrate import quad, trapezoid

from beamreg.mollify import (LOG, POLYNOMIAL, SLOW_SCALE, CoefficientDescriptor,
                             MollifyError, RegularizedField, axial_force_field,
                             density_field, epsilon_schedule, load_field,
                             make_mollifier, mollify_profile, spatial_field,
                             stiffness_field)


def test_mollifier_unit_mass_against_quad_oracle():
    m = make_mollifier()
    mass, err = quad(lambda y: m.profile(np.array([y]))[0], -1, 1, limit=200)
    assert abs(mass - 1.0) <= 1e-10
    # normalization constant against an independent adaptive-quadrature oracle
    raw, _ = quad(lambda y: math.exp(-1.0 / (1.0 - y * y)) if abs(y) < 1 else 0.0,
                  -1, 1, limit=200)
    assert m.normalization == pytest.approx(1.0 / raw, abs=1e-8)
    assert m.peak == pytest.approx(math.exp(-1.0) / raw, abs=1e-8)


def test_mollifier_even_nonnegative_compact():
    m = make_mollifier()
    y = np.linspace(-1.5, 1.5, 601)
    vals = m.profile(y)
    assert np.allclose(vals, vals[::-1])
    assert np.all(vals >= 0.0)
    assert np.all(vals[np.abs(y) >= 1.0] == 0.0)
    assert m.profile(np.array([-1.0, 1.0])).tolist() == [0.0, 0.0]


def test_mollifier_derivatives_against_sympy():
    y = sp.symbols("y")
    expr = sp.exp(-1 / (1 - y**2))
    m = make_mollifier()
    pts = np.array([-0.83, -0.4, 0.0, 0.27, 0.66, 0.95])
    for order in range(1, 5):
        ref = sp.lambdify(y, sp.diff(expr, y, order), "numpy")(pts)
        got = m.profile(pts, order) / m.normalization
        assert np.allclose(got, ref, rtol=1e-10, atol=1e-12)


def test_mollifier_cdf_monotone_bounded():
    m = make_mollifier()
    y = np.linspace(-1.2, 1.2, 1001)
    c = m.cdf(y)
    assert np.all(np.diff(c) >= 0.0)
    assert c[0] == 0.0 and c[-1] == 1.0
    assert m.cdf(0.0) == pytest.approx(0.5, abs=1e-12)


def test_scale_rules_positive_decreasing():
    for rule in (POLYNOMIAL, LOG, SLOW_SCALE):
        widths = [rule.width(e) for e in epsilon_schedule(1, 12)]
        assert all(w > 0 for w in widths)
        assert all(a > b for a, b in zip(widths, widths[1:]))
    assert LOG.width(0.5) == pytest.approx(1.0 / math.log(2.0))


def test_epsilon_schedule():
    assert epsilon_schedule(1, 3) == [0.5, 0.25, 0.125]
    assert epsilon_schedule(4, 4) == [0.0625]
    s = epsilon_schedule(1, 12)
    assert len(s) == 12 and all(a > b for a, b in zip(s, s[1:]))
    with pytest.raises(MollifyError):
        epsilon_schedule(3, 2)


def test_stiffness_midpoint_and_support():
    f = stiffness_field(1.0, 2.0, 0.4, 0.125, POLYNOMIAL)
    w = POLYNOMIAL.width(0.125)
    assert f.value(np.array([0.4]))[0] == pytest.approx(1.5, abs=1e-12)
    x = np.array([0.0, 0.4 - w, 0.4 + w, 1.0])
    assert np.allclose(f.value(x), [1.0, 1.0, 2.0, 2.0])


def test_stiffness_monotone_against_convolution_oracle():
    eps = 0.25
    w = POLYNOMIAL.width(eps)
    f = stiffness_field(1.0, 2.0, 0.5, eps, POLYNOMIAL)
    xs = np.linspace(0.5 - w, 0.5 + w, 101)
    vals = f.value(xs)
    assert np.all(np.diff(vals) >= 0.0)
    # numerical convolution oracle: c(x) = 1 + int_{-1}^{(x-x0)/w} phi
    m = make_mollifier()
    for x in (0.38, 0.5, 0.61):
        ref, _ = quad(lambda y: m.profile(np.array([y]))[0],
                      -1.0, (x - 0.5) / w, limit=200)
        assert f.value(np.array([x]))[0] == pytest.approx(1.0 + ref, abs=1e-9)


def test_stiffness_bounds_over_schedule():
    for eps in epsilon_schedule(2, 10):
        f = stiffness_field(1.0, 3.0, 0.5, eps, POLYNOMIAL)
        vals = f.value(np.linspace(0.0, 1.0, 2000))
        assert np.all(vals >= 1.0 - 1e-12) and np.all(vals <= 3.0 + 1e-12)


def test_stiffness_window_rejection():
    with pytest.raises(MollifyError):
        stiffness_field(1.0, 2.0, 0.1, 0.5, POLYNOMIAL)  # window [-0.4, 0.6]
    # eps-independent constant stiffness never hits the window check
    stiffness_field(2.0, 2.0, 0.1, 0.5, POLYNOMIAL)


def test_density_positivity_check():
    with pytest.raises(MollifyError):
        density_field(1.0, -1.5, 0.5, 0.125)
    f = density_field(1.0, 0.5, 0.5, 0.125)
    assert f.lower == 1.0 and f.upper == 1.5


def test_load_field_mass_and_support():
    eps = 1.0 / 16
    w = POLYNOMIAL.width(eps)
    g = load_field(2.5, 0.5, eps, POLYNOMIAL)
    xs = np.linspace(0.0, 1.0, 20001)
    mass = trapezoid(g.value(xs), xs)
    assert mass == pytest.approx(2.5, abs=1e-9)
    out = np.abs(xs - 0.5) >= w
    assert np.all(g.value(xs)[out] == 0.0)
    m = make_mollifier()
    assert g.value(np.array([0.5]))[0] == pytest.approx(2.5 * m.peak / w, rel=1e-12)
    assert g.sup_norm == pytest.approx(2.5 * m.peak / w, rel=1e-12)


def test_load_field_window_rejection():
    with pytest.raises(MollifyError):
        load_field(1.0, 0.05, 0.25, POLYNOMIAL)


def test_axial_constant_sup():
    r = density_field(1.0, 0.0, 0.5, 0.25)
    b = axial_force_field(3.0, 0.0, "sinusoid", r, 0.25, POLYNOMIAL, T=1.0,
                          omega=2.0)
    x = np.linspace(0, 1, 11)
    assert np.allclose(b.value(x, 0.3), 3.0)
    assert b.sup_norm == 3.0
    assert not b.time_dependent


def test_axial_sinusoid_bounded_sup():
    r = density_field(1.0, 0.5, 0.5, 0.125)
    b = axial_force_field(1.0, 0.75, "sinusoid", r, 0.125, POLYNOMIAL, T=2.0,
                          omega=5.0)
    assert b.sup_norm <= 1.0 + 0.75 + 1e-12
    ts = np.linspace(0, 2.0, 50)
    xs = np.linspace(0, 1, 50)
    sampled = max(np.max(np.abs(b.value(xs, t))) for t in ts)
    assert sampled <= b.sup_norm + 1e-12


def test_axial_dirac_requires_log_type():
    r = density_field(1.0, 0.0, 0.5, 0.125)
    with pytest.raises(MollifyError, match="log-type"):
        axial_force_field(1.0, 1.0, "dirac", r, 0.125, POLYNOMIAL, T=2.0, t0=1.0)


def test_axial_dirac_log_sup_bound():
    # sup|b_eps| <= |P0| + P1 * phi(0) * log(1/eps) for eps <= 1/e
    m = make_mollifier()
    r = density_field(1.0, 0.0, 0.5, 0.125)
    for eps in epsilon_schedule(2, 10):
        b = axial_force_field(1.0, 2.0, "dirac", r, eps, LOG, T=3.0, t0=1.5)
        bound = 1.0 + 2.0 * m.peak * math.log(1.0 / eps)
        assert b.sup_norm <= bound + 1e-12
        # peak reached inside the domain: sampled max approaches sup
        ts = np.linspace(0, 3.0, 4001)
        sampled = max(abs(b.value(np.array([0.5]), t)[0]) for t in ts)
        assert sampled <= b.sup_norm + 1e-12
        assert sampled >= 0.98 * b.sup_norm


def test_axial_dirac_log_type_ratio_bounded():
    r = density_field(1.0, 0.0, 0.5, 0.125)
    ratios = []
    for eps in epsilon_schedule(2, 10):
        b = axial_force_field(1.0, 1.0, "dirac", r, eps, LOG, T=3.0, t0=1.5)
        ratios.append(b.sup_norm / math.log(1.0 / eps))
    assert max(ratios) <= 2.0 * ratios[0]


def test_axial_dirac_slow_scale_sup():
    r = density_field(1.0, 0.0, 0.5, 0.125)
    sched = epsilon_schedule(1, 10)
    sups = []
    for eps in sched:
        b = axial_force_field(1.0, 1.0, "dirac", r, eps, SLOW_SCALE, T=2.0, t0=1.0)
        sups.append(b.sup_norm)
    for p in range(1, 6):
        seq = [s**p * e for s, e in zip(sups, sched)]
        assert seq[-1] <= seq[-2] <= seq[-3]  # decreasing tail


def test_axial_time_derivatives_match_finite_differences():
    r = density_field(1.0, 0.4, 0.5, 0.125)
    b = axial_force_field(1.0, 1.5, "dirac", r, 0.125, LOG, T=3.0, t0=1.5)
    x = np.array([0.3, 0.5, 0.8])
    t = 1.3
    dt = 1e-5
    fd1 = (b.value(x, t + dt) - b.value(x, t - dt)) / (2 * dt)
    assert np.allclose(b.dt_value(x, t, 1), fd1, rtol=1e-5, atol=1e-7)
    fd2 = (b.value(x, t + dt) - 2 * b.value(x, t) + b.value(x, t - dt)) / dt**2
    assert np.allclose(b.dt_value(x, t, 2), fd2, rtol=1e-4, atol=1e-4)
    bs = axial_force_field(0.5, 1.0, "sinusoid", r, 0.125, POLYNOMIAL, T=3.0,
                           omega=3.0)
    fd1 = (bs.value(x, t + dt) - bs.value(x, t - dt)) / (2 * dt)
    assert np.allclose(bs.dt_value(x, t, 1), fd1, rtol=1e-6)


def test_axial_impulse_window_straddles_zero():
    r = density_field(1.0, 0.0, 0.5, 0.125)
    with pytest.raises(MollifyError, match="straddles"):
        axial_force_field(1.0, 1.0, "dirac", r, 0.5, LOG, T=3.0, t0=1.0)


def test_smooth_descriptor_second_order_consistency():
    # |c_eps - c|_inf = O(w^2) for the even kernel: ratios ~ 4 under eps halving
    desc = CoefficientDescriptor(smooth_part=lambda x: np.sin(3.0 * x) + 2.0)
    xs = np.linspace(0.0, 1.0, 501)
    errs = []
    for eps in [0.25, 0.125, 0.0625, 0.03125]:
        f = spatial_field(desc, eps, POLYNOMIAL)
        errs.append(np.max(np.abs(f.value(xs) - (np.sin(3.0 * xs) + 2.0))))
    for a, b in zip(errs, errs[1:]):
        assert 3.0 <= a / b <= 5.0


def test_constant_smooth_part_mollifies_exactly():
    desc = CoefficientDescriptor(smooth_part=lambda x: np.full(np.shape(x), 7.0))
    f = spatial_field(desc, 0.25, POLYNOMIAL)
    assert np.allclose(f.value(np.linspace(0, 1, 100)), 7.0, atol=1e-14)


def test_mollify_profile_second_order_and_derivative():
    f = lambda x: np.sin(np.pi * x) ** 2
    df = lambda x: np.pi * np.sin(2 * np.pi * x)
    xs = np.linspace(0, 1, 301)
    errs = []
    for eps in [0.125, 0.0625]:
        fe, dfe = mollify_profile(f, df, eps, POLYNOMIAL)
        errs.append(np.max(np.abs(fe(xs) - f(xs))))
        fd = (fe(xs + 1e-6) - fe(xs - 1e-6)) / 2e-6
        assert np.allclose(dfe(xs), fd, atol=1e-7)
    assert 3.0 <= errs[0] / errs[1] <= 5.0


def test_mollify_profile_compatibility_restored():
    # convolution leaks O(w^2) boundary values; the representative
    # correction must put them back to exactly zero
    f = lambda x: np.sin(np.pi * x) ** 2
    df = lambda x: np.pi * np.sin(2 * np.pi * x)
    fe, dfe = mollify_profile(f, df, 0.25, POLYNOMIAL)
    for x in (0.0, 1.0):
        assert abs(float(fe(x))) <= 1e-14
        assert abs(float(dfe(x))) <= 1e-14
    raw_fe, _ = mollify_profile(f, df, 0.25, POLYNOMIAL, compatible=False)
    assert abs(float(raw_fe(0.0))) > 1e-5


def test_mollify_profile_exact_on_polynomials():
    # for polynomial profiles the boundary correction cancels the kernel
    # moments exactly: the mollified representative equals the profile
    f = lambda x: x**2 * (1 - x) ** 2
    df = lambda x: 2 * x - 6 * x**2 + 4 * x**3
    fe, dfe = mollify_profile(f, df, 0.125, POLYNOMIAL)
    xs = np.linspace(0, 1, 101)
    assert np.max(np.abs(fe(xs) - f(xs))) <= 1e-14
    assert np.max(np.abs(dfe(xs) - df(xs))) <= 1e-13
