import numpy as np
import pytest
import sympy as sp

from beamreg.fem import (CoefVector, FemError, build_space, evaluate,
                         interpolate, norm, seminorm, zero_vector)

X = sp.symbols("x")
POLY = X**2 * (1 - X) ** 2
DPOLY = sp.diff(POLY, X)


def poly(x):
    return x**2 * (1.0 - x) ** 2


def dpoly(x):
    return 2.0 * x - 6.0 * x**2 + 4.0 * x**3


def test_build_space_dof_counts():
    assert build_space(4, 4).n_dofs == 6
    assert build_space(2, 4).n_dofs == 2
    assert build_space(64, 5).n_dofs == 126
    assert build_space(4, 4).h == 0.25


def test_build_space_rejects_degenerate():
    with pytest.raises(FemError):
        build_space(1, 4)
    with pytest.raises(FemError):
        build_space(8, 3)


def test_interpolate_matches_values():
    space = build_space(4)
    u = interpolate(space, poly, dpoly)
    assert evaluate(space, u, 0.5, 0) == pytest.approx(0.0625, abs=1e-14)
    z = interpolate(space, lambda x: 0.0, lambda x: 0.0)
    assert np.all(z.values == 0.0)


def test_interpolate_smooth_function_fourth_order():
    space = build_space(32)
    f = lambda x: np.sin(np.pi * x) ** 2
    df = lambda x: np.pi * np.sin(2 * np.pi * x)
    u = interpolate(space, f, df)
    assert evaluate(space, u, 0.5, 0) == pytest.approx(1.0, abs=1e-6)


def test_eval_boundary_exact_zero():
    space = build_space(8)
    rng = np.random.default_rng(0)
    u = CoefVector(space, rng.standard_normal(space.n_dofs))
    for x in (0.0, 1.0):
        assert evaluate(space, u, x, 0) == 0.0
        assert evaluate(space, u, x, 1) == 0.0


def test_eval_second_derivative_against_analytic():
    # interpolation second derivatives converge at O(h^2); n=2000 brings the
    # analytic value 2 - 12x + 12x^2 = -1 at x=0.5 within 1e-6
    space = build_space(2000)
    u = interpolate(space, poly, dpoly)
    assert evaluate(space, u, 0.5, 2) == pytest.approx(-1.0, abs=1e-6)


def test_eval_rejects_higher_derivatives():
    space = build_space(4)
    u = zero_vector(space)
    with pytest.raises(FemError):
        evaluate(space, u, 0.5, 3)


def test_norm_zero_vector():
    space = build_space(8)
    z = zero_vector(space)
    for kind in ("L2", "H1", "H2"):
        assert norm(space, z, kind) == 0.0


def test_l2_norm_of_polynomial_exact():
    # independent oracle: exact symbolic integral of x^4 (1-x)^4
    exact = float(sp.sqrt(sp.integrate(POLY**2, (X, 0, 1))))
    assert exact == pytest.approx(1.0 / np.sqrt(630.0), rel=1e-12)
    # the interpolant differs from the quartic by O(h^4); n = 128 puts the
    # quadrature norm within 1e-9 of the exact 1/sqrt(630)
    space = build_space(128)
    u = interpolate(space, poly, dpoly)
    assert norm(space, u, "L2") == pytest.approx(exact, abs=1e-9)


def test_norms_of_interpolant_match_symbolic_piecewise_oracle():
    # freeze the quadrature norms against per-element symbolic integration
    # of the actual piecewise cubic
    space = build_space(4)
    u = interpolate(space, poly, dpoly)
    exact = {0: sp.Integer(0), 1: sp.Integer(0), 2: sp.Integer(0)}
    h = sp.Rational(1, 4)
    for e in range(4):
        xl = e * h
        v0, s0 = (poly(float(xl)), dpoly(float(xl))) if e > 0 else (0.0, 0.0)
        v1, s1 = (poly(float(xl + h)), dpoly(float(xl + h))) if e < 3 else (0.0, 0.0)
        xi = (X - xl) / h
        cubic = (v0 * (1 - 3 * xi**2 + 2 * xi**3)
                 + s0 * h * (xi - 2 * xi**2 + xi**3)
                 + v1 * (3 * xi**2 - 2 * xi**3)
                 + s1 * h * (xi**3 - xi**2))
        for k in range(3):
            exact[k] += sp.integrate(sp.diff(cubic, X, k) ** 2, (X, xl, xl + h))
    for k in range(3):
        assert seminorm(space, u, k) == pytest.approx(
            float(sp.sqrt(exact[k])), rel=1e-12)


def test_norm_nesting():
    space = build_space(16)
    rng = np.random.default_rng(1)
    for _ in range(50):
        u = CoefVector(space, rng.standard_normal(space.n_dofs))
        l2, h1, h2 = (norm(space, u, k) for k in ("L2", "H1", "H2"))
        assert l2 <= h1 <= h2


def test_interpolation_inequality_random_vectors():
    # |u'|^2 <= |u| * |u''| holds exactly on the clamped space (integration
    # by parts with zero boundary terms); exercised on 1000 random vectors
    space = build_space(12)
    rng = np.random.default_rng(42)
    for _ in range(1000):
        u = CoefVector(space, rng.standard_normal(space.n_dofs))
        s0, s1, s2 = (seminorm(space, u, k) for k in range(3))
        assert s1**2 <= s0 * s2 * (1.0 + 1e-10) + 1e-300


def test_ehrling_instance_random_vectors():
    # |u|_1^2 <= 1/2 |u|_2^2 + 5/8 |u|^2 with the Young-inequality constant
    space = build_space(10)
    rng = np.random.default_rng(7)
    for _ in range(1000):
        u = CoefVector(space, rng.standard_normal(space.n_dofs))
        h1 = norm(space, u, "H1") ** 2
        h2 = norm(space, u, "H2") ** 2
        l2 = norm(space, u, "L2") ** 2
        assert h1 <= (0.5 * h2 + 0.625 * l2) * (1.0 + 1e-10)


def test_eval_right_limit_convention():
    space = build_space(4)
    rng = np.random.default_rng(3)
    u = CoefVector(space, rng.standard_normal(space.n_dofs))
    # second derivative jumps across nodes; value at a node must equal the
    # limit from the right (and from the left at x = 1)
    x_node = 0.5
    right = evaluate(space, u, x_node + 1e-11, 2)
    assert evaluate(space, u, x_node, 2) == pytest.approx(right, rel=1e-6)
    left = evaluate(space, u, 1.0 - 1e-11, 2)
    assert evaluate(space, u, 1.0, 2) == pytest.approx(left, rel=1e-6)


def test_coef_vector_arithmetic():
    space = build_space(4)
    rng = np.random.default_rng(5)
    a = CoefVector(space, rng.standard_normal(space.n_dofs))
    b = CoefVector(space, rng.standard_normal(space.n_dofs))
    assert np.allclose((a + b).values, a.values + b.values)
    assert np.allclose((2.0 * a).values, 2.0 * a.values)
    with pytest.raises(FemError):
        CoefVector(space, np.zeros(3))
