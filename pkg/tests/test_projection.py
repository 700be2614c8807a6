import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ldglayer.exceptions import ValidationError
from ldglayer.projection import (eval_1d, project_1d, project_2d, project_triple,
                                 projection_error_report)
from ldglayer.quadrature import gauss_legendre

from conftest import make_space

E = math.e


# hand solutions use the exact moment e - 1; the 5-point rule misses it by
# 6.5e-13, so the 1e-12 check runs with 8 points and the default rule is
# checked against its own quadrature error
RADAU_EXP = {
    "radau_minus": lambda x: (E - 2) + 2 * x,
    "radau_plus": lambda x: 1 + (2 * E - 4) * x,
}


@pytest.mark.parametrize("kind", sorted(RADAU_EXP))
def test_radau_of_exp(kind):
    x = np.linspace(0, 1, 7)
    c = project_1d(kind, 1, (0.0, 1.0), np.exp, quad_order=8)
    np.testing.assert_allclose(eval_1d(c, (0.0, 1.0), x), RADAU_EXP[kind](x), atol=1e-12, rtol=0)


@pytest.mark.parametrize("kind", sorted(RADAU_EXP))
def test_radau_of_exp_default_rule(kind):
    quad_err = abs(gauss_legendre(5).integrate(np.exp, 0.0, 1.0) - (E - 1))
    x = np.linspace(0, 1, 7)
    c = project_1d(kind, 1, (0.0, 1.0), np.exp)
    # the moment error enters the linear term with factor at most 2
    err = np.max(np.abs(eval_1d(c, (0.0, 1.0), x) - RADAU_EXP[kind](x)))
    assert err <= 2 * quad_err + 1e-15


def test_radau_minus_reproduces_quadratic():
    c = project_1d("radau_minus", 2, (0.0, 1.0), lambda x: x ** 2)
    x = np.linspace(0, 1, 11)
    np.testing.assert_allclose(eval_1d(c, (0.0, 1.0), x), x ** 2, atol=1e-14)


def test_degenerate_interval_rejected():
    with pytest.raises(ValidationError):
        project_1d("l2", 1, (1.0, 1.0), np.exp)
    with pytest.raises(ValidationError):
        project_1d("pi_minus", 1, (0.0, 1.0), np.exp)
    with pytest.raises(ValidationError):
        project_1d("nope", 1, (0.0, 1.0), np.exp)


def _random_smooth(rng):
    a, b, c = rng.uniform(-2, 2, 3)
    return lambda x: np.sin(a * x + b) + c * np.exp(0.5 * x)


@pytest.mark.parametrize("kind", ["radau_minus", "radau_plus"])
def test_endpoint_collocation(rng, kind):
    for _ in range(200):
        f = _random_smooth(rng)
        lo = rng.uniform(-3, 3)
        iv = (lo, lo + rng.uniform(1e-3, 2))
        k = int(rng.integers(0, 5))
        c = project_1d(kind, k, iv, f)
        end = iv[1] if kind == "radau_minus" else iv[0]
        val = eval_1d(c, iv, end)
        assert abs(val - f(end)) <= 1e-12 * (1 + abs(f(end)))


@pytest.mark.parametrize("kind", ["l2", "radau_minus", "radau_plus"])
def test_moment_conditions_with_finer_rule(rng, kind):
    r8 = gauss_legendre(8)
    for _ in range(50):
        f = _random_smooth(rng)
        # element-scale widths; at h = 0.25 the 5-point pollution alone is ~1e-10
        iv = (0.2, 0.2 + rng.uniform(1e-3, 0.1))
        k = int(rng.integers(1, 4))
        c = project_1d(kind, k, iv, f)
        n_mom = k + 1 if kind == "l2" else k
        for m in range(n_mom):
            # test against x^m shifted to the interval
            g = lambda x: (f(x) - eval_1d(c, iv, x)) * (x - iv[0]) ** m
            scale = r8.integrate(lambda x: np.abs(f(x) * (x - iv[0]) ** m), *iv)
            # construction uses the 5-point rule; the 8-point check only sees its pollution
            assert abs(r8.integrate(g, *iv)) <= 1e-11 * max(scale, 1e-300) + 1e-15


@settings(max_examples=40, deadline=None)
@given(k=st.integers(0, 4), lo=st.floats(-2, 2), h=st.floats(1e-3, 3),
       kind=st.sampled_from(["l2", "radau_minus", "radau_plus"]), seed=st.integers(0, 2 ** 31))
def test_polynomial_reproduction(k, lo, h, kind, seed):
    coef = np.random.default_rng(seed).normal(size=k + 1)
    f = lambda x: np.polynomial.polynomial.polyval(x - lo, coef)
    iv = (lo, lo + h)
    c = project_1d(kind, k, iv, f)
    x = np.linspace(*iv, 9)
    np.testing.assert_allclose(eval_1d(c, iv, x), f(x), atol=1e-12 * (1 + np.abs(coef).sum()))


# -- 2D

def _poly2(k, rng):
    C = rng.normal(size=(k + 1, k + 1))
    return lambda x, y: sum(C[a, b] * x ** b * y ** a for a in range(k + 1) for b in range(k + 1))


@pytest.mark.parametrize("kind", ["pi_minus", "pi_x_plus", "pi_y_plus"])
@pytest.mark.parametrize("family", ["shishkin", "bs", "bakhvalov"])
def test_2d_reproduces_qk(rng, kind, family):
    sp = make_space(N=8, k=2, eps=1e-4, family=family)
    f = _poly2(2, rng)
    proj = project_2d(kind, sp, f)
    X, Y = sp.element_grid()
    vals = proj.samples().vol
    np.testing.assert_allclose(vals, f(X, Y), atol=1e-12)


def test_pi_minus_top_right_corner():
    sp = make_space(N=8, k=2, eps=1e-4)
    m = sp.mesh
    f = lambda x, y: np.exp(x) * np.cos(2 * y)
    C = project_2d("pi_minus", sp, f)._grid()
    right = sp.right
    for j in range(1, 9):
        for i in range(1, 9):
            e = m.element_index(i, j)
            corner = right @ C[e] @ right
            assert corner == pytest.approx(f(m.x[i], m.y[j]), abs=1e-12)


def test_pi_x_plus_collapses_to_1d():
    sp = make_space(N=4, k=1, eps=1e-2)
    m = sp.mesh
    proj = project_2d("pi_x_plus", sp, lambda x, y: np.exp(x) + 0 * y)
    for i in range(1, 5):
        iv = (m.x[i - 1], m.x[i])
        c = project_1d("radau_plus", 1, iv, np.exp)
        xs = np.linspace(*iv, 5)[1:-1]
        for y in (0.1, 0.5, 0.93):
            np.testing.assert_allclose(proj(xs, np.full_like(xs, y)), eval_1d(c, iv, xs), atol=1e-12)


@pytest.mark.parametrize("kind,kx,ky", [("pi_minus", "radau_minus", "radau_minus"),
                                        ("pi_x_plus", "radau_plus", "l2"),
                                        ("pi_y_plus", "l2", "radau_plus")])
def test_tensor_identity(kind, kx, ky):
    """2D projection equals x-projection of the y-projections, coefficient-wise."""
    sp = make_space(N=4, k=2, eps=1e-2)
    m = sp.mesh
    f = lambda x, y: np.sin(3 * x + 1) * np.exp(y) + x * y ** 3
    proj = project_2d(kind, sp, f)
    for j in range(1, 5):
        for i in range(1, 5):
            ivx, ivy = (m.x[i - 1], m.x[i]), (m.y[j - 1], m.y[j])
            # coefficient matrix C[my, mx] from sequential 1D projections
            def along_y(x):
                return np.array([project_1d(ky, 2, ivy, lambda y: f(xx, y)) for xx in np.atleast_1d(x)])
            rows = []
            for my in range(3):
                rows.append(project_1d(kx, 2, ivx, lambda x: along_y(x)[:, my]))
            C = np.array(rows)
            e = m.element_index(i, j)
            np.testing.assert_allclose(proj.coeffs[e], C.ravel(), atol=1e-12)


def test_stability_sup_norm(rng):
    sp = make_space(N=8, k=2, eps=1e-3, family="bs")
    X, Y = sp.element_grid()
    for _ in range(20):
        a, b, c = rng.uniform(-6, 6, 3)
        f = lambda x, y: np.sin(a * x + b * y) + np.tanh(c * (x - y))
        fine = np.linspace(0, 1, 201)
        fmax = np.max(np.abs(f(fine[:, None], fine[None, :])))
        for kind in ("pi_minus", "pi_x_plus", "pi_y_plus"):
            vals = project_2d(kind, sp, f).samples()
            pmax = max(np.max(np.abs(vals.vol)), np.max(np.abs(vals.vx_minus)),
                       np.max(np.abs(vals.hy_minus)))
            assert pmax <= 10 * fmax


def test_report_polynomial_triple(poly):
    """u, p, q of the polynomial solution lie in Q^2 so every eta vanishes."""
    sp = make_space(N=4, k=2, eps=0.1)
    rep = projection_error_report(sp, poly)
    for name, val in rep.as_dict().items():
        assert val <= 1e-11, name


def test_report_rates_model_problem():
    from ldglayer.problem import ManufacturedSolution
    from ldglayer.study import rate
    ex = ManufacturedSolution(1e-8)
    for k in (1, 2):
        r32 = projection_error_report(make_space(N=32, k=k, eps=1e-8), ex)
        r64 = projection_error_report(make_space(N=64, k=k, eps=1e-8), ex)
        assert rate(r32.eta_u, r64.eta_u, 32, 64, "ShishkinLog") >= k + 0.8
        if k == 1:
            assert rate(r32.eta_p_scaled, r64.eta_p_scaled, 32, 64, "ShishkinLog") >= 1.8


def test_project_triple_kinds(model):
    sp = make_space(N=4, k=1)
    kinds = [p.kind for p in project_triple(sp, model)]
    assert kinds == ["pi_minus", "pi_x_plus", "pi_y_plus"]
