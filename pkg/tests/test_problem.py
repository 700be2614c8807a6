import numpy as np
import pytest
import mpmath as mp

from ldglayer.exceptions import ValidationError
from ldglayer.problem import (ManufacturedSolution, ProblemCoefficients, eval_exact,
                              validate_coefficient_condition)

# Frozen values of (u, p, q, f) from a 30-digit symbolic evaluation of the
# closed-form solution and of -eps Lap u + (1+x)(1+y) u_x + (3/2+y) u.
ORACLE = {
    1e-2: {
        (0.5, 0.5): (0.75130095501070671, 0.011801407804483161, 0.0035355339059327377, 4.1655053501394166),
        (0.3, 0.7): (0.54175198997175067, 0.01670146283617098, 0.0032046394571138351, 4.9056606667413298),
        (0.9, 0.05): (0.39387043144842376, 0.00096184867805136187, 0.060713914863297594, 1.4210077828343242),
        (0.99, 0.5): (0.67149701576710696, -0.39060975565857459, 0.0031599859565510915, -76.150402211437765),
        (0.1, 0.97): (0.077474969884362907, 0.0076836713166734977, -0.020643934320846432, 2.1609249412534082),
    },
    1e-4: {
        (0.5, 0.5): (0.75130095501070671, 0.00011801407804483161, 3.5355339059327377e-05, 4.1578919100760716),
        (0.3, 0.7): (0.5629936187269593, 0.00017356312804056389, 6.2287496563733161e-05, 5.0742030575894086),
        (0.9, 0.05): (0.98103948036302369, 2.4407251514622282e-05, 6.6599384509873015e-05, 2.0144299477030061),
        (0.99, 0.5): (1.0623689220117645, 2.6215058608285421e-06, 4.9993831624083027e-05, 2.2029519600042229),
        (0.1, 0.97): (0.28024133238081333, 0.00027793263948017687, -9.2568302804052989e-05, 6.7301498037752614),
    },
}


@pytest.mark.parametrize("eps", sorted(ORACLE))
def test_frozen_oracle(eps):
    for (x, y), vals in ORACLE[eps].items():
        for which, ref in zip("upqf", vals):
            assert eval_exact(which, x, y, eps) == pytest.approx(ref, rel=1e-12, abs=1e-15)


def _mp_u(eps):
    e = mp.mpf(eps)
    se = mp.sqrt(e)

    def u(x, y):
        xf = mp.sin(mp.pi * x / 2) - (mp.exp(-(1 - x) / e) - mp.exp(-1 / e)) / (1 - mp.exp(-1 / e))
        yf = (1 + y ** 4) * (1 - mp.exp(-y / se)) * (1 - mp.exp(-(1 - y) / se))
        return xf * yf / (1 - mp.exp(-1 / (2 * se))) ** 2
    return u


@pytest.mark.parametrize("eps", [1e-2, 1e-4])
def test_source_against_high_precision_differences(eps, rng):
    """f versus -eps Lap u + a u_x + b u with derivatives from 40-digit differences."""
    ms = ManufacturedSolution(eps)
    u = _mp_u(eps)
    pts = rng.uniform(0.001, 0.999, size=(250, 2))
    with mp.workdps(40):
        for x, y in pts:
            X, Y = mp.mpf(x), mp.mpf(y)
            ux = mp.diff(u, (X, Y), (1, 0))
            uxx = mp.diff(u, (X, Y), (2, 0))
            uyy = mp.diff(u, (X, Y), (0, 2))
            uv = u(X, Y)
            terms = [-eps * (uxx + uyy), (1 + X) * (1 + Y) * ux, (mp.mpf(3) / 2 + Y) * uv]
            ref = float(mp.fsum(terms))
            scale = float(sum(abs(t) for t in terms))
            assert abs(ms.f(x, y) - ref) <= 1e-4 * scale
            assert ms.p(x, y) == pytest.approx(float(eps * ux), rel=1e-8, abs=1e-14)


@pytest.mark.parametrize("eps", [1e-1, 1e-2, 1e-4, 1e-8])
def test_derivatives_against_central_differences(eps, rng):
    ms = ManufacturedSolution(eps)
    h = min(1e-6, np.sqrt(eps) * 1e-3)
    x, y = rng.uniform(0.01, 0.99, size=(2, 500))
    checks = [
        (ms.u_x, (ms.u(x + h, y) - ms.u(x - h, y)) / (2 * h)),
        (ms.u_y, (ms.u(x, y + h) - ms.u(x, y - h)) / (2 * h)),
        # second derivatives from differences of the closed-form first ones
        (ms.u_xx, (ms.u_x(x + h, y) - ms.u_x(x - h, y)) / (2 * h)),
        (ms.u_yy, (ms.u_y(x, y + h) - ms.u_y(x, y - h)) / (2 * h)),
    ]
    for exact, fd in checks:
        ex = exact(x, y)
        # x <= 0.99 keeps the step resolved against the O(eps) x-layer
        np.testing.assert_allclose(fd, ex, rtol=1e-4, atol=1e-7 * np.max(np.abs(ex)))


@pytest.mark.parametrize("eps", [1e-4, 1e-8])
def test_source_matches_fd_away_from_layers(eps, rng):
    # points at distance > 10 sqrt(eps) from every layer
    ms = ManufacturedSolution(eps)
    d = 10 * np.sqrt(eps)
    x = rng.uniform(d, 1 - d, 200)
    y = rng.uniform(d, 1 - d, 200)
    h = 1e-4
    u = ms.u
    uxx = (u(x + h, y) - 2 * u(x, y) + u(x - h, y)) / h ** 2
    uyy = (u(x, y + h) - 2 * u(x, y) + u(x, y - h)) / h ** 2
    ux = (u(x + h, y) - u(x - h, y)) / (2 * h)
    fd = -eps * (uxx + uyy) + (1 + x) * (1 + y) * ux + (1.5 + y) * u(x, y)
    np.testing.assert_allclose(ms.f(x, y), fd, rtol=1e-5)


@pytest.mark.parametrize("eps", [1.0, 1e-2, 1e-8, 1e-12])
def test_boundary_values_vanish(eps):
    ms = ManufacturedSolution(eps)
    t = np.linspace(0, 1, 101)
    for x, y in ((np.ones_like(t), t), (np.zeros_like(t), t), (t, np.zeros_like(t)),
                 (t, np.ones_like(t))):
        assert np.max(np.abs(ms.u(x, y))) <= 1e-12


@pytest.mark.parametrize("eps", [1.0, 1e-4, 1e-8, 1e-12])
def test_finite_everywhere(eps):
    ms = ManufacturedSolution(eps)
    t = np.linspace(0, 1, 201)
    X, Y = np.meshgrid(t, t)
    with np.errstate(all="raise"):
        for which in "upqf":
            assert np.all(np.isfinite(ms.evaluate(which, X, Y)))


def test_layer_present_and_smooth_outside():
    ms = ManufacturedSolution(1e-8)
    assert abs(ms.u(1 - 1e-8, 0.5) - ms.u(1.0, 0.5)) > 0.3
    for h in (1e-2, 1e-3, 1e-4):
        assert abs(ms.u(0.5 + h, 0.5) - ms.u(0.5, 0.5)) <= 2 * h


def test_fluxes_are_scaled_derivatives():
    ms = ManufacturedSolution(1e-3)
    x, y = np.array([0.2, 0.7]), np.array([0.4, 0.95])
    np.testing.assert_allclose(ms.p(x, y), 1e-3 * ms.u_x(x, y))
    np.testing.assert_allclose(ms.q(x, y), 1e-3 * ms.u_y(x, y))


def test_rejects_outside_domain():
    with pytest.raises(ValidationError):
        eval_exact("u", 1.1, 0.5, 1e-2)
    with pytest.raises(ValidationError):
        eval_exact("w", 0.5, 0.5, 1e-2)


# -- coefficient condition

def test_condition_model_problem():
    rep = validate_coefficient_condition(ManufacturedSolution(1e-6).coefficients())
    assert rep.minimum == pytest.approx(1.0, abs=1e-14)
    assert rep.location[1] == 0.0
    assert rep.satisfied


def _const(c):
    return lambda x, y: np.full(np.broadcast(x, y).shape, float(c))


def test_condition_degenerate():
    coeffs = ProblemCoefficients(_const(1), _const(0), _const(0), _const(0), 1e-3)
    rep = validate_coefficient_condition(coeffs)
    assert rep.minimum == 0.0 and not rep.satisfied


def test_condition_unit():
    coeffs = ProblemCoefficients(_const(1), _const(0), _const(1), _const(0), 1e-3)
    assert validate_coefficient_condition(coeffs).minimum == 1.0


def test_coefficients_reject_bad_eps():
    with pytest.raises(ValidationError):
        ProblemCoefficients(_const(1), _const(0), _const(1), _const(0), 0.0)
