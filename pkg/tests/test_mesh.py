import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ldglayer.exceptions import ValidationError
from ldglayer.mesh import (FAMILIES, MeshParams, Region, TensorMesh, build_mesh,
                           classify_element, region_codes, transition_params)


# -- transition parameters

def test_transition_params_small_eps_n8():
    # sigma/alpha = 4, sigma/delta = 1
    tau1, tau2 = transition_params(MeshParams(1e-2, 8, 4.0, alpha=1.0, delta=4.0))
    assert tau1 == pytest.approx(0.04 * math.log(8), rel=1e-14)
    assert tau1 == pytest.approx(8.3178e-2, rel=1e-4)
    assert tau2 == pytest.approx(2.0794e-1, rel=1e-4)


def test_transition_params_saturate():
    assert transition_params(MeshParams(1.0, 4, 1.0, 1.0, 1.0)) == (0.5, 0.25)


def test_transition_params_default_setup_k2():
    tau1, tau2 = transition_params(MeshParams(1e-8, 64, 4.0))
    assert tau1 == pytest.approx(1.6636e-7, rel=1e-4)
    assert tau2 == pytest.approx(1.1883e-3, rel=1e-4)


def test_transition_params_bakhvalov_uses_log_inverse_eps():
    tau1, tau2 = transition_params(MeshParams(1e-8, 64, 3.0, family="bakhvalov"))
    assert tau1 == pytest.approx(3e-8 * math.log(1e8), rel=1e-14)
    assert tau2 == pytest.approx(3e-4 / 1.4 * math.log(1e4), rel=1e-14)


@pytest.mark.parametrize("kw", [dict(N=2), dict(N=6), dict(N=4.5), dict(epsilon=0.0),
                                dict(epsilon=-1.0), dict(sigma=0.0), dict(alpha=-1.0),
                                dict(delta=float("nan")), dict(family="uniform")])
def test_mesh_params_rejects(kw):
    args = dict(epsilon=1e-4, N=8, sigma=3.0)
    args.update(kw)
    with pytest.raises(ValidationError):
        MeshParams(**args)


def test_bakhvalov_rejects_eps_ge_one():
    with pytest.raises(ValidationError):
        build_mesh(MeshParams(1.0, 8, 3.0, family="bakhvalov"))


# -- node formulas

def test_shishkin_mesh_sizes():
    p = MeshParams(1e-6, 16, 3.0)
    m = build_mesh(p)
    tau1, tau2 = m.tau1, m.tau2
    N = p.N
    np.testing.assert_allclose(m.hx[: N // 2], 2 * (1 - tau1) / N, rtol=1e-12)
    np.testing.assert_allclose(m.hx[N // 2:], 2 * tau1 / N, rtol=1e-9)
    np.testing.assert_allclose(m.hy[: N // 4], 4 * tau2 / N, rtol=1e-12)
    np.testing.assert_allclose(m.hy[N // 4: 3 * N // 4], 2 * (1 - 2 * tau2) / N, rtol=1e-12)
    np.testing.assert_allclose(m.hy[3 * N // 4:], 4 * tau2 / N, rtol=1e-10)
    assert m.x[N // 2] == 1 - tau1
    assert m.y[N // 4] == tau2
    assert m.y[3 * N // 4] == 1 - tau2


@pytest.mark.parametrize("family", FAMILIES)
def test_endpoints_and_positive_sizes(family):
    m = build_mesh(MeshParams(1e-8, 32, 3.0, family=family))
    assert (m.x[0], m.x[-1], m.y[0], m.y[-1]) == (0.0, 1.0, 0.0, 1.0)
    assert np.all(m.hx > 0) and np.all(m.hy > 0)


def test_bs_nodes_match_generating_function():
    eps, N, sigma, delta = 1e-6, 16, 3.0, 1.4
    m = build_mesh(MeshParams(eps, N, sigma, delta=delta, family="bs"))
    for i in range(N // 2, N + 1):
        t = 1 - i / N
        phi = -math.log(1 - 2 * (1 - 1 / N) * t)
        assert m.x[i] == pytest.approx(1 - sigma * eps * phi, abs=1e-15)
    for j in range(N // 4 + 1):
        phi = -math.log(1 - 4 * (1 - 1 / N) * j / N)
        assert m.y[j] == pytest.approx(sigma * math.sqrt(eps) / delta * phi, abs=1e-15)


def test_bakhvalov_nodes_match_generating_function():
    eps, N, sigma, delta = 1e-4, 16, 3.0, 1.4
    m = build_mesh(MeshParams(eps, N, sigma, delta=delta, family="bakhvalov"))
    for i in range(N // 2, N):
        t = 1 - i / N
        phi = -math.log(1 - 2 * (1 - eps) * t)
        assert m.x[i] == pytest.approx(1 - sigma * eps * phi, abs=1e-14)
    se = math.sqrt(eps)
    for j in range(1, N // 4 + 1):
        phi = -math.log(1 - 4 * (1 - se) * j / N)
        assert m.y[j] == pytest.approx(sigma * se / delta * phi, rel=1e-13)
    # the graded parts reach the coarse part exactly at the transition points
    assert m.x[N // 2] == pytest.approx(1 - m.tau1, abs=1e-14)
    assert m.y[N // 4] == pytest.approx(m.tau2, abs=1e-14)


def test_bs_agrees_with_shishkin_at_transition():
    for N in (8, 64, 512):
        for eps in (1e-4, 1e-8, 1e-12):
            s = build_mesh(MeshParams(eps, N, 3.0))
            b = build_mesh(MeshParams(eps, N, 3.0, family="bs"))
            assert abs(b.x[N // 2] - s.x[N // 2]) <= 1e-13
            assert abs(b.x[N // 2] - (1 - s.tau1)) <= 1e-13


def test_bs_endpoint_is_one():
    m = build_mesh(MeshParams(1e-10, 64, 3.0, family="bs"))
    assert m.x[-1] == 1.0


@pytest.mark.parametrize("family", FAMILIES)
def test_saturated_mesh_is_uniform(family):
    eps = 0.5 if family == "bakhvalov" else 1.0
    m = build_mesh(MeshParams(eps, 8, 3.0, family=family))
    np.testing.assert_allclose(m.x, np.linspace(0, 1, 9), atol=1e-15)
    np.testing.assert_allclose(m.y, np.linspace(0, 1, 9), atol=1e-15)


@settings(max_examples=150, deadline=None)
@given(log_eps=st.floats(-12, 0), N=st.sampled_from([4, 8, 12, 16, 32, 64, 128, 256, 512]),
       family=st.sampled_from(FAMILIES), sigma=st.sampled_from([2.0, 3.0, 4.0]))
def test_mesh_properties(log_eps, N, family, sigma):
    eps = 10.0 ** log_eps
    if family == "bakhvalov" and eps >= 1.0:
        return
    m = build_mesh(MeshParams(eps, N, sigma, family=family))
    assert np.all(np.diff(m.x) > 0) and np.all(np.diff(m.y) > 0)
    assert abs(m.hx.sum() - 1) <= 1e-13 and abs(m.hy.sum() - 1) <= 1e-13
    if family == "shishkin":
        assert len(_distinct(m.hx)) <= 2 and len(_distinct(m.hy)) <= 2


def _distinct(h, tol=1e-13):
    vals = []
    for v in np.sort(h):
        if not vals or v - vals[-1] > tol:
            vals.append(v)
    return vals


def test_nodes_deterministic():
    p = MeshParams(1e-9, 128, 3.0, family="bakhvalov")
    a, b = build_mesh(p), build_mesh(p)
    assert np.array_equal(a.x, b.x) and np.array_equal(a.y, b.y)


# -- regions

def test_classify_examples():
    m = build_mesh(MeshParams(1e-8, 16, 3.0))
    N = 16
    assert classify_element(m, 1, N // 2) is Region.OMEGA11
    assert classify_element(m, N, 1) is Region.OMEGA22
    assert classify_element(m, N // 2 + 1, N // 2) is Region.OMEGA21
    assert classify_element(m, 1, N) is Region.OMEGA12


@pytest.mark.parametrize("ij", [(0, 1), (1, 0), (17, 1), (1, 17)])
def test_classify_rejects_out_of_range(ij):
    m = build_mesh(MeshParams(1e-8, 16, 3.0))
    with pytest.raises(ValidationError):
        classify_element(m, *ij)


@pytest.mark.parametrize("family", FAMILIES)
def test_region_codes_match_classify(family):
    m = build_mesh(MeshParams(1e-6, 16, 3.0, family=family))
    codes = region_codes(m)
    for j in range(1, 17):
        for i in range(1, 17):
            assert codes[m.element_index(i, j)] == classify_element(m, i, j).value
    counts = {c: int(np.sum(codes == c)) for c in (11, 12, 21, 22)}
    assert counts == {11: 64, 12: 64, 21: 64, 22: 64}


# -- dump format

def test_dump_roundtrip():
    m = build_mesh(MeshParams(1e-10, 8, 3.0, family="bs"))
    text = m.dumps()
    lines = text.splitlines()
    assert len(lines) == 2 and lines[0].startswith("x: ") and lines[1].startswith("y: ")
    back = TensorMesh.loads(text)
    assert np.array_equal(back.x, m.x) and np.array_equal(back.y, m.y)


def test_loads_rejects_garbage():
    with pytest.raises(ValidationError):
        TensorMesh.loads("x: 0 1\n")
    with pytest.raises(ValidationError):
        TensorMesh.loads("x: 0 0.7 0.5 1\ny: 0 0.2 0.4 1\n")


def test_mesh_is_read_only():
    m = build_mesh(MeshParams(1e-4, 8, 3.0))
    with pytest.raises(ValueError):
        m.x[1] = 0.3
