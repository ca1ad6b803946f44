import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dcla import prox as px
from dcla import regularizers as regs

CATALOG = [
    regs.l1_minus_l2(2.0),
    regs.l1_minus_sigma_q(1, 1.5),
    regs.l1_minus_sigma_q(3),
    regs.capped_l1(2.0),
    regs.pil(1.5, 3.0, 0.5),
    regs.l1_minus_l2_pow(1.5),
    regs.zero(),
]
IDS = ["l1-l2", "sigma1", "sigma3", "capped", "pil", "pow", "zero"]


def test_dc_eval_l1_minus_l2():
    assert regs.dc_eval(regs.l1_minus_l2(), [1.0, 0.0]) == pytest.approx((1.0, 1.0, 0.0))
    r1, r2, r = regs.dc_eval(regs.l1_minus_l2(), [1.0, 1.0])
    assert (r1, r2) == pytest.approx((2.0, math.sqrt(2)))
    assert r == pytest.approx(0.58579, abs=1e-5)


def test_dc_eval_capped():
    r1, r2, r = regs.dc_eval(regs.capped_l1(2.0), [0.3, 1.0])
    assert r1 == pytest.approx(2.6)
    assert r2 == pytest.approx(1.0)
    assert r == pytest.approx(1.6)


def test_capped_matches_definition(rng):
    reg = regs.capped_l1(1.7, 0.8)
    for _ in range(100):
        x = rng.normal(scale=2, size=3)
        assert regs.dc_eval(reg, x)[2] == pytest.approx(0.8 * np.minimum(1.0, 1.7 * np.abs(x)).sum())


def test_pil_matches_definition(rng):
    theta, a = 1.5, 3.0
    reg = regs.pil(theta, a)
    for _ in range(100):
        x = rng.normal(scale=2, size=3)
        ref = np.minimum(1.0, np.maximum(0.0, (theta * np.abs(x) - 1.0) / (a - 1.0))).sum()
        assert regs.dc_eval(reg, x)[2] == pytest.approx(ref, abs=1e-12)


def test_sigma_q_is_top_q(rng):
    reg = regs.l1_minus_sigma_q(2)
    x = np.array([3.0, -1.0, 2.0, 0.5])
    r1, r2, r = regs.dc_eval(reg, x)
    assert (r1, r2, r) == pytest.approx((6.5, 5.0, 1.5))


def test_dc_subgradient_examples():
    g1, g2 = regs.dc_subgradient(regs.l1_minus_l2(), [1.0, 0.0])
    np.testing.assert_allclose(g1, [1.0, 0.0])
    np.testing.assert_allclose(g2, [1.0, 0.0])
    g1, g2 = regs.dc_subgradient(regs.l1_minus_l2(10.0), [3.0, 4.0])
    np.testing.assert_allclose(g1, [10.0, 10.0])
    np.testing.assert_allclose(g2, [6.0, 8.0])


@pytest.mark.parametrize("reg", CATALOG, ids=IDS)
@pytest.mark.parametrize("which", [regs.R1, regs.R2])
def test_subgradient_inequality(reg, which, rng):
    comp = reg.component(which)
    for _ in range(10):
        x = rng.normal(scale=2, size=3)
        g = comp.subgradient(x)
        for _ in range(10):
            y = rng.normal(scale=3, size=3)
            assert comp.value(y) >= comp.value(x) + g @ (y - x) - 1e-9


def test_component_prox_examples():
    reg = regs.l1_minus_l2()
    np.testing.assert_allclose(regs.component_prox(reg, regs.R1, 0.5, [1.2, -0.3]), [0.7, 0.0])
    np.testing.assert_allclose(regs.component_prox(reg, regs.R2, 2.0, [3.0, 4.0]), [1.8, 2.4])
    with pytest.raises(ValueError):
        regs.component_prox(reg, regs.R1, 0.0, [1.0])


def test_component_prox_capped_r2():
    out = regs.component_prox(regs.capped_l1(2.0), regs.R2, 0.5, [2.0])
    y = np.arange(1.0, 2.0, 1e-6)
    ref = y[np.argmin(np.maximum(2 * np.abs(y) - 1, 0) + (y - 2) ** 2 / 1.0)]
    assert abs(out[0] - ref) < 1e-5


@pytest.mark.parametrize("reg", [r for r in CATALOG if r.kind != "L1MinusSigmaQ" or r.params["q"] == 1], ids=lambda r: r.kind)
@pytest.mark.parametrize("which", [regs.R1, regs.R2])
def test_component_prox_optimality(reg, which, rng):
    """No small random perturbation improves the prox objective."""
    d = 1 if reg.kind == "L1MinusSigmaQ" else 2
    comp = reg.component(which)
    for _ in range(20):
        x = rng.normal(scale=2, size=d)
        t = rng.uniform(0.1, 2.0)
        y = regs.component_prox(reg, which, t, x)
        obj = lambda v: comp.value(v) + np.sum((v - x) ** 2) / (2 * t)
        best = obj(y)
        for _ in range(50):
            assert obj(y + rng.normal(scale=0.05, size=d)) >= best - 1e-9


def test_top_q_prox_restricted():
    reg = regs.l1_minus_sigma_q(2)
    with pytest.raises(regs.UnsupportedOperation):
        regs.component_prox(reg, regs.R2, 1.0, [1.0, 2.0, 3.0])
    # q == d reduces to the l1 prox
    np.testing.assert_allclose(regs.component_prox(reg, regs.R2, 0.5, [1.2, -0.3]), [0.7, 0.0])
    with pytest.raises(ValueError):
        regs.dc_eval(regs.l1_minus_sigma_q(5), [1.0, 2.0])


def test_lipschitz_info_table():
    info = regs.lipschitz_info(regs.l1_minus_l2(10.0), 2)
    assert info.G1 == pytest.approx(10 * math.sqrt(2))
    assert info.G1 == pytest.approx(14.142, abs=1e-3)
    assert info.G2 == 10.0
    info = regs.lipschitz_info(regs.capped_l1(1.0), 4)
    assert (info.G1, info.G2) == (2.0, 4.0)
    info = regs.lipschitz_info(regs.zero(), 3)
    assert (info.G1, info.G2) == (0.0, 0.0)
    info = regs.lipschitz_info(regs.l1_minus_l2_pow(1.5, 2.0), 2)
    assert info.G2 is None
    kappa, M = info.holder
    assert kappa == pytest.approx(0.5)
    assert M == pytest.approx(2.0 * regs.default_holder_constant(1.5))


@pytest.mark.parametrize("reg", CATALOG, ids=IDS)
def test_lipschitz_bounds_hold(reg, rng):
    info = regs.lipschitz_info(reg, 3)
    if reg.kind == "L1MinusSigmaQ" and reg.params["q"] > 3:
        return
    for which, G in ((regs.R1, info.G1), (regs.R2, info.G2)):
        if G is None:
            continue
        comp = reg.component(which)
        for _ in range(200):
            x, y = rng.normal(scale=3, size=(2, 3))
            assert abs(comp.value(x) - comp.value(y)) <= G * np.linalg.norm(x - y) + 1e-9


def test_holder_bound_holds(rng):
    reg = regs.l1_minus_l2_pow(1.5)
    kappa, M = regs.lipschitz_info(reg, 2).holder
    for _ in range(500):
        x, y = rng.normal(scale=3, size=(2, 2))
        gx, gy = regs.grad_r2(reg, x), regs.grad_r2(reg, y)
        assert np.linalg.norm(gx - gy) <= M * np.linalg.norm(x - y) ** kappa + 1e-9


def test_grad_r2_matches_subgradient(rng):
    reg = regs.l1_minus_l2_pow(1.3, 2.0)
    for _ in range(20):
        x = rng.normal(size=3)
        np.testing.assert_allclose(regs.grad_r2(reg, x), reg.component(regs.R2).subgradient(x))
    with pytest.raises(regs.UnsupportedOperation):
        regs.grad_r2(regs.l1_minus_l2(), [1.0, 2.0])


def test_full_prox_availability():
    np.testing.assert_allclose(regs.full_prox(regs.l1_minus_l2(), 1.0, [2.0, 0.0]), [2.0, 0.0])
    np.testing.assert_array_equal(regs.full_prox(regs.zero(), 3.0, [1.0, 2.0]), [1.0, 2.0])
    with pytest.raises(regs.UnsupportedOperation):
        regs.full_prox(regs.capped_l1(1.0), 1.0, [1.0, 2.0])


def test_custom_regularizer():
    info = regs.RegularizerInfo(G1=1.0, G2=0.0, L_r2=1.0)
    reg = regs.custom(px.L1Norm(), px.HalfSquaredNorm(), info, grad_r2=lambda x: x)
    np.testing.assert_allclose(regs.grad_r2(reg, [3.0]), [3.0])
    assert regs.lipschitz_info(reg, 1) == info
    with pytest.raises(regs.UnsupportedOperation):
        reg.to_dict()


@pytest.mark.parametrize(
    "kind, params",
    [
        ("Nope", {}),
        ("CappedL1", {}),
        ("PiL", {"theta": 1.0, "a": 1.0}),
        ("L1MinusL2PowP", {"p": 2.0}),
        ("L1MinusSigmaQ", {"q": 0}),
    ],
)
def test_bad_parameters(kind, params):
    with pytest.raises(ValueError):
        regs.DCRegularizer(kind, 1.0, params)


def test_negative_scale_rejected():
    with pytest.raises(ValueError):
        regs.l1_minus_l2(-1.0)


def test_dict_round_trip():
    for reg in CATALOG:
        again = regs.from_dict(reg.to_dict())
        assert again.to_dict() == reg.to_dict()


@given(arrays(float, 3, elements=st.floats(-5, 5)))
@settings(max_examples=100, deadline=None)
def test_l1_minus_l2_is_nonnegative(x):
    assert regs.dc_eval(regs.l1_minus_l2(), x)[2] >= -1e-12
