import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sizestruct.coeffs import (CoefficientFn, GeneralKernel, ModelParams, SeparableKernel,
                               constant, derivative, eval_coeff, gaussian_bump, inf_value,
                               kernel_eval, linear, separable_envelope, sup_norm, table)
from sizestruct.errors import ConfigError, DomainError

from conftest import product_kernel


@pytest.mark.parametrize("f, s, expected", [
    (constant(2.0), 0.3, 2.0),
    (linear(1, 1), 0.5, 1.5),
    (table([0, 1], [0, 2]), 0.25, 0.5),
])
def test_eval(f, s, expected):
    assert eval_coeff(f, s) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("s", [-0.1, 1.1, np.nan])
def test_eval_outside_domain(s):
    with pytest.raises(DomainError):
        constant(1.0)(s)


@pytest.mark.parametrize("f, s, expected", [
    (constant(2.0), 0.4, 0.0),
    (linear(1, 3), 0.7, 3.0),
    (table([0, 0.5, 1], [0, 1, 1]), 0.25, 2.0),
])
def test_derivative(f, s, expected):
    assert derivative(f, s) == pytest.approx(expected, abs=1e-15)


def test_table_derivative_uses_left_slope_at_interior_knot():
    f = table([0, 0.5, 1], [0, 1, 1])
    assert derivative(f, 0.5) == 2.0
    assert derivative(f, 0.0) == 2.0
    assert derivative(f, 1.0) == 0.0


@pytest.mark.parametrize("f, sup, inf", [
    (constant(0.4), 0.4, 0.4),
    (linear(0.1, 0.2), 0.3, 0.1),
    (table([0, 1], [1, 0]), 1.0, 0.0),
    (gaussian_bump(0.5, 0.1, 2.0), 2.0, 2.0 * np.exp(-25.0)),
    (gaussian_bump(1.5, 0.5, 1.0), np.exp(-1.0), np.exp(-9.0)),
])
def test_sup_inf(f, sup, inf):
    assert sup_norm(f) == pytest.approx(sup, rel=1e-14)
    assert inf_value(f) == pytest.approx(inf, rel=1e-14)


def test_gaussian_extrema_match_dense_sampling():
    f = gaussian_bump(0.37, 0.08, 1.3)
    dense = f(np.linspace(0, 1, 100_001))
    assert sup_norm(f) >= dense.max()
    assert sup_norm(f) == pytest.approx(dense.max(), rel=1e-8)
    assert inf_value(f) == pytest.approx(dense.min(), rel=1e-12)


def test_step_table_is_right_continuous():
    f = table([0, 0.5, 1], [1.0, 3.0], interpolation="step")
    assert f(0.49) == 1.0
    assert f(0.5) == 3.0
    assert f(1.0) == 3.0
    assert derivative(f, 0.3) == 0.0


@pytest.mark.parametrize("kwargs", [
    dict(knots=[0, 0.5], values=[1, 2]),          # does not span [0, 1]
    dict(knots=[0, 0.6, 0.4, 1], values=[1, 1, 1, 1]),
    dict(knots=[0, 1], values=[1, 2, 3]),
    dict(knots=[0, 1], values=[1, 2], interpolation="cubic"),
])
def test_bad_tables(kwargs):
    with pytest.raises(ConfigError):
        CoefficientFn.table(m=1.0, **kwargs)


smooth_forms = st.one_of(
    st.builds(lambda a, b: linear(a, b), st.floats(-3, 3), st.floats(-3, 3)),
    st.builds(lambda c, w, h: gaussian_bump(c, w, h),
              st.floats(0, 1), st.floats(0.1, 1), st.floats(-2, 2)),
)


@settings(max_examples=40, deadline=None)
@given(smooth_forms, st.lists(st.floats(0.01, 0.99), min_size=5, max_size=20))
def test_derivative_matches_central_differences(f, pts):
    h = 1e-6
    s = np.array(pts)
    fd = (f(s + h) - f(s - h)) / (2 * h)
    assert np.allclose(f.derivative(s), fd, atol=1e-6)


def test_derivative_matches_finite_differences_at_100_points(rng):
    s = rng.uniform(0.01, 0.99, 100)
    for f in (linear(0.3, -1.2), gaussian_bump(0.4, 0.2, 1.5), constant(3.0)):
        fd = (f(s + 1e-6) - f(s - 1e-6)) / 2e-6
        assert np.max(np.abs(f.derivative(s) - fd)) < 1e-6


# --- kernels ---------------------------------------------------------------

def test_separable_kernel_eval():
    one = SeparableKernel.rank_one(constant(2), constant(1))
    assert kernel_eval(one, 0.3, 0.8) == 2.0
    two = SeparableKernel(((constant(1), constant(1)), (constant(1), constant(1))))
    assert kernel_eval(two, 0.1, 0.9) == 2.0
    assert kernel_eval(two, 0.7, 0.2) == 2.0


def test_separable_kernel_matches_sum_of_products(rng):
    terms = ((linear(0.2, 1.0), gaussian_bump(0.5, 0.3, 1.0)),
             (table([0, 0.3, 1], [0, 2, 1]), constant(0.7)))
    k = SeparableKernel(terms)
    s, y = rng.uniform(0, 1, 50), rng.uniform(0, 1, 50)
    expected = sum(b1(s) * b2(y) for b1, b2 in terms)
    assert np.allclose(k(s, y), expected, rtol=0, atol=1e-15)


def test_general_kernel_bilinear_reproduces_product():
    k = product_kernel()
    assert kernel_eval(k, 0.5, 0.5) == pytest.approx(0.25, abs=1e-15)
    nodes = np.linspace(0, 1, 11)
    mids = 0.5 * (nodes[1:] + nodes[:-1])
    for pts in (nodes, mids):
        S, Y = np.meshgrid(pts, pts, indexing="ij")
        assert np.allclose(k(S, Y), S * Y, atol=1e-15)


def test_general_kernel_domain():
    with pytest.raises(DomainError):
        product_kernel()(0.5, 1.2)


def test_kernel_sup_norm():
    assert product_kernel().sup_norm() == 1.0
    k = SeparableKernel.rank_one(linear(1, 1), constant(0.5))
    assert k.sup_norm() == 1.0


# --- envelopes ---------------------------------------------------------------

@pytest.mark.parametrize("side", ["lower", "upper"])
def test_envelope_of_constant_kernel(side):
    k = GeneralKernel.from_function(lambda s, y: 2.0 + 0 * s, 1.0, 5)
    env = separable_envelope(k, 3, side)
    s = np.linspace(0, 1, 37)
    assert np.allclose(env(s[:, None], s[None, :]), 2.0)


def test_envelope_rank_one_partition_lower_is_zero():
    env = separable_envelope(product_kernel(), 1, "lower")
    s = np.linspace(0, 1, 21)
    assert np.all(env(s[:, None], s[None, :]) == 0.0)


def test_envelope_two_cells_upper_matches_hand_values():
    env = separable_envelope(product_kernel(), 2, "upper")
    # cell suprema of s*y, checked by brute-force sampling on interior points
    assert kernel_eval(env, 0.2, 0.3) == pytest.approx(0.25)
    assert kernel_eval(env, 0.7, 0.9) == pytest.approx(1.0)
    assert kernel_eval(env, 0.2, 0.9) == pytest.approx(0.5)
    assert kernel_eval(env, 0.8, 0.1) == pytest.approx(0.5)
    g = np.linspace(0, 0.5, 201)
    assert np.max(np.outer(g, g)) == pytest.approx(0.25)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 8])
def test_envelopes_bracket_the_kernel(n):
    kernels = [product_kernel(),
               GeneralKernel.from_function(lambda s, y: np.exp(-(s - y) ** 2) * (1 + s), 1.0, 17)]
    s = np.linspace(0, 1, 200)
    S, Y = s[:, None], s[None, :]
    for k in kernels:
        lo = separable_envelope(k, n, "lower")
        hi = separable_envelope(k, n, "upper")
        assert lo.rank == n
        assert np.all(lo(S, Y) <= k(S, Y) + 1e-12)
        assert np.all(hi(S, Y) >= k(S, Y) - 1e-12)


def test_envelope_gap_non_increasing():
    k = product_kernel()
    s = (np.arange(400) + 0.5) / 400
    S, Y = s[:, None], s[None, :]
    gaps = []
    for n in (1, 2, 4, 8):
        gap = separable_envelope(k, n, "upper")(S, Y) - separable_envelope(k, n, "lower")(S, Y)
        gaps.append(gap.mean())
    assert all(b <= a for a, b in zip(gaps, gaps[1:]))


# --- parameter validation ----------------------------------------------------

def test_model_params_rejects_nonpositive_growth():
    with pytest.raises(ConfigError, match="gamma1 must be strictly positive"):
        ModelParams.constant(gamma1=0.0, beta=1.0)
    with pytest.raises(ConfigError, match="gamma2"):
        ModelParams(constant(1), linear(1, -1), constant(0), constant(0), constant(0),
                    SeparableKernel.rank_one(constant(1), constant(1)))


def test_model_params_rejects_negative_rates():
    with pytest.raises(ConfigError, match="mu"):
        ModelParams.constant(mu=-0.1, beta=1.0)
    with pytest.raises(ConfigError, match="beta"):
        ModelParams.constant(beta=GeneralKernel([[1, -1], [1, 1]], 1.0))


def test_model_params_rejects_mismatched_domains():
    with pytest.raises(ConfigError):
        ModelParams(constant(1, 2.0), constant(1), constant(0), constant(0), constant(0),
                    SeparableKernel.rank_one(constant(1), constant(1)), 1.0)


def test_bounds_b_and_c():
    p = ModelParams(constant(1), constant(1), constant(0.3), linear(0.1, 0.3), constant(0.2),
                    product_kernel(), 1.0)
    assert p.birth_bound() == 1.0
    assert p.transfer_bound() == pytest.approx(0.4)


def test_objects_are_immutable():
    f = constant(1.0)
    with pytest.raises(Exception):
        f.form = "linear"
    k = product_kernel()
    with pytest.raises(ValueError):
        k.values[0, 0] = 3.0
