import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import vdflux as vf
from vdflux.besov import (BesovParams, C0Norm, EstimateReport, holder_conjugate,
                          kernel_sum, kernel_weight, localized_sum,
                          shell_coefficients, tail_decay_slope)
from vdflux.errors import ValidationError

THIRD = 1.0 / 3.0


def test_params_validation():
    with pytest.raises(ValidationError):
        BesovParams(0.0, 2.0)
    with pytest.raises(ValidationError):
        BesovParams(1.5, 2.0)
    with pytest.raises(ValidationError):
        BesovParams(0.5, 0.9)
    with pytest.raises(ValidationError):
        BesovParams(0.5, 2.0, 0.5)
    BesovParams(1.0, math.inf, "c0")


def test_single_mode_sharp_coefficients(grid32, sharp):
    f = vf.single_mode_scalar(grid32, [3, 0])
    coeffs = shell_coefficients(f, BesovParams(THIRD, 2.0), sharp)
    expected = 4.0 ** THIRD / np.sqrt(2.0)  # = 2**(1/6)
    for q, d in zip(coeffs.qs, coeffs.values):
        if q == 2:
            assert d == pytest.approx(expected, rel=1e-12)
            assert d == pytest.approx(2.0 ** (1.0 / 6.0), rel=1e-12)
        else:
            assert d <= 1e-12


def test_zero_field_coefficients(grid32, cutoff):
    f = vf.constant_field(grid32, 0.0)
    coeffs = shell_coefficients(f, BesovParams(THIRD, 3.0), cutoff)
    assert np.all(coeffs.values == 0.0)
    assert vf.besov_norm(f, BesovParams(THIRD, 3.0), cutoff) == 0.0


def test_constant_field_base_coefficient(grid32, cutoff):
    f = vf.constant_field(grid32, 5.0)
    coeffs = shell_coefficients(f, BesovParams(THIRD, 3.0), cutoff)
    # lambda_{-1} = 1/2, so d_{-1} = 5 * 2**(-1/3)
    assert coeffs.values[0] == pytest.approx(5.0 * 2.0 ** (-THIRD), rel=1e-12)
    assert np.all(coeffs.values[1:] <= 1e-12)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2 ** 31), alpha=st.floats(-4.0, 4.0, allow_nan=False))
def test_coefficient_scaling(seed, alpha):
    g = vf.TorusGrid(2, 16)
    cut = vf.make_cutoff("smooth")
    f = vf.random_besov(g, 0.5, 2.0, 0.2, seed=seed)
    params = BesovParams(THIRD, 3.0)
    base = shell_coefficients(f, params, cut).values
    scaled = shell_coefficients(vf.Field(g, alpha * f.values), params, cut).values
    assert np.abs(scaled - abs(alpha) * base).max() <= 1e-10 * max(1.0, abs(alpha))


def test_norm_single_mode(grid32, sharp):
    f = vf.single_mode_scalar(grid32, [3, 0])
    norm = vf.besov_norm(f, BesovParams(THIRD, 2.0, math.inf), sharp)
    assert norm == pytest.approx(2.0 ** (1.0 / 6.0), rel=1e-12)


def test_norm_nesting(random_state, smooth):
    u0 = random_state.u.component(0)
    n_inf = vf.besov_norm(u0, BesovParams(THIRD, 3.0, math.inf), smooth)
    n_one = vf.besov_norm(u0, BesovParams(THIRD, 3.0, 1.0), smooth)
    assert n_inf <= n_one


def test_c0_norm_reports_tail(grid32, smooth):
    f = vf.random_besov(grid32, THIRD, 3.0, 0.5, seed=3)
    out = vf.besov_norm(f, BesovParams(THIRD, 3.0, "c0"), smooth)
    assert isinstance(out, C0Norm)
    assert out.tail_start == grid32.q_max - 2
    assert 0.0 <= out.tail_sup <= out.norm


def test_smoothness_comparison(grid32, smooth):
    # ||f||_{s,inf} <= ||f||_{s',inf} * max_q lambda_q^{s-s'} for s <= s'
    f = vf.random_besov(grid32, 0.5, 3.0, 0.4, seed=9)
    s, s2 = 0.3, 0.6
    n1 = vf.besov_norm(f, BesovParams(s, 3.0, math.inf), smooth)
    n2 = vf.besov_norm(f, BesovParams(s2, 3.0, math.inf), smooth)
    factor = max(vf.lambda_q(q) ** (s - s2) for q in range(-1, grid32.q_max + 1))
    assert n1 <= n2 * factor * (1.0 + 1e-12)


def test_kernel_weight_and_sum():
    s = THIRD
    ms = np.arange(-200, 201)
    vals = kernel_weight(s, ms)
    assert np.all(vals > 0)
    # finite window sum matches the closed form (tails are below 1e-18)
    assert np.sum(vals) == pytest.approx(kernel_sum(s), rel=1e-12)
    assert kernel_weight(s, 0) == 1.0
    assert kernel_weight(s, -1) == pytest.approx(2.0 ** (-s), rel=1e-14)
    assert kernel_weight(s, 2) == pytest.approx(2.0 ** (2 * (s - 1.0)), rel=1e-14)
    with pytest.raises(ValidationError):
        kernel_sum(1.0)


def test_localized_sum_single_entry(grid32):
    params = BesovParams(THIRD, 2.0)
    qs = np.arange(-1, grid32.q_max + 1)
    d = np.zeros(len(qs))
    d[qs == 2] = 1.0
    sums = localized_sum(vf.ShellCoefficients(params, qs, d))
    for q, val in zip(sums.qs, sums.values):
        assert val == pytest.approx(float(kernel_weight(THIRD, q - 2)), rel=1e-14)


def test_localized_sum_flat_sequence_bounded(grid32):
    params = BesovParams(THIRD, 2.0)
    qs = np.arange(-1, grid32.q_max + 1)
    sums = localized_sum(vf.ShellCoefficients(params, qs, np.ones(len(qs))))
    assert np.all(sums.values <= kernel_sum(THIRD))
    # lower bound: the m = 0 kernel term alone gives D_Q >= d_Q = 1
    assert np.all(sums.values >= 1.0)


def test_tail_comparability_synthetic(grid32):
    # sup over the tail of D and of d agree within the kernel-sum constants
    params = BesovParams(THIRD, 2.0)
    qs = np.arange(-1, grid32.q_max + 1)
    rng = np.random.default_rng(5)
    d = rng.uniform(0.1, 2.0, len(qs))
    sums = localized_sum(vf.ShellCoefficients(params, qs, d))
    q0 = 2
    sup_d_tail = d[qs >= q0].max()
    sup_d_all = d.max()
    sup_D_tail = sums.values[qs >= q0].max()
    assert sup_D_tail >= sup_d_tail            # K_0 = 1 term alone
    assert sup_D_tail <= kernel_sum(THIRD) * sup_d_all


def test_tail_decay_fit(grid64, sharp):
    f = vf.random_besov(grid64, THIRD, 3.0, sigma=THIRD, seed=13)
    coeffs = shell_coefficients(f, BesovParams(THIRD, 3.0), sharp)
    slope = tail_decay_slope(coeffs, 1, grid64.q_max - 1)
    assert slope == pytest.approx(-THIRD, abs=1e-6)


def test_holder_conjugate():
    assert holder_conjugate(2.0, 2.0) == 1.0
    assert holder_conjugate(math.inf, 3.0) == 3.0
    assert holder_conjugate(math.inf, math.inf) == math.inf
    with pytest.raises(ValidationError):
        holder_conjugate(1.0, 1.0)


def test_estimates_constant_field_trivial(grid32, smooth):
    f = vf.constant_field(grid32, 2.0)
    g = vf.random_besov(grid32, 0.4, 4.0, 0.2, seed=21)
    rep = vf.verify_kernel_estimates(f, g, 0.4, 0.3, 4.0, 4.0,
                                     range(2, grid32.q_max - 1), smooth)
    qs, ratios = rep.ratios("commutator")
    # (fg)_{<=Q} - f_{<=Q} g_{<=Q} = 0 when f is constant
    assert np.all(ratios <= 1e-10)


def test_estimates_single_mode_closed_form(grid32, sharp):
    # f = g a single shell-5-free mode in shell 3; at q_cut 1 everything is high-pass
    f = vf.single_mode_scalar(grid32, [5, 0])
    rep = vf.verify_kernel_estimates(f, f, 0.4, 0.4, 2.0, 2.0, [1], sharp)
    row = [r for r in rep.rows if r.estimate == "tail"][0]
    lam = vf.lambda_q(1)
    d3 = vf.lambda_q(3) ** 0.4 * vf.lp_norm(f, 2.0)
    expected_rhs = lam ** -0.4 * float(kernel_weight(0.4, 1 - 3)) * d3
    assert row.lhs == pytest.approx(vf.lp_norm(f, 2.0), rel=1e-12)
    assert row.rhs == pytest.approx(expected_rhs, rel=1e-12)
    assert np.isfinite(row.ratio)


def test_estimates_bounded_on_random_fields(grid64):
    for kind in ("smooth", "sharp"):
        cut = vf.make_cutoff(kind)
        f = vf.random_besov(grid64, 0.4, 4.0, 0.4, seed=31)
        g = vf.random_besov(grid64, 0.3, 4.0, 0.3, seed=32)
        rep = vf.verify_kernel_estimates(f, g, 0.4, 0.3, 4.0, 4.0,
                                         range(2, grid64.q_max - 1), cut)
        assert rep.failures == []
        for est in ("commutator", "endpoint", "gradient_low", "tail", "product_gradient"):
            assert rep.max_ratio(est) < 10.0


def test_tail_estimate_constant_is_one(grid64, cutoff):
    # ||f_{>Q}||_a <= lambda_Q^{-s} D_Q holds with constant 1 (triangle inequality)
    f = vf.random_besov(grid64, 0.4, 2.0, 0.1, seed=35)
    rep = vf.verify_kernel_estimates(f, f, 0.4, 0.4, 2.0, 2.0,
                                     range(0, grid64.q_max - 1), cutoff)
    _, ratios = rep.ratios("tail")
    assert np.all(ratios <= 1.0 + 1e-10)


def test_estimate_report_growth_flag():
    rep = EstimateReport()
    for q in range(3, 8):
        rep.rows.append(vf.besov.EstimateRow(q, "tail", 2.0 ** q, 1.0))
    assert rep.growing("tail")
    assert rep.failures == ["tail"]


def test_estimate_constants_stable_under_grid_doubling():
    # measured constants at N and 2N agree within a modest factor
    worst = {}
    for n in (64, 128):
        g = vf.TorusGrid(2, n)
        cut = vf.make_cutoff("smooth")
        f = vf.random_besov(g, THIRD, 6.0, THIRD, seed=301)
        h = vf.random_besov(g, THIRD, 6.0, 0.25, seed=401)
        rep = vf.verify_kernel_estimates(f, h, THIRD, THIRD, 6.0, 6.0,
                                         range(3, g.q_max - 1), cut)
        worst[n] = {e: rep.max_ratio(e) for e in
                    ("commutator", "endpoint", "gradient_low", "tail", "product_gradient")}
    for est in worst[64]:
        lo, hi = sorted((worst[64][est], worst[128][est]))
        assert hi <= 2.0 * max(lo, 1e-6), (est, worst)
