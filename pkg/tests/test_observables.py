import math
import warnings

import numpy as np
import pytest
from scipy.integrate import solve_ivp
from scipy.special import i0e

from gaugerotor.engine import EnsembleResult
from gaugerotor.modulation import build_experimental_sequence, predict_peak_times
from gaugerotor.observables import (
    CfsFit,
    beta_theory,
    estimate_beta_of_g,
    estimate_d0,
    extract_contrasts,
    fit_cbs_decay,
    fit_cfs_contrast,
)

SEQ = build_experimental_sequence(4.0, phi_tilde=0.0, a=1.3)


def synth_result(pi0, se=1e-9):
    """Wrap a bare Pi0 series in an EnsembleResult for contrast tests."""
    pi0 = np.asarray(pi0, dtype=float)
    times = np.arange(pi0.size)
    return EnsembleResult(times, pi0, np.full(pi0.size, se), np.zeros(pi0.size),
                          np.array([0]), np.zeros(1), np.zeros((1, 1)))


def peaked_series(horizon, contrast, background=None):
    """Power-law background with equal CBS and CFS peaks injected."""
    t = np.arange(horizon + 1, dtype=float)
    pi0 = np.empty(horizon + 1)
    pi0[0] = 1.0
    if background is None:
        pi0[1:] = 0.4 * t[1:] ** -0.5
    else:
        pi0[1:] = background(t[1:])
    cbs_t, cfs_t = predict_peak_times(SEQ, horizon)
    for tt in list(cbs_t) + list(cfs_t):
        pi0[tt] *= 1.0 + contrast
    return synth_result(pi0)


class TestExtractContrasts:
    def test_flat_series_gives_zero_contrasts(self):
        res = synth_result(np.full(101, 0.1))
        series = extract_contrasts(res, SEQ)
        assert np.allclose(series.cbs, 0.0, atol=1e-12)
        assert np.allclose(series.cfs, 0.0, atol=1e-12)

    def test_single_cfs_peak_over_flat_background(self):
        pi0 = np.full(41, 0.1)
        pi0[10] = 0.2
        series = extract_contrasts(synth_result(pi0), SEQ)
        assert series.cfs_times[0] == 10
        assert series.cfs[0] == pytest.approx(1.0, abs=1e-9)

    def test_recovers_injected_contrast_on_power_law(self):
        series = extract_contrasts(peaked_series(100, 0.7), SEQ)
        assert np.allclose(series.cbs, 0.7, atol=1e-9)
        assert np.allclose(series.cfs, 0.7, atol=1e-9)

    def test_scale_invariance(self):
        res = peaked_series(100, 0.5)
        scaled = synth_result(res.pi0 * 37.2)
        a = extract_contrasts(res, SEQ)
        b = extract_contrasts(scaled, SEQ)
        assert np.allclose(a.cbs, b.cbs, atol=1e-12)
        assert np.allclose(a.cfs, b.cfs, atol=1e-12)

    def test_standard_error_propagates_through_background(self):
        pi0 = np.full(41, 0.1)
        res = EnsembleResult(np.arange(41), pi0, np.full(41, 0.02),
                             np.zeros(41), np.array([0]), np.zeros(1),
                             np.zeros((1, 1)))
        series = extract_contrasts(res, SEQ)
        assert np.allclose(series.cbs_se, 0.2, rtol=1e-9)

    def test_short_horizon_rejected(self):
        with pytest.raises(ValueError):
            extract_contrasts(synth_result(np.full(13, 0.1)), SEQ)


class TestFitCbsDecay:
    def test_exact_exponential_recovered(self):
        def background(t):
            return 0.4 * t ** -0.5

        res = peaked_series(400, 0.0, background)
        pi0 = res.pi0.copy()
        cbs_t, _ = predict_peak_times(SEQ, 400)
        for tt in cbs_t:
            pi0[tt] *= 1.0 + 0.45 * math.exp(-tt / 190.0)
        series = extract_contrasts(synth_result(pi0), SEQ)
        t_dec, c0 = fit_cbs_decay(series)
        assert t_dec == pytest.approx(190.0, rel=1e-6)
        assert c0 == pytest.approx(0.45, rel=1e-6)

    def test_constant_contrast_gives_infinite_decay_time(self):
        series = extract_contrasts(peaked_series(200, 0.6), SEQ)
        t_dec, c0 = fit_cbs_decay(series)
        assert math.isinf(t_dec)
        assert c0 == pytest.approx(0.6, rel=1e-6)

    def test_rejects_series_below_noise_floor(self):
        series = extract_contrasts(peaked_series(100, 0.01), SEQ)
        with pytest.raises(ValueError):
            fit_cbs_decay(series)


class TestFitCfsContrast:
    def make_series(self, c0, t_loc, horizon, noise, t_dec=math.inf, seed=5):
        def background(t):
            return 0.4 * t ** -0.5

        res = peaked_series(horizon, 0.0, background)
        pi0 = res.pi0.copy()
        rng = np.random.default_rng(seed)
        _, cfs_t = predict_peak_times(SEQ, horizon)
        for tt in cfs_t:
            c = c0 * i0e(2.0 * t_loc / tt) * math.exp(-tt / t_dec)
            pi0[tt] *= 1.0 + c * (1.0 + noise * rng.standard_normal())
        return extract_contrasts(synth_result(pi0), SEQ)

    def test_round_trip_with_one_percent_noise(self):
        series = self.make_series(0.45, 40.0, 1000, 0.01)
        fit = fit_cfs_contrast(series, SEQ.period)
        assert fit.t_loc == pytest.approx(40.0, rel=0.10)
        assert fit.c0 == pytest.approx(0.45, rel=0.05)
        assert fit.r_squared > 0.99

    def test_noiseless_round_trip_is_tight(self):
        series = self.make_series(0.45, 40.0, 1000, 0.0)
        fit = fit_cfs_contrast(series, SEQ.period)
        assert fit.t_loc == pytest.approx(40.0, rel=1e-4)
        assert fit.c0 == pytest.approx(0.45, rel=1e-4)

    def test_fixed_decay_time_round_trip(self):
        series = self.make_series(0.45, 40.0, 600, 0.0, t_dec=190.0)
        fit = fit_cfs_contrast(series, SEQ.period, t_dec=190.0)
        assert fit.t_loc == pytest.approx(40.0, rel=1e-3)
        assert fit.t_dec == 190.0

    def test_evaluate_limits(self):
        fit = CfsFit(0.45, 40.0, 0.0, 0.0, 1.0, (10, 1000))
        # I0(x) e^{-x} -> 1 as the argument vanishes at late times
        assert fit.evaluate(1e9) == pytest.approx(0.45, rel=1e-4)
        # at t = 2 t_loc the law evaluates to C0 I0(1) e^{-1}
        expected = 0.45 * i0e(1.0)
        assert fit.evaluate(80.0) == pytest.approx(expected, rel=1e-12)
        assert expected == pytest.approx(0.45 * 0.4658, rel=1e-3)

    def test_flat_degenerate_series_rejected(self):
        series = extract_contrasts(synth_result(np.full(51, 0.1)), SEQ)
        with pytest.raises(ValueError):
            fit_cfs_contrast(series, SEQ.period)


class TestEstimateD0:
    def test_exact_line(self):
        t = np.arange(0, 60)
        d0 = estimate_d0(t, 2.0 * 3.0 * t)
        assert d0 == pytest.approx(3.0, rel=1e-12)

    def test_curvature_warning(self):
        t = np.arange(0, 200, dtype=float)
        p2 = 100.0 * (1.0 - np.exp(-t / 40.0))
        with pytest.warns(UserWarning):
            estimate_d0(t, p2)

    def test_too_few_points_rejected(self):
        with pytest.raises(ValueError):
            estimate_d0(np.arange(3), np.arange(3.0))


class TestBetaTheory:
    def test_ohmic_limit(self):
        assert beta_theory(1e-12, True) == pytest.approx(-1.0, abs=1e-9)
        assert beta_theory(1e-12, False) == pytest.approx(-1.0, abs=1e-9)

    def test_unitary_at_g_two(self):
        assert beta_theory(0.5, False) == pytest.approx(-1.125, rel=1e-12)

    def test_orthogonal_at_g_two(self):
        expected = -1.0 - 4.0 * math.sqrt(2.0) / (6.0 * math.sqrt(math.pi))
        assert beta_theory(0.5, True) == pytest.approx(expected, rel=1e-12)

    def test_orthogonal_below_unitary_and_monotone(self):
        inv_g = np.linspace(0.01, 1.5, 50)
        orth = beta_theory(inv_g, True)
        unit = beta_theory(inv_g, False)
        assert np.all(orth < unit)
        # beta rises toward -1 as g grows, for both classes
        assert np.all(np.diff(orth) < 0)
        assert np.all(np.diff(unit) < 0)


class TestEstimateBetaOfG:
    def test_pure_diffusion_gives_minus_one(self):
        t = np.arange(0, 2001)
        p2 = 2.0 * 5.0 * t.astype(float)
        curve = estimate_beta_of_g(t, p2, period=4, kbar=1.0)
        assert np.allclose(curve.beta, -1.0, atol=1e-8)

    def test_localized_plateau_truncates_with_warning(self):
        t = np.arange(0, 2001, dtype=float)
        p2 = 100.0 * (1.0 - np.exp(-t / 30.0))
        p2[0] = 1e-3
        with pytest.warns(UserWarning):
            curve = estimate_beta_of_g(t, p2, period=4, kbar=1.0)
        assert curve.beta.size > 0

    def test_full_saturation_rejected(self):
        t = np.arange(0, 2001, dtype=float)
        with pytest.raises(ValueError):
            estimate_beta_of_g(t, np.full(t.size, 50.0), period=4, kbar=1.0)

    def test_forward_integration_round_trip(self):
        """Integrate d ln g / d ln L = -1 - 1/(2 g^2) forward, then check
        the estimator recovers the generating curve."""
        period, kbar, d0 = 4, 1.0, 2.0
        u0 = 0.5 * math.log(2.0 * d0)

        def rhs(u, lnt):
            ln_g = math.log(period) + u - lnt[0]
            return [1.0 - beta_theory(math.exp(-ln_g), False)]

        sol = solve_ivp(rhs, (u0, u0 + 6.0), [0.0], dense_output=True,
                        rtol=1e-10, atol=1e-12)
        u_grid = np.linspace(u0, sol.t[-1], 20000)
        lnt_grid = sol.sol(u_grid)[0]
        t = np.arange(1, int(math.exp(lnt_grid[-1])))
        u_of_t = np.interp(np.log(t), lnt_grid, u_grid)
        p2 = np.exp(2.0 * u_of_t) * kbar ** 2
        p2 = np.concatenate([[1e-6], p2])
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            curve = estimate_beta_of_g(np.arange(p2.size), p2, period, kbar)
        resid = curve.beta - beta_theory(curve.inv_g, False)
        assert math.sqrt(np.mean(resid ** 2)) < 0.05
