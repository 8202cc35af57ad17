import itertools
import math

import numpy as np
import pytest
import scipy.special as sc
import scipy.stats as st

from levylab.core import BaseSpace, StepFunction
from levylab.models import GammaModel, StableModel
from levylab.rng import RandomStream
from levylab.samplers import (
    TruncationPolicy,
    sample_cpd_batch,
    sample_levy_batch,
    sample_pd_theta_batch,
)
from levylab.stats import (
    holm_adjust,
    holm_pass,
    independence_test,
    kolmogorov_sf,
    ks_one_sample,
    ks_two_sample,
    mc_estimate,
    quasi_invariance_check,
    quasi_lebesgue_invariance_check,
    stable_tail_constant,
    subordination_test,
    summarize,
    tail_slope,
    weak_limit_test,
    weighted_mc_estimate,
)

BASE1 = BaseSpace(1.0)


def gamma_sampler(theta=1.0):
    return lambda stream, m: sample_levy_batch(
        GammaModel(), BaseSpace(theta), m, TruncationPolicy(), stream
    )


class TestEstimators:
    def test_constant_statistic_has_zero_se(self):
        summ = mc_estimate(lambda eta: 1.0, gamma_sampler(), 100, 1, reference=1.0)
        assert summ.se == 0.0 and summ.verdict == "pass"

    def test_total_charge_mean(self):
        summ = mc_estimate(
            lambda d: d.totals, gamma_sampler(2.0), 20_000, 2, reference=2.0, vectorized=True
        )
        assert summ.verdict == "pass"
        assert abs(summ.mean - 2.0) < 3 * summ.se

    def test_laplace_point_value(self):
        summ = mc_estimate(
            lambda d: np.exp(-d.totals), gamma_sampler(1.0), 20_000, 3,
            reference=0.5, vectorized=True,
        )
        assert summ.verdict == "pass"

    def test_scalar_and_batch_paths_agree(self):
        a = mc_estimate(lambda eta: eta.total_charge, gamma_sampler(), 500, 4)
        b = mc_estimate(lambda d: d.totals, gamma_sampler(), 500, 4, vectorized=True)
        assert a.mean == pytest.approx(b.mean, rel=1e-12)

    def test_weighted_estimate_matches_unweighted_for_unit_weights(self):
        def wsampler(stream, m):
            d = sample_levy_batch(GammaModel(), BASE1, m, TruncationPolicy(), stream)
            return d, np.ones(m)

        a = weighted_mc_estimate(lambda d: d.totals, wsampler, 2_000, 5, vectorized=True)
        b = mc_estimate(lambda d: d.totals, gamma_sampler(), 2_000, 5, vectorized=True)
        assert a.mean == pytest.approx(b.mean, rel=1e-12)
        assert a.se == pytest.approx(b.se, rel=1e-9)
        assert a.ess == pytest.approx(2_000.0)

    def test_low_ess_downgrades_verdict(self):
        def wsampler(stream, m):
            d = sample_levy_batch(GammaModel(), BASE1, m, TruncationPolicy(), stream)
            w = np.exp(-8.0 * d.totals)  # brutal weights -> tiny ESS
            return d, w

        summ = weighted_mc_estimate(
            lambda d: np.zeros(len(d)), wsampler, 4_000, 6, reference=0.0, vectorized=True
        )
        assert summ.verdict == "warn"


class TestKolmogorovSmirnov:
    def test_identical_samples_give_zero_statistic(self):
        x = np.array([0.1, 0.4, 0.9])
        d, p = ks_two_sample(x, x.copy())
        assert d == 0.0 and p == 1.0

    def test_asymptotic_sf_matches_scipy(self):
        for t in (0.3, 0.5, 1.0, 1.5, 2.0):
            assert kolmogorov_sf(t) == pytest.approx(float(sc.kolmogorov(t)), abs=1e-12)

    def test_two_sample_statistic_matches_scipy(self):
        x = RandomStream(7).uniform(257)
        y = RandomStream(8).uniform(123) * 1.1
        d, _ = ks_two_sample(x, y)
        assert d == pytest.approx(st.ks_2samp(x, y).statistic, abs=1e-14)

    def test_exact_pvalue_equals_brute_force_enumeration(self):
        # oracle: enumerate all interleavings of the pooled sample
        def brute(n, m, d_obs):
            hits = 0
            total = 0
            for picks in itertools.combinations(range(n + m), n):
                picks = set(picks)
                i = j = 0
                dmax = 0.0
                for pos in range(n + m):
                    if pos in picks:
                        i += 1
                    else:
                        j += 1
                    dmax = max(dmax, abs(i / n - j / m))
                total += 1
                if dmax >= d_obs - 1e-12:
                    hits += 1
            return hits / total

        stream = RandomStream(9)
        for n, m in [(4, 4), (5, 3), (6, 6), (7, 4)]:
            x = stream.uniform(n)
            y = stream.uniform(m)
            d, p_exact = ks_two_sample(x, y, mode="exact")
            assert p_exact == pytest.approx(brute(n, m, d), abs=1e-12)

    def test_one_sample_statistic_matches_brute_force(self):
        x = RandomStream(10).uniform(9)
        d, _ = ks_one_sample(x, lambda v: v)
        xs = np.sort(x)
        n = xs.size
        want = max(
            max(abs((i + 1) / n - xs[i]), abs(i / n - xs[i])) for i in range(n)
        )
        assert d == pytest.approx(want, abs=1e-15)

    def test_gamma_totals_one_sample(self):
        draws = sample_levy_batch(GammaModel(), BASE1, 20_000, TruncationPolicy(), RandomStream(11))
        _, p = ks_one_sample(draws.totals, st.gamma(1.0).cdf)
        assert p > 0.01

    def test_power_distinguishes_different_shapes(self):
        a = RandomStream(12).gamma(1.0, 20_000)
        b = RandomStream(13).gamma(2.0, 20_000)
        _, p = ks_two_sample(a, b)
        assert p < 1e-6


class TestHolm:
    def test_adjustment_hand_example(self):
        adj = holm_adjust([0.01, 0.04, 0.03, 0.005])
        assert adj == pytest.approx([0.03, 0.04, 0.04, 0.02])

    def test_pass_logic(self):
        assert holm_pass([0.5, 0.9, 0.2])
        assert not holm_pass([0.5, 1e-5, 0.2])
        assert holm_pass([])


class TestIndependence:
    def test_self_dependence_fails(self):
        u = RandomStream(14).uniform(5_000)
        assert not independence_test(u, u).passed

    def test_independent_streams_pass(self):
        u = RandomStream(15).uniform(20_000)
        v = RandomStream(16).uniform(20_000)
        assert independence_test(u, v).passed

    def test_total_independent_of_normalized_functional(self):
        draws = sample_levy_batch(GammaModel(), BASE1, 20_000, TruncationPolicy(), RandomStream(17))
        a = StepFunction([0.5], [2.0, 0.5])
        rep = independence_test(draws.totals, draws.functional(a) / draws.totals)
        assert rep.passed

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            independence_test(np.ones(3), np.ones(4))


class TestWindowEstimators:
    def test_deterministic_slope_exact(self):
        z = np.exp(-0.5 * np.arange(1, 600))
        est = tail_slope(z, (100, 400))
        assert est.estimate == pytest.approx(-0.5, abs=1e-12)

    def test_cpd_slope(self):
        terms, _, _ = sample_cpd_batch(2.0, 200, 680, RandomStream(18))
        est = tail_slope(terms, (100, 400))
        assert abs(est.estimate + 0.5) < 0.05

    def test_pd_slope(self):
        sticks, _ = sample_pd_theta_batch(1.0, 200, 620, RandomStream(19))
        est = tail_slope(sticks, (100, 400))
        assert abs(est.estimate + 1.0) < 0.1

    def test_deterministic_tail_constant_exact(self):
        lam, alpha = 1.7, 0.5
        z = lam * np.arange(1.0, 1201.0) ** (-1.0 / alpha)
        est = stable_tail_constant(z, alpha, (250, 1000))
        assert est.estimate == pytest.approx(lam, rel=1e-12)
        assert not est.flagged

    def test_stable_tail_constant_monte_carlo(self):
        n_draws, alpha, c = 200, 0.5, 1.0
        draws = sample_levy_batch(
            StableModel(alpha, c),
            BASE1,
            n_draws,
            TruncationPolicy(max_atoms=1100, tail_mass_cap=0.0),
            RandomStream(20),
        )
        Z = draws.charges.reshape(n_draws, 1100)
        est = stable_tail_constant(Z, alpha, (250, 1000))
        target = 1.0 / math.pi
        assert abs(est.estimate - target) / target < 0.05

    def test_wrong_regime_flagged(self):
        terms, _, _ = sample_cpd_batch(2.0, 50, 680, RandomStream(21))
        est = stable_tail_constant(terms, 0.5, (100, 400))
        assert est.flagged


class TestChangeOfVariablesChecks:
    def test_unit_multiplier_is_streamwise_identity(self):
        rep = quasi_invariance_check(StepFunction.constant(1.0), 1.0, 2_000, 22)
        assert rep.rows[0].lhs == 0.0 and rep.rows[0].se == 0.0

    def test_constant_multiplier_closed_form(self):
        # both sides estimate the Laplace value at 2, i.e. 1/3 for theta=1
        rep = quasi_invariance_check(StepFunction.constant(2.0), 1.0, 30_000, 23)
        assert rep.passed
        assert rep.extras["lhs_mean"] == pytest.approx(1.0 / 3.0, abs=0.01)
        assert rep.extras["rhs_mean"] == pytest.approx(1.0 / 3.0, abs=0.01)

    def test_step_panel_passes(self):
        rep = quasi_invariance_check(StepFunction([0.5], [1.3, 0.8]), 1.0, 30_000, 24)
        assert rep.passed

    def test_quasi_lebesgue_invariance_for_zero_log(self):
        a = StepFunction([0.5], [2.0, 0.5])
        rep = quasi_lebesgue_invariance_check(a, 1.0, 30_000, 25)
        assert rep.passed

    def test_quasi_lebesgue_detects_nonzero_log(self):
        rep = quasi_lebesgue_invariance_check(StepFunction.constant(2.0), 1.0, 30_000, 26)
        assert not rep.passed


class TestSubordination:
    def test_variance_and_ks(self):
        rep = subordination_test((1.0,), 30_000, 27)
        assert rep.rows[0].passed
        assert rep.extras["pass_ks_holm"]
        assert rep.extras["pass_power_control"]

    def test_degenerate_time_collapses_to_zero(self):
        stream = RandomStream(28)
        t = 1e-4
        x = np.sqrt(stream.gamma(t, 2_000)) * stream.normal(2_000)
        y = (stream.gamma(t, 2_000) - stream.gamma(t, 2_000)) / math.sqrt(2.0)
        # at t -> 0 both marginals put nearly all mass at 0
        assert np.quantile(np.abs(x), 0.99) < 0.15
        assert np.quantile(np.abs(y), 0.99) < 0.15


class TestWeakLimit:
    def test_per_alpha_targets_at_unit_k(self):
        rep = weak_limit_test((0.4, 0.1), 1.0, (20_000, 20_000), 29, k=1.0, final_tol=0.05)
        assert all(r.passed for r in rep.rows)
        assert rep.extras["pass_monotone_decrease"]

    def test_summarize_verdicts(self):
        s = summarize(np.array([1.0, 1.1, 0.9]), reference=1.0)
        assert s.verdict == "pass"
        s = summarize(np.array([1.0, 1.1, 0.9]), reference=5.0)
        assert s.verdict == "fail"
