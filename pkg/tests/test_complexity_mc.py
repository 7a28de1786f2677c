"""Monte Carlo complexity estimators: naive/importance-sampling agreement,
the exponential/empirical complexity chain, and codimension regression."""

import math

import numpy as np
import pytest

from bayescomplex.complexity import (
    CodimQuery,
    chi_from_q,
    codim_estimate,
    empirical_complexity_mc,
    exponential_complexity_mc,
    fit_limiting_slope,
    limiting_complexity,
    limiting_complexity_closed_form,
    sharp_complexity_is,
    sharp_complexity_mc,
    sharp_with_noise,
)
from bayescomplex.errors import ConfigError, InsufficientSamplesError
from bayescomplex.families import LinearFamily, LinearTarget, ShallowNetFamily
from bayescomplex.models import BasisSpec, LinearFunction, LinearModelParams
from bayescomplex.priors import LinearPriorSpec, NnPriorSpec
from bayescomplex.pwl import PwlFunction
from bayescomplex.rng import SeededRng


def _linear(d, sigma_w_sq=1.0):
    return LinearFamily(BasisSpec(d), LinearPriorSpec(sigma_w_sq))


def _joint_se(a, b):
    return math.hypot(a.std_err, b.std_err)


class TestSharpAgainstClosedForm:
    def test_naive_mc_matches_q(self):
        family = _linear(3)
        target = LinearTarget((1.0, 0.0, 0.0))
        exact = chi_from_q(1.0, 1.0, 0.09, 3)
        est = sharp_complexity_mc(family, target, 0.09, 200_000, SeededRng(42))
        assert est.n_hits >= 100
        assert abs(est.chi - exact.chi) <= 3 * est.std_err

    def test_importance_sampling_matches_q(self):
        family = _linear(3)
        target = LinearTarget((1.0, 0.0, 0.0))
        exact = chi_from_q(1.0, 1.0, 0.09, 3)
        est = sharp_complexity_is(family, target, 0.09, 100_000, SeededRng(42))
        assert est.n_hits >= 100
        assert abs(est.chi - exact.chi) <= 3 * est.std_err

    def test_workers_change_partition_not_meaning(self):
        family = _linear(2)
        target = LinearTarget((0.5, 0.5))
        a = sharp_complexity_mc(family, target, 0.16, 50_000, SeededRng(3), workers=1)
        b = sharp_complexity_mc(family, target, 0.16, 50_000, SeededRng(3), workers=4)
        assert abs(a.chi - b.chi) <= 3 * _joint_se(a, b)

    def test_eps_sq_validation(self):
        family = _linear(2)
        with pytest.raises(ConfigError):
            sharp_complexity_mc(family, LinearTarget((1.0, 0.0)), 0.0, 10, SeededRng(1))
        with pytest.raises(ConfigError):
            sharp_complexity_is(family, LinearTarget((1.0, 0.0)), -0.1, 10, SeededRng(1))


class TestEstimatorConsistencyBattery:
    """Naive MC and importance sampling agree within 3 joint standard errors
    whenever both record at least 100 hits, over 20 randomized triples."""

    def test_twenty_triples(self):
        gen = np.random.default_rng(42)
        checked = 0
        for trial in range(20):
            rng = SeededRng(1000 + trial)
            if trial % 2 == 0:
                d = int(gen.integers(2, 5))
                kappa = float(gen.uniform(0.0, 1.2))
                eps_sq = float(gen.uniform(0.3, 0.6)) ** 2
                family = _linear(d)
                w = np.zeros(d)
                w[0] = kappa
                target = LinearTarget(tuple(w))
            else:
                k = int(gen.integers(1, 3))
                eps_sq = float(gen.uniform(0.3, 0.5)) ** 2
                t = float(gen.uniform(0.2, 0.8))
                v = float(gen.uniform(-1.0, 1.0))
                knots = ((t, v),) if abs(v) > 1e-3 else ()
                family = ShallowNetFamily(k, NnPriorSpec.default_for(k))
                target = PwlFunction(bias=float(gen.uniform(-0.3, 0.3)), knots=knots)
            mc = sharp_complexity_mc(family, target, eps_sq, 60_000, rng.stream(0))
            is_ = sharp_complexity_is(family, target, eps_sq, 40_000, rng.stream(1))
            assert mc.n_hits >= 100 and is_.n_hits >= 100, f"trial {trial} starved"
            gap = abs(mc.chi - is_.chi)
            assert gap <= 3 * _joint_se(mc, is_), (
                f"trial {trial}: mc={mc.chi:.4f} is={is_.chi:.4f} "
                f"gap={gap:.4f} > 3*{_joint_se(mc, is_):.4f}"
            )
            checked += 1
        assert checked == 20


class TestZeroHits:
    def test_rule_of_three_estimate(self):
        family = _linear(3)
        est = sharp_complexity_mc(
            family, LinearTarget((1.0, 0.0, 0.0)), 1e-8, 1000, SeededRng(42)
        )
        assert est.zero_hits
        assert est.chi == pytest.approx(math.log(1000 / 3.0))
        assert est.std_err == math.inf

    def test_flagged_point_rejected_by_slope_fit(self):
        family = _linear(3)
        est = sharp_complexity_mc(
            family, LinearTarget((1.0, 0.0, 0.0)), 1e-8, 1000, SeededRng(42)
        )
        good = chi_from_q(1.0, 1.0, 0.04, 3)
        with pytest.raises(InsufficientSamplesError):
            fit_limiting_slope([good, good, est], (0.3, 0.2, 1e-4))

    def test_limiting_complexity_raises_when_starved(self):
        # perp_sq exceeds the smallest grid radius squared, so that point's
        # event is empty and the estimator must flag it.
        family = _linear(2)
        target = LinearTarget((0.5, 0.0), perp_sq=0.05)
        with pytest.raises(InsufficientSamplesError) as exc:
            limiting_complexity(family, target, (0.4, 0.3, 0.1), 2000, SeededRng(42))
        assert "0.1" in str(exc.value)


class TestLimitingComplexityLinear:
    def test_is_slope_matches_closed_form_on_same_grid(self):
        grid = (0.3, 0.2, 0.14)
        family = _linear(2)
        target = LinearTarget((1.0, 0.0))
        fit = limiting_complexity(family, target, grid, 60_000, SeededRng(42))
        exact = limiting_complexity_closed_form(1.0, 1.0, 2, grid)
        assert abs(fit.slope - exact.slope) <= 3.0 / 1.96 * fit.ci_halfwidth + 1e-9


class TestExponentialComplexity:
    def test_vanishing_penalty_limit(self):
        family = _linear(3)
        est = exponential_complexity_mc(
            family, LinearTarget((1.0, 0.0, 0.0)), 1e12, 20_000, SeededRng(42)
        )
        assert abs(est.chi) < 1e-9

    def test_gaussian_closed_form_oracle(self):
        """For the linear family, chi = -ln E[exp(-||w - w~||^2 beta)] with
        beta = 1/(4 sigma_y^2) factorizes into per-coordinate Gaussian
        integrals (1 + 2 beta s^2)^(-1/2) exp(-beta mu^2/(1 + 2 beta s^2))."""
        d, sigma_y_sq, s_sq = 3, 0.05, 1.0
        w_t = np.array([1.0, -0.5, 0.25])
        beta = 1.0 / (4.0 * sigma_y_sq)
        denom = 1.0 + 2.0 * beta * s_sq
        chi_exact = 0.5 * d * math.log(denom) + float(beta * (w_t @ w_t) / denom)
        family = _linear(d, s_sq)
        est = exponential_complexity_mc(
            family, LinearTarget(tuple(w_t)), sigma_y_sq, 400_000, SeededRng(42)
        )
        assert abs(est.chi - chi_exact) <= 3 * est.std_err

    def test_chain_identity_on_shared_draws(self):
        family = _linear(3)
        target = LinearTarget((0.8, 0.3, 0.0))
        sigma_y_sq, sigma_e_sq = 0.2, 0.07
        plain = exponential_complexity_mc(family, target, sigma_y_sq, 30_000, SeededRng(9))
        noisy = exponential_complexity_mc(
            family, target, sigma_y_sq, 30_000, SeededRng(9), sigma_e_sq=sigma_e_sq
        )
        assert noisy.chi - plain.chi == pytest.approx(
            sigma_e_sq / (2.0 * sigma_y_sq), abs=1e-12
        )

    def test_temperature_validation(self):
        with pytest.raises(ConfigError):
            exponential_complexity_mc(
                _linear(2), LinearTarget((1.0, 0.0)), 0.0, 10, SeededRng(1)
            )


class TestEmpiricalComplexity:
    def test_argument_validation(self):
        family = _linear(2)
        xs = np.array([0.1, 0.2])
        with pytest.raises(ConfigError):
            empirical_complexity_mc(family, lambda x: x, xs, np.zeros(3), 0.1, 10, SeededRng(1))
        with pytest.raises(ConfigError):
            empirical_complexity_mc(
                family, lambda x: x, np.array([]), np.array([]), 0.1, 10, SeededRng(1)
            )
        with pytest.raises(ConfigError):
            empirical_complexity_mc(family, lambda x: x, xs, np.zeros(2), 0.0, 10, SeededRng(1))

    def test_dataset_average_below_population_version(self):
        """mean_S chi^E(S) <= chi^N at matched temperature: averaging the
        dataset before the log-mean-exp can only increase the value."""
        d, n_pts, sigma_e_sq, temp = 2, 5, 0.01, 0.1
        family = _linear(d)
        w_t = (0.7, -0.4)
        target = LinearTarget(w_t)
        lin = LinearFunction(LinearModelParams(w_t), BasisSpec(d))
        root = SeededRng(42)
        chis = []
        for s in range(50):
            gen = root.stream(s).generator()
            xs = gen.uniform(-1.0, 1.0, size=n_pts)
            noise = gen.normal(0.0, math.sqrt(sigma_e_sq), size=n_pts)
            est = empirical_complexity_mc(
                family, lin, xs, noise, temp, 20_000, root.stream(500 + s)
            )
            chis.append(est.chi)
        mean_emp = float(np.mean(chis))
        se_emp = float(np.std(chis, ddof=1) / math.sqrt(len(chis)))
        pop = exponential_complexity_mc(
            family, target, temp, 200_000, root.stream(999), sigma_e_sq=sigma_e_sq
        )
        assert mean_emp <= pop.chi + 3 * math.hypot(se_emp, pop.std_err), (
            f"mean chi^E {mean_emp:.4f} vs chi^N {pop.chi:.4f}"
        )

    def test_more_draws_find_more_mass(self):
        """With a realizable target and low temperature the value is carried
        by rare draws near the representation set; small budgets miss that
        mass and overestimate, so the mean estimate decreases in n."""
        family = _linear(2)
        lin = LinearFunction(LinearModelParams((0.5, 0.5)), BasisSpec(2))
        gen = SeededRng(7).generator()
        xs = gen.uniform(-1.0, 1.0, size=4)
        noise = np.zeros(4)
        small = np.array([
            empirical_complexity_mc(family, lin, xs, noise, 1e-4, 2_000, SeededRng(100 + i)).chi
            for i in range(40)
        ])
        large = np.array([
            empirical_complexity_mc(family, lin, xs, noise, 1e-4, 50_000, SeededRng(100 + i)).chi
            for i in range(40)
        ])
        gap = float(small.mean() - large.mean())
        se = math.hypot(small.std(ddof=1), large.std(ddof=1)) / math.sqrt(40)
        assert gap > 3 * se, f"gap {gap:.3f} vs 3 SE {3 * se:.3f}"


class TestTrueVersusSharp:
    def test_inequality_on_shared_draws(self):
        """chi^N <= chi#(eps^2 - sigma_e^2) + eps^2/(2 sigma_y^2): on shared
        parameter draws every hit contributes at least exp(-eps^2/(2s^2)) to
        the exponential average, so the inequality holds deterministically."""
        gen = np.random.default_rng(42)
        for trial in range(10):
            d = int(gen.integers(2, 4))
            kappa = float(gen.uniform(0.0, 1.0))
            sigma_y_sq = float(gen.uniform(0.05, 0.5))
            sigma_e_sq = float(gen.uniform(0.0, 0.02))
            eps_sq = float(gen.uniform(0.35, 0.65)) ** 2
            family = _linear(d)
            w = np.zeros(d)
            w[0] = kappa
            target = LinearTarget(tuple(w))
            seed = SeededRng(2000 + trial)
            chi_n = exponential_complexity_mc(
                family, target, sigma_y_sq, 100_000, seed, sigma_e_sq=sigma_e_sq
            )
            sharp = sharp_with_noise(
                lambda e2: sharp_complexity_mc(family, target, e2, 100_000, seed),
                sigma_e_sq,
                eps_sq,
            )
            assert not sharp.infinite and sharp.n_hits >= 100
            bound = sharp.chi + eps_sq / (2.0 * sigma_y_sq)
            assert chi_n.chi <= bound + 1e-12, f"trial {trial}"
            assert chi_n.chi <= bound + 3 * _joint_se(chi_n, sharp)


class TestSharpWithNoiseDualPath:
    def test_mc_path_agrees_with_closed_form_path(self):
        family = _linear(3)
        target = LinearTarget((1.0, 0.0, 0.0))
        sigma_e_sq, eps_sq = 0.02, 0.11
        mc_path = sharp_with_noise(
            lambda e2: sharp_complexity_mc(family, target, e2, 300_000, SeededRng(5)),
            sigma_e_sq,
            eps_sq,
        )
        exact_path = sharp_with_noise(
            lambda e2: chi_from_q(1.0, 1.0, e2, 3), sigma_e_sq, eps_sq
        )
        assert abs(mc_path.chi - exact_path.chi) <= 3 * mc_path.std_err
        assert mc_path.epsilon_sq == eps_sq

    def test_zero_noise_is_identity(self):
        family = _linear(2)
        target = LinearTarget((0.5, 0.0))
        direct = sharp_complexity_mc(family, target, 0.09, 50_000, SeededRng(8))
        shifted = sharp_with_noise(
            lambda e2: sharp_complexity_mc(family, target, e2, 50_000, SeededRng(8)),
            0.0,
            0.09,
        )
        assert shifted.chi == direct.chi


class TestRelationToLimitingSlope:
    def test_chi_over_slope_log_eps_approaches_one(self):
        """chi#(eps^2) / (d * ln(1/eps)) -> 1: within 15% already at
        eps^2 in {1e-2, 1e-3, 1e-4}, with the gap shrinking monotonically."""
        d = 3
        ratios = []
        for eps_sq in (1e-2, 1e-3, 1e-4):
            chi = chi_from_q(1.0, 1.0, eps_sq, d).chi
            ratios.append(chi / (-0.5 * d * math.log(eps_sq)))
        for r in ratios:
            assert abs(r - 1.0) <= 0.15, f"ratios {ratios}"
        gaps = [abs(r - 1.0) for r in ratios]
        assert gaps[0] >= gaps[1] >= gaps[2]


class TestCodim:
    def test_constant_target_codim_one(self):
        """For a constant target only the output bias is pinned: nodes are
        free to sit inactive (b1 > 1) at positive prior volume, so the
        neighborhood volume scales like eps^1."""
        g = PwlFunction(bias=0.2)
        prior = NnPriorSpec(sigma_w_sq=1.0, M=2.0, sigma_b_sq=1.0)
        fit = codim_estimate(CodimQuery(g, k=1), prior, 250_000, SeededRng(42))
        assert abs(fit.slope - 1.0) <= 0.3, f"slope {fit.slope}"

    def test_budget_validation_and_note(self):
        g1 = PwlFunction(bias=0.0, knots=((0.4, 1.0),))
        prior = NnPriorSpec.default_for(2)
        with pytest.raises(ConfigError):
            codim_estimate(CodimQuery(g1, k=0), prior, 100, SeededRng(1))
        with pytest.raises(ConfigError):
            codim_estimate(CodimQuery(g1, k=3), prior, 100, SeededRng(1))
        fit = codim_estimate(
            CodimQuery(PwlFunction(bias=0.1), k=1, eps_grid=(0.5, 0.4, 0.3)),
            NnPriorSpec(sigma_w_sq=1.0, M=2.0, sigma_b_sq=1.0),
            20_000,
            SeededRng(2),
        )
        assert fit.note == "upper-bound-based"

    def test_codimension_sandwiches_limiting_slope(self):
        """codim/(2k+3) <= limiting slope <= codim for the one-knot target
        with k = 1, up to the fitted confidence intervals."""
        g = PwlFunction(bias=0.0, knots=((0.35, 1.0),))
        prior = NnPriorSpec.default_for(1)
        family = ShallowNetFamily(1, prior)
        codim = codim_estimate(CodimQuery(g, k=1), prior, 300_000, SeededRng(42))
        slope = limiting_complexity(family, g, (0.2, 0.14, 0.1), 120_000, SeededRng(7))
        joint = codim.ci_halfwidth + slope.ci_halfwidth
        assert codim.slope / 5.0 - joint <= slope.slope <= codim.slope + joint, (
            f"codim {codim.slope:.3f}±{codim.ci_halfwidth:.3f}, "
            f"slope {slope.slope:.3f}±{slope.ci_halfwidth:.3f}"
        )
