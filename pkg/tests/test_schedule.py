import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import param_oracle
from ipds_admm.schedule import (
    BETA0_RHO_MULTIPLIER,
    RADMM_BETA_RHO_MULTIPLIER,
    FixedSchedule,
    IpdsSchedule,
    ParameterInfeasible,
    Regime,
    RegimeViolation,
    ScheduleError,
    derived_constants,
    experiment_defaults,
    select_params,
)


def sched(beta0=1.0, xi=0.5, p=1 / 3, delta=0.25, lam=1.0, L=None):
    return IpdsSchedule(beta0, xi, p, delta, lam, L)


class TestPenalty:
    def test_start(self):
        assert sched(beta0=3.7).beta_at(0) == 3.7

    def test_first_step(self):
        s = sched()
        assert s.beta_at(1) == 1.5
        assert s.beta_at(1) == 1.0 * (1.0 + 0.5 * 1.0)

    def test_cube_root_of_eight(self):
        assert sched().beta_at(8) == 2.0

    def test_negative_t(self):
        with pytest.raises(ValueError):
            sched().beta_at(-1)

    @pytest.mark.parametrize("xi", [0.1, 0.5, 2.0])
    @pytest.mark.parametrize("p", [0.2, 1 / 3, 0.8])
    def test_growth_sandwich(self, xi, p):
        s = sched(beta0=2.0, xi=xi, p=p)
        b = np.array([s.beta_at(t) for t in range(0, 20001)])
        assert np.all(b[:-1] <= b[1:])
        assert np.all(b[1:] <= (1 + xi) * b[:-1] * (1 + 1e-15))

    def test_initial_penalty_floor_enforced(self):
        with pytest.raises(ScheduleError):
            sched(beta0=1.0, delta=0.25, lam=2.0, L=0.6)
        s = sched(beta0=1.2, delta=0.25, lam=2.0, L=0.6)
        for t in range(0, 5000, 7):
            assert 0.6 <= s.delta * s.beta_at(t) * s.lambda_up

    @pytest.mark.parametrize(
        "kw", [dict(beta0=0.0), dict(xi=-1.0), dict(p=1.0), dict(p=0.0), dict(delta=1.0), dict(lam=0.0)]
    )
    def test_bad_parameters(self, kw):
        with pytest.raises(ScheduleError):
            sched(**kw)


class TestSmoothing:
    def test_example(self):
        assert sched(beta0=4.0, delta=0.25, lam=1.0).mu_at(0) == 1.0

    def test_nonincreasing(self):
        s = sched()
        mu = [s.mu_at(t) for t in range(10001)]
        assert all(a >= b for a, b in zip(mu, mu[1:]))

    @given(t=st.integers(0, 10**6), lam=st.floats(0.1, 10), delta=st.floats(0.01, 0.99))
    def test_reciprocal_identity(self, t, lam, delta):
        s = sched(lam=lam, delta=delta)
        assert math.isclose(1.0 / s.mu_at(t), delta * lam * s.beta_at(t), rel_tol=4e-16)
        assert math.isclose(s.mu_at(t) * s.beta_at(t), s.mu_at(0) * s.beta_at(0), rel_tol=1e-15)

    def test_ratio_series_bounded(self):
        s = sched()
        mu = np.array([s.mu_at(t) for t in range(100001)])
        partial = np.cumsum((mu[:-1] / mu[1:] - 1.0) ** 2)
        assert partial[-1] <= 3.0

    def test_fixed_schedule(self):
        f = FixedSchedule(5.0, 0.1)
        assert f.beta_at(0) == f.beta_at(1000) == 5.0
        assert f.mu_at(7) == 0.1
        with pytest.raises(ScheduleError):
            FixedSchedule(0.0, 1.0)


class TestSelection:
    def test_unit_sigma_constants(self):
        c = derived_constants(Regime.BIJECTIVE, 1.0, 1.01, 0.6, 0.5, 0.25, 1.0)
        assert c["sigma1"] == 1.0 and c["sigma2"] == 0.0

    def test_surjective_unit_kappa(self):
        p = select_params("su", 1.0)
        assert (p.xi, p.delta, p.sigma, p.theta1, p.theta2) == (0.01, 0.01, 0.01, 1.01, 1.5)
        assert p.eps2 > 0.02

    def test_bijective_hand_example(self):
        p = select_params("bi", 1.0, xi=0.5, delta=0.25, sigma=1.0)
        assert p.omega == 1.75
        assert p.varrho == 10.5
        assert p.theta2 == pytest.approx(0.6 + 1.0 / (2 * 10.5 * 1.5625), rel=1e-15)
        assert p.theta2 == pytest.approx(0.6 + 0.030476190476190476, rel=1e-15)
        assert p.eps2 >= 1.0 / (8 * p.varrho)

    @pytest.mark.parametrize("kappa", ["1", "1.2", "1.5", "1.9"])
    def test_bijective_matches_exact_arithmetic(self, kappa):
        exact = param_oracle.bijective(Fraction(kappa))
        p = select_params("bi", float(kappa))
        assert p.theta2 == pytest.approx(float(exact["theta2"]), rel=1e-13)
        assert p.eps2 == pytest.approx(float(exact["eps2"]), rel=1e-9, abs=1e-13)
        assert exact["eps2"] >= 1 / (8 * exact["varrho"])

    @pytest.mark.parametrize("kappa", [1, 5, 20])
    def test_surjective_matches_exact_arithmetic(self, kappa):
        exact = param_oracle.surjective(kappa)
        p = select_params("su", float(kappa))
        assert p.chi == pytest.approx(float(exact["chi"]), rel=1e-12)
        assert exact["eps2"] > Fraction(2, 100)

    def test_kappa_too_large_for_bijective(self):
        with pytest.raises(RegimeViolation, match="surjective"):
            select_params("bi", 2.0)

    def test_infeasible_reports_chi(self):
        with pytest.raises(ParameterInfeasible) as info:
            select_params("su", 1.0, xi=1.0, delta=0.5, sigma=0.9)
        assert info.value.chi > 1.0

    @given(kappa=st.floats(1.0, 1.99), xi=st.floats(0.01, 5.0), sigma=st.floats(1.0, 1.99))
    def test_bijective_selection_certifies(self, kappa, xi, sigma):
        p = select_params("bi", kappa, xi=xi, sigma=sigma)
        assert p.eps1 > 0 and p.eps2 > 0 and p.theory_certified
        assert 1.0 <= p.sigma < 2.0
        assert p.delta < (2.0 / kappa - 1.0) / 3.0

    @given(kappa=st.floats(1.0, 100.0))
    def test_surjective_selection_certifies(self, kappa):
        p = select_params("su", kappa)
        assert p.eps2 > 0 and 0 < p.sigma < 1

    def test_sigma_clipped_into_range(self):
        assert select_params("bi", 1.0, sigma=0.5).sigma == 1.0
        # clipped just below 2, where the dual-step constant blows up
        with pytest.raises(ParameterInfeasible):
            select_params("bi", 1.0, sigma=2.5)

    def test_regime_parse(self):
        assert Regime.parse("Bijective") is Regime.BIJECTIVE
        assert Regime.parse(Regime.SURJECTIVE) is Regime.SURJECTIVE
        with pytest.raises(ValueError):
            Regime.parse("x")


class TestExperimentDefaults:
    def test_values(self):
        p = experiment_defaults()
        assert (p.xi, p.p, p.delta, p.theta1, p.theta2, p.sigma) == (0.5, 1.0 / 3.0, 0.25, 1.01, 0.60, 1.618)
        assert p.theory_certified is False

    def test_benchmark_multipliers(self):
        assert BETA0_RHO_MULTIPLIER == 50.0
        assert RADMM_BETA_RHO_MULTIPLIER == 100.0

    def test_as_dict_roundtrip(self):
        d = experiment_defaults().as_dict()
        assert d["regime"] == "bi" and d["theory_certified"] is False
