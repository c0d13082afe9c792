import numpy as np
import pytest
from scipy.optimize import brentq

from vixtrack import (
    ContractCalendar,
    DegenerateProblemError,
    HistoricalParams,
    LocalVol,
    MarketConfig,
    RiskNeutralParams,
    TrackingCoefficients,
    TrackingConfig,
    critical_spot,
    expected_sq_error,
    optimal_weight,
    tracking_coefficients,
)

import oracles


def coeffs_at(
    spot,
    day=0,
    beta=1.0,
    r=0.01,
    hist=HistoricalParams(10.86, 18.81, 6.37),
    rn=RiskNeutralParams(1.39, 26.03),
    i1=1,
    i2=2,
    n_contracts=6,
):
    mkt = MarketConfig(r=r)
    cal = ContractCalendar.monthly(n_contracts)
    g = LocalVol.square_root(hist.sigma)
    return tracking_coefficients(
        day, spot, TrackingConfig(beta=beta, i1=i1, i2=i2), cal, hist, rn, g, mkt
    )


class TestTrackingCoefficients:
    def test_identical_measures_kill_the_drift_spread(self):
        hist = HistoricalParams(2.0, 22.0, 3.0)
        rn = RiskNeutralParams(2.0, 22.0)
        c = coeffs_at(20.0, hist=hist, rn=rn)
        assert c.alpha1 == 0.0

    def test_nearer_contract_has_larger_shock_loading(self):
        c = coeffs_at(18.81)
        assert c.nu1 > 0.0

    def test_matches_extended_precision_tuple(self):
        c = coeffs_at(18.81)
        a0, a1, n0, n1 = oracles.COEFFS_DAY0
        assert c.alpha0 == pytest.approx(a0, rel=1e-12)
        assert c.alpha1 == pytest.approx(a1, rel=1e-12)
        assert c.nu0 == pytest.approx(n0, rel=1e-12)
        assert c.nu1 == pytest.approx(n1, rel=1e-12)

    def test_identical_ranks_rejected(self):
        with pytest.raises(DegenerateProblemError):
            TrackingConfig(beta=1.0, i1=2, i2=2)

    def test_rank_beyond_tradable_rejected(self):
        with pytest.raises(ValueError):
            coeffs_at(18.81, day=0, i1=1, i2=7, n_contracts=3)

    def test_nonpositive_spot_rejected(self):
        with pytest.raises(ValueError):
            coeffs_at(0.0)


class TestOptimalWeight:
    def test_matches_extended_precision_value(self):
        w, _ = optimal_weight(coeffs_at(18.81))
        assert w == pytest.approx(oracles.W_STAR_DAY0, rel=1e-12)

    def test_grid_oracle_agreement(self):
        rng = np.random.default_rng(101)
        n_checked = 0
        while n_checked < 200:
            hist = HistoricalParams(
                mu=rng.uniform(1, 20),
                theta=rng.uniform(10, 40),
                sigma=rng.uniform(1, 10),
            )
            rn = RiskNeutralParams(rng.uniform(0.3, 3), rng.uniform(15, 40))
            c = coeffs_at(
                spot=rng.uniform(8, 60),
                day=int(rng.integers(0, 21)),
                beta=float(rng.choice([-1, 1]) * rng.uniform(0.25, 2)),
                r=rng.uniform(0, 0.08),
                hist=hist,
                rn=rn,
                i1=int(rng.integers(1, 4)),
                i2=int(rng.integers(4, 7)),
            )
            w_star, obj = optimal_weight(c)
            if abs(w_star) > 9.5:  # keep the oracle's grid domain binding
                continue
            w_grid, val_grid = oracles.grid_min_weight(c)
            assert abs(w_star - w_grid) <= 1e-4
            assert obj <= val_grid
            n_checked += 1

    def test_zero_objective_at_critical_spot(self, fit_rn):
        mkt = MarketConfig(r=0.02)
        s_star = critical_spot(1.0, mkt, fit_rn)
        c = coeffs_at(s_star, day=3, r=0.02)
        _, obj = optimal_weight(c)
        assert obj <= 1e-18
        for bump in (0.99, 1.01):
            _, obj_off = optimal_weight(coeffs_at(s_star * bump, day=3, r=0.02))
            assert obj_off > 0.0

    def test_zero_error_spot_same_for_all_days_and_pairs(self, fit_rn):
        mkt = MarketConfig(r=0.03)
        s_star = critical_spot(1.0, mkt, fit_rn)

        def h(spot, day, i1, i2):
            c = coeffs_at(spot, day=day, r=0.03, i1=i1, i2=i2)
            return c.nu1 * c.alpha0 - c.nu0 * c.alpha1

        roots = [
            brentq(h, 0.5 * s_star, 1.5 * s_star, args=(day, i1, i2), xtol=1e-14)
            for day, i1, i2 in [(0, 1, 2), (9, 1, 2), (17, 2, 5), (4, 3, 4)]
        ]
        for root in roots:
            assert root == pytest.approx(roots[0], rel=1e-12)

    def test_degenerate_coefficients_rejected(self):
        with pytest.raises(DegenerateProblemError):
            optimal_weight(TrackingCoefficients(0.5, 0.0, 0.2, 0.0))


class TestExpectedSqError:
    def test_consistency_with_closed_form_optimum(self):
        c = coeffs_at(16.0, day=5, beta=1.5)
        w_star, obj = optimal_weight(c)
        assert expected_sq_error(w_star, c) == pytest.approx(obj, rel=1e-9, abs=1e-24)

    def test_constant_coefficient_cases(self):
        flat = TrackingCoefficients(1.0, 0.0, 1.0, 0.0)
        for w in (-3.0, 0.0, 2.5):
            assert expected_sq_error(w, flat) == 2.0
        diag = TrackingCoefficients(0.0, 1.0, 0.0, 1.0)
        assert expected_sq_error(0.0, diag) == 0.0
        assert expected_sq_error(1.0, diag) == 2.0

    def test_convexity_around_the_optimum(self):
        rng = np.random.default_rng(7)
        for _ in range(300):
            c = TrackingCoefficients(*rng.normal(size=4))
            if c.alpha1 == 0 and c.nu1 == 0:
                continue
            w_star, obj = optimal_weight(c)
            for w in rng.uniform(-20, 20, size=5):
                assert expected_sq_error(w, c) >= obj - 1e-12
