import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mevboost_egta.auction import AuctionParams, BuilderSpec, MetaStrategy
from mevboost_egta.metrics import (
    ScenarioReport,
    hhi,
    overall_efficiency,
    overall_win_rates,
    report_row,
    SUMMARY_COLUMNS,
)
from mevboost_egta.signals import calibrate_rates, generate_signal_trace
from mevboost_egta.auction import run_auction


class TestOverallWinRates:
    def test_point_mass_picks_that_profile(self):
        rates = np.array([[0.2, 0.8], [0.6, 0.4]])
        masses = np.array([0.0, 1.0])
        assert overall_win_rates(masses, rates) == (0.6, 0.4)

    def test_hand_weighted_sum(self):
        rates = np.array([[0.2, 0.8], [0.6, 0.4], [0.5, 0.5]])
        masses = np.array([0.5, 0.25, 0.25])
        w_low, w_high = overall_win_rates(masses, rates)
        assert w_low == pytest.approx(0.5 * 0.2 + 0.25 * 0.6 + 0.25 * 0.5)
        assert w_high == pytest.approx(0.5 * 0.8 + 0.25 * 0.4 + 0.25 * 0.5)

    def test_misalignment_is_an_error(self):
        with pytest.raises(ValueError):
            overall_win_rates(np.array([1.0]), np.array([[0.5, 0.5], [0.5, 0.5]]))
        with pytest.raises(ValueError):
            overall_win_rates(np.array([1.0]), np.array([[0.5, 0.5, 0.0]]))

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.floats(0.0, 1.0), min_size=2, max_size=8))
    def test_weighted_average_stays_in_profile_range(self, raw):
        masses = np.array(raw) + 1e-9
        masses /= masses.sum()
        rng = np.random.default_rng(1)
        rates = rng.uniform(0, 0.5, (masses.size, 2))
        w_low, w_high = overall_win_rates(masses, rates)
        assert rates[:, 0].min() - 1e-12 <= w_low <= rates[:, 0].max() + 1e-12
        assert rates[:, 1].min() - 1e-12 <= w_high <= rates[:, 1].max() + 1e-12


class TestHHI:
    def test_even_split(self):
        res = hhi(0.5, 0.5)
        assert res.fraction == pytest.approx(0.1)
        assert res.scaled == pytest.approx(1000.0)

    def test_one_group_takes_all(self):
        res = hhi(1.0, 0.0)
        assert res.fraction == pytest.approx(0.2)
        assert res.scaled == pytest.approx(2000.0)

    def test_asymmetric_split(self):
        res = hhi(0.62, 0.38)
        assert res.fraction == pytest.approx(0.10576)
        assert res.scaled == pytest.approx(1057.6)

    @settings(max_examples=50, deadline=None)
    @given(w=st.floats(0.0, 1.0))
    def test_scale_identity_and_bounds(self, w):
        res = hhi(w, 1.0 - w)
        assert res.scaled == res.fraction * 1e4  # exact by construction
        assert 0.1 - 1e-12 <= res.fraction <= 0.2 + 1e-12

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            hhi(1.2, 0.0)
        with pytest.raises(ValueError):
            hhi(0.5, -0.1)


class TestOverallEfficiency:
    def test_hand_weighted_sum(self):
        eff = overall_efficiency(np.array([0.25, 0.75]), np.array([0.8, 0.6]))
        assert eff == pytest.approx(0.25 * 0.8 + 0.75 * 0.6)

    def test_bounds(self):
        masses = np.array([0.3, 0.7])
        eff = np.array([0.5, 0.9])
        res = overall_efficiency(masses, eff)
        assert eff.min() <= res <= eff.max()

    def test_misalignment_is_an_error(self):
        with pytest.raises(ValueError):
            overall_efficiency(np.array([1.0, 0.0]), np.array([0.5]))

    def test_raising_winner_fraction_weakly_raises_efficiency(self):
        # pinned trace and end time; only the lone builder's fraction moves
        cfg = calibrate_rates()
        params = AuctionParams(t_mean_s=13.0, t_sigma_s=0.0, n_builders=1)
        effs = []
        for lam in (0.1, 0.5, 0.9, 1.0):
            rng = np.random.default_rng(123)
            trace = generate_signal_trace(cfg, np.ones(1), rng)
            builder = [BuilderSpec(1, 10.0, 1.0, MetaStrategy.AGGRESSIVE)]
            out = run_auction(params, builder, trace, rng, lambdas=[lam])
            effs.append(out.efficiency)
        assert all(a <= b + 1e-15 for a, b in zip(effs, effs[1:]))


class TestScenarioReport:
    def _report(self, **overrides):
        base = dict(
            game_kind="latency_roles",
            scenario_param=100.0,
            strategy_usage_low=np.array([0.5, 1.0, 3.5]),
            strategy_usage_high=np.array([0.2, 0.8, 4.0]),
            w_low=0.56,
            w_high=0.44,
            hhi_fraction=0.101,
            hhi_scaled=1010.0,
            efficiency=0.91,
            alpha=42.0,
            n_sims=1000,
            master_seed=7,
        )
        base.update(overrides)
        return ScenarioReport(**base)

    def test_row_matches_schema(self):
        row = report_row(self._report())
        assert len(row) == len(SUMMARY_COLUMNS)
        assert row[0] == "latency_roles"
        assert float(row[SUMMARY_COLUMNS.index("w_low")]) == 0.56
        assert float(row[SUMMARY_COLUMNS.index("efficiency")]) == 0.91

    def test_validation(self):
        with pytest.raises(ValueError):
            self._report(w_low=0.9, w_high=0.9)
        with pytest.raises(ValueError):
            self._report(efficiency=1.5)

    def test_aggressive_usage_accessors(self):
        report = self._report()
        assert report.aggressive_usage_low == 3.5
        assert report.aggressive_usage_high == 4.0
