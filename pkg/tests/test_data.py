import numpy as np
import pytest

from vixtrack import (
    DataError,
    load_panel,
    normalize_to_100,
    read_panel,
    split_in_out,
    write_panel,
)

from conftest import make_sim_panels, write_quote_files


class TestLoadPanel:
    def test_aligned_panel_shape(self, tmp_path):
        dates = write_quote_files(tmp_path, n_days=40, seed=1)
        panel = load_panel(tmp_path)
        assert panel.n_days == 40
        assert panel.dates[0] == dates[0]
        # every row: one spot, one rate, front-7 tradable futures
        for j in range(panel.n_days):
            assert panel.n_tradable(j) == 7
            assert np.isfinite(panel.spot[j])
            assert np.isfinite(panel.rates[j])

    def test_missing_quote_drops_day(self, tmp_path):
        write_quote_files(tmp_path, n_days=10, seed=2, drop_futures_on=(4,))
        panel = load_panel(tmp_path, max_drop_frac=0.15)
        assert panel.n_days == 9
        assert panel.n_dropped == 1

    def test_excessive_drops_abort_by_default(self, tmp_path):
        write_quote_files(tmp_path, n_days=10, seed=2, drop_futures_on=(3, 4))
        with pytest.raises(DataError, match="refusing"):
            load_panel(tmp_path)

    def test_window_filter(self, tmp_path):
        dates = write_quote_files(tmp_path, n_days=30, seed=3)
        panel = load_panel(tmp_path, window=(str(dates[5]), str(dates[14])))
        assert panel.n_days == 10
        assert panel.dates[0] == dates[5]

    def test_malformed_row_reports_line_number(self, tmp_path):
        write_quote_files(tmp_path, n_days=10, seed=4)
        spot = tmp_path / "spot.csv"
        spot.write_text(spot.read_text() + "2021-02-01,VIX,close,not_a_number\n")
        with pytest.raises(DataError, match=r"spot\.csv:12"):
            load_panel(tmp_path)

    def test_missing_file_rejected(self, tmp_path):
        with pytest.raises(DataError, match="missing input file"):
            load_panel(tmp_path)

    def test_ttm_is_trading_day_count_over_252(self, tmp_path):
        write_quote_files(tmp_path, n_days=25, seed=5)
        panel = load_panel(tmp_path)
        # front contract expires on trading day 21 of the synthetic grid
        assert panel.rank_ttm(0, 1) == pytest.approx(21 / 252)
        assert panel.rank_ttm(1, 1) == pytest.approx(20 / 252)
        assert panel.rank_ttm(0, 2) == pytest.approx(42 / 252)

    def test_rank_shifts_by_one_across_expiry(self, tmp_path):
        write_quote_files(tmp_path, n_days=30, seed=6)
        panel = load_panel(tmp_path)
        # day 20 is the last day the original front trades; on day 21 the
        # old rank-2 contract occupies rank 1
        assert panel.rank_id(21, 1) == panel.rank_id(20, 2)
        assert panel.rank_id(21, 2) == panel.rank_id(20, 3)

    def test_etn_series_alignment(self, tmp_path):
        write_quote_files(tmp_path, n_days=12, seed=7, with_etn=True)
        panel = load_panel(tmp_path)
        assert panel.etn is not None and panel.etn.shape == (12,)

    def test_money_market_compounds_from_rates(self, tmp_path):
        write_quote_files(tmp_path, n_days=10, seed=8, rate=0.036)
        panel = load_panel(tmp_path)
        assert panel.mm_value[0] == 1.0
        gaps = np.diff(panel.dates) / np.timedelta64(1, "D")
        expected = np.cumprod(1.0 + 0.036 * gaps / 360.0)
        assert np.allclose(panel.mm_value[1:], expected, rtol=1e-14)


class TestRoundTrip:
    def test_real_dated_panel(self, tmp_path):
        write_quote_files(tmp_path, n_days=15, seed=9, with_etn=True)
        panel = load_panel(tmp_path)
        write_panel(panel, tmp_path / "panel.tsv")
        back = read_panel(tmp_path / "panel.tsv")
        assert np.array_equal(back.dates, panel.dates)
        assert np.array_equal(back.spot, panel.spot)
        assert np.array_equal(back.rates, panel.rates)
        assert np.array_equal(back.mm_value, panel.mm_value)
        assert np.array_equal(back.etn, panel.etn)
        assert back.n_dropped == panel.n_dropped
        for j in range(panel.n_days):
            assert np.array_equal(back.contract_ids[j], panel.contract_ids[j])
            assert np.array_equal(back.ttms[j], panel.ttms[j])
            assert np.array_equal(back.prices[j], panel.prices[j])

    def test_simulated_panel(self, tmp_path):
        _, panel, _, _, _, _ = make_sim_panels(cycles=2, seed=10)
        write_panel(panel, tmp_path / "panel.tsv")
        back = read_panel(tmp_path / "panel.tsv")
        assert np.array_equal(back.dates, panel.dates)
        assert np.array_equal(back.spot, panel.spot)
        for j in range(panel.n_days):
            assert np.array_equal(back.prices[j], panel.prices[j])

    def test_not_a_panel_file(self, tmp_path):
        (tmp_path / "junk.tsv").write_text("date\tstuff\n")
        with pytest.raises(DataError):
            read_panel(tmp_path / "junk.tsv")


class TestNormalize:
    def test_rescales_anchor_to_100(self):
        series = np.array([20.0, 22.0, 19.0])
        out = normalize_to_100(series)
        assert out[0] == 100.0
        assert np.allclose(out / series, 5.0)

    def test_already_normalized_unchanged(self):
        series = np.array([100.0, 104.0, 98.0])
        assert np.array_equal(normalize_to_100(series), series)

    def test_zero_anchor_rejected(self):
        with pytest.raises(ValueError):
            normalize_to_100(np.array([0.0, 1.0]))


class TestSplit:
    def test_seven_three_split(self, tmp_path):
        dates = write_quote_files(tmp_path, n_days=10, seed=11)
        panel = load_panel(tmp_path)
        a, b = split_in_out(panel, dates[7])
        assert (a.n_days, b.n_days) == (7, 3)
        assert a.dates[-1] < b.dates[0]

    def test_boundary_between_trading_days(self, tmp_path):
        write_quote_files(tmp_path, n_days=10, seed=11, start="2021-01-04")
        panel = load_panel(tmp_path)
        # Saturday boundary: everything before the following Monday is in
        a, b = split_in_out(panel, "2021-01-09")
        assert a.n_days == 5 and b.n_days == 5

    def test_boundary_outside_window_rejected(self, tmp_path):
        write_quote_files(tmp_path, n_days=10, seed=12)
        panel = load_panel(tmp_path)
        with pytest.raises(DataError):
            split_in_out(panel, "2020-01-01")
        with pytest.raises(DataError):
            split_in_out(panel, "2030-01-01")

    def test_integer_boundary_for_simulated_panels(self):
        _, panel, _, _, _, _ = make_sim_panels(cycles=2, seed=13)
        a, b = split_in_out(panel, 21)
        assert a.n_days == 21
        assert b.dates[0] == 21
