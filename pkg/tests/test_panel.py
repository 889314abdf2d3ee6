import numpy as np
import pytest

from factorvol import (
    DataError,
    Portfolio,
    ReturnPanel,
    demean,
    load_groups,
    load_panel,
    portfolio_returns,
    save_panel,
    with_groups,
)

from conftest import make_panel


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestLoadPanel:
    def test_clean_csv_loads_identically(self, tmp_path):
        path = write(tmp_path, "p.csv", "date,AA,BB\n2020-01-01,0.1,0.2\n2020-01-02,-0.1,0.0\n2020-01-03,0.3,0.1\n")
        panel = load_panel(path)
        assert panel.n_periods == 3
        assert panel.n_assets == 2
        assert panel.asset_ids == ("AA", "BB")
        np.testing.assert_allclose(panel.returns, [[0.1, 0.2], [-0.1, 0.0], [0.3, 0.1]])
        assert panel.dropped_assets == ()

    def test_column_with_gap_is_dropped_and_reported(self, tmp_path):
        path = write(tmp_path, "p.csv", "date,AA,XYZ\n2020-01-01,0.1,\n2020-01-02,-0.1,0.2\n")
        panel = load_panel(path)
        assert panel.asset_ids == ("AA",)
        assert panel.dropped_assets == ("XYZ",)

    def test_non_numeric_cell_counts_as_gap(self, tmp_path):
        path = write(tmp_path, "p.csv", "date,AA,BB\n2020-01-01,0.1,oops\n2020-01-02,-0.1,0.2\n")
        panel = load_panel(path)
        assert panel.asset_ids == ("AA",)

    def test_all_columns_dropped_is_an_error(self, tmp_path):
        path = write(tmp_path, "p.csv", "date,AA\n2020-01-01,\n2020-01-02,0.2\n")
        with pytest.raises(DataError):
            load_panel(path)

    def test_too_few_rows(self, tmp_path):
        path = write(tmp_path, "p.csv", "date,AA\n2020-01-01,0.1\n")
        with pytest.raises(DataError):
            load_panel(path)

    def test_duplicate_header_ids(self, tmp_path):
        # pandas mangles duplicate headers to AA.1, so craft the panel directly
        with pytest.raises(DataError, match="duplicate"):
            ReturnPanel(
                returns=np.zeros((2, 2)) + 0.1,
                asset_ids=("AA", "AA"),
                timestamps=("2020-01-01", "2020-01-02"),
            )

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            load_panel(tmp_path / "absent.csv")

    def test_unsupported_format(self, tmp_path):
        with pytest.raises(DataError):
            load_panel(tmp_path / "x.parquet", format="parquet")

    def test_round_trip_preserves_values(self, tmp_path, small_panel):
        path = tmp_path / "rt.csv"
        save_panel(small_panel, path)
        back = load_panel(path)
        np.testing.assert_array_equal(back.returns, small_panel.returns)
        assert back.asset_ids == small_panel.asset_ids
        assert back.timestamps == small_panel.timestamps


class TestPanelValidation:
    def test_non_increasing_timestamps(self):
        with pytest.raises(DataError, match="increasing"):
            ReturnPanel(np.zeros((2, 1)) + 0.1, ("A",), ("2020-01-02", "2020-01-01"))

    def test_nan_rejected(self):
        with pytest.raises(DataError):
            ReturnPanel(np.array([[np.nan], [0.1]]), ("A",), ("2020-01-01", "2020-01-02"))

    def test_groups_length_mismatch(self):
        with pytest.raises(DataError, match="groups"):
            ReturnPanel(
                np.zeros((2, 2)) + 0.1,
                ("A", "B"),
                ("2020-01-01", "2020-01-02"),
                groups=("G1",),
            )

    def test_one_dimensional_rejected(self):
        with pytest.raises(DataError):
            ReturnPanel(np.zeros(5), ("A",), ("2020-01-01",))


class TestDemean:
    def test_constant_column(self):
        panel = make_panel(np.full((4, 1), 3.0))
        centered, mean = demean(panel)
        np.testing.assert_allclose(centered, 0.0, atol=1e-15)
        np.testing.assert_allclose(mean, [3.0])

    def test_symmetric_pair(self):
        centered, mean = demean(np.array([[1.0], [-1.0]]))
        np.testing.assert_allclose(mean, [0.0])
        np.testing.assert_allclose(centered, [[1.0], [-1.0]])

    def test_hand_case_1_2_3(self):
        centered, mean = demean(np.array([[1.0], [2.0], [3.0]]))
        np.testing.assert_allclose(mean, [2.0])
        np.testing.assert_allclose(centered, [[-1.0], [0.0], [1.0]])

    def test_add_back_reconstructs(self, small_panel):
        centered, mean = demean(small_panel)
        np.testing.assert_allclose(centered + mean, small_panel.returns, rtol=1e-12)

    def test_column_means_vanish(self, small_panel):
        centered, _ = demean(small_panel)
        scale = np.abs(small_panel.returns).max()
        assert np.abs(centered.mean(axis=0)).max() <= 1e-12 * max(scale, 1.0)


class TestPortfolio:
    def test_single_asset_weight_selects_column(self, small_panel):
        w = np.zeros(small_panel.n_assets)
        w[0] = 1.0
        pr = portfolio_returns(small_panel, Portfolio(w))
        np.testing.assert_array_equal(pr, small_panel.returns[:, 0])

    def test_equal_weights_on_identical_columns(self):
        col = np.array([0.1, -0.2, 0.3])
        panel = make_panel(np.column_stack([col, col]))
        pr = portfolio_returns(panel, Portfolio.equal(2))
        np.testing.assert_allclose(pr, col)

    def test_hand_dot_products(self):
        panel = make_panel(np.array([[2.0, 4.0], [0.0, 2.0]]))
        pr = portfolio_returns(panel, Portfolio(np.array([0.5, 0.5])))
        np.testing.assert_allclose(pr, [3.0, 1.0])

    def test_linearity_in_weights(self, small_panel, rng):
        w1 = rng.standard_normal(small_panel.n_assets)
        w2 = rng.standard_normal(small_panel.n_assets)
        lhs = portfolio_returns(small_panel, Portfolio(2.0 * w1 + 0.5 * w2))
        rhs = 2.0 * portfolio_returns(small_panel, Portfolio(w1)) + 0.5 * portfolio_returns(
            small_panel, Portfolio(w2)
        )
        np.testing.assert_allclose(lhs, rhs, rtol=1e-12)

    def test_dimension_mismatch(self, small_panel):
        with pytest.raises(DataError):
            portfolio_returns(small_panel, Portfolio(np.ones(small_panel.n_assets + 1)))

    def test_all_zero_weights_rejected(self):
        with pytest.raises(DataError):
            Portfolio(np.zeros(3))

    def test_gross_exposure(self):
        assert Portfolio(np.array([0.5, -0.5])).gross_exposure == pytest.approx(1.0)


class TestGroups:
    def test_sidecar_load_and_attach(self, tmp_path, small_panel):
        lines = ["asset_id,group"] + [f"{a},G{i % 2}" for i, a in enumerate(small_panel.asset_ids)]
        path = write(tmp_path, "g.csv", "\n".join(lines) + "\n")
        mapping = load_groups(path)
        tagged = with_groups(small_panel, mapping)
        assert tagged.groups == ("G0", "G1", "G0", "G1")

    def test_bad_header(self, tmp_path):
        path = write(tmp_path, "g.csv", "id,sector\nA,G1\n")
        with pytest.raises(DataError):
            load_groups(path)

    def test_missing_asset_in_mapping(self, small_panel):
        with pytest.raises(DataError, match="misses"):
            with_groups(small_panel, {small_panel.asset_ids[0]: "G"})
