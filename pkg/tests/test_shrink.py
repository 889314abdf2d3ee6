import numpy as np
import pytest

from factorvol import DataError, ThresholdSpec, apply_threshold, psd_repair, threshold_level


class TestThresholdSpec:
    def test_validation(self):
        with pytest.raises(DataError):
            ThresholdSpec(c_tau=0.0)
        with pytest.raises(DataError):
            ThresholdSpec(s_p=-1.0)
        with pytest.raises(DataError):
            ThresholdSpec(mode="banded")
        with pytest.raises(DataError):
            ThresholdSpec(mode="sector_block")  # needs groups

    def test_to_dict(self):
        d = ThresholdSpec(mode="sector_block", groups=("a", "a", "b")).to_dict()
        assert d["mode"] == "sector_block"
        assert d["n_groups"] == 2


class TestThresholdLevel:
    def test_log8_over_8(self):
        spec = ThresholdSpec(c_tau=1.0, s_p=0.0)
        assert threshold_level(spec, p=8, T=8) == pytest.approx(0.509833495084, abs=1e-10)

    def test_percent_scale_window(self):
        spec = ThresholdSpec(c_tau=1.0, s_p=1.0)
        assert threshold_level(spec, p=500, T=252) == pytest.approx(0.201760027552, abs=1e-10)

    def test_vanishes_with_T(self):
        spec = ThresholdSpec(c_tau=1.0, s_p=0.0)
        assert threshold_level(spec, p=100, T=10**12) < 1e-5

    def test_input_bounds(self):
        spec = ThresholdSpec()
        with pytest.raises(DataError):
            threshold_level(spec, p=1, T=100)
        with pytest.raises(DataError):
            threshold_level(spec, p=10, T=1)


def corr2x2(off):
    return np.array([[1.0, off], [off, 1.0]])


class TestApplyThreshold:
    def test_large_tau_leaves_diagonal(self, rng):
        x = rng.standard_normal((40, 5))
        S = x.T @ x / 40
        out = apply_threshold(S, tau=10.0, spec=ThresholdSpec(mode="hard"))
        np.testing.assert_allclose(out, np.diag(np.diag(S)))

    def test_zero_tau_hard_is_identity(self, rng):
        x = rng.standard_normal((40, 5))
        S = x.T @ x / 40
        out = apply_threshold(S, tau=0.0, spec=ThresholdSpec(mode="hard"))
        np.testing.assert_allclose(out, S, atol=1e-15)

    def test_two_by_two_hand_cases(self):
        S = corr2x2(0.5)
        soft = apply_threshold(S, 0.3, ThresholdSpec(mode="soft"))
        assert soft[0, 1] == pytest.approx(0.2)
        hard = apply_threshold(S, 0.3, ThresholdSpec(mode="hard"))
        assert hard[0, 1] == pytest.approx(0.5)
        for mode in ("soft", "hard"):
            gone = apply_threshold(S, 0.6, ThresholdSpec(mode=mode))
            assert gone[0, 1] == 0.0

    def test_diagonal_and_symmetry_preserved(self, rng):
        x = rng.standard_normal((30, 6))
        S = x.T @ x / 30
        out = apply_threshold(S, 0.2, ThresholdSpec(mode="soft"))
        np.testing.assert_array_equal(np.diag(out), np.diag(S))
        np.testing.assert_array_equal(out, out.T)

    def test_survivors_shrink_monotonically(self, rng):
        x = rng.standard_normal((30, 6))
        S = x.T @ x / 30
        lo = apply_threshold(S, 0.1, ThresholdSpec(mode="hard"))
        hi = apply_threshold(S, 0.4, ThresholdSpec(mode="hard"))
        survived_hi = hi != 0
        survived_lo = lo != 0
        assert np.all(survived_lo | ~survived_hi)  # hi survivors are a subset

    def test_soft_shrink_bounded_by_level(self, rng):
        x = rng.standard_normal((30, 6))
        S = x.T @ x / 30
        tau = 0.15
        out = apply_threshold(S, tau, ThresholdSpec(mode="soft"))
        d = np.diag(S)
        bound = tau * np.sqrt(np.outer(d, d))
        assert np.all(np.abs(out - S) <= bound + 1e-12)

    def test_sector_block_zeroes_cross_group(self):
        S = corr2x2(0.9)
        S = np.block([[S, 0.5 * np.ones((2, 2))], [0.5 * np.ones((2, 2)), S]])
        spec = ThresholdSpec(mode="sector_block", groups=("g1", "g1", "g2", "g2"))
        out = apply_threshold(S, tau=99.0, spec=spec)  # tau is ignored here
        assert np.all(out[:2, 2:] == 0.0)
        assert np.all(out[2:, :2] == 0.0)
        np.testing.assert_allclose(out[:2, :2], corr2x2(0.9))

    def test_sector_block_group_count_mismatch(self):
        with pytest.raises(DataError):
            apply_threshold(np.eye(3), 0.1, ThresholdSpec(mode="sector_block", groups=("a", "b")))

    def test_non_positive_diagonal_floored(self):
        S = np.array([[1.0, 0.2], [0.2, -0.5]])
        out = apply_threshold(S, 0.1, ThresholdSpec(mode="hard"))
        assert out[1, 1] > 0.0

    def test_non_symmetric_rejected(self):
        with pytest.raises(DataError):
            apply_threshold(np.array([[1.0, 0.5], [0.1, 1.0]]), 0.1, ThresholdSpec())

    def test_non_square_rejected(self):
        with pytest.raises(DataError):
            apply_threshold(np.ones((2, 3)), 0.1, ThresholdSpec())


class TestPsdRepair:
    def test_strictly_positive_input_unchanged(self, rng):
        x = rng.standard_normal((40, 5))
        S = x.T @ x / 40 + 0.5 * np.eye(5)  # smallest eigenvalue well above the floor
        out = psd_repair(S)
        assert np.linalg.norm(out - S, "fro") <= 1e-10 * np.linalg.norm(S, "fro")

    def test_negative_eigenvalue_clipped_to_floor(self):
        out = psd_repair(np.diag([1.0, -0.1]), floor=1e-8)
        np.testing.assert_allclose(out, np.diag([1.0, 1e-8]), atol=1e-15)

    def test_repair_distance_is_the_clipped_mass(self, rng):
        q, _ = np.linalg.qr(rng.standard_normal((5, 5)))
        vals = np.array([2.0, 1.0, 0.5, 0.2, -0.3])
        S = (q * vals) @ q.T
        floor = 1e-8 * 2.0
        out = psd_repair(S)
        assert np.linalg.eigvalsh(out).min() >= floor * (1 - 1e-9)
        np.testing.assert_allclose(np.linalg.norm(out - S, "fro"), abs(-0.3 - floor), rtol=1e-6)

    def test_output_always_psd(self, rng):
        for _ in range(5):
            x = rng.standard_normal((6, 6))
            S = (x + x.T) / 2.0
            out = psd_repair(S)
            assert np.linalg.eigvalsh(out).min() >= -1e-12
