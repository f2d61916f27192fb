"""Detector-noise model: bump kernel, noiseless inverse, corruption regimes."""

import numpy as np
import pytest

from actionseq.domain import N_CHANNELS, N_SLOTS
from actionseq.noise import ACTION_LOGIT, BACKGROUND_LOGIT, NoiseConfig, add_bump, corrupt_match
from actionseq.simulate import SimConfig, simulate_match


@pytest.fixture(scope="module")
def match():
    return simulate_match(SimConfig(n_frames=3000), seed=42)


class TestBump:
    def test_kernel_shape(self):
        v = np.zeros((50, N_SLOTS, N_CHANNELS), dtype=np.float32)
        add_bump(v, slot=3, channel=2, center=20, amplitude=6.0, halfwidth=5)
        assert v[20, 3, 2] == pytest.approx(6.0)
        assert v[25, 3, 2] == pytest.approx(0.0)
        assert v[15, 3, 2] == pytest.approx(0.0)
        assert v[22, 3, 2] == pytest.approx(6.0 * (1 - 2 / 5))
        assert v[:, 3, 1].sum() == 0.0  # other channels untouched

    def test_overlapping_bumps_superpose(self):
        a = np.zeros((50, N_SLOTS, N_CHANNELS), dtype=np.float32)
        add_bump(a, 0, 1, 20, 4.0, 5)
        add_bump(a, 0, 1, 23, 2.0, 5)
        b = np.zeros_like(a)
        add_bump(b, 0, 1, 23, 2.0, 5)
        add_bump(b, 0, 1, 20, 4.0, 5)
        np.testing.assert_allclose(a, b, atol=1e-6)
        assert a[21, 0, 1] == pytest.approx(4.0 * 0.8 + 2.0 * (1 - 2 / 5))

    def test_clipping_at_bounds(self):
        v = np.zeros((50, N_SLOTS, N_CHANNELS), dtype=np.float32)
        add_bump(v, 0, 1, 0, 6.0, 5)
        assert v[0, 0, 1] == pytest.approx(6.0)
        assert np.all(v[6:, 0, 1] == 0.0)
        add_bump(v, 0, 2, 60, 6.0, 5)  # entirely out of range
        assert v[:, 0, 2].sum() == 0.0

    def test_bad_halfwidth(self):
        v = np.zeros((10, N_SLOTS, N_CHANNELS), dtype=np.float32)
        with pytest.raises(ValueError):
            add_bump(v, 0, 1, 5, 1.0, 0)


class TestCorruptMatch:
    def test_shape_and_finite(self, match):
        cube = corrupt_match(match, NoiseConfig.medium(), seed=0)
        assert cube.shape == (match.n_frames, N_SLOTS, N_CHANNELS)
        assert cube.dtype == np.float32
        assert np.all(np.isfinite(cube))

    def test_deterministic(self, match):
        a = corrupt_match(match, NoiseConfig.medium(), seed=5)
        b = corrupt_match(match, NoiseConfig.medium(), seed=5)
        np.testing.assert_array_equal(a, b)

    def test_noiseless_recovery(self, match):
        cube = corrupt_match(match, NoiseConfig.zero(), seed=0)
        for ev in match.events:
            line = cube[ev.frame, ev.slot]
            assert int(np.argmax(line)) == 1 + ev.category_index

    def test_total_miss_leaves_baseline_only(self, match):
        cfg = NoiseConfig.zero()
        cfg.p_miss = {c: 1.0 for c in cfg.p_miss}
        cfg.sigma_logit = 0.5
        cube = corrupt_match(match, cfg, seed=0)
        # nothing but baseline + gaussian: no action channel can reach
        # anywhere near a real bump
        assert cube[:, :, 1:].max() < ACTION_LOGIT + 6 * 0.5
        assert abs(cube[:, :, 0].mean() - BACKGROUND_LOGIT) < 0.05

    def test_unoccupied_slots_stay_background(self, match):
        cube = corrupt_match(match, NoiseConfig.zero(), seed=0)
        occupied = match.tracks[:, :, 5] > 0.5
        for slot in range(N_SLOTS):
            off = ~occupied[slot]
            if off.any():
                assert np.all(cube[off, slot, 1:] == np.float32(ACTION_LOGIT))

    def test_row_stochastic_validation(self, match):
        cfg = NoiseConfig.medium()
        cfg.confusion["pass"] = {"cross": 0.9, "ball-drive": 0.5}
        with pytest.raises(ValueError):
            corrupt_match(match, cfg, seed=0)
