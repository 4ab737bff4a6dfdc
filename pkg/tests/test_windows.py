import numpy as np
import pytest

from gcnm.errors import DataError
from gcnm.windows import (SegmentSpec, admissible_anchors, first_admissible_anchor,
                          segment_index, split_anchors)


def brute_force_first_anchor(n_steps: int, spec: SegmentSpec) -> int:
    """Oracle: scan every index and return the first whose history fits."""
    for t in range(n_steps - spec.horizon + 1):
        idx = segment_index(t, spec)
        if t - spec.tau - spec.lookback < 0:
            continue
        if len(idx.all) and idx.all.min() < 0:
            continue
        return t
    raise AssertionError("no admissible anchor found")


def test_first_anchor_matches_paper_style_weekly_bound():
    # T = 3*T_w, n_w = 2, tau = 12 -> first anchor at 2*T_w + 6
    t_w = 120
    spec = SegmentSpec(tau=12, horizon=12, n_h=2, n_d=2, n_w=2,
                       samples_per_day=24, samples_per_week=t_w, lookback=12)
    assert first_admissible_anchor(spec) == 2 * t_w + 6
    assert brute_force_first_anchor(3 * t_w, spec) == 2 * t_w + 6


@pytest.mark.parametrize("spec", [
    SegmentSpec(tau=12, horizon=12, n_h=2, n_d=2, n_w=2, samples_per_day=24,
                samples_per_week=48, lookback=12),
    SegmentSpec(tau=6, horizon=3, n_h=1, n_d=1, n_w=1, samples_per_day=12,
                samples_per_week=36, lookback=4),
    SegmentSpec(tau=4, horizon=2, n_h=3, n_d=0, n_w=0, samples_per_day=8,
                samples_per_week=16, lookback=8),
])
def test_first_anchor_matches_brute_force(spec):
    n_steps = first_admissible_anchor(spec) + spec.horizon + 25
    assert first_admissible_anchor(spec) == brute_force_first_anchor(n_steps, spec)


def test_segment_indices_all_valid_for_admissible_anchors():
    spec = SegmentSpec(tau=12, horizon=12, n_h=2, n_d=2, n_w=2,
                       samples_per_day=24, samples_per_week=48, lookback=12)
    anchors = admissible_anchors(200, spec)
    for t in anchors:
        idx = segment_index(int(t), spec)
        assert idx.all.min() >= 0
        assert idx.all.max() < 200
        assert len(idx.all) == spec.n_slots
        # hourly strictly historical
        assert idx.hourly.max() < t


def test_segment_bounds_follow_period_offsets():
    spec = SegmentSpec(tau=12, horizon=12, n_h=2, n_d=2, n_w=1,
                       samples_per_day=288, samples_per_week=2016, lookback=12)
    t = 2 * 2016 + 6
    idx = segment_index(t, spec)
    assert list(idx.hourly) == list(range(t - 24, t))
    # daily period j spans [t - j*T_d - 6, t - j*T_d + 6), oldest first
    expected_daily = list(range(t - 2 * 288 - 6, t - 2 * 288 + 6)) + \
        list(range(t - 288 - 6, t - 288 + 6))
    assert list(idx.daily) == expected_daily
    assert list(idx.weekly) == list(range(t - 2016 - 6, t - 2016 + 6))


def test_window_covers_input_and_target():
    spec = SegmentSpec(tau=12, horizon=12, n_h=1, n_d=0, n_w=0,
                       samples_per_day=288, samples_per_week=2016, lookback=12)
    anchors = admissible_anchors(100, spec)
    t = int(anchors[0])
    # input [t-12, t), target [t, t+12)
    assert t - 12 >= 0
    assert t + 12 <= 100


def test_split_counts_follow_70_10_20():
    anchors = np.arange(100)
    splits = split_anchors(anchors)
    assert len(splits["train"]) == 70
    assert len(splits["val"]) == 10
    assert len(splits["test"]) == 20
    # chronologically contiguous, no anchor in two splits
    rejoined = np.concatenate([splits["train"], splits["val"], splits["test"]])
    assert np.array_equal(rejoined, anchors)


def test_too_short_series_raises():
    spec = SegmentSpec()
    with pytest.raises(DataError):
        admissible_anchors(100, spec)
