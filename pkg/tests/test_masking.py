import numpy as np
import pytest

from gcnm.errors import ConfigError, DataError
from gcnm.masking import (MissingScenario, inject, inject_per_split, mask_stats,
                          run_length_histogram)

from conftest import make_series


def full_series(n=20, t=600, rng=None):
    rng = rng or np.random.default_rng(0)
    return make_series(rng.uniform(10, 70, size=(n, 1, t)))


def test_rate_validation():
    with pytest.raises(ConfigError):
        MissingScenario(kind="mix_range", rate=0.0, seed=1)
    with pytest.raises(ConfigError):
        MissingScenario(kind="mix_range", rate=1.0, seed=1)
    with pytest.raises(ConfigError):
        MissingScenario(kind="diagonal", rate=0.5, seed=1)


def test_injection_reaches_rate_on_large_tensor(rng):
    series = make_series(rng.uniform(10, 70, size=(100, 1, 5000)))
    for kind in ("short_range", "long_range", "mix_range"):
        out = inject(series, MissingScenario(kind=kind, rate=0.40, seed=7), tau=12)
        frac = out.missing_fraction()
        assert 0.395 <= frac <= 0.405, (kind, frac)


def test_metr_la_shaped_mix_range_rate():
    rng = np.random.default_rng(3)
    series = make_series(rng.uniform(10, 70, size=(207, 1, 34272)).astype(np.float64))
    out = inject(series, MissingScenario(kind="mix_range", rate=0.40, seed=11), tau=12)
    assert 0.395 <= out.missing_fraction() <= 0.405


def test_short_range_blocks_have_unit_extent(rng):
    series = full_series(rng=rng)
    _, blocks = inject(series, MissingScenario(kind="short_range", rate=0.10, seed=5),
                       tau=12, return_blocks=True)
    assert blocks
    assert all(b.length == 1 for b in blocks)


def test_mix_range_extents_span_one_to_tau(rng):
    series = full_series(n=50, t=3000, rng=rng)
    _, blocks = inject(series, MissingScenario(kind="mix_range", rate=0.30, seed=5),
                       tau=12, return_blocks=True)
    lengths = {b.length for b in blocks}
    assert lengths <= set(range(1, 13))
    assert len(lengths) > 3  # actually mixes extents


def test_same_seed_reproduces_masks(rng):
    series = full_series(rng=rng)
    scenario = MissingScenario(kind="mix_range", rate=0.2, seed=99)
    a = inject(series, scenario, tau=12)
    b = inject(series, scenario, tau=12)
    assert np.array_equal(a.mask, b.mask)
    assert np.array_equal(a.values, b.values)


def test_existing_missing_preserved_and_counted(rng):
    values = rng.uniform(10, 70, size=(10, 1, 400))
    mask = np.ones_like(values)
    mask[:, :, :40] = 0.0
    series = make_series(values * mask, mask=mask)
    out = inject(series, MissingScenario(kind="short_range", rate=0.3, seed=1), tau=12)
    # never converts missing back to observed
    assert np.all(out.mask[series.mask == 0] == 0)
    assert out.missing_fraction() >= 0.3


def test_rate_below_existing_missing_errors(rng):
    values = rng.uniform(10, 70, size=(10, 1, 100))
    mask = (rng.uniform(size=values.shape) > 0.5).astype(float)
    series = make_series(values * mask, mask=mask)
    with pytest.raises(DataError):
        inject(series, MissingScenario(kind="mix_range", rate=0.1, seed=1), tau=12)


def test_long_range_runs_have_length_tau(rng):
    series = full_series(n=30, t=2000, rng=rng)
    out = inject(series, MissingScenario(kind="long_range", rate=0.15, seed=4), tau=12)
    hist = run_length_histogram(out.mask)
    t = series.n_steps
    # runs are tau long unless truncated at the boundary or merged with others
    for length, count in hist.items():
        if length < 12:
            # only possible by truncation at the series end
            assert length + _max_start_of_short_run(out.mask, length) == t
    # mass concentrated at exactly tau
    assert hist.get(12, 0) >= 0.8 * sum(hist.values())


def _max_start_of_short_run(mask, length):
    starts = []
    flat = mask.reshape(-1, mask.shape[-1])
    for row in flat:
        missing = np.concatenate([[0], (row == 0).astype(np.int8), [0]])
        edges = np.flatnonzero(np.diff(missing))
        for s, e in zip(edges[::2], edges[1::2]):
            if e - s == length:
                starts.append(s)
    return max(starts)


def test_mask_stats_fraction():
    values = np.ones((1, 1, 100))
    mask = np.ones_like(values)
    series = make_series(values, mask=mask)
    assert mask_stats(series)["missing_fraction"] == 0.0
    mask[0, 0, 3] = 0
    series = make_series(values * mask, mask=mask)
    assert mask_stats(series)["missing_fraction"] == pytest.approx(0.01)
    assert mask_stats(series)["block_length_histogram"] == {1: 1}


def test_inject_per_split_keeps_blocks_inside_splits(rng):
    series = full_series(n=15, t=1000, rng=rng)
    scenario = MissingScenario(kind="long_range", rate=0.2, seed=21)
    out = inject_per_split(series, scenario, tau=12)
    t = series.n_steps
    b1, b2 = int(t * 0.7), int(t * 0.8)
    for lo, hi in ((0, b1), (b1, b2), (b2, t)):
        frac = 1 - out.mask[:, :, lo:hi].mean()
        assert frac >= 0.2
        assert frac <= 0.21
    # deterministic
    again = inject_per_split(series, scenario, tau=12)
    assert np.array_equal(out.mask, again.mask)
