"""Acceptance suite: one test per criterion, printing a PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines; the two
directional training checks and the overfit check train small models on
synthetic data and dominate the runtime.
"""

import math
import os
import time
from contextlib import contextmanager

import numpy as np
import pytest
import torch

from gcnm.config import ModelConfig
from gcnm.dataset import DataBundle, ForecastDataset
from gcnm.graph import GraphSource
from gcnm.localstats import compute_local_stats
from gcnm.masking import MissingScenario, inject, run_length_histogram
from gcnm.memory import STAT_KEYS, MemoryModule
from gcnm.metrics import masked_metrics
from gcnm.model import GCNM, masked_mae
from gcnm.series import normalize, read_series, write_series
from gcnm.stats import friedman_test, holm_cliques, wilcoxon_signed_rank
from gcnm.synthetic import daily_traffic
from gcnm.training import build_dataset, build_model, evaluate_mae, to_tensors, train_model
from gcnm.windows import SegmentSpec

from conftest import chain_graph, make_series
from test_metrics import brute_force_metrics
from test_stats import enumeration_oracle


@contextmanager
def criterion(number: int, name: str):
    try:
        yield
    except BaseException:
        print(f"\nACCEPTANCE {number:2d} {name}: FAIL")
        raise
    else:
        print(f"\nACCEPTANCE {number:2d} {name}: PASS")


# --- 1: gradient oracle ----------------------------------------------------

GRADIENT_GROUPS = {
    "memory.decay": "decay",
    "memory.": "memory",
    "graph_source.": "graph",
    "blocks.0.tcn": "tcn",
    "blocks.0.graph_banks": "graph",
    "skip_convs": "output_head",
    "fc1": "output_head",
    "fc2": "output_head",
}


def group_of(name: str) -> str:
    for prefix, group in GRADIENT_GROUPS.items():
        if name.startswith(prefix):
            return group
    raise AssertionError(f"parameter {name} not mapped to a gradient group")


def test_criterion_1_gradient_oracle(rng):
    with criterion(1, "gradient oracle"):
        start = time.perf_counter()
        torch.set_default_dtype(torch.float64)
        try:
            torch.manual_seed(1234)
            config = ModelConfig(tau=5, horizon=3, d=4, blocks=1, kernel=2,
                                 dilations=(1, 2), fc_hidden=8, L=6, S=2,
                                 n_h=1, n_d=1, n_w=0, K=1, alpha=3.0,
                                 samples_per_day=24, samples_per_week=168)
            n = 4
            adj = rng.uniform(0.2, 1.0, size=(n, n)) + np.eye(n)
            model = GCNM(config, n_nodes=n, n_features=1, predefined=adj)

            slots = (config.n_h + config.n_d + config.n_w) * config.tau
            mask = (rng.uniform(size=(1, n, 1, 5)) > 0.4).astype(float)
            batch = {
                "x": rng.uniform(0.1, 1, size=(1, n, 1, 5)) * mask,
                "mask": mask,
                "temporal_mean": rng.uniform(0, 1, size=(1, n, 1, 5)),
                "last_value": rng.uniform(0, 1, size=(1, n, 1, 5)),
                "last_delta": rng.uniform(0.5, 6, size=(1, n, 1, 5)),
                "spatial_mean": rng.uniform(0, 1, size=(1, n, 1, 5)),
                "nearest_value": rng.uniform(0, 1, size=(1, n, 1, 5)),
                "nearest_delta": rng.uniform(0.5, 4, size=(1, n, 1, 5)),
                "segments": rng.uniform(0, 1, size=(1, slots, n, 1)),
                "target": rng.uniform(0, 1, size=(1, n, 3)),
                "target_mask": np.ones((1, n, 3)),
            }
            tensors = to_tensors(batch, torch.float64)

            def loss_value():
                return masked_mae(model(tensors), tensors["target"],
                                  tensors["target_mask"])

            loss = loss_value()
            loss.backward()

            step = 1e-5
            checked_groups = set()
            worst = 0.0
            for name, p in model.named_parameters():
                grad = (p.grad if p.grad is not None
                        else torch.zeros_like(p)).reshape(-1)
                flat = p.data.reshape(-1)
                checked_groups.add(group_of(name))
                for i in range(flat.numel()):
                    keep = flat[i].item()
                    flat[i] = keep + step
                    up = loss_value().item()
                    flat[i] = keep - step
                    down = loss_value().item()
                    flat[i] = keep
                    fd = (up - down) / (2 * step)
                    rel = abs(grad[i].item() - fd) / max(abs(grad[i].item()),
                                                         abs(fd), 1e-6)
                    worst = max(worst, rel)
                    assert rel < 1e-4, (name, i, grad[i].item(), fd)
            assert checked_groups == {"memory", "decay", "graph", "tcn", "output_head"}
            elapsed = time.perf_counter() - start
            print(f"  worst relative error {worst:.2e} over all parameter groups "
                  f"({elapsed:.1f}s)")
            assert elapsed < 60.0
        finally:
            torch.set_default_dtype(torch.float32)


# --- 2: mask consistency ----------------------------------------------------

def test_criterion_2_mask_consistency(rng):
    with criterion(2, "mask consistency"):
        n, t = 8, 300
        graph = chain_graph(n)
        mask = (rng.uniform(size=(n, 1, t)) > 0.35).astype(float)
        values = rng.uniform(10, 70, size=(n, 1, t)) * mask
        series = make_series(values, mask=mask)

        stats = compute_local_stats(series.values, series.mask, graph,
                                    lookback=12, s_neighbors=3)
        torch.manual_seed(0)
        module = MemoryModule(n_nodes=n, n_features=1, d=8).double()
        lo, hi = 40, 52
        window_stats = {k: torch.as_tensor(v[None], dtype=torch.float64)
                        for k, v in stats.window(lo, hi).items()}
        x = torch.as_tensor(series.values[None, :, :, lo:hi], dtype=torch.float64)
        m = torch.as_tensor(series.mask[None, :, :, lo:hi], dtype=torch.float64)
        z_ref = module.local_features(x, m, window_stats)

        # perturb stored values at mask-0 positions, then re-apply the
        # zero-storage convention; the whole pathway must be bitwise unchanged
        perturbed = series.values + (1 - series.mask) * rng.uniform(50, 99, size=values.shape)
        rezeroed = perturbed * series.mask
        assert np.array_equal(rezeroed, series.values)
        stats2 = compute_local_stats(rezeroed, series.mask, graph,
                                     lookback=12, s_neighbors=3)
        for key in ("temporal_mean", "last_value", "last_delta",
                    "spatial_mean", "nearest_value", "nearest_delta"):
            assert np.array_equal(getattr(stats, key), getattr(stats2, key)), key
        window_stats2 = {k: torch.as_tensor(v[None], dtype=torch.float64)
                         for k, v in stats2.window(lo, hi).items()}
        x2 = torch.as_tensor(rezeroed[None, :, :, lo:hi], dtype=torch.float64)
        z_two = module.local_features(x2, m, window_stats2)
        assert torch.equal(z_two, z_ref)

        # local features also ignore masked values fed in *without* re-zeroing
        x3 = torch.as_tensor(perturbed[None, :, :, lo:hi], dtype=torch.float64)
        assert torch.equal(module.local_features(x3, m, window_stats), z_ref)


# --- 3: dynamic graph invariants ---------------------------------------------

def test_criterion_3_dynamic_graph_invariants():
    with criterion(3, "dynamic graph invariants"):
        n, d = 5, 4
        rng = np.random.default_rng(77)
        for draw in range(1000):
            torch.manual_seed(draw)
            adj = rng.uniform(0.1, 1.0, size=(n, n)) + np.eye(n)
            source = GraphSource("dynamic", n, 1, d, diffusion_steps=1,
                                 alpha=3.0, predefined=adj).double()
            h = torch.as_tensor(rng.normal(size=(1, 1, n, d)))
            a = source.build_dynamic_graph(h)
            # uni-directionality holds exactly, entries stay inside [0, 1)
            assert torch.min(a, a.transpose(-1, -2)).abs().max().item() == 0.0
            assert a.min().item() >= 0.0 and a.max().item() < 1.0

            perm = rng.permutation(n)
            source_p = GraphSource("dynamic", n, 1, d, diffusion_steps=1,
                                   alpha=3.0,
                                   predefined=adj[np.ix_(perm, perm)]).double()
            with torch.no_grad():
                source_p.node_embed_1.copy_(source.node_embed_1[perm])
                source_p.node_embed_2.copy_(source.node_embed_2[perm])
                for wp, w in zip(source_p.filter_bank_1, source.filter_bank_1):
                    wp.copy_(w)
                for wp, w in zip(source_p.filter_bank_2, source.filter_bank_2):
                    wp.copy_(w)
            a_p = source_p.build_dynamic_graph(h[:, :, perm])
            expected = a[:, :, perm][:, :, :, perm]
            assert torch.allclose(a_p, expected, atol=1e-10)


# --- 4: shape pipeline --------------------------------------------------------

def test_criterion_4_shape_pipeline(rng):
    with criterion(4, "shape pipeline"):
        config = ModelConfig(tau=12, horizon=12, d=8, blocks=4, kernel=2,
                             dilations=(1, 2), fc_hidden=16, n_h=1, n_d=1, n_w=1,
                             K=1, samples_per_day=48, samples_per_week=336)
        n = 20
        adj = np.eye(n) + rng.uniform(0, 1, size=(n, n))
        model = GCNM(config, n_nodes=n, n_features=1, predefined=adj)
        assert model.pad == 1
        assert model.block_lengths == [13, 10, 7, 4, 1]
        assert model.fc1.in_channels == (config.blocks + 1) * config.d

        slots = 3 * config.tau
        mask = np.ones((2, n, 1, 12))
        batch = {
            "x": rng.uniform(0, 1, size=(2, n, 1, 12)), "mask": mask,
            **{k: rng.uniform(0, 1, size=(2, n, 1, 12))
               for k in ("temporal_mean", "last_value", "last_delta",
                         "spatial_mean", "nearest_value", "nearest_delta")},
            "segments": rng.uniform(0, 1, size=(2, slots, n, 1)),
        }
        out = model(to_tensors(batch, torch.float32))
        assert out.shape == (2, n, 12)


# --- 5: scenario injection ----------------------------------------------------

def test_criterion_5_scenario_injection(rng):
    with criterion(5, "scenario injection"):
        tau = 12
        series = make_series(rng.uniform(10, 70, size=(100, 1, 5000)))
        for kind in ("short_range", "long_range", "mix_range"):
            for rate in (0.1, 0.2, 0.4):
                scenario = MissingScenario(kind=kind, rate=rate, seed=31)
                out, blocks = inject(series, scenario, tau, return_blocks=True)
                realized = out.missing_fraction()
                assert abs(realized - rate) <= 0.005, (kind, rate, realized)
                if kind == "short_range":
                    assert all(b.length == 1 for b in blocks)
                if kind == "long_range":
                    assert all(b.length == tau for b in blocks)
                    hist = run_length_histogram(out.mask)
                    for length in hist:
                        # runs shorter than tau can only touch the series end
                        assert length >= tau or length < tau and _ends_at_boundary(
                            out.mask, length, series.n_steps)
                again = inject(series, scenario, tau)
                assert np.array_equal(again.mask, out.mask)


def _ends_at_boundary(mask, length, n_steps):
    flat = mask.reshape(-1, mask.shape[-1])
    for row in flat:
        missing = np.concatenate([[0], (row == 0).astype(np.int8), [0]])
        edges = np.flatnonzero(np.diff(missing))
        for s, e in zip(edges[::2], edges[1::2]):
            if e - s == length and e != n_steps:
                return False
    return True


# --- 6: metric oracle -----------------------------------------------------------

def test_criterion_6_metric_oracle(rng):
    with criterion(6, "metric oracle"):
        target = np.array([60.0, 0.0, 30.0])
        pred = np.array([50.0, 10.0, 40.0])
        out = masked_metrics(pred, target, np.ones(3))
        assert out["mae"] == 10.0
        assert out["mape"] == pytest.approx(0.25, rel=1e-15)

        for _ in range(100):
            shape = (int(rng.integers(1, 7)), int(rng.integers(1, 13)))
            target = rng.normal(0, 10, size=shape)
            target[rng.uniform(size=shape) < 0.2] = 0.0
            pred = target + rng.normal(0, 4, size=shape)
            mask = (rng.uniform(size=shape) > 0.3).astype(float)
            ours = masked_metrics(pred, target, mask)
            oracle = brute_force_metrics_fsum(pred, target, mask)
            assert ours == oracle  # exact, including the zero-target exclusion


def brute_force_metrics_fsum(pred, target, mask):
    """Elementwise oracle with exactly-rounded accumulation."""
    errs, sq, ratios = [], [], []
    for p, y, m in zip(pred.ravel(), target.ravel(), mask.ravel()):
        if m <= 0:
            continue
        e = abs(p - y)
        errs.append(e)
        sq.append(e * e)
        if y != 0:
            ratios.append(e / abs(y))
    if not errs:
        return {"mae": None, "rmse": None, "mape": None, "n": 0}
    return {"mae": math.fsum(errs) / len(errs),
            "rmse": math.sqrt(math.fsum(sq) / len(sq)),
            "mape": math.fsum(ratios) / len(ratios) if ratios else None,
            "n": len(errs)}


def test_criterion_6_cross_checks_loop_oracle(rng):
    # agreement with the independent naive-sum oracle to float precision
    for _ in range(20):
        shape = (3, 12)
        target = rng.normal(0, 10, size=shape)
        pred = target + rng.normal(0, 4, size=shape)
        mask = (rng.uniform(size=shape) > 0.3).astype(float)
        ours = masked_metrics(pred, target, mask)
        ref = brute_force_metrics(pred, target, mask)
        for key in ("mae", "rmse", "mape"):
            if ref[key] is not None:
                assert ours[key] == pytest.approx(ref[key], rel=1e-12)


# --- 7: statistics oracle ---------------------------------------------------------

def test_criterion_7_statistics_oracle(rng):
    with criterion(7, "statistics oracle"):
        # n=5 all-positive differences -> exact two-sided p = 2/32
        a = [1.0, 2.0, 3.0, 4.0, 5.0]
        b = [0.5, 1.0, 2.5, 3.0, 4.0]
        assert wilcoxon_signed_rank(a, b) == pytest.approx(0.0625)
        for n in range(5, 11):
            for _ in range(4):
                x = rng.normal(size=n)
                y = x + rng.normal(scale=1.0, size=n)
                assert wilcoxon_signed_rank(x, y) == pytest.approx(
                    enumeration_oracle(x, y)), n

        statistic, _ = friedman_test(np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]]))
        assert statistic == pytest.approx(4.0)

        ranks = {"a": 1.0, "b": 2.0, "c": 3.0}
        pairs = {("a", "b"): 0.9, ("a", "c"): 0.001, ("b", "c"): 0.001}
        cliques, _ = holm_cliques(pairs, ranks, alpha=0.05)
        assert cliques == [["a", "b"], ["c"]]
        all_tied, _ = holm_cliques({k: 1.0 for k in pairs}, ranks)
        assert all_tied == [["a", "b", "c"]]
        all_reject, _ = holm_cliques({k: 0.0 for k in pairs}, ranks)
        assert all_reject == [["a"], ["b"], ["c"]]


# --- 11: ingestion fidelity ----------------------------------------------------

FIXTURE_CSV = """timestamp,s01,s02,s03
2024-03-01T00:00:00,61.5,0,12
2024-03-01T00:05:00,,3.25,12.5
2024-03-01T00:10:00,59,4,0
2024-03-01T00:15:00,0,,58.125
"""


def test_criterion_11_ingestion_fidelity(tmp_path):
    with criterion(11, "ingestion fidelity"):
        path = tmp_path / "fixture.csv"
        path.write_text(FIXTURE_CSV)
        series = read_series(path)
        out = tmp_path / "rewritten.csv"
        write_series(series, out)
        assert out.read_bytes() == path.read_bytes()
        # mixed empty/zero cells: 2 missing, 3 observed zeros
        assert int(series.mask.sum()) == 10
        assert series.zero_or_missing_ratio() == pytest.approx(5 / 12)


def test_criterion_11_metr_la_ratio():
    csv_path = os.environ.get("GCNM_METR_LA_CSV", "data/metr-la.csv")
    if not os.path.exists(csv_path):
        pytest.skip(f"METR-LA export not present at {csv_path}")
    with criterion(11, "METR-LA zero-or-missing ratio"):
        series = read_series(csv_path)
        assert series.values.shape[2] == 34272 and series.n_nodes == 207
        assert series.zero_or_missing_ratio() == pytest.approx(0.0811, abs=1e-4)
