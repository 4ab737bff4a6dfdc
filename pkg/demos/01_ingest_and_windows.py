"""Ingestion, normalization, and multi-scale window indexing.

Builds a small synthetic dataset, writes it in the CSV exchange format,
reads it back, and walks through the window/segment arithmetic that feeds
the attention memory.
"""

import tempfile
from pathlib import Path

from gcnm import SegmentSpec, ingest_series, normalize, segment_index, split_anchors
from gcnm.series import write_graph_edges, write_series
from gcnm.synthetic import daily_traffic
from gcnm.windows import admissible_anchors

workdir = Path(tempfile.mkdtemp(prefix="gcnm_demo_"))
series, graph = daily_traffic(n_nodes=6, n_steps=900, samples_per_day=48, seed=1)
write_series(series, workdir / "series.csv")
write_graph_edges(graph.edges, workdir / "graph.csv")
print(f"wrote {workdir}/series.csv with {series.n_nodes} nodes x {series.n_steps} steps")

loaded, road_graph = ingest_series(workdir / "series.csv", workdir / "graph.csv")
print(f"re-ingested: missing fraction {loaded.missing_fraction():.4f}, "
      f"zero-or-missing ratio {loaded.zero_or_missing_ratio():.4f}")

normalized = normalize(loaded, train_fraction=0.7)
print(f"scale factor (train max): {normalized.scale_factor:.3f}; "
      f"normalized range [{normalized.values.min():.3f}, {normalized.values.max():.3f}]")

spec = SegmentSpec(tau=12, horizon=12, n_h=2, n_d=2, n_w=1,
                   samples_per_day=48, samples_per_week=336, lookback=12)
anchors = admissible_anchors(normalized.n_steps, spec)
splits = split_anchors(anchors)
print(f"\nadmissible anchors: {len(anchors)} "
      f"(first {anchors[0]}, last {anchors[-1]})")
print("split sizes:", {k: len(v) for k, v in splits.items()})

t = int(anchors[0])
idx = segment_index(t, spec)
print(f"\nmemory segments for the first window (anchor t={t}):")
print(f"  hourly  ({len(idx.hourly)} steps): {idx.hourly[0]}..{idx.hourly[-1]}")
print(f"  daily   ({len(idx.daily)} steps): around t - j*48 for j=2,1")
print(f"  weekly  ({len(idx.weekly)} steps): around t - 336")
print(f"  input covers [{t - spec.tau}, {t}), target covers [{t}, {t + spec.horizon})")
