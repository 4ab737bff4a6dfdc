"""Command-line surface: prepare, inject, train, evaluate, compare.

Exit codes: 0 success, 2 usage/config error, 3 data error, 4 numeric failure.
Every command is deterministic given its flags and seeds, and writes its
outputs under --out together with a manifest.json index.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import jsonschema
import torch

from .cd_diagram import emit_cd_diagram
from .config import load_config
from .dataset import load_bundle, write_bundle
from .errors import ConfigError, DataError, GcnmError, NumericError
from .masking import MissingScenario, inject_per_split, mask_stats
from .metrics import horizon_report
from .series import ingest_series, normalize
from .stats import compare_models
from .training import (build_dataset, build_model, evaluate_mae, load_checkpoint,
                       predict_split, restore_model, train_model)
from .windows import admissible_anchors, split_anchors

SCENARIO_ALIASES = {"short": "short_range", "long": "long_range", "mix": "mix_range"}

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "array",
    "items": {
        "type": "object",
        "required": ["model", "dataset", "scenario", "rate", "horizon",
                     "mae", "rmse", "mape", "n"],
        "properties": {
            "model": {"type": "string"},
            "dataset": {"type": ["string", "null"]},
            "scenario": {"type": ["string", "null"]},
            "rate": {"type": ["number", "null"]},
            "horizon": {"anyOf": [{"type": "integer", "minimum": 1},
                                  {"const": "avg"}]},
            "mae": {"type": ["number", "null"]},
            "rmse": {"type": ["number", "null"]},
            "mape": {"type": ["number", "null"]},
            "n": {"type": "integer", "minimum": 0},
        },
        "additionalProperties": False,
    },
}


def _write_json(path: Path, payload) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _out_manifest(out: Path, files: list[str], extra: dict | None = None) -> None:
    _write_json(out / "manifest.json", dict(extra or {}, files=sorted(files)))


def _require_file(path: str | Path, what: str) -> Path:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"{what} not found: {p}")
    return p


def cmd_prepare(args) -> int:
    series_path = _require_file(args.series, "series file")
    graph_path = _require_file(args.graph, "graph file")
    config = load_config(args.config, args.set)
    series, graph = ingest_series(series_path, graph_path)
    normalized = normalize(series, config.train_fraction)
    spec = config.segment_spec(normalized.step_minutes)
    anchors = admissible_anchors(normalized.n_steps, spec)
    splits = split_anchors(anchors, config.train_fraction, config.val_fraction)
    manifest = {
        "kind": "bundle",
        "step_minutes": normalized.step_minutes,
        "scale_factor": normalized.scale_factor,
        "zero_or_missing_ratio": series.zero_or_missing_ratio(),
        "window": {"tau": spec.tau, "horizon": spec.horizon, "n_h": spec.n_h,
                   "n_d": spec.n_d, "n_w": spec.n_w,
                   "samples_per_day": spec.samples_per_day,
                   "samples_per_week": spec.samples_per_week,
                   "lookback": spec.lookback},
        "splits": {name: len(a) for name, a in splits.items()},
        "scenario": None,
    }
    write_bundle(args.out, normalized, graph, manifest)
    print(f"bundle written to {args.out} "
          f"(splits: {manifest['splits']}, scale: {normalized.scale_factor:g})")
    return 0


def cmd_inject(args) -> int:
    bundle = load_bundle(_require_file(args.bundle, "bundle"))
    kind = SCENARIO_ALIASES.get(args.scenario, args.scenario)
    scenario = MissingScenario(kind=kind, rate=args.rate, seed=args.seed)
    tau = bundle.manifest.get("window", {}).get("tau", 12)
    injected = inject_per_split(bundle.inputs, scenario, tau)
    stats = mask_stats(injected)
    manifest = dict(bundle.manifest)
    manifest["scenario"] = {"kind": kind, "rate": args.rate, "seed": args.seed,
                            "realized_missing_fraction": stats["missing_fraction"]}
    write_bundle(args.out, injected, bundle.graph, manifest, clean=bundle.targets)
    print(f"injected {kind} at rate {args.rate}: realized missing fraction "
          f"{stats['missing_fraction']:.4f}; bundle written to {args.out}")
    return 0


def cmd_train(args) -> int:
    bundle = load_bundle(_require_file(args.bundle, "bundle"))
    config = load_config(args.config, args.set)
    dataset = build_dataset(bundle, config)
    model = build_model(config, dataset)
    start_epoch = 0
    if args.resume:
        state, _, meta = load_checkpoint(_require_file(args.resume, "checkpoint"))
        model.load_state_dict({k: torch.as_tensor(v) for k, v in state.items()})
        start_epoch = meta["epoch"] + 1
    result = train_model(model, dataset, config, out_dir=args.out,
                         start_epoch=start_epoch)
    _out_manifest(Path(args.out), ["checkpoint.gcnm", "history.csv", "manifest.json"],
                  {"kind": "training_run", "best_epoch": result.best_epoch,
                   "best_val_mae": result.best_val_mae,
                   "stopped_epoch": result.stopped_epoch})
    print(f"trained {config.baseline_kind}: best val MAE {result.best_val_mae:.4f} "
          f"at epoch {result.best_epoch} (stopped after {result.stopped_epoch})")
    return 0


def cmd_evaluate(args) -> int:
    bundle = load_bundle(_require_file(args.bundle, "bundle"))
    model, config, _, dataset = restore_model(
        _require_file(args.checkpoint, "checkpoint"), bundle)
    pred, target, target_mask = predict_split(model, dataset, "test", config.batch_size)
    scenario = bundle.manifest.get("scenario") or {}
    entries = horizon_report(
        pred, target, target_mask, scale=dataset.scale_factor,
        model=args.model_name or config.baseline_kind,
        dataset=args.dataset_name, scenario=scenario.get("kind"),
        rate=scenario.get("rate"))
    jsonschema.validate(entries, REPORT_SCHEMA)
    out = Path(args.out)
    _write_json(out / "report.json", entries)
    _out_manifest(out, ["report.json", "manifest.json"], {"kind": "metric_report"})
    shown = [e for e in entries if e["horizon"] in (1, 3, 6, 12, "avg")]
    for e in shown:
        mape = "-" if e["mape"] is None else f"{100 * e['mape']:.2f}%"
        print(f"h={e['horizon']:>3}: MAE {e['mae']:.4f}  RMSE {e['rmse']:.4f}  "
              f"MAPE {mape}  (n={e['n']})")
    return 0


def cmd_compare(args) -> int:
    if len(args.reports) < 2:
        raise ConfigError("need at least two --reports to compare")
    per_model: dict[str, dict[tuple, float]] = {}
    for path in args.reports:
        with open(_require_file(path, "report")) as fh:
            entries = json.load(fh)
        jsonschema.validate(entries, REPORT_SCHEMA)
        for e in entries:
            if e[args.metric] is None:
                continue
            cell = (e["dataset"], e["scenario"], e["rate"], str(e["horizon"]))
            per_model.setdefault(e["model"], {})[cell] = e[args.metric]
    if len(per_model) < 2:
        raise ConfigError("reports cover fewer than two distinct models")
    common = set.intersection(*[set(cells) for cells in per_model.values()])
    if len(common) < 2:
        raise DataError("fewer than two evaluation cells shared by all models")
    ordered = sorted(common, key=lambda c: tuple(str(x) for x in c))
    scores = {m: [per_model[m][c] for c in ordered] for m in per_model}
    result = compare_models(scores, alpha=args.alpha)
    out = Path(args.out)
    payload = result.to_payload()
    payload["cells"] = [list(c) for c in ordered]
    payload["metric"] = args.metric
    _write_json(out / "comparison.json", payload)
    emit_cd_diagram(result, out / "cd_diagram.svg")
    _out_manifest(out, ["comparison.json", "cd_diagram.svg", "manifest.json"],
                  {"kind": "comparison"})
    print(f"Friedman chi2={result.friedman_statistic:.4f} p={result.friedman_p:.4g} "
          f"over {len(ordered)} cells")
    for model in sorted(result.average_ranks, key=result.average_ranks.get):
        print(f"  rank {result.average_ranks[model]:.3f}  {model}")
    print(f"cliques: {result.cliques}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gcnm",
        description="Traffic forecasting with one-step missing-value handling")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare", help="ingest and normalize a dataset into a bundle")
    p.add_argument("--series", required=True)
    p.add_argument("--graph", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE")
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("inject", help="inject a missing-value scenario into a bundle")
    p.add_argument("--bundle", required=True)
    p.add_argument("--scenario", required=True,
                   choices=sorted(SCENARIO_ALIASES) + sorted(SCENARIO_ALIASES.values()))
    p.add_argument("--rate", required=True, type=float)
    p.add_argument("--seed", required=True, type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_inject)

    p = sub.add_parser("train", help="train a model on a bundle")
    p.add_argument("--bundle", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE")
    p.add_argument("--resume", default=None, help="checkpoint to continue from")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="evaluate a checkpoint on a bundle's test split")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--bundle", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--model-name", default=None)
    p.add_argument("--dataset-name", default=None)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("compare", help="statistical comparison of metric reports")
    p.add_argument("--reports", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--metric", default="mae", choices=["mae", "rmse", "mape"])
    p.add_argument("--alpha", type=float, default=0.05)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except FileNotFoundError as exc:
        print(f"error: missing file {exc.filename}", file=sys.stderr)
        return 2
    except GcnmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
