"""Training loop (Adam + early stopping), checkpoints, and model factory.

Checkpoint files are a structured archive: the magic header ``GCNM1``, an
8-byte big-endian JSON length, the JSON block (nested config + metadata), and
an npz payload holding every named state tensor.
"""

from __future__ import annotations

import copy
import io
import json
import struct
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from .baselines import GRUForecaster
from .config import ModelConfig, config_from_payload, config_to_payload
from .dataset import DataBundle, ForecastDataset
from .errors import DataError, NumericError
from .model import GCNM, masked_mae

CHECKPOINT_MAGIC = b"GCNM1"
HISTORY_HEADER = "epoch,train_mae,val_mae,seconds"


def set_seed(seed: int) -> None:
    torch.manual_seed(seed)


def to_tensors(batch: dict[str, np.ndarray], dtype: torch.dtype) -> dict[str, torch.Tensor]:
    return {k: torch.as_tensor(v, dtype=dtype) for k, v in batch.items() if k != "anchor"}


def build_dataset(bundle: DataBundle, config: ModelConfig) -> ForecastDataset:
    """Dataset for the configured processing strategy. Two-step variants
    impute each input window and memory chunk (from its own observations
    only) and feed the main model all-ones masks, neutralizing its
    missing-value handling."""
    spec = config.segment_spec(bundle.inputs.step_minutes)
    impute = {"mean_impute": "mean", "knn_impute": "knn"}.get(config.baseline_kind)
    return ForecastDataset.from_bundle(bundle, spec, s_neighbors=config.S,
                                       train_fraction=config.train_fraction,
                                       val_fraction=config.val_fraction,
                                       impute=impute)


def build_model(config: ModelConfig, dataset: ForecastDataset) -> torch.nn.Module:
    set_seed(config.seed)
    if config.baseline_kind in ("gcnm", "mean_impute", "knn_impute"):
        return GCNM(config, dataset.n_nodes, dataset.n_features,
                    dataset.graph.adjacency)
    if config.baseline_kind == "gru":
        return GRUForecaster(dataset.n_features, config.hidden_size, config.horizon)
    return GRUForecaster(dataset.n_features, config.hidden_size, config.horizon,
                         impute=True)


@dataclass
class TrainResult:
    history: list[dict] = field(default_factory=list)
    best_val_mae: float = float("inf")
    best_epoch: int = -1
    stopped_epoch: int = -1


def evaluate_mae(model: torch.nn.Module, dataset: ForecastDataset, split: str,
                 batch_size: int, scale: float | None = None) -> float:
    """Masked MAE over one split, in original units by default."""
    dtype = next(model.parameters()).dtype
    scale = dataset.scale_factor if scale is None else scale
    total_err, total_n = 0.0, 0.0
    model.eval()
    with torch.no_grad():
        for batch in dataset.batches(split, batch_size):
            tensors = to_tensors(batch, dtype)
            pred = model(tensors)
            err = ((pred - tensors["target"]).abs() * tensors["target_mask"]).sum()
            total_err += err.item()
            total_n += tensors["target_mask"].sum().item()
    if total_n == 0:
        raise DataError(f"split {split!r} has no observed target entries")
    return scale * total_err / total_n


def predict_split(model: torch.nn.Module, dataset: ForecastDataset, split: str,
                  batch_size: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Stacked (predictions, targets, target masks) for a split, normalized units."""
    dtype = next(model.parameters()).dtype
    preds, targets, masks = [], [], []
    model.eval()
    with torch.no_grad():
        for batch in dataset.batches(split, batch_size):
            tensors = to_tensors(batch, dtype)
            preds.append(model(tensors).numpy())
            targets.append(batch["target"])
            masks.append(batch["target_mask"])
    return np.concatenate(preds), np.concatenate(targets), np.concatenate(masks)


def train_model(model: torch.nn.Module, dataset: ForecastDataset, config: ModelConfig,
                out_dir: str | Path | None = None, start_epoch: int = 0) -> TrainResult:
    """Adam with early stopping on validation masked MAE; restores the best
    parameters on exit and aborts (keeping the last good checkpoint) if the
    loss turns non-finite."""
    set_seed(config.seed + 1)  # decouple batch order from parameter init
    rng = np.random.default_rng(config.seed)
    dtype = next(model.parameters()).dtype
    optimizer = torch.optim.Adam(model.parameters(), lr=config.learning_rate)
    result = TrainResult()
    best_state = copy.deepcopy(model.state_dict())
    bad_epochs = 0
    scale = dataset.scale_factor

    def persist(epoch: int) -> None:
        if out_dir is None:
            return
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        meta = {"epoch": epoch, "val_mae": result.best_val_mae}
        save_checkpoint(out / "checkpoint.gcnm", model, config, meta)
        write_history(out / "history.csv", result.history)

    for epoch in range(start_epoch, start_epoch + config.max_epochs):
        tic = time.perf_counter()
        model.train()
        err_sum, n_sum = 0.0, 0.0
        diverged = False
        for batch in dataset.batches("train", config.batch_size, shuffle=True, rng=rng):
            tensors = to_tensors(batch, dtype)
            optimizer.zero_grad()
            try:
                pred = model(tensors)
                loss = masked_mae(pred, tensors["target"], tensors["target_mask"])
            except NumericError:
                diverged = True
                break
            if not torch.isfinite(loss):
                diverged = True
                break
            loss.backward()
            optimizer.step()
            n = tensors["target_mask"].sum().item()
            err_sum += loss.item() * n
            n_sum += n
        if diverged:
            model.load_state_dict(best_state)
            persist(epoch)
            raise NumericError(
                f"training diverged at epoch {epoch}; last good checkpoint restored"
                + (f" and saved under {out_dir}" if out_dir else ""))
        train_mae = scale * err_sum / max(n_sum, 1.0)
        val_mae = evaluate_mae(model, dataset, "val", config.batch_size, scale=scale)
        seconds = time.perf_counter() - tic
        result.history.append({"epoch": epoch, "train_mae": train_mae,
                               "val_mae": val_mae, "seconds": seconds})
        result.stopped_epoch = epoch
        if val_mae < result.best_val_mae:
            result.best_val_mae = val_mae
            result.best_epoch = epoch
            best_state = copy.deepcopy(model.state_dict())
            bad_epochs = 0
        else:
            bad_epochs += 1
            if bad_epochs > config.patience:
                break
    model.load_state_dict(best_state)
    persist(result.stopped_epoch)
    return result


def write_history(path: str | Path, history: list[dict]) -> None:
    lines = [HISTORY_HEADER]
    for row in history:
        lines.append(f"{row['epoch']},{row['train_mae']:.6f},{row['val_mae']:.6f},"
                     f"{row['seconds']:.3f}")
    Path(path).write_text("\n".join(lines) + "\n")


def save_checkpoint(path: str | Path, model: torch.nn.Module, config: ModelConfig,
                    meta: dict) -> None:
    state = {name: tensor.detach().cpu().numpy()
             for name, tensor in model.state_dict().items()}
    header = {"config": config_to_payload(config), "meta": meta,
              "tensors": sorted(state)}
    payload = json.dumps(header, sort_keys=True).encode()
    buffer = io.BytesIO()
    np.savez(buffer, **state)
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack(">Q", len(payload)))
        fh.write(payload)
        fh.write(buffer.getvalue())


def load_checkpoint(path: str | Path) -> tuple[dict[str, np.ndarray], ModelConfig, dict]:
    with open(path, "rb") as fh:
        magic = fh.read(len(CHECKPOINT_MAGIC))
        if magic != CHECKPOINT_MAGIC:
            raise DataError(f"{path} is not a checkpoint (bad magic {magic!r})")
        (length,) = struct.unpack(">Q", fh.read(8))
        header = json.loads(fh.read(length).decode())
        archive = np.load(io.BytesIO(fh.read()))
        state = {name: archive[name] for name in archive.files}
    return state, config_from_payload(header["config"]), header["meta"]


def restore_model(path: str | Path, bundle: DataBundle
                  ) -> tuple[torch.nn.Module, ModelConfig, dict, ForecastDataset]:
    """Rebuild the model and its dataset from a checkpoint and a bundle."""
    state, config, meta = load_checkpoint(path)
    dataset = build_dataset(bundle, config)
    model = build_model(config, dataset)
    tensors = {k: torch.as_tensor(v) for k, v in state.items()}
    model.load_state_dict(tensors)
    return model, config, meta, dataset
