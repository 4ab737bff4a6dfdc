"""Masked forecast-accuracy metrics (MAE / RMSE / MAPE).

MAE and RMSE average over entries whose target is observed; MAPE additionally
excludes zero targets. An empty surviving set yields explicit None markers,
never a silent zero.
"""

from __future__ import annotations

import math

import numpy as np


def masked_metrics(pred: np.ndarray, target: np.ndarray,
                   target_mask: np.ndarray) -> dict:
    if pred.shape != target.shape or pred.shape != target_mask.shape:
        raise ValueError("pred, target, and target_mask shapes must match")
    observed = target_mask > 0
    n = int(observed.sum())
    if n == 0:
        return {"mae": None, "rmse": None, "mape": None, "n": 0}
    err = np.abs(pred[observed] - target[observed])
    # fsum is exactly rounded, so results are independent of summation order
    mae = math.fsum(err) / n
    rmse = math.sqrt(math.fsum(err * err) / n)
    kept = target[observed] != 0
    if kept.any():
        mape = math.fsum(err[kept] / np.abs(target[observed][kept])) / int(kept.sum())
    else:
        mape = None
    return {"mae": mae, "rmse": rmse, "mape": mape, "n": n}


def horizon_report(pred: np.ndarray, target: np.ndarray, target_mask: np.ndarray,
                   scale: float = 1.0, horizons: tuple[int, ...] | None = None,
                   **labels) -> list[dict]:
    """Per-horizon metric entries plus the all-step average, in original units.

    pred/target/target_mask: [windows, nodes, steps] in normalized units.
    ``labels`` (model, dataset, scenario, rate, ...) are copied onto every entry.
    """
    pred = pred * scale
    target = target * scale
    steps = pred.shape[-1]
    horizons = horizons or tuple(range(1, steps + 1))
    entries = []
    for h in horizons:
        if not 1 <= h <= steps:
            raise ValueError(f"horizon {h} outside 1..{steps}")
        entry = dict(labels, horizon=h)
        entry.update(masked_metrics(pred[..., h - 1], target[..., h - 1],
                                    target_mask[..., h - 1]))
        entries.append(entry)
    avg = dict(labels, horizon="avg")
    avg.update(masked_metrics(pred, target, target_mask))
    entries.append(avg)
    return entries
