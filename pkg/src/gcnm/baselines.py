"""Reference models: node-shared GRU forecasters and two-step imputers."""

from __future__ import annotations

import numpy as np
import torch
from torch import nn

from .series import TrafficSeries


class GRUForecaster(nn.Module):
    """Recurrent floor baseline; one shared cell applied per node.

    With ``impute=True`` (GRU-I), a missing input step is replaced by the
    model's own one-step prediction from the previous hidden state; on fully
    observed windows the output is identical to the plain GRU with the same
    weights.
    """

    def __init__(self, n_features: int, hidden_size: int, horizon: int,
                 impute: bool = False):
        super().__init__()
        self.impute = impute
        self.cell = nn.GRUCell(n_features, hidden_size)
        self.step_head = nn.Linear(hidden_size, n_features)
        self.out_head = nn.Linear(hidden_size, horizon)

    def forward(self, batch: dict[str, torch.Tensor], return_step_predictions: bool = False):
        x, m = batch["x"], batch["mask"]           # [B, N, F, tau]
        b, n, f, tau = x.shape
        xf = x.permute(0, 1, 3, 2).reshape(b * n, tau, f)
        mf = m.permute(0, 1, 3, 2).reshape(b * n, tau, f)
        h = x.new_zeros(b * n, self.cell.hidden_size)
        steps = []
        for t in range(tau):
            xt = xf[:, t]
            if self.impute:
                predicted = self.step_head(h)
                steps.append(predicted)
                xt = mf[:, t] * xt + (1 - mf[:, t]) * predicted
            h = self.cell(xt, h)
        out = self.out_head(h).reshape(b, n, -1)
        if return_step_predictions:
            return out, torch.stack(steps, dim=1).reshape(b, n, tau, f)
        return out


def impute_mean(series: TrafficSeries) -> tuple[TrafficSeries, list[int]]:
    """Fill missing entries with the per-node observed mean; mask becomes 1.

    Rows with no observed value at all fall back to the global observed mean
    and are reported in the returned flag list (flattened node*feature index).
    """
    out = series.copy()
    n, f, _ = out.values.shape
    observed = out.mask.sum(axis=2)
    sums = (out.values * out.mask).sum(axis=2)
    global_mean = float((out.values * out.mask).sum() / max(out.mask.sum(), 1.0))
    flagged = []
    for i in range(n):
        for j in range(f):
            if observed[i, j] > 0:
                fill = sums[i, j] / observed[i, j]
            else:
                fill = global_mean
                flagged.append(i * f + j)
            row_mask = out.mask[i, j]
            out.values[i, j] = np.where(row_mask > 0, out.values[i, j], fill)
    out.mask = np.ones_like(out.mask)
    return out, flagged


def impute_window_values(values: np.ndarray, mask: np.ndarray, kind: str) -> np.ndarray:
    """Per-window imputation for the two-step pipelines, along the last axis.

    ``mean`` fills each row's missing entries with that row's observed mean;
    ``knn`` linearly interpolates between the previous and next observed
    values, extending at the boundaries. Rows with no observations fall back
    to the window-wide observed mean (0 if the window is entirely missing).
    """
    if kind not in ("mean", "knn"):
        raise ValueError(f"unknown imputation kind {kind!r}")
    out = values.copy()
    flat_v = out.reshape(-1, out.shape[-1])
    flat_m = mask.reshape(-1, mask.shape[-1]) > 0
    grid = np.arange(out.shape[-1])
    total = flat_m.sum()
    window_mean = float(flat_v[flat_m].mean()) if total else 0.0
    for row_v, row_m in zip(flat_v, flat_m):
        if row_m.all():
            continue
        if not row_m.any():
            row_v[:] = window_mean
            continue
        if kind == "mean":
            fill = row_v[row_m].mean()
            row_v[~row_m] = fill
        else:
            row_v[~row_m] = np.interp(grid[~row_m], grid[row_m], row_v[row_m])
    return out


def impute_knn(series: TrafficSeries) -> tuple[TrafficSeries, list[int]]:
    """Linearly interpolate each missing run between its previous and next
    observed values (k=2 temporal neighbors); boundary runs extend the nearest
    observed value. Fully missing rows fall back to the global mean, flagged."""
    out = series.copy()
    n, f, t = out.values.shape
    grid = np.arange(t)
    global_mean = float((out.values * out.mask).sum() / max(out.mask.sum(), 1.0))
    flagged = []
    for i in range(n):
        for j in range(f):
            row_mask = out.mask[i, j] > 0
            if not row_mask.any():
                out.values[i, j] = global_mean
                flagged.append(i * f + j)
                continue
            if row_mask.all():
                continue
            obs_t = grid[row_mask]
            obs_v = out.values[i, j, row_mask]
            filled = np.interp(grid, obs_t, obs_v)
            out.values[i, j] = np.where(row_mask, out.values[i, j], filled)
    out.mask = np.ones_like(out.mask)
    return out, flagged
