"""The assembled forecasting network: memory -> ST blocks -> skip head."""

from __future__ import annotations

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from .config import ModelConfig
from .errors import NumericError
from .graph import GraphSource
from .memory import STAT_KEYS, MemoryModule
from .stblock import STBlock


def masked_mae(pred: torch.Tensor, target: torch.Tensor,
               mask: torch.Tensor | None = None) -> torch.Tensor:
    """Mean absolute error; with a mask, missing target entries are excluded."""
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: {tuple(pred.shape)} vs {tuple(target.shape)}")
    err = (pred - target).abs()
    if mask is None:
        return err.mean()
    total = mask.sum()
    if total == 0:
        return err.sum() * 0.0
    return (err * mask).sum() / total


def _check_finite(tensor: torch.Tensor, stage: str) -> None:
    if not torch.isfinite(tensor).all():
        raise NumericError(f"non-finite values after stage {stage!r}")


class GCNM(nn.Module):
    """Joint missing-value handling and multi-step forecasting."""

    def __init__(self, config: ModelConfig, n_nodes: int, n_features: int,
                 predefined: np.ndarray):
        super().__init__()
        self.config = config
        self.memory = MemoryModule(n_nodes, n_features, config.d)
        self.graph_source = GraphSource(config.graph_mode, n_nodes, n_features,
                                        config.d, config.K, config.alpha, predefined,
                                        shared_filter=config.shared_filter)
        shrink = sum(d * (config.kernel - 1) for d in config.dilations)
        required = 1 + config.blocks * shrink
        self.pad = max(0, required - config.tau)
        self.blocks = nn.ModuleList(
            [STBlock(config.d, config.kernel, config.dilations, config.K,
                     self.graph_source.n_supports) for _ in range(config.blocks)])
        # temporal lengths per block on the padded input
        lengths = [config.tau + self.pad]
        for _ in range(config.blocks):
            lengths.append(lengths[-1] - shrink)
        self.block_lengths = lengths
        # skip projections: one full-width 1 x tau_i convolution per tapped state
        tap_lengths = lengths[1:] + [lengths[-1]]
        self.skip_convs = nn.ModuleList(
            [nn.Conv2d(config.d, config.d, kernel_size=(1, t)) for t in tap_lengths])
        self.fc1 = nn.Conv2d((config.blocks + 1) * config.d, config.fc_hidden, (1, 1))
        self.fc2 = nn.Conv2d(config.fc_hidden, config.horizon, (1, 1))
        self.to(torch.get_default_dtype())

    def forward(self, batch: dict[str, torch.Tensor]) -> torch.Tensor:
        x, m = batch["x"], batch["mask"]
        stats = {k: batch[k] for k in STAT_KEYS}
        hidden = self.memory(x, m, stats, batch["segments"])  # [B, d, N, tau]
        _check_finite(hidden, "memory")
        if self.pad:
            hidden = F.pad(hidden, (self.pad, 0))
            x = F.pad(x, (self.pad, 0))
        taps = []
        for i, block in enumerate(self.blocks):
            t_next = self.block_lengths[i + 1]
            supports = self.graph_source(hidden[..., -t_next:],
                                         observations=x[..., -t_next:])
            hidden, tap = block(hidden, supports)
            _check_finite(hidden, f"st_block_{i}")
            taps.append(tap)
        taps.append(hidden)
        skipped = [conv(tap) for conv, tap in zip(self.skip_convs, taps)]
        combined = torch.cat(skipped, dim=1)  # [B, (l+1)d, N, 1]
        out = self.fc2(torch.relu(self.fc1(combined)))
        _check_finite(out, "output_head")
        return out.squeeze(-1).permute(0, 2, 1)  # [B, N, horizon]
