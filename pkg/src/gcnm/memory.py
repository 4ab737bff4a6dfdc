"""Multi-scale attention memory producing enriched traffic embeddings.

Local statistics and trainable decay rates blend observed values with
temporal/spatial estimates; a key-value attention over recent, daily, and
weekly history segments adds global context. Output is one d-dimensional
embedding per node per input timestamp.
"""

from __future__ import annotations

import math

import torch
from torch import nn

from .errors import DataError


def uniform_(tensor: torch.Tensor, fan_in: int) -> None:
    bound = 1.0 / math.sqrt(max(fan_in, 1))
    nn.init.uniform_(tensor, -bound, bound)


STAT_KEYS = ("temporal_mean", "last_value", "last_delta",
             "spatial_mean", "nearest_value", "nearest_delta")


class MemoryModule(nn.Module):
    """Maps (window, mask, local stats, history segments) -> [B, d, N, tau]."""

    def __init__(self, n_nodes: int, n_features: int, d: int):
        super().__init__()
        self.d = d
        self.w_query = nn.Parameter(torch.empty(n_features, d))
        self.b_query = nn.Parameter(torch.empty(n_nodes, d))
        self.w_key = nn.Parameter(torch.empty(n_features, d))
        self.b_key = nn.Parameter(torch.empty(n_nodes, d))
        self.w_value = nn.Parameter(torch.empty(n_features, d))
        self.b_value = nn.Parameter(torch.empty(n_nodes, d))
        self.w_out = nn.Parameter(torch.empty(2 * d, d))
        self.b_out = nn.Parameter(torch.empty(d))
        # one scalar (w, b) pair per decay, shared across nodes
        self.decay_temporal_w = nn.Parameter(torch.empty(()))
        self.decay_temporal_b = nn.Parameter(torch.empty(()))
        self.decay_spatial_w = nn.Parameter(torch.empty(()))
        self.decay_spatial_b = nn.Parameter(torch.empty(()))
        self.reset_parameters(n_features)

    def reset_parameters(self, n_features: int) -> None:
        for w in (self.w_query, self.w_key, self.w_value):
            uniform_(w, n_features)
        for b in (self.b_query, self.b_key, self.b_value):
            uniform_(b, n_features)
        uniform_(self.w_out, 2 * self.d)
        uniform_(self.b_out, 2 * self.d)
        # decay slopes start positive: with w*delta + b < 0 for every distance
        # the rectifier clamps permanently and the pair never receives gradient
        for w in (self.decay_temporal_w, self.decay_spatial_w):
            nn.init.uniform_(w, 0.05, 1.0)
        for b in (self.decay_temporal_b, self.decay_spatial_b):
            nn.init.uniform_(b, -0.1, 0.1)

    def decay(self, delta: torch.Tensor, w: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
        return torch.exp(-torch.clamp(w * delta + b, min=0.0))

    def local_features(self, x: torch.Tensor, m: torch.Tensor,
                       stats: dict[str, torch.Tensor]) -> torch.Tensor:
        """Z tensor [B, N, F, tau]; masked entries never contribute raw values."""
        gamma_t = self.decay(stats["last_delta"], self.decay_temporal_w, self.decay_temporal_b)
        gamma_s = self.decay(stats["nearest_delta"], self.decay_spatial_w, self.decay_spatial_b)
        estimate = (gamma_t * stats["last_value"] + gamma_s * stats["nearest_value"]
                    + (1.0 - gamma_t) * stats["temporal_mean"]
                    + (1.0 - gamma_s) * stats["spatial_mean"])
        return m * x + (1.0 - m) * estimate

    def forward(self, x: torch.Tensor, m: torch.Tensor, stats: dict[str, torch.Tensor],
                segments: torch.Tensor, return_attention: bool = False):
        """x, m, stats entries: [B, N, F, tau]; segments: [B, slots, N, F]."""
        if segments.shape[1] < 1:
            raise DataError("memory needs at least one history slot")
        z = self.local_features(x, m, stats)
        query = torch.einsum("bnft,fd->btnd", z, self.w_query) + self.b_query
        keys = torch.einsum("bsnf,fd->bsnd", segments, self.w_key) + self.b_key
        values = torch.einsum("bsnf,fd->bsnd", segments, self.w_value) + self.b_value
        scores = torch.einsum("btnd,bsnd->btsn", query, keys)
        attention = torch.softmax(scores, dim=2)
        response = torch.einsum("btsn,bsnd->btnd", attention, values)
        enriched = torch.cat([query, response], dim=-1) @ self.w_out + self.b_out
        embeddings = enriched.permute(0, 3, 2, 1)  # [B, d, N, tau]
        if return_attention:
            return embeddings, attention
        return embeddings
