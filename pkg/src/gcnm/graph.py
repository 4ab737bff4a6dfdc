"""Per-timestamp dynamic adjacency construction and its ablation variants.

The default mode builds one adjacency per timestamp from the enriched
embeddings: diffusion filters over the predefined road graph modulate two
static node embeddings, whose antisymmetric outer-product difference yields a
uni-directional graph (A[i,j] * A[j,i] = 0 exactly).
"""

from __future__ import annotations

import numpy as np
import torch
from torch import nn

from .errors import ConfigError, DataError
from .memory import uniform_

GRAPH_MODES = ("dynamic", "obs", "adp", "pre", "com")


def row_normalize(a: torch.Tensor) -> torch.Tensor:
    """Divide rows by their sums; all-zero rows are left as zero rows."""
    rowsum = a.sum(dim=-1, keepdim=True)
    safe = torch.where(rowsum > 0, rowsum, torch.ones_like(rowsum))
    return a / safe


def unidirectional_adjacency(e1: torch.Tensor, e2: torch.Tensor, alpha: float) -> torch.Tensor:
    """ReLU(tanh(alpha * (e1 e2^T - e2 e1^T))) over the trailing [N, d] axes.

    Computing S = e1 e2^T once and subtracting its transpose keeps the argument
    antisymmetric exactly, so A[i,j] * A[j,i] = 0 holds exactly after the ReLU.
    """
    s = torch.einsum("...nd,...md->...nm", e1, e2)
    return torch.relu(torch.tanh(alpha * (s - s.transpose(-1, -2))))


class GraphSource(nn.Module):
    """Produces the adjacency support list consumed by the graph convolution."""

    def __init__(self, mode: str, n_nodes: int, n_features: int, d: int,
                 diffusion_steps: int, alpha: float, predefined: np.ndarray,
                 shared_filter: bool = False):
        super().__init__()
        if mode not in GRAPH_MODES:
            raise ConfigError(f"unknown graph mode {mode!r}")
        if predefined.shape != (n_nodes, n_nodes):
            raise DataError("predefined adjacency shape does not match node count")
        if np.any(predefined.sum(axis=1) <= 0):
            raise DataError("predefined adjacency has a zero row sum; self loops missing")
        self.mode = mode
        self.K = diffusion_steps
        self.alpha = alpha
        self.shared_filter = shared_filter
        # buffers stay float64 until the owning module converts dtypes, so the
        # pre variant can return the adjacency bit-exactly in double precision
        adj = torch.as_tensor(predefined, dtype=torch.float64)
        self.register_buffer("predefined", adj)
        self.register_buffer("transition", row_normalize(adj))
        self.node_embed_1 = nn.Parameter(torch.empty(n_nodes, d))
        self.node_embed_2 = nn.Parameter(torch.empty(n_nodes, d))
        self.filter_bank_1 = nn.ParameterList(
            [nn.Parameter(torch.empty(d, d)) for _ in range(diffusion_steps + 1)])
        self.filter_bank_2 = nn.ParameterList(
            [nn.Parameter(torch.empty(d, d)) for _ in range(diffusion_steps + 1)])
        self.obs_proj = nn.Parameter(torch.empty(n_features, d))
        self.reset_parameters(d, n_features)

    def reset_parameters(self, d: int, n_features: int) -> None:
        uniform_(self.node_embed_1, d)
        uniform_(self.node_embed_2, d)
        for bank in (self.filter_bank_1, self.filter_bank_2):
            for w in bank:
                uniform_(w, d)
        uniform_(self.obs_proj, n_features)

    @property
    def n_supports(self) -> int:
        return 2 if self.mode == "com" else 1

    def dynamic_filter(self, h: torch.Tensor, bank: nn.ParameterList) -> torch.Tensor:
        """Diffusion over the predefined graph: sum_k P^k h W_k, P^0 = I."""
        out = h @ bank[0]
        power = h
        for k in range(1, self.K + 1):
            power = torch.einsum("mn,btnd->btmd", self.transition, power)
            out = out + power @ bank[k]
        return out

    def build_dynamic_graph(self, h: torch.Tensor) -> torch.Tensor:
        """h: [B, T, N, d] -> adjacency [B, T, N, N] with entries in [0, 1)."""
        f1 = self.dynamic_filter(h, self.filter_bank_1)
        f2 = self.dynamic_filter(h, self.filter_bank_1 if self.shared_filter
                                 else self.filter_bank_2)
        e1 = torch.tanh(self.alpha * (f1 * self.node_embed_1))
        e2 = torch.tanh(self.alpha * (f2 * self.node_embed_2))
        return unidirectional_adjacency(e1, e2, self.alpha)

    def adaptive_graph(self) -> torch.Tensor:
        return torch.softmax(torch.relu(self.node_embed_1 @ self.node_embed_2.T), dim=-1)

    def forward(self, embeddings: torch.Tensor, observations: torch.Tensor | None = None
                ) -> list[torch.Tensor]:
        """embeddings: [B, d, N, T']; observations (obs mode): [B, N, F, T'].

        Returns per-timestamp supports, each [B, T', N, N] (static modes expand
        a single matrix over time).
        """
        b, _, n, t = embeddings.shape
        if self.mode == "dynamic":
            return [self.build_dynamic_graph(embeddings.permute(0, 3, 2, 1))]
        if self.mode == "obs":
            if observations is None:
                raise DataError("obs mode needs the raw observation window")
            projected = observations.permute(0, 3, 1, 2) @ self.obs_proj  # [B, T', N, d]
            return [self.build_dynamic_graph(projected)]
        if self.mode == "adp":
            return [self.adaptive_graph().expand(b, t, n, n)]
        if self.mode == "pre":
            return [self.predefined.expand(b, t, n, n)]
        # com: predefined and learned static graphs, both convolved then summed
        return [self.adaptive_graph().expand(b, t, n, n), self.predefined.expand(b, t, n, n)]
