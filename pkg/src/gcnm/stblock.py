"""Spatio-temporal block: gated dilated causal convolution, dynamic graph
diffusion convolution, and a residual over the surviving timestamps."""

from __future__ import annotations

import torch
import torch.nn.functional as F
from torch import nn

from .errors import DataError
from .graph import row_normalize
from .memory import uniform_


def dilated_causal_conv(x: torch.Tensor, kernel: torch.Tensor, dilation: int) -> torch.Tensor:
    """out(t) = sum_s kernel[s] * x(t - dilation*s); strictly causal.

    x: [B, C_in, N, T]; kernel: [C_out, C_in, K]. Output time length shrinks
    by dilation * (K - 1).
    """
    k = kernel.shape[-1]
    if x.shape[-1] <= dilation * (k - 1):
        raise DataError(f"sequence length {x.shape[-1]} too short for kernel {k} "
                        f"at dilation {dilation}; need at least {dilation * (k - 1) + 1}")
    # torch conv2d is a cross-correlation; flipping aligns kernel[s] with x(t - d*s)
    weight = kernel.flip(-1).unsqueeze(2)
    return F.conv2d(x, weight, dilation=(1, dilation))


class GatedTemporalConv(nn.Module):
    """tanh(filter-branch) * sigmoid(gate-branch) over a stack of dilations."""

    def __init__(self, channels: int, kernel_size: int, dilations: tuple[int, ...]):
        super().__init__()
        self.dilations = tuple(dilations)
        self.kernel_size = kernel_size
        fan_in = channels * kernel_size
        self.filter_kernels = nn.ParameterList()
        self.gate_kernels = nn.ParameterList()
        for _ in self.dilations:
            for bank in (self.filter_kernels, self.gate_kernels):
                w = nn.Parameter(torch.empty(channels, channels, kernel_size))
                uniform_(w, fan_in)
                bank.append(w)

    @property
    def shrink(self) -> int:
        return sum(d * (self.kernel_size - 1) for d in self.dilations)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        f, g = x, x
        for i, dilation in enumerate(self.dilations):
            f = dilated_causal_conv(f, self.filter_kernels[i], dilation)
            g = dilated_causal_conv(g, self.gate_kernels[i], dilation)
        return torch.tanh(f) * torch.sigmoid(g)


def graph_diffusion_conv(h: torch.Tensor, supports: list[torch.Tensor],
                         banks: list[nn.ParameterList]) -> torch.Tensor:
    """sum over supports of sum_k A_t^k h(t) W_k with row-normalized A_t.

    h: [B, C, N, T]; each support: [B, T, N, N] aligned to h's timestamps.
    """
    ht = h.permute(0, 3, 2, 1)  # [B, T, N, C]
    out = None
    for support, bank in zip(supports, banks):
        if support.shape[1] != ht.shape[1]:
            raise DataError(f"graph sequence length {support.shape[1]} does not match "
                            f"feature length {ht.shape[1]}")
        a = row_normalize(support)
        power = ht
        acc = power @ bank[0]
        for k in range(1, len(bank)):
            power = a @ power
            acc = acc + power @ bank[k]
        out = acc if out is None else out + acc
    return out.permute(0, 3, 2, 1)


class STBlock(nn.Module):
    """One block; forward returns (residual output, gated TCN tap)."""

    def __init__(self, channels: int, kernel_size: int, dilations: tuple[int, ...],
                 diffusion_steps: int, n_supports: int):
        super().__init__()
        self.tcn = GatedTemporalConv(channels, kernel_size, dilations)
        self.graph_banks = nn.ModuleList()
        for _ in range(n_supports):
            bank = nn.ParameterList()
            for _ in range(diffusion_steps + 1):
                w = nn.Parameter(torch.empty(channels, channels))
                uniform_(w, channels)
                bank.append(w)
            self.graph_banks.append(bank)

    @property
    def shrink(self) -> int:
        return self.tcn.shrink

    def forward(self, x: torch.Tensor, supports: list[torch.Tensor]):
        tap = self.tcn(x)
        spatial = graph_diffusion_conv(tap, supports, list(self.graph_banks))
        residual = x[..., -tap.shape[-1]:]
        return residual + spatial, tap
