import numpy as np
import pytest
import torch

from gcnm.errors import DataError
from gcnm.graph import row_normalize
from gcnm.stblock import (GatedTemporalConv, STBlock, dilated_causal_conv,
                          graph_diffusion_conv)

torch.manual_seed(1)


def seq(*vals):
    return torch.tensor(vals, dtype=torch.float64).view(1, 1, 1, -1)


class TestDilatedCausalConv:
    def test_delta_kernel_is_identity(self, rng):
        x = torch.as_tensor(rng.normal(size=(2, 1, 3, 8)))
        kernel = torch.tensor([[[1.0, 0.0]]], dtype=torch.float64)
        out = dilated_causal_conv(x, kernel, dilation=1)
        assert torch.allclose(out, x[..., 1:])

    def test_average_kernel(self):
        out = dilated_causal_conv(seq(1.0, 3.0), torch.tensor([[[0.5, 0.5]]]).double(), 1)
        assert torch.allclose(out, seq(2.0))

    def test_stacked_dilations_shrink_12_to_9(self, rng):
        x = torch.as_tensor(rng.normal(size=(1, 4, 3, 12)))
        tcn = GatedTemporalConv(4, kernel_size=2, dilations=(1, 2)).double()
        assert tcn.shrink == 3
        assert tcn(x).shape == (1, 4, 3, 9)

    def test_too_short_sequence_raises(self):
        with pytest.raises(DataError) as err:
            dilated_causal_conv(seq(1.0), torch.tensor([[[0.5, 0.5]]]).double(), 2)
        assert "at least 3" in str(err.value)

    def test_causality(self, rng):
        """Perturbing time t never changes outputs at aligned times < t."""
        tcn = GatedTemporalConv(3, kernel_size=2, dilations=(1, 2)).double()
        x = torch.as_tensor(rng.normal(size=(1, 3, 2, 10)))
        base = tcn(x)
        shrink = tcn.shrink
        for t in range(10):
            bumped = x.clone()
            bumped[..., t] += 1.0
            out = tcn(bumped)
            for j in range(out.shape[-1]):
                if j + shrink < t:  # output j is aligned to input time j + shrink
                    assert torch.equal(out[..., j], base[..., j]), (t, j)


class TestGatedTcn:
    def test_zero_gate_halves_tanh_branch(self, rng):
        tcn = GatedTemporalConv(2, 2, (1,)).double()
        with torch.no_grad():
            for w in tcn.gate_kernels:
                w.zero_()
        x = torch.as_tensor(rng.normal(size=(1, 2, 3, 6)))
        f = dilated_causal_conv(x, tcn.filter_kernels[0], 1)
        assert torch.allclose(tcn(x), 0.5 * torch.tanh(f))

    def test_zero_filter_gives_zero(self, rng):
        tcn = GatedTemporalConv(2, 2, (1, 2)).double()
        with torch.no_grad():
            for w in tcn.filter_kernels:
                w.zero_()
        x = torch.as_tensor(rng.normal(size=(1, 2, 3, 6)))
        assert torch.equal(tcn(x), torch.zeros(1, 2, 3, 3, dtype=torch.float64))

    def test_output_strictly_inside_unit_interval(self, rng):
        tcn = GatedTemporalConv(3, 2, (1, 2)).double()
        x = torch.as_tensor(rng.normal(size=(2, 3, 4, 9)))
        out = tcn(x)
        assert out.abs().max().item() < 1.0


class TestGraphDiffusionConv:
    def bank(self, weights):
        return torch.nn.ParameterList([torch.nn.Parameter(torch.as_tensor(w).double())
                                       for w in weights])

    def test_zero_adjacency_keeps_only_identity_term(self, rng):
        h = torch.as_tensor(rng.normal(size=(1, 2, 3, 4)))
        a = torch.zeros(1, 4, 3, 3, dtype=torch.float64)
        bank = self.bank([np.eye(2), rng.normal(size=(2, 2)), rng.normal(size=(2, 2))])
        out = graph_diffusion_conv(h, [a], [bank])
        assert torch.allclose(out, h)

    def test_k0_identity(self, rng):
        h = torch.as_tensor(rng.normal(size=(1, 2, 3, 4)))
        a = torch.as_tensor(rng.uniform(size=(1, 4, 3, 3)))
        out = graph_diffusion_conv(h, [a], [self.bank([np.eye(2)])])
        assert torch.allclose(out, h)

    def test_two_node_hand_arithmetic(self, rng):
        # K=1: out(t) = h W0 + (A_norm h) W1, hand-computed with 2x2 matrices
        h = torch.as_tensor(rng.normal(size=(1, 2, 2, 1)))
        a_raw = torch.tensor([[[[0.0, 2.0], [1.0, 1.0]]]], dtype=torch.float64)
        w0 = rng.normal(size=(2, 2))
        w1 = rng.normal(size=(2, 2))
        out = graph_diffusion_conv(h, [a_raw], [self.bank([w0, w1])])
        hn = h[0, :, :, 0].numpy().T  # [N, C]
        a_norm = np.array([[0.0, 1.0], [0.5, 0.5]])
        expected = hn @ w0 + (a_norm @ hn) @ w1
        np.testing.assert_allclose(out[0, :, :, 0].detach().numpy().T, expected, rtol=1e-12)

    def test_length_mismatch_raises(self, rng):
        h = torch.as_tensor(rng.normal(size=(1, 2, 3, 4)))
        a = torch.zeros(1, 3, 3, 3, dtype=torch.float64)
        with pytest.raises(DataError):
            graph_diffusion_conv(h, [a], [self.bank([np.eye(2)])])


class TestSTBlock:
    def test_zero_spatial_term_leaves_residual_tail(self, rng):
        block = STBlock(3, 2, (1, 2), diffusion_steps=1, n_supports=1).double()
        with torch.no_grad():
            for bank in block.graph_banks:
                for w in bank:
                    w.zero_()
        x = torch.as_tensor(rng.normal(size=(1, 3, 4, 12)))
        a = torch.as_tensor(rng.uniform(size=(1, 9, 4, 4)))
        out, tap = block(x, [a])
        assert torch.equal(out, x[..., -9:])
        assert tap.shape == (1, 3, 4, 9)

    def test_output_length_after_block(self, rng):
        block = STBlock(2, 2, (1, 2), 1, 1).double()
        x = torch.as_tensor(rng.normal(size=(1, 2, 3, 12)))
        a = torch.as_tensor(rng.uniform(size=(1, 9, 3, 3)))
        out, _ = block(x, [a])
        assert out.shape[-1] == 9

    def test_four_blocks_on_padded_13_end_at_length_1(self, rng):
        blocks = [STBlock(2, 2, (1, 2), 1, 1).double() for _ in range(4)]
        x = torch.as_tensor(rng.normal(size=(1, 2, 3, 13)))
        lengths = []
        for block in blocks:
            t_next = x.shape[-1] - block.shrink
            a = torch.as_tensor(rng.uniform(size=(1, t_next, 3, 3)))
            x, _ = block(x, [a])
            lengths.append(x.shape[-1])
        assert lengths == [10, 7, 4, 1]

    def test_gradients_flow_through_block(self, rng):
        block = STBlock(2, 2, (1, 2), 1, 1).double()
        x = torch.tensor(rng.normal(size=(1, 2, 3, 12)), requires_grad=True)
        a = torch.as_tensor(rng.uniform(size=(1, 9, 3, 3)))
        out, _ = block(x, [a])
        out.sum().backward()
        assert torch.isfinite(x.grad).all()
        for p in block.parameters():
            assert p.grad is not None and torch.isfinite(p.grad).all()
