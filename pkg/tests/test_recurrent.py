import math

import pytest
import torch

from src.gp import (
    DTYPE,
    FeedForwardNN,
    Kernel,
    NoiseSource,
    SruCell,
    SruDgpCell,
    SvgpLayer,
    ZeroNoise,
    light_recurrence,
    predict,
    sru_dgp_forward,
    sru_forward,
    stack_forward,
    validate_stack,
)
from src.utils.errors import ConfigurationError, ContractError, InputError

EXACT_JITTER = (0.0, 1e-10, 1e-8)


def sigmoid(x):
    return 1.0 / (1.0 + math.exp(-x))


def set_cell(cell, weight=0.0, bias=0.0, v=0.0):
    with torch.no_grad():
        for role in ("phi", "c", "r", "h"):
            getattr(cell, f"weight_{role}").fill_(weight)
            getattr(cell, f"bias_{role}").fill_(bias)
        cell.v_phi.fill_(v)
        cell.v_r.fill_(v)


def rbf_cell(generator, input_dim=1, output_dim=2, num_inducing=4):
    return SruDgpCell(
        input_dim, output_dim, num_inducing,
        kernel_factory=lambda: Kernel("rbf", lengthscale=1.0),
        n_features=16, generator=generator, jitter_schedule=EXACT_JITTER,
    )


class TestSruForward:

    def test_empty_sequence(self, gen):
        cell = SruCell(3, 2, generator=gen)
        H, c_last = sru_forward(cell, torch.zeros(0, 3, dtype=DTYPE))
        assert H.shape == (0, 2)
        assert torch.equal(c_last, cell.c0)

    def test_zero_parameters(self, gen):
        cell = SruCell(3, 2, generator=gen)
        set_cell(cell)
        H, c_last, forget, reset = sru_forward(cell, torch.randn(5, 3, dtype=DTYPE, generator=gen), return_gates=True)
        assert torch.equal(H, torch.zeros(5, 2, dtype=DTYPE))
        assert torch.equal(c_last, torch.zeros(2, dtype=DTYPE))
        assert torch.allclose(forget, torch.full((5, 2), 0.5, dtype=DTYPE))
        assert torch.allclose(reset, torch.full((5, 2), 0.5, dtype=DTYPE))

    def test_scalar_step_by_hand(self, gen):
        cell = SruCell(1, 1, generator=gen)
        set_cell(cell, weight=1.0)
        H, c_last = sru_forward(cell, torch.ones(1, 1, dtype=DTYPE))
        phi = sigmoid(1.0)
        c1 = (1.0 - phi) * 1.0
        r = sigmoid(1.0)
        h1 = r * c1 + (1.0 - r) * 1.0
        assert H.item() == pytest.approx(h1, abs=1e-15)
        assert c_last.item() == pytest.approx(c1, abs=1e-15)

    @pytest.mark.parametrize("split", [0, 1, 4, 7])
    def test_split_invariance(self, gen, split):
        cell = SruCell(3, 4, generator=gen)
        X = torch.randn(7, 3, dtype=DTYPE, generator=gen)
        full, c_full = sru_forward(cell, X)
        head, c_head = sru_forward(cell, X[:split])
        tail, c_tail = sru_forward(cell, X[split:], c0=c_head)
        assert torch.allclose(torch.cat([head, tail]), full, atol=1e-12)
        assert torch.allclose(c_tail, c_full, atol=1e-12)

    def test_gates_bounded(self, gen):
        cell = SruCell(2, 3, generator=gen)
        X = 5.0 * torch.randn(20, 2, dtype=DTYPE, generator=gen)
        _, _, forget, reset = sru_forward(cell, X, return_gates=True)
        for gate in (forget, reset):
            assert torch.all(gate > 0.0) and torch.all(gate < 1.0)

    def test_width_mismatch(self, gen):
        with pytest.raises(InputError):
            sru_forward(SruCell(3, 2, generator=gen), torch.zeros(4, 2, dtype=DTYPE))


class TestSruDgpForward:

    @pytest.mark.parametrize("frames", [0, 1, 10, 1000])
    def test_four_gp_calls_for_any_length(self, gen, frames):
        cell = SruDgpCell(2, 3, 5, n_features=16, generator=gen)
        H, c_last, calls = sru_dgp_forward(cell, torch.randn(frames, 2, dtype=DTYPE, generator=gen))
        assert calls == 4
        assert H.shape == (frames, 3)
        if frames == 0:
            assert torch.equal(c_last, cell.c0)

    def test_sample_mode_also_four_calls(self, gen):
        cell = SruDgpCell(2, 3, 5, n_features=16, generator=gen)
        _, _, calls = sru_dgp_forward(cell, torch.randn(10, 2, dtype=DTYPE, generator=gen),
                                      mode="sample", noise=NoiseSource(seed=3))
        assert calls == 4

    def test_mean_matches_per_frame_loop(self, gen):
        cell = SruDgpCell(2, 3, 5, n_features=16, generator=gen)
        with torch.no_grad():
            for layer in cell.gp_layers():
                layer.q_mu.copy_(torch.randn(3, 5, dtype=DTYPE, generator=gen))
        X = torch.randn(6, 2, dtype=DTYPE, generator=gen)
        with torch.no_grad():
            H, c_last, _ = sru_dgp_forward(cell, X)
            sequences = [
                torch.cat([predict(layer, X[t:t + 1], "diag").mean for t in range(6)])
                for layer in cell.gp_layers()
            ]
            expected, expected_c = light_recurrence(*sequences, cell.v_phi, cell.v_r, cell.c0)
        assert torch.allclose(H, expected, atol=1e-12)
        assert torch.allclose(c_last, expected_c, atol=1e-12)

    def test_saturated_reset_passes_state(self, gen):
        cell = rbf_cell(gen)
        X = torch.linspace(-3.0, 3.0, 4, dtype=DTYPE).unsqueeze(1)
        with torch.no_grad():
            for layer in cell.gp_layers():
                layer.inducing_inputs.copy_(X)
            cell.xi_c.q_mu.copy_(torch.randn(2, 4, dtype=DTYPE, generator=gen))
            cell.xi_phi.q_mu.copy_(torch.randn(2, 4, dtype=DTYPE, generator=gen))
            cell.xi_r.q_mu.fill_(30.0)
            cell.xi_h.q_mu.zero_()
            H, _, _, forget, reset = sru_dgp_forward(cell, X, return_gates=True)
            states = []
            state = cell.c0
            for t in range(4):
                state = forget[t] * state + (1.0 - forget[t]) * predict(cell.xi_c, X, "none").mean[t]
                states.append(state)
        assert torch.allclose(H, torch.stack(states), atol=1e-9)

    def test_single_frame_without_state_feedback(self, gen):
        cell = SruDgpCell(2, 2, 4, n_features=16, generator=gen)
        with torch.no_grad():
            cell.v_phi.zero_()
            cell.v_r.zero_()
            for layer in cell.gp_layers():
                layer.q_mu.copy_(torch.randn(2, 4, dtype=DTYPE, generator=gen))
        x = torch.randn(1, 2, dtype=DTYPE, generator=gen)
        with torch.no_grad():
            H, _, _ = sru_dgp_forward(cell, x)
            a, b, e, g = (predict(layer, x, "none").mean[0] for layer in cell.gp_layers())
        phi = torch.sigmoid(a)
        c1 = (1.0 - phi) * b
        r = torch.sigmoid(e)
        assert torch.allclose(H[0], r * c1 + (1.0 - r) * g, atol=1e-12)

    def test_mean_mode_deterministic(self, gen):
        cell = SruDgpCell(2, 3, 5, n_features=16, generator=gen)
        X = torch.randn(8, 2, dtype=DTYPE, generator=gen)
        with torch.no_grad():
            first, _, _ = sru_dgp_forward(cell, X)
            second, _, _ = sru_dgp_forward(cell, X)
        assert torch.equal(first, second)

    def test_gp_error_propagates(self, gen):
        cell = SruDgpCell(2, 3, 5, n_features=16, generator=gen)
        with pytest.raises(InputError):
            sru_dgp_forward(cell, torch.zeros(3, 4, dtype=DTYPE))


class TestStack:

    def test_single_feedforward_is_predict(self, gen):
        layer = SvgpLayer(2, 3, 5, n_features=16, generator=gen)
        X = torch.randn(4, 2, dtype=DTYPE, generator=gen)
        with torch.no_grad():
            out = stack_forward([layer], X)
            post = predict(layer, X, "diag")
        assert torch.equal(out.mean, post.mean)
        assert torch.equal(out.variance, post.variance)
        assert out.gp_call_count == 1
        assert out.hidden == []

    def test_three_layer_shapes(self, make_model):
        model = make_model(input_dim=2, output_dim=4)
        with torch.no_grad():
            out = model(torch.zeros(2, 2, dtype=DTYPE), mode="mean")
        assert out.mean.shape == (2, 4)
        assert [h.shape for h in out.hidden] == [(2, 3), (2, 3)]
        assert out.gp_call_count == 4 + 2

    def test_zero_noise_sample_equals_mean(self, make_model, gen):
        model = make_model(input_dim=2, output_dim=2)
        X = torch.randn(5, 2, dtype=DTYPE, generator=gen)
        with torch.no_grad():
            mean = model(X, mode="mean")
            sample = model(X, mode="sample", noise=ZeroNoise())
        assert torch.equal(sample.mean, mean.mean)
        for sampled, averaged in zip(sample.hidden, mean.hidden):
            assert torch.equal(sampled, averaged)

    def test_sample_requires_noise(self, make_model):
        model = make_model()
        with pytest.raises(ContractError):
            model(torch.zeros(3, 2, dtype=DTYPE), mode="sample")


class TestValidateStack:

    def test_width_mismatch(self, gen):
        layers = [SvgpLayer(2, 3, 4, n_features=8, generator=gen), SvgpLayer(4, 1, 4, n_features=8, generator=gen)]
        with pytest.raises(ConfigurationError):
            validate_stack(layers)

    def test_recurrent_top_layer_rejected(self, gen):
        layers = [SvgpLayer(2, 3, 4, n_features=8, generator=gen), SruCell(3, 1, generator=gen)]
        with pytest.raises(ConfigurationError):
            validate_stack(layers)

    def test_empty(self):
        with pytest.raises(ConfigurationError):
            validate_stack([])

    def test_valid_stack(self, gen):
        validate_stack([SruCell(2, 3, generator=gen), FeedForwardNN(3, 1, activation="identity", generator=gen)])


class TestGateVectors:

    def test_frozen_by_default(self, gen):
        cell = SruDgpCell(2, 2, 3, n_features=8, generator=gen)
        names = dict(cell.named_parameters())
        assert "v_phi" not in names and "v_r" not in names
        assert torch.equal(cell.v_phi, torch.ones(2, dtype=DTYPE))

    def test_unfrozen_for_ablation(self, gen):
        cell = SruDgpCell(2, 2, 3, n_features=8, generator=gen, train_v=True)
        names = dict(cell.named_parameters())
        assert "v_phi" in names and "v_r" in names
