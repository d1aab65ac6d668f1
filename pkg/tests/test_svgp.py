import math

import pytest
import torch

from src.gp import (
    DTYPE,
    Kernel,
    NoiseSource,
    PosteriorNoise,
    PosteriorSequence,
    SvgpLayer,
    ZeroNoise,
    draw_noise,
    gram,
    gram_diag,
    kl_penalty,
    predict,
    sample_posterior,
    sampling_cov_mode,
)
from src.harness.oracles import exact_gp_oracle, monte_carlo_kl, sample_covariance, set_collapse_point
from src.utils.errors import ContractError, InputError

EXACT_JITTER = (0.0, 1e-10, 1e-8)


def spaced_inputs(n, generator, low=-3.0, high=3.0):
    base = torch.linspace(low, high, n, dtype=DTYPE)
    wiggle = 0.05 * (2.0 * torch.rand(n, dtype=DTYPE, generator=generator) - 1.0)
    return (base + wiggle).unsqueeze(1)


def rbf_layer(num_inducing, generator, output_dim=1, n_features=64, lengthscale=0.7, scale=1.0):
    return SvgpLayer(
        1, output_dim, num_inducing,
        kernel=Kernel("rbf", scale=scale, lengthscale=lengthscale),
        n_features=n_features, generator=generator, jitter_schedule=EXACT_JITTER,
    )


class TestPredict:

    def test_prior_collapse(self, gen):
        layer = rbf_layer(5, gen, output_dim=2)
        with torch.no_grad():
            layer.inducing_inputs.copy_(spaced_inputs(5, gen))
        layer.set_variational(torch.zeros(2, 5, dtype=DTYPE), gram(layer.kernel, layer.inducing_inputs, layer.inducing_inputs))
        H = torch.randn(7, 1, dtype=DTYPE, generator=gen)
        with torch.no_grad():
            post = predict(layer, H, "diag")
        assert torch.allclose(post.mean, torch.zeros(7, 2, dtype=DTYPE), atol=1e-10)
        assert torch.allclose(post.variance, gram_diag(layer.kernel, H).unsqueeze(1).expand(7, 2), atol=1e-8)

    @pytest.mark.parametrize("trial", range(20))
    def test_matches_exact_gp_at_collapse_point(self, trial):
        generator = torch.Generator().manual_seed(100 + trial)
        n = 3 + trial % 8
        X = spaced_inputs(n, generator)
        y = torch.sin(2.0 * X) + 0.1 * torch.randn(n, 1, dtype=DTYPE, generator=generator)
        noise_variance = 0.05 + 0.2 * float(torch.rand(1, dtype=DTYPE, generator=generator))
        layer = rbf_layer(n, generator)
        set_collapse_point(layer, X, y, noise_variance)

        queries = torch.cat([X, torch.randn(4, 1, dtype=DTYPE, generator=generator)])
        with torch.no_grad():
            post = predict(layer, queries, "diag")
        oracle = exact_gp_oracle(X, y, layer.kernel, noise_variance, X_query=queries)
        assert torch.allclose(post.mean[:, 0], oracle.mean, atol=1e-6)
        assert torch.allclose(post.variance[:, 0], oracle.variance.clamp(min=1e-10), atol=1e-6)

    def test_mean_shift_is_linear(self, gen):
        layer = rbf_layer(4, gen)
        with torch.no_grad():
            layer.inducing_inputs.copy_(spaced_inputs(4, gen))
        H = torch.randn(6, 1, dtype=DTYPE, generator=gen)
        c = torch.randn(4, dtype=DTYPE, generator=gen)
        with torch.no_grad():
            before = predict(layer, H, "diag")
            Z = layer.inducing_inputs
            A = torch.linalg.solve(gram(layer.kernel, Z, Z), gram(layer.kernel, Z, H))
            layer.q_mu.add_(c)
            after = predict(layer, H, "diag")
        assert torch.allclose(after.mean[:, 0] - before.mean[:, 0], A.T @ c, atol=1e-8)
        assert torch.allclose(after.variance, before.variance, atol=1e-14)

    def test_deflation_bounded_by_prior(self, gen):
        layer = SvgpLayer(2, 1, 6, kernel=Kernel("arccos1"), n_features=32, generator=gen)
        layer.set_variational(torch.zeros(1, 6, dtype=DTYPE), 1e-20 * torch.eye(6, dtype=DTYPE))
        H = torch.randn(9, 2, dtype=DTYPE, generator=gen)
        with torch.no_grad():
            post = predict(layer, H, "diag")
        assert torch.all(post.variance[:, 0] <= gram_diag(layer.kernel, H) + 1e-8)

    def test_lowrank_diagonal_tracks_exact(self, gen):
        layer = SvgpLayer(3, 2, 4, kernel=Kernel("arccos1"), n_features=4096, generator=gen)
        with torch.no_grad():
            layer.inducing_inputs.copy_(torch.tensor(
                [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [-1.0, -1.0, -1.0]], dtype=DTYPE))
        H = torch.randn(5, 3, dtype=DTYPE, generator=gen)
        H = H / H.norm(dim=1, keepdim=True)
        with torch.no_grad():
            exact = predict(layer, H, "diag")
            lowrank = predict(layer, H, "lowrank")
        gaps = [
            (torch.diagonal(lowrank.covariance(d)) - exact.variance[:, d]).abs().mean().item()
            for d in range(2)
        ]
        assert max(gaps) < 0.05
        assert all(torch.diagonal(lowrank.covariance(d)).min().item() >= 0.0 for d in range(2))

    def test_permutation_equivariant(self, gen):
        layer = SvgpLayer(2, 3, 5, n_features=16, generator=gen)
        with torch.no_grad():
            layer.q_mu.copy_(torch.randn(3, 5, dtype=DTYPE, generator=gen))
        H = torch.randn(6, 2, dtype=DTYPE, generator=gen)
        perm = torch.randperm(6, generator=gen)
        with torch.no_grad():
            assert torch.allclose(predict(layer, H[perm], "none").mean, predict(layer, H, "none").mean[perm], atol=1e-12)

    def test_full_mode_reconstructs_covariance(self, gen):
        layer = rbf_layer(4, gen, n_features=16)
        with torch.no_grad():
            layer.inducing_inputs.copy_(spaced_inputs(4, gen))
        H = spaced_inputs(3, gen, -1.0, 1.0)
        with torch.no_grad():
            diag = predict(layer, H, "diag")
            full = predict(layer, H, "full")
        assert torch.allclose(torch.diagonal(full.covariance(0)), diag.variance[:, 0], atol=1e-6)

    def test_empty_sequence(self, gen):
        layer = SvgpLayer(2, 3, 4, n_features=8, generator=gen)
        post = predict(layer, torch.zeros(0, 2, dtype=DTYPE), "lowrank")
        assert post.mean.shape == (0, 3)

    def test_width_mismatch(self, gen):
        layer = SvgpLayer(2, 1, 4, n_features=8, generator=gen)
        with pytest.raises(InputError):
            predict(layer, torch.zeros(3, 5, dtype=DTYPE))

    def test_unknown_mode(self, gen):
        layer = SvgpLayer(2, 1, 4, n_features=8, generator=gen)
        with pytest.raises(ContractError):
            predict(layer, torch.zeros(3, 2, dtype=DTYPE), "dense")


class TestKlPenalty:

    def test_zero_at_prior(self, gen):
        layer = rbf_layer(4, gen, output_dim=2)
        with torch.no_grad():
            layer.inducing_inputs.copy_(spaced_inputs(4, gen))
        K = gram(layer.kernel, layer.inducing_inputs, layer.inducing_inputs)
        layer.set_variational(torch.zeros(2, 4, dtype=DTYPE), K)
        assert abs(kl_penalty(layer).item()) < 1e-10

    def test_one_dimensional_closed_form(self, gen):
        layer = SvgpLayer(2, 1, 1, kernel=Kernel("arccos1"), n_features=8, generator=gen, jitter_schedule=EXACT_JITTER)
        layer.set_variational(torch.ones(1, 1, dtype=DTYPE), torch.ones(1, 1, dtype=DTYPE))
        assert kl_penalty(layer).item() == pytest.approx(0.5, abs=1e-12)

    def test_non_negative(self, gen):
        for _ in range(5):
            layer = SvgpLayer(2, 2, 5, n_features=8, generator=gen)
            with torch.no_grad():
                layer.q_mu.copy_(torch.randn(2, 5, dtype=DTYPE, generator=gen))
            assert kl_penalty(layer).item() >= 0.0

    @pytest.mark.parametrize("trial", range(3))
    def test_matches_monte_carlo(self, trial):
        self._check_monte_carlo(torch.Generator().manual_seed(trial), n_samples=200_000)

    @pytest.mark.slow
    @pytest.mark.parametrize("trial", range(10))
    def test_matches_monte_carlo_full(self, trial):
        self._check_monte_carlo(torch.Generator().manual_seed(50 + trial), n_samples=1_000_000)

    @staticmethod
    def _check_monte_carlo(generator, n_samples):
        M = 2 + int(torch.randint(0, 7, (1,), generator=generator))
        layer = rbf_layer(M, generator, lengthscale=0.6)
        with torch.no_grad():
            layer.inducing_inputs.copy_(spaced_inputs(M, generator, -2.0, 2.0))
        factor = 0.3 * torch.randn(M, M, dtype=DTYPE, generator=generator)
        cov = factor @ factor.T + 0.2 * torch.eye(M, dtype=DTYPE)
        mean = 0.5 * torch.randn(1, M, dtype=DTYPE, generator=generator)
        layer.set_variational(mean, cov)

        with torch.no_grad():
            closed = kl_penalty(layer).item()
            K = gram(layer.kernel, layer.inducing_inputs, layer.inducing_inputs)
            estimate, stderr = monte_carlo_kl(layer.q_mu[0], layer.q_cov[0], K, n_samples=n_samples, generator=generator)
        assert abs(closed - estimate) <= 3.0 * stderr


class TestSamplePosterior:

    def test_zero_noise_returns_mean(self, gen):
        layer = SvgpLayer(2, 2, 4, n_features=16, generator=gen)
        H = torch.randn(5, 2, dtype=DTYPE, generator=gen)
        with torch.no_grad():
            for mode in ("diag", "lowrank", "full"):
                post = predict(layer, H, mode)
                assert torch.equal(sample_posterior(post, draw_noise(post, ZeroNoise())), post.mean)

    def test_diag_arithmetic(self):
        post = PosteriorSequence(
            mean=torch.tensor([[0.5], [-1.0]], dtype=DTYPE),
            cov_mode="diag",
            variance=torch.tensor([[1.0], [4.0]], dtype=DTYPE),
        )
        sample = sample_posterior(post, PosteriorNoise(frame=torch.ones(2, 1, dtype=DTYPE)))
        assert torch.allclose(sample, torch.tensor([[1.5], [1.0]], dtype=DTYPE), atol=1e-15)

    def test_none_mode_cannot_sample(self, gen):
        layer = SvgpLayer(2, 1, 3, n_features=8, generator=gen)
        with torch.no_grad():
            post = predict(layer, torch.randn(2, 2, dtype=DTYPE, generator=gen), "none")
        with pytest.raises(ContractError):
            sample_posterior(post, PosteriorNoise())

    def test_lowrank_empirical_covariance(self, gen):
        layer = SvgpLayer(2, 1, 4, kernel=Kernel("arccos1", bias=1.0), n_features=16, generator=gen)
        with torch.no_grad():
            layer.q_sqrt_raw.copy_(layer.q_sqrt_raw + 0.2 * torch.tril(torch.randn(1, 4, 4, dtype=DTYPE, generator=gen), -1))
            post = predict(layer, torch.randn(3, 2, dtype=DTYPE, generator=gen), "lowrank")
        n = 100_000
        noise = PosteriorNoise(
            feature=torch.randn(n, 1, 16, dtype=DTYPE, generator=gen),
            inducing=torch.randn(n, 1, 4, dtype=DTYPE, generator=gen),
        )
        samples = sample_posterior(post, noise)
        assert samples.shape == (n, 3, 1)
        cov, stderr = sample_covariance(samples[:, :, 0])
        assert torch.all((cov - post.covariance(0)).abs() <= 3.0 * stderr)

    def test_noise_draws_are_recorded(self, gen):
        layer = SvgpLayer(2, 2, 4, n_features=16, generator=gen)
        source = NoiseSource(seed=3)
        with torch.no_grad():
            post = predict(layer, torch.randn(4, 2, dtype=DTYPE, generator=gen), "lowrank")
            first = sample_posterior(post, draw_noise(post, source))
            again = sample_posterior(post, draw_noise(post, source.replay()))
        assert len(source.recorded) == 2
        assert torch.equal(first, again)


def test_sampling_falls_back_to_diag_for_single_frame():
    assert sampling_cov_mode("utterance", "lowrank", 1) == "diag"
    assert sampling_cov_mode("utterance", "full", 4) == "full"
    assert sampling_cov_mode("frame", "lowrank", 4) == "diag"
    with pytest.raises(ContractError):
        sampling_cov_mode("batch", "lowrank", 4)
