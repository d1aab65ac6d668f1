#!/usr/bin/env python3
"""
Capa GP variacional dispersa (SVGP).

Posterior predictiva sobre una secuencia completa, penalización KL sobre las
salidas inducidas y muestreo reparametrizado (diagonal por frame, de rango
bajo con características aleatorias, o Cholesky completo por enunciado).
"""

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import torch
from torch import nn

from src.gp.kernels import (
    DEFAULT_JITTER_SCHEDULE,
    DTYPE,
    CholFactor,
    Kernel,
    RandomFeatureMap,
    as_tensor,
    cholesky_jittered,
    gram,
    gram_diag,
    inverse_softplus,
    kernel_features,
    softplus,
)
from src.gp.noise import NoiseSource
from src.utils.errors import ContractError, InputError

COV_MODES = ("diag", "lowrank", "full", "none")
UTTERANCE_COVARIANCES = ("lowrank", "full")
SAMPLING_LEVELS = ("utterance", "frame")
PROPAGATION_MODES = ("mean", "sample")

VARIANCE_FLOOR = 1e-10
INITIAL_Q_SQRT = 0.1


@dataclass
class PosteriorSequence:
    """q(h^d) = N(μ^d, Σ^d) para las T tramas de una secuencia.

    Representación de Σ según ``cov_mode``:
        diag     -> variance (T × D)
        lowrank  -> prior_factor L1 (T × F), variational_factor L2 (D × T × M)
        full     -> full_factor (D × T × T), L·Lᵀ = Σ^d (+ jitter)
        none     -> solo medias
    """
    mean: torch.Tensor
    cov_mode: str
    variance: Optional[torch.Tensor] = None
    prior_factor: Optional[torch.Tensor] = None
    variational_factor: Optional[torch.Tensor] = None
    full_factor: Optional[torch.Tensor] = None

    @property
    def n_frames(self) -> int:
        return self.mean.shape[0]

    @property
    def output_dim(self) -> int:
        return self.mean.shape[1]

    def covariance(self, d: int) -> torch.Tensor:
        """Covarianza T×T implícita de la dimensión d"""
        if self.cov_mode == "diag":
            return torch.diag(self.variance[:, d])
        if self.cov_mode == "lowrank":
            l1 = self.prior_factor
            l2 = self.variational_factor[d]
            return l1 @ l1.T + l2 @ l2.T
        if self.cov_mode == "full":
            factor = self.full_factor[d]
            return factor @ factor.T
        raise ContractError("La posterior en modo 'none' no tiene covarianza")


@dataclass
class PosteriorNoise:
    """Ruido estándar para ``sample_posterior``; admite dimensiones de lote iniciales"""
    frame: Optional[torch.Tensor] = None      # (..., T, D)
    feature: Optional[torch.Tensor] = None    # (..., D, F)
    inducing: Optional[torch.Tensor] = None   # (..., D, M)
    full: Optional[torch.Tensor] = None       # (..., D, T)


class SvgpLayer(nn.Module):
    """Estado entrenable de una función GP: Z, m^d, L_S^d y el kernel.

    S^d = L_S^d (L_S^d)ᵀ con diagonal de L_S^d positiva vía softplus. La función
    media es cero y se conserva explícitamente en el cálculo.
    """

    def __init__(
        self,
        input_dim: int,
        output_dim: int,
        num_inducing: int,
        kernel: Optional[Kernel] = None,
        n_features: int = 1024,
        generator: Optional[torch.Generator] = None,
        jitter_schedule: Sequence[float] = DEFAULT_JITTER_SCHEDULE,
        name: str = "svgp",
    ):
        super().__init__()
        if min(input_dim, output_dim, num_inducing, n_features) < 1:
            raise InputError(
                f"Tamaños inválidos en {name}: input_dim={input_dim}, output_dim={output_dim}, "
                f"num_inducing={num_inducing}, n_features={n_features}"
            )
        self.input_dim = input_dim
        self.output_dim = output_dim
        self.num_inducing = num_inducing
        self.jitter_schedule = tuple(float(j) for j in jitter_schedule)
        self.name = name
        self.kernel = kernel if kernel is not None else Kernel("arccos1")

        self.inducing_inputs = nn.Parameter(
            torch.randn(num_inducing, input_dim, dtype=DTYPE, generator=generator)
        )
        self.q_mu = nn.Parameter(torch.zeros(output_dim, num_inducing, dtype=DTYPE))
        raw = torch.zeros(output_dim, num_inducing, num_inducing, dtype=DTYPE)
        raw.diagonal(dim1=-2, dim2=-1).fill_(float(inverse_softplus(INITIAL_Q_SQRT)))
        self.q_sqrt_raw = nn.Parameter(raw)

        self.feature_map = RandomFeatureMap.draw(
            self.kernel.kind, n_features, self.kernel.feature_input_dim(input_dim), generator
        )

    @property
    def q_sqrt(self) -> torch.Tensor:
        raw = self.q_sqrt_raw
        diagonal = softplus(torch.diagonal(raw, dim1=-2, dim2=-1))
        return torch.tril(raw, diagonal=-1) + torch.diag_embed(diagonal)

    @property
    def q_cov(self) -> torch.Tensor:
        factor = self.q_sqrt
        return factor @ factor.transpose(-1, -2)

    def mean_function(self, X: torch.Tensor) -> torch.Tensor:
        return torch.zeros(X.shape[0], self.output_dim, dtype=DTYPE)

    def prior_cholesky(self) -> CholFactor:
        Z = self.inducing_inputs
        return cholesky_jittered(gram(self.kernel, Z, Z), self.jitter_schedule, layer=self.name)

    @torch.no_grad()
    def set_variational(self, mean, covariance) -> None:
        """Fija q(u) = N(mean, covariance); covariance M×M se comparte entre dimensiones"""
        mean = as_tensor(mean).reshape(self.output_dim, self.num_inducing)
        covariance = as_tensor(covariance)
        if covariance.dim() == 2:
            covariance = covariance.expand(self.output_dim, -1, -1)
        lower = torch.linalg.cholesky(covariance)
        diagonal = inverse_softplus(torch.diagonal(lower, dim1=-2, dim2=-1))
        self.q_mu.copy_(mean)
        self.q_sqrt_raw.copy_(torch.tril(lower, diagonal=-1) + torch.diag_embed(diagonal))

    def kl(self) -> torch.Tensor:
        return kl_penalty(self)

    def propagate(
        self,
        H: torch.Tensor,
        mode: str,
        noise: Optional[NoiseSource] = None,
        sampling: str = "utterance",
        utterance_covariance: str = "lowrank",
    ) -> Tuple[torch.Tensor, int]:
        """Salida de capa oculta (media o muestra) y número de regresiones GP"""
        return propagate_gp(self, H, mode, noise, sampling, utterance_covariance), 1

    def final_moments(self, H: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor, int]:
        post = predict(self, H, "diag")
        return post.mean, post.variance, 1

    def extra_repr(self) -> str:
        return (f"name={self.name}, input_dim={self.input_dim}, output_dim={self.output_dim}, "
                f"num_inducing={self.num_inducing}")


def _check_inputs(params: SvgpLayer, H_prev) -> torch.Tensor:
    H = as_tensor(H_prev)
    if H.dim() != 2 or H.shape[1] != params.input_dim:
        raise InputError(
            f"Entrada de forma {tuple(H.shape)} incompatible con {params.name} "
            f"(se esperan {params.input_dim} columnas)"
        )
    if not bool(torch.isfinite(H).all()):
        raise InputError(f"Entrada no finita en {params.name}")
    return H


def predict(params: SvgpLayer, H_prev, cov_mode: str = "diag") -> PosteriorSequence:
    """Posterior predictiva μ^d = Aᵀ m^d, Σ^d = K_HH − Aᵀ(K_ZZ − S^d)A, A = K_ZZ⁻¹ K_ZH"""
    if cov_mode not in COV_MODES:
        raise ContractError(f"cov_mode desconocido: {cov_mode}")
    H = _check_inputs(params, H_prev)
    kernel = params.kernel
    n_frames = H.shape[0]
    D, M = params.output_dim, params.num_inducing

    if n_frames == 0:
        empty = torch.zeros(0, D, dtype=DTYPE)
        return PosteriorSequence(
            mean=empty,
            cov_mode=cov_mode,
            variance=empty if cov_mode == "diag" else None,
            prior_factor=torch.zeros(0, params.feature_map.n_features, dtype=DTYPE) if cov_mode == "lowrank" else None,
            variational_factor=torch.zeros(D, 0, M, dtype=DTYPE) if cov_mode == "lowrank" else None,
            full_factor=torch.zeros(D, 0, 0, dtype=DTYPE) if cov_mode == "full" else None,
        )

    Z = params.inducing_inputs
    chol = params.prior_cholesky()
    k_zh = gram(kernel, Z, H)
    A = torch.cholesky_solve(k_zh, chol.lower)

    mean = params.mean_function(H) + A.T @ (params.q_mu - params.mean_function(Z).T).T
    post = PosteriorSequence(mean=mean, cov_mode=cov_mode)
    if cov_mode == "none":
        return post

    q_sqrt = params.q_sqrt
    if cov_mode == "lowrank":
        phi_h = kernel_features(kernel, params.feature_map, H)
        phi_z = kernel_features(kernel, params.feature_map, Z)
        post.prior_factor = phi_h - A.T @ phi_z
        post.variational_factor = A.T @ q_sqrt
        return post

    # proyección (L_S^d)ᵀ A, forma D × M × T
    projected = q_sqrt.transpose(-1, -2) @ A
    if cov_mode == "diag":
        variance = gram_diag(kernel, H) - (A * k_zh).sum(dim=0) + projected.pow(2).sum(dim=1)
        post.variance = torch.clamp(variance, min=VARIANCE_FLOOR).T
        return post

    k_hh = gram(kernel, H, H)
    factors = []
    for d in range(D):
        sigma = k_hh - A.T @ k_zh + projected[d].T @ projected[d]
        sigma = 0.5 * (sigma + sigma.T)
        factors.append(cholesky_jittered(sigma, params.jitter_schedule, layer=params.name).lower)
    post.full_factor = torch.stack(factors)
    return post


def kl_penalty(params: SvgpLayer) -> torch.Tensor:
    """Σ_d KL(N(m^d, S^d) ‖ N(0, K_ZZ)) en forma cerrada"""
    lower_k = params.prior_cholesky().lower
    q_sqrt = params.q_sqrt
    D, M = params.output_dim, params.num_inducing
    centered = params.q_mu - params.mean_function(params.inducing_inputs).T

    batch_k = lower_k.expand(D, M, M)
    trace_term = torch.linalg.solve_triangular(batch_k, q_sqrt, upper=False).pow(2).sum(dim=(-1, -2))
    whitened_mean = torch.linalg.solve_triangular(lower_k, centered.T, upper=False)
    mahalanobis = whitened_mean.pow(2).sum(dim=0)
    logdet_k = 2.0 * torch.log(torch.diagonal(lower_k)).sum()
    logdet_s = 2.0 * torch.log(torch.diagonal(q_sqrt, dim1=-2, dim2=-1)).sum(dim=-1)

    return 0.5 * (trace_term + mahalanobis - M + logdet_k - logdet_s).sum()


def draw_noise(post: PosteriorSequence, source: NoiseSource) -> PosteriorNoise:
    """Extrae de ``source`` el ruido que necesita el modo de ``post``"""
    T, D = post.n_frames, post.output_dim
    if post.cov_mode == "diag":
        return PosteriorNoise(frame=source.standard_normal((T, D)))
    if post.cov_mode == "lowrank":
        return PosteriorNoise(
            feature=source.standard_normal((D, post.prior_factor.shape[1])),
            inducing=source.standard_normal((D, post.variational_factor.shape[2])),
        )
    if post.cov_mode == "full":
        return PosteriorNoise(full=source.standard_normal((D, T)))
    raise ContractError("No se puede muestrear una posterior en modo 'none'")


def sample_posterior(post: PosteriorSequence, noise: PosteriorNoise) -> torch.Tensor:
    """ĥ = μ + L ε con ruido suministrado por quien llama"""
    if post.cov_mode == "none":
        raise ContractError("No se puede muestrear una posterior en modo 'none'")

    if post.cov_mode == "diag":
        if noise.frame is None:
            raise ContractError("El modo diag requiere ruido por trama (frame)")
        return post.mean + torch.sqrt(post.variance) * noise.frame

    if post.cov_mode == "lowrank":
        if noise.feature is None or noise.inducing is None:
            raise ContractError("El modo lowrank requiere ruido feature e inducing")
        prior_part = torch.einsum("tf,...df->...td", post.prior_factor, noise.feature)
        variational_part = torch.einsum("dtm,...dm->...td", post.variational_factor, noise.inducing)
        return post.mean + prior_part + variational_part

    if noise.full is None:
        raise ContractError("El modo full requiere ruido full")
    return post.mean + torch.einsum("dts,...ds->...td", post.full_factor, noise.full)


def sampling_cov_mode(sampling: str, utterance_covariance: str, n_frames: int) -> str:
    """Modo de covarianza para muestrear capas ocultas.

    Con una sola trama la covarianza es 1×1 y se muestrea exactamente.
    """
    if sampling not in SAMPLING_LEVELS:
        raise ContractError(f"Nivel de muestreo desconocido: {sampling}")
    if utterance_covariance not in UTTERANCE_COVARIANCES:
        raise ContractError(f"Covarianza de enunciado desconocida: {utterance_covariance}")
    if sampling == "frame" or n_frames <= 1:
        return "diag"
    return utterance_covariance


def propagate_gp(
    params: SvgpLayer,
    H: torch.Tensor,
    mode: str,
    noise: Optional[NoiseSource],
    sampling: str = "utterance",
    utterance_covariance: str = "lowrank",
) -> torch.Tensor:
    """Una regresión GP por lotes: media posterior o una muestra reparametrizada"""
    if mode not in PROPAGATION_MODES:
        raise ContractError(f"Modo de propagación desconocido: {mode}")
    if mode == "mean":
        return predict(params, H, "none").mean
    if noise is None:
        raise ContractError("El modo sample requiere una fuente de ruido")
    post = predict(params, H, sampling_cov_mode(sampling, utterance_covariance, as_tensor(H).shape[0]))
    return sample_posterior(post, draw_noise(post, noise))
