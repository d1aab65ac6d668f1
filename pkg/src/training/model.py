#!/usr/bin/env python3
"""
Ensamblado del modelo profundo: pila de capas + verosimilitud gaussiana.
"""

from dataclasses import asdict
from typing import List, Optional, Sequence

import torch
from torch import nn

from src.config.config_manager import ModelConfig, build_topology
from src.gp import (
    DTYPE,
    FeedForwardNN,
    Kernel,
    NoiseSource,
    SruCell,
    SruDgpCell,
    StackOutput,
    SvgpLayer,
    inverse_softplus,
    layer_kind,
    softplus,
    stack_forward,
    validate_stack,
)
from src.utils import get_project_logger
from src.utils.errors import ConfigurationError

logger = get_project_logger(__name__)


class DeepGpModel(nn.Module):
    """Pila f^L ∘ … ∘ f^1 con ruido de observación σ² (compartido o por dimensión)"""

    def __init__(
        self,
        layers: Sequence[nn.Module],
        noise_variance: float = 0.1,
        per_dim_noise: bool = False,
        n_train_frames: int = 1,
        samples: int = 1,
        utterance_covariance: str = "lowrank",
        config: Optional[dict] = None,
    ):
        super().__init__()
        validate_stack(list(layers))
        if n_train_frames < 1:
            raise ConfigurationError(f"n_train_frames debe ser >= 1, recibido {n_train_frames}", field="n_train_frames")
        if samples < 1:
            raise ConfigurationError(f"samples debe ser >= 1, recibido {samples}", field="model.samples")
        self.layers = nn.ModuleList(layers)
        self.n_train_frames = int(n_train_frames)
        self.samples = int(samples)
        self.utterance_covariance = utterance_covariance
        self.config = dict(config or {})

        width = self.output_dim if per_dim_noise else 1
        raw = inverse_softplus(torch.full((width,), float(noise_variance), dtype=DTYPE))
        self.raw_noise_variance = nn.Parameter(raw)

    @property
    def input_dim(self) -> int:
        return self.layers[0].input_dim

    @property
    def output_dim(self) -> int:
        return self.layers[-1].output_dim

    @property
    def noise_variance(self) -> torch.Tensor:
        """σ² expandida a (D_out,)"""
        return softplus(self.raw_noise_variance).expand(self.output_dim)

    def topology(self) -> List[str]:
        return [layer_kind(layer) for layer in self.layers]

    def kl_terms(self) -> List[torch.Tensor]:
        """KL de cada capa (cero en capas deterministas)"""
        terms = []
        for layer in self.layers:
            if isinstance(layer, (SvgpLayer, SruDgpCell)):
                terms.append(layer.kl())
            else:
                terms.append(torch.zeros((), dtype=DTYPE))
        return terms

    def forward(
        self,
        X,
        mode: str = "mean",
        noise: Optional[NoiseSource] = None,
        sampling: str = "utterance",
    ) -> StackOutput:
        return stack_forward(self.layers, X, mode, noise, sampling, self.utterance_covariance)


def layer_widths(topology: Sequence[str], input_dim: int, output_dim: int, hidden_width: int) -> List[int]:
    return [input_dim] + [hidden_width] * (len(topology) - 1) + [output_dim]


def build_model(
    model_cfg: ModelConfig,
    input_dim: int,
    output_dim: int,
    n_train_frames: int,
    topology: Optional[Sequence[str]] = None,
) -> DeepGpModel:
    """Construye e inicializa el modelo de forma determinista a partir de la semilla maestra"""
    if topology is None:
        topology = model_cfg.topology or build_topology(model_cfg.arch, model_cfg.layers)
    topology = list(topology)
    widths = layer_widths(topology, input_dim, output_dim, model_cfg.hidden_width)
    generator = torch.Generator().manual_seed(int(model_cfg.seed))

    def kernel_factory() -> Kernel:
        return Kernel(
            model_cfg.kernel,
            scale=model_cfg.kernel_scale,
            lengthscale=model_cfg.kernel_lengthscale,
            bias=model_cfg.kernel_bias,
        )

    layers = []
    for index, kind in enumerate(topology):
        d_in, d_out = widths[index], widths[index + 1]
        name = f"layer{index + 1}"
        if kind == "svgp":
            layers.append(SvgpLayer(
                d_in, d_out, model_cfg.inducing, kernel=kernel_factory(),
                n_features=model_cfg.n_features, generator=generator,
                jitter_schedule=model_cfg.jitter_schedule, name=name,
            ))
        elif kind == "sru-dgp":
            layers.append(SruDgpCell(
                d_in, d_out, model_cfg.inducing, kernel_factory=kernel_factory,
                n_features=model_cfg.n_features, generator=generator,
                jitter_schedule=model_cfg.jitter_schedule, train_v=model_cfg.train_v, name=name,
            ))
        elif kind == "sru-nn":
            layers.append(SruCell(d_in, d_out, generator=generator, train_v=model_cfg.train_v, name=name))
        elif kind == "ff-nn":
            activation = "identity" if index == len(topology) - 1 else "tanh"
            layers.append(FeedForwardNN(d_in, d_out, activation=activation, generator=generator, name=name))
        else:
            raise ConfigurationError(f"Tipo de capa desconocido: {kind}", field="model.topology")

    config = asdict(model_cfg)
    config["topology"] = topology
    model = DeepGpModel(
        layers,
        noise_variance=model_cfg.noise_variance,
        per_dim_noise=model_cfg.per_dim_noise,
        n_train_frames=n_train_frames,
        samples=model_cfg.samples,
        utterance_covariance=model_cfg.utterance_covariance,
        config=config,
    )
    logger.debug(f"Modelo construido: {' → '.join(topology)} anchos={widths}")
    return model
