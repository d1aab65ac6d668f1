#!/usr/bin/env python3
"""
Cotas inferiores de la evidencia (ELBO) por enunciado y por trama.

La esperanza de la log-verosimilitud se calcula en forma cerrada con la media
y la varianza predictiva de la última capa; las capas ocultas se muestrean con
el ruido suministrado por quien llama.
"""

import math
from dataclasses import dataclass
from typing import Dict, List, Optional

import torch

from src.gp import DTYPE, NoiseSource, as_tensor
from src.utils.errors import ContractError, InputError, NumericalError

ELBO_LEVELS = ("utterance", "frame")


@dataclass
class ElboBreakdown:
    """total = loglik − kl_scale · Σ kl_per_layer"""
    loglik: torch.Tensor
    kl_per_layer: List[torch.Tensor]
    kl_scale: float
    total: torch.Tensor
    n_frames: int = 0
    samples: int = 1

    @property
    def kl_total(self) -> torch.Tensor:
        return sum(self.kl_per_layer, torch.zeros((), dtype=DTYPE))

    def to_record(self, iteration: int, utterance_id: str = "") -> Dict[str, object]:
        return {
            "iteration": iteration,
            "utterance_id": utterance_id,
            "loglik": float(self.loglik),
            "kl_total": float(self.kl_total),
            "kl_scale": float(self.kl_scale),
            "total": float(self.total),
        }


def expected_log_likelihood(Y, mean: torch.Tensor, variance: torch.Tensor, noise_variance: torch.Tensor) -> torch.Tensor:
    """Σ_t,d E_q[log N(y | h, σ²)] = Σ [log N(y | μ, σ²) − var/(2σ²)]"""
    Y = as_tensor(Y)
    sigma2 = noise_variance.expand_as(mean)
    terms = -0.5 * torch.log(2.0 * math.pi * sigma2) - 0.5 * ((Y - mean).pow(2) + variance) / sigma2
    return terms.sum()


def _check_batch(model, batch) -> None:
    X, Y = batch.inputs, batch.targets
    if X.dim() != 2 or X.shape[1] != model.input_dim:
        raise InputError(f"Entradas de forma {tuple(X.shape)}; el modelo espera {model.input_dim} columnas")
    if Y.dim() != 2 or Y.shape[1] != model.output_dim or Y.shape[0] != X.shape[0]:
        raise InputError(f"Objetivos de forma {tuple(Y.shape)} incompatibles con entradas {tuple(X.shape)}")
    if model.n_train_frames < 1:
        raise ContractError("El modelo no conoce el número total de tramas de entrenamiento")


def _ensure_finite(value: torch.Tensor, term: str) -> None:
    if not bool(torch.isfinite(value).all()):
        raise NumericalError(f"ELBO no finito en el término {term}", term=term)


def _elbo(model, batch, noise: Optional[NoiseSource], samples: Optional[int], sampling: str) -> ElboBreakdown:
    _check_batch(model, batch)
    samples = model.samples if samples is None else int(samples)
    if samples < 1:
        raise ContractError(f"samples debe ser >= 1, recibido {samples}")
    n_frames = batch.inputs.shape[0]

    logliks = []
    for _ in range(samples):
        out = model(batch.inputs, mode="sample", noise=noise, sampling=sampling)
        logliks.append(expected_log_likelihood(batch.targets, out.mean, out.variance, model.noise_variance))
    loglik = torch.stack(logliks).mean()
    _ensure_finite(loglik, "loglik")

    kl_per_layer = model.kl_terms()
    for index, kl in enumerate(kl_per_layer):
        _ensure_finite(kl, f"kl[layer{index + 1}]")

    kl_scale = samples * n_frames / model.n_train_frames
    total = loglik - kl_scale * sum(kl_per_layer, torch.zeros((), dtype=DTYPE))
    _ensure_finite(total, "total")
    return ElboBreakdown(loglik=loglik, kl_per_layer=kl_per_layer, kl_scale=kl_scale,
                         total=total, n_frames=n_frames, samples=samples)


def elbo_utterance(model, utterance, noise_source: Optional[NoiseSource], samples: Optional[int] = None) -> ElboBreakdown:
    """ELBO de un enunciado con muestreo conjunto de sus tramas (escala S·T_u/N)"""
    return _elbo(model, utterance, noise_source, samples, "utterance")


def elbo_frame(model, frames, noise_source: Optional[NoiseSource], samples: Optional[int] = None) -> ElboBreakdown:
    """ELBO con muestreo independiente por trama (línea base FF-DGP)"""
    return _elbo(model, frames, noise_source, samples, "frame")


def elbo(model, batch, noise_source: Optional[NoiseSource], level: str = "utterance", samples: Optional[int] = None) -> ElboBreakdown:
    if level not in ELBO_LEVELS:
        raise ContractError(f"Nivel de ELBO desconocido: {level}")
    if level == "frame":
        return elbo_frame(model, batch, noise_source, samples)
    return elbo_utterance(model, batch, noise_source, samples)
