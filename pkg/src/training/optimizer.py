#!/usr/bin/env python3
"""
Gradientes exactos del ELBO y actualización Adam (ascenso).

Los parámetros con restricción de positividad viven en su parametrización
softplus sin restricciones, así que Adam los actualiza como a cualquier otro.
"""

from dataclasses import dataclass, field
from typing import Dict, Iterator, Optional

import torch
from torch import nn

from src.utils.errors import ContractError, NumericalError


@dataclass
class AdamHyper:
    lr: float = 1e-2
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def from_config(cls, model_cfg) -> "AdamHyper":
        return cls(lr=model_cfg.lr, beta1=model_cfg.beta1, beta2=model_cfg.beta2, eps=model_cfg.eps)


@dataclass
class AdamState:
    step: int = 0
    first_moment: Dict[str, torch.Tensor] = field(default_factory=dict)
    second_moment: Dict[str, torch.Tensor] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "step": self.step,
            "first_moment": {k: v.clone() for k, v in self.first_moment.items()},
            "second_moment": {k: v.clone() for k, v in self.second_moment.items()},
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "AdamState":
        return cls(
            step=int(payload["step"]),
            first_moment=dict(payload["first_moment"]),
            second_moment=dict(payload["second_moment"]),
        )


@dataclass
class GradientTape:
    """Derivadas ∂ELBO/∂θ por nombre de parámetro, ruido Monte Carlo fijo"""
    gradients: Dict[str, torch.Tensor]

    def __getitem__(self, name: str) -> torch.Tensor:
        return self.gradients[name]

    def __contains__(self, name: str) -> bool:
        return name in self.gradients

    def __iter__(self) -> Iterator[str]:
        return iter(self.gradients)

    def __len__(self) -> int:
        return len(self.gradients)


def trainable_parameters(model: nn.Module) -> Dict[str, nn.Parameter]:
    return {name: p for name, p in model.named_parameters() if p.requires_grad}


def grad(model: nn.Module, breakdown, objective: Optional[torch.Tensor] = None) -> GradientTape:
    """Deriva ``breakdown.total`` (u ``objective``) respecto a cada parámetro entrenable"""
    target = breakdown.total if objective is None else objective
    if not target.requires_grad:
        raise ContractError("La evaluación del objetivo no está conectada a los parámetros")
    params = trainable_parameters(model)
    derivatives = torch.autograd.grad(target, list(params.values()), allow_unused=True)

    gradients = {}
    for (name, param), derivative in zip(params.items(), derivatives):
        if derivative is None:
            derivative = torch.zeros_like(param)
        if not bool(torch.isfinite(derivative).all()):
            raise NumericalError("Derivada no finita", term=name)
        gradients[name] = derivative
    return GradientTape(gradients)


@torch.no_grad()
def adam_step(model: nn.Module, tape: GradientTape, state: AdamState, hyper: AdamHyper) -> AdamState:
    """Un paso de Adam con corrección de sesgo, en dirección de ascenso"""
    if state.step < 0:
        raise ContractError(f"Contador de pasos negativo: {state.step}")
    state.step += 1
    correction1 = 1.0 - hyper.beta1 ** state.step
    correction2 = 1.0 - hyper.beta2 ** state.step

    for name, param in trainable_parameters(model).items():
        if name not in tape:
            raise ContractError(f"Parámetro sin derivada en la cinta: {name}")
        g = tape[name]
        m = state.first_moment.get(name)
        v = state.second_moment.get(name)
        if m is None:
            m = torch.zeros_like(param)
            v = torch.zeros_like(param)
        m = hyper.beta1 * m + (1.0 - hyper.beta1) * g
        v = hyper.beta2 * v + (1.0 - hyper.beta2) * g * g
        state.first_moment[name] = m
        state.second_moment[name] = v

        update = hyper.lr * (m / correction1) / (torch.sqrt(v / correction2) + hyper.eps)
        param.add_(update)
    return state
