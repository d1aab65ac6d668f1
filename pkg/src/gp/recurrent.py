#!/usr/bin/env python3
"""
Celdas recurrentes: SRU clásica y SRU-DGP.

En ambas las cuatro transformaciones dependen solo de la entrada h_t^{ℓ−1}, se
calculan para todas las tramas a la vez y después corre la recurrencia
elemento a elemento sobre el estado c_t.
"""

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import torch
from torch import nn

from src.gp.kernels import DEFAULT_JITTER_SCHEDULE, DTYPE, Kernel, as_tensor
from src.gp.noise import NoiseSource
from src.gp.svgp import SvgpLayer, propagate_gp
from src.utils.errors import ConfigurationError, ContractError, InputError

LAYER_KINDS = ("svgp", "sru-dgp", "sru-nn", "ff-nn")
FEEDFORWARD_KINDS = ("svgp", "ff-nn")


def _gate_vector(value: float, width: int, trainable: bool, module: nn.Module, name: str) -> None:
    tensor = torch.full((width,), float(value), dtype=DTYPE)
    if trainable:
        setattr(module, name, nn.Parameter(tensor))
    else:
        module.register_buffer(name, tensor)


def light_recurrence(
    pre_phi: torch.Tensor,
    pre_c: torch.Tensor,
    pre_r: torch.Tensor,
    pre_h: torch.Tensor,
    v_phi: torch.Tensor,
    v_r: torch.Tensor,
    c0: torch.Tensor,
    return_gates: bool = False,
):
    """Recurrencia ligera + highway sobre secuencias ya transformadas.

    φ_t = σ(a_t + v_φ ⊙ c_{t−1});  c_t = φ_t ⊙ c_{t−1} + (1 − φ_t) ⊙ b_t
    r_t = σ(e_t + v_r ⊙ c_{t−1});  h_t = r_t ⊙ c_t + (1 − r_t) ⊙ g_t
    """
    width = c0.shape[0]
    state = c0
    outputs, forget_gates, reset_gates = [], [], []
    for t in range(pre_phi.shape[0]):
        forget = torch.sigmoid(pre_phi[t] + v_phi * state)
        reset = torch.sigmoid(pre_r[t] + v_r * state)
        state = forget * state + (1.0 - forget) * pre_c[t]
        outputs.append(reset * state + (1.0 - reset) * pre_h[t])
        forget_gates.append(forget)
        reset_gates.append(reset)

    def _stack(rows):
        return torch.stack(rows) if rows else torch.zeros(0, width, dtype=DTYPE)

    H = _stack(outputs)
    if return_gates:
        return H, state, _stack(forget_gates), _stack(reset_gates)
    return H, state


def _check_sequence(H_prev, input_dim: int, name: str) -> torch.Tensor:
    H = as_tensor(H_prev)
    if H.dim() != 2 or H.shape[1] != input_dim:
        raise InputError(f"Entrada de forma {tuple(H.shape)} incompatible con {name} (se esperan {input_dim} columnas)")
    return H


class SruCell(nn.Module):
    """SRU con transformaciones afines (línea base SRU-NN)"""

    def __init__(
        self,
        input_dim: int,
        output_dim: int,
        generator: Optional[torch.Generator] = None,
        train_v: bool = False,
        name: str = "sru",
    ):
        super().__init__()
        self.input_dim = input_dim
        self.output_dim = output_dim
        self.name = name
        bound = 1.0 / input_dim ** 0.5
        for role in ("phi", "c", "r", "h"):
            weight = (2.0 * torch.rand(output_dim, input_dim, dtype=DTYPE, generator=generator) - 1.0) * bound
            bias = (2.0 * torch.rand(output_dim, dtype=DTYPE, generator=generator) - 1.0) * bound
            setattr(self, f"weight_{role}", nn.Parameter(weight))
            setattr(self, f"bias_{role}", nn.Parameter(bias))
        _gate_vector(1.0, output_dim, train_v, self, "v_phi")
        _gate_vector(1.0, output_dim, train_v, self, "v_r")
        self.register_buffer("c0", torch.zeros(output_dim, dtype=DTYPE))

    def propagate(self, H, mode, noise=None, sampling="utterance", utterance_covariance="lowrank"):
        return sru_forward(self, H)[0], 0


def sru_forward(
    params: SruCell,
    H_prev,
    c0: Optional[torch.Tensor] = None,
    return_gates: bool = False,
):
    """SRU sobre una secuencia T×D_in; devuelve (H, c_T)"""
    H = _check_sequence(H_prev, params.input_dim, params.name)
    affine = {
        role: H @ getattr(params, f"weight_{role}").T + getattr(params, f"bias_{role}")
        for role in ("phi", "c", "r", "h")
    }
    state = params.c0 if c0 is None else as_tensor(c0)
    return light_recurrence(
        affine["phi"], affine["c"], affine["r"], affine["h"],
        params.v_phi, params.v_r, state, return_gates=return_gates,
    )


class SruDgpCell(nn.Module):
    """SRU-DGP: las cuatro transformaciones afines pasan a ser funciones GP ξ"""

    ROLES = ("phi", "c", "r", "h")

    def __init__(
        self,
        input_dim: int,
        output_dim: int,
        num_inducing: int,
        kernel_factory: Callable[[], Kernel] = lambda: Kernel("arccos1"),
        n_features: int = 1024,
        generator: Optional[torch.Generator] = None,
        jitter_schedule: Sequence[float] = DEFAULT_JITTER_SCHEDULE,
        train_v: bool = False,
        name: str = "sru_dgp",
    ):
        super().__init__()
        self.input_dim = input_dim
        self.output_dim = output_dim
        self.name = name
        for role in self.ROLES:
            layer = SvgpLayer(
                input_dim, output_dim, num_inducing,
                kernel=kernel_factory(), n_features=n_features, generator=generator,
                jitter_schedule=jitter_schedule, name=f"{name}.xi_{role}",
            )
            setattr(self, f"xi_{role}", layer)
        _gate_vector(1.0, output_dim, train_v, self, "v_phi")
        _gate_vector(1.0, output_dim, train_v, self, "v_r")
        self.register_buffer("c0", torch.zeros(output_dim, dtype=DTYPE))

    def gp_layers(self) -> List[SvgpLayer]:
        return [getattr(self, f"xi_{role}") for role in self.ROLES]

    def kl(self) -> torch.Tensor:
        return sum(layer.kl() for layer in self.gp_layers())

    def propagate(self, H, mode, noise=None, sampling="utterance", utterance_covariance="lowrank"):
        output, _, calls = sru_dgp_forward(self, H, mode, noise, sampling, utterance_covariance)
        return output, calls


def sru_dgp_forward(
    params: SruDgpCell,
    H_prev,
    mode: str = "mean",
    noise: Optional[NoiseSource] = None,
    sampling: str = "utterance",
    utterance_covariance: str = "lowrank",
    c0: Optional[torch.Tensor] = None,
    return_gates: bool = False,
):
    """Cuatro regresiones GP por lotes y luego la recurrencia elemento a elemento.

    Devuelve (H, c_T, gp_call_count); gp_call_count = 4 para cualquier T.
    """
    H = _check_sequence(H_prev, params.input_dim, params.name)
    sequences = []
    gp_calls = 0
    for layer in params.gp_layers():
        sequences.append(propagate_gp(layer, H, mode, noise, sampling, utterance_covariance))
        gp_calls += 1
    state = params.c0 if c0 is None else as_tensor(c0)
    result = light_recurrence(*sequences, params.v_phi, params.v_r, state, return_gates=return_gates)
    if return_gates:
        output, c_last, forget, reset = result
        return output, c_last, gp_calls, forget, reset
    output, c_last = result
    return output, c_last, gp_calls


class FeedForwardNN(nn.Module):
    """Capa afín determinista (tanh en capas ocultas, identidad a la salida)"""

    def __init__(
        self,
        input_dim: int,
        output_dim: int,
        activation: str = "tanh",
        generator: Optional[torch.Generator] = None,
        name: str = "ff_nn",
    ):
        super().__init__()
        if activation not in ("tanh", "identity"):
            raise ConfigurationError(f"Activación no soportada: {activation}", field="activation")
        self.input_dim = input_dim
        self.output_dim = output_dim
        self.activation = activation
        self.name = name
        bound = 1.0 / input_dim ** 0.5
        self.weight = nn.Parameter((2.0 * torch.rand(output_dim, input_dim, dtype=DTYPE, generator=generator) - 1.0) * bound)
        self.bias = nn.Parameter((2.0 * torch.rand(output_dim, dtype=DTYPE, generator=generator) - 1.0) * bound)

    def forward(self, H: torch.Tensor) -> torch.Tensor:
        H = _check_sequence(H, self.input_dim, self.name)
        out = H @ self.weight.T + self.bias
        return torch.tanh(out) if self.activation == "tanh" else out

    def propagate(self, H, mode, noise=None, sampling="utterance", utterance_covariance="lowrank"):
        return self(H), 0

    def final_moments(self, H):
        mean = self(H)
        return mean, torch.zeros_like(mean), 0


def layer_kind(layer: nn.Module) -> str:
    if isinstance(layer, SvgpLayer):
        return "svgp"
    if isinstance(layer, SruDgpCell):
        return "sru-dgp"
    if isinstance(layer, SruCell):
        return "sru-nn"
    if isinstance(layer, FeedForwardNN):
        return "ff-nn"
    raise ConfigurationError(f"Tipo de capa desconocido: {type(layer).__name__}", field="topology")


def validate_stack(layers: Sequence[nn.Module]) -> None:
    """Anchos adyacentes consistentes y capa final feed-forward"""
    if not layers:
        raise ConfigurationError("La topología no tiene capas", field="topology")
    for lower, upper in zip(layers[:-1], layers[1:]):
        if lower.output_dim != upper.input_dim:
            raise ConfigurationError(
                f"Anchos incompatibles: {lower.name} produce {lower.output_dim}, "
                f"{upper.name} espera {upper.input_dim}",
                field="topology",
            )
    if layer_kind(layers[-1]) not in FEEDFORWARD_KINDS:
        raise ConfigurationError(
            f"La última capa debe ser feed-forward ({', '.join(FEEDFORWARD_KINDS)}), "
            f"no {layer_kind(layers[-1])}",
            field="topology",
        )


@dataclass
class StackOutput:
    """Salidas de cada capa; la última como media/varianza predictiva"""
    hidden: List[torch.Tensor]
    mean: torch.Tensor
    variance: torch.Tensor
    gp_call_count: int
    outputs: List[torch.Tensor] = field(default_factory=list)


def stack_forward(
    layers: Sequence[nn.Module],
    X,
    mode: str = "mean",
    noise: Optional[NoiseSource] = None,
    sampling: str = "utterance",
    utterance_covariance: str = "lowrank",
) -> StackOutput:
    """f = f^L ∘ … ∘ f^1: muestras (entrenamiento) o medias (generación) hacia arriba"""
    if mode not in ("mean", "sample"):
        raise ContractError(f"Modo de propagación desconocido: {mode}")
    H = as_tensor(X)
    hidden = []
    gp_calls = 0
    for layer in layers[:-1]:
        H, calls = layer.propagate(H, mode, noise, sampling, utterance_covariance)
        hidden.append(H)
        gp_calls += calls
    mean, variance, calls = layers[-1].final_moments(H)
    gp_calls += calls
    return StackOutput(hidden=hidden, mean=mean, variance=variance,
                       gp_call_count=gp_calls, outputs=hidden + [mean])
