#!/usr/bin/env python3
"""
Tareas sintéticas de secuencias (sustituto a escala de escritorio del corpus de voz).

    static-nonlinear   y_t = sin(2·W x_t) + ruido; x_t ~ N(0, I) iid
    lagged-copy        x AR(1) estacionaria por dimensión (ρ);
                       y_t^d = x_{t−k}^{d mod D_in} + ruido
    smooth-trajectory  z_t = tanh(W x_t); y_0 = z_0; y_t = α y_{t−1} + (1−α) z_t + ruido

W ~ N(0, 1/D_in) depende solo de la semilla, así que train/dev/test comparten la
misma función y difieren en las secuencias.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
import torch

from src.gp import DTYPE, as_tensor
from src.utils.errors import ConfigurationError, InputError

TASK_KINDS = ("static-nonlinear", "lagged-copy", "smooth-trajectory")
SPLITS = ("train", "dev", "test")


@dataclass
class SequenceBatch:
    """Un enunciado: entradas T×D_in, objetivos T×D_out"""
    utterance_id: str
    inputs: torch.Tensor
    targets: torch.Tensor

    def __post_init__(self):
        self.inputs = as_tensor(self.inputs)
        self.targets = as_tensor(self.targets)
        if self.inputs.dim() != 2 or self.targets.dim() != 2:
            raise InputError(f"{self.utterance_id}: entradas y objetivos deben ser matrices")
        if self.inputs.shape[0] != self.targets.shape[0]:
            raise InputError(
                f"{self.utterance_id}: {self.inputs.shape[0]} tramas de entrada vs {self.targets.shape[0]} de salida"
            )

    @property
    def n_frames(self) -> int:
        return self.inputs.shape[0]


@dataclass
class Dataset:
    utterances: List[SequenceBatch]
    input_dim: int
    output_dim: int
    split: str = "train"
    provenance: Dict[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if self.split not in SPLITS:
            raise ConfigurationError(f"split desconocido: {self.split}", field="split")
        for utt in self.utterances:
            if utt.n_frames < 1:
                raise InputError(f"{utt.utterance_id}: un enunciado necesita al menos una trama")
            if utt.inputs.shape[1] != self.input_dim or utt.targets.shape[1] != self.output_dim:
                raise InputError(
                    f"{utt.utterance_id}: dimensiones {utt.inputs.shape[1]}→{utt.targets.shape[1]}, "
                    f"el dataset declara {self.input_dim}→{self.output_dim}"
                )

    def __len__(self) -> int:
        return len(self.utterances)

    @property
    def n_frames(self) -> int:
        return sum(utt.n_frames for utt in self.utterances)

    @property
    def utterance_ids(self) -> List[str]:
        return [utt.utterance_id for utt in self.utterances]


def task_weights(seed: int, D_in: int, D_out: int) -> np.ndarray:
    """W compartida por los tres splits de una semilla"""
    rng = np.random.default_rng(seed)
    return rng.normal(0.0, 1.0 / math.sqrt(D_in), size=(D_out, D_in))


def _ar1(rng: np.random.Generator, n: int, d: int, rho: float) -> np.ndarray:
    x = np.empty((n, d))
    x[0] = rng.standard_normal(d)
    innovation = math.sqrt(1.0 - rho * rho)
    for t in range(1, n):
        x[t] = rho * x[t - 1] + innovation * rng.standard_normal(d)
    return x


def gen_task(
    kind: str,
    seed: int,
    U: int,
    T: int,
    D_in: int,
    D_out: int,
    noise_sd: float = 0.05,
    split: str = "train",
    lag: int = 3,
    rho: float = 0.7,
    alpha: float = 0.9,
) -> Dataset:
    """Genera U enunciados de T tramas; determinista dada la semilla"""
    if kind not in TASK_KINDS:
        raise ConfigurationError(f"generador desconocido: {kind}", field="data.generator")
    if split not in SPLITS:
        raise ConfigurationError(f"split desconocido: {split}", field="split")
    for name, value in (("U", U), ("T", T), ("D_in", D_in), ("D_out", D_out)):
        if value < 1:
            raise ConfigurationError(f"{name} debe ser >= 1, recibido {value}", field=name)
    if noise_sd < 0:
        raise ConfigurationError("noise_sd debe ser >= 0", field="data.noise_sd")
    if kind == "lagged-copy" and lag < 1:
        raise ConfigurationError("lag debe ser >= 1", field="data.lag")

    W = task_weights(seed, D_in, D_out)
    rng = np.random.default_rng([seed, SPLITS.index(split) + 1])
    utterances = []
    for u in range(U):
        if kind == "static-nonlinear":
            X = rng.standard_normal((T, D_in))
            Y = np.sin(2.0 * X @ W.T)
        elif kind == "lagged-copy":
            full = _ar1(rng, T + lag, D_in, rho)
            X = full[lag:]
            columns = [d % D_in for d in range(D_out)]
            Y = full[:T][:, columns]
        else:
            X = rng.standard_normal((T, D_in))
            Z = np.tanh(X @ W.T)
            Y = np.empty_like(Z)
            Y[0] = Z[0]
            for t in range(1, T):
                Y[t] = alpha * Y[t - 1] + (1.0 - alpha) * Z[t]
        if noise_sd > 0:
            Y = Y + noise_sd * rng.standard_normal(Y.shape)
        utterances.append(SequenceBatch(
            utterance_id=f"{split}-{u:04d}",
            inputs=torch.from_numpy(np.ascontiguousarray(X)).to(DTYPE),
            targets=torch.from_numpy(np.ascontiguousarray(Y)).to(DTYPE),
        ))

    provenance = {"generator": kind, "seed": int(seed), "noise_sd": float(noise_sd)}
    if kind == "lagged-copy":
        provenance.update({"lag": int(lag), "rho": float(rho)})
    if kind == "smooth-trajectory":
        provenance["alpha"] = float(alpha)
    return Dataset(utterances=utterances, input_dim=D_in, output_dim=D_out, split=split, provenance=provenance)


def gen_splits(data_cfg, kind: Optional[str] = None) -> Dict[str, Dataset]:
    """train/dev/test con la misma función de tarea y secuencias disjuntas"""
    kind = kind or data_cfg.generator
    if not kind:
        raise ConfigurationError("falta el tipo de generador", field="data.generator")
    sizes = {"train": data_cfg.train_utterances, "dev": data_cfg.dev_utterances, "test": data_cfg.test_utterances}
    return {
        split: gen_task(
            kind, data_cfg.seed, sizes[split], data_cfg.frames, data_cfg.input_dim, data_cfg.output_dim,
            noise_sd=data_cfg.noise_sd, split=split, lag=data_cfg.lag, rho=data_cfg.rho, alpha=data_cfg.alpha,
        )
        for split in SPLITS
    }


def lagged_copy_floor(rho: float, lag: int, noise_sd: float) -> float:
    """Desviación condicional de y_t dado solo x_t: √(1 − ρ^{2k} + σ_ruido²)"""
    return math.sqrt(1.0 - rho ** (2 * lag) + noise_sd ** 2)
