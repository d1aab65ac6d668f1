#!/usr/bin/env python3
"""
Métricas de evaluación: RMSE por dimensión, agregado y por enunciado, más el
tiempo de generación por trama (análogo del factor de tiempo real).
"""

import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np
import pandas as pd
import torch

from src.training.trainer import generate
from src.utils import get_project_logger
from src.utils.errors import InputError

logger = get_project_logger(__name__)

Predictor = Callable[[torch.Tensor], torch.Tensor]


@dataclass
class MetricsReport:
    per_dim_rmse: np.ndarray
    rmse: float
    per_utterance: pd.DataFrame
    seconds_per_frame: float
    n_frames: int
    split: str = ""
    extra: Dict[str, object] = field(default_factory=dict)

    def to_text(self, include_timing: bool = True) -> str:
        """Bloque plano clave=valor"""
        lines = [
            f"split={self.split}",
            f"frames={self.n_frames}",
            f"utterances={len(self.per_utterance)}",
            f"rmse={self.rmse:.17g}",
        ]
        lines += [f"rmse_dim{d}={value:.17g}" for d, value in enumerate(self.per_dim_rmse)]
        lines += [
            f"utterance_rmse_mean={self.per_utterance['rmse'].mean():.17g}",
            f"utterance_rmse_std={self.per_utterance['rmse'].std(ddof=0):.17g}",
        ]
        if include_timing:
            lines.append(f"seconds_per_frame={self.seconds_per_frame:.6e}")
        lines += [f"{key}={value}" for key, value in self.extra.items()]
        return "\n".join(lines) + "\n"

    def per_dim_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"dim": np.arange(len(self.per_dim_rmse)), "rmse": self.per_dim_rmse})


def evaluate(model, dataset, predictor: Optional[Predictor] = None) -> MetricsReport:
    """Genera cada enunciado y mide el error; el tiempo cubre solo la generación"""
    if model is not None and (model.input_dim != dataset.input_dim or model.output_dim != dataset.output_dim):
        raise InputError(
            f"El modelo es {model.input_dim}→{model.output_dim}, "
            f"el dataset {dataset.input_dim}→{dataset.output_dim}"
        )
    if predictor is None:
        predictor = lambda X: generate(model, X)

    squared_sum = np.zeros(dataset.output_dim)
    n_frames = 0
    elapsed = 0.0
    rows = []
    for utt in dataset.utterances:
        start = time.perf_counter()
        prediction = predictor(utt.inputs)
        elapsed += time.perf_counter() - start

        errors = (prediction.detach() - utt.targets).numpy()
        if errors.shape != tuple(utt.targets.shape):
            raise InputError(f"{utt.utterance_id}: predicción de forma {errors.shape}")
        squared = errors ** 2
        squared_sum += squared.sum(axis=0)
        n_frames += utt.n_frames
        rows.append({
            "utterance_id": utt.utterance_id,
            "frames": utt.n_frames,
            "rmse": float(np.sqrt(squared.mean())),
        })

    if n_frames == 0:
        raise InputError("No hay tramas que evaluar")
    per_dim = np.sqrt(squared_sum / n_frames)
    return MetricsReport(
        per_dim_rmse=per_dim,
        rmse=float(np.sqrt(squared_sum.sum() / (n_frames * dataset.output_dim))),
        per_utterance=pd.DataFrame(rows, columns=["utterance_id", "frames", "rmse"]),
        seconds_per_frame=elapsed / n_frames,
        n_frames=n_frames,
        split=dataset.split,
    )


class ValidationCallback:
    """RMSE sobre el split dev cada ``every`` iteraciones (solo registro, sin parada temprana)"""

    def __init__(self, dataset, every: int):
        self.dataset = dataset
        self.every = int(every)
        self.rows: List[dict] = []

    def __call__(self, iteration: int, breakdown, model) -> None:
        if self.every <= 0 or iteration % self.every:
            return
        report = evaluate(model, self.dataset)
        self.rows.append({"iteration": iteration, "elbo": float(breakdown.total), "dev_rmse": report.rmse})
        logger.info(f"Validación it {iteration}: RMSE dev = {report.rmse:.5f}")

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=["iteration", "elbo", "dev_rmse"])
