#!/usr/bin/env python3
"""
Checkpoints versionados: configuración, parámetros, proyecciones aleatorias
(buffers), estado de Adam, iteración, semilla y traza del ELBO.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

import torch

from src import __version__
from src.config.config_manager import model_config_from_dict
from src.training.model import DeepGpModel, build_model
from src.training.optimizer import AdamState
from src.utils import get_project_logger
from src.utils.errors import CheckpointError

logger = get_project_logger(__name__)

CHECKPOINT_FORMAT = "srudgp-checkpoint"
CHECKPOINT_VERSION = 1


@dataclass
class Checkpoint:
    config: dict
    input_dim: int
    output_dim: int
    n_train_frames: int
    state_dict: Dict[str, torch.Tensor]
    adam_state: AdamState
    iteration: int
    seed: int
    trace: List[dict] = field(default_factory=list)
    library_version: str = __version__


def save_checkpoint(
    path: Path,
    model: DeepGpModel,
    adam_state: Optional[AdamState] = None,
    iteration: int = 0,
    trace: Optional[List[dict]] = None,
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "library_version": __version__,
        "config": dict(model.config),
        "input_dim": model.input_dim,
        "output_dim": model.output_dim,
        "n_train_frames": model.n_train_frames,
        "state_dict": {k: v.detach().clone() for k, v in model.state_dict().items()},
        "adam_state": (adam_state or AdamState()).to_dict(),
        "iteration": int(iteration),
        "seed": int(model.config.get("seed", 0)),
        "trace": list(trace or []),
    }
    torch.save(payload, path)
    logger.debug(f"Checkpoint guardado: {path} (iteración {iteration})")
    return path


def load_checkpoint(path: Path) -> Checkpoint:
    """Lee un checkpoint; archivo inexistente -> FileNotFoundError"""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"No existe el checkpoint: {path}")
    try:
        payload = torch.load(path, map_location="cpu", weights_only=True)
    except Exception as e:
        raise CheckpointError(f"Checkpoint ilegible {path}: {e}") from e

    if not isinstance(payload, dict) or payload.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointError(f"{path} no es un checkpoint de srudgp")
    if payload.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(f"Versión de checkpoint no soportada: {payload.get('version')}")

    return Checkpoint(
        config=payload["config"],
        input_dim=int(payload["input_dim"]),
        output_dim=int(payload["output_dim"]),
        n_train_frames=int(payload["n_train_frames"]),
        state_dict=payload["state_dict"],
        adam_state=AdamState.from_dict(payload["adam_state"]),
        iteration=int(payload["iteration"]),
        seed=int(payload["seed"]),
        trace=list(payload.get("trace", [])),
        library_version=payload.get("library_version", "desconocida"),
    )


def restore_model(checkpoint: Checkpoint) -> DeepGpModel:
    """Reconstruye la arquitectura desde la configuración y carga los tensores exactos"""
    model_cfg = model_config_from_dict(checkpoint.config)
    model = build_model(
        model_cfg,
        checkpoint.input_dim,
        checkpoint.output_dim,
        checkpoint.n_train_frames,
        topology=checkpoint.config.get("topology"),
    )
    try:
        model.load_state_dict(checkpoint.state_dict, strict=True)
    except RuntimeError as e:
        raise CheckpointError(f"Parámetros incompatibles con la arquitectura: {e}") from e
    return model
