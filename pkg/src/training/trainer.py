#!/usr/bin/env python3
"""
Bucle de entrenamiento y generación.

Un enunciado por minibatch, orden barajado con semilla por época y ruido
Monte Carlo sembrado por iteración: la iteración k depende solo de
(semilla, k) y del estado de parámetros/Adam, de modo que reanudar desde un
checkpoint reproduce la corrida ininterrumpida.
"""

import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Optional, Sequence

import torch
from tqdm import tqdm

from src.config.config_manager import ModelConfig, TrainingConfig
from src.gp import iteration_noise
from src.training.checkpoint import Checkpoint, save_checkpoint
from src.training.elbo import ElboBreakdown, elbo
from src.training.model import DeepGpModel
from src.training.optimizer import AdamHyper, AdamState, adam_step, grad
from src.utils import get_project_logger
from src.utils.errors import ContractError, InputError, SingularityError, TrainingAbortedError

logger = get_project_logger(__name__)

Callback = Callable[[int, ElboBreakdown, DeepGpModel], None]
PretrainHook = Callable[[DeepGpModel, object], None]


@dataclass
class FitResult:
    model: DeepGpModel
    trace: List[dict]
    adam_state: AdamState
    iterations: int
    checkpoints: List[Path] = field(default_factory=list)


def utterance_order(seed: int, epoch: int, n_utterances: int) -> List[int]:
    """Permutación de enunciados de una época, función solo de (seed, epoch)"""
    generator = torch.Generator().manual_seed(int(seed) * 7_919 + int(epoch))
    return torch.randperm(n_utterances, generator=generator).tolist()


def fit(
    model: DeepGpModel,
    dataset,
    model_cfg: ModelConfig,
    training_cfg: Optional[TrainingConfig] = None,
    callbacks: Sequence[Callback] = (),
    elbo_level: str = "utterance",
    checkpoint_dir: Optional[Path] = None,
    resume: Optional[Checkpoint] = None,
    pretrain: Optional[PretrainHook] = None,
    max_iters: Optional[int] = None,
) -> FitResult:
    """Maximiza el ELBO con Adam, un paso por enunciado"""
    utterances = list(dataset.utterances)
    if not utterances:
        raise InputError("El dataset de entrenamiento está vacío")
    training_cfg = training_cfg or TrainingConfig()
    max_iters = model_cfg.max_iters if max_iters is None else int(max_iters)
    hyper = AdamHyper.from_config(model_cfg)
    seed = int(model_cfg.seed)

    state = AdamState()
    trace: List[dict] = []
    start = 0
    if resume is not None:
        if resume.iteration > max_iters:
            raise ContractError(f"El checkpoint está en la iteración {resume.iteration} > {max_iters}")
        state = resume.adam_state
        trace = list(resume.trace)
        start = resume.iteration
        logger.info(f"Reanudando desde la iteración {start}")
    elif pretrain is not None:
        pretrain(model, dataset)

    n_utt = len(utterances)
    order: List[int] = []
    current_epoch = -1
    checkpoints: List[Path] = []

    progress = tqdm(
        range(start, max_iters),
        total=max_iters,
        initial=start,
        desc="Entrenando",
        unit="it",
        disable=not training_cfg.progress_bar,
        file=sys.stdout,
    )
    for iteration in progress:
        epoch = iteration // n_utt
        if epoch != current_epoch:
            order = utterance_order(seed, epoch, n_utt)
            current_epoch = epoch
        batch = utterances[order[iteration % n_utt]]
        noise = iteration_noise(seed, iteration)

        try:
            breakdown = elbo(model, batch, noise, level=elbo_level)
            tape = grad(model, breakdown)
        except SingularityError as e:
            logger.error(f"Singularidad en la iteración {iteration + 1}: {e}")
            raise TrainingAbortedError(str(e), iteration=iteration + 1, layer=e.layer) from e

        adam_step(model, tape, state, hyper)
        record = breakdown.to_record(iteration + 1, batch.utterance_id)
        trace.append(record)

        for callback in callbacks:
            callback(iteration + 1, breakdown, model)

        if training_cfg.log_every and (iteration + 1) % training_cfg.log_every == 0:
            logger.info(
                f"it {iteration + 1}/{max_iters} ELBO={record['total']:.4f} "
                f"loglik={record['loglik']:.4f} KL={record['kl_total']:.4f}"
            )
            progress.set_postfix(elbo=f"{record['total']:.3f}")

        if checkpoint_dir is not None and training_cfg.checkpoint_every and \
                (iteration + 1) % training_cfg.checkpoint_every == 0:
            path = Path(checkpoint_dir) / f"checkpoint_{iteration + 1:06d}.pt"
            checkpoints.append(save_checkpoint(path, model, state, iteration + 1, trace))
    progress.close()

    return FitResult(model=model, trace=trace, adam_state=state,
                     iterations=max_iters, checkpoints=checkpoints)


@torch.no_grad()
def generate(model: DeepGpModel, X) -> torch.Tensor:
    """Propagación determinista de medias; devuelve la media predictiva final"""
    return model(X, mode="mean").mean
