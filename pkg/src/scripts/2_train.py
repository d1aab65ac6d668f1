#!/usr/bin/env python3
"""
Paso 2: Entrenamiento
Ajusta el modelo configurado sobre train.csv y escribe checkpoints y la traza del ELBO
"""

import sys
from pathlib import Path
from typing import Dict, Optional

import pandas as pd

sys.path.insert(0, str(Path(__file__).resolve().parents[2]))

from src.config.config_manager import ConfigManager, config
from src.harness.dataset_io import load_dataset
from src.harness.metrics import ValidationCallback
from src.training import build_model, fit, load_checkpoint, restore_model, save_checkpoint
from src.utils import get_project_logger
from src.utils.errors import ConfigurationError

logger = get_project_logger(__name__)

TRACE_COLUMNS = ["iteration", "utterance_id", "loglik", "kl_total", "kl_scale", "total"]


def _check_dims(cfg: ConfigManager, input_dim: int, output_dim: int):
    for key, actual in (("input_dim", input_dim), ("output_dim", output_dim)):
        declared = getattr(cfg.model, key)
        if declared is not None and declared != actual:
            raise ConfigurationError(f"el dataset tiene {actual}, la configuración declara {declared}",
                                     field=f"model.{key}")


def cmd_train(cfg: ConfigManager, resume_path: Optional[Path] = None) -> Dict[str, Path]:
    """Entrena (o reanuda) y deja los artefactos en output.dir"""
    cfg.validate()
    paths = cfg.create_run_structure()
    cfg.write_resolved(paths['out_dir'])

    train = load_dataset(cfg.split_path("train"))
    _check_dims(cfg, train.input_dim, train.output_dim)

    checkpoint = None
    if resume_path is not None:
        checkpoint = load_checkpoint(resume_path)
        if (checkpoint.input_dim, checkpoint.output_dim) != (train.input_dim, train.output_dim):
            raise ConfigurationError("el checkpoint no coincide con las dimensiones del dataset", field="checkpoint")
        model = restore_model(checkpoint)
    else:
        model = build_model(cfg.model, train.input_dim, train.output_dim, train.n_frames, topology=cfg.topology())

    callbacks = []
    validation = None
    if cfg.training.validation_every > 0:
        validation = ValidationCallback(load_dataset(cfg.split_path("dev")), cfg.training.validation_every)
        callbacks.append(validation)

    logger.info(
        f"Entrenando {' → '.join(model.topology())} con ELBO '{cfg.elbo_level()}', "
        f"{len(train)} enunciados, N={train.n_frames} tramas"
    )
    result = fit(
        model, train, cfg.model, cfg.training,
        callbacks=callbacks,
        elbo_level=cfg.elbo_level(),
        checkpoint_dir=paths['checkpoints_dir'],
        resume=checkpoint,
    )

    pd.DataFrame(result.trace, columns=TRACE_COLUMNS).to_csv(paths['trace'], index=False, float_format="%.17g")
    save_checkpoint(paths['final_checkpoint'], model, result.adam_state, result.iterations, result.trace)
    written = {'trace': paths['trace'], 'checkpoint': paths['final_checkpoint']}
    if validation is not None:
        validation.to_frame().to_csv(paths['validation'], index=False, float_format="%.17g")
        written['validation'] = paths['validation']

    final = result.trace[-1] if result.trace else None
    if final:
        print(f"✅ {result.iterations} iteraciones, ELBO final {final['total']:.4f}")
    return written


def main():
    print("=" * 80)
    print("ENTRENAMIENTO SRU-DGP")
    print("=" * 80)
    try:
        cmd_train(config)
        return 0
    except KeyboardInterrupt:
        print("\n\nEntrenamiento interrumpido por el usuario")
        return 1
    except Exception as e:
        print(f"\n❌ Error: {e}")
        return 1


if __name__ == "__main__":
    exit(main())
