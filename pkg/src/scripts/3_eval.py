#!/usr/bin/env python3
"""
Paso 3: Evaluación
Genera el split de evaluación con un checkpoint y escribe las métricas RMSE
"""

import sys
from pathlib import Path
from typing import Dict, Optional

sys.path.insert(0, str(Path(__file__).resolve().parents[2]))

from src.config.config_manager import ConfigManager, config
from src.harness.dataset_io import load_dataset
from src.harness.metrics import evaluate
from src.training import load_checkpoint, restore_model
from src.utils import get_project_logger
from src.utils.errors import ConfigurationError

logger = get_project_logger(__name__)


def cmd_eval(cfg: ConfigManager, checkpoint_path: Optional[Path] = None) -> Dict[str, Path]:
    """metrics.txt (bloque clave=valor, determinista) + filas por enunciado y por dimensión"""
    paths = cfg.create_run_structure()
    cfg.write_resolved(paths['out_dir'])

    checkpoint_path = Path(checkpoint_path) if checkpoint_path else paths['final_checkpoint']
    checkpoint = load_checkpoint(checkpoint_path)
    dataset = load_dataset(cfg.split_path(cfg.data.eval_split))
    if (checkpoint.input_dim, checkpoint.output_dim) != (dataset.input_dim, dataset.output_dim):
        raise ConfigurationError(
            f"checkpoint {checkpoint.input_dim}→{checkpoint.output_dim} vs "
            f"dataset {dataset.input_dim}→{dataset.output_dim}",
            field="checkpoint",
        )
    model = restore_model(checkpoint)

    report = evaluate(model, dataset)
    report.extra["checkpoint_iteration"] = checkpoint.iteration

    # el tiempo de pared varía entre corridas; va en un archivo aparte
    with open(paths['metrics'], 'w', encoding='utf-8') as f:
        f.write(report.to_text(include_timing=False))
    report.per_utterance.to_csv(paths['metrics_rows'], index=False, float_format="%.17g")
    report.per_dim_frame().to_csv(paths['metrics_dims'], index=False, float_format="%.17g")
    timing = paths['out_dir'] / "metrics_timing.txt"
    timing.write_text(f"seconds_per_frame={report.seconds_per_frame:.6e}\n", encoding='utf-8')

    logger.info(f"RMSE {dataset.split} = {report.rmse:.5f} ({report.seconds_per_frame * 1e3:.3f} ms/trama)")
    print(f"✅ RMSE ({dataset.split}): {report.rmse:.5f}")
    return {'metrics': paths['metrics'], 'rows': paths['metrics_rows'], 'dims': paths['metrics_dims'], 'timing': timing}


def main():
    print("=" * 80)
    print("EVALUACIÓN")
    print("=" * 80)
    try:
        cmd_eval(config)
        return 0
    except Exception as e:
        print(f"\n❌ Error: {e}")
        return 1


if __name__ == "__main__":
    exit(main())
