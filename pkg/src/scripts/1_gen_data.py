#!/usr/bin/env python3
"""
Paso 1: Generación de datos sintéticos
Escribe train.csv, dev.csv, test.csv y provenance.yaml en data.data_dir
"""

import sys
from pathlib import Path
from typing import Dict

import yaml

sys.path.insert(0, str(Path(__file__).resolve().parents[2]))

from src import __version__
from src.config.config_manager import ConfigManager, config
from src.harness.dataset_io import save_dataset
from src.harness.tasks import gen_splits
from src.utils import get_project_logger

logger = get_project_logger(__name__)


def cmd_gen_data(cfg: ConfigManager) -> Dict[str, Path]:
    """Genera los tres splits del generador configurado"""
    cfg.validate(require_generator=True)
    cfg.write_resolved(cfg.output_dir())

    data_dir = cfg.data_dir()
    data_dir.mkdir(parents=True, exist_ok=True)
    logger.info(f"Generando '{cfg.data.generator}' (semilla {cfg.data.seed}) en {data_dir}")

    written = {}
    for split, dataset in gen_splits(cfg.data).items():
        written[split] = save_dataset(dataset, data_dir / f"{split}.csv")
        print(f"✅ {split}: {len(dataset)} enunciados, {dataset.n_frames} tramas -> {written[split].name}")

    provenance = {
        "library_version": __version__,
        "generator": cfg.data.generator,
        "seed": cfg.data.seed,
        "data": {k: v for k, v in cfg.to_dict()["data"].items() if not k.endswith("_path")},
        "files": {split: path.name for split, path in written.items()},
    }
    written["provenance"] = data_dir / "provenance.yaml"
    with open(written["provenance"], 'w', encoding='utf-8') as f:
        yaml.safe_dump(provenance, f, sort_keys=False, allow_unicode=True)
    return written


def main():
    print("=" * 80)
    print("GENERACIÓN DE DATOS SINTÉTICOS")
    print("=" * 80)
    try:
        cmd_gen_data(config)
        return 0
    except Exception as e:
        print(f"\n❌ Error: {e}")
        return 1


if __name__ == "__main__":
    exit(main())
