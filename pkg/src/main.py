#!/usr/bin/env python3
"""Punto de entrada de línea de comandos: gen-data, train, eval, bench."""

import argparse
import importlib.util
import os
import re
import sys
from pathlib import Path
from typing import List, Optional

# Configurar encoding en Windows
if sys.platform == "win32":
    os.environ["PYTHONIOENCODING"] = "utf-8"
    import io
    sys.stdout = io.TextIOWrapper(sys.stdout.buffer, encoding='utf-8')
    sys.stderr = io.TextIOWrapper(sys.stderr.buffer, encoding='utf-8')

# Agregar directorio raíz al path
project_root = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(project_root))

from src.config.config_manager import ARCHITECTURES, ConfigManager
from src.utils import get_project_logger
from src.utils.errors import ConfigurationError

logger = get_project_logger(__name__)

SCRIPTS_DIR = Path(__file__).resolve().parent / "scripts"
COMMAND_SCRIPTS = {
    "gen-data": ("1_gen_data.py", "cmd_gen_data"),
    "train": ("2_train.py", "cmd_train"),
    "eval": ("3_eval.py", "cmd_eval"),
    "bench": ("4_bench.py", "cmd_bench"),
}


def _load_module(module_path: Path, attr: str = None):
    """Carga un módulo dinámicamente desde una ruta."""
    spec = importlib.util.spec_from_file_location(module_path.stem, str(module_path))
    if spec is None or spec.loader is None:
        raise ImportError(f"No se pudo cargar: {module_path}")
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return getattr(module, attr) if attr else module


class CliArgumentParser(argparse.ArgumentParser):
    """Los errores de argumentos salen como ConfigurationError (una línea srudgp-error, código 1)"""

    def error(self, message: str):
        match = re.match(r"argument ([^:]+):", message)
        raise ConfigurationError(f"{self.prog}: {message}", field=match.group(1) if match else None)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="archivo YAML de configuración")
    common.add_argument("--seed", type=int, help="semilla maestra (modelo y datos)")
    common.add_argument("--out", type=Path, help="directorio de salida")
    common.add_argument("--iters", type=int, help="iteraciones máximas de entrenamiento")
    common.add_argument("--layers", type=int, help="número de capas L")
    common.add_argument("--inducing", type=int, help="puntos inducidos por capa")
    common.add_argument("--arch", choices=ARCHITECTURES, help="arquitectura")
    common.add_argument("--generator", help="tipo de tarea sintética")
    common.add_argument("--set", action="append", default=[], metavar="SECCION.CLAVE=VALOR",
                        help="override con ruta punteada (repetible)")

    parser = CliArgumentParser(prog="srudgp", description="Deep GPs con capas SRU (SRU-DGP)")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("gen-data", parents=[common], help="genera datasets sintéticos")
    train = sub.add_parser("train", parents=[common], help="entrena un modelo")
    train.add_argument("--resume", type=Path, help="checkpoint desde el que reanudar")
    evaluate = sub.add_parser("eval", parents=[common], help="evalúa un checkpoint")
    evaluate.add_argument("--checkpoint", type=Path, help="checkpoint a evaluar")
    sub.add_parser("bench", parents=[common], help="mide tiempos de generación")
    return parser


def build_config(args: argparse.Namespace) -> ConfigManager:
    """Archivo < entorno < --set < flags"""
    cfg = ConfigManager(yaml_path=args.config)
    cfg.apply_assignments(args.set)
    cfg.apply_overrides({
        "model.seed": args.seed,
        "data.seed": args.seed,
        "model.max_iters": args.iters,
        "model.layers": args.layers,
        "model.inducing": args.inducing,
        "model.arch": args.arch,
        "data.generator": args.generator,
        "output.dir": str(args.out) if args.out else None,
    })
    if args.command == "gen-data" and args.out:
        cfg.data.data_dir = str(args.out)
    return cfg


def run_command(args: argparse.Namespace) -> None:
    cfg = build_config(args)
    script, attr = COMMAND_SCRIPTS[args.command]
    command = _load_module(SCRIPTS_DIR / script, attr)
    logger.info(f"Ejecutando '{args.command}' -> {cfg.output_dir()}")
    if args.command == "train":
        command(cfg, resume_path=args.resume)
    elif args.command == "eval":
        command(cfg, checkpoint_path=args.checkpoint)
    else:
        command(cfg)


def format_error(error: BaseException) -> str:
    message = " ".join(str(error).split())
    return f"srudgp-error kind={type(error).__name__} message={message}"


def main(argv: Optional[List[str]] = None) -> int:
    """Código de salida 0 si el comando terminó; 1 con una línea de diagnóstico en stderr"""
    try:
        args = build_parser().parse_args(argv)
        run_command(args)
        return 0
    except KeyboardInterrupt:
        print(format_error(KeyboardInterrupt("interrumpido por el usuario")), file=sys.stderr)
        return 1
    except Exception as e:
        logger.debug("Traza del error", exc_info=True)
        print(format_error(e), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
