#!/usr/bin/env python3
"""
Gestor de Configuración Centralizado
Jerarquía de carga (de menor a mayor prioridad):
1. Valores por defecto en este archivo (escala del artículo)
2. Archivo config.yaml o --config (escala de escritorio)
3. Variables de entorno (desde .env o sistema)
4. Flags de la línea de comandos y overrides con ruta punteada
"""

import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional

import yaml
from dotenv import load_dotenv

from src import __version__
from src.utils.errors import ConfigurationError

# Cargar variables de entorno desde .env si existe
env_file = Path(__file__).resolve().parents[2] / ".env"
if env_file.exists():
    load_dotenv(env_file, override=False)
else:
    load_dotenv(override=False)


ARCHITECTURES = ("ff-dgp", "sru-dgp", "sru-nn")
GENERATOR_KINDS = ("static-nonlinear", "lagged-copy", "smooth-trajectory")
ELBO_LEVELS = ("auto", "utterance", "frame")
KERNEL_KINDS = ("arccos1", "linear", "rbf")
UTTERANCE_COVARIANCES = ("lowrank", "full")


# ============================================================================
# VALORES POR DEFECTO (FALLBACK)
# ============================================================================
# Escala del artículo; config.yaml trae la escala de escritorio

@dataclass
class ModelConfig:
    """Arquitectura, inferencia variacional y optimizador"""
    arch: str = "sru-dgp"
    layers: int = 3
    topology: Optional[List[str]] = None     # lista explícita; None = derivada de arch/layers
    input_dim: Optional[int] = None          # se toma del dataset si es None
    output_dim: Optional[int] = None
    hidden_width: int = 256                  # 16 en config.yaml
    inducing: int = 1024                     # 64 en config.yaml
    n_features: int = 1024                   # 256 en config.yaml
    kernel: str = "arccos1"
    kernel_scale: float = 1.0
    kernel_lengthscale: float = 1.0
    kernel_bias: float = 1.0
    noise_variance: float = 0.1
    per_dim_noise: bool = False
    samples: int = 1
    elbo_level: str = "auto"                 # auto: frame para ff-dgp, utterance para el resto
    utterance_covariance: str = "lowrank"
    train_v: bool = False
    jitter_schedule: List[float] = field(default_factory=lambda: [1e-6, 1e-5, 1e-4])
    lr: float = 1e-2
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    max_iters: int = 5000
    seed: int = 0


@dataclass
class TrainingConfig:
    """Bucle de entrenamiento y artefactos periódicos"""
    checkpoint_every: int = 500
    validation_every: int = 0
    log_every: int = 100
    progress_bar: bool = True


@dataclass
class DataConfig:
    """Generador sintético y rutas de los splits"""
    generator: Optional[str] = None
    seed: int = 0
    input_dim: int = 2
    output_dim: int = 1
    frames: int = 50
    train_utterances: int = 64
    dev_utterances: int = 16
    test_utterances: int = 16
    noise_sd: float = 0.05
    lag: int = 3
    rho: float = 0.7
    alpha: float = 0.9
    data_dir: str = "data/synthetic"
    train_path: Optional[str] = None
    dev_path: Optional[str] = None
    test_path: Optional[str] = None
    eval_split: str = "test"


@dataclass
class BenchConfig:
    """Medición de tiempos de generación (análogo del RTF)"""
    trials: int = 10
    layers: List[int] = field(default_factory=lambda: [3, 4, 5])
    archs: List[str] = field(default_factory=lambda: list(ARCHITECTURES))
    frames: int = 200
    checkpoint_dir: Optional[str] = None


@dataclass
class OutputConfig:
    dir: str = "runs/default"


@dataclass
class PathConfig:
    """Rutas del proyecto"""
    project_root: Path


def build_topology(arch: str, layers: int) -> List[str]:
    """FF abajo y arriba, (L − 2) celdas recurrentes en medio"""
    if arch not in ARCHITECTURES:
        raise ConfigurationError(f"Arquitectura desconocida: {arch} (disponibles: {', '.join(ARCHITECTURES)})", field="model.arch")
    if arch == "ff-dgp":
        if layers < 1:
            raise ConfigurationError("ff-dgp requiere al menos 1 capa", field="model.layers")
        return ["svgp"] * layers
    if layers < 2:
        raise ConfigurationError(f"{arch} requiere al menos 2 capas", field="model.layers")
    if arch == "sru-dgp":
        return ["svgp"] + ["sru-dgp"] * (layers - 2) + ["svgp"]
    return ["ff-nn"] + ["sru-nn"] * (layers - 2) + ["ff-nn"]


def _as_number(value: Any) -> Any:
    """PyYAML lee '1e-2' como texto; se reintenta como flotante"""
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            return value
    if isinstance(value, list):
        return [_as_number(item) for item in value]
    return value


def _parse_scalar(text: str) -> Any:
    """Valor tipado desde texto de override"""
    return _as_number(yaml.safe_load(text))


def _coerce(current: Any, value: Any, key: str) -> Any:
    if value is None or current is None:
        return value
    if isinstance(current, bool):
        if isinstance(value, str):
            return value.strip().lower() in ("1", "true", "yes", "si", "sí")
        return bool(value)
    if isinstance(current, int):
        if isinstance(value, float) and not value.is_integer():
            raise ConfigurationError(f"se esperaba un entero, recibido {value}", field=key)
        try:
            return int(value)
        except (TypeError, ValueError):
            raise ConfigurationError(f"se esperaba un entero, recibido {value!r}", field=key)
    if isinstance(current, float):
        try:
            return float(value)
        except (TypeError, ValueError):
            raise ConfigurationError(f"se esperaba un número, recibido {value!r}", field=key)
    if isinstance(current, list) and not isinstance(value, list):
        return [value]
    return value


# ============================================================================
# GESTOR DE CONFIGURACIÓN
# ============================================================================

class ConfigManager:

    SECTIONS = ("model", "training", "data", "bench", "output")

    def __init__(
        self,
        yaml_path: Optional[Path] = None,
        project_root: Optional[Path] = None,
        use_env: bool = True,
    ):
        if project_root is None:
            project_root = Path(__file__).resolve().parents[2]

        self.paths = PathConfig(project_root=project_root)

        self.model = ModelConfig()
        self.training = TrainingConfig()
        self.data = DataConfig()
        self.bench = BenchConfig()
        self.output = OutputConfig()

        if yaml_path is None:
            self._load_yaml_config(project_root / "config.yaml", required=False)
        else:
            self._load_yaml_config(Path(yaml_path), required=True)

        if use_env:
            self._load_env()

    def _load_yaml_config(self, yaml_path: Path, required: bool):
        """Carga configuración desde YAML y sobrescribe valores por defecto"""
        if not yaml_path.exists():
            if required:
                raise FileNotFoundError(f"No se encontró el archivo de configuración: {yaml_path}")
            print(f"⚠️  ADVERTENCIA: No se encontró {yaml_path}")
            print("   Usando configuración por defecto.")
            return

        with open(yaml_path, 'r', encoding='utf-8') as f:
            try:
                data = yaml.safe_load(f) or {}
            except yaml.YAMLError as e:
                raise ConfigurationError(f"YAML inválido en {yaml_path}: {e}", field="config")

        if not isinstance(data, dict):
            raise ConfigurationError(f"{yaml_path} debe contener un mapa de secciones", field="config")

        for section, values in data.items():
            if section not in self.SECTIONS:
                raise ConfigurationError(f"Sección desconocida en {yaml_path.name}", field=section)
            for key, value in (values or {}).items():
                self.set_value(f"{section}.{key}", value)

    def _load_env(self):
        """Sobrescribe con SRUDGP_OUTPUT_DIR y SRUDGP_SEED si están definidas"""
        out_dir = os.getenv("SRUDGP_OUTPUT_DIR")
        if out_dir:
            self.output.dir = out_dir
        seed = os.getenv("SRUDGP_SEED")
        if seed:
            self.set_value("model.seed", seed)

    # ========================================================================
    # OVERRIDES
    # ========================================================================

    def set_value(self, dotted_key: str, value: Any):
        """Asigna ``section.key``; clave desconocida -> ConfigurationError"""
        parts = dotted_key.split(".")
        if len(parts) != 2 or parts[0] not in self.SECTIONS:
            raise ConfigurationError("clave de configuración desconocida", field=dotted_key)
        section = getattr(self, parts[0])
        if not hasattr(section, parts[1]):
            raise ConfigurationError("clave de configuración desconocida", field=dotted_key)
        current = getattr(section, parts[1])
        if isinstance(value, str) and not isinstance(current, str):
            value = _parse_scalar(value)
        elif isinstance(value, list):
            value = _as_number(value)
        setattr(section, parts[1], _coerce(current, value, dotted_key))

    def apply_overrides(self, overrides: Dict[str, Any]):
        for key, value in overrides.items():
            if value is not None:
                self.set_value(key, value)

    def apply_assignments(self, assignments: List[str]):
        """Overrides 'section.key=value' de la línea de comandos"""
        for item in assignments or []:
            if "=" not in item:
                raise ConfigurationError(f"override sin '=': {item!r}", field=item)
            key, raw = item.split("=", 1)
            self.set_value(key.strip(), raw.strip())

    # ========================================================================
    # DERIVADOS Y VALIDACIÓN
    # ========================================================================

    def topology(self) -> List[str]:
        if self.model.topology:
            return list(self.model.topology)
        return build_topology(self.model.arch, self.model.layers)

    def elbo_level(self) -> str:
        if self.model.elbo_level != "auto":
            return self.model.elbo_level
        return "frame" if self.model.arch == "ff-dgp" else "utterance"

    def validate(self, require_generator: bool = False):
        m = self.model
        for key in ("hidden_width", "inducing", "n_features", "samples", "max_iters", "layers"):
            if getattr(m, key) < 1:
                raise ConfigurationError(f"debe ser >= 1, recibido {getattr(m, key)}", field=f"model.{key}")
        if m.lr <= 0:
            raise ConfigurationError(f"debe ser > 0, recibido {m.lr}", field="model.lr")
        if m.noise_variance <= 0:
            raise ConfigurationError(f"debe ser > 0, recibido {m.noise_variance}", field="model.noise_variance")
        if not 0 <= m.beta1 < 1 or not 0 <= m.beta2 < 1:
            raise ConfigurationError("beta1 y beta2 deben estar en [0, 1)", field="model.beta1")
        if m.kernel not in KERNEL_KINDS:
            raise ConfigurationError(f"kernel desconocido: {m.kernel}", field="model.kernel")
        if m.elbo_level not in ELBO_LEVELS:
            raise ConfigurationError(f"nivel de ELBO desconocido: {m.elbo_level}", field="model.elbo_level")
        if m.utterance_covariance not in UTTERANCE_COVARIANCES:
            raise ConfigurationError(f"covarianza desconocida: {m.utterance_covariance}", field="model.utterance_covariance")
        if not m.jitter_schedule:
            raise ConfigurationError("el esquema de jitter está vacío", field="model.jitter_schedule")

        topology = self.topology()
        unknown = [kind for kind in topology if kind not in ("svgp", "sru-dgp", "sru-nn", "ff-nn")]
        if unknown:
            raise ConfigurationError(f"tipos de capa desconocidos: {unknown}", field="model.topology")
        if topology[-1] not in ("svgp", "ff-nn"):
            raise ConfigurationError("la última capa debe ser feed-forward", field="model.topology")

        d = self.data
        if require_generator:
            if not d.generator:
                raise ConfigurationError("falta el tipo de generador", field="data.generator")
            if d.generator not in GENERATOR_KINDS:
                raise ConfigurationError(f"generador desconocido: {d.generator}", field="data.generator")
        for key in ("train_utterances", "dev_utterances", "test_utterances", "frames", "input_dim", "output_dim"):
            if getattr(d, key) < 1:
                raise ConfigurationError(f"debe ser >= 1, recibido {getattr(d, key)}", field=f"data.{key}")
        if d.noise_sd < 0:
            raise ConfigurationError("debe ser >= 0", field="data.noise_sd")
        return True

    # ========================================================================
    # MÉTODOS DE RUTAS
    # ========================================================================

    def output_dir(self) -> Path:
        path = Path(self.output.dir)
        return path if path.is_absolute() else self.paths.project_root / path

    def data_dir(self) -> Path:
        path = Path(self.data.data_dir)
        return path if path.is_absolute() else self.paths.project_root / path

    def split_path(self, split: str) -> Path:
        explicit = getattr(self.data, f"{split}_path")
        if explicit:
            path = Path(explicit)
            return path if path.is_absolute() else self.paths.project_root / path
        return self.data_dir() / f"{split}.csv"

    def get_run_paths(self) -> Dict[str, Path]:
        """Retorna todas las rutas de artefactos de una corrida"""
        out = self.output_dir()
        return {
            'out_dir': out,
            'resolved_config': out / "resolved_config.yaml",
            'checkpoints_dir': out / "checkpoints",
            'final_checkpoint': out / "model.pt",
            'trace': out / "elbo_trace.csv",
            'validation': out / "validation.csv",
            'metrics': out / "metrics.txt",
            'metrics_rows': out / "metrics_utterances.csv",
            'metrics_dims': out / "metrics_dims.csv",
            'bench': out / "bench.csv",
        }

    def create_run_structure(self) -> Dict[str, Path]:
        paths = self.get_run_paths()
        paths['out_dir'].mkdir(parents=True, exist_ok=True)
        paths['checkpoints_dir'].mkdir(parents=True, exist_ok=True)
        return paths

    def to_dict(self) -> Dict[str, Any]:
        return {section: asdict(getattr(self, section)) for section in self.SECTIONS}

    def write_resolved(self, out_dir: Optional[Path] = None) -> Path:
        """Escribe la configuración resuelta y la versión antes de calcular nada"""
        out_dir = Path(out_dir) if out_dir is not None else self.output_dir()
        out_dir.mkdir(parents=True, exist_ok=True)
        target = out_dir / "resolved_config.yaml"
        payload = {"library_version": __version__, **self.to_dict()}
        with open(target, 'w', encoding='utf-8') as f:
            yaml.safe_dump(payload, f, sort_keys=False, allow_unicode=True)
        return target


def model_config_from_dict(values: Dict[str, Any]) -> ModelConfig:
    """Reconstruye ModelConfig desde un checkpoint (ignora claves desconocidas)"""
    known = {f.name for f in fields(ModelConfig)}
    return ModelConfig(**{k: v for k, v in values.items() if k in known})


# ============================================================================
# INSTANCIA GLOBAL
# ============================================================================
# Usada por los pasos de src/scripts cuando se ejecutan directamente

config = ConfigManager()
