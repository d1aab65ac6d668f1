#!/usr/bin/env python3
"""
Formato de archivo de dataset: texto delimitado autodescriptivo.

    # srudgp-dataset v1
    # split=train
    # input_dim=2
    # output_dim=1
    # utterances=64
    # frames=3200
    # generator=lagged-copy
    # ...
    utterance_id,t,x0,x1,y0
    train-0000,0,0.12345678901234567,...

Los flotantes se escriben con 17 dígitos significativos (ida y vuelta exacta
en 64 bits).
"""

from pathlib import Path
from typing import Dict, List, Tuple

import numpy as np
import pandas as pd
import torch
import yaml

from src.gp import DTYPE
from src.harness.tasks import Dataset, SequenceBatch
from src.utils import get_project_logger
from src.utils.errors import ConfigurationError, DatasetParseError, InputError

logger = get_project_logger(__name__)

MAGIC = "# srudgp-dataset v1"
FLOAT_FORMAT = "%.17g"
REQUIRED_HEADER = ("split", "input_dim", "output_dim", "utterances", "frames")


def _columns(input_dim: int, output_dim: int) -> List[str]:
    return ["utterance_id", "t"] + [f"x{i}" for i in range(input_dim)] + [f"y{i}" for i in range(output_dim)]


def dataset_to_frame(dataset: Dataset) -> pd.DataFrame:
    frames = []
    for utt in dataset.utterances:
        n = utt.n_frames
        block = pd.DataFrame(
            np.hstack([utt.inputs.numpy(), utt.targets.numpy()]),
            columns=_columns(dataset.input_dim, dataset.output_dim)[2:],
        )
        block.insert(0, "t", np.arange(n))
        block.insert(0, "utterance_id", utt.utterance_id)
        frames.append(block)
    return pd.concat(frames, ignore_index=True)


def save_dataset(dataset: Dataset, path: Path) -> Path:
    if not dataset.utterances:
        raise ConfigurationError("no se puede guardar un dataset sin enunciados", field="utterances")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    header = {
        "split": dataset.split,
        "input_dim": dataset.input_dim,
        "output_dim": dataset.output_dim,
        "utterances": len(dataset.utterances),
        "frames": dataset.n_frames,
    }
    header.update({k: v for k, v in dataset.provenance.items() if k not in header})

    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(MAGIC + "\n")
        for key, value in header.items():
            f.write(f"# {key}={value}\n")
        dataset_to_frame(dataset).to_csv(f, index=False, float_format=FLOAT_FORMAT)
    logger.debug(f"Dataset {dataset.split} guardado en {path} ({dataset.n_frames} tramas)")
    return path


def _read_header(path: Path) -> Tuple[Dict[str, object], int]:
    header: Dict[str, object] = {}
    n_lines = 0
    with open(path, "r", encoding="utf-8") as f:
        first = f.readline().rstrip("\n")
        n_lines = 1
        if first != MAGIC:
            raise DatasetParseError(f"{path.name}: cabecera desconocida {first[:40]!r}", line=1)
        for line in f:
            if not line.startswith("#"):
                break
            n_lines += 1
            body = line[1:].strip()
            if "=" not in body:
                raise DatasetParseError(f"{path.name}: línea de cabecera sin '='", line=n_lines)
            key, raw = body.split("=", 1)
            header[key.strip()] = yaml.safe_load(raw.strip())
    for key in REQUIRED_HEADER:
        if key not in header:
            raise DatasetParseError(f"{path.name}: falta '{key}' en la cabecera", line=n_lines)
    return header, n_lines


def load_dataset(path: Path) -> Dataset:
    """Lee un dataset completo o lanza DatasetParseError; nunca devuelve datos parciales"""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"No existe el dataset: {path}")
    header, header_lines = _read_header(path)
    # save_dataset termina siempre en salto de línea
    raw = path.read_bytes()
    if not raw.endswith(b"\n"):
        raise DatasetParseError(f"{path.name}: la última fila no termina en salto de línea (archivo truncado)",
                                line=raw.count(b"\n") + 1)
    input_dim, output_dim = int(header["input_dim"]), int(header["output_dim"])
    columns = _columns(input_dim, output_dim)

    try:
        df = pd.read_csv(path, skiprows=header_lines, dtype={"utterance_id": str}, float_precision="round_trip")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, ValueError) as e:
        raise DatasetParseError(f"{path.name}: {e}", line=header_lines + 1) from e

    if list(df.columns) != columns:
        raise DatasetParseError(f"{path.name}: columnas {list(df.columns)} != {columns}", line=header_lines + 1)

    first_data_line = header_lines + 2
    incomplete = df.isna().any(axis=1).to_numpy()
    if incomplete.any():
        row = int(np.argmax(incomplete))
        raise DatasetParseError(f"{path.name}: fila incompleta", line=first_data_line + row)
    if len(df) != int(header["frames"]):
        raise DatasetParseError(
            f"{path.name}: {len(df)} tramas leídas, la cabecera declara {header['frames']} (archivo truncado)",
            line=first_data_line + len(df),
        )

    values = df[columns[2:]].to_numpy(dtype=np.float64)
    steps = df["t"].to_numpy()
    utterances = []
    for utt_id, index in df.groupby("utterance_id", sort=False).indices.items():
        expected = np.arange(len(index))
        if not np.array_equal(steps[index], expected):
            raise DatasetParseError(f"{path.name}: índices t no consecutivos en {utt_id}",
                                    line=first_data_line + int(index[0]))
        block = torch.from_numpy(np.ascontiguousarray(values[index])).to(DTYPE)
        utterances.append(SequenceBatch(utt_id, block[:, :input_dim], block[:, input_dim:]))

    if len(utterances) != int(header["utterances"]):
        raise DatasetParseError(
            f"{path.name}: {len(utterances)} enunciados, la cabecera declara {header['utterances']}",
            line=first_data_line + len(df),
        )

    provenance = {k: v for k, v in header.items() if k not in REQUIRED_HEADER}
    try:
        return Dataset(utterances, input_dim, output_dim, split=str(header["split"]), provenance=provenance)
    except (InputError, ConfigurationError) as e:
        raise DatasetParseError(f"{path.name}: {e}", line=header_lines) from e
