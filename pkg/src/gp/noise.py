#!/usr/bin/env python3
"""
Fuentes de ruido estándar para el truco de reparametrización.

Cada extracción queda registrada para poder repetir la misma evaluación del
ELBO (diferencias finitas, comparación de modos).
"""

from typing import List, Optional, Sequence

import torch

from src.gp.kernels import DTYPE
from src.utils.errors import ContractError


class NoiseSource:
    """Ruido N(0, 1) sembrado; registra cada tensor entregado"""

    def __init__(self, seed: Optional[int] = None, generator: Optional[torch.Generator] = None):
        if generator is None:
            generator = torch.Generator()
            if seed is not None:
                generator.manual_seed(int(seed))
        self.generator = generator
        self.recorded: List[torch.Tensor] = []

    def standard_normal(self, shape: Sequence[int]) -> torch.Tensor:
        draw = torch.randn(*shape, dtype=DTYPE, generator=self.generator)
        self.recorded.append(draw)
        return draw

    def replay(self) -> "ReplayNoise":
        """Nueva fuente que devuelve exactamente las extracciones registradas"""
        return ReplayNoise(self.recorded)


class ReplayNoise(NoiseSource):

    def __init__(self, draws: Sequence[torch.Tensor]):
        super().__init__(seed=0)
        self._draws = list(draws)
        self._position = 0

    def standard_normal(self, shape: Sequence[int]) -> torch.Tensor:
        if self._position >= len(self._draws):
            raise ContractError("ReplayNoise agotado: la evaluación pidió más ruido del registrado")
        draw = self._draws[self._position]
        if tuple(draw.shape) != tuple(shape):
            raise ContractError(f"Forma de ruido distinta al registro: {tuple(shape)} vs {tuple(draw.shape)}")
        self._position += 1
        self.recorded.append(draw)
        return draw


class ZeroNoise(NoiseSource):
    """Ruido idénticamente cero: el muestreo devuelve la media exacta"""

    def standard_normal(self, shape: Sequence[int]) -> torch.Tensor:
        draw = torch.zeros(*shape, dtype=DTYPE)
        self.recorded.append(draw)
        return draw


def iteration_noise(seed: int, iteration: int) -> NoiseSource:
    """Ruido de una iteración de entrenamiento, función solo de (seed, iteration)"""
    return NoiseSource(seed=int(seed) * 1_000_003 + int(iteration))
