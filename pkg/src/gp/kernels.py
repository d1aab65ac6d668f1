#!/usr/bin/env python3
"""
Núcleo numérico: kernels, matrices de Gram, Cholesky con jitter y
expansión en características aleatorias.

Todo se calcula en float64; el resto de módulos llama a estas funciones.
"""

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import torch
from torch import nn

from src.utils import get_project_logger
from src.utils.errors import ContractError, DomainError, InputError, SingularityError

logger = get_project_logger(__name__)

DTYPE = torch.float64
KERNEL_KINDS = ("arccos1", "linear", "rbf")
DEFAULT_JITTER_SCHEDULE = (1e-6, 1e-5, 1e-4)
SYMMETRY_TOLERANCE = 1e-8


def as_tensor(value) -> torch.Tensor:
    """Convierte a tensor float64 sin copiar si ya lo es"""
    if isinstance(value, torch.Tensor):
        return value if value.dtype == DTYPE else value.to(DTYPE)
    return torch.as_tensor(value, dtype=DTYPE)


def softplus(raw: torch.Tensor) -> torch.Tensor:
    return torch.nn.functional.softplus(raw)


def inverse_softplus(value) -> torch.Tensor:
    """Inversa exacta de softplus para inicializar parámetros positivos"""
    value = as_tensor(value)
    if torch.any(value <= 0):
        raise DomainError("inverse_softplus requiere valores positivos")
    return value + torch.log(-torch.expm1(-value))


class _ArcCosineJ(torch.autograd.Function):
    """J(θ) = sin θ + (π − θ) cos θ como función de cos θ.

    dJ/d(cos θ) = π − θ es finita en θ = 0 y θ = π; la composición
    acos + sqrt de autograd daría inf − inf en esos extremos.
    """

    @staticmethod
    def forward(ctx, cosine):
        c = cosine.clamp(-1.0, 1.0)
        theta = torch.arccos(c)
        ctx.save_for_backward(theta)
        return torch.sqrt(torch.clamp(1.0 - c * c, min=0.0)) + (math.pi - theta) * c

    @staticmethod
    def backward(ctx, grad_output):
        (theta,) = ctx.saved_tensors
        return grad_output * (math.pi - theta)


class Kernel(nn.Module):
    """Kernel de covarianza con hiperparámetros positivos vía softplus.

    kind:
        arccos1  -> scale · J(θ)/π, θ ángulo entre [x, b] y [y, b]
        linear   -> scale · xᵀy
        rbf      -> scale · exp(−‖x − y‖² / (2ℓ²))

    ``bias`` (b ≥ 0, fijo) solo afecta a arccos1; con b = 0 el kernel depende
    únicamente del ángulo entre x e y.
    """

    def __init__(
        self,
        kind: str = "arccos1",
        scale: float = 1.0,
        lengthscale: float = 1.0,
        bias: float = 0.0,
        trainable: bool = True,
    ):
        super().__init__()
        if kind not in KERNEL_KINDS:
            raise InputError(f"Kernel no soportado: {kind} (disponibles: {', '.join(KERNEL_KINDS)})")
        if bias < 0:
            raise DomainError(f"bias del kernel debe ser >= 0, recibido {bias}")
        self.kind = kind
        self.bias = float(bias)

        raw_scale = inverse_softplus(scale).reshape(())
        if trainable:
            self.raw_scale = nn.Parameter(raw_scale)
        else:
            self.register_buffer("raw_scale", raw_scale)

        if kind == "rbf":
            raw_lengthscale = inverse_softplus(lengthscale).reshape(())
            if trainable:
                self.raw_lengthscale = nn.Parameter(raw_lengthscale)
            else:
                self.register_buffer("raw_lengthscale", raw_lengthscale)

    @property
    def scale(self) -> torch.Tensor:
        return softplus(self.raw_scale)

    @property
    def lengthscale(self) -> torch.Tensor:
        if self.kind != "rbf":
            raise ContractError(f"El kernel {self.kind} no tiene lengthscale")
        return softplus(self.raw_lengthscale)

    def feature_input_dim(self, input_dim: int) -> int:
        """Ancho de la proyección aleatoria para entradas de ancho ``input_dim``"""
        if self.kind == "arccos1" and self.bias > 0:
            return input_dim + 1
        return input_dim

    def augment(self, X: torch.Tensor) -> torch.Tensor:
        if self.kind == "arccos1" and self.bias > 0:
            column = torch.full((X.shape[0], 1), self.bias, dtype=X.dtype)
            return torch.cat([X, column], dim=1)
        return X

    def extra_repr(self) -> str:
        return f"kind={self.kind}, bias={self.bias}"


def _unit_rows(X: torch.Tensor, what: str) -> torch.Tensor:
    norms = torch.linalg.vector_norm(X, dim=1)
    if torch.any(norms == 0):
        raise DomainError(f"Vector cero en {what}: el kernel arccos1 no está definido")
    return X / norms.unsqueeze(1)


def _check_matrix(M: torch.Tensor, name: str) -> torch.Tensor:
    M = as_tensor(M)
    if M.dim() != 2:
        raise InputError(f"{name} debe ser una matriz, forma recibida {tuple(M.shape)}")
    return M


def gram(kernel: Kernel, A, B) -> torch.Tensor:
    """Matriz de Gram n×m con entrada (i, j) = k(A_i, B_j)"""
    A = _check_matrix(A, "A")
    B = _check_matrix(B, "B")
    if A.shape[1] != B.shape[1]:
        raise InputError(f"Dimensiones incompatibles: A tiene {A.shape[1]} columnas, B tiene {B.shape[1]}")

    if kernel.kind == "arccos1":
        unit_a = _unit_rows(kernel.augment(A), "A")
        unit_b = _unit_rows(kernel.augment(B), "B")
        cosine = unit_a @ unit_b.T
        return kernel.scale * _ArcCosineJ.apply(cosine) / math.pi

    if kernel.kind == "linear":
        return kernel.scale * (A @ B.T)

    diff = A.unsqueeze(1) - B.unsqueeze(0)
    sq_dist = diff.pow(2).sum(dim=-1)
    return kernel.scale * torch.exp(-0.5 * sq_dist / kernel.lengthscale.pow(2))


def gram_diag(kernel: Kernel, A) -> torch.Tensor:
    """Diagonal de gram(kernel, A, A) sin construir la matriz completa"""
    A = _check_matrix(A, "A")
    if kernel.kind == "arccos1":
        _unit_rows(kernel.augment(A), "A")
        return kernel.scale * torch.ones(A.shape[0], dtype=DTYPE)
    if kernel.kind == "linear":
        return kernel.scale * A.pow(2).sum(dim=1)
    return kernel.scale * torch.ones(A.shape[0], dtype=DTYPE)


def kernel_eval(kernel: Kernel, x, y) -> torch.Tensor:
    """k(x, y) para dos vectores"""
    x = as_tensor(x)
    y = as_tensor(y)
    if x.dim() != 1 or y.dim() != 1 or x.shape[0] != y.shape[0]:
        raise InputError(f"Vectores de dimensión incompatible: {tuple(x.shape)} vs {tuple(y.shape)}")
    return gram(kernel, x.unsqueeze(0), y.unsqueeze(0))[0, 0]


@dataclass
class CholFactor:
    """Factor triangular inferior L con L·Lᵀ = M + jitter·I"""
    lower: torch.Tensor
    jitter: float


def cholesky_jittered(
    M,
    jitter_schedule: Sequence[float] = DEFAULT_JITTER_SCHEDULE,
    layer: Optional[str] = None,
) -> CholFactor:
    """Primera factorización exitosa recorriendo el esquema de jitter"""
    M = _check_matrix(M, "M")
    if M.shape[0] != M.shape[1]:
        raise InputError(f"Cholesky requiere matriz cuadrada, forma {tuple(M.shape)}")
    if not jitter_schedule:
        raise ContractError("El esquema de jitter está vacío")

    with torch.no_grad():
        asymmetry = (M - M.T).abs().max().item() if M.numel() else 0.0
        magnitude = max(1.0, M.abs().max().item()) if M.numel() else 1.0
    if asymmetry > SYMMETRY_TOLERANCE * magnitude:
        raise InputError(f"Matriz no simétrica (asimetría máxima {asymmetry:.3e})")

    eye = torch.eye(M.shape[0], dtype=DTYPE)
    for jitter in jitter_schedule:
        lower, info = torch.linalg.cholesky_ex(M + jitter * eye)
        if int(info) == 0 and bool(torch.all(torch.diagonal(lower) > 0)):
            if jitter > jitter_schedule[0]:
                logger.debug(f"Cholesky{' en ' + layer if layer else ''} requirió jitter {jitter:g}")
            return CholFactor(lower=lower, jitter=float(jitter))

    raise SingularityError("Cholesky falló para todo el esquema de jitter", jitter=max(jitter_schedule), layer=layer)


class RandomFeatureMap(nn.Module):
    """Proyección aleatoria W (M_feat × D) congelada en la construcción.

    Se guarda como buffer para que viaje en los checkpoints.
    """

    def __init__(self, kind: str, projection: torch.Tensor, offset: Optional[torch.Tensor] = None):
        super().__init__()
        if kind not in KERNEL_KINDS:
            raise InputError(f"Kernel no soportado: {kind}")
        self.kind = kind
        self.register_buffer("projection", as_tensor(projection))
        if offset is None:
            offset = torch.zeros(self.projection.shape[0], dtype=DTYPE)
        self.register_buffer("offset", as_tensor(offset))

    @classmethod
    def draw(cls, kind: str, n_features: int, input_dim: int, generator: Optional[torch.Generator] = None):
        if n_features < 1 or input_dim < 1:
            raise InputError(f"Tamaños inválidos: n_features={n_features}, input_dim={input_dim}")
        projection = torch.randn(n_features, input_dim, dtype=DTYPE, generator=generator)
        offset = None
        if kind == "rbf":
            offset = 2.0 * math.pi * torch.rand(n_features, dtype=DTYPE, generator=generator)
        return cls(kind, projection, offset)

    @property
    def n_features(self) -> int:
        return self.projection.shape[0]

    @property
    def input_dim(self) -> int:
        return self.projection.shape[1]


def random_features(fmap: RandomFeatureMap, X) -> torch.Tensor:
    """Φ(X) tal que Φ·Φᵀ estima el Gram del kernel sin normalizar.

    arccos1: √(2/M)·max(0, W x)  (kernel ‖x‖‖y‖J(θ)/π)
    rbf:     √(2/M)·cos(W x + b)  (exp(−‖x − y‖²/2))
    linear:  x (exacto)
    """
    X = _check_matrix(X, "X")
    if X.shape[1] != fmap.input_dim:
        raise InputError(f"X tiene {X.shape[1]} columnas, la proyección espera {fmap.input_dim}")
    if fmap.kind == "linear":
        return X
    factor = math.sqrt(2.0 / fmap.n_features)
    projected = X @ fmap.projection.T
    if fmap.kind == "arccos1":
        return factor * torch.relu(projected)
    return factor * torch.cos(projected + fmap.offset)


def kernel_features(kernel: Kernel, fmap: RandomFeatureMap, X) -> torch.Tensor:
    """Características cuyo producto interno aproxima ``gram(kernel, ·, ·)``"""
    X = _check_matrix(X, "X")
    root_scale = torch.sqrt(kernel.scale)
    if kernel.kind == "linear":
        return root_scale * X
    if kernel.kind == "rbf":
        return root_scale * random_features(fmap, X / kernel.lengthscale)
    unit = _unit_rows(kernel.augment(X), "X")
    return root_scale * random_features(fmap, unit)
