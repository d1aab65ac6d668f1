#!/usr/bin/env python3
"""
Oráculos independientes para las pruebas: GP exacto denso, diferencias
finitas centrales, KL por Monte Carlo y covarianza muestral con errores estándar.
"""

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import torch
from torch.distributions import MultivariateNormal

from src.gp import DTYPE, Kernel, SvgpLayer, as_tensor, cholesky_jittered, gram, gram_diag
from src.utils.errors import InputError

MAX_EXACT_POINTS = 200
ORACLE_JITTER_SCHEDULE = (0.0, 1e-10, 1e-8, 1e-6)


@dataclass
class ExactGpResult:
    log_marginal: float
    mean: Optional[torch.Tensor] = None
    variance: Optional[torch.Tensor] = None


@torch.no_grad()
def exact_gp_oracle(
    X,
    y,
    kernel: Kernel,
    noise_variance: float,
    X_query=None,
    jitter_schedule: Sequence[float] = ORACLE_JITTER_SCHEDULE,
) -> ExactGpResult:
    """log p(y) = −½yᵀ(K+σ²I)⁻¹y − ½log|K+σ²I| − (n/2)log 2π y posterior en X_query"""
    X = as_tensor(X)
    y = as_tensor(y).reshape(-1, 1)
    n = X.shape[0]
    if n > MAX_EXACT_POINTS:
        raise InputError(f"El oráculo exacto admite como máximo {MAX_EXACT_POINTS} puntos, recibidos {n}")
    if y.shape[0] != n:
        raise InputError(f"{n} entradas y {y.shape[0]} objetivos")

    system = gram(kernel, X, X) + float(noise_variance) * torch.eye(n, dtype=DTYPE)
    lower = cholesky_jittered(system, jitter_schedule, layer="exact-gp").lower
    alpha = torch.cholesky_solve(y, lower)
    log_marginal = (
        -0.5 * (y * alpha).sum()
        - torch.log(torch.diagonal(lower)).sum()
        - 0.5 * n * math.log(2.0 * math.pi)
    )
    result = ExactGpResult(log_marginal=float(log_marginal))
    if X_query is not None:
        Xq = as_tensor(X_query)
        k_xq = gram(kernel, X, Xq)
        result.mean = (k_xq.T @ alpha).reshape(-1)
        v = torch.linalg.solve_triangular(lower, k_xq, upper=False)
        result.variance = gram_diag(kernel, Xq) - v.pow(2).sum(dim=0)
    return result


@torch.no_grad()
def analytic_posterior(kernel: Kernel, X, Y, noise_variance: float) -> Tuple[torch.Tensor, torch.Tensor]:
    """Posterior exacta de f(X): media K(K+σ²I)⁻¹Y (n×D) y covarianza K − K(K+σ²I)⁻¹K"""
    X = as_tensor(X)
    Y = as_tensor(Y)
    if Y.dim() == 1:
        Y = Y.unsqueeze(1)
    K = gram(kernel, X, X)
    system = K + float(noise_variance) * torch.eye(X.shape[0], dtype=DTYPE)
    solved = torch.linalg.solve(system, torch.cat([Y, K], dim=1))
    mean = K @ solved[:, :Y.shape[1]]
    cov = K - K @ solved[:, Y.shape[1]:]
    return mean, 0.5 * (cov + cov.T)


@torch.no_grad()
def set_collapse_point(layer: SvgpLayer, X, Y, noise_variance: float) -> None:
    """Z = X y q(u) igual a la posterior exacta: la cota variacional es ajustada"""
    X = as_tensor(X)
    if X.shape[0] != layer.num_inducing:
        raise InputError(f"Se necesitan {layer.num_inducing} puntos para colapsar {layer.name}, recibidos {X.shape[0]}")
    layer.inducing_inputs.copy_(X)
    mean, cov = analytic_posterior(layer.kernel, X, Y, noise_variance)
    layer.set_variational(mean.T, cov)


@torch.no_grad()
def finite_difference_gradient(
    objective: Callable[[], torch.Tensor],
    parameter: torch.nn.Parameter,
    step: float = 1e-5,
) -> torch.Tensor:
    """Diferencias centrales (f(θ+h) − f(θ−h)) / 2h elemento a elemento"""
    flat = parameter.data.view(-1)
    derivative = torch.zeros_like(flat)
    for i in range(flat.numel()):
        original = flat[i].item()
        flat[i] = original + step
        upper = float(objective())
        flat[i] = original - step
        lower = float(objective())
        flat[i] = original
        derivative[i] = (upper - lower) / (2.0 * step)
    return derivative.view_as(parameter)


@torch.no_grad()
def monte_carlo_kl(
    q_mean,
    q_cov,
    prior_cov,
    n_samples: int = 1_000_000,
    generator: Optional[torch.Generator] = None,
    chunk: int = 100_000,
) -> Tuple[float, float]:
    """KL(q‖p) ≈ E_q[log q(u) − log p(u)]; devuelve (estimación, error estándar)"""
    q = MultivariateNormal(as_tensor(q_mean), covariance_matrix=as_tensor(q_cov))
    p = MultivariateNormal(torch.zeros_like(as_tensor(q_mean)), covariance_matrix=as_tensor(prior_cov))
    lower = q.scale_tril
    total, total_sq, done = 0.0, 0.0, 0
    while done < n_samples:
        size = min(chunk, n_samples - done)
        eps = torch.randn(size, lower.shape[0], dtype=DTYPE, generator=generator)
        u = q.mean + eps @ lower.T
        ratio = q.log_prob(u) - p.log_prob(u)
        total += float(ratio.sum())
        total_sq += float(ratio.pow(2).sum())
        done += size
    mean = total / n_samples
    variance = max(total_sq / n_samples - mean * mean, 0.0)
    return mean, math.sqrt(variance / n_samples)


@torch.no_grad()
def sample_covariance(samples) -> Tuple[torch.Tensor, torch.Tensor]:
    """Covarianza muestral (n × T → T × T) y error estándar de cada entrada"""
    samples = as_tensor(samples)
    n = samples.shape[0]
    centered = samples - samples.mean(dim=0)
    products = centered.unsqueeze(2) * centered.unsqueeze(1)
    cov = products.sum(dim=0) / (n - 1)
    stderr = products.std(dim=0) / math.sqrt(n)
    return cov, stderr
