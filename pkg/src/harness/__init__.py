"""Tareas sintéticas, E/S de datasets y oráculos de verificación"""
from .tasks import Dataset, SequenceBatch, TASK_KINDS, SPLITS, gen_task, gen_splits, lagged_copy_floor, task_weights
from .dataset_io import save_dataset, load_dataset
from .oracles import (
    ExactGpResult,
    analytic_posterior,
    exact_gp_oracle,
    finite_difference_gradient,
    monte_carlo_kl,
    sample_covariance,
    set_collapse_point,
)

__all__ = [
    'Dataset', 'SequenceBatch', 'TASK_KINDS', 'SPLITS', 'gen_task', 'gen_splits',
    'lagged_copy_floor', 'task_weights', 'save_dataset', 'load_dataset',
    'ExactGpResult', 'analytic_posterior', 'exact_gp_oracle', 'finite_difference_gradient',
    'monte_carlo_kl', 'sample_covariance', 'set_collapse_point',
]
