"""Ensamblado del modelo, ELBO, gradientes, Adam y bucle de entrenamiento"""
from .model import DeepGpModel, build_model, layer_widths
from .elbo import ElboBreakdown, elbo, elbo_frame, elbo_utterance, expected_log_likelihood
from .optimizer import AdamHyper, AdamState, GradientTape, adam_step, grad, trainable_parameters
from .checkpoint import Checkpoint, load_checkpoint, restore_model, save_checkpoint
from .trainer import FitResult, fit, generate, utterance_order

__all__ = [
    'DeepGpModel', 'build_model', 'layer_widths',
    'ElboBreakdown', 'elbo', 'elbo_frame', 'elbo_utterance', 'expected_log_likelihood',
    'AdamHyper', 'AdamState', 'GradientTape', 'adam_step', 'grad', 'trainable_parameters',
    'Checkpoint', 'load_checkpoint', 'restore_model', 'save_checkpoint',
    'FitResult', 'fit', 'generate', 'utterance_order',
]
