"""Utilities for the project"""
from .logger import setup_logger, get_project_logger, get_default_log_file
from .errors import (
    SruDgpError,
    InputError,
    DomainError,
    ContractError,
    ConfigurationError,
    SingularityError,
    NumericalError,
    DatasetParseError,
    CheckpointError,
    TrainingAbortedError,
)

__all__ = [
    'setup_logger',
    'get_project_logger',
    'get_default_log_file',
    'SruDgpError',
    'InputError',
    'DomainError',
    'ContractError',
    'ConfigurationError',
    'SingularityError',
    'NumericalError',
    'DatasetParseError',
    'CheckpointError',
    'TrainingAbortedError',
]
