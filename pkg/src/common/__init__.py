# Common utilities
from .config import Config, RunConfig
from .errors import (
    PluError, ConfigError, ProtocolError, DataError, DatasetParseError,
    SchemaError, InvalidInputError, ShapeError, NumericalError,
)
from .logger import setup_logger
from .rng import derive_seed, as_generator

__all__ = [
    'Config', 'RunConfig', 'setup_logger',
    'PluError', 'ConfigError', 'ProtocolError', 'DataError', 'DatasetParseError',
    'SchemaError', 'InvalidInputError', 'ShapeError', 'NumericalError',
    'derive_seed', 'as_generator',
]
