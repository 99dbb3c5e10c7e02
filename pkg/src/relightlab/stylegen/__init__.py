from .arch import (
    ArchConfig,
    GeneratorError,
    LatentCode,
    MaskedStyle,
    StyleGenerator,
    StyleVector,
    override_channel,
)
from .train import GanTrainConfig, DivergenceError, train_generator

__all__ = [
    "ArchConfig",
    "GeneratorError",
    "LatentCode",
    "MaskedStyle",
    "StyleGenerator",
    "StyleVector",
    "override_channel",
    "GanTrainConfig",
    "DivergenceError",
    "train_generator",
]
