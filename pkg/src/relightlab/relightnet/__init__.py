from .arch import (
    ModulatedResBlock,
    PatchDiscriminator,
    RelightModel,
    Translator,
    TranslatorConfig,
    TranslatorError,
)
from .losses import (
    LossError,
    d_step_loss,
    feature_matching_loss,
    g_gan_loss,
    gan_loss,
    gan_value,
    total_loss,
)
from .train import TrainError, train_translator

__all__ = [
    "ModulatedResBlock",
    "PatchDiscriminator",
    "RelightModel",
    "Translator",
    "TranslatorConfig",
    "TranslatorError",
    "LossError",
    "d_step_loss",
    "feature_matching_loss",
    "g_gan_loss",
    "gan_loss",
    "gan_value",
    "total_loss",
    "TrainError",
    "train_translator",
]
