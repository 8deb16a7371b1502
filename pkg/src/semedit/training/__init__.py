from .checkpoint import load_checkpoint, save_checkpoint
from .config import TrainConfig
from .loop import (
    TrainState,
    discriminator_phase,
    generator_phase,
    init_state,
    lr_at,
    restore_state,
    sample_batch,
    save_state,
    train_loop,
    train_step,
)

__all__ = [
    "TrainConfig",
    "TrainState",
    "discriminator_phase",
    "generator_phase",
    "init_state",
    "load_checkpoint",
    "lr_at",
    "restore_state",
    "sample_batch",
    "save_checkpoint",
    "save_state",
    "train_loop",
    "train_step",
]
