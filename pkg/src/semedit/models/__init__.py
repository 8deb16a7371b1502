from .discriminator import (
    DiscConfig,
    DiscOutput,
    PatchDiscriminator,
    PatchStream,
    SemCache,
    TwoStreamDiscriminator,
    sum_global_pool,
)
from .generator import (
    GENERATOR_SCHEDULE,
    Generator,
    ResBlock,
    Row,
    SpadeNorm,
    SpadeResBlock,
    composite,
    generate_edit,
)

__all__ = [
    "DiscConfig",
    "DiscOutput",
    "GENERATOR_SCHEDULE",
    "Generator",
    "PatchDiscriminator",
    "PatchStream",
    "ResBlock",
    "Row",
    "SemCache",
    "SpadeNorm",
    "SpadeResBlock",
    "TwoStreamDiscriminator",
    "composite",
    "generate_edit",
    "sum_global_pool",
]
