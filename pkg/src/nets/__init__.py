"""Generator and discriminator networks."""

from src.nets.discriminator import DiscriminatorParams, discriminator_forward
from src.nets.generator import GeneratorParams, generator_forward
from src.nets.params import ParameterSet

__all__ = [
    "DiscriminatorParams",
    "GeneratorParams",
    "ParameterSet",
    "discriminator_forward",
    "generator_forward",
]
