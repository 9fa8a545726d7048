"""synthvid: deterministic procedural video datasets, statistics, streaming."""

__version__ = "0.1.0"

from .config import (
    Background,
    ConfigError,
    GeneratorConfig,
    Level,
    MixtureComponent,
    TextureSource,
    config_hash,
    load_config,
    validate_config,
)
from .rng import RngStream, derive_video_seed
from .video import VideoTensor

__all__ = [
    "Background",
    "ConfigError",
    "GeneratorConfig",
    "Level",
    "MixtureComponent",
    "TextureSource",
    "RngStream",
    "VideoTensor",
    "config_hash",
    "derive_video_seed",
    "load_config",
    "validate_config",
    "__version__",
]
