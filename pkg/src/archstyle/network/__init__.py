from .layers import adain
from .models import (
    ContentEncoder,
    DomainMapper,
    Generator,
    MultiScaleDiscriminator,
    NetConfig,
    StyleEncoder,
)
from .translator import (
    TranslatorBundle,
    TrainStepReport,
    interpolate_style,
    load_bundle,
    sample_style,
    save_bundle,
)
from .checkpoint import load_checkpoint, save_checkpoint

__all__ = [
    "ContentEncoder",
    "DomainMapper",
    "Generator",
    "MultiScaleDiscriminator",
    "NetConfig",
    "StyleEncoder",
    "TranslatorBundle",
    "TrainStepReport",
    "adain",
    "interpolate_style",
    "load_bundle",
    "load_checkpoint",
    "sample_style",
    "save_bundle",
    "save_checkpoint",
]
