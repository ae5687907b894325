"""Parameter-efficient adaptation modules and ablation variants."""

from macp.peft.modules import (
    ConAda,
    SSFModule,
    HoulsbyAdapter,
    conada_forward,
    conada_compress,
    conada_decompress,
    compression_factor,
    ssf_forward,
    adapter_forward,
    latent_channels,
    param_count,
)
from macp.peft.variants import (
    Variant,
    VariantSpec,
    VariantConfig,
    VARIANTS,
    build_variant,
    count_params,
    trainable_names,
    frozen_snapshot,
)

__all__ = [
    'ConAda',
    'SSFModule',
    'HoulsbyAdapter',
    'conada_forward',
    'conada_compress',
    'conada_decompress',
    'compression_factor',
    'ssf_forward',
    'adapter_forward',
    'latent_channels',
    'param_count',
    'Variant',
    'VariantSpec',
    'VariantConfig',
    'VARIANTS',
    'build_variant',
    'count_params',
    'trainable_names',
    'frozen_snapshot',
]
