"""
Ablation variants: which adaptation modules exist and which parameter
groups train.

Every variant communicates through the channel ConAda, whose parameters sit
in the "fusion" group together with the post-fusion block.
"""

import logging
from dataclasses import dataclass, replace
from enum import Enum
from typing import Dict, FrozenSet, Iterable, Mapping, Tuple, Union

from macp.autodiff import Param
from macp.errors import ConfigError

logger = logging.getLogger(__name__)


class Variant(Enum):
    FULL = "full"
    HEAD = "head"
    ADAPTER = "adapter"
    SSF = "ssf"
    CONADA = "conada"
    MACP = "macp"

    @classmethod
    def parse(cls, value) -> "Variant":
        if isinstance(value, cls):
            return value
        try:
            return cls(value)
        except ValueError:
            names = ", ".join(v.value for v in cls)
            raise ConfigError(f"unknown variant '{value}' (expected one of {names})") from None


@dataclass(frozen=True)
class VariantSpec:
    """Architecture switches and trainable groups of one variant."""
    conada: bool
    ssf: bool
    adapter: bool
    trainable: FrozenSet[str]


ALL_GROUPS = frozenset({"pretrained", "fusion", "heads", "conada", "ssf", "adapter"})

VARIANTS: Dict[Variant, VariantSpec] = {
    Variant.FULL: VariantSpec(True, True, False, ALL_GROUPS),
    Variant.HEAD: VariantSpec(False, False, False, frozenset({"fusion", "heads"})),
    Variant.ADAPTER: VariantSpec(False, False, True, frozenset({"fusion", "heads", "adapter"})),
    Variant.SSF: VariantSpec(False, True, False, frozenset({"fusion", "heads", "ssf"})),
    Variant.CONADA: VariantSpec(True, False, False, frozenset({"fusion", "heads", "conada"})),
    Variant.MACP: VariantSpec(True, True, False, frozenset({"fusion", "heads", "conada", "ssf"})),
}


@dataclass(frozen=True)
class VariantConfig:
    variant: Variant = Variant.MACP
    bottleneck_ratio: int = 4
    compression_factor: int = 4
    fusion_method: str = "weighted_sum"

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant.parse(self.variant))
        if self.bottleneck_ratio < 2:
            raise ConfigError(f"bottleneck ratio must be >= 2, got {self.bottleneck_ratio}")
        if self.compression_factor < 1:
            raise ConfigError(f"compression factor must be >= 1, got {self.compression_factor}")

    @property
    def spec(self) -> VariantSpec:
        return VARIANTS[self.variant]


def build_variant(cfg: VariantConfig, base: Mapping[str, Param], model_cfg, voxel, seed: int = 0):
    """
    Build a cooperative model for ``cfg`` on top of pretrained parameters.

    Parameters present in ``base`` take its values; the rest (adaptation
    modules, channel, concat reducer) keep their identity-preserving
    initialization. Frozen flags follow the variant's trainable groups.

    Args:
        cfg: Variant and channel settings
        base: Pretrained parameters by name
        model_cfg: ModelConfig of the pretrained model
        voxel: VoxelConfig
        seed: Initialization seed for new modules

    Raises:
        CheckpointError: when a checkpoint shape differs from the architecture
        ConfigError: when the compression factor does not divide the channels
    """
    from macp.perception.model import MACPModel, param_group

    spec = cfg.spec
    arch = replace(
        model_cfg,
        use_conada=spec.conada,
        use_ssf=spec.ssf,
        use_adapter=spec.adapter,
        conada_ratio=cfg.bottleneck_ratio,
        compression_factor=cfg.compression_factor,
        fusion_method=cfg.fusion_method,
        cooperative=True,
    )
    if arch.channels % cfg.compression_factor:
        raise ConfigError(
            f"compression factor {cfg.compression_factor} does not divide {arch.channels} channels")
    model = MACPModel(arch, voxel, seed=seed)
    missing = model.load_state(base)
    for p in model.params():
        p.frozen = param_group(p.name) not in spec.trainable
    total, trainable = count_params(model)
    logger.info("built variant %s: %d/%d params trainable (%.1f%%), %d newly initialized",
                cfg.variant.value, trainable, total, 100.0 * trainable / max(total, 1), len(missing))
    return model


def count_params(model: Union[Iterable[Param], object]) -> Tuple[int, int]:
    """(total, trainable) element counts."""
    params = model.params() if hasattr(model, "params") else list(model)
    total = sum(p.size for p in params)
    trainable = sum(p.size for p in params if not p.frozen)
    return int(total), int(trainable)


def trainable_names(model) -> FrozenSet[str]:
    return frozenset(p.name for p in model.params() if not p.frozen)


def frozen_snapshot(model) -> Dict[str, bytes]:
    """Raw bytes of every frozen parameter, for bitwise comparisons."""
    return {p.name: p.value.tobytes() for p in model.params() if p.frozen}
