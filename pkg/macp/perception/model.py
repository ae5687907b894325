"""
The detection model shared by every agent.

Encoder: voxelize, 1x1 embed, then blocks of submanifold 3x3 conv (with an
optional ConAda branch added residually) and GELU, scattered to a dense BEV
map. Prediction net: the post-fusion block, then dense 3x3 conv blocks
(optional SSF after the conv, optional Houlsby adapter after the
activation) and four 1x1 heads.
"""

import logging
from collections import OrderedDict
from dataclasses import asdict, dataclass, fields
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from macp.autodiff import Param
from macp.errors import CheckpointError, ConfigError
from macp.fusion.methods import FusionBlock, FusionMethod, fuse_maps, post_fusion_conv
from macp.fusion.warp import warp_to_ego
from macp.geom.geometry import PointCloud, Pose2D
from macp.geom.voxel import DenseGrid, SparseTensor, VoxelConfig, to_dense, voxelize
from macp.nnops import ConvKernel, dense_conv2d, gelu, pointwise_conv, residual_add, sigmoid, subm_conv
from macp.peft.modules import (
    ConAda,
    HoulsbyAdapter,
    SSFModule,
    adapter_forward,
    conada_compress,
    conada_decompress,
    conada_forward,
    latent_channels,
    ssf_forward,
)
from macp.perception.targets import HeadOutput

logger = logging.getLogger(__name__)

HEAD_CHANNELS = (("heatmap", 1), ("offset", 2), ("size", 2), ("yaw", 2))


@dataclass(frozen=True)
class EncoderConfig:
    """Encoder view of the architecture: per-block widths and whether ConAda is attached."""
    widths: Tuple[int, ...]
    blocks: int
    conada: bool

    def __post_init__(self):
        if self.blocks < 1 or len(self.widths) != self.blocks or min(self.widths) < 1:
            raise ConfigError(f"invalid encoder widths {self.widths} for {self.blocks} blocks")


@dataclass
class ModelConfig:
    """Architecture switches and widths."""
    channels: int = 32
    input_channels: int = 2
    encoder_blocks: int = 3
    head_blocks: int = 2
    conada_ratio: int = 4
    compression_factor: int = 4
    fusion_method: str = "weighted_sum"
    heatmap_bias: float = -2.19
    use_conada: bool = False
    use_ssf: bool = False
    use_adapter: bool = False
    cooperative: bool = False

    def __post_init__(self):
        if self.channels < 1 or self.input_channels < 1 or self.head_blocks < 1:
            raise ConfigError(f"model widths and block counts must be >= 1: {self}")
        if self.conada_ratio < 2:
            raise ConfigError(f"model.conada_ratio must be >= 2, got {self.conada_ratio}")
        self.encoder
        FusionMethod.parse(self.fusion_method)

    @property
    def encoder(self) -> "EncoderConfig":
        return EncoderConfig(widths=(self.channels,) * self.encoder_blocks,
                             blocks=self.encoder_blocks, conada=self.use_conada)

    @classmethod
    def from_dict(cls, data: Mapping) -> "ModelConfig":
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in known})

    def to_dict(self) -> Dict:
        return asdict(self)


def param_group(name: str) -> str:
    """
    Trainable group a parameter belongs to: pretrained, fusion, heads,
    conada, ssf or adapter.
    """
    if name.startswith(("fusion.", "channel.")):
        return "fusion"
    if name.startswith("heads."):
        return "heads"
    if ".conada." in name:
        return "conada"
    if ".ssf." in name:
        return "ssf"
    if ".adapter." in name:
        return "adapter"
    return "pretrained"


class MACPModel:
    """
    Single-agent detector with optional adaptation modules and the
    cooperative channel.

    Args:
        cfg: Architecture
        voxel: BEV grid every agent encodes into
        seed: Seed for parameter initialization
    """

    def __init__(self, cfg: ModelConfig, voxel: VoxelConfig, seed: int = 0):
        self.cfg = cfg
        self.voxel = voxel
        rng = np.random.RandomState(seed)
        c = cfg.channels
        bottleneck = max(1, c // cfg.conada_ratio)

        self.embed = ConvKernel.create("encoder.embed", 1, cfg.input_channels, c, rng)
        self.encoder_convs = [ConvKernel.create(f"encoder.block{i}.conv", 3, c, c, rng)
                              for i in range(cfg.encoder_blocks)]
        self.encoder_conada: List[Optional[ConAda]] = [
            ConAda.create(f"encoder.block{i}.conada", c, bottleneck, rng) if cfg.use_conada else None
            for i in range(cfg.encoder_blocks)
        ]
        self.channel: Optional[ConAda] = None
        if cfg.cooperative:
            latent = latent_channels(c, cfg.compression_factor)
            self.channel = ConAda.create("channel.conada", c, latent, rng, strict=False)

        method = FusionMethod.parse(cfg.fusion_method)
        self.fusion = FusionBlock.create(c, rng, concat=method is FusionMethod.CONCAT)

        self.head_convs = [ConvKernel.create(f"head_net.block{i}.conv", 3, c, c, rng)
                           for i in range(cfg.head_blocks)]
        self.ssf: List[Optional[SSFModule]] = [
            SSFModule.create(f"head_net.block{i}.ssf", c) if cfg.use_ssf else None
            for i in range(cfg.head_blocks)
        ]
        self.adapters: List[Optional[HoulsbyAdapter]] = [
            HoulsbyAdapter.create(f"head_net.block{i}.adapter", c, bottleneck, rng) if cfg.use_adapter else None
            for i in range(cfg.head_blocks)
        ]
        self.heads: Dict[str, ConvKernel] = OrderedDict(
            (name, ConvKernel.create(f"heads.{name}", 1, c, width, rng)) for name, width in HEAD_CHANNELS
        )
        self.heads["heatmap"].bias.value[:] = cfg.heatmap_bias

    # -- parameters ---------------------------------------------------------

    def params(self) -> List[Param]:
        params = self.embed.params()
        for conv, conada in zip(self.encoder_convs, self.encoder_conada):
            params += conv.params()
            if conada is not None:
                params += conada.params()
        if self.channel is not None:
            params += self.channel.params()
        params += self.fusion.params()
        for conv, ssf, adapter in zip(self.head_convs, self.ssf, self.adapters):
            params += conv.params()
            if ssf is not None:
                params += ssf.params()
            if adapter is not None:
                params += adapter.params()
        for head in self.heads.values():
            params += head.params()
        return params

    def named_params(self) -> "OrderedDict[str, Param]":
        return OrderedDict((p.name, p) for p in self.params())

    def load_state(self, state: Mapping[str, Param], strict: bool = False) -> List[str]:
        """
        Copy values (not frozen flags) from ``state`` into matching params.

        Returns the names of model params the state did not provide.

        Raises:
            CheckpointError: listing every name whose shape differs, or, when
                ``strict``, every name present on one side only
        """
        own = self.named_params()
        mismatched = [name for name, p in state.items()
                      if name in own and own[name].shape != p.shape]
        if mismatched:
            details = ", ".join(f"{n} {state[n].shape} vs {own[n].shape}" for n in mismatched)
            raise CheckpointError(f"checkpoint shapes do not match the model: {details}")
        missing = [name for name in own if name not in state]
        if strict:
            unexpected = [name for name in state if name not in own]
            if missing or unexpected:
                raise CheckpointError(f"checkpoint names differ: missing {missing}, unexpected {unexpected}")
        for name, p in state.items():
            if name in own:
                own[name].value = np.array(p.value, dtype=np.float64, copy=True)
        return missing

    def zero_grad(self) -> None:
        for p in self.params():
            p.grad = None

    # -- forward ------------------------------------------------------------

    def encode(self, cloud: PointCloud) -> DenseGrid:
        return encode_features(cloud, self, self.voxel)

    def compress(self, grid: DenseGrid) -> DenseGrid:
        return conada_compress(grid, self.channel)

    def decompress(self, latent: DenseGrid) -> DenseGrid:
        return conada_decompress(latent, self.channel)

    def fuse_and_predict(self, ego_map: DenseGrid, partner_maps: Sequence[DenseGrid]) -> HeadOutput:
        fused = fuse_maps(ego_map, partner_maps, self.cfg.fusion_method, self.fusion.reducer)
        return predict_heads(post_fusion_conv(fused, self), self)

    def forward_single(self, cloud: PointCloud) -> HeadOutput:
        return self.fuse_and_predict(self.encode(cloud), [])

    def forward_cooperative(self, ego_cloud: PointCloud, ego_pose: Pose2D,
                            partners: Sequence[Tuple[PointCloud, Pose2D]]) -> HeadOutput:
        """
        In-memory cooperative pass: partners compress in their own frame, the
        ego decompresses, warps and fuses. The latent never leaves the tape.
        """
        ego_map = self.encode(ego_cloud)
        received = []
        for cloud, pose in partners:
            latent = self.compress(self.encode(cloud))
            received.append(warp_to_ego(self.decompress(latent), pose, ego_pose, self.voxel))
        return self.fuse_and_predict(ego_map, received)


def encode_block(st: SparseTensor, conv: ConvKernel, conada: Optional[ConAda]) -> SparseTensor:
    out = subm_conv(st, conv)
    if conada is not None:
        out = residual_add(out, conada_forward(st, conada))
    return gelu(out)


def encode_features(cloud: PointCloud, model: MACPModel, cfg: VoxelConfig) -> DenseGrid:
    """Point cloud to a dense H x W x C BEV map in the sensing agent's frame."""
    st = voxelize(cloud, cfg)
    if len(st) == 0:
        logger.debug("empty cloud encodes to an all-zero map")
    st = pointwise_conv(st, model.embed)
    for conv, conada in zip(model.encoder_convs, model.encoder_conada):
        st = encode_block(st, conv, conada)
    return to_dense(st, cfg)


def predict_heads(fused: DenseGrid, model: MACPModel) -> HeadOutput:
    """Dense prediction net and the four center-based heads."""
    x = fused
    for conv, ssf, adapter in zip(model.head_convs, model.ssf, model.adapters):
        x = dense_conv2d(x, conv)
        if ssf is not None:
            x = ssf_forward(x, ssf)
        x = gelu(x)
        if adapter is not None:
            x = adapter_forward(x, adapter)
    outputs = {name: pointwise_conv(x, head).values for name, head in model.heads.items()}
    outputs["heatmap"] = sigmoid(outputs["heatmap"])
    return HeadOutput(**outputs)
