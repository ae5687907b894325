"""
Adaptation modules: ConAda, SSF and a Houlsby-style adapter.

ConAda's down convolution plus activation is also the compression stage of
the V2V channel; its up convolution is the receiver's decompression stage.
"""

from dataclasses import dataclass
from fractions import Fraction
from typing import List

import numpy as np

from macp.autodiff import Param
from macp.errors import ContractError
from macp.nnops import ConvKernel, gelu, pointwise_conv, residual_add, scale_shift
from macp.nnops.containers import Features


@dataclass
class ConAda:
    """
    1x1 down convolution (C -> D'), GELU, 1x1 up convolution (D' -> C).

    Args:
        k_down: Down-projection kernel
        k_up: Up-projection kernel
        strict: Require D' < C. The channel module may run uncompressed
            (D' == C) for factor-1 sweeps.
    """
    k_down: ConvKernel
    k_up: ConvKernel
    strict: bool = True

    def __post_init__(self):
        if self.k_down.k != 1 or self.k_up.k != 1:
            raise ContractError("ConAda kernels must be 1x1")
        c, d = self.k_down.in_channels, self.k_down.out_channels
        if self.k_up.in_channels != d or self.k_up.out_channels != c:
            raise ContractError(f"ConAda up kernel must map {d} -> {c} channels")
        if d > c or (self.strict and d == c):
            raise ContractError(f"ConAda bottleneck {d} must be smaller than {c} channels")

    @classmethod
    def create(cls, name: str, channels: int, bottleneck: int,
               rng: np.random.RandomState, strict: bool = True) -> "ConAda":
        """Down kernel uniform in +-1/sqrt(C); up kernel and both biases zero."""
        if bottleneck < 1:
            raise ContractError(f"ConAda bottleneck must be >= 1, got {bottleneck}")
        bound = 1.0 / np.sqrt(channels)
        down = ConvKernel(
            Param(f"{name}.down.weight", rng.uniform(-bound, bound, size=(1, 1, channels, bottleneck))),
            Param(f"{name}.down.bias", np.zeros(bottleneck)),
        )
        up = ConvKernel.create(f"{name}.up", 1, bottleneck, channels, rng, zero=True)
        return cls(down, up, strict=strict)

    @property
    def channels(self) -> int:
        return self.k_down.in_channels

    @property
    def bottleneck(self) -> int:
        return self.k_down.out_channels

    def params(self) -> List[Param]:
        return self.k_down.params() + self.k_up.params()


def conada_compress(x: Features, m: ConAda) -> Features:
    return gelu(pointwise_conv(x, m.k_down))


def conada_decompress(latent: Features, m: ConAda) -> Features:
    return pointwise_conv(latent, m.k_up)


def conada_forward(x: Features, m: ConAda) -> Features:
    """Conv(GELU(Conv(x, K_down)), K_up); same container kind and sites as x."""
    return conada_decompress(conada_compress(x, m), m)


def compression_factor(m: ConAda) -> Fraction:
    """Input over output channels of the down convolution."""
    return Fraction(m.k_down.in_channels, m.k_down.out_channels)


@dataclass
class SSFModule:
    """Per-channel scale and shift, identity at init."""
    gamma: Param
    beta: Param

    @classmethod
    def create(cls, name: str, channels: int) -> "SSFModule":
        return cls(Param(f"{name}.gamma", np.ones(channels)), Param(f"{name}.beta", np.zeros(channels)))

    def params(self) -> List[Param]:
        return [self.gamma, self.beta]


def ssf_forward(x: Features, m: SSFModule) -> Features:
    return scale_shift(x, m.gamma, m.beta)


@dataclass
class HoulsbyAdapter:
    """Residual per-cell bottleneck on a dense map: x + up(GELU(down(x)))."""
    down: ConvKernel
    up: ConvKernel

    def __post_init__(self):
        if self.down.out_channels >= self.down.in_channels:
            raise ContractError(
                f"adapter bottleneck {self.down.out_channels} must be smaller than {self.down.in_channels}")

    @classmethod
    def create(cls, name: str, channels: int, bottleneck: int,
               rng: np.random.RandomState) -> "HoulsbyAdapter":
        inner = ConAda.create(name, channels, bottleneck, rng)
        return cls(inner.k_down, inner.k_up)

    def params(self) -> List[Param]:
        return self.down.params() + self.up.params()


def adapter_forward(x: Features, m: HoulsbyAdapter) -> Features:
    branch = pointwise_conv(gelu(pointwise_conv(x, m.down)), m.up)
    return residual_add(x, branch)


def latent_channels(channels: int, factor: int) -> int:
    """Latent width for a compression factor; the factor must divide the channel count."""
    if factor < 1 or channels % factor:
        raise ContractError(f"compression factor {factor} does not divide {channels} channels")
    return channels // factor


def param_count(params: List[Param]) -> int:
    return int(sum(p.size for p in params))
