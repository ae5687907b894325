"""
Unit tests for ConAda, SSF, the Houlsby adapter and the ablation variants.

Tests verify:
- Adaptation modules are the identity at initialization
- Variant trainable sets nest: head within macp within full
- A freshly built MACP model reproduces the pretrained detections bitwise
"""

import os
import sys
from fractions import Fraction

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from macp.autodiff import Tensor, grad_check
from macp.autodiff.functional import mul, total
from macp.errors import ConfigError, ContractError
from macp.geom import DenseGrid, PointCloud, SparseTensor, VoxelConfig
from macp.nnops.containers import features_of
from macp.peft import (ConAda, HoulsbyAdapter, SSFModule, Variant, VariantConfig, adapter_forward, build_variant,
                       compression_factor, conada_compress, conada_decompress, conada_forward, count_params,
                       latent_channels, param_count, ssf_forward, trainable_names)
from macp.perception import MACPModel, ModelConfig, decode_detections, param_group

TOL = 1e-4
SMALL_VOXEL = VoxelConfig(origin=(-4.0, -4.0), cell=(1.0, 1.0), extent=(8, 8))
SMALL_MODEL = ModelConfig(channels=8, encoder_blocks=1, head_blocks=1)


def readout(t, seed=21):
    return total(mul(t, Tensor(np.random.RandomState(seed).randn(*t.shape))))


def small_cloud(seed=0, n=120):
    rng = np.random.RandomState(seed)
    return PointCloud(np.column_stack([rng.uniform(-4, 4, n), rng.uniform(-4, 4, n),
                                       rng.uniform(0.2, 1.8, n), rng.uniform(0, 1, n)]))


def sites(channels=8, seed=0):
    rng = np.random.RandomState(seed)
    flat = rng.choice(36, size=10, replace=False)
    return SparseTensor(np.stack([flat // 6, flat % 6], axis=1),
                        Tensor(rng.randn(10, channels), requires_grad=True))


def randomize(module, seed=3):
    rng = np.random.RandomState(seed)
    for p in module.params():
        p.value = rng.randn(*p.shape) * 0.5


class TestConAda:
    """Test the convolutional adapter."""

    def test_zero_at_init(self):
        """Test the up kernel starts at zero, so the branch outputs zeros."""
        m = ConAda.create("c", 8, 2, np.random.RandomState(0))
        out = conada_forward(sites(), m)
        assert np.all(out.feats.value == 0.0)

    def test_shapes_and_sites(self):
        """Test the latent has the bottleneck width on the input's sites."""
        m = ConAda.create("c", 8, 2, np.random.RandomState(0))
        st = sites()
        latent = conada_compress(st, m)
        assert latent.channels == 2
        np.testing.assert_array_equal(latent.coords, st.coords)

    def test_split_matches_forward(self):
        """Test compressing then decompressing reproduces the full adapter bitwise."""
        m = ConAda.create("c", 8, 2, np.random.RandomState(0))
        randomize(m)
        for x in (sites(), DenseGrid(Tensor(np.random.RandomState(4).randn(5, 6, 8)))):
            split = conada_decompress(conada_compress(x, m), m)
            np.testing.assert_array_equal(features_of(split).value, features_of(conada_forward(x, m)).value)

    def test_bottleneck_must_shrink(self):
        """Test the encoder adapter needs a narrower bottleneck."""
        with pytest.raises(ContractError):
            ConAda.create("c", 8, 8, np.random.RandomState(0))
        # the channel module may run uncompressed
        assert ConAda.create("c", 8, 8, np.random.RandomState(0), strict=False).bottleneck == 8

    def test_compression_factor(self):
        """Test the compression factor is input over bottleneck channels."""
        assert compression_factor(ConAda.create("c", 32, 8, np.random.RandomState(0))) == Fraction(4)

    def test_latent_channels(self):
        """Test the latent width is channels over factor and must divide."""
        assert latent_channels(32, 16) == 2
        with pytest.raises(ContractError):
            latent_channels(32, 3)

    def test_gradients(self):
        """Test ConAda gradients against finite differences."""
        m = ConAda.create("c", 8, 3, np.random.RandomState(1))
        randomize(m)
        st = sites()
        assert grad_check(lambda: readout(conada_forward(st, m).feats), [st.feats] + m.params()) < TOL

    def test_param_count(self):
        """Test the down and up kernels account for every parameter."""
        m = ConAda.create("c", 32, 8, np.random.RandomState(0))
        assert param_count(m.params()) == 32 * 8 + 8 + 8 * 32 + 32


class TestSSFAndAdapter:
    """Test SSF and the residual adapter."""

    def test_ssf_identity(self):
        """Test a fresh SSF module leaves features bitwise unchanged."""
        st = sites()
        out = ssf_forward(st, SSFModule.create("s", 8))
        assert out.feats.value.tobytes() == st.feats.value.tobytes()

    def test_adapter_identity(self):
        """Test a fresh adapter is the identity."""
        grid = DenseGrid(Tensor(np.random.RandomState(0).randn(3, 3, 8)))
        out = adapter_forward(grid, HoulsbyAdapter.create("a", 8, 2, np.random.RandomState(0)))
        np.testing.assert_array_equal(out.numpy(), grid.numpy())

    def test_adapter_gradients(self):
        """Test adapter gradients against finite differences."""
        grid = DenseGrid(Tensor(np.random.RandomState(1).randn(3, 3, 8), requires_grad=True))
        adapter = HoulsbyAdapter.create("a", 8, 2, np.random.RandomState(0))
        randomize(adapter)
        assert grad_check(lambda: readout(adapter_forward(grid, adapter).values),
                          [grid.values] + adapter.params()) < TOL


class TestVariants:
    """Test variant construction and parameter partitions."""

    @pytest.fixture
    def base(self):
        return MACPModel(SMALL_MODEL, SMALL_VOXEL, seed=0).named_params()

    def build(self, base, variant, **kwargs):
        return build_variant(VariantConfig(variant=variant, **kwargs), base, SMALL_MODEL, SMALL_VOXEL, seed=1)

    def test_parse(self):
        """Test variant names parse and unknown ones raise."""
        assert Variant.parse("macp") is Variant.MACP
        with pytest.raises(ConfigError):
            Variant.parse("lora")

    def test_full_trains_everything(self, base):
        """Test full fine-tuning trains every parameter."""
        model = self.build(base, "full")
        total_n, trainable = count_params(model)
        assert total_n == trainable

    def test_trainable_sets_nest(self, base):
        """Test head-only within macp within full fine-tuning."""
        head = trainable_names(self.build(base, "head"))
        macp = trainable_names(self.build(base, "macp"))
        full = trainable_names(self.build(base, "full"))
        assert head < macp < full

    def test_macp_freezes_pretrained_convs(self, base):
        """Test MACP freezes pretrained weights and trains everything else."""
        model = self.build(base, Variant.MACP)
        for p in model.params():
            if param_group(p.name) == "pretrained":
                assert p.frozen, p.name
            else:
                assert not p.frozen, p.name

    def test_head_only_counts_less(self, base):
        """Test the head-only variant trains fewer parameters than MACP."""
        _, head = count_params(self.build(base, "head"))
        _, macp = count_params(self.build(base, "macp"))
        assert head < macp

    def test_pretrained_values_loaded(self, base):
        """Test every variant starts from the pretrained values."""
        model = self.build(base, "macp")
        own = model.named_params()
        for name, p in base.items():
            assert own[name].value.tobytes() == p.value.tobytes()

    def test_factor_must_divide(self, base):
        """Test a factor that does not divide the channels raises."""
        with pytest.raises(ConfigError):
            self.build(base, "macp", compression_factor=3)

    def test_default_model_trainable_share(self):
        """Test the MACP variant trains well under a third of the default model."""
        cfg, voxel = ModelConfig(), VoxelConfig()
        base = MACPModel(cfg, voxel).named_params()
        model = build_variant(VariantConfig(variant="macp"), base, cfg, voxel)
        total_n, trainable = count_params(model)
        assert trainable / total_n < 0.30

    def test_identity_at_init(self, base):
        """Test a fresh MACP model on ego-only input matches the pretrained model bitwise."""
        pretrained = MACPModel(SMALL_MODEL, SMALL_VOXEL, seed=0)
        adapted = self.build(base, "macp")
        cloud = small_cloud(5)
        a = pretrained.forward_single(cloud)
        b = adapted.forward_single(cloud)
        for name in ("heatmap", "offset", "size", "yaw"):
            assert getattr(a, name).value.tobytes() == getattr(b, name).value.tobytes()
        assert decode_detections(a, SMALL_VOXEL, 0.0) == decode_detections(b, SMALL_VOXEL, 0.0)
