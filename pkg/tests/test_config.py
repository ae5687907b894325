"""
Unit tests for JSON configuration loading and validation.
"""

import json
import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from macp.config.loader import (deep_merge, load_config, model_config, require, save_resolved_config,
                                train_config, voxel_config, world_config)
from macp.errors import ConfigError, MissingArtifactError


class TestLoadConfig:
    """Test defaults, file overrides and typed views."""

    def test_defaults(self):
        """Test the built-in defaults."""
        cfg = load_config()
        assert cfg["seed"] == 0
        assert voxel_config(cfg).extent == (128, 128)
        assert model_config(cfg).channels == 32
        assert set(cfg["dataset"]["splits"]) == {"pretrain", "train", "test"}

    def test_file_merges_over_defaults(self, tmp_path):
        """Test a config file overrides only the keys it names."""
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"model": {"channels": 8}, "training": {"epochs": 2}}))
        cfg = load_config(path)
        assert model_config(cfg).channels == 8
        assert model_config(cfg).encoder_blocks == 3
        assert train_config(cfg).epochs == 2
        assert train_config(cfg).lr == pytest.approx(2e-3)

    def test_overrides_win(self, tmp_path):
        """Test explicit overrides beat the config file."""
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"seed": 4}))
        assert load_config(path, overrides={"seed": 9})["seed"] == 9

    def test_split_world(self):
        """Test per-split world settings merge over the shared world."""
        cfg = load_config()
        assert world_config(cfg, "test").n_objects == (18, 24)
        assert world_config(cfg, "train").n_objects == (8, 24)
        assert world_config(cfg, "test").field_size == (120.0, 60.0)

    def test_deep_merge_copies(self):
        """Test merging leaves the base mapping untouched."""
        base = {"a": {"b": 1, "c": [1]}}
        merged = deep_merge(base, {"a": {"b": 2}})
        merged["a"]["c"].append(2)
        assert merged["a"]["b"] == 2
        assert base == {"a": {"b": 1, "c": [1]}}

    def test_resolved_config_written(self, tmp_path):
        """Test the resolved config is written back as JSON."""
        cfg = load_config()
        path = save_resolved_config(cfg, tmp_path / "run")
        assert json.loads(path.read_text()) == cfg


class TestValidation:
    """Test errors name the offending field."""

    def test_require_names_field(self):
        """Test lookup errors name the missing or mistyped field."""
        with pytest.raises(ConfigError, match="sweep.mask_size"):
            require({"sweep": {}}, "sweep.mask_size")
        with pytest.raises(ConfigError, match="training.epochs"):
            require({"training": {"epochs": "ten"}}, "training.epochs", int)
        with pytest.raises(ConfigError):
            require({"flag": True}, "flag", int)
        assert require({"lr": 1}, "lr", float) == 1

    def test_missing_split_kind(self):
        """Test a split without a kind names the field."""
        with pytest.raises(ConfigError, match="dataset.splits.extra.kind"):
            load_config(overrides={"dataset": {"splits": {"extra": {"n_frames": 3}}}})

    def test_bad_values(self):
        """Test out-of-range values raise."""
        with pytest.raises(ConfigError):
            load_config(overrides={"world": {"n_agents": [1, 9]}})
        with pytest.raises(ConfigError):
            load_config(overrides={"voxel": {"cell": [0.0, 0.5]}})
        with pytest.raises(ConfigError):
            load_config(overrides={"model": {"fusion_method": "max"}})
        with pytest.raises(ConfigError):
            load_config(overrides={"training": {"lr": -1.0}})

    def test_file_errors(self, tmp_path):
        """Test missing, malformed and non-object config files raise."""
        with pytest.raises(MissingArtifactError):
            load_config(tmp_path / "absent.json")
        bad = tmp_path / "bad.json"
        bad.write_text("{")
        with pytest.raises(ConfigError):
            load_config(bad)
        bad.write_text("[1, 2]")
        with pytest.raises(ConfigError):
            load_config(bad)
