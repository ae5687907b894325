"""
The experiment protocol shared by the command line and the study scripts:
pretraining, variant fine-tuning, evaluation settings and the sweeps.
"""

import logging
from dataclasses import replace
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from macp.autodiff import Param
from macp.comms.message import HEADER_SIZE, PAYLOAD_DTYPE
from macp.config.loader import model_config, require, train_config, voxel_config
from macp.errors import ContractError
from macp.evaluation.pipelines import PipelineMode, PipelineOptions
from macp.evaluation.report import EvalReport, evaluate
from macp.fusion.methods import FusionMethod
from macp.peft.modules import latent_channels
from macp.peft.variants import Variant, VariantConfig, build_variant, frozen_snapshot
from macp.perception.model import MACPModel
from macp.training.trainer import Trainer

logger = logging.getLogger(__name__)


def eval_options(cfg: Mapping, max_agents: Optional[int] = None,
                 fov_mask: Optional[Tuple[float, float, float]] = None) -> PipelineOptions:
    section = require(cfg, "eval", dict)
    return PipelineOptions(
        score_thresh=float(section.get("score_thresh", 0.3)),
        max_det=int(section.get("max_det", 64)),
        max_agents=max_agents if max_agents is not None else section.get("max_agents"),
        nms_iou=float(section.get("nms_iou", 0.5)),
        fov_mask=fov_mask,
    )


def pretrain_model(cfg: Mapping, frames: Sequence, seed: int,
                   epochs: Optional[int] = None, lr: Optional[float] = None) -> Trainer:
    """Train the adapter-free single-agent model on single-agent frames."""
    tcfg = train_config(cfg, "training")
    tcfg = replace(tcfg, **{k: v for k, v in (("epochs", epochs), ("lr", lr)) if v is not None})
    model = MACPModel(model_config(cfg), voxel_config(cfg), seed=seed)
    trainer = Trainer(model, frames, tcfg, cooperative=False, seed=seed)
    trainer.train()
    return trainer


def finetune_variant(cfg: Mapping, base: Mapping[str, Param], frames: Sequence, seed: int,
                     variant=None, factor: Optional[int] = None, fusion: Optional[str] = None,
                     epochs: Optional[int] = None, max_agents: Optional[int] = None) -> Trainer:
    """
    Build a variant on the pretrained parameters and train its non-frozen
    parameters on cooperative frames.

    Raises:
        NonFiniteError: when the loss diverges
        ContractError: when a frozen parameter changed during training
    """
    section = require(cfg, "finetune", dict)
    vcfg = VariantConfig(
        variant=Variant.parse(variant if variant is not None else section.get("variant", "macp")),
        bottleneck_ratio=int(require(cfg, "model.conada_ratio", int)),
        compression_factor=int(factor if factor is not None else section.get("compression_factor", 4)),
        fusion_method=FusionMethod.parse(fusion if fusion is not None else section.get("fusion_method",
                                                                                     "weighted_sum")).value,
    )
    model = build_variant(vcfg, base, model_config(cfg), voxel_config(cfg), seed=seed)
    tcfg = train_config(cfg, "finetune")
    overrides = {k: v for k, v in (("epochs", epochs), ("max_agents", max_agents)) if v is not None}
    tcfg = replace(tcfg, augment=False, **overrides)

    before = frozen_snapshot(model)
    trainer = Trainer(model, frames, tcfg, cooperative=True, seed=seed)
    trainer.train()
    after = frozen_snapshot(model)
    if before != after:
        changed = sorted(n for n in before if before[n] != after.get(n))
        raise ContractError(f"frozen parameters changed during fine-tuning: {changed}")
    return trainer


def sweep_compression(cfg: Mapping, base: Mapping[str, Param], train: Sequence, test: Sequence,
                      seed: int, factors: Optional[Sequence[int]] = None) -> pd.DataFrame:
    """Fine-tune and evaluate MACP at each compression factor."""
    factors = list(factors or require(cfg, "sweep.compression_factors", list))
    epochs = int(require(cfg, "sweep.finetune_epochs", int))
    channels = int(require(cfg, "model.channels", int))
    height, width = voxel_config(cfg).extent
    rows = []
    for factor in factors:
        logger.info("compression sweep: factor %d", factor)
        trainer = finetune_variant(cfg, base, train, seed, Variant.MACP, factor=factor, epochs=epochs)
        report = evaluate(test, trainer.model, PipelineMode.MACP, eval_options(cfg), name=f"factor-{factor}")
        latent = latent_channels(channels, factor)
        rows.append({
            "factor": factor,
            "latent_channels": latent,
            "payload_bytes": height * width * latent * PAYLOAD_DTYPE.itemsize,
            "message_bytes": HEADER_SIZE + height * width * latent * PAYLOAD_DTYPE.itemsize,
            "am_mb": report.am_mb,
            "ap50": report.ap_at(0.5),
            "ap70": report.ap_at(0.7),
            "params_trainable": report.params_trainable,
        })
    return pd.DataFrame(rows)


def sweep_cavs(cfg: Mapping, model: MACPModel, test: Sequence,
               counts: Optional[Sequence[int]] = None) -> pd.DataFrame:
    """Evaluate one cooperative model while limiting how many agents take part."""
    counts = list(counts or require(cfg, "sweep.max_agents", list))
    rows = []
    for n in counts:
        report = evaluate(test, model, PipelineMode.MACP, eval_options(cfg, max_agents=n), name=f"cavs-{n}")
        rows.append({"max_agents": n, "ap50": report.ap_at(0.5), "ap70": report.ap_at(0.7),
                     "am_mb": report.am_mb})
    return pd.DataFrame(rows)


def sweep_fusion(cfg: Mapping, base: Mapping[str, Param], train: Sequence, test: Sequence,
                 seed: int, methods: Optional[Sequence[str]] = None) -> pd.DataFrame:
    """Fine-tune and evaluate MACP once per fusion method."""
    methods = list(methods or require(cfg, "sweep.fusion_methods", list))
    epochs = int(require(cfg, "sweep.finetune_epochs", int))
    rows = []
    for method in methods:
        trainer = finetune_variant(cfg, base, train, seed, Variant.MACP, fusion=method, epochs=epochs)
        report = evaluate(test, trainer.model, PipelineMode.MACP, eval_options(cfg), name=method)
        rows.append({"method": FusionMethod.parse(method).value, "ap50": report.ap_at(0.5),
                     "ap70": report.ap_at(0.7), "params_trainable": report.params_trainable})
    return pd.DataFrame(rows)


def mask_positions(cfg: Mapping) -> List[Tuple[float, float]]:
    """Centers of the sliding FOV mask, a square grid inside the ego map."""
    size = float(require(cfg, "sweep.mask_size", float))
    n = int(require(cfg, "sweep.mask_grid", int))
    voxel = voxel_config(cfg)
    lo = max(voxel.origin) + 0.5 * size
    hi = min(voxel.upper) - 0.5 * size
    coords = np.linspace(lo, hi, n) if n > 1 else np.array([0.5 * (lo + hi)])
    return [(float(x), float(y)) for x in coords for y in coords]


def sweep_robustness(cfg: Mapping, single_model: MACPModel, coop_model: MACPModel,
                     test: Sequence) -> Tuple[pd.DataFrame, pd.DataFrame]:
    """
    Slide a square mask over the ego's view and evaluate the single-agent
    and cooperative models at every position.

    Returns:
        (per-position rows, per-model mean/std summary)
    """
    half = 0.5 * float(require(cfg, "sweep.mask_size", float))
    rows = []
    for cx, cy in mask_positions(cfg):
        options_mask = (cx, cy, half)
        for label, model, mode in (("single", single_model, PipelineMode.NO_FUSION),
                                   ("cooperative", coop_model, PipelineMode.MACP)):
            report = evaluate(test, model, mode, eval_options(cfg, fov_mask=options_mask),
                              name=f"{label}@({cx:.0f},{cy:.0f})")
            rows.append({"model": label, "cx": cx, "cy": cy,
                         "ap50": report.ap_at(0.5), "ap70": report.ap_at(0.7)})
    per_position = pd.DataFrame(rows)
    summary = (per_position.groupby("model", sort=False)[["ap50", "ap70"]]
               .agg(["mean", "std"]))
    summary.columns = [f"{metric}_{stat}" for metric, stat in summary.columns]
    return per_position, summary.reset_index()


def report_row(report: EvalReport) -> Dict:
    return {"name": report.name, "mode": report.mode, "ap50": report.ap_at(0.5), "ap70": report.ap_at(0.7),
            "am_mb": report.am_mb, "params_total": report.params_total,
            "params_trainable": report.params_trainable}
