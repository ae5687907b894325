"""
Training loops for pretraining (single agent) and cooperative fine-tuning.

One optimizer step per batch: the batch's frame losses are averaged on a
single tape and AdamW updates the non-frozen parameters the tape reached.
Trainable parameters off the loss path (the channel ConAda when training
the single-agent forward pass) keep their values and optimizer moments.
"""

import logging
import time
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Union

import numpy as np
import pandas as pd

from macp.autodiff import OptimState, Tape, adamw_step, backward, clip_grad_norm, cosine_lr
from macp.autodiff.functional import add_n, scale
from macp.errors import ConfigError, ContractError, NonFiniteError
from macp.perception.augment import augment_sample
from macp.perception.loss import detection_loss
from macp.perception.targets import splat_targets
from macp.training.artifacts import save_model

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 10
    batch_size: int = 2
    lr: float = 2e-3
    weight_decay: float = 1e-2
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    clip_norm: Optional[float] = None
    augment: bool = False
    max_agents: Optional[int] = None

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError(f"training.epochs and batch_size must be >= 1, got {self.epochs}, {self.batch_size}")
        if self.lr <= 0:
            raise ConfigError(f"training.lr must be positive, got {self.lr}")

    @classmethod
    def from_dict(cls, data: Mapping) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in known})


class Trainer:
    """
    Args:
        model: MACPModel to train in place
        frames: Training frames
        cfg: Optimizer and schedule settings
        cooperative: Train on the cooperative forward pass (partners
            compress, ego fuses) instead of the ego cloud alone
        seed: Seeds the epoch shuffles and augmentation
    """

    def __init__(self, model, frames: Sequence, cfg: TrainConfig,
                 cooperative: bool = False, seed: int = 0):
        if not frames:
            raise ContractError("training needs at least one frame")
        if cooperative and model.channel is None:
            raise ContractError("cooperative training needs a model with a channel ConAda")
        self.model = model
        self.frames = list(frames)
        self.cfg = cfg
        self.cooperative = cooperative
        self.seed = seed
        self.state = OptimState()
        self.history: List[Dict] = []
        self.steps_per_epoch = int(np.ceil(len(self.frames) / cfg.batch_size))
        self.total_steps = self.steps_per_epoch * cfg.epochs

    def frame_loss(self, frame, rng: np.random.RandomState):
        cloud, gts = frame.ego_cloud, frame.gts
        if self.cooperative:
            partners = [(c, p) for _, c, p in frame.partners(self.cfg.max_agents)]
            head = self.model.forward_cooperative(cloud, frame.ego_pose, partners)
        else:
            if self.cfg.augment:
                cloud, gts = augment_sample(cloud, gts, rng)
            head = self.model.forward_single(cloud)
        return detection_loss(head, splat_targets(gts, self.model.voxel))

    def step(self, batch: Sequence, rng: np.random.RandomState) -> float:
        params = self.model.params()
        self.model.zero_grad()
        with Tape() as tape:
            losses = [self.frame_loss(frame, rng) for frame in batch]
            loss = scale(add_n(losses), 1.0 / len(losses))
        if not np.isfinite(loss.value):
            raise NonFiniteError("training loss", f"step {self.state.t}")
        backward(tape, loss)
        trainable = [p for p in params if not p.frozen]
        reached = [p for p in trainable if p.grad is not None]
        if len(reached) < len(trainable):
            logger.debug("step %d: %d trainable params off the loss path left unchanged",
                         self.state.t, len(trainable) - len(reached))
        clip_grad_norm(reached, self.cfg.clip_norm)
        lr = cosine_lr(self.state.t, self.total_steps, self.cfg.lr)
        adamw_step(reached, self.state, lr, self.cfg.beta1, self.cfg.beta2, self.cfg.eps, self.cfg.weight_decay)
        return loss.item()

    def train(self) -> List[Dict]:
        """Run every epoch; returns one record per epoch (epoch, loss, lr, seconds)."""
        for epoch in range(self.cfg.epochs):
            start = time.time()
            rng = np.random.RandomState(self.seed + epoch)
            order = rng.permutation(len(self.frames))
            batch_losses = []
            for b in range(self.steps_per_epoch):
                batch = [self.frames[i] for i in order[b * self.cfg.batch_size:(b + 1) * self.cfg.batch_size]]
                batch_losses.append(self.step(batch, rng))
                logger.debug("epoch %d batch %d loss %.5f", epoch, b, batch_losses[-1])
            record = {
                "epoch": epoch,
                "loss": float(np.mean(batch_losses)),
                "lr": cosine_lr(self.state.t, self.total_steps, self.cfg.lr),
                "seconds": time.time() - start,
            }
            self.history.append(record)
            logger.info("epoch %d/%d: loss %.5f (%.1fs)", epoch + 1, self.cfg.epochs,
                        record["loss"], record["seconds"])
        return self.history

    def save_history(self, path: Union[str, Path]) -> None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        pd.DataFrame(self.history, columns=["epoch", "loss", "lr", "seconds"]).to_csv(path, index=False)

    def save_checkpoint(self, path: Union[str, Path]) -> Path:
        return save_model(self.model, path)
