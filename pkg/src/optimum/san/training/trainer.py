#  coding=utf-8
#  Copyright 2024 The HuggingFace Inc. team. All rights reserved.
#  #
#  Licensed under the Apache License, Version 2.0 (the "License");
#  you may not use this file except in compliance with the License.
#  You may obtain a copy of the License at
#  #
#      http://www.apache.org/licenses/LICENSE-2.0
#  #
#  Unless required by applicable law or agreed to in writing, software
#  distributed under the License is distributed on an "AS IS" BASIS,
#  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
#  See the License for the specific language governing permissions and
#  limitations under the License.

import math
import random
from dataclasses import dataclass
from logging import getLogger
from os import PathLike
from pathlib import Path
from typing import Dict, Optional, Sequence, Union

import numpy as np
import pandas as pd
import torch
from torch.optim import SGD
from torch.optim.lr_scheduler import LambdaLR
from tqdm import tqdm

from optimum.san.config import SanConfig, TrainingConfig
from optimum.san.data.datasets import DatasetHandle, make_loader
from optimum.san.data.transforms import ImageBatch, train_view
from optimum.san.errors import InvalidArgumentError
from optimum.san.hub import save_checkpoint
from optimum.san.lang import ForwardMode
from optimum.san.models.san import ScaleAdaptiveNetwork
from optimum.san.training.losses import LossBreakdown, ce_loss, sd_loss_terms
from optimum.san.utils.constants import (
    CHECKPOINT_FILENAME,
    INTERMEDIATE_CHECKPOINT_PATTERN,
    TRAINING_LOG_COLUMNS,
    TRAINING_LOG_FILENAME,
)
from optimum.san.utils.env import progress_bars_disabled


LOGGER = getLogger(__name__)


def cosine_lr(step: int, total_steps: int, lr0: float) -> float:
    """
    Half cosine annealing from `lr0` at step 0 down to 0 at `total_steps`
    """
    if total_steps <= 0:
        return lr0
    return lr0 * 0.5 * (1.0 + math.cos(math.pi * step / total_steps))


def seed_everything(seed: int, deterministic: bool = True):
    random.seed(seed)
    np.random.seed(seed)
    torch.manual_seed(seed)
    torch.use_deterministic_algorithms(deterministic)


def build_optimizer(model: ScaleAdaptiveNetwork, config: TrainingConfig) -> SGD:
    # BN affine parameters are not decayed
    return SGD(
        [
            {"params": list(model.kernel_parameters()) + list(model.fc_parameters())},
            {"params": list(model.bn_parameters()), "weight_decay": 0.0},
        ],
        lr=config.lr,
        momentum=config.momentum,
        weight_decay=config.weight_decay,
    )


class SanTrainer:
    """
    Mixed-scale optimization: every batch is viewed at all training resolutions, the summed cross-entropy and the
    top-down distillation losses are combined and a single SGD step is taken.
    """

    def __init__(self, model: ScaleAdaptiveNetwork, config: SanConfig, total_steps: int):
        self.model = model
        self.config = config
        self.total_steps = total_steps
        self.optimizer = build_optimizer(model, config.training)
        self.scheduler = LambdaLR(self.optimizer, lambda step: cosine_lr(step, total_steps, 1.0))
        self.generator = torch.Generator().manual_seed(config.training.seed)
        self.step = 0

    @property
    def lr(self) -> float:
        return self.scheduler.get_last_lr()[0]

    @property
    def resolutions(self) -> Sequence[int]:
        return self.config.training.resolutions

    def views(self, images: ImageBatch) -> Dict[int, torch.Tensor]:
        """
        Independent random crops of the same images at every training resolution, sample order preserved
        """
        data = self.config.data
        return {
            resolution: train_view(
                images,
                resolution,
                self.generator,
                scale=data.crop_scale,
                ratio=data.crop_ratio,
                hflip_probability=data.hflip_probability,
                mean=data.mean,
                std=data.std,
                dtype=self.model.dtype,
            )
            for resolution in self.resolutions
        }

    def compute_losses(self, views: Dict[int, torch.Tensor], labels: torch.Tensor) -> LossBreakdown:
        training = self.config.training
        logits = {
            resolution: self.model(self.model.parameterize_at(resolution), batch, mode=ForwardMode.TRAIN)
            for resolution, batch in views.items()
        }

        ce_terms = {resolution: ce_loss(value, labels) for resolution, value in logits.items()}
        sd_terms = sd_loss_terms(logits, training.temperature) if training.distill else {}

        loss_ce = torch.stack(list(ce_terms.values())).sum()
        if sd_terms:
            loss_sd = torch.stack(list(sd_terms.values())).sum()
            loss_total = training.alpha * loss_ce + training.beta * loss_sd
        else:
            loss_sd = loss_ce.new_zeros(())
            loss_total = training.alpha * loss_ce

        return LossBreakdown(ce_terms, sd_terms, loss_ce, loss_sd, loss_total)

    def train_step(self, images: ImageBatch, labels: torch.Tensor) -> LossBreakdown:
        self.model.train()
        self.optimizer.zero_grad(set_to_none=True)

        breakdown = self.compute_losses(self.views(images), labels)
        breakdown.loss_total.backward()

        self.optimizer.step()
        self.scheduler.step()
        self.step += 1

        return breakdown


@dataclass
class FitResult:
    model: ScaleAdaptiveNetwork
    checkpoint: Path
    history: pd.DataFrame


def write_training_log(history: pd.DataFrame, path: Union[str, PathLike]) -> Path:
    path = Path(path)
    try:
        history.to_csv(path, index=False)
    except OSError as e:
        raise OSError(f"Unable to write training log {path}: {e}") from e
    return path


def fit(
    config: SanConfig,
    train_data: DatasetHandle,
    output_dir: Union[str, PathLike],
    model: Optional[ScaleAdaptiveNetwork] = None,
) -> FitResult:
    """
    Run the epoch / batch loops, writing intermediate checkpoints every `checkpoint_every` epochs, the training log and
    the final checkpoint under `output_dir`.
    """
    training = config.training
    output_dir = Path(output_dir)

    try:
        output_dir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OSError(f"Unable to create output directory {output_dir}: {e}") from e

    seed_everything(training.seed, training.deterministic)
    model = model if model is not None else ScaleAdaptiveNetwork(config)

    loader = make_loader(
        train_data,
        training.batch_size,
        shuffle=True,
        seed=training.seed,
        num_workers=training.num_workers,
    )
    if len(loader) == 0:
        raise InvalidArgumentError("fit", "training set holds no sample")

    trainer = SanTrainer(model, config, total_steps=training.epochs * len(loader))
    LOGGER.info(
        f"Training {config.backbone.name} at resolutions {list(training.resolutions)} "
        f"for {training.epochs} epochs ({trainer.total_steps} steps)"
    )

    rows = []
    for epoch in range(1, training.epochs + 1):
        progress = tqdm(loader, desc=f"Epoch {epoch}/{training.epochs}", disable=progress_bars_disabled())
        for images, labels in progress:
            lr = trainer.lr
            breakdown = trainer.train_step(images, labels)
            rows.append({"step": trainer.step, "lr": lr, **breakdown.to_dict()})
            progress.set_postfix(loss=rows[-1]["loss_total"])

        epoch_rows = rows[-len(loader):]
        LOGGER.info(
            f"Epoch {epoch}: loss_ce={np.mean([r['loss_ce'] for r in epoch_rows]):.4f} "
            f"loss_sd={np.mean([r['loss_sd'] for r in epoch_rows]):.4f}"
        )

        if training.checkpoint_every and epoch % training.checkpoint_every == 0:
            save_checkpoint(
                model,
                output_dir / INTERMEDIATE_CHECKPOINT_PATTERN.format(epoch=epoch),
                extra={"epoch": epoch, "step": trainer.step},
            )

    history = pd.DataFrame(rows, columns=list(TRAINING_LOG_COLUMNS))
    write_training_log(history, output_dir / TRAINING_LOG_FILENAME)

    checkpoint = save_checkpoint(model, output_dir / CHECKPOINT_FILENAME)
    return FitResult(model.eval(), checkpoint, history)
