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

from dataclasses import dataclass
from itertools import combinations
from typing import Dict, Mapping, Tuple

import torch
import torch.nn.functional as F

from optimum.san.errors import InvalidArgumentError


@dataclass
class LossBreakdown:
    ce_terms: Dict[int, torch.Tensor]
    sd_terms: Dict[Tuple[int, int], torch.Tensor]
    loss_ce: torch.Tensor
    loss_sd: torch.Tensor
    loss_total: torch.Tensor

    def to_dict(self) -> Dict[str, float]:
        return {
            "loss_ce": self.loss_ce.item(),
            "loss_sd": self.loss_sd.item(),
            "loss_total": self.loss_total.item(),
        }


def ce_loss(logits: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
    """
    Mean cross-entropy over the batch
    """
    num_classes = logits.shape[-1]
    if labels.numel() and (labels.min() < 0 or labels.max() >= num_classes):
        raise InvalidArgumentError(
            "ce_loss",
            f"labels should lie in [0, {num_classes}) (got: [{labels.min().item()}, {labels.max().item()}])",
        )

    return F.cross_entropy(logits, labels)


def sd_loss_terms(
    logits_by_scale: Mapping[int, torch.Tensor],
    temperature: float = 1.0,
) -> Dict[Tuple[int, int], torch.Tensor]:
    """
    KL(p_teacher || p_student) averaged over the batch for every (teacher, student) pair where the teacher has the
    larger resolution. Teacher distributions are detached.
    """
    sizes = {scale: logits.shape[0] for scale, logits in logits_by_scale.items()}
    if len(set(sizes.values())) > 1:
        raise InvalidArgumentError(
            "sd_loss", f"every scale should predict the same batch (got sizes: {sizes})"
        )

    scales = sorted(logits_by_scale, reverse=True)
    terms = {}
    for teacher, student in combinations(scales, 2):
        target = F.log_softmax(logits_by_scale[teacher].detach() / temperature, dim=-1)
        prediction = F.log_softmax(logits_by_scale[student] / temperature, dim=-1)
        kl = F.kl_div(prediction, target, reduction="batchmean", log_target=True)
        terms[(teacher, student)] = kl * temperature**2

    return terms


def sd_loss(logits_by_scale: Mapping[int, torch.Tensor], temperature: float = 1.0) -> torch.Tensor:
    """
    Top-down scale distillation: sum of `sd_loss_terms`, zero when a single scale is given
    """
    terms = sd_loss_terms(logits_by_scale, temperature)
    if not terms:
        reference = next(iter(logits_by_scale.values()))
        return reference.new_zeros(())

    return torch.stack(list(terms.values())).sum()
