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

from typing import Sequence

import pytest

from optimum.san.config import BackboneConfig, DataConfig, SanConfig, TrainingConfig
from optimum.san.data.synthetic import SyntheticSpec
from optimum.san.utils import parse_flag_from_env


# Environment variable controlling test set
ENVVAR_NAME_RUN_SLOW = "RUN_SLOW"


slow = pytest.mark.skipif(
    not parse_flag_from_env(ENVVAR_NAME_RUN_SLOW, False),
    reason=f"Slow test, set {ENVVAR_NAME_RUN_SLOW}=1 to run",
)


# Narrow backbones running on CPU in a few milliseconds
_TINY_BACKBONES = {
    "plain": dict(stem_width=4, stage_widths=(8,), blocks_per_stage=(1,), stage_strides=(2,)),
    "tiny_resnet": dict(stem_width=4, stage_widths=(4, 8), blocks_per_stage=(1, 1), stage_strides=(1, 2)),
    "tiny_mobile": dict(
        stem_width=4, stage_widths=(4, 8), blocks_per_stage=(1, 1), stage_strides=(1, 2), expansion=2
    ),
}


def tiny_config(
    name: str = "plain",
    resolutions: Sequence[int] = (32, 24, 16),
    num_classes: int = 4,
    samples_per_class: int = 8,
    dtype: str = "float32",
    **training_overrides,
) -> SanConfig:
    """
    Toy configuration over the synthetic stripes dataset. `hidden_units` is forwarded to the backbone, every other
    keyword overrides a training field.
    """
    hidden_units = training_overrides.pop("hidden_units", 0)
    training = dict(resolutions=tuple(resolutions), epochs=1, batch_size=16, lr=0.05, dtype=dtype)
    training.update(training_overrides)

    return SanConfig(
        backbone=BackboneConfig(
            name=name, num_classes=num_classes, hidden_units=hidden_units, **_TINY_BACKBONES[name]
        ),
        training=TrainingConfig(**training),
        data=DataConfig(
            source="synthetic",
            synthetic=SyntheticSpec(num_classes=num_classes, samples_per_class=samples_per_class),
            mean=(0.5, 0.5, 0.5),
            std=(0.25, 0.25, 0.25),
        ),
    )
