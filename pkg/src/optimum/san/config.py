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

import json
from dataclasses import asdict, dataclass, field, fields
from logging import getLogger
from os import PathLike
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import torch

from optimum.san.data.synthetic import SyntheticSpec
from optimum.san.errors import ConfigurationError
from optimum.san.lang import DataType
from optimum.san.utils.constants import (
    DEFAULT_ENCODING_COEFFICIENT,
    DEFAULT_EVAL_CROP_RATIO,
    DESK_DATASET_HUB_ID,
    DESK_DATASET_MEAN,
    DESK_DATASET_STD,
    DESK_RESOLUTIONS,
)


LOGGER = getLogger(__name__)

SUPPORTED_BACKBONES = {"tiny_resnet", "tiny_mobile", "plain"}
SUPPORTED_DATA_SOURCES = {"image_folder", "builtin_desk_dataset", "synthetic"}


def _invalid(section: str, msg: str) -> ConfigurationError:
    return ConfigurationError(section, msg)


def _from_known_keys(cls, section: str, values: Dict[str, Any]):
    known = {f.name for f in fields(cls)}
    unknown = set(values) - known
    if unknown:
        raise _invalid(section, f"unknown keys {sorted(unknown)}")

    # JSON only knows about lists
    return cls(
        **{k: tuple(v) if isinstance(v, list) else v for k, v in values.items()}
    )


@dataclass
class BackboneConfig:
    """
    Describe the main network topology the meta learners generate weights for
    """

    name: str = "tiny_resnet"
    in_channels: int = 3
    num_classes: int = 10
    stem_width: int = 16
    stem_stride: int = 1
    kernel_size: int = 3
    stage_widths: Tuple[int, ...] = (16, 32, 64)
    blocks_per_stage: Tuple[int, ...] = (2, 2, 2)
    stage_strides: Tuple[int, ...] = (1, 2, 2)
    expansion: int = 4
    hidden_units: int = 0
    encoding_coefficient: float = DEFAULT_ENCODING_COEFFICIENT
    downsample_rate: Optional[int] = None

    def __post_init__(self):
        if self.name not in SUPPORTED_BACKBONES:
            raise _invalid(
                "backbone",
                f"name should be one of {sorted(SUPPORTED_BACKBONES)} (got: {self.name})",
            )

        if not (
            len(self.stage_widths)
            == len(self.blocks_per_stage)
            == len(self.stage_strides)
        ):
            raise _invalid(
                "backbone",
                "stage_widths, blocks_per_stage and stage_strides should have the same length (got: "
                f"{len(self.stage_widths)}, {len(self.blocks_per_stage)}, {len(self.stage_strides)})",
            )

        for name in ("in_channels", "num_classes", "stem_width", "stem_stride", "kernel_size", "expansion"):
            if getattr(self, name) < 1:
                raise _invalid(
                    "backbone", f"{name} should be >= 1 (got: {getattr(self, name)})"
                )

        if any(w < 1 for w in self.stage_widths):
            raise _invalid(
                "backbone", f"stage_widths should be >= 1 (got: {self.stage_widths})"
            )

        if any(b < 1 for b in self.blocks_per_stage):
            raise _invalid(
                "backbone",
                f"blocks_per_stage should be >= 1 (got: {self.blocks_per_stage})",
            )

        if any(s < 1 for s in self.stage_strides):
            raise _invalid(
                "backbone", f"stage_strides should be >= 1 (got: {self.stage_strides})"
            )

        if self.hidden_units < 0:
            raise _invalid(
                "backbone", f"hidden_units should be >= 0 (got: {self.hidden_units})"
            )

        if self.encoding_coefficient <= 0:
            raise _invalid(
                "backbone",
                f"encoding_coefficient should be > 0 (got: {self.encoding_coefficient})",
            )

        if self.downsample_rate is not None and self.downsample_rate < 1:
            raise _invalid(
                "backbone",
                f"downsample_rate should be >= 1 (got: {self.downsample_rate})",
            )

    @staticmethod
    def from_dict(values: Dict[str, Any]) -> "BackboneConfig":
        return _from_known_keys(BackboneConfig, "backbone", values)


@dataclass
class TrainingConfig:
    """
    Hyper-parameters of the mixed-scale optimization.
    `resolutions` is always kept sorted in descending order, the largest resolution being the first teacher.
    """

    resolutions: Tuple[int, ...] = DESK_RESOLUTIONS
    alpha: float = 1.0
    beta: float = 1.0
    distill: bool = True
    temperature: float = 1.0
    lr: float = 0.1
    momentum: float = 0.9
    weight_decay: float = 5e-4
    epochs: int = 30
    batch_size: int = 128
    seed: int = 0
    share_bn: bool = False
    privatize_conv: bool = False
    bn_momentum: float = 0.1
    bn_eps: float = 1e-5
    deterministic: bool = True
    checkpoint_every: int = 0
    num_workers: int = 0
    dtype: str = "float32"

    def __post_init__(self):
        self.resolutions = tuple(sorted((int(s) for s in self.resolutions), reverse=True))

        if len(self.resolutions) < 1:
            raise _invalid("training", "resolutions should hold at least one value")

        if len(set(self.resolutions)) != len(self.resolutions):
            raise _invalid(
                "training", f"resolutions should be distinct (got: {self.resolutions})"
            )

        if self.resolutions[-1] < 1:
            raise _invalid(
                "training", f"resolutions should be >= 1 (got: {self.resolutions})"
            )

        if self.alpha < 0 or self.beta < 0:
            raise _invalid(
                "training",
                f"alpha and beta should be >= 0 (got: alpha={self.alpha}, beta={self.beta})",
            )

        if self.temperature <= 0:
            raise _invalid(
                "training", f"temperature should be > 0 (got: {self.temperature})"
            )

        if self.lr < 0:
            raise _invalid("training", f"lr should be >= 0 (got: {self.lr})")

        for name in ("epochs", "batch_size"):
            if getattr(self, name) < 1:
                raise _invalid(
                    "training", f"{name} should be >= 1 (got: {getattr(self, name)})"
                )

        if not 0.0 < self.bn_momentum <= 1.0:
            raise _invalid(
                "training", f"bn_momentum should be in (0, 1] (got: {self.bn_momentum})"
            )

        if self.dtype not in DataType.values():
            raise _invalid(
                "training", f"dtype should be float32 or float64 (got: {self.dtype})"
            )

    @property
    def torch_dtype(self) -> torch.dtype:
        return DataType(self.dtype).to_torch()

    @property
    def num_resolutions(self) -> int:
        return len(self.resolutions)

    @staticmethod
    def from_dict(values: Dict[str, Any]) -> "TrainingConfig":
        return _from_known_keys(TrainingConfig, "training", values)


@dataclass
class DataConfig:
    source: str = "synthetic"
    root: Optional[str] = None
    hub_id: str = DESK_DATASET_HUB_ID
    train_split: str = "train"
    val_split: str = "test"
    synthetic: SyntheticSpec = field(default_factory=SyntheticSpec)
    mean: Tuple[float, ...] = DESK_DATASET_MEAN
    std: Tuple[float, ...] = DESK_DATASET_STD
    crop_scale: Tuple[float, float] = (0.35, 1.0)
    crop_ratio: Tuple[float, float] = (3.0 / 4.0, 4.0 / 3.0)
    hflip_probability: float = 0.5
    eval_crop_ratio: float = DEFAULT_EVAL_CROP_RATIO
    calibration_batch_size: int = 256
    eval_batch_size: int = 256
    max_train_samples: Optional[int] = None
    max_eval_samples: Optional[int] = None

    def __post_init__(self):
        if isinstance(self.synthetic, dict):
            self.synthetic = SyntheticSpec(**self.synthetic)

        if self.source not in SUPPORTED_DATA_SOURCES:
            raise _invalid(
                "data",
                f"source should be one of {sorted(SUPPORTED_DATA_SOURCES)} (got: {self.source})",
            )

        if self.source == "image_folder" and not self.root:
            raise _invalid("data", "image_folder source requires a root directory")

        if len(self.mean) != len(self.std):
            raise _invalid("data", "mean and std should have the same length")

        if any(s <= 0 for s in self.std):
            raise _invalid("data", f"std should be > 0 (got: {self.std})")

        low, high = self.crop_scale
        if not 0.0 < low <= high <= 1.0:
            raise _invalid(
                "data", f"crop_scale should satisfy 0 < low <= high <= 1 (got: {self.crop_scale})"
            )

        if not 0.0 < self.eval_crop_ratio <= 1.0:
            raise _invalid(
                "data", f"eval_crop_ratio should be in (0, 1] (got: {self.eval_crop_ratio})"
            )

        for name in ("calibration_batch_size", "eval_batch_size"):
            if getattr(self, name) < 1:
                raise _invalid(
                    "data", f"{name} should be >= 1 (got: {getattr(self, name)})"
                )

    @staticmethod
    def from_dict(values: Dict[str, Any]) -> "DataConfig":
        return _from_known_keys(DataConfig, "data", values)


@dataclass
class SanConfig:
    """
    Represent the full experiment description: backbone topology, optimization and data
    """

    backbone: BackboneConfig = field(default_factory=BackboneConfig)
    training: TrainingConfig = field(default_factory=TrainingConfig)
    data: DataConfig = field(default_factory=DataConfig)

    @staticmethod
    def from_dict(values: Dict[str, Any]) -> "SanConfig":
        unknown = set(values) - {"backbone", "training", "data"}
        if unknown:
            raise _invalid("config", f"unknown sections {sorted(unknown)}")

        config = SanConfig(
            backbone=BackboneConfig.from_dict(values.get("backbone", {})),
            training=TrainingConfig.from_dict(values.get("training", {})),
            data=DataConfig.from_dict(values.get("data", {})),
        )
        LOGGER.debug(f"Loaded configuration: {config}")
        return config

    @staticmethod
    def from_json_file(path: Union[str, PathLike]) -> "SanConfig":
        path = Path(path)
        try:
            with open(path, "r", encoding="utf-8") as config_f:
                values = json.load(config_f)
        except OSError as e:
            raise OSError(f"Unable to read configuration file {path}: {e}") from e
        except json.JSONDecodeError as e:
            raise _invalid("config", f"{path} is not valid JSON ({e})") from e

        return SanConfig.from_dict(values)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def to_json_string(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)
