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

from collections import OrderedDict
from enum import Enum
from logging import getLogger
from typing import Hashable, Optional, Tuple, Union

import torch

from optimum.san.config import DataConfig
from optimum.san.data.datasets import DatasetHandle, make_loader
from optimum.san.data.transforms import eval_view
from optimum.san.errors import ConfigurationError, InvalidInputError
from optimum.san.hub import model_content_hash
from optimum.san.lang import ForwardMode
from optimum.san.models.san import MainNetworkParams, ScaleAdaptiveNetwork, predict_probs
from optimum.san.normalization import BNSet, calibrate, interpolate_or_clamp
from optimum.san.resolutions import interpolation_weight, nearest_resolution, neighbors


LOGGER = getLogger(__name__)

__all__ = [
    "InferenceMode",
    "CalibrationCache",
    "ScaleAdaptiveInference",
    "nearest_resolution",
    "neighbors",
    "interpolation_weight",
    "ideal_infer",
    "proxy_infer",
    "datafree_infer",
]


class InferenceMode(str, Enum):
    IDEAL = "ideal"
    PROXY = "proxy"
    DATAFREE = "datafree"

    @staticmethod
    def values():
        return [item.value for item in InferenceMode]


class CalibrationCache:
    """
    Bounded LRU store of calibrated BN sets keyed by (model content hash, test resolution, BN key, data fingerprint)
    """

    def __init__(self, max_entries: int = 64):
        self.max_entries = max_entries
        self._entries: "OrderedDict[Hashable, BNSet]" = OrderedDict()

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, key: Hashable) -> bool:
        return key in self._entries

    def get(self, key: Hashable) -> Optional[BNSet]:
        if key in self._entries:
            self._entries.move_to_end(key)
            return self._entries[key]
        return None

    def put(self, key: Hashable, bn_set: BNSet):
        self._entries[key] = bn_set
        self._entries.move_to_end(key)
        while len(self._entries) > self.max_entries:
            self._entries.popitem(last=False)

    def clear(self):
        self._entries.clear()


DEFAULT_CALIBRATION_CACHE = CalibrationCache()


class ScaleAdaptiveInference:
    """
    Parameterize a trained model for arbitrary test resolutions.

    - proxy: kernels and BN of the nearest training resolution S(T)
    - ideal: kernels at the test resolution, gamma / beta of S(T), statistics recalibrated at T
    - datafree: kernels at the test resolution, BN interpolated between the two flanking training resolutions

    The model is treated as read-only: its content hash is computed once and keys the calibration cache.
    """

    def __init__(
        self,
        model: ScaleAdaptiveNetwork,
        calibration_data: Optional[DatasetHandle] = None,
        data_config: Optional[DataConfig] = None,
        cache: Optional[CalibrationCache] = None,
    ):
        self.model = model.eval()
        self.calibration_data = calibration_data
        self.data_config = data_config or model.config.data
        self.cache = cache if cache is not None else DEFAULT_CALIBRATION_CACHE
        self._model_hash = model_content_hash(model)

    @property
    def model_hash(self) -> str:
        return self._model_hash

    @property
    def resolutions(self) -> Tuple[int, ...]:
        return self.model.resolutions

    def nearest(self, resolution: int) -> int:
        return nearest_resolution(resolution, self.resolutions)

    def test_view(self, images, resolution: int) -> torch.Tensor:
        return eval_view(
            images,
            resolution,
            crop_ratio=self.data_config.eval_crop_ratio,
            mean=self.data_config.mean,
            std=self.data_config.std,
            dtype=self.model.dtype,
        )

    def calibrated_bn_set(self, resolution: int, bn_key: int) -> BNSet:
        if self.calibration_data is None:
            raise ConfigurationError.missing_calibration_data(resolution)

        key = (self.model_hash, resolution, bn_key, self.calibration_data.fingerprint)
        if (cached := self.cache.get(key)) is not None:
            return cached

        loader = make_loader(self.calibration_data, self.data_config.calibration_batch_size)
        batches = (self.test_view(images, resolution) for images, _ in loader)
        params = self.model.parameterize(self.model.encode(resolution), bn_key)

        LOGGER.info(f"Calibrating BN statistics at {resolution} (gamma / beta from {bn_key})")
        bn_set = calibrate(self.model, params, batches, num_batches=len(loader))
        self.cache.put(key, bn_set)
        return bn_set

    def parameters_for(
        self,
        resolution: int,
        mode: Union[str, InferenceMode],
        bn_key: Optional[int] = None,
        calibrate: bool = True,
    ) -> MainNetworkParams:
        """
        Main network evaluating inputs at `resolution`. `bn_key` overrides the training resolution providing BN
        (defaults to the nearest one), which is how non-shaded cells of an accuracy matrix are produced.
        """
        mode = InferenceMode(mode)
        bn_key = self.nearest(resolution) if bn_key is None else bn_key
        model = self.model

        if mode == InferenceMode.PROXY:
            return model.parameterize(model.encode(bn_key), bn_key)

        encoding = model.encode(resolution)

        if mode == InferenceMode.DATAFREE:
            if bn_key != self.nearest(resolution):
                return model.parameterize(encoding, bn_key)
            return model.parameterize(encoding, bn_key, interpolate_or_clamp(model.bn, resolution))

        # Stored statistics already match training resolutions
        if not calibrate or resolution == bn_key:
            return model.parameterize(encoding, bn_key)

        if self.calibration_data is None and resolution in self.resolutions:
            LOGGER.warning(
                f"No calibration data, BN statistics of {bn_key} are used as stored for test resolution {resolution}"
            )
            return model.parameterize(encoding, bn_key)

        return model.parameterize(encoding, bn_key, self.calibrated_bn_set(resolution, bn_key))

    @torch.no_grad()
    def logits(
        self,
        images: torch.Tensor,
        resolution: int,
        mode: Union[str, InferenceMode],
        bn_key: Optional[int] = None,
        calibrate: bool = True,
    ) -> torch.Tensor:
        if images.shape[-1] != resolution or images.shape[-2] != resolution:
            raise InvalidInputError(
                "infer",
                f"images should already be at the test resolution {resolution} (got: {tuple(images.shape[-2:])})",
            )

        params = self.parameters_for(resolution, mode, bn_key, calibrate)
        return self.model(params, images, mode=ForwardMode.EVAL)

    def predict(
        self,
        images: torch.Tensor,
        resolution: int,
        mode: Union[str, InferenceMode],
        calibrate: bool = True,
    ) -> torch.Tensor:
        return predict_probs(self.logits(images, resolution, mode, calibrate=calibrate))


def ideal_infer(
    images: torch.Tensor,
    resolution: int,
    model: ScaleAdaptiveNetwork,
    calibration_data: Optional[DatasetHandle] = None,
    calibrate: bool = True,
) -> torch.Tensor:
    runtime = ScaleAdaptiveInference(model, calibration_data)
    return runtime.predict(images, resolution, InferenceMode.IDEAL, calibrate=calibrate)


def proxy_infer(images: torch.Tensor, resolution: int, model: ScaleAdaptiveNetwork) -> torch.Tensor:
    return ScaleAdaptiveInference(model).predict(images, resolution, InferenceMode.PROXY)


def datafree_infer(images: torch.Tensor, resolution: int, model: ScaleAdaptiveNetwork) -> torch.Tensor:
    return ScaleAdaptiveInference(model).predict(images, resolution, InferenceMode.DATAFREE)
