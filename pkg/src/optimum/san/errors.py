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

from os import PathLike
from typing import Iterable, Union


class OptimumSanException(Exception):
    def __init__(self, operation: str, msg: str):
        super().__init__(f"[{operation}] {msg}.")
        self.operation = operation


### Arguments and configuration
class InvalidArgumentError(OptimumSanException, ValueError):
    """
    Thrown when an operation receives a value outside of its domain (empty set, negative resolution, ...)
    """


class ConfigurationError(OptimumSanException, ValueError):
    """
    Thrown when the model, the backbone or the inference setup are not consistent with each other
    """

    @classmethod
    def kernel_shape(
        cls, layer_id: int, expected: int, got: int
    ) -> "ConfigurationError":
        return cls(
            "meta",
            f"layer {layer_id} expects {expected} kernel elements but the meta learner produces {got}",
        )

    @classmethod
    def missing_calibration_data(cls, resolution: int) -> "ConfigurationError":
        return cls(
            "ideal",
            f"test resolution {resolution} is not a training resolution, "
            "ideal inference requires calibration data to recompute BN statistics",
        )


class UnknownResolutionError(OptimumSanException, KeyError):
    def __init__(self, resolution: int, known: Iterable[int]):
        super().__init__(
            "parameterize",
            f"no BN set is stored for resolution {resolution} (known: {sorted(known, reverse=True)})",
        )

    def __str__(self) -> str:
        # KeyError quotes its message otherwise
        return self.args[0]


class ResolutionRangeError(OptimumSanException, ValueError):
    def __init__(self, resolution: int, known: Iterable[int], reason: str):
        super().__init__(
            "resolution",
            f"{resolution} {reason} (training resolutions: {sorted(known, reverse=True)})",
        )


class InvalidInputError(OptimumSanException, ValueError):
    """
    Thrown when images cannot flow through the backbone (non-square or too small for the stride stack)
    """


### Checkpoints
class CheckpointException(OptimumSanException, OSError):
    def __init__(self, path: Union[str, PathLike], msg: str):
        super().__init__("checkpoint", f"{path}: {msg}")
        self.path = path


class CorruptedCheckpointError(CheckpointException):
    """
    Thrown when a checkpoint cannot be parsed or its content hash doesn't match its manifest
    """


class UnsupportedCheckpointFormatError(CheckpointException):
    """
    Thrown when a checkpoint was written with a container version this library cannot read
    """
