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


from enum import Enum
from typing import List

import torch


class DataType(Enum):
    """
    Floating point precision of meta learners, BN sets and the classifier
    """

    FLOAT64 = "float64"
    FLOAT32 = "float32"

    def to_torch(self) -> torch.dtype:
        if self == DataType.FLOAT64:
            return torch.float64
        elif self == DataType.FLOAT32:
            return torch.float32
        else:
            raise ValueError(f"Unknown value {self}")

    @staticmethod
    def values() -> List[str]:
        return [item.value for item in DataType]


class ForwardMode(str, Enum):
    """
    - train: BN normalizes with batch statistics and updates the bound running statistics
    - eval: BN normalizes with the stored statistics
    - calibrate: BN normalizes with batch statistics, stored statistics are left untouched
    """

    TRAIN = "train"
    EVAL = "eval"
    CALIBRATE = "calibrate"
