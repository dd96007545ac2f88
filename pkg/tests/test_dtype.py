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

import pytest
import torch

from optimum.san.lang import DataType, ForwardMode


@pytest.mark.parametrize("literal_dtype,dtype", [("float32", torch.float32), ("float64", torch.float64)])
def test_convert_str_to_torch(literal_dtype: str, dtype):
    assert DataType(literal_dtype).to_torch() == dtype


@pytest.mark.parametrize("literal_dtype", ["float16", "bfloat16", "uint8"])
def test_unsupported_dtype(literal_dtype: str):
    assert literal_dtype not in DataType.values()

    with pytest.raises(ValueError):
        DataType(literal_dtype)


def test_forward_mode_from_str():
    assert ForwardMode("calibrate") == ForwardMode.CALIBRATE
    assert ForwardMode.TRAIN == "train"

    with pytest.raises(ValueError):
        ForwardMode("inference")
