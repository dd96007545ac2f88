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
import torchvision.transforms.functional as TF

from optimum.san.data.transforms import (
    eval_resize_size,
    eval_view,
    normalize,
    sample_crop_parameters,
    train_view,
)
from optimum.san.errors import InvalidInputError


def uint8_images(n: int, height: int, width: int, seed: int = 0) -> torch.Tensor:
    generator = torch.Generator().manual_seed(seed)
    return torch.randint(0, 256, (n, 3, height, width), generator=generator, dtype=torch.uint8)


@pytest.mark.parametrize("resolution, expected", [(224, 256), (32, 37), (28, 32), (16, 18)])
def test_eval_resize_size(resolution: int, expected: int):
    assert eval_resize_size(resolution) == expected


@pytest.mark.parametrize("height, width", [(32, 32), (40, 48), (64, 36)])
@pytest.mark.parametrize("resolution", [32, 28, 20, 16])
def test_eval_view_shape(height: int, width: int, resolution: int):
    view = eval_view(uint8_images(3, height, width), resolution)

    assert view.shape == (3, 3, resolution, resolution)
    assert view.dtype == torch.float32
    assert 0.0 <= view.min().item() and view.max().item() <= 1.0


def test_eval_view_single_image():
    image = uint8_images(1, 40, 40)[0]
    assert eval_view(image, 24).shape == (3, 24, 24)


def test_eval_view_is_deterministic():
    images = uint8_images(2, 40, 48)
    assert torch.equal(eval_view(images, 24), eval_view(images, 24))


def test_eval_view_skips_resize_at_target_size():
    images = uint8_images(2, 37, 37)
    expected = TF.center_crop(TF.convert_image_dtype(images, torch.float32), [32, 32])
    assert torch.equal(eval_view(images, 32), expected)


def test_eval_view_accepts_mixed_sizes():
    images = [uint8_images(1, 40, 48)[0], uint8_images(1, 32, 32)[0]]
    assert eval_view(images, 16, dtype=torch.float64).shape == (2, 3, 16, 16)


def test_normalize():
    images = torch.full((1, 3, 2, 2), 0.75)
    assert normalize(images, None, None) is images

    normalized = normalize(images, (0.5, 0.5, 0.5), (0.25, 0.25, 0.25))
    torch.testing.assert_close(normalized, torch.ones_like(images))


@pytest.mark.parametrize("resolution", [32, 24, 16])
def test_train_view_shape(resolution: int):
    generator = torch.Generator().manual_seed(0)
    view = train_view(uint8_images(4, 32, 32), resolution, generator)
    assert view.shape == (4, 3, resolution, resolution)


def test_train_view_is_seeded():
    images = uint8_images(4, 32, 32)

    first = train_view(images, 24, torch.Generator().manual_seed(5))
    second = train_view(images, 24, torch.Generator().manual_seed(5))
    other = train_view(images, 24, torch.Generator().manual_seed(6))

    assert torch.equal(first, second)
    assert not torch.equal(first, other)


def test_train_view_preserves_sample_order():
    images = torch.zeros(3, 3, 32, 32, dtype=torch.uint8)
    for index in range(3):
        images[index] = 50 * (index + 1)

    view = train_view(images, 16, torch.Generator().manual_seed(0), hflip_probability=1.0)
    for index in range(3):
        torch.testing.assert_close(view[index], torch.full((3, 16, 16), 50 * (index + 1) / 255.0))


def test_sample_crop_parameters_within_bounds():
    generator = torch.Generator().manual_seed(0)
    for _ in range(200):
        top, left, h, w = sample_crop_parameters(30, 40, generator)
        assert 0 < h <= 30 and 0 < w <= 40
        assert 0 <= top <= 30 - h and 0 <= left <= 40 - w
        assert h * w >= 0.3 * 30 * 40


def test_sample_crop_parameters_fallback():
    # No window of aspect ratio 2 covers the full square area
    params = sample_crop_parameters(10, 10, torch.Generator().manual_seed(0), scale=(1.0, 1.0), ratio=(2.0, 2.0))
    assert params == (2, 0, 5, 10)


@pytest.mark.parametrize("size", [32, 24])
def test_train_view_full_crop_is_identity(size: int):
    images = uint8_images(3, size, size)
    view = train_view(
        images, size, torch.Generator().manual_seed(0), scale=(1.0, 1.0), ratio=(1.0, 1.0), hflip_probability=0.0
    )
    assert torch.equal(view, TF.convert_image_dtype(images, torch.float32))


@pytest.mark.parametrize("dtype", [torch.int16, torch.int32, torch.int64])
def test_views_reject_wide_integer_images(dtype):
    images = uint8_images(2, 32, 32).to(dtype)

    with pytest.raises(InvalidInputError):
        eval_view(images, 24)
    with pytest.raises(InvalidInputError):
        train_view(images, 24, torch.Generator().manual_seed(0))
