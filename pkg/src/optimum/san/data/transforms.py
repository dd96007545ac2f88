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

"""
Multi-resolution views of image batches.

Training views are random-resized crops drawn from an explicit `torch.Generator` so every scale of a step can be
replayed. Evaluation views follow the center-crop protocol: resize the shorter side to `round(T / crop_ratio)` then
crop `T x T`.
"""

import math
from typing import List, Optional, Sequence, Tuple, Union

import torch
import torchvision.transforms.functional as TF
from torchvision.transforms import InterpolationMode

from optimum.san.errors import InvalidInputError


ImageBatch = Union[torch.Tensor, Sequence[torch.Tensor]]

_INTERPOLATION = InterpolationMode.BILINEAR
_MAX_CROP_ATTEMPTS = 10


def _as_float(image: torch.Tensor, dtype: torch.dtype) -> torch.Tensor:
    if image.is_floating_point():
        return image.to(dtype)

    # Wider integer types would be rescaled by their own maximum
    if image.dtype != torch.uint8:
        raise InvalidInputError("view", f"integer images should be uint8 (got: {image.dtype})")
    return TF.convert_image_dtype(image, dtype)


def _resize_to(image: torch.Tensor, size: List[int]) -> torch.Tensor:
    if list(image.shape[-2:]) == size:
        return image
    return TF.resize(image, size, interpolation=_INTERPOLATION, antialias=True)


def normalize(
    images: torch.Tensor,
    mean: Optional[Sequence[float]],
    std: Optional[Sequence[float]],
) -> torch.Tensor:
    if mean is None or std is None:
        return images
    return TF.normalize(images, list(mean), list(std))


def sample_crop_parameters(
    height: int,
    width: int,
    generator: torch.Generator,
    scale: Tuple[float, float] = (0.35, 1.0),
    ratio: Tuple[float, float] = (3.0 / 4.0, 4.0 / 3.0),
) -> Tuple[int, int, int, int]:
    """
    Draw a random-resized-crop window (top, left, height, width) covering `scale` of the area with an aspect ratio
    within `ratio`. Falls back to the largest centered window matching the ratio bounds.
    """
    area = height * width
    log_ratio = (math.log(ratio[0]), math.log(ratio[1]))

    for _ in range(_MAX_CROP_ATTEMPTS):
        target_area = area * torch.empty(1).uniform_(scale[0], scale[1], generator=generator).item()
        aspect = math.exp(
            torch.empty(1).uniform_(log_ratio[0], log_ratio[1], generator=generator).item()
        )

        w = int(round(math.sqrt(target_area * aspect)))
        h = int(round(math.sqrt(target_area / aspect)))

        if 0 < w <= width and 0 < h <= height:
            top = int(torch.randint(0, height - h + 1, size=(1,), generator=generator).item())
            left = int(torch.randint(0, width - w + 1, size=(1,), generator=generator).item())
            return top, left, h, w

    in_ratio = float(width) / float(height)
    if in_ratio < min(ratio):
        w = width
        h = int(round(w / min(ratio)))
    elif in_ratio > max(ratio):
        h = height
        w = int(round(h * max(ratio)))
    else:
        w, h = width, height

    return (height - h) // 2, (width - w) // 2, h, w


def train_view(
    images: ImageBatch,
    resolution: int,
    generator: torch.Generator,
    *,
    scale: Tuple[float, float] = (0.35, 1.0),
    ratio: Tuple[float, float] = (3.0 / 4.0, 4.0 / 3.0),
    hflip_probability: float = 0.5,
    mean: Optional[Sequence[float]] = None,
    std: Optional[Sequence[float]] = None,
    dtype: torch.dtype = torch.float32,
) -> torch.Tensor:
    """
    Randomly crop, resize to `resolution x resolution` and flip every image of the batch independently.
    Output samples keep the order of the input batch.
    :param images: (N, C, H, W) tensor or a sequence of (C, H, W) tensors of possibly different sizes
    :param resolution: Target side length
    :param generator: Source of randomness for crop windows and flips
    :return: (N, C, resolution, resolution) floating point tensor
    """
    views = []
    for image in images:
        image = _as_float(image, dtype)
        top, left, h, w = sample_crop_parameters(
            image.shape[-2], image.shape[-1], generator, scale, ratio
        )
        view = _resize_to(TF.crop(image, top, left, h, w), [resolution, resolution])

        if torch.rand(1, generator=generator).item() < hflip_probability:
            view = TF.hflip(view)

        views.append(view)

    return normalize(torch.stack(views), mean, std)


def eval_resize_size(resolution: int, crop_ratio: float = 0.875) -> int:
    return int(round(resolution / crop_ratio))


def eval_view(
    images: ImageBatch,
    resolution: int,
    *,
    crop_ratio: float = 0.875,
    mean: Optional[Sequence[float]] = None,
    std: Optional[Sequence[float]] = None,
    dtype: torch.dtype = torch.float32,
) -> torch.Tensor:
    """
    Deterministic evaluation view: shorter side resized to `round(resolution / crop_ratio)`, then center crop.
    Accepts a single (C, H, W) image, a batch tensor or a sequence of images.
    """
    if isinstance(images, torch.Tensor) and images.ndim == 3:
        return eval_view(
            images.unsqueeze(0), resolution, crop_ratio=crop_ratio, mean=mean, std=std, dtype=dtype
        ).squeeze(0)

    resize_to = eval_resize_size(resolution, crop_ratio)
    views = []
    for image in images:
        image = _as_float(image, dtype)
        height, width = image.shape[-2:]

        if min(height, width) != resize_to:
            # Shorter side goes to `resize_to`, aspect ratio preserved
            if height <= width:
                size = [resize_to, int(round(width * resize_to / height))]
            else:
                size = [int(round(height * resize_to / width)), resize_to]
            image = _resize_to(image, size)

        views.append(TF.center_crop(image, [resolution, resolution]))

    return normalize(torch.stack(views), mean, std)
