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
Synthetic oriented-stripe images.

Class `c` is a sinusoidal grating oriented at `pi * c / num_classes` with a fixed number of cycles per image.
Frequencies are expressed per image rather than per pixel, so the class survives any resize of the image.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np
import torch


@dataclass
class SyntheticSpec:
    num_classes: int = 4
    samples_per_class: int = 64
    base_resolution: int = 32
    cycles_per_image: float = 3.0
    noise: float = 0.05
    in_channels: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.num_classes < 2:
            raise ValueError(f"num_classes should be >= 2 (got: {self.num_classes})")

        if self.samples_per_class < 1:
            raise ValueError(
                f"samples_per_class should be >= 1 (got: {self.samples_per_class})"
            )

        if self.base_resolution < 4:
            raise ValueError(
                f"base_resolution should be >= 4 (got: {self.base_resolution})"
            )

        if self.cycles_per_image <= 0:
            raise ValueError(
                f"cycles_per_image should be > 0 (got: {self.cycles_per_image})"
            )

    @property
    def num_samples(self) -> int:
        return self.num_classes * self.samples_per_class

    def orientation(self, label: int) -> float:
        return np.pi * label / self.num_classes


def _grid(height: int, width: int) -> Tuple[np.ndarray, np.ndarray]:
    # Pixel centers in [0, 1), x along columns and y along rows
    ys = (np.arange(height) + 0.5) / height
    xs = (np.arange(width) + 0.5) / width
    return np.meshgrid(ys, xs, indexing="ij")


def generate_stripes(spec: SyntheticSpec, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Draw `spec.num_samples` images as uint8 arrays shaped (N, C, H, W) along with their labels
    """
    rng = np.random.default_rng(seed)
    labels = np.repeat(np.arange(spec.num_classes), spec.samples_per_class)
    angles = np.pi * labels / spec.num_classes
    phases = rng.uniform(0.0, 2.0 * np.pi, size=labels.shape[0])
    contrast = rng.uniform(0.6, 1.0, size=(labels.shape[0], spec.in_channels))

    ys, xs = _grid(spec.base_resolution, spec.base_resolution)
    projection = (
        np.cos(angles)[:, None, None] * xs[None] + np.sin(angles)[:, None, None] * ys[None]
    )
    wave = np.sin(2.0 * np.pi * spec.cycles_per_image * projection + phases[:, None, None])

    images = 0.5 + 0.35 * contrast[:, :, None, None] * wave[:, None]
    images += rng.normal(0.0, spec.noise, size=images.shape)
    images = np.clip(np.rint(images * 255.0), 0, 255).astype(np.uint8)

    return images, labels


def synthetic_label_rule(image: torch.Tensor, spec: SyntheticSpec) -> int:
    """
    Recover the class of a stripe image at any resolution.
    The image is projected onto the complex grating of every class and the strongest response wins.
    :param image: (C, H, W) tensor, uint8 or floating point
    :param spec: Parameters the image was generated with
    :return: The recovered label
    """
    gray = image.to(torch.float64).mean(dim=0).numpy()
    gray = gray - gray.mean()
    ys, xs = _grid(*gray.shape)

    responses = []
    for label in range(spec.num_classes):
        angle = spec.orientation(label)
        phase = 2.0 * np.pi * spec.cycles_per_image * (np.cos(angle) * xs + np.sin(angle) * ys)
        responses.append(np.abs(np.sum(gray * np.exp(-1j * phase))))

    return int(np.argmax(responses))
