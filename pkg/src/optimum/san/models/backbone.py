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
from logging import getLogger
from math import prod
from typing import TYPE_CHECKING, Dict, Iterable, Optional, Tuple

from optimum.san.errors import ConfigurationError


if TYPE_CHECKING:
    from optimum.san.config import BackboneConfig


LOGGER = getLogger(__name__)

BLOCK_PLAIN = "plain"
BLOCK_BASIC = "basic"
BLOCK_INVERTED = "inverted"


@dataclass(frozen=True)
class ConvLayerSpec:
    layer_id: int
    in_channels: int
    out_channels: int
    kernel_size: int
    stride: int = 1
    padding: Optional[int] = None
    groups: int = 1

    def __post_init__(self):
        if self.padding is None:
            object.__setattr__(self, "padding", self.kernel_size // 2)

        if self.kernel_size < 1 or self.stride < 1:
            raise ConfigurationError(
                "backbone",
                f"layer {self.layer_id}: kernel_size and stride should be >= 1 "
                f"(got: {self.kernel_size}, {self.stride})",
            )

        if self.groups < 1 or self.in_channels % self.groups or self.out_channels % self.groups:
            raise ConfigurationError(
                "backbone",
                f"layer {self.layer_id}: in_channels ({self.in_channels}) and out_channels ({self.out_channels}) "
                f"should be divisible by groups ({self.groups})",
            )

    @property
    def in_channels_per_group(self) -> int:
        return self.in_channels // self.groups

    @property
    def kernel_shape(self) -> Tuple[int, int, int, int]:
        return (
            self.out_channels,
            self.in_channels_per_group,
            self.kernel_size,
            self.kernel_size,
        )

    @property
    def num_elements(self) -> int:
        return prod(self.kernel_shape)

    @property
    def fan_in(self) -> int:
        return self.in_channels_per_group * self.kernel_size * self.kernel_size

    @property
    def is_depthwise(self) -> bool:
        return self.groups > 1 and self.groups == self.in_channels

    def output_size(self, size: int) -> int:
        return (size + 2 * self.padding - self.kernel_size) // self.stride + 1

    def macs(self, size: int) -> int:
        out = self.output_size(size)
        return out * out * self.out_channels * self.fan_in


@dataclass(frozen=True)
class BlockSpec:
    """
    Wiring of a group of convolutions.

    - plain: conv -> bn -> relu
    - basic: two 3x3 conv/bn with a residual connection (1x1 conv/bn shortcut when shapes change), relu after the sum
    - inverted: 1x1 expand, depthwise, 1x1 linear projection, identity residual when `residual` is set
    """

    kind: str
    convs: Tuple[int, ...]
    shortcut: Optional[int] = None
    residual: bool = False

    @property
    def layer_ids(self) -> Tuple[int, ...]:
        if self.shortcut is None:
            return self.convs
        return self.convs + (self.shortcut,)


@dataclass(frozen=True)
class BackboneSpec:
    name: str
    layers: Tuple[ConvLayerSpec, ...]
    blocks: Tuple[BlockSpec, ...]
    num_classes: int
    in_channels: int

    def __post_init__(self):
        for index, layer in enumerate(self.layers):
            if layer.layer_id != index:
                raise ConfigurationError(
                    "backbone", f"layers should be ordered by id (got: {layer.layer_id} at {index})"
                )

        wired = sorted(i for block in self.blocks for i in block.layer_ids)
        if wired != list(range(len(self.layers))):
            raise ConfigurationError(
                "backbone", "every convolution should be wired to exactly one block"
            )

    @property
    def num_layers(self) -> int:
        return len(self.layers)

    @property
    def bn_channels(self) -> Tuple[int, ...]:
        # One BN site per convolution, indexed like the convolutions
        return tuple(layer.out_channels for layer in self.layers)

    @property
    def feature_channels(self) -> int:
        return self.layers[self.blocks[-1].convs[-1]].out_channels

    @property
    def downsample_rate(self) -> int:
        return prod(self.layers[i].stride for block in self.blocks for i in block.convs)

    @property
    def min_resolution(self) -> int:
        """
        Smallest square input for which every output cell of the stride stack sees at least one real pixel
        """
        return self.downsample_rate

    def feature_sizes(self, resolution: int) -> Dict[int, int]:
        """
        Spatial input size seen by every convolution for a `resolution x resolution` image
        """
        sizes = {}
        size = resolution
        for block in self.blocks:
            block_input = size
            for layer_id in block.convs:
                sizes[layer_id] = size
                size = self.layers[layer_id].output_size(size)

            if block.shortcut is not None:
                sizes[block.shortcut] = block_input

        return sizes

    def to_dict(self) -> Dict:
        return {
            "name": self.name,
            "num_classes": self.num_classes,
            "in_channels": self.in_channels,
            "downsample_rate": self.downsample_rate,
            "layers": [
                [
                    layer.layer_id,
                    layer.in_channels,
                    layer.out_channels,
                    layer.kernel_size,
                    layer.stride,
                    layer.padding,
                    layer.groups,
                ]
                for layer in self.layers
            ],
            "blocks": [
                {"kind": b.kind, "convs": list(b.convs), "shortcut": b.shortcut, "residual": b.residual}
                for b in self.blocks
            ],
        }


def count_flops(spec: BackboneSpec, resolution: int) -> int:
    """
    Multiply-accumulate operations of one forward pass at `resolution x resolution`, FC included
    """
    sizes = spec.feature_sizes(resolution)
    convs = sum(layer.macs(sizes[layer.layer_id]) for layer in spec.layers)
    return convs + spec.feature_channels * spec.num_classes


class _LayerStack:
    def __init__(self):
        self.layers = []
        self.blocks = []

    def conv(self, in_channels: int, out_channels: int, kernel_size: int, stride: int = 1, groups: int = 1) -> int:
        layer_id = len(self.layers)
        self.layers.append(
            ConvLayerSpec(layer_id, in_channels, out_channels, kernel_size, stride, groups=groups)
        )
        return layer_id

    def block(self, kind: str, convs: Iterable[int], shortcut: Optional[int] = None, residual: bool = False):
        self.blocks.append(BlockSpec(kind, tuple(convs), shortcut, residual))


def _stage_strides(config: "BackboneConfig"):
    for width, num_blocks, stride in zip(config.stage_widths, config.blocks_per_stage, config.stage_strides):
        for index in range(num_blocks):
            yield width, stride if index == 0 else 1


def build_backbone_spec(config: "BackboneConfig") -> BackboneSpec:
    stack = _LayerStack()
    k = config.kernel_size

    stem = stack.conv(config.in_channels, config.stem_width, k, config.stem_stride)
    stack.block(BLOCK_PLAIN, (stem,))
    channels = config.stem_width

    for width, stride in _stage_strides(config):
        if config.name == "tiny_resnet":
            first = stack.conv(channels, width, k, stride)
            second = stack.conv(width, width, k)
            shortcut = None
            if stride != 1 or channels != width:
                shortcut = stack.conv(channels, width, 1, stride)
            stack.block(BLOCK_BASIC, (first, second), shortcut, residual=True)

        elif config.name == "tiny_mobile":
            hidden = channels * config.expansion
            expand = stack.conv(channels, hidden, 1)
            depthwise = stack.conv(hidden, hidden, k, stride, groups=hidden)
            project = stack.conv(hidden, width, 1)
            stack.block(
                BLOCK_INVERTED,
                (expand, depthwise, project),
                residual=stride == 1 and channels == width,
            )

        elif config.name == "plain":
            stack.block(BLOCK_PLAIN, (stack.conv(channels, width, k, stride),))

        else:
            raise ConfigurationError("backbone", f"unknown backbone {config.name}")

        channels = width

    spec = BackboneSpec(
        name=config.name,
        layers=tuple(stack.layers),
        blocks=tuple(stack.blocks),
        num_classes=config.num_classes,
        in_channels=config.in_channels,
    )
    LOGGER.debug(
        f"Built {spec.name} backbone: {spec.num_layers} convolutions, downsample rate {spec.downsample_rate}"
    )
    return spec
