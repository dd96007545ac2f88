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
Scale encoding and per-layer meta learners.

Every convolution of the backbone owns a meta learner mapping the scalar scale encoding of the input resolution to
its full kernel. Main networks for any resolution are obtained by evaluating all meta learners at that encoding.
"""

import math
from dataclasses import dataclass
from logging import getLogger
from typing import TYPE_CHECKING, Iterable, NamedTuple, Optional, Sequence, Tuple, Union

import pandas as pd
import torch
from torch import nn

from optimum.san.errors import ConfigurationError, InvalidArgumentError
from optimum.san.utils.constants import DEFAULT_ENCODING_COEFFICIENT, IMAGENET_DOWNSAMPLE_RATE


if TYPE_CHECKING:
    from optimum.san.models.backbone import BackboneSpec


LOGGER = getLogger(__name__)

RATIO_REPORT_COLUMNS = ("layer_id", "ratio")


@dataclass(frozen=True)
class ScaleEncoder:
    """
    Linear map from a resolution S (pixels) to the encoding `coefficient * S / downsample_rate`
    """

    coefficient: float = DEFAULT_ENCODING_COEFFICIENT
    downsample_rate: int = IMAGENET_DOWNSAMPLE_RATE

    def __post_init__(self):
        if self.coefficient <= 0:
            raise InvalidArgumentError(
                "encode", f"coefficient should be > 0 (got: {self.coefficient})"
            )

        if self.downsample_rate <= 0:
            raise InvalidArgumentError(
                "encode", f"downsample_rate should be > 0 (got: {self.downsample_rate})"
            )

    def encode(self, resolution: int) -> float:
        if isinstance(resolution, bool) or int(resolution) != resolution or resolution <= 0:
            raise InvalidArgumentError(
                "encode", f"resolution should be a positive integer (got: {resolution})"
            )
        return self.coefficient * resolution / self.downsample_rate

    __call__ = encode


def encode_scale(
    resolution: int,
    coefficient: float = DEFAULT_ENCODING_COEFFICIENT,
    downsample_rate: int = IMAGENET_DOWNSAMPLE_RATE,
) -> float:
    return ScaleEncoder(coefficient, downsample_rate).encode(resolution)


class GeneratedKernel(NamedTuple):
    layer_id: int
    tensor: torch.Tensor


class MetaLearner(nn.Module):
    """
    Maps a scale encoding to the flattened kernel of one convolution.

    Linear: `eps * weight + bias`.
    With `hidden_units > 0`: `relu(eps * hidden_weight + hidden_bias) @ weight + bias`.
    """

    def __init__(
        self,
        layer_id: int,
        kernel_shape: Sequence[int],
        hidden_units: int = 0,
        dtype: torch.dtype = torch.float32,
    ):
        super().__init__()

        if hidden_units < 0:
            raise InvalidArgumentError(
                "meta", f"hidden_units should be >= 0 (got: {hidden_units})"
            )

        self.layer_id = layer_id
        self.kernel_shape = tuple(kernel_shape)
        self.hidden_units = hidden_units

        num_elements = math.prod(self.kernel_shape)
        if hidden_units:
            self.hidden_weight = nn.Parameter(torch.empty(hidden_units, dtype=dtype))
            self.hidden_bias = nn.Parameter(torch.empty(hidden_units, dtype=dtype))
            self.weight = nn.Parameter(torch.empty(hidden_units, num_elements, dtype=dtype))
        else:
            self.register_parameter("hidden_weight", None)
            self.register_parameter("hidden_bias", None)
            self.weight = nn.Parameter(torch.empty(num_elements, dtype=dtype))

        self.bias = nn.Parameter(torch.empty(num_elements, dtype=dtype))

    @property
    def num_elements(self) -> int:
        return self.bias.numel()

    @property
    def fan_in(self) -> int:
        return math.prod(self.kernel_shape[1:])

    @torch.no_grad()
    def reset_parameters(self, generator: Optional[torch.Generator] = None):
        """
        Fan-in scaled normal initialization, variance 2 / (C_in_per_group * K * K).
        The hidden variant draws its first layer from a standard normal and shrinks the output weights by the hidden
        width so generated kernels keep the same order of magnitude.
        """
        std = math.sqrt(2.0 / self.fan_in)

        if self.hidden_units:
            self.hidden_weight.copy_(torch.randn(self.hidden_weight.shape, generator=generator))
            self.hidden_bias.copy_(torch.randn(self.hidden_bias.shape, generator=generator))
            self.weight.copy_(
                torch.randn(self.weight.shape, generator=generator) * std / math.sqrt(self.hidden_units)
            )
        else:
            self.weight.copy_(torch.randn(self.weight.shape, generator=generator) * std)

        self.bias.copy_(torch.randn(self.bias.shape, generator=generator) * std)

    def forward(self, encoding: Union[float, torch.Tensor]) -> torch.Tensor:
        encoding = torch.as_tensor(encoding, dtype=self.bias.dtype, device=self.bias.device)

        if self.hidden_units:
            hidden = torch.relu(encoding * self.hidden_weight + self.hidden_bias)
            return hidden @ self.weight + self.bias

        return encoding * self.weight + self.bias

    def extra_repr(self) -> str:
        return f"layer_id={self.layer_id}, kernel_shape={self.kernel_shape}, hidden_units={self.hidden_units}"


def generate_kernel(
    learner: MetaLearner,
    encoding: Union[float, torch.Tensor],
    kernel_shape: Optional[Tuple[int, ...]] = None,
) -> GeneratedKernel:
    """
    Evaluate `learner` at `encoding` and reshape its output to `kernel_shape` (defaults to the learner's own).
    The result stays attached to the autograd graph of the learner parameters.
    """
    kernel_shape = tuple(kernel_shape or learner.kernel_shape)
    expected = math.prod(kernel_shape)

    if learner.num_elements != expected:
        raise ConfigurationError.kernel_shape(learner.layer_id, expected, learner.num_elements)

    return GeneratedKernel(learner.layer_id, learner(encoding).view(kernel_shape))


def init_meta_params(
    spec: "BackboneSpec",
    hidden_units: int = 0,
    seed: int = 0,
    dtype: torch.dtype = torch.float32,
) -> nn.ModuleList:
    """
    One meta learner per convolution of `spec` (stem and shortcut convolutions included), in layer order.
    Initialization only depends on `seed`.
    """
    generator = torch.Generator().manual_seed(seed)
    learners = nn.ModuleList()

    for layer in spec.layers:
        learner = MetaLearner(layer.layer_id, layer.kernel_shape, hidden_units, dtype)
        learner.reset_parameters(generator)
        learners.append(learner)

    LOGGER.debug(
        f"Initialized {len(learners)} meta learners "
        f"({sum(p.numel() for p in learners.parameters())} parameters, hidden_units={hidden_units})"
    )
    return learners


def weight_bias_ratio(learner: MetaLearner) -> float:
    # Output layer of the hidden variant
    weight = learner.weight.detach().abs().mean().item()
    bias = learner.bias.detach().abs().mean().item()
    return math.inf if bias == 0.0 else weight / bias


def weight_bias_ratio_report(learners: Iterable[MetaLearner]) -> pd.DataFrame:
    """
    mean(|W_l|) / mean(|b_l|) for every layer, `inf` when the bias is all zeros
    """
    rows = [(learner.layer_id, weight_bias_ratio(learner)) for learner in learners]
    return pd.DataFrame(rows, columns=list(RATIO_REPORT_COLUMNS))


def init_private_kernels(
    spec: "BackboneSpec",
    resolutions: Iterable[int],
    seed: int = 0,
    dtype: torch.dtype = torch.float32,
) -> nn.ModuleDict:
    """
    Meta-learner-free variant: every training resolution owns its own kernels for every convolution, keyed like the
    BN bank. Kernels are drawn with the same fan-in scaled normal as the meta learner weights.
    """
    generator = torch.Generator().manual_seed(seed)
    private = nn.ModuleDict()

    for resolution in resolutions:
        kernels = nn.ParameterList()
        for layer in spec.layers:
            std = math.sqrt(2.0 / math.prod(layer.kernel_shape[1:]))
            kernels.append(nn.Parameter(torch.randn(layer.kernel_shape, generator=generator).to(dtype) * std))
        private[str(resolution)] = kernels

    LOGGER.debug(
        f"Initialized private kernels for {len(private)} resolutions "
        f"({sum(p.numel() for p in private.parameters())} parameters)"
    )
    return private
