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

from dataclasses import dataclass, replace
from logging import getLogger
from pathlib import Path
from typing import Callable, Dict, Iterator, List, Optional, Union

import torch
import torch.nn.functional as F
from huggingface_hub import ModelHubMixin, hf_hub_download
from torch import nn

from optimum.san.config import SanConfig
from optimum.san.errors import ConfigurationError, InvalidInputError
from optimum.san.lang import ForwardMode
from optimum.san.meta import GeneratedKernel, ScaleEncoder, generate_kernel, init_meta_params, init_private_kernels
from optimum.san.models.backbone import (
    BLOCK_BASIC,
    BLOCK_INVERTED,
    BLOCK_PLAIN,
    BackboneSpec,
    build_backbone_spec,
)
from optimum.san.normalization import BNBank, BNSet, bn_apply
from optimum.san.utils.constants import CHECKPOINT_FILENAME
from optimum.san.utils.hub import get_user_agent


LOGGER = getLogger(__name__)

# Called with (site_index, pre-normalization activations)
SiteObserver = Callable[[int, torch.Tensor], None]


@dataclass
class MainNetworkParams:
    """
    Fully parameterized main network: generated kernels, one BN set and the shared classifier
    """

    encoding: float
    bn_key: int
    kernels: List[GeneratedKernel]
    bn_set: BNSet
    fc: nn.Linear

    def with_bn_set(self, bn_set: BNSet) -> "MainNetworkParams":
        return replace(self, bn_set=bn_set)


def predict_probs(logits: torch.Tensor) -> torch.Tensor:
    # softmax subtracts the row max internally
    return torch.softmax(logits, dim=-1)


class ScaleAdaptiveNetwork(nn.Module, ModelHubMixin):
    """
    Meta learners for every convolution, one BN set per training resolution and a classifier shared by all
    resolutions. Calling the module runs a main network previously assembled with `parameterize`.
    """

    def __init__(self, config: SanConfig):
        super().__init__()

        self.config = config
        self.spec: BackboneSpec = build_backbone_spec(config.backbone)

        backbone, training = config.backbone, config.training
        dtype = training.torch_dtype

        self.encoder = ScaleEncoder(
            backbone.encoding_coefficient,
            backbone.downsample_rate or self.spec.downsample_rate,
        )
        if training.privatize_conv:
            self.meta = nn.ModuleList()
            self.private_kernels = init_private_kernels(self.spec, training.resolutions, training.seed, dtype)
        else:
            self.meta = init_meta_params(self.spec, backbone.hidden_units, training.seed, dtype)
            self.private_kernels = None

        self.bn = BNBank(
            self.spec.bn_channels,
            training.resolutions,
            share_bn=training.share_bn,
            momentum=training.bn_momentum,
            eps=training.bn_eps,
            dtype=dtype,
        )
        self.fc = nn.Linear(self.spec.feature_channels, self.spec.num_classes, dtype=dtype)
        self._reset_classifier(training.seed)

    @torch.no_grad()
    def _reset_classifier(self, seed: int):
        generator = torch.Generator().manual_seed(seed + 1)
        bound = self.spec.feature_channels ** -0.5
        self.fc.weight.copy_(torch.rand(self.fc.weight.shape, generator=generator) * 2 * bound - bound)
        self.fc.bias.zero_()

    @property
    def resolutions(self):
        return self.config.training.resolutions

    @property
    def dtype(self) -> torch.dtype:
        return self.fc.weight.dtype

    @property
    def privatized(self) -> bool:
        return self.private_kernels is not None

    def meta_parameters(self) -> Iterator[nn.Parameter]:
        return self.meta.parameters()

    def kernel_parameters(self) -> Iterator[nn.Parameter]:
        return self.private_kernels.parameters() if self.privatized else self.meta_parameters()

    def bn_parameters(self) -> Iterator[nn.Parameter]:
        return self.bn.parameters()

    def fc_parameters(self) -> Iterator[nn.Parameter]:
        return self.fc.parameters()

    def encode(self, resolution: int) -> float:
        return self.encoder.encode(resolution)

    def parameterize(
        self,
        encoding: float,
        bn_key: int,
        bn_set: Optional[BNSet] = None,
    ) -> MainNetworkParams:
        """
        Assemble the main network for `encoding`, normalized by the BN set stored for training resolution `bn_key`
        unless an explicit `bn_set` is given (calibrated or interpolated). Kernels stay attached to the autograd
        graph of the meta learners. Private kernels, when enabled, come from `bn_key` and ignore the encoding.
        """
        stored = self.bn[bn_key]
        bn_set = bn_set if bn_set is not None else stored

        if self.privatized:
            if str(bn_key) not in self.private_kernels:
                raise ConfigurationError(
                    "parameterize",
                    f"private kernels are stored for {list(self.resolutions)} only (got: {bn_key})",
                )

            kernels = [
                GeneratedKernel(layer.layer_id, kernel)
                for layer, kernel in zip(self.spec.layers, self.private_kernels[str(bn_key)])
            ]
            return MainNetworkParams(encoding, bn_key, kernels, bn_set, self.fc)

        if len(self.meta) != self.spec.num_layers:
            raise ConfigurationError(
                "parameterize",
                f"backbone has {self.spec.num_layers} convolutions but {len(self.meta)} meta learners are loaded",
            )

        kernels = [
            generate_kernel(learner, encoding, layer.kernel_shape)
            for learner, layer in zip(self.meta, self.spec.layers)
        ]
        return MainNetworkParams(encoding, bn_key, kernels, bn_set, self.fc)

    def parameterize_at(self, resolution: int) -> MainNetworkParams:
        return self.parameterize(self.encode(resolution), resolution)

    def _check_input(self, images: torch.Tensor):
        if images.ndim != 4:
            raise InvalidInputError(
                "forward", f"images should be shaped (N, C, H, W) (got: {tuple(images.shape)})"
            )

        _, channels, height, width = images.shape
        if channels != self.spec.in_channels:
            raise InvalidInputError(
                "forward", f"images should have {self.spec.in_channels} channels (got: {channels})"
            )

        if height != width:
            raise InvalidInputError("forward", f"images should be square (got: {height}x{width})")

        if height < self.spec.min_resolution:
            raise InvalidInputError(
                "forward",
                f"images should be at least {self.spec.min_resolution}x{self.spec.min_resolution} "
                f"to go through the stride stack (got: {height}x{width})",
            )

    def forward(
        self,
        params: MainNetworkParams,
        images: torch.Tensor,
        mode: Union[str, ForwardMode] = ForwardMode.EVAL,
        observer: Optional[SiteObserver] = None,
    ) -> torch.Tensor:
        self._check_input(images)
        mode = ForwardMode(mode)
        layers = self.spec.layers

        def conv_bn(x: torch.Tensor, layer_id: int, relu: bool) -> torch.Tensor:
            layer = layers[layer_id]
            x = F.conv2d(
                x,
                params.kernels[layer_id].tensor,
                stride=layer.stride,
                padding=layer.padding,
                groups=layer.groups,
            )

            if observer is not None:
                observer(layer_id, x)

            x = bn_apply(params.bn_set[layer_id], x, mode)
            return F.relu(x) if relu else x

        x = images.to(self.dtype)
        for block in self.spec.blocks:
            if block.kind == BLOCK_PLAIN:
                x = conv_bn(x, block.convs[0], relu=True)

            elif block.kind == BLOCK_BASIC:
                first, second = block.convs
                out = conv_bn(conv_bn(x, first, relu=True), second, relu=False)
                identity = x if block.shortcut is None else conv_bn(x, block.shortcut, relu=False)
                x = F.relu(out + identity)

            elif block.kind == BLOCK_INVERTED:
                expand, depthwise, project = block.convs
                out = conv_bn(conv_bn(conv_bn(x, expand, True), depthwise, True), project, False)
                x = out + x if block.residual else out

            else:
                raise ConfigurationError("forward", f"unknown block kind {block.kind}")

        # Global average pooling absorbs the input resolution
        features = x.mean(dim=(2, 3))
        return F.linear(features, params.fc.weight, params.fc.bias)

    def logits_at(
        self,
        images: torch.Tensor,
        resolution: int,
        mode: Union[str, ForwardMode] = ForwardMode.EVAL,
    ) -> torch.Tensor:
        """
        Forward through the main network of training resolution `resolution`
        """
        return self(self.parameterize_at(resolution), images, mode=mode)

    predict_probs = staticmethod(predict_probs)

    def _save_pretrained(self, save_directory: Path) -> None:
        from optimum.san.hub import save_checkpoint

        save_checkpoint(self, Path(save_directory) / CHECKPOINT_FILENAME)

    @classmethod
    def _from_pretrained(
        cls,
        *,
        model_id: str,
        revision: Optional[str] = None,
        cache_dir: Optional[Union[str, Path]] = None,
        force_download: bool = False,
        proxies: Optional[Dict] = None,
        resume_download: Optional[bool] = None,
        local_files_only: bool = False,
        token: Optional[Union[str, bool]] = None,
        **model_kwargs,
    ) -> "ScaleAdaptiveNetwork":
        from optimum.san.hub import load_checkpoint

        # The checkpoint manifest carries the configuration
        model_kwargs.pop("config", None)

        if (local_path := Path(model_id)).is_dir():
            checkpoint = local_path / CHECKPOINT_FILENAME
        else:
            LOGGER.debug(f"Retrieving {CHECKPOINT_FILENAME} from the Hub ({model_id}@{revision})")
            checkpoint = hf_hub_download(
                repo_id=model_id,
                filename=CHECKPOINT_FILENAME,
                revision=revision,
                cache_dir=cache_dir,
                force_download=force_download,
                proxies=proxies,
                local_files_only=local_files_only,
                token=token,
                user_agent=get_user_agent(),
            )

        return load_checkpoint(checkpoint)
