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
Privatized batch normalization.

Each training resolution owns a complete `BNSet` (one `BNSite` per convolution). Sets can be recalibrated at any test
resolution with exact dataset-wide statistics, or interpolated between two training resolutions.
"""

import copy
from logging import getLogger
from typing import TYPE_CHECKING, Iterable, Optional, Sequence, Tuple

import pandas as pd
import torch
import torch.nn.functional as F
from torch import nn
from tqdm import tqdm

from optimum.san.errors import InvalidArgumentError, UnknownResolutionError
from optimum.san.lang import ForwardMode
from optimum.san.resolutions import interpolation_weight, nearest_resolution, neighbors
from optimum.san.utils.constants import SHARED_BN_KEY
from optimum.san.utils.env import progress_bars_disabled


if TYPE_CHECKING:
    from optimum.san.models.san import MainNetworkParams


LOGGER = getLogger(__name__)

BN_DUMP_COLUMNS = ("scale", "site_index", "param", "channel_mean")
BN_PARAM_NAMES = ("gamma", "beta", "mu", "sigma2")


class BNSite(nn.Module):
    def __init__(
        self,
        num_channels: int,
        momentum: float = 0.1,
        eps: float = 1e-5,
        dtype: torch.dtype = torch.float32,
    ):
        super().__init__()
        self.num_channels = num_channels
        self.momentum = momentum
        self.eps = eps

        self.weight = nn.Parameter(torch.ones(num_channels, dtype=dtype))
        self.bias = nn.Parameter(torch.zeros(num_channels, dtype=dtype))
        self.register_buffer("running_mean", torch.zeros(num_channels, dtype=dtype))
        self.register_buffer("running_var", torch.ones(num_channels, dtype=dtype))

    def tensors(self) -> Tuple[torch.Tensor, ...]:
        # Same order as BN_PARAM_NAMES
        return self.weight, self.bias, self.running_mean, self.running_var

    def extra_repr(self) -> str:
        return f"{self.num_channels}, momentum={self.momentum}, eps={self.eps}"


class BNSet(nn.ModuleList):
    """
    Ordered BN sites of one parameterization, index `i` normalizes the output of convolution `i`
    """

    @staticmethod
    def create(
        channels: Sequence[int],
        momentum: float = 0.1,
        eps: float = 1e-5,
        dtype: torch.dtype = torch.float32,
    ) -> "BNSet":
        return BNSet(BNSite(c, momentum, eps, dtype) for c in channels)

    def clone(self) -> "BNSet":
        """
        Detached deep copy, gradients are not tracked on the copy
        """
        cloned = copy.deepcopy(self)
        cloned.requires_grad_(False)
        return cloned


class BNBank(nn.Module):
    def __init__(
        self,
        channels: Sequence[int],
        resolutions: Iterable[int],
        share_bn: bool = False,
        momentum: float = 0.1,
        eps: float = 1e-5,
        dtype: torch.dtype = torch.float32,
    ):
        super().__init__()
        self.resolutions = tuple(sorted(resolutions, reverse=True))
        self.share_bn = share_bn

        keys = [SHARED_BN_KEY] if share_bn else [str(s) for s in self.resolutions]
        self.sets = nn.ModuleDict({key: BNSet.create(channels, momentum, eps, dtype) for key in keys})

    def __contains__(self, resolution: int) -> bool:
        return resolution in self.resolutions

    def __getitem__(self, resolution: int) -> BNSet:
        if resolution not in self.resolutions:
            raise UnknownResolutionError(resolution, self.resolutions)

        return self.sets[SHARED_BN_KEY if self.share_bn else str(resolution)]

    def items(self):
        return self.sets.items()

    @property
    def num_sites(self) -> int:
        return len(next(iter(self.sets.values())))


def bn_apply(site: BNSite, x: torch.Tensor, mode: ForwardMode) -> torch.Tensor:
    """
    gamma * (x - m) / sqrt(v + eps) + beta, with (m, v) the batch statistics in train/calibrate mode and the stored
    ones in eval mode. Train mode also folds the batch statistics into the stored ones with `site.momentum`.
    """
    if mode == ForwardMode.TRAIN:
        return F.batch_norm(
            x,
            site.running_mean,
            site.running_var,
            site.weight,
            site.bias,
            training=True,
            momentum=site.momentum,
            eps=site.eps,
        )

    if mode == ForwardMode.CALIBRATE:
        return F.batch_norm(x, None, None, site.weight, site.bias, training=True, eps=site.eps)

    return F.batch_norm(
        x,
        site.running_mean,
        site.running_var,
        site.weight,
        site.bias,
        training=False,
        eps=site.eps,
    )


class StreamingMoments:
    """
    Per-channel count, sum and sum of squares accumulated in float64 over (N, C, H, W) activations
    """

    def __init__(self, num_channels: int):
        self.count = 0
        self.sum = torch.zeros(num_channels, dtype=torch.float64)
        self.sum_of_squares = torch.zeros(num_channels, dtype=torch.float64)

    def update(self, x: torch.Tensor):
        x = x.detach().to(device="cpu", dtype=torch.float64).transpose(0, 1).flatten(1)
        self.count += x.shape[1]
        self.sum += x.sum(dim=1)
        self.sum_of_squares += x.square().sum(dim=1)

    @property
    def mean(self) -> torch.Tensor:
        return self.sum / self.count

    @property
    def variance(self) -> torch.Tensor:
        # Population variance
        return (self.sum_of_squares / self.count - self.mean.square()).clamp_min(0.0)


def calibrate(
    network: nn.Module,
    params: "MainNetworkParams",
    batches: Iterable[torch.Tensor],
    num_batches: Optional[int] = None,
) -> BNSet:
    """
    Replace the statistics of a copy of `params.bn_set` by the exact mean and population variance of every site's
    input over `batches`. `params` should hold kernels generated at the test resolution and `batches` images already
    brought to that resolution. Learned gamma / beta are kept.
    """
    calibrated = params.bn_set.clone()
    working = params.with_bn_set(calibrated)
    moments = [StreamingMoments(site.num_channels) for site in calibrated]

    def observe(site_index: int, x: torch.Tensor):
        moments[site_index].update(x)

    with torch.no_grad():
        for batch in tqdm(batches, desc="Calibrating", total=num_batches, disable=progress_bars_disabled()):
            network(working, batch, mode=ForwardMode.CALIBRATE, observer=observe)

    if moments[0].count == 0:
        raise InvalidArgumentError("calibrate", "calibration set holds no sample")

    for site, site_moments in zip(calibrated, moments):
        site.running_mean.copy_(site_moments.mean)
        site.running_var.copy_(site_moments.variance)

    LOGGER.debug(f"Calibrated {len(calibrated)} BN sites over {moments[0].count} positions per channel")
    return calibrated


def interpolate_sets(lower: BNSet, upper: BNSet, weight: float) -> BNSet:
    """
    `weight * upper + (1 - weight) * lower` for gamma, beta, mu and sigma^2 of every site independently
    """
    interpolated = lower.clone()

    with torch.no_grad():
        for target, low, high in zip(interpolated, lower, upper):
            for destination, a, b in zip(target.tensors(), low.tensors(), high.tensors()):
                destination.copy_(weight * b + (1.0 - weight) * a)

    return interpolated


def interpolate(bank: BNBank, resolution: int) -> BNSet:
    """
    BN set for a resolution strictly between two training resolutions, raises ResolutionRangeError otherwise
    """
    lower, upper = neighbors(resolution, bank.resolutions)
    if bank.share_bn:
        return bank[lower].clone()

    weight = interpolation_weight(resolution, lower, upper)

    LOGGER.debug(f"Interpolating BN for {resolution} between {lower} and {upper} (weight={weight:.4f})")
    return interpolate_sets(bank[lower], bank[upper], weight)


def interpolate_or_clamp(bank: BNBank, resolution: int) -> BNSet:
    """
    Stored set for training resolutions, nearest endpoint outside the training range, interpolation in between
    """
    if bank.share_bn or resolution in bank:
        return bank[nearest_resolution(resolution, bank.resolutions)]

    if resolution >= max(bank.resolutions):
        return bank[max(bank.resolutions)]

    if resolution <= min(bank.resolutions):
        return bank[min(bank.resolutions)]

    return interpolate(bank, resolution)


def bn_dump(bank: BNBank) -> pd.DataFrame:
    """
    Channel-averaged gamma, beta, mu and sigma^2 of every site of every stored set
    """
    rows = []
    for key, bn_set in bank.items():
        for site_index, site in enumerate(bn_set):
            for name, tensor in zip(BN_PARAM_NAMES, site.tensors()):
                rows.append((key, site_index, name, tensor.detach().double().mean().item()))

    return pd.DataFrame(rows, columns=list(BN_DUMP_COLUMNS))
