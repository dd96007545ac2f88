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

from typing import Iterable, Tuple

from optimum.san.errors import InvalidArgumentError, ResolutionRangeError


def _as_sorted(resolutions: Iterable[int]) -> Tuple[int, ...]:
    resolutions = tuple(sorted(set(resolutions)))
    if not resolutions:
        raise InvalidArgumentError("resolution", "the training resolution set is empty")
    return resolutions


def nearest_resolution(resolution: int, resolutions: Iterable[int]) -> int:
    """
    Training resolution closest to `resolution`, ties going to the smaller one
    """
    return min(_as_sorted(resolutions), key=lambda s: (abs(resolution - s), s))


def neighbors(resolution: int, resolutions: Iterable[int]) -> Tuple[int, int]:
    """
    (largest training resolution below, smallest training resolution above) `resolution`
    """
    resolutions = _as_sorted(resolutions)

    if resolution in resolutions:
        raise ResolutionRangeError(resolution, resolutions, "is a training resolution")

    if not resolutions[0] < resolution < resolutions[-1]:
        raise ResolutionRangeError(resolution, resolutions, "lies outside the training range")

    lower = max(s for s in resolutions if s < resolution)
    upper = min(s for s in resolutions if s > resolution)
    return lower, upper


def interpolation_weight(resolution: int, lower: int, upper: int) -> float:
    # Weight of the upper neighbor
    return (resolution - lower) / (upper - lower)
