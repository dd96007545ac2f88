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

from .config import BackboneConfig, DataConfig, SanConfig, TrainingConfig
from .hub import load_checkpoint, save_checkpoint
from .logging import DEFAULT_LOGGING_FMT, setup_logging
from .meta import MetaLearner, ScaleEncoder, encode_scale, generate_kernel, init_meta_params, init_private_kernels
from .models import ScaleAdaptiveNetwork, predict_probs
from .normalization import BNBank, BNSet, calibrate, interpolate, interpolate_or_clamp
from .resolutions import interpolation_weight, nearest_resolution, neighbors
from .runtime import (
    InferenceMode,
    ScaleAdaptiveInference,
    datafree_infer,
    ideal_infer,
    proxy_infer,
)
from .training import fit
from .version import VERSION, __version__
