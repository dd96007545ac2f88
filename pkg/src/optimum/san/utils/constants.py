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

# Checkpoint container
CHECKPOINT_FORMAT_VERSION: int = 1
CHECKPOINT_FILENAME = "model.safetensors"
CHECKPOINT_MANIFEST_KEY = "manifest"
SHARED_BN_KEY = "shared"

# Training artifacts
TRAINING_LOG_FILENAME = "training_log.csv"
TRAINING_LOG_COLUMNS = ("step", "lr", "loss_ce", "loss_sd", "loss_total")
INTERMEDIATE_CHECKPOINT_PATTERN = "checkpoint-epoch{epoch:04d}.safetensors"

# Evaluation artifacts
PREDICTIONS_FILENAME = "predictions.safetensors"
MATRIX_CORNER_CELL = "train\\test"
ACCURACY_DECIMALS = 2

# Scale encoding, "0.1 x S / 32" at ImageNet scale
DEFAULT_ENCODING_COEFFICIENT = 0.1
IMAGENET_DOWNSAMPLE_RATE = 32

# Evaluation protocol, resize shorter side to T / 0.875 then center crop T
DEFAULT_EVAL_CROP_RATIO = 0.875

# Desk-scale protocol
DESK_RESOLUTIONS = (32, 24, 16)
DESK_DATASET_HUB_ID = "uoft-cs/cifar10"
DESK_DATASET_MEAN = (0.4914, 0.4822, 0.4465)
DESK_DATASET_STD = (0.2470, 0.2435, 0.2616)

# Environment flags
ENVVAR_DISABLE_PROGRESS = "OPTIMUM_SAN_DISABLE_PROGRESS"
