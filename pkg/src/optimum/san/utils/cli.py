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

from argparse import ArgumentParser, ArgumentTypeError
from typing import Tuple


def parse_resolution_list(value: str) -> Tuple[int, ...]:
    """
    Parse "32,28,24" into (32, 28, 24)
    """
    try:
        resolutions = tuple(int(item) for item in value.split(",") if item.strip())
    except ValueError:
        raise ArgumentTypeError(f"expected a comma separated list of integers (got: {value})")

    if not resolutions or any(r <= 0 for r in resolutions):
        raise ArgumentTypeError(f"resolutions should be positive integers (got: {value})")

    return resolutions


# Checkpoint and outputs
def register_checkpoint_args(parser: ArgumentParser) -> ArgumentParser:
    parser.add_argument(
        "--checkpoint",
        type=str,
        required=True,
        help="Path to a checkpoint file, a directory saved with save_pretrained or a Hub repository id.",
    )
    return parser


def register_output_args(parser: ArgumentParser, help: str) -> ArgumentParser:
    parser.add_argument("--out", type=str, required=True, help=help)
    return parser


# Evaluation data and inference
def register_eval_data_args(parser: ArgumentParser) -> ArgumentParser:
    parser.add_argument(
        "--eval-data",
        type=str,
        help="Image folder to evaluate on. Defaults to the validation split described by the checkpoint config.",
    )
    parser.add_argument(
        "--max-eval-samples",
        type=int,
        help="Cap the number of evaluation samples.",
    )
    return parser


def register_inference_args(parser: ArgumentParser) -> ArgumentParser:
    parser.add_argument(
        "--inference-mode",
        type=str,
        choices=["ideal", "proxy", "datafree"],
        default="proxy",
        help="How main networks are parameterized for test resolutions.",
    )
    parser.add_argument(
        "--calibration-data",
        type=str,
        help="Image folder used to recalibrate BN statistics (ideal inference).",
    )
    parser.add_argument(
        "--no-calibration",
        action="store_true",
        help="Ideal inference with stored BN statistics (uncalibrated variant).",
    )
    return parser
