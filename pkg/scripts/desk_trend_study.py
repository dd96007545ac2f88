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

from argparse import ArgumentParser
from dataclasses import replace
from logging import getLogger
from pathlib import Path

import numpy as np

from optimum.san import SanConfig, fit, setup_logging
from optimum.san.data.datasets import get_dataset
from optimum.san.harness import compare_to_baselines, envelope_report, run_matrix_eval
from optimum.san.runtime import InferenceMode
from optimum.san.utils.cli import parse_resolution_list


LOGGER = getLogger("desk_trend_study")


def with_budget(config: SanConfig, epochs: int, max_train_samples: int, max_eval_samples: int) -> SanConfig:
    training = replace(config.training, epochs=epochs) if epochs else config.training
    data = replace(
        config.data,
        max_train_samples=max_train_samples or config.data.max_train_samples,
        max_eval_samples=max_eval_samples or config.data.max_eval_samples,
    )
    return replace(config, training=training, data=data)


def train_and_evaluate(config: SanConfig, name: str, output_dir: Path, test_resolutions, mode=InferenceMode.PROXY):
    result = fit(config, get_dataset(config.data, "train"), output_dir / name)
    eval_data = get_dataset(config.data, "val")
    matrix, store = run_matrix_eval(result.model, eval_data, test_resolutions, mode, name=name)
    matrix.to_csv(output_dir / name / f"matrix_{mode.value}.csv")
    store.save(output_dir / name / f"predictions_{mode.value}.safetensors")
    return result.model, matrix


if __name__ == "__main__":
    parser = ArgumentParser("Optimum-SAN desk-scale trend study")
    parser.add_argument("--config", type=str, default="configs/desk_tiny_resnet.json", help="SAN configuration.")
    parser.add_argument(
        "--baseline-configs",
        type=str,
        nargs="+",
        default=[f"configs/desk_baseline_{s}.json" for s in (32, 24, 16)],
        help="Individually trained baselines, one training resolution each.",
    )
    parser.add_argument("--output-dir", type=str, required=True, help="Where models and reports are written.")
    parser.add_argument(
        "--test-resolutions",
        type=parse_resolution_list,
        default=(32, 28, 24, 20, 16),
        help="Comma separated test resolutions.",
    )
    parser.add_argument(
        "--interpolated-resolutions",
        type=parse_resolution_list,
        default=(28, 20),
        help="Resolutions where data-free and proxy inference are compared.",
    )
    parser.add_argument("--epochs", type=int, default=0, help="Override the number of epochs of every run.")
    parser.add_argument("--max-train-samples", type=int, default=0, help="Cap the training set size.")
    parser.add_argument("--max-eval-samples", type=int, default=0, help="Cap the evaluation set size.")
    parser.add_argument("--tolerance", type=float, default=1.0, help="Allowed own-resolution gap to baselines.")
    parser.add_argument("--max-datafree-gap", type=float, default=0.5, help="Allowed |datafree - proxy| gap.")
    parser.add_argument("-v", "--verbose", action="store_true", help="Enable debug logging.")

    args = parser.parse_args()
    setup_logging(args.verbose)
    output_dir = Path(args.output_dir)

    budget = (args.epochs, args.max_train_samples, args.max_eval_samples)
    san_config = with_budget(SanConfig.from_json_file(args.config), *budget)
    san, san_matrix = train_and_evaluate(san_config, "san", output_dir, args.test_resolutions)

    baselines = {}
    for path in args.baseline_configs:
        config = with_budget(SanConfig.from_json_file(path), *budget)
        resolution = config.training.resolutions[0]
        _, baselines[resolution] = train_and_evaluate(
            config, f"baseline_{resolution}", output_dir, args.test_resolutions
        )

    envelope_report(
        {"san": san_matrix, **{f"baseline_{s}": m for s, m in baselines.items()}},
        output_dir / "envelope.csv",
        output_dir / "envelope.svg",
        san.spec,
    )

    diagonal, drops = compare_to_baselines(san_matrix, baselines)
    diagonal.to_csv(output_dir / "own_resolution.csv", index=False, float_format="%.2f")

    eval_data = get_dataset(san_config.data, "val")
    datafree, _ = run_matrix_eval(san, eval_data, args.interpolated_resolutions, InferenceMode.DATAFREE)
    proxy, _ = run_matrix_eval(san, eval_data, args.interpolated_resolutions, InferenceMode.PROXY)
    gaps = {
        t: abs(datafree.proxy_selection()[t] - proxy.proxy_selection()[t]) for t in args.interpolated_resolutions
    }

    own_ok = bool(np.all(diagonal["delta"] >= -args.tolerance))
    drop_ok = drops["san"] < drops["baseline"]
    gap_ok = all(gap <= args.max_datafree_gap for gap in gaps.values())

    print(f"Own-resolution accuracy against baselines:\n{diagonal.to_string(index=False)}")
    print(f"Accuracy drop ({drops.name}): SAN {drops['san']:.2f} / baseline {drops['baseline']:.2f}")
    print("Data-free vs proxy gaps: " + ", ".join(f"{t}: {g:.2f}" for t, g in gaps.items()))
    print(f"Own-resolution within tolerance: {own_ok}, milder drop: {drop_ok}, data-free close to proxy: {gap_ok}")

    raise SystemExit(0 if own_ok and drop_ok and gap_ok else 1)
