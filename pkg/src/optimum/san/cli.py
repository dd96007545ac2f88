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
`optimum-san` command line: train, eval, calibrate, report, dump-bn and dump-ratios.
Exit codes: 0 on success, 2 on usage errors, 1 on runtime errors.
"""

import json
from argparse import ArgumentParser, Namespace
from logging import getLogger
from pathlib import Path
from typing import List, Optional

from safetensors.torch import save_file

from optimum.san.config import SanConfig
from optimum.san.data.datasets import get_dataset, get_image_folder
from optimum.san.errors import OptimumSanException
from optimum.san.harness.matrix import PredictionStore, hit_miss_matrix, run_matrix_eval
from optimum.san.harness.reports import (
    envelope_report,
    write_bn_dump,
    write_hit_miss,
    write_ratio_report,
)
from optimum.san.hub import load_checkpoint
from optimum.san.logging import setup_logging
from optimum.san.models.san import ScaleAdaptiveNetwork
from optimum.san.runtime import InferenceMode, ScaleAdaptiveInference
from optimum.san.training.trainer import fit
from optimum.san.utils.cli import (
    parse_resolution_list,
    register_checkpoint_args,
    register_eval_data_args,
    register_inference_args,
    register_output_args,
)
from optimum.san.utils.constants import PREDICTIONS_FILENAME


LOGGER = getLogger(__name__)

CHECKPOINT_SUFFIX = ".safetensors"


def load_model(reference: str) -> ScaleAdaptiveNetwork:
    """
    Checkpoint file, directory written by `save_pretrained` or Hub repository id
    """
    path = Path(reference)
    if path.is_file() or path.suffix == CHECKPOINT_SUFFIX:
        return load_checkpoint(path)
    return ScaleAdaptiveNetwork.from_pretrained(reference).eval()


def _eval_handle(model: ScaleAdaptiveNetwork, args: Namespace):
    if args.eval_data:
        handle = get_image_folder(args.eval_data, model.config.data.val_split)
    else:
        handle = get_dataset(model.config.data, "val")

    if args.max_eval_samples:
        handle = handle.subset(args.max_eval_samples)
    return handle


def _train(args: Namespace, parser: ArgumentParser) -> int:
    config = SanConfig.from_json_file(args.config)
    result = fit(config, get_dataset(config.data, "train"), args.output_dir)
    LOGGER.info(f"Final checkpoint: {result.checkpoint}")
    return 0


def _eval(args: Namespace, parser: ArgumentParser) -> int:
    model = load_model(args.checkpoint)
    mode = InferenceMode(args.inference_mode)
    calibrate = not args.no_calibration

    unseen = [t for t in args.test_resolutions if t not in model.resolutions]
    if mode == InferenceMode.IDEAL and calibrate and unseen and not args.calibration_data:
        parser.error(
            f"--inference-mode ideal requires --calibration-data for test resolutions outside the training "
            f"resolutions {list(model.resolutions)} (got: {unseen})"
        )

    calibration = get_image_folder(args.calibration_data, "train") if args.calibration_data else None
    matrix, store = run_matrix_eval(
        model,
        _eval_handle(model, args),
        args.test_resolutions,
        mode,
        calibration_data=calibration,
        calibrate=calibrate,
        name=args.name,
    )

    out = Path(args.out)
    matrix.to_csv(out)
    store.save(args.predictions or out.parent / f"{out.stem}.{PREDICTIONS_FILENAME}")

    LOGGER.info(f"Proxy selection:\n{matrix.proxy_selection().to_string()}")
    return 0


def _calibrate(args: Namespace, parser: ArgumentParser) -> int:
    model = load_model(args.checkpoint)
    runtime = ScaleAdaptiveInference(model, get_image_folder(args.calibration_data, "train"))

    bn_key = runtime.nearest(args.resolution)
    bn_set = runtime.calibrated_bn_set(args.resolution, bn_key)

    tensors = {
        f"{index}.{name}": tensor.detach().contiguous()
        for index, site in enumerate(bn_set)
        for name, tensor in zip(("weight", "bias", "running_mean", "running_var"), site.tensors())
    }
    metadata = {"resolution": args.resolution, "bn_key": bn_key, "model_hash": runtime.model_hash}
    try:
        save_file(tensors, args.out, metadata={"calibration": json.dumps(metadata, sort_keys=True)})
    except OSError as e:
        raise OSError(f"Unable to write calibrated statistics {args.out}: {e}") from e

    LOGGER.info(f"Wrote BN statistics calibrated at {args.resolution} to {args.out}")
    return 0


def _report(args: Namespace, parser: ArgumentParser) -> int:
    out_dir = Path(args.out_dir)
    spec = load_model(args.checkpoint).spec if args.checkpoint else None

    matrices = {}
    for path in args.predictions:
        store = PredictionStore.load(path)
        label = f"{store.name}/{store.mode}"
        if label in matrices:
            label = f"{label}#{len(matrices)}"

        matrix = store.to_matrix()
        matrices[label] = matrix
        stem = label.replace("/", "_").replace("#", "_")
        matrix.to_csv(out_dir / f"matrix_{stem}.csv")

        if all(row in store.columns for row in store.rows):
            write_hit_miss(hit_miss_matrix(store), out_dir / f"hit_miss_{stem}.csv")
        else:
            LOGGER.warning(f"{path} lacks own-resolution cells, skipping its hit-miss matrix")

    envelope_report(matrices, out_dir / "envelope.csv", out_dir / "envelope.svg", spec)
    return 0


def _dump_bn(args: Namespace, parser: ArgumentParser) -> int:
    write_bn_dump(load_model(args.checkpoint).bn, args.out)
    return 0


def _dump_ratios(args: Namespace, parser: ArgumentParser) -> int:
    write_ratio_report(load_model(args.checkpoint).meta, args.out)
    return 0


def build_parser() -> ArgumentParser:
    parser = ArgumentParser("optimum-san", description="Scale adaptive networks: training, inference and reports")
    parser.add_argument("-v", "--verbose", action="store_true", help="Enable debug logging.")
    commands = parser.add_subparsers(dest="command", required=True)

    train = commands.add_parser("train", help="Train a model from a JSON configuration.")
    train.add_argument("--config", type=str, required=True, help="Path to the JSON configuration.")
    train.add_argument("--output-dir", type=str, required=True, help="Where checkpoints and logs are written.")
    train.set_defaults(func=_train)

    evaluate = commands.add_parser("eval", help="Evaluate an accuracy matrix over test resolutions.")
    register_checkpoint_args(evaluate)
    evaluate.add_argument(
        "--test-resolutions",
        type=parse_resolution_list,
        required=True,
        help="Comma separated test resolutions, e.g. 32,28,24,20,16.",
    )
    register_inference_args(evaluate)
    register_eval_data_args(evaluate)
    register_output_args(evaluate, help="Accuracy matrix CSV.")
    evaluate.add_argument("--predictions", type=str, help="Where raw predictions are stored.")
    evaluate.add_argument("--name", type=str, default="san", help="Model name used in reports.")
    evaluate.set_defaults(func=_eval)

    calibrate = commands.add_parser("calibrate", help="Recalibrate BN statistics at a test resolution.")
    register_checkpoint_args(calibrate)
    calibrate.add_argument("--resolution", type=int, required=True, help="Test resolution.")
    calibrate.add_argument("--calibration-data", type=str, required=True, help="Image folder to calibrate on.")
    register_output_args(calibrate, help="Output safetensors file holding the calibrated BN set.")
    calibrate.set_defaults(func=_calibrate)

    report = commands.add_parser("report", help="Build matrices, hit-miss and envelope from stored predictions.")
    report.add_argument("--predictions", type=str, nargs="+", required=True, help="Prediction files.")
    report.add_argument("--out-dir", type=str, required=True, help="Where reports are written.")
    report.add_argument("--checkpoint", type=str, help="Checkpoint used to annotate compute cost.")
    report.set_defaults(func=_report)

    dump_bn = commands.add_parser("dump-bn", help="Channel-averaged BN parameters per scale and site.")
    register_checkpoint_args(dump_bn)
    register_output_args(dump_bn, help="Output CSV.")
    dump_bn.set_defaults(func=_dump_bn)

    dump_ratios = commands.add_parser("dump-ratios", help="Weight / bias magnitude ratio of every meta learner.")
    register_checkpoint_args(dump_ratios)
    register_output_args(dump_ratios, help="Output CSV.")
    dump_ratios.set_defaults(func=_dump_ratios)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()

    try:
        args = parser.parse_args(argv)
        setup_logging(args.verbose)
        return args.func(args, parser)
    except SystemExit as e:
        # argparse exits with 2 on usage errors and 0 on --help
        return e.code if isinstance(e.code, int) else 0
    except (OptimumSanException, OSError) as e:
        LOGGER.error(f"{e}")
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
