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

import json
from pathlib import Path

import pandas as pd
import pytest
from safetensors import safe_open

from optimum.san.cli import main
from optimum.san.data import export_image_folder, make_synthetic
from optimum.san.harness import AccuracyMatrix, PredictionStore
from optimum.san.utils.constants import CHECKPOINT_FILENAME
from optimum.san.utils.tests import tiny_config


@pytest.fixture(scope="module")
def workspace(tmp_path_factory) -> Path:
    root = tmp_path_factory.mktemp("cli")
    config = tiny_config()
    root.joinpath("config.json").write_text(json.dumps(config.to_dict()))

    export_image_folder(make_synthetic(config.data.synthetic, "train"), root / "calibration")
    export_image_folder(make_synthetic(config.data.synthetic, "val"), root / "eval")

    assert main(["train", "--config", str(root / "config.json"), "--output-dir", str(root / "run")]) == 0
    return root


@pytest.fixture(scope="module")
def checkpoint(workspace) -> str:
    return str(workspace / "run" / CHECKPOINT_FILENAME)


def test_usage_errors():
    assert main(["--help"]) == 0
    assert main([]) == 2
    assert main(["eval", "--checkpoint", "model.safetensors"]) == 2
    assert main(["eval", "--checkpoint", "m", "--test-resolutions", "32,x", "--out", "m.csv"]) == 2


def test_train_outputs(workspace):
    assert workspace.joinpath("run", CHECKPOINT_FILENAME).is_file()


def test_eval_proxy(checkpoint, tmp_path):
    out = tmp_path / "proxy" / "matrix.csv"
    assert main(["eval", "--checkpoint", checkpoint, "--test-resolutions", "32,28,24,20,16", "--out", str(out)]) == 0

    matrix = AccuracyMatrix.from_csv(out)
    assert matrix.rows == (32, 24, 16)
    assert matrix.columns == (32, 28, 24, 20, 16)

    store = PredictionStore.load(tmp_path / "proxy" / "matrix.predictions.safetensors")
    assert store.mode == "proxy" and store.name == "san"


def test_ideal_requires_calibration_data(checkpoint, tmp_path):
    out = tmp_path / "matrix.csv"
    args = ["eval", "--checkpoint", checkpoint, "--test-resolutions", "32,20", "--inference-mode", "ideal"]

    assert main(args + ["--out", str(out)]) == 2
    assert not out.exists()

    # Training resolutions only or uncalibrated statistics need no data
    assert main(["eval", "--checkpoint", checkpoint, "--test-resolutions", "32,16", "--inference-mode", "ideal",
                 "--out", str(out)]) == 0
    assert main(args + ["--no-calibration", "--out", str(out)]) == 0


def test_eval_ideal_on_image_folders(workspace, checkpoint, tmp_path):
    out = tmp_path / "ideal.csv"
    predictions = tmp_path / "ideal.safetensors"
    args = [
        "eval",
        "--checkpoint", checkpoint,
        "--test-resolutions", "28,20",
        "--inference-mode", "ideal",
        "--calibration-data", str(workspace / "calibration"),
        "--eval-data", str(workspace / "eval"),
        "--max-eval-samples", "16",
        "--predictions", str(predictions),
        "--name", "tiny",
    ]
    assert main(args + ["--out", str(out)]) == 0

    store = PredictionStore.load(predictions)
    assert store.name == "tiny" and store.mode == "ideal"
    assert len(store.labels) == 16


def test_report(checkpoint, tmp_path):
    for mode in ("proxy", "datafree"):
        assert main(
            [
                "eval",
                "--checkpoint", checkpoint,
                "--test-resolutions", "32,28,24,20,16",
                "--inference-mode", mode,
                "--out", str(tmp_path / f"{mode}.csv"),
            ]
        ) == 0

    out_dir = tmp_path / "reports"
    predictions = [str(tmp_path / f"{mode}.predictions.safetensors") for mode in ("proxy", "datafree")]
    assert main(["report", "--predictions", *predictions, "--out-dir", str(out_dir), "--checkpoint", checkpoint]) == 0

    envelope = pd.read_csv(out_dir / "envelope.csv")
    assert list(envelope.columns) == ["model", "parameterization", "test_resolution", "accuracy", "mflops"]
    assert set(envelope["model"]) == {"san/proxy", "san/datafree"}
    assert (out_dir / "envelope.svg").is_file()

    for stem in ("san_proxy", "san_datafree"):
        assert (out_dir / f"matrix_{stem}.csv").is_file()
        hit_miss = pd.read_csv(out_dir / f"hit_miss_{stem}.csv", index_col=0)
        assert hit_miss.shape == (3, 3)


def test_dumps(checkpoint, tmp_path):
    assert main(["dump-bn", "--checkpoint", checkpoint, "--out", str(tmp_path / "bn.csv")]) == 0
    assert main(["dump-ratios", "--checkpoint", checkpoint, "--out", str(tmp_path / "ratios.csv")]) == 0

    assert set(pd.read_csv(tmp_path / "bn.csv")["scale"].astype(str)) == {"32", "24", "16"}
    assert list(pd.read_csv(tmp_path / "ratios.csv").columns) == ["layer_id", "ratio"]


def test_calibrate(workspace, checkpoint, tmp_path):
    out = tmp_path / "bn_20.safetensors"
    args = ["calibrate", "--checkpoint", checkpoint, "--resolution", "20"]
    assert main(args + ["--calibration-data", str(workspace / "calibration"), "--out", str(out)]) == 0

    with safe_open(str(out), framework="pt") as calibration_f:
        metadata = json.loads(calibration_f.metadata()["calibration"])
        assert {"0.weight", "0.bias", "0.running_mean", "0.running_var"} <= set(calibration_f.keys())

    assert metadata["resolution"] == 20 and metadata["bn_key"] == 16


def test_missing_checkpoint(tmp_path):
    out = tmp_path / "bn.csv"
    assert main(["dump-bn", "--checkpoint", str(tmp_path / "missing.safetensors"), "--out", str(out)]) == 1
    assert not out.exists()
