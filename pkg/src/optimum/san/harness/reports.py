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

from logging import getLogger
from os import PathLike
from pathlib import Path
from typing import Iterable, Mapping, Optional, Tuple, Union

import pandas as pd
from matplotlib import rc_context
from matplotlib.figure import Figure

from optimum.san.harness.matrix import AccuracyMatrix
from optimum.san.meta import MetaLearner, weight_bias_ratio_report
from optimum.san.models.backbone import BackboneSpec, count_flops
from optimum.san.normalization import BNBank, bn_dump
from optimum.san.utils.constants import ACCURACY_DECIMALS


LOGGER = getLogger(__name__)

ENVELOPE_COLUMNS = ("model", "parameterization", "test_resolution", "accuracy", "mflops")
ENVELOPE_ROW = "envelope"


def _write_csv(frame: pd.DataFrame, path: Union[str, PathLike], **kwargs) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, **kwargs)
    except OSError as e:
        raise OSError(f"Unable to write report {path}: {e}") from e
    return path


def envelope_frame(
    matrices: Mapping[str, AccuracyMatrix],
    spec: Optional[BackboneSpec] = None,
) -> pd.DataFrame:
    """
    One point per (model, parameterization, test resolution) plus the pointwise maximum over parameterizations.
    Accuracies are rounded to the reporting precision so the CSV and the chart hold the same values.
    """
    records = []
    for name, matrix in matrices.items():
        rounded = matrix.values.round(ACCURACY_DECIMALS)
        curves = [(str(row), rounded[index]) for index, row in enumerate(matrix.rows)]
        curves.append((ENVELOPE_ROW, rounded.max(axis=0)))

        for label, values in curves:
            for column, value in zip(matrix.columns, values):
                mflops = round(count_flops(spec, column) / 1e6, 3) if spec is not None else float("nan")
                records.append((name, label, column, float(value), mflops))

    return pd.DataFrame(records, columns=list(ENVELOPE_COLUMNS))


def plot_envelope(frame: pd.DataFrame, path: Union[str, PathLike]) -> Path:
    """
    Accuracy against test resolution on a logarithmic x-axis, one line per parameterization, written as SVG
    """
    path = Path(path)
    with rc_context({"svg.fonttype": "path", "svg.hashsalt": "optimum-san"}):
        fig = Figure(figsize=(7.0, 4.5))
        ax = fig.subplots()

        for (name, label), curve in frame.groupby(["model", "parameterization"], sort=False):
            curve = curve.sort_values("test_resolution")
            ax.plot(
                curve["test_resolution"],
                curve["accuracy"],
                marker="o",
                linestyle="--" if label == ENVELOPE_ROW else "-",
                label=f"{name} / {label}",
            )

        resolutions = sorted(frame["test_resolution"].unique())
        ax.set_xscale("log")
        ax.set_xticks(resolutions)
        ax.set_xticklabels([str(r) for r in resolutions])
        ax.minorticks_off()
        ax.set_xlabel("test resolution (log scale)")
        ax.set_ylabel("top-1 accuracy (%)")
        ax.grid(True, alpha=0.3)
        ax.legend(fontsize="small")

        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            fig.savefig(path, format="svg", metadata={"Date": None})
        except OSError as e:
            raise OSError(f"Unable to write chart {path}: {e}") from e

    return path


def envelope_report(
    matrices: Mapping[str, AccuracyMatrix],
    csv_path: Union[str, PathLike],
    svg_path: Union[str, PathLike],
    spec: Optional[BackboneSpec] = None,
) -> pd.DataFrame:
    frame = envelope_frame(matrices, spec)
    _write_csv(frame, csv_path, index=False, float_format=f"%.{ACCURACY_DECIMALS}f")
    plot_envelope(frame, svg_path)

    LOGGER.info(f"Wrote envelope of {len(matrices)} matrices to {csv_path} and {svg_path}")
    return frame


def write_hit_miss(frame: pd.DataFrame, path: Union[str, PathLike]) -> Path:
    return _write_csv(frame, path, float_format="%.4f")


def write_bn_dump(bank: BNBank, path: Union[str, PathLike]) -> Path:
    return _write_csv(bn_dump(bank), path, index=False)


def write_ratio_report(learners: Iterable[MetaLearner], path: Union[str, PathLike]) -> Path:
    # pandas writes infinite ratios as "inf"
    return _write_csv(weight_bias_ratio_report(learners), path, index=False)


def compare_to_baselines(
    san: AccuracyMatrix, baselines: Mapping[int, AccuracyMatrix]
) -> Tuple[pd.DataFrame, pd.Series]:
    """
    Own-resolution accuracy of SAN against individually trained baselines, and the accuracy drop of the largest
    parameterization tested at the smallest resolution for both families
    """
    rows = []
    for resolution, baseline in sorted(baselines.items(), reverse=True):
        san_value = san.cell(resolution, resolution)
        base_value = baseline.cell(resolution, resolution)
        rows.append((resolution, san_value, base_value, san_value - base_value))

    diagonal = pd.DataFrame(rows, columns=["resolution", "san", "baseline", "delta"])

    largest, smallest = max(san.rows), min(san.columns)
    largest_baseline = baselines[largest]
    drops = pd.Series(
        {
            "san": san.cell(largest, largest) - san.cell(largest, smallest),
            "baseline": largest_baseline.cell(largest, largest) - largest_baseline.cell(largest, smallest),
        },
        name=f"drop_{largest}_to_{smallest}",
    )
    return diagonal, drops
