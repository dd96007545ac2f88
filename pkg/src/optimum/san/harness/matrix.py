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
Resolution x resolution accuracy matrices.

Rows are parameterization resolutions (the training resolution providing the main network), columns are test
resolutions. Raw top-1 predictions of every cell are stored so reports never re-run inference.
"""

import json
from dataclasses import dataclass
from logging import getLogger
from os import PathLike
from pathlib import Path
from typing import Dict, Iterable, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
import torch
from safetensors import SafetensorError, safe_open
from safetensors.torch import save_file
from tqdm import tqdm

from optimum.san.data.datasets import DatasetHandle, make_loader
from optimum.san.errors import CorruptedCheckpointError, InvalidArgumentError
from optimum.san.lang import ForwardMode
from optimum.san.models.san import ScaleAdaptiveNetwork
from optimum.san.resolutions import nearest_resolution
from optimum.san.runtime import InferenceMode, ScaleAdaptiveInference
from optimum.san.utils.constants import ACCURACY_DECIMALS, MATRIX_CORNER_CELL
from optimum.san.utils.env import progress_bars_disabled


LOGGER = getLogger(__name__)

_LABELS_KEY = "labels"
_METADATA_KEY = "predictions"


def accuracy(predictions: np.ndarray, labels: np.ndarray) -> float:
    """
    Top-1 accuracy in percent
    """
    if len(predictions) != len(labels):
        raise InvalidArgumentError(
            "accuracy", f"{len(predictions)} predictions for {len(labels)} labels"
        )
    if len(labels) == 0:
        raise InvalidArgumentError("accuracy", "no sample to score")

    return 100.0 * float(np.mean(np.asarray(predictions) == np.asarray(labels)))


def hit_miss(
    predictions_a: np.ndarray, predictions_b: np.ndarray, labels: np.ndarray
) -> float:
    """
    Fraction of samples missed by A but hit by B
    """
    predictions_a, predictions_b, labels = map(np.asarray, (predictions_a, predictions_b, labels))
    if not len(predictions_a) == len(predictions_b) == len(labels):
        raise InvalidArgumentError(
            "hit_miss",
            f"predictions and labels should be aligned (got: {len(predictions_a)}, {len(predictions_b)}, {len(labels)})",
        )
    if len(labels) == 0:
        raise InvalidArgumentError("hit_miss", "no sample to compare")

    return float(np.mean((predictions_a != labels) & (predictions_b == labels)))


@dataclass
class AccuracyMatrix:
    rows: Tuple[int, ...]
    columns: Tuple[int, ...]
    values: np.ndarray
    mode: str = InferenceMode.PROXY.value

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (len(self.rows), len(self.columns)):
            raise InvalidArgumentError(
                "matrix",
                f"values should be shaped {(len(self.rows), len(self.columns))} (got: {self.values.shape})",
            )

        if np.isnan(self.values).any() or (self.values < 0).any() or (self.values > 100).any():
            raise InvalidArgumentError("matrix", "accuracies should all lie in [0, 100]")

    def cell(self, row: int, column: int) -> float:
        return float(self.values[self.rows.index(row), self.columns.index(column)])

    def proxy_selection(self) -> pd.Series:
        """
        Per test resolution, the accuracy of the row a deployed model would pick (nearest training resolution)
        """
        selected = {column: self.cell(nearest_resolution(column, self.rows), column) for column in self.columns}
        return pd.Series(selected, name="selected")

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(
            np.round(self.values, ACCURACY_DECIMALS), index=list(self.rows), columns=list(self.columns)
        )
        frame.index.name = MATRIX_CORNER_CELL
        return frame

    def to_csv(self, path: Union[str, PathLike]) -> Path:
        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            self.to_frame().to_csv(path, float_format=f"%.{ACCURACY_DECIMALS}f")
        except OSError as e:
            raise OSError(f"Unable to write accuracy matrix {path}: {e}") from e
        return path

    @staticmethod
    def from_csv(path: Union[str, PathLike], mode: str = InferenceMode.PROXY.value) -> "AccuracyMatrix":
        frame = pd.read_csv(path, index_col=0)
        return AccuracyMatrix(
            rows=tuple(int(r) for r in frame.index),
            columns=tuple(int(c) for c in frame.columns),
            values=frame.to_numpy(dtype=np.float64),
            mode=mode,
        )


@dataclass
class PredictionStore:
    """
    Top-1 predictions of every (parameterization, test resolution) cell along with the reference labels
    """

    rows: Tuple[int, ...]
    columns: Tuple[int, ...]
    labels: np.ndarray
    predictions: Dict[Tuple[int, int], np.ndarray]
    mode: str = InferenceMode.PROXY.value
    name: str = "san"

    @staticmethod
    def _key(row: int, column: int) -> str:
        return f"cell.{row}.{column}"

    def cell(self, row: int, column: int) -> np.ndarray:
        return self.predictions[(row, column)]

    def to_matrix(self) -> AccuracyMatrix:
        values = [[accuracy(self.cell(r, c), self.labels) for c in self.columns] for r in self.rows]
        return AccuracyMatrix(self.rows, self.columns, np.array(values), self.mode)

    def save(self, path: Union[str, PathLike]) -> Path:
        path = Path(path)
        tensors = {_LABELS_KEY: torch.from_numpy(np.ascontiguousarray(self.labels, dtype=np.int64))}
        for (row, column), predicted in self.predictions.items():
            tensors[self._key(row, column)] = torch.from_numpy(np.ascontiguousarray(predicted, dtype=np.int64))

        metadata = {"rows": list(self.rows), "columns": list(self.columns), "mode": self.mode, "name": self.name}
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            save_file(tensors, path, metadata={_METADATA_KEY: json.dumps(metadata, sort_keys=True)})
        except OSError as e:
            raise OSError(f"Unable to write predictions {path}: {e}") from e

        LOGGER.debug(f"Saved {len(self.predictions)} prediction cells to {path}")
        return path

    @staticmethod
    def load(path: Union[str, PathLike]) -> "PredictionStore":
        path = Path(path)
        try:
            with safe_open(str(path), framework="pt") as store_f:
                metadata = json.loads((store_f.metadata() or {})[_METADATA_KEY])
                tensors = {name: store_f.get_tensor(name) for name in store_f.keys()}
        except (SafetensorError, KeyError, ValueError) as e:
            raise CorruptedCheckpointError(path, f"not a prediction store ({e})") from e

        rows, columns = tuple(metadata["rows"]), tuple(metadata["columns"])
        predictions = {(r, c): tensors[PredictionStore._key(r, c)].numpy() for r in rows for c in columns}
        return PredictionStore(
            rows, columns, tensors[_LABELS_KEY].numpy(), predictions, metadata["mode"], metadata["name"]
        )


def run_matrix_eval(
    model: ScaleAdaptiveNetwork,
    eval_data: DatasetHandle,
    test_resolutions: Sequence[int],
    mode: Union[str, InferenceMode] = InferenceMode.PROXY,
    calibration_data: Optional[DatasetHandle] = None,
    rows: Optional[Iterable[int]] = None,
    calibrate: bool = True,
    batch_size: Optional[int] = None,
    name: str = "san",
) -> Tuple[AccuracyMatrix, PredictionStore]:
    """
    Evaluate every (row, column) cell exactly once.
    Proxy cells run (eps(row), BN(row)); ideal cells run eps(column) with BN(row) recalibrated at the column;
    datafree cells run eps(column) with the interpolated BN on the row nearest to the column and BN(row) elsewhere.
    """
    if len(eval_data) == 0:
        raise InvalidArgumentError("matrix", "evaluation set holds no sample")

    mode = InferenceMode(mode)
    rows = tuple(sorted(rows or model.resolutions, reverse=True))
    columns = tuple(test_resolutions)
    if not columns:
        raise InvalidArgumentError("matrix", "at least one test resolution is required")

    runtime = ScaleAdaptiveInference(model, calibration_data)
    loader = make_loader(eval_data, batch_size or runtime.data_config.eval_batch_size)
    labels = eval_data.labels.numpy()

    predictions = {}
    cells = [(row, column) for column in columns for row in rows]
    with torch.no_grad():
        for row, column in tqdm(cells, desc=f"Matrix ({mode.value})", disable=progress_bars_disabled()):
            params = runtime.parameters_for(column, mode, bn_key=row, calibrate=calibrate)
            predicted = [
                model(params, runtime.test_view(images, column), mode=ForwardMode.EVAL).argmax(dim=-1)
                for images, _ in loader
            ]
            predictions[(row, column)] = torch.cat(predicted).numpy()

    store = PredictionStore(rows, columns, labels, predictions, mode.value, name)
    matrix = store.to_matrix()
    LOGGER.info(f"Evaluated {len(cells)} cells in {mode.value} mode on {eval_data!r}")
    return matrix, store


def hit_miss_matrix(store: PredictionStore) -> pd.DataFrame:
    """
    Entry (i, j): fraction of samples missed by the main network of resolution i at its own resolution and hit by
    the main network of resolution j at its own resolution
    """
    missing = [r for r in store.rows if r not in store.columns]
    if missing:
        raise InvalidArgumentError(
            "hit_miss", f"own-resolution predictions are missing for {missing}"
        )

    own = {r: store.cell(r, r) for r in store.rows}
    values = [[hit_miss(own[a], own[b], store.labels) for b in store.rows] for a in store.rows]

    frame = pd.DataFrame(values, index=list(store.rows), columns=list(store.rows))
    frame.index.name = "miss\\hit"
    return frame
