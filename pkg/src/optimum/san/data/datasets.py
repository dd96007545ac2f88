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
Set of utilities to load the labeled image sets used for training, calibration and evaluation
"""

from logging import getLogger
from os import PathLike
from pathlib import Path
from typing import TYPE_CHECKING, Callable, List, Sequence, Tuple, Union

import numpy as np
import torch
from datasets import Array3D, ClassLabel, Dataset, Features, Image, load_dataset
from torch.utils.data import DataLoader
from torch.utils.data import Dataset as TorchDataset
from torchvision.io import write_png
from torchvision.transforms.functional import pil_to_tensor
from tqdm import tqdm

from optimum.san.data.synthetic import SyntheticSpec, generate_stripes
from optimum.san.errors import InvalidArgumentError
from optimum.san.utils.env import progress_bars_disabled


if TYPE_CHECKING:
    from optimum.san.config import DataConfig


LOGGER = getLogger(__name__)

SOURCE_IMAGE_FOLDER = "image_folder"
SOURCE_BUILTIN = "builtin_desk_dataset"
SOURCE_SYNTHETIC = "synthetic"

# Validation draws from a different stream than training
_SYNTHETIC_VAL_SEED_OFFSET = 7919


class DatasetHandle(TorchDataset):
    """
    Index-addressable labeled images backed by a `datasets.Dataset`.
    Items are `(uint8 (C, H, W) tensor, int label)` whatever the storage (encoded files or raw arrays).
    """

    def __init__(
        self,
        dataset: Dataset,
        source: str,
        split: str,
        image_column: str = "image",
        label_column: str = "label",
    ):
        if len(dataset) == 0:
            raise InvalidArgumentError("dataset", f"{source} split {split} holds no sample")

        label_feature = dataset.features[label_column]
        if not isinstance(label_feature, ClassLabel):
            raise InvalidArgumentError(
                "dataset", f"column {label_column} should be a ClassLabel (got: {label_feature})"
            )

        self._encoded = isinstance(dataset.features[image_column], Image)
        # Array features come back widened to int64 from the torch formatter
        self._dataset = dataset if self._encoded else dataset.with_format("numpy")
        pixel_dtype = None if self._encoded else getattr(dataset.features[image_column], "dtype", None)
        self._pixel_dtype = np.dtype(pixel_dtype) if pixel_dtype else None
        self._image_column = image_column
        self._label_column = label_column

        self.source = source
        self.split = split
        self.num_classes = label_feature.num_classes
        self.class_names = list(label_feature.names)

        labels = self.labels
        if labels.min() < 0 or labels.max() >= self.num_classes:
            raise InvalidArgumentError(
                "dataset", f"labels should lie in [0, {self.num_classes}) for {source}/{split}"
            )

    def __len__(self) -> int:
        return len(self._dataset)

    def __getitem__(self, index: int) -> Tuple[torch.Tensor, int]:
        item = self._dataset[int(index)]
        image = item[self._image_column]

        if self._encoded:
            image = pil_to_tensor(image.convert("RGB"))
        else:
            image = torch.from_numpy(np.ascontiguousarray(image, dtype=self._pixel_dtype))

        return image, int(item[self._label_column])

    def __repr__(self) -> str:
        return (
            f"DatasetHandle(source={self.source}, split={self.split}, "
            f"num_samples={self.num_samples}, num_classes={self.num_classes})"
        )

    @property
    def num_samples(self) -> int:
        return len(self)

    @property
    def dataset(self) -> Dataset:
        return self._dataset

    @property
    def fingerprint(self) -> str:
        return self._dataset._fingerprint

    @property
    def labels(self) -> torch.LongTensor:
        column = self._dataset.with_format("numpy")[self._label_column]
        return torch.from_numpy(np.asarray(column, dtype=np.int64))

    def subset(self, num_samples: int, seed: int = 0) -> "DatasetHandle":
        if num_samples >= len(self):
            return self

        LOGGER.debug(f"Capping {self!r} to {num_samples} samples (seed={seed})")
        subset = self._dataset.shuffle(seed=seed).select(range(num_samples))
        return DatasetHandle(subset, self.source, self.split, self._image_column, self._label_column)


def make_synthetic(spec: SyntheticSpec, split: str = "train") -> DatasetHandle:
    seed = spec.seed if split == "train" else spec.seed + _SYNTHETIC_VAL_SEED_OFFSET
    images, labels = generate_stripes(spec, seed)

    features = Features(
        {
            "image": Array3D(shape=images.shape[1:], dtype="uint8"),
            "label": ClassLabel(names=[f"stripes_{c:03d}" for c in range(spec.num_classes)]),
        }
    )
    dataset = Dataset.from_dict(
        {"image": list(images), "label": labels.tolist()}, features=features
    )
    return DatasetHandle(dataset, SOURCE_SYNTHETIC, split)


def get_image_folder(root: Union[str, PathLike], split: str) -> DatasetHandle:
    """
    Load `root/<class_name>/<file>` or, when present, `root/<split>/<class_name>/<file>`
    """
    root = Path(root)
    if not root.exists():
        raise OSError(f"Image folder {root} does not exist")

    data_dir = root / split if (root / split).is_dir() else root
    dataset = load_dataset("imagefolder", data_dir=str(data_dir), split="train")
    return DatasetHandle(dataset, SOURCE_IMAGE_FOLDER, split)


def get_builtin_desk_dataset(hub_id: str, split: str) -> DatasetHandle:
    dataset = load_dataset(hub_id, split=split)
    if "img" in dataset.column_names:
        dataset = dataset.rename_column("img", "image")

    return DatasetHandle(dataset, SOURCE_BUILTIN, split)


def get_dataset(config: "DataConfig", split: str = "train") -> DatasetHandle:
    """
    Resolve the dataset described by `config` for `split` ("train" or "val")
    """
    if split not in {"train", "val"}:
        raise InvalidArgumentError("dataset", f"split should be train or val (got: {split})")

    split_name = config.train_split if split == "train" else config.val_split

    if config.source == SOURCE_SYNTHETIC:
        handle = make_synthetic(config.synthetic, split)
    elif config.source == SOURCE_IMAGE_FOLDER:
        handle = get_image_folder(config.root, split_name)
    elif config.source == SOURCE_BUILTIN:
        handle = get_builtin_desk_dataset(config.hub_id, split_name)
    else:
        raise InvalidArgumentError("dataset", f"unknown source {config.source}")

    cap = config.max_train_samples if split == "train" else config.max_eval_samples
    if cap is not None:
        handle = handle.subset(cap)

    LOGGER.info(f"Loaded {handle!r}")
    return handle


def export_image_folder(handle: DatasetHandle, root: Union[str, PathLike]) -> Path:
    """
    Write every sample of `handle` as PNG under `root/<class_name>/<index>.png`
    """
    root = Path(root)
    for name in handle.class_names:
        root.joinpath(name).mkdir(parents=True, exist_ok=True)

    for index in tqdm(range(len(handle)), desc="Exporting", disable=progress_bars_disabled()):
        image, label = handle[index]
        write_png(image.contiguous(), str(root / handle.class_names[label] / f"{index:06d}.png"))

    return root


def collate_samples(
    samples: List[Tuple[torch.Tensor, int]]
) -> Tuple[Union[torch.Tensor, List[torch.Tensor]], torch.LongTensor]:
    """
    Batch `(image, label)` pairs. Images are stacked when they share a shape and returned as a list otherwise.
    """
    images = [image for image, _ in samples]
    labels = torch.tensor([label for _, label in samples], dtype=torch.int64)

    if all(image.shape == images[0].shape for image in images):
        return torch.stack(images), labels
    return images, labels


def make_loader(
    handle: Union[DatasetHandle, Sequence],
    batch_size: int,
    shuffle: bool = False,
    seed: int = 0,
    num_workers: int = 0,
    collate_fn: Callable = collate_samples,
) -> DataLoader:
    generator = torch.Generator().manual_seed(seed)
    return DataLoader(
        handle,
        batch_size=batch_size,
        shuffle=shuffle,
        num_workers=num_workers,
        collate_fn=collate_fn,
        generator=generator,
    )
