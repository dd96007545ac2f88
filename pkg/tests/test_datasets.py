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

import numpy as np
import pytest
import torch
import torchvision.transforms.functional as TF
from datasets import ClassLabel, Dataset, Features, Value

from optimum.san.config import DataConfig
from optimum.san.data import (
    DatasetHandle,
    SyntheticSpec,
    collate_samples,
    export_image_folder,
    generate_stripes,
    get_dataset,
    make_loader,
    make_synthetic,
    synthetic_label_rule,
)
from optimum.san.data.datasets import get_image_folder
from optimum.san.data.transforms import eval_view
from optimum.san.errors import InvalidArgumentError


def test_generate_stripes():
    spec = SyntheticSpec(num_classes=3, samples_per_class=5, base_resolution=16)
    images, labels = generate_stripes(spec, seed=0)

    assert images.shape == (15, 3, 16, 16)
    assert images.dtype == np.uint8
    assert np.bincount(labels).tolist() == [5, 5, 5]

    again, _ = generate_stripes(spec, seed=0)
    other, _ = generate_stripes(spec, seed=1)
    assert np.array_equal(images, again)
    assert not np.array_equal(images, other)


@pytest.mark.parametrize(
    "kwargs", [dict(num_classes=1), dict(samples_per_class=0), dict(base_resolution=2), dict(cycles_per_image=0.0)]
)
def test_synthetic_spec_validation(kwargs):
    with pytest.raises(ValueError):
        SyntheticSpec(**kwargs)


@pytest.mark.parametrize("resolution", [32, 24, 16])
def test_synthetic_label_rule_survives_resizing(resolution: int):
    spec = SyntheticSpec(num_classes=4, samples_per_class=16)
    handle = make_synthetic(spec)

    recovered = []
    for index in range(len(handle)):
        image, label = handle[index]
        resized = TF.resize(image, [resolution, resolution], antialias=True)
        recovered.append(synthetic_label_rule(resized, spec) == label)

    assert np.mean(recovered) >= 0.95


def test_make_synthetic():
    spec = SyntheticSpec(num_classes=4, samples_per_class=8)
    train, val = make_synthetic(spec), make_synthetic(spec, split="val")

    assert len(train) == train.num_samples == 32
    assert train.num_classes == 4
    assert train.class_names == ["stripes_000", "stripes_001", "stripes_002", "stripes_003"]

    image, label = train[9]
    assert image.shape == (3, 32, 32)
    assert image.dtype == torch.uint8
    assert label == 1
    assert train.labels.tolist() == [c for c in range(4) for _ in range(8)]

    assert train.fingerprint != val.fingerprint
    assert not torch.equal(train[0][0], val[0][0])


def test_handle_rejects_empty_dataset():
    features = Features({"image": Value("int64"), "label": ClassLabel(names=["a", "b"])})
    with pytest.raises(InvalidArgumentError):
        DatasetHandle(Dataset.from_dict({"image": [], "label": []}, features=features), "test", "train")


def test_handle_requires_class_labels():
    dataset = Dataset.from_dict({"image": [0, 1], "label": [0, 1]})
    with pytest.raises(InvalidArgumentError):
        DatasetHandle(dataset, "test", "train")


def test_subset():
    handle = make_synthetic(SyntheticSpec(samples_per_class=8))

    subset = handle.subset(10, seed=1)
    assert len(subset) == 10
    assert subset.class_names == handle.class_names
    assert handle.subset(100) is handle
    assert subset.fingerprint == handle.subset(10, seed=1).fingerprint


def test_get_dataset_synthetic():
    config = DataConfig(synthetic=SyntheticSpec(samples_per_class=4), max_train_samples=6)

    assert len(get_dataset(config, "train")) == 6
    assert len(get_dataset(config, "val")) == 16

    with pytest.raises(InvalidArgumentError):
        get_dataset(config, "test")


def test_export_and_reload_image_folder(tmp_path):
    handle = make_synthetic(SyntheticSpec(num_classes=3, samples_per_class=2, base_resolution=12))
    export_image_folder(handle, tmp_path / "train")

    reloaded = get_image_folder(tmp_path, "train")
    assert len(reloaded) == len(handle)
    assert reloaded.class_names == handle.class_names
    assert sorted(reloaded.labels.tolist()) == sorted(handle.labels.tolist())

    image, _ = reloaded[0]
    assert image.shape == (3, 12, 12)
    assert image.dtype == torch.uint8


def test_missing_image_folder(tmp_path):
    with pytest.raises(OSError):
        get_image_folder(tmp_path / "missing", "train")


def test_collate_samples():
    same = [(torch.zeros(3, 4, 4, dtype=torch.uint8), 1), (torch.ones(3, 4, 4, dtype=torch.uint8), 2)]
    images, labels = collate_samples(same)
    assert images.shape == (2, 3, 4, 4)
    assert labels.tolist() == [1, 2]

    mixed = [(torch.zeros(3, 4, 4), 0), (torch.zeros(3, 6, 5), 1)]
    images, _ = collate_samples(mixed)
    assert isinstance(images, list) and len(images) == 2


def test_make_loader_is_seeded():
    handle = make_synthetic(SyntheticSpec(samples_per_class=4))

    def order(seed: int):
        return torch.cat([labels for _, labels in make_loader(handle, 4, shuffle=True, seed=seed)]).tolist()

    assert order(0) == order(0)
    assert sorted(order(0)) == sorted(handle.labels.tolist())


def test_synthetic_views_keep_pixel_range():
    spec = SyntheticSpec(num_classes=4, samples_per_class=4)
    handle = make_synthetic(spec)
    images = [handle[index][0] for index in range(len(handle))]

    assert all(image.dtype == torch.uint8 for image in images)
    views = eval_view(images, 24)
    assert views.max().item() > 0.5
    assert views.std(dim=0).mean().item() > 0.05
