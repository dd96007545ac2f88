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
Checkpoint container.

A checkpoint is a single safetensors file: one record per meta learner parameter or private kernel, per BN site tensor
of every stored set and per classifier tensor. The safetensors metadata holds a JSON manifest with the container
version, the full configuration, the training resolutions, the backbone topology and a SHA-256 hash of the records.
"""

import hashlib
import json
from logging import getLogger
from os import PathLike
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Union

import numpy as np
import torch
from safetensors import SafetensorError, safe_open
from safetensors.torch import save_file

from optimum.san.config import SanConfig
from optimum.san.errors import (
    CheckpointException,
    CorruptedCheckpointError,
    UnsupportedCheckpointFormatError,
)
from optimum.san.models.san import ScaleAdaptiveNetwork
from optimum.san.utils.constants import CHECKPOINT_FORMAT_VERSION, CHECKPOINT_MANIFEST_KEY


LOGGER = getLogger(__name__)


def content_hash(tensors: Mapping[str, torch.Tensor]) -> str:
    """
    SHA-256 over (name, dtype, shape, little-endian row-major bytes) of every record, in name order
    """
    digest = hashlib.sha256()
    for name in sorted(tensors):
        array = tensors[name].detach().cpu().contiguous().numpy()
        array = np.ascontiguousarray(array, dtype=array.dtype.newbyteorder("<"))

        digest.update(name.encode("utf-8"))
        digest.update(str(array.dtype).encode("utf-8"))
        digest.update(json.dumps(list(array.shape)).encode("utf-8"))
        digest.update(array.tobytes())

    return digest.hexdigest()


def model_tensors(model: ScaleAdaptiveNetwork) -> Dict[str, torch.Tensor]:
    return {name: tensor.detach().cpu().contiguous() for name, tensor in model.state_dict().items()}


def model_content_hash(model: ScaleAdaptiveNetwork) -> str:
    return content_hash(model_tensors(model))


def build_manifest(
    model: ScaleAdaptiveNetwork,
    tensors: Mapping[str, torch.Tensor],
    extra: Optional[Dict[str, Any]] = None,
) -> Dict[str, Any]:
    manifest = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "config": model.config.to_dict(),
        "resolutions": list(model.resolutions),
        "backbone": model.spec.to_dict(),
        "content_hash": content_hash(tensors),
    }

    if extra:
        manifest["extra"] = extra

    return manifest


def save_checkpoint(
    model: ScaleAdaptiveNetwork,
    path: Union[str, PathLike],
    extra: Optional[Dict[str, Any]] = None,
) -> Path:
    path = Path(path)
    tensors = model_tensors(model)
    manifest = build_manifest(model, tensors, extra)

    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        save_file(
            tensors,
            path,
            metadata={CHECKPOINT_MANIFEST_KEY: json.dumps(manifest, sort_keys=True)},
        )
    except OSError as e:
        raise CheckpointException(path, f"unable to write checkpoint ({e})") from e

    LOGGER.info(f"Saved checkpoint to {path} (hash={manifest['content_hash'][:12]})")
    return path


def read_checkpoint(path: Union[str, PathLike]):
    """
    Parse and verify a checkpoint without instantiating the model
    :return: (manifest, tensors)
    """
    path = Path(path)
    if not path.is_file():
        raise CheckpointException(path, "no such checkpoint file")

    try:
        with safe_open(str(path), framework="pt") as checkpoint_f:
            metadata = checkpoint_f.metadata() or {}
            tensors = {name: checkpoint_f.get_tensor(name) for name in checkpoint_f.keys()}
    except (SafetensorError, ValueError, RuntimeError) as e:
        raise CorruptedCheckpointError(path, f"unable to parse the container ({e})") from e

    if CHECKPOINT_MANIFEST_KEY not in metadata:
        raise CorruptedCheckpointError(path, "missing manifest")

    try:
        manifest = json.loads(metadata[CHECKPOINT_MANIFEST_KEY])
    except json.JSONDecodeError as e:
        raise CorruptedCheckpointError(path, f"manifest is not valid JSON ({e})") from e

    version = manifest.get("format_version")
    if version != CHECKPOINT_FORMAT_VERSION:
        raise UnsupportedCheckpointFormatError(
            path,
            f"container version {version} is not supported (expected: {CHECKPOINT_FORMAT_VERSION})",
        )

    if manifest.get("content_hash") != content_hash(tensors):
        raise CorruptedCheckpointError(path, "content hash doesn't match the manifest")

    return manifest, tensors


def load_checkpoint(path: Union[str, PathLike]) -> ScaleAdaptiveNetwork:
    manifest, tensors = read_checkpoint(path)
    config = SanConfig.from_dict(manifest["config"])

    if list(config.training.resolutions) != manifest["resolutions"]:
        raise CorruptedCheckpointError(path, "manifest resolutions don't match its configuration")

    model = ScaleAdaptiveNetwork(config)
    try:
        model.load_state_dict(tensors, strict=True)
    except RuntimeError as e:
        raise CorruptedCheckpointError(path, f"records don't match the backbone ({e})") from e

    LOGGER.debug(f"Loaded {config.backbone.name} checkpoint from {path}")
    return model.eval()
