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

import math

import pytest
import torch

from optimum.san.errors import ConfigurationError, InvalidArgumentError
from optimum.san.meta import (
    MetaLearner,
    ScaleEncoder,
    encode_scale,
    generate_kernel,
    init_meta_params,
    weight_bias_ratio,
    weight_bias_ratio_report,
)
from optimum.san.models import build_backbone_spec
from optimum.san.utils.tests import tiny_config


def relative_error(a: torch.Tensor, b: torch.Tensor) -> float:
    return ((a - b).norm() / b.norm().clamp_min(1e-30)).item()


@pytest.mark.parametrize(
    "resolution, coefficient, downsample_rate, expected",
    [(224, 0.1, 32, 0.7), (128, 0.1, 32, 0.4), (32, 0.1, 4, 0.8), (16, 0.5, 2, 4.0)],
)
def test_encode_scale(resolution: int, coefficient: float, downsample_rate: int, expected: float):
    assert encode_scale(resolution, coefficient, downsample_rate) == pytest.approx(expected)
    assert ScaleEncoder(coefficient, downsample_rate)(resolution) == pytest.approx(expected)


@pytest.mark.parametrize("resolution", [0, -32, 24.5, True])
def test_encode_scale_rejects_invalid_resolution(resolution):
    with pytest.raises(InvalidArgumentError):
        encode_scale(resolution)


@pytest.mark.parametrize("coefficient, downsample_rate", [(0.0, 32), (-0.1, 32), (0.1, 0)])
def test_encoder_rejects_invalid_parameters(coefficient: float, downsample_rate: int):
    with pytest.raises(InvalidArgumentError):
        ScaleEncoder(coefficient, downsample_rate)


def test_linear_learner_example():
    learner = MetaLearner(0, (2, 1, 1, 1))
    with torch.no_grad():
        learner.weight.copy_(torch.tensor([1.0, -2.0]))
        learner.bias.copy_(torch.tensor([0.5, 0.25]))

    kernel = generate_kernel(learner, 0.7)
    assert kernel.layer_id == 0
    assert kernel.tensor.shape == (2, 1, 1, 1)
    torch.testing.assert_close(kernel.tensor.flatten(), torch.tensor([1.2, -1.15]))


@pytest.mark.parametrize("name", ["plain", "tiny_resnet", "tiny_mobile"])
def test_kernel_interpolation_identity(name: str):
    spec = build_backbone_spec(tiny_config(name).backbone)
    learners = init_meta_params(spec, seed=0)
    generator = torch.Generator().manual_seed(0)

    with torch.no_grad():
        for learner in learners:
            for _ in range(100):
                e1, e2, a = torch.rand(3, generator=generator, dtype=torch.float64).tolist()
                e1, e2 = 2.0 * e1, 2.0 * e2

                mixed = learner(a * e1 + (1.0 - a) * e2)
                combined = a * learner(e1) + (1.0 - a) * learner(e2)
                assert relative_error(mixed, combined) <= 1e-6


def test_kernel_difference_is_scaled_weight():
    learner = MetaLearner(0, (8, 4, 3, 3))
    learner.reset_parameters(torch.Generator().manual_seed(1))

    with torch.no_grad():
        difference = learner(0.8) - learner(0.3)
        assert relative_error(difference, 0.5 * learner.weight) <= 1e-5


def test_hidden_learner_shapes():
    learner = MetaLearner(3, (8, 4, 3, 3), hidden_units=16)
    learner.reset_parameters(torch.Generator().manual_seed(0))

    assert learner.weight.shape == (16, 8 * 4 * 3 * 3)
    assert learner.hidden_weight.shape == (16,)
    assert generate_kernel(learner, 0.5).tensor.shape == (8, 4, 3, 3)


def test_linear_learner_has_no_hidden_layer():
    learner = MetaLearner(0, (4, 4, 3, 3))
    assert learner.hidden_weight is None
    assert learner.hidden_bias is None
    assert len(list(learner.parameters())) == 2


def test_generate_kernel_shape_mismatch():
    learner = MetaLearner(5, (8, 4, 3, 3))
    with pytest.raises(ConfigurationError):
        generate_kernel(learner, 0.5, (8, 4, 1, 1))


def test_generated_kernel_keeps_autograd_graph():
    learner = MetaLearner(0, (4, 2, 3, 3))
    learner.reset_parameters(torch.Generator().manual_seed(0))

    generate_kernel(learner, 0.4).tensor.sum().backward()
    torch.testing.assert_close(learner.weight.grad, torch.full_like(learner.weight, 0.4))
    torch.testing.assert_close(learner.bias.grad, torch.ones_like(learner.bias))


def test_init_is_deterministic():
    spec = build_backbone_spec(tiny_config("tiny_resnet").backbone)
    first, second, other = (init_meta_params(spec, seed=s) for s in (3, 3, 4))

    for a, b in zip(first.parameters(), second.parameters()):
        assert torch.equal(a, b)

    assert any(not torch.equal(a, b) for a, b in zip(first.parameters(), other.parameters()))


def test_init_variance_follows_fan_in():
    learner = MetaLearner(0, (64, 64, 3, 3))
    learner.reset_parameters(torch.Generator().manual_seed(0))

    expected = math.sqrt(2.0 / (64 * 3 * 3))
    assert learner.weight.std().item() == pytest.approx(expected, rel=0.05)
    assert learner.bias.std().item() == pytest.approx(expected, rel=0.05)


def test_init_one_learner_per_convolution():
    spec = build_backbone_spec(tiny_config("tiny_mobile").backbone)
    learners = init_meta_params(spec, hidden_units=8, dtype=torch.float64)

    assert len(learners) == spec.num_layers
    for learner, layer in zip(learners, spec.layers):
        assert learner.layer_id == layer.layer_id
        assert learner.kernel_shape == layer.kernel_shape
        assert learner.bias.dtype == torch.float64


def test_weight_bias_ratio():
    learner = MetaLearner(0, (2, 1, 1, 1))
    with torch.no_grad():
        learner.weight.copy_(torch.tensor([2.0, -4.0]))
        learner.bias.copy_(torch.tensor([1.0, -2.0]))
    assert weight_bias_ratio(learner) == pytest.approx(2.0)

    with torch.no_grad():
        learner.bias.zero_()
    assert math.isinf(weight_bias_ratio(learner))


def test_weight_bias_ratio_report():
    spec = build_backbone_spec(tiny_config("tiny_resnet").backbone)
    report = weight_bias_ratio_report(init_meta_params(spec))

    assert list(report.columns) == ["layer_id", "ratio"]
    assert report["layer_id"].tolist() == list(range(spec.num_layers))
    assert (report["ratio"] > 0).all()
