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
import torch.nn.functional as F

from optimum.san.errors import InvalidArgumentError
from optimum.san.training import ce_loss, sd_loss, sd_loss_terms


@pytest.mark.parametrize("num_classes", [2, 4, 10])
def test_ce_uniform_logits(num_classes: int):
    logits = torch.zeros(6, num_classes)
    labels = torch.arange(6) % num_classes
    assert ce_loss(logits, labels).item() == pytest.approx(math.log(num_classes))


def test_ce_scalar_example():
    loss = ce_loss(torch.tensor([[2.0, 0.0]]), torch.tensor([0]))
    assert loss.item() == pytest.approx(-math.log(math.exp(2.0) / (math.exp(2.0) + 1.0)))


@pytest.mark.parametrize("labels", [[0, 4], [-1, 0]])
def test_ce_rejects_out_of_range_labels(labels):
    with pytest.raises(InvalidArgumentError):
        ce_loss(torch.zeros(2, 4), torch.tensor(labels))


def test_sd_zero_when_distributions_coincide():
    logits = torch.randn(5, 4, generator=torch.Generator().manual_seed(0))
    by_scale = {32: logits.clone(), 24: logits.clone(), 16: logits.clone()}

    assert sd_loss(by_scale).item() == 0.0
    # Softmax is shift invariant
    by_scale[16] = logits + 3.0
    assert sd_loss(by_scale).item() == pytest.approx(0.0, abs=1e-6)


@pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
def test_sd_pair_count(k: int):
    scales = [32 - 4 * i for i in range(k)]
    terms = sd_loss_terms({s: torch.randn(3, 4) for s in scales})

    assert len(terms) == k * (k - 1) // 2
    assert all(teacher > student for teacher, student in terms)


def test_sd_single_scale_is_zero():
    loss = sd_loss({32: torch.randn(3, 4)})
    assert loss.item() == 0.0
    assert loss.shape == ()


def test_sd_known_values():
    uniform = torch.zeros(1, 2)
    skewed = torch.log(torch.tensor([[0.8, 0.2]]))

    # KL([0.5, 0.5] || [0.8, 0.2])
    assert sd_loss({32: uniform, 16: skewed}).item() == pytest.approx(math.log(1.25), rel=1e-5)

    # Near one-hot teacher against a uniform student
    confident = torch.tensor([[30.0, -30.0]])
    assert sd_loss({32: confident, 16: uniform}).item() == pytest.approx(math.log(2.0), rel=1e-5)


def test_sd_temperature_scaling():
    generator = torch.Generator().manual_seed(1)
    teacher, student = torch.randn(4, 5, generator=generator), torch.randn(4, 5, generator=generator)

    expected = F.kl_div(
        F.log_softmax(student / 2.0, dim=-1), F.log_softmax(teacher / 2.0, dim=-1), reduction="batchmean",
        log_target=True,
    )
    assert sd_loss({32: teacher, 16: student}, temperature=2.0).item() == pytest.approx(4.0 * expected.item())


def test_sd_teacher_receives_no_gradient():
    generator = torch.Generator().manual_seed(2)
    logits = {s: torch.randn(4, 3, generator=generator, requires_grad=True) for s in (32, 24, 16)}

    sd_loss(logits).backward()
    assert logits[32].grad is None or logits[32].grad.abs().max().item() <= 1e-8

    # 24 is only a student of 32, its teacher role towards 16 contributes nothing
    expected = {s: t.detach().clone().requires_grad_(True) for s, t in logits.items()}
    sd_loss_terms(expected)[(32, 24)].backward()
    torch.testing.assert_close(logits[24].grad, expected[24].grad)


def test_sd_batch_mismatch():
    with pytest.raises(InvalidArgumentError):
        sd_loss({32: torch.zeros(4, 3), 16: torch.zeros(5, 3)})
