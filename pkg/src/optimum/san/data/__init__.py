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
from .synthetic import SyntheticSpec, generate_stripes, synthetic_label_rule
from .datasets import (
    DatasetHandle,
    collate_samples,
    export_image_folder,
    get_dataset,
    make_loader,
    make_synthetic,
)
from .transforms import eval_view, normalize, train_view
