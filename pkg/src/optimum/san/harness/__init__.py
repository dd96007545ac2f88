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
from .matrix import (
    AccuracyMatrix,
    PredictionStore,
    accuracy,
    hit_miss,
    hit_miss_matrix,
    run_matrix_eval,
)
from .reports import (
    compare_to_baselines,
    envelope_frame,
    envelope_report,
    plot_envelope,
    write_bn_dump,
    write_hit_miss,
    write_ratio_report,
)
