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

from .constants import (
    CHECKPOINT_FILENAME,
    CHECKPOINT_FORMAT_VERSION,
    DESK_RESOLUTIONS,
    PREDICTIONS_FILENAME,
)
from .env import parse_flag_from_env, progress_bars_disabled
from .hub import get_user_agent
