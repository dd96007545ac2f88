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

import functools
from sys import version as pyversion

from ..version import __version__


USER_AGENT_BASE = [f"optimum/san/{__version__}", f"python/{pyversion.split()[0]}"]


@functools.cache
def get_user_agent() -> str:
    """
    Get the library user-agent when calling the hub
    :return:
    """
    ua = USER_AGENT_BASE.copy()

    # Torch / torchvision
    try:
        from torch import __version__ as pt_version
        from torchvision import __version__ as tv_version

        ua.append(f"torch/{pt_version}")
        ua.append(f"torchvision/{tv_version}")
    except ImportError:
        pass

    # datasets version
    try:
        from datasets import __version__ as ds_version

        ua.append(f"datasets/{ds_version}")
    except ImportError:
        pass

    return "; ".join(ua)
