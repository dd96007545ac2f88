#  coding=utf-8
#  Copyright 2023 The HuggingFace Inc. team. All rights reserved.
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
import re
from distutils.core import setup
from setuptools import find_namespace_packages

# Ensure we match the version set in optimum/san/version.py
filepath = "src/optimum/san/version.py"
try:
    with open(filepath) as version_file:
        (__version__,) = re.findall('__version__ = "(.*)"', version_file.read())
except Exception as error:
    assert False, "Error: Could not open '%s' due %s\n" % (filepath, error)

INSTALL_REQUIRES = [
    "datasets >= 2.14",
    "huggingface-hub >= 0.22.0",
    "matplotlib >= 3.7",
    "numpy >= 1.26.0",
    "packaging",
    "pandas >= 2.0",
    "pillow",
    "safetensors >= 0.4.0",
    "setuptools",
    "torch >= 2.1.0",
    "torchvision >= 0.16.0",
    "tqdm",
]

TESTS_REQUIRES = [
    "mock",
    "pytest",
    "pytest-xdist",
]

QUALITY_REQUIRES = [
    "black",
    "ruff",
    "isort",
]


EXTRAS_REQUIRE = {
    "tests": TESTS_REQUIRES,
    "quality": QUALITY_REQUIRES,
}

setup(
    name="optimum-san",
    version=__version__,
    description=(
        "Optimum SAN trains a single set of meta learners producing convolutional networks for any input "
        "resolution, along with per-resolution batch normalization and test-time parameterization strategies."
    ),
    long_description=open("README.md", "r", encoding="utf-8").read(),
    long_description_content_type="text/markdown",
    classifiers=[
        "Development Status :: 2 - Pre-Alpha",
        "License :: OSI Approved :: Apache Software License",
        "Intended Audience :: Developers",
        "Intended Audience :: Education",
        "Intended Audience :: Science/Research",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3.10",
        "Topic :: Scientific/Engineering :: Artificial Intelligence",
    ],
    keywords="neural-network, image-classification, multi-resolution, meta-learning, batch-normalization",
    author="HuggingFace Inc. Machine Learning Optimization Team",
    author_email="hardware@huggingface.co",
    license="Apache 2.0",
    package_dir={"": "src"},
    packages=find_namespace_packages(where="src", include=["optimum*"]),
    install_requires=INSTALL_REQUIRES,
    extras_require=EXTRAS_REQUIRE,
    entry_points={"console_scripts": ["optimum-san = optimum.san.cli:main"]},
    include_package_data=True,
    zip_safe=False,
)
