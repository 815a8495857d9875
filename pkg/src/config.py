# Copyright 2026 The mbias-twoplate Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#    https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import os
import sys
import tomllib

from lib.constants import PROJECT_DIR


def get_config() -> dict:
    """Load the settings from the settings.toml file."""
    settings_from_env = os.getenv("MBIAS_SETTINGS")
    settings_file = os.path.join(PROJECT_DIR, "settings.toml")
    # Tests and fresh checkouts run against the shipped example settings.
    if "pytest" in sys.modules or not os.path.isfile(settings_file):
        settings_file = os.path.join(PROJECT_DIR, "settings_example.toml")
    # Read path to settings file from the environment and use that if available.
    if settings_from_env and os.path.isfile(settings_from_env):
        settings_file = settings_from_env

    with open(settings_file, "rb") as fh:
        config = tomllib.load(fh)
    return config
