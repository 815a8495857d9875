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
"""Exception types raised by the library.

Everything a caller can fix by changing its input derives from ValueError, so the
CLI can report it with exit code 1. InvariantViolation marks internal breaches.
"""


class GraphInputError(ValueError):
    """Unknown or overlapping node sets, cycles, malformed edge lists."""


class UndefinedConditionalError(ValueError):
    """A conditional probability was requested on a zero-probability event."""


class UndefinedEstimateError(ValueError):
    """A plug-in estimate needs counts that the table does not have."""


class DegenerateWeightsError(ValueError):
    """Every importance weight underflowed to zero."""


class ConfigError(ValueError):
    """Invalid run, prior or CLI configuration."""


class TableFormatError(ValueError):
    """An input file could not be parsed into the expected structure."""


class InvariantViolation(RuntimeError):
    """An internal invariant does not hold. This is a bug, not bad input."""
