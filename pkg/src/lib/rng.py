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
"""Seeding and stream splitting for reproducible runs.

A single chain draws from ``numpy.random.default_rng(seed)``. Independent chains
use ``SeedSequence(seed).spawn(n)``, so chain i of a run with seed s is the same
stream regardless of how many worker processes execute the run.
"""

from typing import List

import numpy as np


def make_rng(seed: int) -> np.random.Generator:
    """Return the generator for a single-stream run."""
    return np.random.default_rng(seed)


def spawn_seed_sequences(seed: int, n_streams: int) -> List[np.random.SeedSequence]:
    """Split a run seed into independent child seed sequences.

    Args:
        seed (int): The run seed.
        n_streams (int): Number of child streams.

    Returns:
        List[np.random.SeedSequence]: One seed sequence per stream, in order.
    """
    if n_streams < 1:
        raise ValueError(f"Number of streams must be positive, got {n_streams}.")
    return np.random.SeedSequence(seed).spawn(n_streams)


# Spawn key of the importance-sampling stream; chain streams use keys 0..n-1.
ORACLE_STREAM = 2**31 - 1


def oracle_rng(seed: int) -> np.random.Generator:
    """Generator for the importance-sampling oracle of a run, independent of every chain."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(ORACLE_STREAM,))))
