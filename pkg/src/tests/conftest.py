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
"""Contains pytest fixtures used in multiple unit tests."""

import numpy as np
import pytest

from causal.graph import Dag, m_graph
from causal.model import ContingencyTable
from causal.schemas import GenerativeParams, PriorSpec, RunConfig
from inference.mcmc import Chain, WeightedDraws, importance_sampler, independence_sampler
from lib.constants import TABLE1_COUNTS

# Reduced schedule used for the Table 1 posterior checks.
TABLE1_RUN = RunConfig(burn_in=50_000, total=10_000_000, thin=2500, seed=20190117)
ORACLE_DRAWS = 1_000_000


@pytest.fixture
def table1() -> ContingencyTable:
    return ContingencyTable.from_cells(TABLE1_COUNTS)


@pytest.fixture
def empty_table() -> ContingencyTable:
    return ContingencyTable.empty()


@pytest.fixture
def m_dag() -> Dag:
    return m_graph()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture
def prior_spec() -> PriorSpec:
    return PriorSpec()


@pytest.fixture
def biased_params() -> GenerativeParams:
    """Generative parameters whose back-door strata miss the true effect by a wide margin."""
    return GenerativeParams(
        p_u=0.5,
        p_w=0.5,
        cpt_z=((0.05, 0.5), (0.5, 0.95)),
        cpt_t=(0.1, 0.9),
        theta=((0.1, 0.8), (0.3, 0.9)),
    )


@pytest.fixture(scope="session")
def table1_chain() -> Chain:
    return independence_sampler(ContingencyTable.from_cells(TABLE1_COUNTS), PriorSpec(), TABLE1_RUN)


@pytest.fixture(scope="session")
def table1_oracle() -> WeightedDraws:
    return importance_sampler(
        ContingencyTable.from_cells(TABLE1_COUNTS), PriorSpec(), ORACLE_DRAWS, np.random.default_rng(7)
    )


@pytest.fixture(scope="session")
def prior_chain() -> Chain:
    """Every proposal is accepted under the empty table, so the kept draws are prior draws."""
    return independence_sampler(
        ContingencyTable.empty(), PriorSpec(), RunConfig(burn_in=0, total=100_000, thin=25, seed=99)
    )
