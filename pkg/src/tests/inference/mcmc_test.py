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
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from pydantic import ValidationError

from causal.model import ContingencyTable, psi
from causal.schemas import PriorSpec, RunConfig
from inference import mcmc
from inference.analysis import monte_carlo_se
from lib.errors import ConfigError, DegenerateWeightsError

SMALL_RUN = RunConfig(burn_in=1000, total=20_000, thin=100, seed=5, block_size=4096)


def _empirical_psi(tab: ContingencyTable) -> np.ndarray:
    counts = tab.counts
    return (counts[:, :, 1] / counts.sum(axis=2)).T  # [z, t]


def test_sample_prior_moments(rng, prior_spec):
    batch = mcmc.sample_prior_batch(prior_spec, rng, 100_000)
    assert abs(batch.theta.mean() - 0.5) < 0.01
    assert abs(batch.theta.var() - 1 / 12) < 0.005
    assert np.all(np.abs(batch.omega[:, 0, :].mean(axis=0) - 0.5) < 0.01)
    assert np.all(np.abs(batch.alpha[:, 0].mean(axis=0) - 0.5) < 0.01)
    assert abs(batch.nu[:, 0].mean() - 0.5) < 0.01


def test_sample_prior_general_k(rng):
    batch = mcmc.sample_prior_batch(PriorSpec(K=3), rng, 100_000)
    assert batch.theta.shape == (100_000, 2, 3)
    assert batch.alpha.shape == (100_000, 3, 2, 2)
    assert np.all(np.abs(batch.omega.mean(axis=0) - 1 / 3) < 0.01)
    assert np.allclose(batch.alpha.sum(axis=1), 1.0, atol=1e-12)


def test_sample_prior_draw_is_valid(rng, prior_spec):
    draw = mcmc.sample_prior(prior_spec, rng)
    draw.validate()
    assert draw.K == 2


def test_sample_prior_is_seeded(prior_spec):
    first = mcmc.sample_prior_batch(prior_spec, np.random.default_rng(1), 10)
    second = mcmc.sample_prior_batch(prior_spec, np.random.default_rng(1), 10)
    for name in ("theta", "alpha", "omega", "nu"):
        assert np.array_equal(getattr(first, name), getattr(second, name))


def test_sample_prior_non_unit_concentration(rng):
    spec = PriorSpec(omega_concentration=5.0, theta_a=2.0, theta_b=2.0)
    batch = mcmc.sample_prior_batch(spec, rng, 50_000)
    # Dirichlet(5, 5) and Beta(2, 2) both have variance below the uniform case.
    assert batch.omega[:, 0].var() < 1 / 12
    assert abs(batch.theta.var() - 0.05) < 0.005


def test_prior_spec_validation():
    with pytest.raises(ValidationError):
        PriorSpec(K=1)
    with pytest.raises(ValidationError):
        PriorSpec(alpha_concentration=0.0)


def test_log_likelihood_examples(table1, empty_table):
    assert mcmc.log_likelihood(np.full((2, 2), 0.3), empty_table) == 0.0
    assert mcmc.log_likelihood(np.full((2, 2), 0.5), table1) == pytest.approx(627 * math.log(0.5))


def test_log_likelihood_matches_per_record_sum(table1):
    table = _empirical_psi(table1)
    brute = 0.0
    for record in table1.to_records():
        p = table[record.z, record.t]
        brute += math.log(p) if record.y == 1 else math.log(1.0 - p)
    assert abs(mcmc.log_likelihood(table, table1) - brute) < 1e-9


def test_log_likelihood_maximised_at_frequencies(table1, rng):
    best = mcmc.log_likelihood(_empirical_psi(table1), table1)
    for _ in range(100):
        other = np.clip(_empirical_psi(table1) + rng.normal(0.0, 0.05, (2, 2)), 0.01, 0.99)
        assert mcmc.log_likelihood(other, table1) <= best


def test_log_likelihood_degenerate_psi(table1):
    table = np.full((2, 2), 0.5)
    table[1, 1] = 0.0
    assert mcmc.log_likelihood(table, table1) == -np.inf
    one_cell = ContingencyTable.from_cells({(1, 1, 1): 3})
    table = np.zeros((2, 2))
    table[1, 1] = 1.0
    assert mcmc.log_likelihood(table, one_cell) == 0.0


def test_log_likelihood_batched(table1, rng, prior_spec):
    batch = mcmc.sample_prior_batch(prior_spec, rng, 8)
    tables = psi(batch.theta, batch.alpha)
    values = mcmc.log_likelihood(tables, table1)
    assert values.shape == (8,)
    assert values[3] == pytest.approx(mcmc.log_likelihood(tables[3], table1))


def test_infer_nu(table1, empty_table, prior_spec):
    assert mcmc.infer_nu(empty_table, prior_spec).concentration.tolist() == [1.0, 1.0]
    assert mcmc.infer_nu(table1, prior_spec).concentration.tolist() == [183.0, 446.0]
    single = ContingencyTable.from_cells({(0, 1, 0): 1})
    posterior = mcmc.infer_nu(single, prior_spec)
    assert posterior.concentration.tolist() == [1.0, 2.0]
    assert posterior.mean.tolist() == pytest.approx([1 / 3, 2 / 3])
    assert posterior.var.tolist() == pytest.approx([1 / 18, 1 / 18])
    assert mcmc.infer_nu(empty_table, prior_spec).var.tolist() == pytest.approx([1 / 12, 1 / 12])


def test_run_config_kept_counts():
    assert RunConfig(burn_in=50_000, total=200_000_000, thin=50_000).kept == 3999
    assert RunConfig(burn_in=50_000, total=10_000_000, thin=2500).kept == 3980
    with pytest.raises(ValidationError):
        RunConfig(burn_in=10, total=5)


def test_independence_sampler_without_iterations(empty_table, prior_spec):
    chain = mcmc.independence_sampler(empty_table, prior_spec, RunConfig(burn_in=0, total=0, thin=1))
    assert len(chain) == 0
    assert chain.proposed == 0
    assert chain.acceptance_rate is None


def test_independence_sampler_rejects_short_total(table1, prior_spec):
    config = RunConfig.model_construct(burn_in=10, total=5, thin=1, seed=0, block_size=8)
    with pytest.raises(ConfigError):
        mcmc.independence_sampler(table1, prior_spec, config)


def test_independence_sampler_schedule(table1, prior_spec):
    chain = mcmc.independence_sampler(table1, prior_spec, SMALL_RUN)
    assert len(chain) == SMALL_RUN.kept == 190
    assert chain.iterations.tolist() == list(range(1100, 20_001, 100))
    assert chain.proposed == 20_000
    assert 0 <= chain.accepted <= chain.proposed
    assert chain.psi.shape == (190, 2, 2)
    assert np.allclose(chain.log_likelihood, mcmc.log_likelihood(chain.psi, table1))
    for draw in chain.draws:
        draw.validate()


def test_independence_sampler_is_deterministic(table1, prior_spec):
    first = mcmc.independence_sampler(table1, prior_spec, SMALL_RUN)
    second = mcmc.independence_sampler(table1, prior_spec, SMALL_RUN)
    assert first.accepted == second.accepted
    for name in ("theta", "alpha", "omega", "nu"):
        assert np.array_equal(getattr(first.draws, name), getattr(second.draws, name))
    other = mcmc.independence_sampler(table1, prior_spec, SMALL_RUN.model_copy(update={"seed": 6}))
    assert not np.array_equal(first.draws.theta, other.draws.theta)


def test_independence_sampler_tracks_state_across_blocks(table1, prior_spec):
    """With every iteration kept, the kept sequence changes exactly at accepted proposals."""
    config = RunConfig(burn_in=0, total=5000, thin=1, seed=8, block_size=64)
    chain = mcmc.independence_sampler(table1, prior_spec, config)
    changes = int(np.sum(np.any(chain.draws.theta[1:] != chain.draws.theta[:-1], axis=(1, 2))))
    # A move at iteration 1 leaves the unobserved initial state and is not a visible change.
    assert chain.accepted - 1 <= changes <= chain.accepted
    assert chain.accepted > 0


def test_independence_sampler_accepts_everything_under_flat_likelihood(prior_chain):
    assert prior_chain.accepted == prior_chain.proposed
    assert prior_chain.acceptance_rate == 1.0


def test_prior_recovery_under_flat_likelihood(prior_chain):
    n = len(prior_chain)
    assert n == 4000
    theta = prior_chain.draws.theta.reshape(n, -1)
    assert abs(theta.mean() - 0.5) < 0.02
    assert abs(theta.var() - 1 / 12) < 0.01
    # Kept draws are independent; every pooled block below has uniform(0, 1) marginals.
    pooled = {
        "theta": theta.ravel(),
        "alpha": prior_chain.draws.alpha[:, 0].ravel(),
        "omega": prior_chain.draws.omega[:, 0].ravel(),
        "nu": prior_chain.draws.nu[:, 0],
    }
    for name, values in pooled.items():
        for moment, expected in ((values, 0.5), (values**2, 1 / 3)):
            standard_error = moment.std() / math.sqrt(len(moment))
            assert abs(moment.mean() - expected) < 3 * standard_error, name


def test_run_chains_uses_spawned_streams(table1, prior_spec, mocker):
    mocker.patch("inference.mcmc.ProcessPoolExecutor", ThreadPoolExecutor)
    chains = mcmc.run_chains(table1, prior_spec, SMALL_RUN, n_chains=2)
    assert [c.chain_ids[0] for c in chains] == [0, 1]
    assert not np.array_equal(chains[0].draws.theta, chains[1].draws.theta)
    again = mcmc.run_chains(table1, prior_spec, SMALL_RUN, n_chains=2)
    assert np.array_equal(chains[1].draws.theta, again[1].draws.theta)

    merged = mcmc.merge_chains(chains)
    assert len(merged) == 2 * SMALL_RUN.kept
    assert merged.accepted == chains[0].accepted + chains[1].accepted
    assert merged.proposed == 2 * SMALL_RUN.total
    assert merged.chain_ids.tolist() == [0] * SMALL_RUN.kept + [1] * SMALL_RUN.kept


def test_run_chains_single_chain_uses_seed(table1, prior_spec):
    [chain] = mcmc.run_chains(table1, prior_spec, SMALL_RUN)
    assert np.array_equal(chain.draws.theta, mcmc.independence_sampler(table1, prior_spec, SMALL_RUN).draws.theta)
    assert mcmc.merge_chains([chain]) is chain


def test_run_chains_validation(table1, prior_spec):
    with pytest.raises(ConfigError):
        mcmc.run_chains(table1, prior_spec, SMALL_RUN, n_chains=0)
    with pytest.raises(ValueError):
        mcmc.merge_chains([])


def test_importance_sampler_flat_likelihood(empty_table, prior_spec, rng):
    weighted = mcmc.importance_sampler(empty_table, prior_spec, 1000, rng, block_size=300)
    assert len(weighted) == 1000
    assert np.allclose(weighted.weights, 1 / 1000)
    assert weighted.ess == pytest.approx(1000)


def test_importance_sampler_single_draw(table1, prior_spec, rng):
    weighted = mcmc.importance_sampler(table1, prior_spec, 1, rng)
    assert weighted.weights.tolist() == [1.0]
    assert weighted.ess == 1.0


def test_importance_sampler_validation(table1, prior_spec, rng, mocker):
    with pytest.raises(ValueError):
        mcmc.importance_sampler(table1, prior_spec, 0, rng)
    mocker.patch("inference.mcmc.log_likelihood", return_value=np.full(10, -np.inf))
    with pytest.raises(DegenerateWeightsError):
        mcmc.importance_sampler(table1, prior_spec, 10, rng)


def test_importance_sampler_nu_from_posterior(table1, prior_spec, rng):
    weighted = mcmc.importance_sampler(table1, prior_spec, 20_000, rng)
    expected = mcmc.infer_nu(table1, prior_spec).mean
    # nu does not enter the weights; its draws follow the conjugate posterior directly.
    assert weighted.draws.nu[:, 1].mean() == pytest.approx(expected[1], abs=0.002)


@pytest.mark.slow
def test_posterior_psi_is_identified(table1_chain, table1):
    frequencies = _empirical_psi(table1)
    means = table1_chain.psi.mean(axis=0)
    assert abs(means[1, 1] - 0.8) < 0.05
    assert abs(means[0, 1] - frequencies[0, 1]) < 0.05
    assert abs(means[1, 0] - frequencies[1, 0]) < 0.05
    # Only 35 records fall in the (z=0, t=0) cell, so the prior pulls its mean up.
    assert abs(means[0, 0] - frequencies[0, 0]) < 0.06
    assert np.all(table1_chain.psi.std(axis=0) <= 0.06)


@pytest.mark.slow
def test_posterior_omega_is_prior(table1_chain):
    omega = table1_chain.draws.omega[:, 0, :]
    assert np.all(np.abs(omega.mean(axis=0) - 0.5) < 0.02)
    assert np.all(np.abs(omega.var(axis=0) - 1 / 12) < 0.01)


@pytest.mark.slow
def test_posterior_nu_is_conjugate(table1_chain, table1, prior_spec):
    posterior = mcmc.infer_nu(table1, prior_spec)
    assert np.allclose(table1_chain.draws.nu.mean(axis=0), posterior.mean, atol=0.005)
    assert np.allclose(table1_chain.draws.nu.var(axis=0, ddof=1), posterior.var, rtol=0.15)


@pytest.mark.slow
def test_posterior_psi_matches_oracle(table1_chain, table1_oracle):
    for z in (0, 1):
        for t in (0, 1):
            chain_values = table1_chain.psi[:, z, t]
            oracle_values = table1_oracle.psi[:, z, t]
            combined = math.hypot(monte_carlo_se(chain_values), table1_oracle.standard_error(oracle_values))
            difference = chain_values.mean() - table1_oracle.posterior_mean(oracle_values)
            assert abs(difference) < 3 * combined, (z, t)
