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
"""Posterior computation for the two-plate model.

The independence sampler proposes every parameter block from the prior, so the
Metropolis-Hastings ratio reduces to the likelihood ratio L(psi*) / L(psi): the
prior terms of the target and of the proposal density cancel. Proposals are drawn
in vectorised blocks and only the accept/reject scan runs sequentially.

nu and omega never enter the likelihood. Each kept draw receives nu from its
conjugate Dirichlet posterior and omega from its prior, which is also its
posterior because the prior treats omega as independent of alpha.
"""

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Sequence

import numpy as np
from scipy import special, stats

from causal.model import ContingencyTable, ParameterBatch, ParameterDraw, psi, rho
from causal.schemas import PriorSpec, RunConfig
from lib.errors import ConfigError, DegenerateWeightsError, InvariantViolation
from lib.rng import make_rng, spawn_seed_sequences

logger = logging.getLogger(__name__)


def _dirichlet(rng: np.random.Generator, concentration: float, shape, axis: int) -> np.ndarray:
    # Unit concentration: normalised unit-rate exponentials.
    if concentration == 1.0:
        gammas = rng.standard_exponential(shape)
    else:
        gammas = rng.standard_gamma(concentration, shape)
    return gammas / gammas.sum(axis=axis, keepdims=True)


def sample_prior_batch(spec: PriorSpec, rng: np.random.Generator, size: int) -> ParameterBatch:
    """Draw ``size`` independent parameter sets from the prior.

    Draw order is theta, alpha, omega, nu; the sampler's determinism depends on it.
    """
    K = spec.K
    if spec.theta_a == 1.0 and spec.theta_b == 1.0:
        theta = rng.random((size, 2, K))
    else:
        theta = rng.beta(spec.theta_a, spec.theta_b, (size, 2, K))
    alpha = _dirichlet(rng, spec.alpha_concentration, (size, K, 2, 2), axis=1)
    omega = _dirichlet(rng, spec.omega_concentration, (size, K, 2), axis=1)
    nu = _dirichlet(rng, spec.nu_concentration, (size, 2), axis=1)
    return ParameterBatch(theta=theta, alpha=alpha, omega=omega, nu=nu)


def sample_prior(spec: PriorSpec, rng: np.random.Generator) -> ParameterDraw:
    """Draw one parameter set from the prior."""
    return sample_prior_batch(spec, rng, 1)[0]


def log_likelihood(psi_table: np.ndarray, tab: ContingencyTable):
    """Aggregated Bernoulli log-likelihood of the observed Y given psi[z, t].

    sum_{t,z} c[t,z,1] log psi[z,t] + c[t,z,0] log(1 - psi[z,t]). A zero count
    contributes nothing even at psi in {0, 1}; a positive count facing a
    probability of zero yields -inf. Leading batch dimensions are reduced per draw.
    """
    table = np.clip(np.asarray(psi_table, dtype=float), 0.0, 1.0)
    ones = tab.counts[:, :, 1].T  # [z, t]
    zeros = tab.counts[:, :, 0].T
    terms = special.xlogy(ones, table) + special.xlogy(zeros, 1.0 - table)
    result = terms.sum(axis=(-2, -1))
    return float(result) if np.ndim(result) == 0 else result


class NuPosterior(NamedTuple):
    """Dirichlet posterior of nu over z."""

    concentration: np.ndarray

    @property
    def mean(self) -> np.ndarray:
        return stats.dirichlet.mean(self.concentration)

    @property
    def var(self) -> np.ndarray:
        return stats.dirichlet.var(self.concentration)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.dirichlet(self.concentration, size=size)


def infer_nu(tab: ContingencyTable, spec: PriorSpec) -> NuPosterior:
    """Conjugate update of nu: concentration prior + number of records with Z=z."""
    z_counts = tab.counts.sum(axis=(0, 2))
    return NuPosterior(concentration=spec.nu_concentration + z_counts.astype(float))


@dataclass(frozen=True)
class Chain:
    """Kept draws of one or more independence-sampler runs.

    ``draws`` holds the kept parameter sets in chain order; ``psi`` and ``rho`` are
    their derived tables, ``iterations`` the iteration numbers they were kept at
    and ``chain_ids`` the chain each draw came from.
    """

    draws: ParameterBatch
    psi: np.ndarray
    rho: np.ndarray
    log_likelihood: np.ndarray
    iterations: np.ndarray
    chain_ids: np.ndarray
    accepted: int
    proposed: int
    config: RunConfig
    spec: PriorSpec

    def __len__(self) -> int:
        return len(self.draws)

    @property
    def acceptance_rate(self) -> Optional[float]:
        """Accepted over proposed iterations; None when nothing was proposed."""
        return self.accepted / self.proposed if self.proposed else None


def _empty_batch(K: int) -> ParameterBatch:
    return ParameterBatch(
        theta=np.empty((0, 2, K)), alpha=np.empty((0, K, 2, 2)), omega=np.empty((0, K, 2)), nu=np.empty((0, 2))
    )


def _refresh_unidentified(
    draws: ParameterBatch, tab: ContingencyTable, spec: PriorSpec, rng: np.random.Generator
) -> ParameterBatch:
    size = len(draws)
    omega = _dirichlet(rng, spec.omega_concentration, (size, spec.K, 2), axis=1)
    nu = infer_nu(tab, spec).sample(rng, size)
    return draws.replace(omega=omega, nu=nu)


def independence_sampler(
    tab: ContingencyTable,
    spec: PriorSpec,
    config: RunConfig,
    rng: Optional[np.random.Generator] = None,
    chain_id: int = 0,
) -> Chain:
    """Run the prior-proposal independence sampler on the observational table.

    A proposal theta*, alpha* is accepted when
    log L(psi*) - log L(psi) > log u with u ~ Uniform(0, 1), implemented as
    log L(psi*) + e > log L(psi) with e = -log u ~ Exponential(1).

    Args:
        tab (ContingencyTable): Observed counts.
        spec (PriorSpec): Prior, also the proposal.
        config (RunConfig): Iteration schedule.
        rng (np.random.Generator): Random stream; defaults to one seeded with config.seed.
        chain_id (int): Label stored with the kept draws.

    Returns:
        Chain: ``config.kept`` draws, deterministic given the random stream.

    Raises:
        ConfigError: If total < burn_in.
    """
    if config.total < config.burn_in:
        raise ConfigError(f"total ({config.total}) must be at least burn_in ({config.burn_in}).")
    rng = rng if rng is not None else make_rng(config.seed)
    keep_at = config.burn_in + config.thin * np.arange(1, config.kept + 1, dtype=np.int64)

    state = sample_prior_batch(spec, rng, 1)
    current = log_likelihood(psi(state.theta, state.alpha), tab)[0]
    state_ll = np.array([current])

    kept_batches: List[ParameterBatch] = []
    kept_ll: List[np.ndarray] = []
    accepted = 0
    done = 0
    started = time.monotonic()
    while done < config.total:
        n = min(config.block_size, config.total - done)
        proposals = sample_prior_batch(spec, rng, n)
        proposal_ll = log_likelihood(psi(proposals.theta, proposals.alpha), tab)
        scores = (proposal_ll + rng.standard_exponential(n)).tolist()
        lls = proposal_ll.tolist()

        positions = []
        for j in range(n):
            if scores[j] > current:
                current = lls[j]
                positions.append(j)
        accepted_at = np.asarray(positions, dtype=np.int64)

        window = keep_at[(keep_at > done) & (keep_at <= done + n)]
        if window.size:
            # Row 0 of `pool` is the state carried in from the previous block.
            pool = ParameterBatch.concatenate([state, proposals])
            pool_ll = np.concatenate([state_ll, proposal_ll])
            latest = np.searchsorted(done + 1 + accepted_at, window, side="right") - 1
            rows = np.zeros(window.size, dtype=np.int64)
            moved = latest >= 0
            rows[moved] = accepted_at[latest[moved]] + 1
            kept_batches.append(pool.take(rows))
            kept_ll.append(pool_ll[rows])

        if accepted_at.size:
            state = proposals.take(accepted_at[-1:])
            state_ll = proposal_ll[accepted_at[-1:]]
        accepted += int(accepted_at.size)
        done += n
        logger.debug(f"chain {chain_id}: {done}/{config.total} iterations, {accepted} accepted")

    draws = ParameterBatch.concatenate(kept_batches) if kept_batches else _empty_batch(spec.K)
    if len(draws) != config.kept:
        raise InvariantViolation(f"Kept {len(draws)} draws, expected {config.kept}.")
    draws = _refresh_unidentified(draws, tab, spec, rng)
    logger.info(
        f"chain {chain_id}: {accepted}/{config.total} proposals accepted "
        f"({accepted / max(config.total, 1):.3g}), {len(draws)} draws kept in {time.monotonic() - started:.1f}s"
    )
    return Chain(
        draws=draws,
        psi=psi(draws.theta, draws.alpha),
        rho=rho(draws.theta, draws.omega),
        log_likelihood=np.concatenate(kept_ll) if kept_ll else np.empty(0),
        iterations=keep_at,
        chain_ids=np.full(len(draws), chain_id, dtype=np.int64),
        accepted=accepted,
        proposed=config.total,
        config=config,
        spec=spec,
    )


def _run_chain(tab: ContingencyTable, spec: PriorSpec, config: RunConfig, seed_sequence, chain_id: int) -> Chain:
    rng = np.random.Generator(np.random.PCG64(seed_sequence))
    return independence_sampler(tab, spec, config, rng, chain_id=chain_id)


def run_chains(
    tab: ContingencyTable,
    spec: PriorSpec,
    config: RunConfig,
    n_chains: int = 1,
    max_workers: Optional[int] = None,
) -> List[Chain]:
    """Run independent chains, in worker processes when there is more than one.

    A single chain uses ``config.seed`` directly; several chains use the streams
    of ``SeedSequence(config.seed).spawn(n_chains)``. Results are in chain order.
    """
    if n_chains < 1:
        raise ConfigError(f"Number of chains must be positive, got {n_chains}.")
    if n_chains == 1:
        return [independence_sampler(tab, spec, config, make_rng(config.seed))]
    seed_sequences = spawn_seed_sequences(config.seed, n_chains)
    with ProcessPoolExecutor(max_workers=max_workers or n_chains) as executor:
        futures = [
            executor.submit(_run_chain, tab, spec, config, seed_sequence, chain_id)
            for chain_id, seed_sequence in enumerate(seed_sequences)
        ]
        return [future.result() for future in futures]


def merge_chains(chains: Sequence[Chain]) -> Chain:
    """Concatenate chains in order; counts are summed."""
    if not chains:
        raise ValueError("No chains to merge.")
    if len(chains) == 1:
        return chains[0]
    return Chain(
        draws=ParameterBatch.concatenate([c.draws for c in chains]),
        psi=np.concatenate([c.psi for c in chains]),
        rho=np.concatenate([c.rho for c in chains]),
        log_likelihood=np.concatenate([c.log_likelihood for c in chains]),
        iterations=np.concatenate([c.iterations for c in chains]),
        chain_ids=np.concatenate([c.chain_ids for c in chains]),
        accepted=sum(c.accepted for c in chains),
        proposed=sum(c.proposed for c in chains),
        config=chains[0].config,
        spec=chains[0].spec,
    )


@dataclass(frozen=True)
class WeightedDraws:
    """Prior draws with self-normalised importance weights proportional to L(psi)."""

    draws: ParameterBatch
    psi: np.ndarray
    rho: np.ndarray
    log_weights: np.ndarray
    weights: np.ndarray

    def __len__(self) -> int:
        return len(self.draws)

    @property
    def ess(self) -> float:
        """Effective sample size 1 / sum_i w_i^2."""
        return float(1.0 / np.sum(self.weights**2))

    def posterior_mean(self, values: np.ndarray) -> float:
        return float(np.dot(self.weights, values))

    def standard_error(self, values: np.ndarray) -> float:
        """Delta-method standard error of the self-normalised estimate."""
        centred = values - self.posterior_mean(values)
        return float(np.sqrt(np.sum(self.weights**2 * centred**2)))


def importance_sampler(
    tab: ContingencyTable,
    spec: PriorSpec,
    n: int,
    rng: np.random.Generator,
    block_size: int = 65_536,
) -> WeightedDraws:
    """Weight ``n`` prior draws by their likelihood.

    Raises:
        ValueError: If n < 1.
        DegenerateWeightsError: If every draw has zero likelihood.
    """
    if n < 1:
        raise ValueError(f"Importance sampling needs at least one draw, got {n}.")
    batches = []
    for start in range(0, n, block_size):
        batches.append(sample_prior_batch(spec, rng, min(block_size, n - start)))
    draws = ParameterBatch.concatenate(batches)
    draws = draws.replace(nu=infer_nu(tab, spec).sample(rng, n))
    psi_table = psi(draws.theta, draws.alpha)
    log_weights = np.atleast_1d(log_likelihood(psi_table, tab))
    if not np.any(np.isfinite(log_weights)):
        raise DegenerateWeightsError(f"All {n} importance weights are zero.")
    weights = np.exp(log_weights - special.logsumexp(log_weights))
    result = WeightedDraws(
        draws=draws,
        psi=psi_table,
        rho=rho(draws.theta, draws.omega),
        log_weights=log_weights,
        weights=weights,
    )
    logger.info(f"importance sampling: {n} draws, effective sample size {result.ess:.1f}")
    return result
