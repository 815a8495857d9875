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
"""Treatment effects of posterior draws, summaries and report artifacts."""

import logging
import math
import os
from typing import Callable, Dict, List, Optional

import numpy as np

from causal.model import ParameterBatch, ParameterDraw, rho as rho_table
from causal.schemas import ChainSummary, CorrelationSummary, EffectSample, OracleComparison, QuantitySummary
from inference.mcmc import Chain, WeightedDraws
from lib.errors import UndefinedEstimateError

logger = logging.getLogger(__name__)

# Quantities compared against the importance-sampling oracle.
ORACLE_QUANTITIES = (
    "psi_z0_t0",
    "psi_z0_t1",
    "psi_z1_t0",
    "psi_z1_t1",
    "d_w0",
    "d_w1",
    "ate_half_sum",
    "ate_marginal",
)

CORRELATION_PAIRS = {
    "d_w0_d_w1": ("d_w0", "d_w1"),
    "d_z0_d_z1": ("d_z0", "d_z1"),
}

MIN_CORRELATION_DRAWS = 3


def effects_of_draw(d: ParameterDraw) -> EffectSample:
    """Treatment effects implied by one draw.

    For K > 2 ``d_w`` is the vector theta[1, :] - theta[0, :] and the half-sum ATE
    generalizes to its plain average.
    """
    d_w = d.theta[1] - d.theta[0]
    r = rho_table(d.theta, d.omega)
    d_z = r[:, 1] - r[:, 0]
    return EffectSample(
        d_w=tuple(float(v) for v in d_w),
        d_z=(float(d_z[0]), float(d_z[1])),
        ate_half_sum=float(d_w.mean()),
        ate_marginal=float(np.dot(d.nu, d_z)),
    )


def effects_of_batch(draws: ParameterBatch, rho: Optional[np.ndarray] = None) -> Dict[str, np.ndarray]:
    """Vectorised ``effects_of_draw``; returns d_w (n, K), d_z (n, 2) and both ATEs (n,)."""
    if rho is None:
        rho = rho_table(draws.theta, draws.omega)
    d_w = draws.theta[:, 1, :] - draws.theta[:, 0, :]
    d_z = rho[:, :, 1] - rho[:, :, 0]
    return {
        "d_w": d_w,
        "d_z": d_z,
        "ate_half_sum": d_w.mean(axis=1),
        "ate_marginal": np.einsum("nz,nz->n", draws.nu, d_z),
    }


def draw_columns(draws: ParameterBatch, psi: np.ndarray, rho: np.ndarray) -> Dict[str, np.ndarray]:
    """Named per-draw columns: every parameter entry, psi, rho and the effects.

    Column names: theta_t{t}_w{w}, alpha_w{w}_z{z}_t{t}, omega_w{w}_z{z}, nu_z{z},
    psi_z{z}_t{t}, rho_z{z}_t{t}, d_w{w}, d_z{z}, ate_half_sum, ate_marginal.
    """
    K = draws.K
    columns: Dict[str, np.ndarray] = {}
    for t in (0, 1):
        for w in range(K):
            columns[f"theta_t{t}_w{w}"] = draws.theta[:, t, w]
    for w in range(K):
        for z in (0, 1):
            for t in (0, 1):
                columns[f"alpha_w{w}_z{z}_t{t}"] = draws.alpha[:, w, z, t]
    for w in range(K):
        for z in (0, 1):
            columns[f"omega_w{w}_z{z}"] = draws.omega[:, w, z]
    for z in (0, 1):
        columns[f"nu_z{z}"] = draws.nu[:, z]
    for name, table in (("psi", psi), ("rho", rho)):
        for z in (0, 1):
            for t in (0, 1):
                columns[f"{name}_z{z}_t{t}"] = table[:, z, t]
    effects = effects_of_batch(draws, rho)
    for w in range(K):
        columns[f"d_w{w}"] = effects["d_w"][:, w]
    for z in (0, 1):
        columns[f"d_z{z}"] = effects["d_z"][:, z]
    columns["ate_half_sum"] = effects["ate_half_sum"]
    columns["ate_marginal"] = effects["ate_marginal"]
    return columns


def chain_columns(chain: Chain) -> Dict[str, np.ndarray]:
    """The chain CSV table: iteration and chain id followed by ``draw_columns``."""
    columns = {"iteration": chain.iterations, "chain": chain.chain_ids}
    columns.update(draw_columns(chain.draws, chain.psi, chain.rho))
    return columns


def monte_carlo_se(values: np.ndarray, n_batches: int = 20) -> Optional[float]:
    """Batch-means standard error of a chain average; None for fewer than 4 draws."""
    values = np.asarray(values, dtype=float)
    n_batches = min(n_batches, len(values) // 2)
    if n_batches < 2:
        return None
    size = len(values) // n_batches
    means = values[: size * n_batches].reshape(n_batches, size).mean(axis=1)
    return float(np.std(means, ddof=1) / math.sqrt(n_batches))


def _mean(values: np.ndarray) -> float:
    return math.fsum(values.tolist()) / len(values)


def _summarize_values(values: np.ndarray) -> QuantitySummary:
    mean = _mean(values)
    if len(values) > 1:
        std = math.sqrt(math.fsum(((values - mean) ** 2).tolist()) / (len(values) - 1))
    else:
        std = 0.0
    q05, q95 = np.quantile(values, [0.05, 0.95])
    return QuantitySummary(mean=mean, std=std, q05=float(q05), q95=float(q95), mcse=monte_carlo_se(values))


def pearson(a: np.ndarray, b: np.ndarray) -> CorrelationSummary:
    """Pearson correlation, flagged undefined for short or constant inputs."""
    if len(a) < MIN_CORRELATION_DRAWS:
        return CorrelationSummary(defined=False, reason=f"fewer than {MIN_CORRELATION_DRAWS} draws")
    da = a - _mean(a)
    db = b - _mean(b)
    saa = math.fsum((da * da).tolist())
    sbb = math.fsum((db * db).tolist())
    if saa == 0.0 or sbb == 0.0:
        return CorrelationSummary(defined=False, reason="zero variance")
    value = math.fsum((da * db).tolist()) / math.sqrt(saa * sbb)
    return CorrelationSummary(value=max(-1.0, min(1.0, value)), defined=True)


def summarize_columns(
    columns: Dict[str, np.ndarray], accepted: Optional[int] = None, proposed: Optional[int] = None
) -> ChainSummary:
    """Summary statistics of chain columns (as produced by ``chain_columns``).

    Raises:
        UndefinedEstimateError: If there are no draws.
    """
    quantities = {name: values for name, values in columns.items() if name not in ("chain", "iteration")}
    n = len(next(iter(quantities.values()))) if quantities else 0
    if n == 0:
        raise UndefinedEstimateError("The chain has no draws to summarize.")
    correlations = {
        name: pearson(columns[a], columns[b])
        for name, (a, b) in CORRELATION_PAIRS.items()
        if a in columns and b in columns
    }
    return ChainSummary(
        draws=n,
        accepted=accepted,
        proposed=proposed,
        acceptance_rate=(accepted / proposed) if accepted is not None and proposed else None,
        quantities={name: _summarize_values(np.asarray(values, dtype=float)) for name, values in quantities.items()},
        correlations=correlations,
    )


def summarize(chain: Chain) -> ChainSummary:
    """Mean, standard deviation, 5%/95% quantiles and Monte Carlo error of every
    chain quantity, plus the correlations of the W- and Z-specific effects."""
    return summarize_columns(chain_columns(chain), chain.accepted, chain.proposed)


def interventional_predictive(columns: Dict[str, np.ndarray]) -> Dict[str, QuantitySummary]:
    """Posterior predictive of a new unit under intervention.

    Returns summaries of P(Y=1 | do(T=t), Z=z) = rho[z, t] keyed ``z{z}_t{t}``, of
    P(Y=1 | do(T=t)) = sum_z nu_z rho[z, t] keyed ``t{t}`` and of their difference
    keyed ``ate``.
    """
    predictive = {
        f"z{z}_t{t}": _summarize_values(np.asarray(columns[f"rho_z{z}_t{t}"], dtype=float))
        for z in (0, 1)
        for t in (0, 1)
    }
    p_do = [_p_do(columns, t) for t in (0, 1)]
    for t in (0, 1):
        predictive[f"t{t}"] = _summarize_values(p_do[t])
    predictive["ate"] = _summarize_values(p_do[1] - p_do[0])
    return predictive


def _p_do(columns: Dict[str, np.ndarray], t: int) -> np.ndarray:
    nu0 = np.asarray(columns["nu_z0"], dtype=float)
    nu1 = np.asarray(columns["nu_z1"], dtype=float)
    return nu0 * columns[f"rho_z0_t{t}"] + nu1 * columns[f"rho_z1_t{t}"]


def recommend_treatment(
    columns: Dict[str, np.ndarray], utility: Optional[Callable[[int, int], float]] = None
) -> dict:
    """Choose the treatment with the highest posterior expected utility.

    The population choice uses P(Y=1 | do(T=t)) = sum_z nu_z rho[z, t], which is
    identified. The per-Z choices use rho[z, t] alone and inherit its lack of
    identification.
    """
    utility = utility or (lambda y, t: float(y))

    def expected(p_one: float, t: int) -> float:
        return p_one * utility(1, t) + (1.0 - p_one) * utility(0, t)

    population = {}
    for t in (0, 1):
        population[t] = expected(_mean(_p_do(columns, t)), t)
    per_z = {}
    for z in (0, 1):
        utilities = {t: expected(_mean(columns[f"rho_z{z}_t{t}"]), t) for t in (0, 1)}
        per_z[f"z{z}"] = {
            "expected_utility": {f"t{t}": u for t, u in utilities.items()},
            "best_treatment": max(utilities, key=utilities.get),
        }
    return {
        "expected_utility": {f"t{t}": u for t, u in population.items()},
        "best_treatment": max(population, key=population.get),
        "given_z": per_z,
        "note": "Z-specific choices rest on rho, which the observational data do not identify.",
    }


def compare_with_oracle(columns: Dict[str, np.ndarray], oracle: WeightedDraws) -> OracleComparison:
    """Chain means against importance-sampling means, with a combined z-score."""
    oracle_columns = draw_columns(oracle.draws, oracle.psi, oracle.rho)
    quantities = {}
    for name in ORACLE_QUANTITIES:
        chain_values = np.asarray(columns[name], dtype=float)
        chain_mean = _mean(chain_values)
        chain_se = monte_carlo_se(chain_values) or 0.0
        oracle_mean = oracle.posterior_mean(oracle_columns[name])
        oracle_se = oracle.standard_error(oracle_columns[name])
        combined = math.sqrt(chain_se**2 + oracle_se**2)
        quantities[name] = {
            "chain_mean": chain_mean,
            "chain_se": chain_se,
            "oracle_mean": oracle_mean,
            "oracle_se": oracle_se,
            "z_score": (chain_mean - oracle_mean) / combined if combined > 0 else None,
        }
    return OracleComparison(ess=oracle.ess, draws=len(oracle), quantities=quantities)


def export_figures(
    columns: Dict[str, np.ndarray], out_dir: str, bins: int = 80, limit: float = 1.0
) -> List[str]:
    """Write the three posterior panels as self-contained SVG files."""
    # Imported here so that library use without plotting never loads matplotlib.
    from inference import plots  # pylint: disable=import-outside-toplevel

    return plots.write_panels(columns, out_dir, bins=bins, limit=limit)


def export_artifacts(chain: Chain, out_dir: str, bins: int = 80, limit: float = 1.0) -> List[str]:
    """Write chain.csv and the three SVG panels into ``out_dir``.

    Raises:
        OSError: If the directory or a file cannot be written; the path is named.
    """
    from datastores.chains import write_chain_csv  # pylint: disable=import-outside-toplevel

    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as e:
        raise OSError(f"Cannot create output directory {out_dir}: {e.strerror or e}") from e
    columns = chain_columns(chain)
    paths = [write_chain_csv(columns, out_dir)]
    paths.extend(export_figures(columns, out_dir, bins=bins, limit=limit))
    logger.info(f"Wrote {len(paths)} artifacts to {out_dir}")
    return paths
