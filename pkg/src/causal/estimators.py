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
"""Plug-in estimates from an observational contingency table.

Every estimate is computed with exact integer ratios and converted to float only
when reported, so results compare exactly against hand-computed fractions.
"""

from fractions import Fraction
from typing import Tuple

from causal.model import ContingencyTable
from causal.schemas import ConditionalTerm, EffectEstimate, EstimateReport
from lib.errors import UndefinedEstimateError

BACKDOOR_NOTE = (
    "Stratifying on Z opens the trail T <- U -> Z <- W -> Y; this is not a causal effect. "
    "It is valid only for predicting missing Y values in the observational data."
)


def _term(label: str, numerator: int, denominator: int) -> Tuple[Fraction, ConditionalTerm]:
    return Fraction(numerator, denominator), ConditionalTerm(
        label=label, numerator=numerator, denominator=denominator
    )


def _difference(label: str, treated, control, causal: bool = True, note=None) -> EffectEstimate:
    value = treated[0] - control[0]
    return EffectEstimate(
        label=label,
        value=float(value),
        fraction=str(value),
        terms=[treated[1], control[1]],
        causal=causal,
        note=note,
    )


def ate_unadjusted(tab: ContingencyTable) -> EffectEstimate:
    """P(Y=1|T=1) - P(Y=1|T=0), ignoring Z.

    Raises:
        UndefinedEstimateError: If a treatment arm has no records.
    """
    counts = tab.counts
    terms = []
    for t in (1, 0):
        arm = int(counts[t].sum())
        if arm == 0:
            raise UndefinedEstimateError(f"Treatment arm T={t} has no records.")
        terms.append(_term(f"P(Y=1|T={t})", int(counts[t, :, 1].sum()), arm))
    return _difference("P(Y=1|T=1) - P(Y=1|T=0)", terms[0], terms[1])


def _stratum(tab: ContingencyTable, z: int) -> EffectEstimate:
    counts = tab.counts
    terms = []
    for t in (1, 0):
        stratum = int(counts[t, z].sum())
        if stratum == 0:
            raise UndefinedEstimateError(f"Stratum T={t}, Z={z} has no records.")
        terms.append(_term(f"P(Y=1|T={t},Z={z})", int(counts[t, z, 1]), stratum))
    return _difference(
        f"P(Y=1|T=1,Z={z}) - P(Y=1|T=0,Z={z})", terms[0], terms[1], causal=False, note=BACKDOOR_NOTE
    )


def backdoor_per_stratum(tab: ContingencyTable) -> Tuple[EffectEstimate, EffectEstimate]:
    """Treatment contrasts within Z=0 and Z=1.

    Raises:
        UndefinedEstimateError: If any (t, z) stratum is empty.
    """
    return _stratum(tab, 0), _stratum(tab, 1)


def backdoor_adjusted(tab: ContingencyTable) -> EffectEstimate:
    """Back-door formula sum_z P(z) * stratum_z. Biased under the M-structure."""
    total = tab.total
    if total == 0:
        raise UndefinedEstimateError("The table is empty.")
    value = Fraction(0)
    terms = []
    for z, estimate in enumerate(backdoor_per_stratum(tab)):
        weight = Fraction(int(tab.counts[:, z].sum()), total)
        value += weight * Fraction(estimate.fraction)
        terms.append(ConditionalTerm(label=f"P(Z={z})", numerator=weight.numerator, denominator=weight.denominator))
    return EffectEstimate(
        label="sum_z P(Z=z) [P(Y=1|T=1,Z=z) - P(Y=1|T=0,Z=z)]",
        value=float(value),
        fraction=str(value),
        terms=terms,
        causal=False,
        note=BACKDOOR_NOTE,
    )


def empirical_kappa_nu(tab: ContingencyTable) -> Tuple[float, Tuple[float, float]]:
    """Plug-in P(T=1) and (P(Z=0), P(Z=1)).

    Raises:
        UndefinedEstimateError: If the table is empty.
    """
    total = tab.total
    if total == 0:
        raise UndefinedEstimateError("The table is empty.")
    kappa = Fraction(int(tab.counts[1].sum()), total)
    nu = tuple(Fraction(int(tab.counts[:, z].sum()), total) for z in (0, 1))
    return float(kappa), (float(nu[0]), float(nu[1]))


def estimate_all(tab: ContingencyTable) -> EstimateReport:
    """Every plug-in estimate of the table, for reports."""
    stratum_0, stratum_1 = backdoor_per_stratum(tab)
    kappa, nu = empirical_kappa_nu(tab)
    return EstimateReport(
        ate_unadjusted=ate_unadjusted(tab),
        backdoor_z0=stratum_0,
        backdoor_z1=stratum_1,
        backdoor_adjusted=backdoor_adjusted(tab),
        kappa=kappa,
        nu=nu,
        total=tab.total,
    )
