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
from fractions import Fraction

import pytest

from causal.estimators import (
    ate_unadjusted,
    backdoor_adjusted,
    backdoor_per_stratum,
    empirical_kappa_nu,
    estimate_all,
)
from causal.model import ContingencyTable, ancestral_sample_array, tabulate, true_effects
from lib.errors import UndefinedEstimateError


def test_ate_unadjusted_table1(table1):
    estimate = ate_unadjusted(table1)
    assert Fraction(estimate.fraction) == Fraction(287, 447) - Fraction(52, 180)
    assert estimate.value == pytest.approx(0.353169, abs=1e-6)
    assert abs(estimate.value - float(Fraction(287, 447) - Fraction(52, 180))) < 1e-12
    assert [(t.numerator, t.denominator) for t in estimate.terms] == [(287, 447), (52, 180)]
    assert estimate.causal


def test_backdoor_per_stratum_table1(table1):
    z0, z1 = backdoor_per_stratum(table1)
    assert Fraction(z0.fraction) == Fraction(47, 147) - Fraction(2, 35)
    assert Fraction(z1.fraction) == Fraction(240, 300) - Fraction(50, 145)
    assert z0.value == pytest.approx(0.262585, abs=1e-6)
    assert z1.value == pytest.approx(0.455172, abs=1e-6)
    assert not z0.causal and not z1.causal
    assert "not a causal effect" in z0.note


def test_backdoor_adjusted_table1(table1):
    estimate = backdoor_adjusted(table1)
    expected = Fraction(182, 627) * (Fraction(47, 147) - Fraction(2, 35)) + Fraction(445, 627) * (
        Fraction(240, 300) - Fraction(50, 145)
    )
    assert Fraction(estimate.fraction) == expected
    assert not estimate.causal


def test_estimates_with_proportional_outcomes():
    # Y is independent of T and of Z: every contrast vanishes.
    tab = ContingencyTable.from_cells(
        {
            (0, 0, 0): 30,
            (0, 0, 1): 10,
            (0, 1, 0): 60,
            (0, 1, 1): 20,
            (1, 0, 0): 15,
            (1, 0, 1): 5,
            (1, 1, 0): 90,
            (1, 1, 1): 30,
        }
    )
    assert ate_unadjusted(tab).value == 0.0
    assert [e.value for e in backdoor_per_stratum(tab)] == [0.0, 0.0]


def test_strata_equal_unadjusted_without_z_dependence():
    tab = ContingencyTable.from_cells(
        {
            (0, 0, 0): 8,
            (0, 0, 1): 2,
            (0, 1, 0): 16,
            (0, 1, 1): 4,
            (1, 0, 0): 3,
            (1, 0, 1): 7,
            (1, 1, 0): 9,
            (1, 1, 1): 21,
        }
    )
    overall = ate_unadjusted(tab).value
    assert [e.value for e in backdoor_per_stratum(tab)] == pytest.approx([overall, overall], abs=1e-15)


def test_ate_unadjusted_empty_arm():
    tab = ContingencyTable.from_cells({(1, 0, 1): 4})
    with pytest.raises(UndefinedEstimateError) as excinfo:
        ate_unadjusted(tab)
    assert "T=0" in str(excinfo.value)


def test_backdoor_empty_stratum(table1):
    cells = {(t, z, y): table1.count(t, z, y) for t in (0, 1) for z in (0, 1) for y in (0, 1)}
    cells[(0, 1, 0)] = 0
    cells[(0, 1, 1)] = 0
    with pytest.raises(UndefinedEstimateError) as excinfo:
        backdoor_per_stratum(ContingencyTable.from_cells(cells))
    assert "T=0, Z=1" in str(excinfo.value)


def test_empirical_kappa_nu(table1):
    kappa, nu = empirical_kappa_nu(table1)
    assert kappa == float(Fraction(447, 627))
    assert nu == (float(Fraction(182, 627)), float(Fraction(445, 627)))
    assert empirical_kappa_nu(ContingencyTable.from_cells({(0, 1, 0): 1})) == (0.0, (0.0, 1.0))
    with pytest.raises(UndefinedEstimateError):
        empirical_kappa_nu(ContingencyTable.empty())


def test_estimate_all(table1):
    report = estimate_all(table1)
    assert report.total == 627
    assert report.ate_unadjusted.value == ate_unadjusted(table1).value
    assert report.backdoor_z1.value == backdoor_per_stratum(table1)[1].value


def test_no_effect_recovered_from_generated_data(biased_params):
    flat = biased_params.model_copy(update={"theta": ((0.3, 0.7), (0.3, 0.7))})
    tab = tabulate(ancestral_sample_array(flat, 100_000, seed=11))
    assert abs(ate_unadjusted(tab).value) < 0.02


def test_m_bias_end_to_end(biased_params):
    truth = true_effects(biased_params).ate
    tab = tabulate(ancestral_sample_array(biased_params, 100_000, seed=12))
    assert abs(ate_unadjusted(tab).value - truth) < 0.02
    gaps = [abs(e.value - truth) for e in backdoor_per_stratum(tab)]
    assert max(gaps) >= 0.03
