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

from typing import Annotated, Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

Probability = Annotated[float, Field(ge=0.0, le=1.0)]


def _check_probabilities(name: str, values) -> None:
    flat = [v for row in values for v in (row if isinstance(row, (tuple, list)) else (row,))]
    for value in flat:
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"{name} entries must lie in [0, 1], got {value}.")


class GenerativeParams(BaseModel):
    """Full parameterization of the M-structure.

    Index order: cpt_z[u][w] = P(Z=1|U=u,W=w), cpt_t[u] = P(T=1|U=u),
    theta[t][w] = P(Y=1|T=t,W=w). ``cpt_z`` is the generative Z table; the
    marginal P(Z) of the reparameterized model is called ``nu`` elsewhere.
    """

    model_config = ConfigDict(frozen=True)

    p_u: Probability
    p_w: Probability
    cpt_z: Tuple[Tuple[float, float], Tuple[float, float]]
    cpt_t: Tuple[float, float]
    theta: Tuple[Tuple[float, float], Tuple[float, float]]

    @field_validator("cpt_z", "cpt_t", "theta")
    @classmethod
    def entries_are_probabilities(cls, value, info):
        _check_probabilities(info.field_name, value)
        return value

    def to_flat(self) -> Dict[str, float]:
        """Flat JSON form: one named probability per entry."""
        flat = {"p_u": self.p_u, "p_w": self.p_w}
        for u in (0, 1):
            for w in (0, 1):
                flat[f"z_u{u}_w{w}"] = self.cpt_z[u][w]
        for u in (0, 1):
            flat[f"t_u{u}"] = self.cpt_t[u]
        for t in (0, 1):
            for w in (0, 1):
                flat[f"y_t{t}_w{w}"] = self.theta[t][w]
        return flat

    @classmethod
    def from_flat(cls, flat: Dict[str, float]) -> "GenerativeParams":
        expected = set(cls.flat_keys())
        missing = sorted(expected - set(flat))
        extra = sorted(set(flat) - expected)
        if missing or extra:
            raise ValueError(f"Generative parameters: missing keys {missing}, unexpected keys {extra}.")
        return cls(
            p_u=flat["p_u"],
            p_w=flat["p_w"],
            cpt_z=tuple(tuple(flat[f"z_u{u}_w{w}"] for w in (0, 1)) for u in (0, 1)),
            cpt_t=tuple(flat[f"t_u{u}"] for u in (0, 1)),
            theta=tuple(tuple(flat[f"y_t{t}_w{w}"] for w in (0, 1)) for t in (0, 1)),
        )

    @staticmethod
    def flat_keys() -> List[str]:
        keys = ["p_u", "p_w"]
        keys += [f"z_u{u}_w{w}" for u in (0, 1) for w in (0, 1)]
        keys += [f"t_u{u}" for u in (0, 1)]
        keys += [f"y_t{t}_w{w}" for t in (0, 1) for w in (0, 1)]
        return keys


class PriorSpec(BaseModel):
    """Priors of the reparameterized model.

    alpha[:, z, t], omega[:, z] ~ Dirichlet(c * 1_K), nu ~ Dirichlet(c * 1_2),
    theta[t, w] ~ Beta(a, b). Defaults are the unit concentrations.
    """

    model_config = ConfigDict(frozen=True)

    K: int = Field(default=2, ge=2)
    alpha_concentration: float = Field(default=1.0, gt=0.0)
    omega_concentration: float = Field(default=1.0, gt=0.0)
    nu_concentration: float = Field(default=1.0, gt=0.0)
    theta_a: float = Field(default=1.0, gt=0.0)
    theta_b: float = Field(default=1.0, gt=0.0)


class RunConfig(BaseModel):
    """Iteration schedule of the independence sampler.

    Iterations are numbered 1..total; iteration k is kept when k > burn_in and
    (k - burn_in) is a multiple of thin.
    """

    model_config = ConfigDict(frozen=True)

    burn_in: int = Field(default=50_000, ge=0)
    total: int = Field(default=10_000_000, ge=0)
    thin: int = Field(default=50_000, ge=1)
    seed: int = 0
    block_size: int = Field(default=65_536, ge=1)

    @model_validator(mode="after")
    def total_covers_burn_in(self):
        if self.total < self.burn_in:
            raise ValueError(f"total ({self.total}) must be at least burn_in ({self.burn_in}).")
        return self

    @property
    def kept(self) -> int:
        return (self.total - self.burn_in) // self.thin


class ConditionalTerm(BaseModel):
    """One plug-in conditional probability as an exact fraction."""

    label: str
    numerator: int
    denominator: int

    @property
    def value(self) -> float:
        return self.numerator / self.denominator


class EffectEstimate(BaseModel):
    """A difference of plug-in conditionals, kept as an exact fraction."""

    label: str
    value: float = Field(ge=-1.0, le=1.0)
    fraction: str
    terms: List[ConditionalTerm]
    causal: bool = True
    note: Optional[str] = None


class EstimateReport(BaseModel):
    ate_unadjusted: EffectEstimate
    backdoor_z0: EffectEstimate
    backdoor_z1: EffectEstimate
    backdoor_adjusted: EffectEstimate
    kappa: float
    nu: Tuple[float, float]
    total: int


class EffectSample(BaseModel):
    """Treatment effects implied by one parameter draw.

    d_w[w] = theta[1, w] - theta[0, w]; d_z[z] = rho[z, 1] - rho[z, 0];
    ate_half_sum weights the d_w equally; ate_marginal = sum_z nu_z d_z[z].
    """

    model_config = ConfigDict(frozen=True)

    d_w: Tuple[float, ...]
    d_z: Tuple[float, float]
    ate_half_sum: float
    ate_marginal: float


class QuantitySummary(BaseModel):
    mean: float
    std: float
    q05: float
    q95: float
    mcse: Optional[float] = None


class CorrelationSummary(BaseModel):
    value: Optional[float] = None
    defined: bool
    reason: Optional[str] = None


class ChainSummary(BaseModel):
    draws: int
    accepted: Optional[int] = None
    proposed: Optional[int] = None
    acceptance_rate: Optional[float] = None
    quantities: Dict[str, QuantitySummary]
    correlations: Dict[str, CorrelationSummary]


class OracleComparison(BaseModel):
    """Posterior means from the chain and from importance sampling."""

    ess: float
    draws: int
    quantities: Dict[str, Dict[str, Optional[float]]]
