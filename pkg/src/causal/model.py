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
"""The M-structure generative model and its reparameterization.

Table index conventions used throughout:
    counts[t, z, y]      observational contingency table
    joint[u, w, z, t, y] exact joint of the generative model
    theta[t, w]          P(Y=1 | T=t, W=w)
    alpha[w, z, t]       P(W=w | Z=z, T=t), observation plate
    omega[w, z]          P(W=w | Z=z), intervention plate
    nu[z]                P(Z=z)
    psi[z, t], rho[z, t] P(Y=1 | Z=z, T=t) on the observation / intervention plate
Leading batch dimensions are allowed wherever a parameter table is accepted.
"""

import logging
from dataclasses import dataclass
from typing import Iterable, List, NamedTuple, Sequence, Tuple, Union

import numpy as np
from scipy import special

from causal.graph import Dag, m_graph
from causal.schemas import GenerativeParams
from lib.constants import SIMPLEX_TOLERANCE, VARIABLES
from lib.errors import GraphInputError, InvariantViolation, UndefinedConditionalError

logger = logging.getLogger(__name__)


class Record(NamedTuple):
    """One sampled unit of the observation plate; U and W are latent."""

    u: int
    w: int
    z: int
    t: int
    y: int


@dataclass(frozen=True, eq=False)
class ContingencyTable:
    """Aggregated observation counts indexed [t, z, y]."""

    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts)
        if counts.shape != (2, 2, 2):
            raise ValueError(f"Contingency table must have shape (2, 2, 2), got {counts.shape}.")
        if not np.issubdtype(counts.dtype, np.integer):
            if not np.all(np.equal(np.mod(counts, 1), 0)):
                raise ValueError("Contingency table counts must be integers.")
        counts = counts.astype(np.int64)
        if np.any(counts < 0):
            raise ValueError("Contingency table counts must be non-negative.")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    @classmethod
    def empty(cls) -> "ContingencyTable":
        return cls(np.zeros((2, 2, 2), dtype=np.int64))

    @classmethod
    def from_cells(cls, cells: dict) -> "ContingencyTable":
        """Build from a mapping (t, z, y) -> count; missing cells count zero."""
        counts = np.zeros((2, 2, 2), dtype=np.int64)
        for (t, z, y), n in cells.items():
            counts[t, z, y] = n
        return cls(counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def count(self, t: int, z: int, y: int) -> int:
        return int(self.counts[t, z, y])

    def cells(self) -> List[Tuple[int, int, int, int]]:
        """Rows (t, z, y, n) in T, Z, Y order."""
        return [(t, z, y, self.count(t, z, y)) for t in (0, 1) for z in (0, 1) for y in (0, 1)]

    def to_records(self) -> List[Record]:
        """Expand to one record per observed unit; latent values are reported as 0."""
        return [Record(0, 0, z, t, y) for t, z, y, n in self.cells() for _ in range(n)]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ContingencyTable):
            return NotImplemented
        return bool(np.array_equal(self.counts, other.counts))

    def __hash__(self) -> int:
        return hash(self.counts.tobytes())

    def __repr__(self) -> str:
        return f"ContingencyTable({dict(((t, z, y), n) for t, z, y, n in self.cells())})"


@dataclass(frozen=True)
class ParameterDraw:
    """One draw of the reparameterized model's parameters.

    Shapes: theta (2, K), alpha (K, 2, 2), omega (K, 2), nu (2,).
    """

    theta: np.ndarray
    alpha: np.ndarray
    omega: np.ndarray
    nu: np.ndarray

    @property
    def K(self) -> int:
        return int(self.theta.shape[-1])

    @property
    def psi(self) -> np.ndarray:
        return psi(self.theta, self.alpha)

    @property
    def rho(self) -> np.ndarray:
        return rho(self.theta, self.omega)

    def validate(self) -> None:
        """Raise InvariantViolation unless every table is a valid probability table."""
        K = self.K
        expected = {"theta": (2, K), "alpha": (K, 2, 2), "omega": (K, 2), "nu": (2,)}
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise InvariantViolation(f"{name} has shape {getattr(self, name).shape}, expected {shape}.")
        if np.any(self.theta < 0) or np.any(self.theta > 1):
            raise InvariantViolation("theta entries must lie in [0, 1].")
        for name, axis in (("alpha", 0), ("omega", 0), ("nu", 0)):
            table = getattr(self, name)
            if np.any(table < 0) or np.any(np.abs(table.sum(axis=axis) - 1.0) > SIMPLEX_TOLERANCE):
                raise InvariantViolation(f"{name} columns are not simplices.")


@dataclass(frozen=True)
class ParameterBatch:
    """Struct-of-arrays form of many ParameterDraws, leading axis = draw."""

    theta: np.ndarray
    alpha: np.ndarray
    omega: np.ndarray
    nu: np.ndarray

    def __len__(self) -> int:
        return int(self.theta.shape[0])

    def __getitem__(self, index: int) -> ParameterDraw:
        return ParameterDraw(self.theta[index], self.alpha[index], self.omega[index], self.nu[index])

    def __iter__(self):
        for index in range(len(self)):
            yield self[index]

    @property
    def K(self) -> int:
        return int(self.theta.shape[-1])

    def take(self, indices) -> "ParameterBatch":
        return ParameterBatch(self.theta[indices], self.alpha[indices], self.omega[indices], self.nu[indices])

    def replace(self, **tables) -> "ParameterBatch":
        values = {"theta": self.theta, "alpha": self.alpha, "omega": self.omega, "nu": self.nu}
        values.update(tables)
        return ParameterBatch(**values)

    @classmethod
    def from_draws(cls, draws: Sequence[ParameterDraw]) -> "ParameterBatch":
        return cls(
            np.stack([d.theta for d in draws]),
            np.stack([d.alpha for d in draws]),
            np.stack([d.omega for d in draws]),
            np.stack([d.nu for d in draws]),
        )

    @classmethod
    def concatenate(cls, batches: Sequence["ParameterBatch"]) -> "ParameterBatch":
        return cls(
            np.concatenate([b.theta for b in batches]),
            np.concatenate([b.alpha for b in batches]),
            np.concatenate([b.omega for b in batches]),
            np.concatenate([b.nu for b in batches]),
        )


class Reparameterization(NamedTuple):
    alpha: np.ndarray
    omega: np.ndarray
    kappa: float
    nu: np.ndarray


class TrueEffects(NamedTuple):
    ate: float
    effect_given_w: Tuple[float, float]


def _tables(gp: GenerativeParams):
    return (
        np.array([1.0 - gp.p_u, gp.p_u]),
        np.array([1.0 - gp.p_w, gp.p_w]),
        np.asarray(gp.cpt_z, dtype=float),
        np.asarray(gp.cpt_t, dtype=float),
        np.asarray(gp.theta, dtype=float),
    )


def ancestral_sample_array(gp: GenerativeParams, m: int, seed: int) -> np.ndarray:
    """Draw ``m`` units in ancestral order; columns follow VARIABLES (u, w, z, t, y)."""
    if m < 0:
        raise ValueError(f"Sample size must be non-negative, got {m}.")
    _, _, cpt_z, cpt_t, theta = _tables(gp)
    rng = np.random.default_rng(seed)
    u = (rng.random(m) < gp.p_u).astype(np.int8)
    w = (rng.random(m) < gp.p_w).astype(np.int8)
    z = (rng.random(m) < cpt_z[u, w]).astype(np.int8)
    t = (rng.random(m) < cpt_t[u]).astype(np.int8)
    y = (rng.random(m) < theta[t, w]).astype(np.int8)
    logger.debug(f"Sampled {m} units with seed {seed}")
    return np.column_stack([u, w, z, t, y])


def ancestral_sample(gp: GenerativeParams, m: int, seed: int) -> List[Record]:
    """Draw ``m`` records from the M-structure, U and W first, then Z and T, then Y.

    Deterministic given ``seed``.
    """
    return [Record(*map(int, row)) for row in ancestral_sample_array(gp, m, seed)]


def tabulate(records: Union[Iterable[Record], np.ndarray]) -> ContingencyTable:
    """Count observed (t, z, y) cells; latent values are discarded."""
    if isinstance(records, np.ndarray):
        rows = records.reshape(-1, len(VARIABLES))
        t, z, y = rows[:, 3], rows[:, 2], rows[:, 4]
    else:
        rows = list(records)
        if not rows:
            return ContingencyTable.empty()
        t = np.fromiter((r.t for r in rows), dtype=np.int64, count=len(rows))
        z = np.fromiter((r.z for r in rows), dtype=np.int64, count=len(rows))
        y = np.fromiter((r.y for r in rows), dtype=np.int64, count=len(rows))
    flat = np.bincount(t * 4 + z * 2 + y, minlength=8)
    return ContingencyTable(flat.reshape(2, 2, 2))


def enumerate_joint(gp: GenerativeParams) -> np.ndarray:
    """Exact joint over (u, w, z, t, y) as a (2, 2, 2, 2, 2) array summing to one."""
    p_u, p_w, cpt_z, cpt_t, theta = _tables(gp)
    z_given = np.stack([1.0 - cpt_z, cpt_z], axis=-1)  # [u, w, z]
    t_given = np.stack([1.0 - cpt_t, cpt_t], axis=-1)  # [u, t]
    y_given = np.stack([1.0 - theta, theta], axis=-1)  # [t, w, y]
    joint = np.einsum("u,w,uwz,ut,twy->uwzty", p_u, p_w, z_given, t_given, y_given)
    if abs(joint.sum() - 1.0) > 1e-12:
        raise InvariantViolation(f"Joint distribution sums to {joint.sum()!r}.")
    return joint


def derive_reparam(gp: GenerativeParams) -> Reparameterization:
    """Reparameterize with U marginalized out.

    alpha[w, z, t] = P(W=w | Z=z, T=t), omega[w, z] = P(W=w | Z=z), kappa = P(T=1)
    and nu[z] = P(Z=z), all computed by Bayes' rule on the exact joint.

    Raises:
        UndefinedConditionalError: If P(Z=z, T=t) or P(Z=z) is zero for some cell.
    """
    joint = enumerate_joint(gp)
    p_wzt = joint.sum(axis=(0, 4))  # [w, z, t]
    p_zt = p_wzt.sum(axis=0)
    p_wz = p_wzt.sum(axis=2)
    p_z = p_wz.sum(axis=0)
    for z in (0, 1):
        if p_z[z] <= 0.0:
            raise UndefinedConditionalError(f"P(Z={z}) = 0, so P(W | Z={z}) is undefined.")
        for t in (0, 1):
            if p_zt[z, t] <= 0.0:
                raise UndefinedConditionalError(f"P(Z={z}, T={t}) = 0, so P(W | Z={z}, T={t}) is undefined.")
    alpha = p_wzt / p_zt[np.newaxis, :, :]
    omega = p_wz / p_z[np.newaxis, :]
    kappa = float(p_wzt[:, :, 1].sum())
    return Reparameterization(alpha=alpha, omega=omega, kappa=kappa, nu=p_z.copy())


def psi(theta: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    """psi[z, t] = sum_w theta[t, w] alpha[w, z, t] = P(Y=1 | Z=z, T=t), observation plate."""
    return np.einsum("...tw,...wzt->...zt", theta, alpha)


def rho(theta: np.ndarray, omega: np.ndarray) -> np.ndarray:
    """rho[z, t] = sum_w theta[t, w] omega[w, z] = P(Y=1 | Z=z, do(T=t)), intervention plate."""
    return np.einsum("...tw,...wz->...zt", theta, omega)


def true_effects(gp: GenerativeParams) -> TrueEffects:
    """Ground-truth effects: theta[1, w] - theta[0, w] and their P(W)-weighted average."""
    theta = np.asarray(gp.theta, dtype=float)
    given_w = theta[1] - theta[0]
    ate = (1.0 - gp.p_w) * given_w[0] + gp.p_w * given_w[1]
    return TrueEffects(ate=float(ate), effect_given_w=(float(given_w[0]), float(given_w[1])))


def observational_truth(gp: GenerativeParams) -> np.ndarray:
    """True P(Y=1 | T=t, Z=z) indexed [z, t]."""
    joint = enumerate_joint(gp)
    p_zty = joint.sum(axis=(0, 1))
    p_zt = p_zty.sum(axis=2)
    if np.any(p_zt <= 0.0):
        raise UndefinedConditionalError("Some (Z, T) cell has zero probability.")
    return p_zty[:, :, 1] / p_zt


def intervene(gp: GenerativeParams, t: int) -> GenerativeParams:
    """The intervention plate's generative model: T is set to ``t`` for every unit."""
    if t not in (0, 1):
        raise ValueError(f"Treatment must be 0 or 1, got {t!r}.")
    forced = float(t)
    return gp.model_copy(update={"cpt_t": (forced, forced)})


def interventional_truth(gp: GenerativeParams) -> np.ndarray:
    """True P(Y=1 | do(T=t), Z=z) indexed [z, t]."""
    table = np.empty((2, 2))
    for t in (0, 1):
        joint = enumerate_joint(intervene(gp, t))
        p_zy = joint.sum(axis=(0, 1, 3))
        p_z = p_zy.sum(axis=1)
        if np.any(p_z <= 0.0):
            raise UndefinedConditionalError("Some Z value has zero probability.")
        table[:, t] = p_zy[:, 1] / p_z
    return table


def conform_to_graph(gp: GenerativeParams, g: Dag) -> GenerativeParams:
    """Make ``gp`` Markov to a subgraph of the M-structure.

    For every M-structure edge missing from ``g`` the child's table stops depending
    on that parent (the value at parent = 0 is copied).

    Raises:
        GraphInputError: If ``g`` has edges or nodes outside the M-structure.
    """
    full = m_graph()
    if set(g.nodes) != set(full.nodes) or not g.edges <= full.edges:
        raise GraphInputError("Generative parameters can only follow subgraphs of the M-structure.")
    cpt_z = [list(row) for row in gp.cpt_z]
    cpt_t = list(gp.cpt_t)
    theta = [list(row) for row in gp.theta]
    if ("U", "T") not in g.edges:
        cpt_t[1] = cpt_t[0]
    if ("U", "Z") not in g.edges:
        cpt_z[1] = list(cpt_z[0])
    if ("W", "Z") not in g.edges:
        for u in (0, 1):
            cpt_z[u][1] = cpt_z[u][0]
    if ("W", "Y") not in g.edges:
        for t in (0, 1):
            theta[t][1] = theta[t][0]
    if ("T", "Y") not in g.edges:
        theta[1] = list(theta[0])
    return GenerativeParams(
        p_u=gp.p_u,
        p_w=gp.p_w,
        cpt_z=tuple(tuple(row) for row in cpt_z),
        cpt_t=tuple(cpt_t),
        theta=tuple(tuple(row) for row in theta),
    )


def conditional_mutual_information(
    joint: np.ndarray, x: Iterable[str], y: Iterable[str], z: Iterable[str] = ()
) -> float:
    """I(X; Y | Z) in nats for node sets of the exact joint."""
    axis_of = {name: i for i, name in enumerate(VARIABLES)}
    x_axes = {axis_of[n] for n in x}
    y_axes = {axis_of[n] for n in y}
    z_axes = {axis_of[n] for n in z}
    keep = x_axes | y_axes | z_axes
    drop = tuple(i for i in range(joint.ndim) if i not in keep)
    p_xyz = joint.sum(axis=drop, keepdims=True)
    p_xz = p_xyz.sum(axis=tuple(y_axes), keepdims=True)
    p_yz = p_xyz.sum(axis=tuple(x_axes), keepdims=True)
    p_z = p_xyz.sum(axis=tuple(x_axes | y_axes), keepdims=True)
    # xlogy is 0 where p_xyz is 0, and p_xyz > 0 implies every marginal is positive.
    terms = special.xlogy(p_xyz, p_xyz * p_z) - special.xlogy(p_xyz, p_xz * p_yz)
    return float(terms.sum())


def random_params(rng: np.random.Generator, generic: bool = True) -> GenerativeParams:
    """Random generative parameters.

    With ``generic`` every table keeps a clear dependence on each parent (entries
    bounded away from 0 and 1, per-parent differences of at least 0.2), so the
    draw is faithful to the M-structure. Otherwise every entry is Uniform(0, 1).
    """
    if not generic:
        return GenerativeParams(
            p_u=rng.random(),
            p_w=rng.random(),
            cpt_z=tuple(tuple(rng.random(2)) for _ in range(2)),
            cpt_t=tuple(rng.random(2)),
            theta=tuple(tuple(rng.random(2)) for _ in range(2)),
        )

    def pair():
        low, high = rng.uniform(0.1, 0.4), rng.uniform(0.6, 0.9)
        return (low, high) if rng.random() < 0.5 else (high, low)

    base = rng.uniform(0.1, 0.3)
    step_u, step_w = rng.uniform(0.2, 0.3, size=2)
    flip_u, flip_w = (int(flag) for flag in rng.random(2) < 0.5)
    cpt_z = tuple(
        tuple(base + step_u * (u ^ flip_u) + step_w * (w ^ flip_w) for w in (0, 1)) for u in (0, 1)
    )
    theta_w0, theta_w1 = pair(), pair()
    return GenerativeParams(
        p_u=rng.uniform(0.2, 0.8),
        p_w=rng.uniform(0.2, 0.8),
        cpt_z=cpt_z,
        cpt_t=pair(),
        theta=((theta_w0[0], theta_w1[0]), (theta_w0[1], theta_w1[1])),
    )
