"""Parameter learning: expectation-maximization over enumerated explanations.

The switch-count structure of every observation's explanations is collected
once (it does not depend on the probabilities) and then packed into numpy
arrays, so each EM iteration is a handful of vectorized operations.
"""

from __future__ import annotations

import math
import warnings
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .engine import REFINED, ExecutionStrategy
from .errors import ImpossibleObservation, ValidationError
from .inference import Explanation, Limits, enumerate_leaves, matches
from .rules import Observation, Program
from .runtime import SwitchRegistry


def _structure_registry(registry: SwitchRegistry) -> SwitchRegistry:
    """Same switches, all uniform: no outcome is pruned while collecting structure."""
    out = registry.copy()
    for name, (outcomes, _) in registry.items():
        out.set_switch(name, [1.0 / len(outcomes)] * len(outcomes), outcomes)
    return out


def _group(leaves, observation: Observation) -> list:
    counts: Counter = Counter()
    for leaf in leaves:
        if matches(leaf.store, observation):
            counts[leaf.explanation] += 1
    if not counts:
        raise ImpossibleObservation(str(observation.without_count()))
    return sorted(counts.items(), key=lambda kv: str(kv[0]))


def collect_explanations(
    program: Program,
    observation: Observation,
    strategy: ExecutionStrategy = REFINED,
    registry: SwitchRegistry | None = None,
    limits: Limits = Limits(),
) -> list:
    """``[(Explanation, multiplicity), ...]`` of the leaves matching ``observation``.

    Leaves with the same explanation signature are merged. Raises
    :class:`ImpossibleObservation` if no leaf matches.
    """
    if registry is None:
        registry = SwitchRegistry.for_program(program)
    leaves = enumerate_leaves(program, observation.query, strategy, registry, limits)
    return _group(leaves, observation)


def _normalize_data(data) -> list:
    """Accept Observations or (Observation, count) pairs; merge duplicates."""
    merged: dict = {}
    for item in data:
        if isinstance(item, Observation):
            obs, count = item, 1
        else:
            obs, count = item
        count = count * obs.count
        if count <= 0:
            raise ValidationError(f"observation {obs} has non-positive count {count}")
        key = obs.without_count()
        merged[key] = merged.get(key, 0) + count
    return list(merged.items())


@dataclass
class ObservationData:
    """Observations with counts and their explanations, packed for EM.

    Row ``i`` of ``counts`` is one explanation of observation ``obs_index[i]``;
    column ``j`` counts draws of ``columns[j] = (switch, outcome)``.
    """

    observations: list
    explanations: list
    columns: list
    counts: np.ndarray
    fixed: np.ndarray
    multiplicity: np.ndarray
    obs_index: np.ndarray
    obs_counts: np.ndarray
    switches: dict = field(default_factory=dict)  # learnable switch -> outcomes

    def theta(self, registry: SwitchRegistry) -> np.ndarray:
        return np.array([registry.probability(sw, v) for sw, v in self.columns], dtype=float)

    def observation_probs(self, theta: np.ndarray) -> np.ndarray:
        pe = self.fixed * np.prod(theta[None, :] ** self.counts, axis=1)
        return np.bincount(self.obs_index, weights=self.multiplicity * pe,
                           minlength=len(self.observations))

    def log_likelihood(self, registry: SwitchRegistry) -> float:
        return _loglik(self, self.observation_probs(self.theta(registry)))


def _loglik(data: ObservationData, po: np.ndarray) -> float:
    if np.any(po <= 0.0):
        bad = data.observations[int(np.argmin(po))]
        raise ImpossibleObservation(f"{bad} (probability 0 under the current registry)")
    return float(np.dot(data.obs_counts, np.log(po)))


def prepare_data(
    program: Program,
    data,
    strategy: ExecutionStrategy = REFINED,
    registry: SwitchRegistry | None = None,
    limits: Limits = Limits(),
) -> tuple:
    """Collect explanations for every observation.

    Returns ``(ObservationData, registry)`` where the registry is a copy of
    the given one extended with every switch met during enumeration.
    """
    if registry is None:
        registry = SwitchRegistry.for_program(program)
    pairs = _normalize_data(data)
    struct = _structure_registry(registry)
    by_query: dict = {}
    explanations = []
    for obs, _ in pairs:
        leaves = by_query.get(obs.query)
        if leaves is None:
            leaves = by_query[obs.query] = enumerate_leaves(
                program, obs.query, strategy, struct, limits
            )
        explanations.append(_group(leaves, obs))

    learned = registry.copy()
    for name, (outcomes, probs) in struct.items():
        if name not in learned:
            learned.set_switch(name, probs, outcomes)

    drawn = set()
    for exps in explanations:
        for e, _ in exps:
            drawn |= e.switches()
    switches = {name: learned[name][0] for name in learned if name in drawn}
    columns = [(name, v) for name, outcomes in switches.items() for v in outcomes]
    col = {c: j for j, c in enumerate(columns)}

    rows, fixed, mult, index = [], [], [], []
    for i, exps in enumerate(explanations):
        for e, m in exps:
            row = np.zeros(len(columns))
            for key, n in e.draws:
                row[col[key]] = n
            rows.append(row)
            fixed.append(e.fixed_factor)
            mult.append(m)
            index.append(i)
    packed = ObservationData(
        observations=[obs for obs, _ in pairs],
        explanations=explanations,
        columns=columns,
        counts=np.array(rows, dtype=float).reshape(len(rows), len(columns)),
        fixed=np.array(fixed, dtype=float),
        multiplicity=np.array(mult, dtype=float),
        obs_index=np.array(index, dtype=np.intp),
        obs_counts=np.array([c for _, c in pairs], dtype=float),
        switches=switches,
    )
    return packed, learned


def log_likelihood(data: ObservationData, registry: SwitchRegistry) -> float:
    """Sum over observations of ``count * ln P(o)``."""
    return data.log_likelihood(registry)


@dataclass(frozen=True)
class EMConfig:
    """EM settings.

    ``init`` is ``"random"`` (Dirichlet draws from ``seed``) or ``"registry"``
    (start from the given registry). Outcomes with probability 0 in the
    given registry stay at 0 either way. With ``restarts > 1`` the run with
    the highest final log-likelihood is kept.
    """

    max_iterations: int = 500
    tolerance: float = 1e-6
    smoothing: float = 0.0
    init: str = "random"
    seed: int = 0
    restarts: int = 1

    def __post_init__(self):
        if self.tolerance <= 0:
            raise ValidationError("tolerance must be positive")
        if self.smoothing < 0:
            raise ValidationError("smoothing must be non-negative")
        if self.init not in ("random", "registry"):
            raise ValidationError(f"unknown init {self.init!r}")
        if self.restarts < 1 or self.max_iterations < 0:
            raise ValidationError("restarts must be >= 1 and max_iterations >= 0")


@dataclass
class EMResult:
    registry: SwitchRegistry
    log_likelihoods: list
    iterations: int
    converged: bool
    learnable: list
    unlearnable: list

    @property
    def final_log_likelihood(self) -> float:
        return self.log_likelihoods[-1]

    def __iter__(self):
        # allows ``registry, trace = em_learn(...)``
        return iter((self.registry, self.log_likelihoods))


def _blocks(data: ObservationData) -> list:
    out, j = [], 0
    for outcomes in data.switches.values():
        out.append(slice(j, j + len(outcomes)))
        j += len(outcomes)
    return out


def _em_run(data: ObservationData, theta: np.ndarray, mask: np.ndarray, blocks, config: EMConfig):
    trace = []
    converged = False
    iterations = 0
    while True:
        pe = data.fixed * np.prod(theta[None, :] ** data.counts, axis=1)
        po = np.bincount(data.obs_index, weights=data.multiplicity * pe,
                         minlength=len(data.observations))
        ll = _loglik(data, po)
        if trace and abs(ll - trace[-1]) < config.tolerance:
            trace.append(ll)
            converged = True
            break
        trace.append(ll)
        if iterations >= config.max_iterations:
            break
        # E-step: expected draw counts weighted by explanation posteriors
        weight = data.obs_counts[data.obs_index] * data.multiplicity * pe / po[data.obs_index]
        expected = weight @ data.counts
        # M-step
        new = theta.copy()
        for b in blocks:
            e = np.where(mask[b], expected[b] + config.smoothing, 0.0)
            total = e.sum()
            if total > 0:
                new[b] = e / total
            else:
                sw = data.columns[b.start][0]
                warnings.warn(f"switch {sw}: no expected counts, distribution left unchanged")
        theta = new
        iterations += 1
    return theta, trace, iterations, converged


def em_learn(
    program: Program,
    data,
    strategy: ExecutionStrategy = REFINED,
    registry: SwitchRegistry | None = None,
    config: EMConfig = EMConfig(),
    limits: Limits = Limits(),
) -> EMResult:
    """Maximum-likelihood switch distributions for the observations in ``data``.

    ``data`` holds :class:`Observation` objects or ``(Observation, count)``
    pairs. Only experiment-named switches that occur in some explanation
    are learned; the rest of the registry is returned unchanged and the
    names of registered switches never drawn are listed as unlearnable.
    """
    if registry is None:
        registry = SwitchRegistry.for_program(program)
    packed, base = prepare_data(program, data, strategy, registry, limits)
    blocks = _blocks(packed)
    start = packed.theta(base)
    mask = start > 0
    rng = np.random.default_rng(config.seed)

    best = None
    for _ in range(config.restarts):
        if config.init == "random":
            theta = np.zeros_like(start)
            for b in blocks:
                m = mask[b]
                draw = np.zeros(b.stop - b.start)
                draw[m] = rng.dirichlet(np.ones(int(m.sum())))
                theta[b] = draw
        else:
            theta = start.copy()
        run = _em_run(packed, theta, mask, blocks, config)
        if best is None or run[1][-1] > best[1][-1]:
            best = run
    theta, trace, iterations, converged = best

    learned = base.copy()
    for name, b in zip(packed.switches, blocks):
        learned.set_switch(name, theta[b].tolist(), packed.switches[name])
    learnable = sorted(packed.switches, key=str)
    unlearnable = [name for name in base if name not in packed.switches]
    return EMResult(learned, trace, iterations, converged, learnable, unlearnable)
