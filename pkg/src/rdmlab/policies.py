"""Policy representations, trajectory sampling, and return-distribution evaluation.

Four policy kinds share one interface, ``act(h, state, history) -> action
probabilities``: Markovian tables, reward-augmented tables indexed by the
discretized cumulative reward, the random-projection history policies used
as simulation experts, and arbitrary callables for hand-built fixtures.

Exact evaluation comes in two flavors: a forward dynamic program over
(state, cumulative grid reward) pairs for policies that condition only on
that pair, and full trajectory enumeration (capped at ``(S*A)^H <= 2^20``)
for everything else.  The enumeration path is the independent oracle the
DP is tested against.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from .distributions import DiscreteReturnDistribution, empirical_return_distribution
from .mdp import (
    Dataset,
    GridReward,
    RewardGrid,
    TabularMdp,
    Trajectory,
    discretize_reward,
)

__all__ = [
    "MarkovianPolicy",
    "RewardAugmentedPolicy",
    "ParametricHistoryPolicy",
    "CallablePolicy",
    "PolicyHandle",
    "EnumerationCapError",
    "ENUMERATION_CAP",
    "act_parametric",
    "sample_trajectories",
    "construct_pi_r",
    "exact_return_distribution",
    "exact_augmented_occupancy",
    "mc_return_distribution",
    "enumerate_trajectory_distribution",
    "brute_force_return_distribution",
    "random_markovian_policy",
    "random_reward_augmented_policy",
    "random_parametric_policy",
]

History = Sequence[tuple[int, int]]

#: Trajectory spaces larger than this refuse to enumerate.
ENUMERATION_CAP = 2**20

_ROW_TOL = 1e-9
_MASS_TOL = 1e-10

#: Width of the history embedding used by the parametric simulation experts.
PROJECTION_DIM = 16


class EnumerationCapError(RuntimeError):
    """The trajectory space (S*A)^H exceeds the enumeration cap."""


def _check_rows(table: np.ndarray, what: str) -> np.ndarray:
    table = np.asarray(table, dtype=float)
    sums = table.sum(axis=-1)
    if np.abs(sums - 1.0).max() > _ROW_TOL or table.min() < -_ROW_TOL:
        raise ValueError(f"{what}: action rows must be probability vectors")
    table = table.copy()
    table.setflags(write=False)
    return table


@dataclass(frozen=True)
class MarkovianPolicy:
    """Stage-indexed action table pi_h(a | s)."""

    table: np.ndarray  # (H, S, A)

    def __post_init__(self) -> None:
        t = _check_rows(self.table, "MarkovianPolicy")
        if t.ndim != 3:
            raise ValueError("table must have shape (H, S, A)")
        object.__setattr__(self, "table", t)

    @property
    def horizon(self) -> int:
        return self.table.shape[0]

    def act(self, h: int, state: int, history: History = ()) -> np.ndarray:
        return self.table[h, state]


@dataclass(frozen=True)
class RewardAugmentedPolicy:
    """Action table phi_h(a | s, g) indexed by the discretized cumulative reward.

    ``g`` is the integer grid multiple of the rewards collected so far under
    the stored :class:`GridReward`, which both identifies the reward this
    policy conditions on and lets ``act`` recompute ``g`` from a raw history
    by exact integer accumulation.
    """

    grid: RewardGrid
    table: np.ndarray  # (H, S, G, A) with G = num_multiples(H - 1)
    reward: GridReward

    def __post_init__(self) -> None:
        t = _check_rows(self.table, "RewardAugmentedPolicy")
        if t.ndim != 4:
            raise ValueError("table must have shape (H, S, G, A)")
        horizon = t.shape[0]
        if self.grid.horizon != horizon or self.reward.grid != self.grid:
            raise ValueError("grid, reward and table horizons must agree")
        if t.shape[2] != self.grid.num_multiples(horizon - 1):
            raise ValueError(
                f"g-axis has {t.shape[2]} cells, expected {self.grid.num_multiples(horizon - 1)}"
            )
        object.__setattr__(self, "table", t)

    @property
    def horizon(self) -> int:
        return self.table.shape[0]

    @property
    def reward_tag(self) -> str:
        return self.reward.tag

    def g_of_history(self, history: History) -> int:
        mult = self.reward.multiples
        return int(sum(mult[i, s, a] for i, (s, a) in enumerate(history)))

    def act(self, h: int, state: int, history: History = ()) -> np.ndarray:
        return self.table[h, state, self.g_of_history(history)]


@dataclass(frozen=True)
class ParametricHistoryPolicy:
    """History-dependent policy from random projections (the simulation expert).

    The history (s_1, a_1, ..., s_{h-1}, a_{h-1}) is written as raw integer
    codes (states and actions in declaration order, interleaved), zero-padded
    to length 2H, projected to ``PROJECTION_DIM`` dimensions, and multiplied
    by the current state's weight matrix.  The ``normalization`` tag names
    the rule that turns that product into probabilities; "softmax" (unit
    temperature) is the only rule implemented.
    """

    projection: np.ndarray  # (2H, PROJECTION_DIM)
    state_weights: np.ndarray  # (S, PROJECTION_DIM, A)
    normalization: str = "softmax"

    def __post_init__(self) -> None:
        proj = np.asarray(self.projection, dtype=float).copy()
        w = np.asarray(self.state_weights, dtype=float).copy()
        if proj.ndim != 2 or proj.shape[1] != PROJECTION_DIM or proj.shape[0] % 2:
            raise ValueError(f"projection must have shape (2H, {PROJECTION_DIM})")
        if w.ndim != 3 or w.shape[1] != PROJECTION_DIM:
            raise ValueError(f"state_weights must have shape (S, {PROJECTION_DIM}, A)")
        if self.normalization != "softmax":
            raise ValueError(f"unknown normalization rule {self.normalization!r}")
        proj.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "projection", proj)
        object.__setattr__(self, "state_weights", w)

    @property
    def horizon(self) -> int:
        return self.projection.shape[0] // 2

    def act(self, h: int, state: int, history: History = ()) -> np.ndarray:
        return act_parametric(self, history, state, h)


@dataclass(frozen=True)
class CallablePolicy:
    """Wraps an exact closure (h, state, history) -> action probabilities."""

    fn: Callable[[int, int, History], np.ndarray]
    tag: str = "callable"

    def act(self, h: int, state: int, history: History = ()) -> np.ndarray:
        return np.asarray(self.fn(h, state, history), dtype=float)


PolicyHandle = Union[MarkovianPolicy, RewardAugmentedPolicy, ParametricHistoryPolicy, CallablePolicy]


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def act_parametric(
    pol: ParametricHistoryPolicy, history: History, state: int, h: int
) -> np.ndarray:
    """Action distribution of a parametric history policy at one decision point."""
    encoded = np.zeros(pol.projection.shape[0])
    for i, (s, a) in enumerate(history):
        encoded[2 * i] = s
        encoded[2 * i + 1] = a
    features = encoded @ pol.projection
    return _softmax(features @ pol.state_weights[state])


def _sample_rows(rng: np.random.Generator, probs: np.ndarray) -> np.ndarray:
    """One categorical draw per row, via inverse CDF on a single uniform each."""
    cdf = np.cumsum(probs, axis=1)
    u = rng.random(probs.shape[0])
    idx = (cdf < u[:, None]).sum(axis=1)
    return np.minimum(idx, probs.shape[1] - 1)


def sample_trajectories(
    mdp: TabularMdp, policy: PolicyHandle, n: int, seed: int
) -> Dataset:
    """Draw ``n`` i.i.d. trajectories; bit-identical output for equal seeds.

    Sampling is vectorized across trajectories for the table-based and
    parametric policy kinds; callable fixtures fall back to a per-trajectory
    loop with explicit history tuples.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(seed)
    horizon, num_actions = mdp.horizon, mdp.num_actions
    states = np.empty((n, horizon), dtype=np.int64)
    actions = np.empty((n, horizon), dtype=np.int64)
    cur = np.full(n, mdp.initial_state, dtype=np.int64)

    if isinstance(policy, RewardAugmentedPolicy):
        g = np.zeros(n, dtype=np.int64)
    elif isinstance(policy, ParametricHistoryPolicy):
        encoded = np.zeros((n, 2 * horizon))
    elif isinstance(policy, CallablePolicy):
        histories: list[list[tuple[int, int]]] = [[] for _ in range(n)]

    for h in range(horizon):
        if isinstance(policy, MarkovianPolicy):
            probs = policy.table[h, cur]
        elif isinstance(policy, RewardAugmentedPolicy):
            probs = policy.table[h, cur, g]
        elif isinstance(policy, ParametricHistoryPolicy):
            features = encoded @ policy.projection
            logits = np.einsum("nf,nfa->na", features, policy.state_weights[cur])
            probs = _softmax(logits)
        elif isinstance(policy, CallablePolicy):
            probs = np.stack(
                [policy.act(h, int(cur[i]), tuple(histories[i])) for i in range(n)]
            )
        else:
            raise TypeError(f"unsupported policy kind {type(policy).__name__}")
        a = _sample_rows(rng, probs)
        nxt = _sample_rows(rng, mdp.transitions[h, cur, a])
        states[:, h] = cur
        actions[:, h] = a
        if isinstance(policy, RewardAugmentedPolicy):
            g = g + policy.reward.multiples[h, cur, a]
        elif isinstance(policy, ParametricHistoryPolicy):
            encoded[:, 2 * h] = cur
            encoded[:, 2 * h + 1] = a
        elif isinstance(policy, CallablePolicy):
            for i in range(n):
                histories[i].append((int(cur[i]), int(a[i])))
        cur = nxt

    tag = getattr(policy, "tag", type(policy).__name__)
    return Dataset(states, actions, mdp.num_states, mdp.num_actions, seed=seed, policy_tag=tag)


def _check_enumeration_cap(mdp: TabularMdp, cap: int) -> None:
    size = (mdp.num_states * mdp.num_actions) ** mdp.horizon
    if size > cap:
        raise EnumerationCapError(
            f"trajectory space (S*A)^H = {size} exceeds the cap {cap}"
        )


def enumerate_trajectory_distribution(
    mdp: TabularMdp, policy: PolicyHandle, cap: int = ENUMERATION_CAP
) -> tuple[list[Trajectory], np.ndarray]:
    """All positive-probability trajectories and their probabilities.

    Depth-first walk over histories; works for every policy kind and is the
    brute-force oracle the dynamic program is checked against.
    """
    _check_enumeration_cap(mdp, cap)
    trajectories: list[Trajectory] = []
    probs: list[float] = []
    horizon = mdp.horizon

    def walk(h: int, state: int, prob: float, steps: list[tuple[int, int]]) -> None:
        action_probs = np.asarray(policy.act(h, state, tuple(steps)), dtype=float)
        for a, pa in enumerate(action_probs):
            if pa <= 0.0:
                continue
            steps.append((state, a))
            if h + 1 == horizon:
                trajectories.append(Trajectory(tuple(steps)))
                probs.append(prob * pa)
            else:
                row = mdp.transitions[h, state, a]
                for s2 in np.nonzero(row > 0.0)[0]:
                    walk(h + 1, int(s2), prob * pa * float(row[s2]), steps)
            steps.pop()

    walk(0, mdp.initial_state, 1.0, [])
    return trajectories, np.asarray(probs)


def brute_force_return_distribution(
    mdp: TabularMdp,
    policy: PolicyHandle,
    reward: np.ndarray,
    cap: int = ENUMERATION_CAP,
) -> DiscreteReturnDistribution:
    """Exact return distribution by full trajectory enumeration."""
    trajectories, probs = enumerate_trajectory_distribution(mdp, policy, cap)
    reward = np.asarray(reward, dtype=float)
    idx = np.arange(mdp.horizon)
    returns = [float(reward[idx, t.states, t.actions].sum()) for t in trajectories]
    return DiscreteReturnDistribution.from_weighted(returns, probs)


def mc_return_distribution(
    mdp: TabularMdp, policy: PolicyHandle, reward: np.ndarray, m: int, seed: int
) -> DiscreteReturnDistribution:
    """Empirical return distribution of ``m`` sampled episodes."""
    data = sample_trajectories(mdp, policy, m, seed)
    return empirical_return_distribution(data, reward)


def construct_pi_r(
    mdp: TabularMdp,
    expert: PolicyHandle,
    reward: GridReward | np.ndarray,
    grid: RewardGrid,
) -> RewardAugmentedPolicy:
    """The reward-conditioned projection of an arbitrary expert policy.

    For every (stage, state, cumulative grid value) cell, the output action
    row is the expert's conditional action distribution given that the cell
    was reached, computed exactly by full trajectory enumeration.  Cells the
    expert never reaches get the uniform row.  When the expert's reward is
    already grid-valued, the output provably reproduces the expert's return
    distribution exactly; with rounding, the gap is at most H * theta.
    """
    _check_enumeration_cap(mdp, ENUMERATION_CAP)
    gr = reward if isinstance(reward, GridReward) else discretize_reward(reward, grid)
    if gr.grid != grid:
        raise ValueError("reward grid does not match the requested grid")
    horizon, num_states, num_actions = mdp.horizon, mdp.num_states, mdp.num_actions
    n_g = grid.num_multiples(horizon - 1)
    numer = np.zeros((horizon, num_states, n_g, num_actions))
    denom = np.zeros((horizon, num_states, n_g))

    def walk(h: int, state: int, g: int, prob: float, steps: list[tuple[int, int]]) -> None:
        denom[h, state, g] += prob
        action_probs = np.asarray(expert.act(h, state, tuple(steps)), dtype=float)
        for a, pa in enumerate(action_probs):
            if pa <= 0.0:
                continue
            numer[h, state, g, a] += prob * pa
            if h + 1 == horizon:
                continue
            g2 = g + int(gr.multiples[h, state, a])
            steps.append((state, a))
            row = mdp.transitions[h, state, a]
            for s2 in np.nonzero(row > 0.0)[0]:
                walk(h + 1, int(s2), g2, prob * pa * float(row[s2]), steps)
            steps.pop()

    walk(0, mdp.initial_state, 0, 1.0, [])
    table = np.full((horizon, num_states, n_g, num_actions), 1.0 / num_actions)
    visited = denom > 0.0
    table[visited] = numer[visited] / denom[visited][..., None]
    return RewardAugmentedPolicy(grid=grid, table=table, reward=gr)


def _dp_mass_check(total: float) -> None:
    if abs(total - 1.0) > _MASS_TOL:
        raise AssertionError(f"dynamic program lost probability mass: total {total!r}")


def exact_return_distribution(
    mdp: TabularMdp,
    policy: MarkovianPolicy | RewardAugmentedPolicy,
    reward: np.ndarray | GridReward,
    grid: RewardGrid,
) -> DiscreteReturnDistribution:
    """Exact return distribution of a dynamic-programmable policy.

    The evaluation reward is rounded onto ``grid`` (a no-op if it is already
    grid-valued) and the return is accumulated as integer multiples.  For a
    reward-augmented policy whose own conditioning reward differs from the
    evaluation reward, the program tracks both accumulators jointly, so the
    result is still exact.
    """
    gr_eval = reward if isinstance(reward, GridReward) else discretize_reward(reward, grid)
    if gr_eval.grid != grid:
        raise ValueError("evaluation reward grid does not match the requested grid")
    horizon, num_states, num_actions = mdp.horizon, mdp.num_states, mdp.num_actions
    if getattr(policy, "horizon", horizon) != horizon:
        raise ValueError("policy horizon does not match the MDP")
    n_ret = grid.full_size

    if isinstance(policy, MarkovianPolicy):
        mass = np.zeros((num_states, n_ret))
        mass[mdp.initial_state, 0] = 1.0
        for h in range(horizon):
            nxt = np.zeros_like(mass)
            for s in range(num_states):
                row = mass[s]
                if not row.any():
                    continue
                top = int(np.nonzero(row)[0][-1]) + 1
                for a in range(num_actions):
                    pa = policy.table[h, s, a]
                    if pa == 0.0:
                        continue
                    k = int(gr_eval.multiples[h, s, a])
                    contrib = np.outer(mdp.transitions[h, s, a], row[:top] * pa)
                    nxt[:, k : k + top] += contrib
            mass = nxt
        totals = mass.sum(axis=0)
    elif isinstance(policy, RewardAugmentedPolicy):
        same_reward = policy.grid == grid and np.array_equal(
            policy.reward.multiples, gr_eval.multiples
        )
        if same_reward:
            totals = _dp_single(mdp, policy, gr_eval)
        else:
            totals = _dp_joint(mdp, policy, gr_eval)
    else:
        raise TypeError(
            f"{type(policy).__name__} does not condition on (stage, state, grid reward); "
            "use enumeration or Monte Carlo instead"
        )

    _dp_mass_check(float(totals.sum()))
    support = np.nonzero(totals > 0.0)[0]
    return DiscreteReturnDistribution(support * grid.theta, totals[support])


def _dp_single(mdp: TabularMdp, policy: RewardAugmentedPolicy, gr: GridReward) -> np.ndarray:
    """DP when the policy conditions on the same grid reward it is scored by."""
    horizon, num_states = mdp.horizon, mdp.num_states
    n_ret = gr.grid.full_size
    mass = np.zeros((num_states, n_ret))
    mass[mdp.initial_state, 0] = 1.0
    for h in range(horizon):
        nxt = np.zeros_like(mass)
        for s in range(num_states):
            row = mass[s]
            live = np.nonzero(row)[0]
            if live.size == 0:
                continue
            top = int(live[-1]) + 1
            phi = policy.table[h, s, :top]  # (top, A)
            for a in range(mdp.num_actions):
                k = int(gr.multiples[h, s, a])
                weighted = row[:top] * phi[:, a]
                if not weighted.any():
                    continue
                nxt[:, k : k + top] += np.outer(mdp.transitions[h, s, a], weighted)
        mass = nxt
    return mass.sum(axis=0)


def _dp_joint(mdp: TabularMdp, policy: RewardAugmentedPolicy, gr_eval: GridReward) -> np.ndarray:
    """DP tracking the policy's grid accumulator and the evaluation return jointly."""
    horizon, num_states = mdp.horizon, mdp.num_states
    n_pol = policy.grid.num_multiples(horizon - 1)
    n_ret = gr_eval.grid.full_size
    mass = np.zeros((num_states, n_pol, n_ret))
    mass[mdp.initial_state, 0, 0] = 1.0
    for h in range(horizon):
        nxt = np.zeros_like(mass)
        for s in range(num_states):
            block = mass[s]
            if not block.any():
                continue
            for a in range(mdp.num_actions):
                weighted = block * policy.table[h, s, :, a][:, None]
                if not weighted.any():
                    continue
                # After the last action the policy accumulator is never read
                # again, so it need not advance (it could overflow its table).
                kp = int(policy.reward.multiples[h, s, a]) if h + 1 < horizon else 0
                ke = int(gr_eval.multiples[h, s, a])
                shifted = np.zeros_like(block)
                shifted[kp:, ke:] = weighted[: n_pol - kp, : n_ret - ke]
                nxt += mdp.transitions[h, s, a][:, None, None] * shifted[None, :, :]
        mass = nxt
    return mass.sum(axis=(0, 1))


def exact_augmented_occupancy(
    mdp: TabularMdp,
    policy: RewardAugmentedPolicy | MarkovianPolicy,
    reward: GridReward,
) -> np.ndarray:
    """Occupancy d[h, s, g, a] of a policy on the reward-augmented state space.

    ``d[h, s, g, a]`` is the probability of being in state ``s`` at stage
    ``h`` with cumulative grid multiple ``g`` and choosing action ``a``.
    A Markovian policy is lifted by ignoring ``g``.
    """
    horizon, num_states, num_actions = mdp.horizon, mdp.num_states, mdp.num_actions
    n_g = reward.grid.num_multiples(horizon - 1)
    occ = np.zeros((horizon, num_states, n_g, num_actions))
    mass = np.zeros((num_states, n_g))
    mass[mdp.initial_state, 0] = 1.0
    for h in range(horizon):
        if isinstance(policy, MarkovianPolicy):
            phi = np.broadcast_to(
                policy.table[h][:, None, :], (num_states, n_g, num_actions)
            )
        else:
            phi = policy.table[h]
        occ[h] = mass[:, :, None] * phi
        if h + 1 < horizon:
            nxt = np.zeros_like(mass)
            for s in range(num_states):
                for a in range(num_actions):
                    slab = occ[h, s, :, a]
                    live = np.nonzero(slab)[0]
                    if live.size == 0:
                        continue
                    top = int(live[-1]) + 1
                    k = int(reward.multiples[h, s, a])
                    nxt[:, k : k + top] += np.outer(mdp.transitions[h, s, a], slab[:top])
            mass = nxt
        _dp_mass_check(float(occ[h].sum()))
    return occ


def random_markovian_policy(
    num_states: int, num_actions: int, horizon: int, rng: np.random.Generator
) -> MarkovianPolicy:
    """Rows drawn uniformly from the action simplex."""
    table = rng.dirichlet(np.ones(num_actions), size=(horizon, num_states))
    return MarkovianPolicy(table)


def random_reward_augmented_policy(
    reward: GridReward, num_states: int, rng: np.random.Generator
) -> RewardAugmentedPolicy:
    """Uniform-simplex rows over every (stage, state, grid value) cell."""
    grid = reward.grid
    horizon = grid.horizon
    num_actions = reward.multiples.shape[2]
    n_g = grid.num_multiples(horizon - 1)
    table = rng.dirichlet(np.ones(num_actions), size=(horizon, num_states, n_g))
    return RewardAugmentedPolicy(grid=grid, table=table, reward=reward)


def random_parametric_policy(
    num_states: int, num_actions: int, horizon: int, rng: np.random.Generator
) -> ParametricHistoryPolicy:
    """Projection and per-state weight matrices drawn i.i.d. standard normal."""
    projection = rng.standard_normal((2 * horizon, PROJECTION_DIM))
    weights = rng.standard_normal((num_states, PROJECTION_DIM, num_actions))
    return ParametricHistoryPolicy(projection, weights)
