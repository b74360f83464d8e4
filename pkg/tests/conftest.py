import numpy as np
import pytest

import rdmlab as rl


def make_instance(
    seed,
    num_states=3,
    num_actions=2,
    horizon=4,
    rho=0.25,
    expert_kind="markovian",
    continuous_reward=False,
):
    """Small random instance via the bench generator, optionally with a
    continuous (off-grid) reward table."""
    cfg = rl.ExperimentConfig(
        num_states=num_states,
        num_actions=num_actions,
        horizon=horizon,
        theta=rho,
        rho=rho,
        expert_kind=expert_kind,
        n_sweep=(1,),
        instances=1,
        seeds_per_dataset=1,
        eval_mode="enumeration",
    )
    mdp, expert = rl.generate_instance(cfg, seed)
    if continuous_reward:
        rng = np.random.default_rng(seed + 77_000)
        mdp = rl.TabularMdp(
            num_states=mdp.num_states,
            num_actions=mdp.num_actions,
            horizon=mdp.horizon,
            initial_state=mdp.initial_state,
            transitions=mdp.transitions,
            reward=rng.uniform(0.0, 1.0, size=mdp.reward.shape),
        )
    return mdp, expert


def random_distribution(rng, max_atoms=6, high=5.0):
    size = int(rng.integers(1, max_atoms + 1))
    values = rng.uniform(0.0, high, size=size)
    probs = rng.dirichlet(np.ones(size))
    return rl.DiscreteReturnDistribution.from_weighted(values, probs)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
