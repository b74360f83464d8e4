import numpy as np
import pytest

import rdmlab as rl
from rdmlab.policies import random_reward_augmented_policy
from rdmlab.serialize import (
    format_distribution,
    format_policy,
    load_mdp,
    load_policy,
    mdp_from_json,
    mdp_to_json,
    parse_distribution,
    parse_policy,
    save_mdp,
    save_policy,
)

from conftest import make_instance


class TestMdpDocuments:
    def test_round_trip_is_value_exact(self, tmp_path):
        mdp, _ = make_instance(4, rho=0.03)
        path = tmp_path / "mdp.json"
        save_mdp(mdp, path)
        loaded = load_mdp(path)
        assert np.array_equal(loaded.transitions, mdp.transitions)
        assert np.array_equal(loaded.reward, mdp.reward)
        assert loaded.initial_state == mdp.initial_state
        assert (loaded.num_states, loaded.num_actions, loaded.horizon) == (
            mdp.num_states, mdp.num_actions, mdp.horizon,
        )

    def test_decimal_fractions_survive(self):
        transitions = np.zeros((1, 2, 1, 2))
        transitions[0, :, 0, 0] = 0.1
        transitions[0, :, 0, 1] = 0.9
        reward = np.full((1, 2, 1), 0.3)
        mdp = rl.TabularMdp(2, 1, 1, 0, transitions, reward)
        again = mdp_from_json(mdp_to_json(mdp))
        assert np.array_equal(again.transitions, mdp.transitions)
        assert np.array_equal(again.reward, mdp.reward)


class TestDistributionDumps:
    def test_point_mass_is_two_tokens(self):
        assert format_distribution(rl.DiscreteReturnDistribution.point_mass(1.0)) == "1 1\n"

    def test_round_trip(self):
        d = rl.DiscreteReturnDistribution.from_weighted(
            [0.1, 1.75, 3.0], [0.25, 0.5, 0.25]
        )
        again = parse_distribution(format_distribution(d))
        assert np.array_equal(again.support, d.support)
        assert np.array_equal(again.probs, d.probs)


class TestPolicyDocuments:
    def test_markovian_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        pol = rl.random_markovian_policy(3, 2, 4, rng)
        path = tmp_path / "policy.txt"
        save_policy(pol, path)
        again = load_policy(path)
        assert isinstance(again, rl.MarkovianPolicy)
        assert np.array_equal(again.table, pol.table)

    def test_reward_augmented_round_trip(self):
        mdp, _ = make_instance(6, rho=0.5)
        grid = rl.RewardGrid(0.5, mdp.horizon)
        gr = rl.discretize_reward(mdp.reward, grid)
        rng = np.random.default_rng(1)
        pol = random_reward_augmented_policy(gr, mdp.num_states, rng)
        again = parse_policy(format_policy(pol))
        assert isinstance(again, rl.RewardAugmentedPolicy)
        assert np.array_equal(again.table, pol.table)
        assert np.array_equal(again.reward.multiples, pol.reward.multiples)
        assert again.grid == pol.grid

    def test_document_rows_have_grid_multiples(self):
        mdp, _ = make_instance(6, rho=0.5)
        grid = rl.RewardGrid(0.5, mdp.horizon)
        gr = rl.discretize_reward(mdp.reward, grid)
        rng = np.random.default_rng(1)
        text = format_policy(random_reward_augmented_policy(gr, mdp.num_states, rng))
        lines = text.splitlines()
        start = lines.index("policy") + 1
        h, s, g = (int(tok) for tok in lines[start].split()[:3])
        assert (h, s, g) == (0, 0, 0)

    def test_unknown_document_rejected(self):
        with pytest.raises(ValueError):
            parse_policy("nonsense\n")
