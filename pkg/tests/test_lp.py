import numpy as np
import pytest

import rdmlab as rl
from rdmlab.lp import LinearProgram, LpIterationError, format_lp, solve, solve_transport


class TestBasics:
    def test_min_above_one(self):
        sol = solve(LinearProgram(c=[1.0], A_le=[[-1.0]], b_le=[-1.0]))
        assert sol.status == "optimal"
        assert sol.x[0] == pytest.approx(1.0)
        assert sol.objective == pytest.approx(1.0)

    def test_contradictory_equalities_infeasible(self):
        sol = solve(LinearProgram(c=[0.0], A_eq=[[1.0], [1.0]], b_eq=[1.0, 2.0]))
        assert sol.status == "infeasible"

    def test_unbounded_below(self):
        assert solve(LinearProgram(c=[-1.0])).status == "unbounded"

    def test_equality_with_redundant_rows(self):
        lp = LinearProgram(
            c=[1.0, 1.0],
            A_eq=[[1.0, 1.0], [1.0, 1.0], [2.0, 2.0]],
            b_eq=[1.0, 1.0, 2.0],
        )
        sol = solve(lp)
        assert sol.status == "optimal"
        assert sol.objective == pytest.approx(1.0)

    def test_free_variable_split(self):
        # min t s.t. |x - 3| <= t with x free
        lp = LinearProgram(
            c=[0.0, 1.0],
            A_le=[[1.0, -1.0], [-1.0, -1.0]],
            b_le=[3.0, -3.0],
            lower=[-np.inf, 0.0],
        )
        sol = solve(lp)
        assert sol.x[0] == pytest.approx(3.0)
        assert sol.objective == pytest.approx(0.0)

    def test_upper_bounds(self):
        sol = solve(LinearProgram(c=[-1.0], upper=[2.5]))
        assert sol.x[0] == pytest.approx(2.5)

    def test_crossed_bounds_infeasible(self):
        sol = solve(LinearProgram(c=[1.0], lower=[2.0], upper=[1.0]))
        assert sol.status == "infeasible"

    def test_nan_rejected(self):
        with pytest.raises(ValueError):
            LinearProgram(c=[np.nan])

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ValueError):
            LinearProgram(c=[1.0, 2.0], A_eq=[[1.0]], b_eq=[1.0])


class TestDeterminism:
    def test_same_program_same_path(self):
        rng = np.random.default_rng(4)
        a = rng.normal(size=(6, 9))
        x0 = rng.random(9)
        lp = LinearProgram(c=rng.normal(size=9), A_eq=a, b_eq=a @ x0, upper=np.full(9, 5.0))
        s1, s2 = solve(lp), solve(lp)
        assert s1.iterations == s2.iterations
        assert np.array_equal(s1.x, s2.x)


class TestCertificates:
    def test_duality_gap_small_on_random_programs(self):
        rng = np.random.default_rng(11)
        for _ in range(25):
            n, m = 8, 5
            a = rng.normal(size=(m, n))
            x0 = rng.random(n)
            lp = LinearProgram(
                c=rng.normal(size=n),
                A_eq=a,
                b_eq=a @ x0,
                upper=np.full(n, 10.0),
            )
            sol = solve(lp)
            assert sol.status == "optimal"
            assert sol.duality_gap is not None and sol.duality_gap <= 1e-7

    def test_scaled_rows_still_solve(self):
        # badly scaled rows get equilibrated internally
        lp = LinearProgram(
            c=[1.0, 2.0],
            A_eq=[[1e6, 1e6]],
            b_eq=[1e6],
            A_le=[[-1e-6, 0.0]],
            b_le=[-1e-7],
        )
        sol = solve(lp)
        assert sol.status == "optimal"
        assert sol.x[0] + sol.x[1] == pytest.approx(1.0)
        assert sol.x[0] >= 0.1 - 1e-9

    def test_iteration_cap_raises(self):
        lp = LinearProgram(c=[-1.0, -2.0], A_le=[[1.0, 1.0], [1.0, 3.0]], b_le=[4.0, 6.0])
        with pytest.raises(LpIterationError):
            solve(lp, max_iterations=1)


class TestDebugDump:
    def test_format_lists_objective_rows_and_bounds(self):
        lp = LinearProgram(
            c=[1.0, 2.0],
            A_eq=[[1.0, 1.0]],
            b_eq=[1.0],
            A_le=[[0.5, 0.0]],
            b_le=[0.25],
            lower=[-np.inf, 0.0],
        )
        text = format_lp(lp)
        assert text.startswith("minimize 1.0 2.0")
        assert "eq 1.0 1.0 | 1.0" in text
        assert "le 0.5 0.0 | 0.25" in text
        assert "bound x0" in text and "bound x1" not in text


class TestTransport:
    def test_equal_marginals_zero_cost(self):
        xs = np.array([0.0, 1.0, 2.5])
        costs = np.abs(xs[:, None] - xs[None, :])
        p = np.array([0.2, 0.3, 0.5])
        assert solve_transport(costs, p, p) == pytest.approx(0.0, abs=1e-12)

    def test_point_masses(self):
        assert solve_transport(np.array([[1.75]]), [1.0], [1.0]) == pytest.approx(1.75)

    def test_matches_cdf_sweep(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            xs = np.sort(rng.uniform(0, 4, size=4))
            ys = np.sort(rng.uniform(0, 4, size=4))
            p = rng.dirichlet(np.ones(4))
            q = rng.dirichlet(np.ones(4))
            dp = rl.DiscreteReturnDistribution.from_weighted(xs, p)
            dq = rl.DiscreteReturnDistribution.from_weighted(ys, q)
            costs = np.abs(dp.support[:, None] - dq.support[None, :])
            assert solve_transport(costs, dp.probs, dq.probs) == pytest.approx(
                rl.wasserstein(dp, dq), abs=1e-9
            )

    def test_marginal_validation(self):
        with pytest.raises(ValueError):
            solve_transport(np.zeros((2, 2)), [0.5, 0.4], [0.5, 0.5])
