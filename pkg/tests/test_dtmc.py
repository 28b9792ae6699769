import numpy as np
import pytest

import traceverify as tv
from traceverify.errors import ModelFormatError


def random_dag_dtmc(rng, max_states=12):
    """Random acyclic DTMC: edges only go forward; sinks self-loop."""
    n = int(rng.integers(2, max_states + 1))
    rows = []
    for i in range(n - 1):
        succ = sorted(rng.choice(np.arange(i + 1, n),
                                 size=min(int(rng.integers(1, 4)), n - i - 1),
                                 replace=False))
        weights = rng.dirichlet(np.ones(len(succ)))
        rows.append({int(s): float(w) for s, w in zip(succ, weights)})
    rows.append({n - 1: 1.0})
    k = int(rng.integers(1, 3))
    starts = sorted(rng.choice(np.arange(n), size=min(k, n), replace=False))
    init = np.zeros(n)
    init[starts] = rng.dirichlet(np.ones(len(starts)))
    targets = set(int(t) for t in rng.choice(np.arange(n),
                                             size=int(rng.integers(1, n)),
                                             replace=False))
    tags = tuple("1" if i in targets else "0" for i in range(n))
    return tv.Dtmc(tags, init, rows), targets


def exhaustive_path_sum(model, targets):
    """Oracle: sum initial-weighted products over hitting-first DAG paths.

    Plain depth-first enumeration; exponential, so only for small instances.
    """
    total = 0.0

    def walk(state, prob):
        nonlocal total
        if state in targets:
            total += prob
            return
        for t, p in model.rows[state].items():
            if t != state and p > 0:
                walk(t, prob * p)

    for s in model.initial_states():
        walk(s, float(model.init[s]))
    return total


def grouped_path_sum(model, targets):
    """Same sum with common suffixes factored (handles 12-state instances)."""
    memo = {}

    def mass(state):
        if state in targets:
            return 1.0
        if state not in memo:
            memo[state] = sum(p * mass(t) for t, p in model.rows[state].items()
                              if t != state and p > 0)
        return memo[state]

    return sum(float(model.init[s]) * mass(s) for s in model.initial_states())


class TestValidation:
    def test_row_sum_enforced(self):
        with pytest.raises(ModelFormatError, match="row 0"):
            tv.Dtmc(("0",), np.array([1.0]), [{0: 0.9}])

    def test_init_sum_enforced(self):
        with pytest.raises(ModelFormatError, match="initial"):
            tv.Dtmc(("0",), np.array([0.9]), [{0: 1.0}])


class TestPathProbability:
    def test_chain_path(self, chain):
        assert tv.path_probability(chain, [0, 0, 1], initial_weighted=True) == \
            pytest.approx(1 * 0.998 * 0.002, abs=1e-15)

    def test_single_state_initial_weighted(self, chain):
        assert tv.path_probability(chain, [0], initial_weighted=True) == 1.0
        assert tv.path_probability(chain, [1], initial_weighted=True) == 0.0

    def test_unweighted_entry_point(self, chain):
        assert tv.path_probability(chain, [0, 0]) == pytest.approx(0.998)

    def test_absent_transition_gives_zero(self, chain):
        assert tv.path_probability(chain, [1, 0], initial_weighted=True) == 0.0

    def test_unknown_state_rejected(self, chain):
        with pytest.raises(ModelFormatError, match="unknown state"):
            tv.path_probability(chain, [0, 5])


class TestReachProbability:
    def test_initial_target(self):
        d = tv.Dtmc(("1", "0"), np.array([1.0, 0.0]), [{1: 1.0}, {1: 1.0}])
        assert tv.reach_probability(d, tv.first_bit_target) == 1.0

    def test_geometric_escape(self):
        # s0: 0.5 self, 0.25 -> bad, 0.25 -> safe; closed form 0.25/(1-0.5)
        d = tv.Dtmc(("0", "1", "0"), np.array([1.0, 0.0, 0.0]),
                    [{0: 0.5, 1: 0.25, 2: 0.25}, {1: 1.0}, {2: 1.0}])
        assert tv.reach_probability(d, tv.first_bit_target) == \
            pytest.approx(0.5, abs=1e-12)

    def test_leaky_self_loop_reaches_one(self, chain):
        assert tv.reach_probability(chain, tv.first_bit_target) == \
            pytest.approx(1.0, abs=1e-9)

    def test_unreachable_target_is_zero(self):
        d = tv.Dtmc(("0", "1"), np.array([1.0, 0.0]), [{0: 1.0}, {1: 1.0}])
        assert tv.reach_probability(d, tv.first_bit_target) == 0.0

    def test_prob0_states_match_graph_search(self):
        rng = np.random.default_rng(3)
        for _ in range(25):
            model, targets = random_dag_dtmc(rng)
            _, vector = tv.reach_probability(model, targets, return_vector=True)
            # BFS forward reachability oracle per state
            for s in range(model.n_states):
                frontier, seen = [s], {s}
                reachable = False
                while frontier:
                    u = frontier.pop()
                    if u in targets:
                        reachable = True
                        break
                    for v, p in model.rows[u].items():
                        if p > 0 and v not in seen:
                            seen.add(v)
                            frontier.append(v)
                if not reachable:
                    assert vector[s] == 0.0
                else:
                    assert vector[s] > 0.0

    def test_matches_exhaustive_path_sum_on_random_dags(self):
        rng = np.random.default_rng(17)
        for i in range(120):
            model, targets = random_dag_dtmc(rng)
            expected = grouped_path_sum(model, targets)
            if i % 4 == 0 and model.n_states <= 8:
                # validate the grouped oracle against raw enumeration
                assert expected == pytest.approx(
                    exhaustive_path_sum(model, targets), abs=1e-12)
            assert tv.reach_probability(model, targets) == \
                pytest.approx(expected, abs=1e-9)

    def test_iterative_solver_agrees_with_direct(self, chain):
        # The sweep tolerance is 1e-10; with contraction rate 0.998 the final
        # error is about 1e-10 / 0.002 = 5e-8.
        direct = tv.reach_probability(chain, tv.first_bit_target, method="direct")
        iterative = tv.reach_probability(chain, tv.first_bit_target, method="iterative")
        assert direct == pytest.approx(iterative, abs=1e-6)

    def test_probability_bounds(self):
        rng = np.random.default_rng(23)
        for _ in range(30):
            model, targets = random_dag_dtmc(rng)
            p = tv.reach_probability(model, targets)
            assert 0.0 <= p <= 1.0


class TestCheck:
    def test_violated_carries_probability(self, chain):
        result = tv.check(chain, tv.ReachQuery(0.2))
        assert not result.satisfied
        assert result.probability == pytest.approx(1.0, abs=1e-9)

    def test_unreachable_satisfied(self):
        d = tv.Dtmc(("0", "1"), np.array([1.0, 0.0]), [{0: 1.0}, {1: 1.0}])
        assert tv.check(d, tv.ReachQuery(0.0)).satisfied

    def test_boundary_is_inclusive(self):
        d = tv.Dtmc(("0", "1", "0"), np.array([1.0, 0.0, 0.0]),
                    [{1: 0.25, 2: 0.75}, {1: 1.0}, {2: 1.0}])
        assert tv.check(d, tv.ReachQuery(0.25)).satisfied
        assert not tv.check(d, tv.ReachQuery(0.2499)).satisfied


class TestFormats:
    def test_model_round_trip(self, tmp_path, chain):
        path = tmp_path / "m.dtmc"
        tv.save_model(chain, path)
        again = tv.load_model(path)
        assert again.tags == chain.tags
        np.testing.assert_array_equal(again.init, chain.init)
        assert list(again.rows) == list(chain.rows)
        assert again.steps == chain.steps

    def test_dot_export_mentions_every_edge(self, chain):
        dot = tv.to_dot(chain)
        assert dot.startswith("digraph")
        assert "0 -> 1" in dot and "1 -> 1" in dot

    def test_walk(self, chain):
        walked, ok = chain.walk(("0", "0", "1"))
        assert ok and walked == [0, 0, 1]
        walked, ok = chain.walk(("1",))
        assert not ok and walked == []
        walked, ok = chain.walk(("0", "1", "0"))
        assert not ok and walked == [0, 1]
