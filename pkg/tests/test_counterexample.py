import itertools
import math

import numpy as np
import pytest

import traceverify as tv


class TestEnumeration:
    def test_first_three_chain_paths(self, chain):
        gen = tv.enumerate_paths(chain, tv.first_bit_target)
        paths = list(itertools.islice(gen, 3))
        assert [p.states for p in paths] == [(0, 1), (0, 0, 1), (0, 0, 0, 1)]
        assert paths[0].probability == pytest.approx(0.002)
        assert paths[1].probability == pytest.approx(0.998 * 0.002)
        assert paths[2].probability == pytest.approx(0.998**2 * 0.002)

    def test_initial_state_is_target(self):
        d = tv.Dtmc(("1", "0"), np.array([0.6, 0.4]), [{0: 1.0}, {1: 1.0}])
        paths = list(itertools.islice(tv.enumerate_paths(d, tv.first_bit_target), 1))
        assert paths[0].states == (0,)
        assert paths[0].probability == pytest.approx(0.6)

    def test_equal_probability_ties_break_lexicographically(self):
        # Two initial states with identical mass, each one step from a target.
        d = tv.Dtmc(
            ("0", "0", "1", "1"), np.array([0.5, 0.5, 0.0, 0.0]),
            [{2: 1.0}, {3: 1.0}, {2: 1.0}, {3: 1.0}])
        paths = list(itertools.islice(tv.enumerate_paths(d, tv.first_bit_target), 2))
        assert [p.states for p in paths] == [(0, 2), (1, 3)]

    def test_probabilities_non_increasing_on_random_models(self):
        rng = np.random.default_rng(9)
        for _ in range(20):
            n = int(rng.integers(2, 7))
            rows = []
            for i in range(n):
                weights = rng.dirichlet(np.ones(n)) + 0.01
                weights /= weights.sum()
                rows.append({j: float(w) for j, w in enumerate(weights)})
            init = rng.dirichlet(np.ones(n)) + 0.01
            init /= init.sum()
            tags = ("0",) * (n - 1) + ("1",)
            d = tv.Dtmc(tags, init, rows)
            paths = list(itertools.islice(
                tv.enumerate_paths(d, tv.first_bit_target), 300))
            probs = [p.probability for p in paths]
            assert all(a >= b - 1e-12 for a, b in zip(probs, probs[1:]))


class TestBuild:
    def test_exactly_112_paths_at_threshold_02(self, chain):
        cex = tv.build_counterexample(chain, tv.first_bit_target, 0.2)
        assert isinstance(cex, tv.Counterexample)
        assert len(cex.paths) == 112
        assert cex.total > 0.2
        assert cex.total - cex.paths[-1].probability <= 0.2
        # closed-form oracle: smallest K with 1 - 0.998^K > 0.2
        k = math.ceil(math.log(0.8) / math.log(0.998))
        assert k == 112
        assert cex.total == pytest.approx(1 - 0.998**112, abs=1e-12)

    def test_zero_threshold_single_path(self, chain):
        cex = tv.build_counterexample(chain, tv.first_bit_target, 0.0)
        assert isinstance(cex, tv.Counterexample)
        assert len(cex.paths) == 1
        assert cex.paths[0].states == (0, 1)

    def test_exhausted_when_mass_insufficient(self):
        # reach probability 0.25 but threshold higher
        d = tv.Dtmc(("0", "1", "0"), np.array([1.0, 0.0, 0.0]),
                    [{1: 0.25, 2: 0.75}, {1: 1.0}, {2: 1.0}])
        out = tv.build_counterexample(d, tv.first_bit_target, 0.5)
        assert isinstance(out, tv.Exhausted)
        assert out.total == pytest.approx(0.25)

    def test_truncated_when_path_budget_hits(self):
        # four equally likely one-step targets; threshold unreachable with 2
        d = tv.Dtmc(("0", "1", "1", "1", "1"), np.array([1.0, 0, 0, 0, 0]),
                    [{1: 0.25, 2: 0.25, 3: 0.25, 4: 0.25},
                     {1: 1.0}, {2: 1.0}, {3: 1.0}, {4: 1.0}])
        out = tv.build_counterexample(d, tv.first_bit_target, 0.9, k_max=2)
        assert isinstance(out, tv.Truncated)
        assert out.paths_seen == 2
        assert out.total == pytest.approx(0.5)

    def test_truncated_on_path_budget_for_heavy_tail(self, chain):
        # Threshold 0.9 needs ~1150 chain paths; k_max=10 stops early.
        out = tv.build_counterexample(chain, tv.first_bit_target, 0.9, k_max=10)
        assert isinstance(out, tv.Truncated)
        assert out.paths_seen == 10

    def test_greedy_minimality_on_random_models(self):
        rng = np.random.default_rng(31)
        for _ in range(20):
            n = int(rng.integers(3, 7))
            rows = []
            for i in range(n):
                weights = rng.dirichlet(np.ones(n) * 0.7) + 0.01
                weights /= weights.sum()
                rows.append({j: float(w) for j, w in enumerate(weights)})
            init = np.zeros(n)
            init[0] = 1.0
            tags = ["0"] * n
            tags[n - 1] = "1"
            d = tv.Dtmc(tuple(tags), init, rows)
            r = float(rng.uniform(0.05, 0.5))
            out = tv.build_counterexample(d, tv.first_bit_target, r, k_max=5000)
            if isinstance(out, tv.Counterexample):
                assert out.total > r
                assert out.total - out.paths[-1].probability <= r
                total = sum(p.probability for p in out.paths)
                assert total <= tv.reach_probability(d, tv.first_bit_target) + 1e-9

    def test_soundness_versus_reach_probability(self, chain):
        cex = tv.build_counterexample(chain, tv.first_bit_target, 0.2)
        assert sum(p.probability for p in cex.paths) <= \
            tv.reach_probability(chain, tv.first_bit_target) + 1e-9


class TestMember:
    def test_prefix_hit(self, chain):
        cex = tv.build_counterexample(chain, tv.first_bit_target, 0.2)
        assert tv.member(cex, chain, ("0", "1")).hit
        assert tv.member(cex, chain, ("0", "1", "1", "1")).hit

    def test_all_zero_trace_misses(self, chain):
        cex = tv.build_counterexample(chain, tv.first_bit_target, 0.2)
        result = tv.member(cex, chain, ("0",) * 5)
        assert not result.hit and not result.out_of_model

    def test_short_non_target_trace_misses(self, chain):
        cex = tv.build_counterexample(chain, tv.first_bit_target, 0.2)
        assert not tv.member(cex, chain, ("0",)).hit

    def test_walk_leaving_model_flagged(self, chain):
        cex = tv.build_counterexample(chain, tv.first_bit_target, 0.2)
        result = tv.member(cex, chain, ("0", "0", "2"))
        assert not result.hit and result.out_of_model

    def test_agrees_with_symbol_sequence_oracle(self, chain):
        # On a deterministic model, membership by state prefix equals
        # membership by tag-sequence prefix.
        cex = tv.build_counterexample(chain, tv.first_bit_target, 0.05)
        tag_paths = {tuple(chain.tags[s] for s in p.states) for p in cex.paths}
        rng = np.random.default_rng(4)
        for _ in range(200):
            symbols = tuple(rng.choice(["0", "1"]) for _ in range(int(rng.integers(1, 8))))
            naive = any(symbols[:k] in tag_paths for k in range(1, len(symbols) + 1))
            assert tv.member(cex, chain, symbols).hit == naive
