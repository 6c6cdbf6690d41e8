"""Empirical estimation, cumulative-interval sampling and chain simulation."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mcnn import markov
from mcnn.errors import FormatError, InputError
from mcnn.markov import DiscreteDistribution, MarkovChain


def no_repeat_chain(n=4):
    t = np.full((n, n), 1.0 / (n - 1))
    np.fill_diagonal(t, 0.0)
    return MarkovChain([str(i + 1) for i in range(n)], t)


def one_hot(i, n):
    v = np.zeros(n)
    v[i] = 1.0
    return v


class TestEstimateEmpirical:
    def test_counting_oracle(self):
        a, b, c = [1.0], [2.0], [3.0]
        emp = markov.estimate_empirical([(a, b), (a, c), (a, c)])
        entry = emp.entry(a)
        assert entry.distribution.probs == pytest.approx([1 / 3, 2 / 3])
        assert entry.counts.tolist() == [1, 2]

    def test_single_observation(self):
        emp = markov.estimate_empirical([([1.0], [2.0])])
        assert emp.entry([1.0]).distribution.probs.tolist() == [1.0]

    def test_long_simulation_recovers_thirds(self):
        chain = no_repeat_chain()
        states = markov.simulate_chain(chain, 0, 30000, seed=9)
        pairs = [(one_hot(x, 4), one_hot(y, 4)) for x, y in zip(states, states[1:])]
        emp = markov.estimate_empirical(pairs)
        for j in range(4):
            probs = np.zeros(4)
            entry = emp.entry(one_hot(j, 4))
            for vec, p in zip(entry.outcomes, entry.distribution.probs):
                probs[int(np.argmax(vec))] = p
            for i in range(4):
                expected = 0.0 if i == j else 1 / 3
                assert abs(probs[i] - expected) <= 0.02

    def test_empty_rejected(self):
        with pytest.raises(InputError):
            markov.estimate_empirical([])

    def test_probabilities_permutation_invariant(self):
        pairs = [([0.0], [float(k % 3)]) for k in range(30)]
        emp1 = markov.estimate_empirical(pairs)
        emp2 = markov.estimate_empirical(list(reversed(pairs)))
        e1, e2 = emp1.entry([0.0]), emp2.entry([0.0])
        m1 = dict(zip(e1.outcome_keys, e1.distribution.probs))
        m2 = dict(zip(e2.outcome_keys, e2.distribution.probs))
        assert m1 == m2


class TestCumulative:
    def test_thirds(self):
        iv = markov.cumulative(DiscreteDistribution(np.array([1 / 3, 1 / 3, 1 / 3])))
        assert iv.boundaries == pytest.approx([0, 1 / 3, 2 / 3, 1])
        assert iv.boundaries[-1] == 1.0

    def test_single_outcome(self):
        iv = markov.cumulative(DiscreteDistribution(np.array([1.0])))
        assert iv.boundaries.tolist() == [0.0, 1.0]

    def test_prefix_sums(self):
        iv = markov.cumulative(DiscreteDistribution(np.array([0.2, 0.5, 0.3])))
        assert iv.boundaries == pytest.approx([0, 0.2, 0.7, 1.0])


class TestSampleIndex:
    # intervals (0, 1/3, 2/3, 1) over successors {2, 3, 4} of the first state
    def intervals(self):
        return markov.cumulative(DiscreteDistribution(np.array([1 / 3, 1 / 3, 1 / 3])))

    @pytest.mark.parametrize(
        "r,expected", [(0.5, 1), (0.2, 0), (0.8, 2), (0.9, 2), (0.1, 0)]
    )
    def test_interval_lookup(self, r, expected):
        assert markov.sample_index(self.intervals(), r) == expected

    def test_r_one_maps_to_last_positive(self):
        iv = markov.cumulative(DiscreteDistribution(np.array([0.5, 0.5, 0.0])))
        assert markov.sample_index(iv, 1.0) == 1

    def test_boundary_is_right_owned(self):
        iv = markov.cumulative(DiscreteDistribution(np.array([0.5, 0.5])))
        assert markov.sample_index(iv, 0.5) == 1
        assert markov.sample_index(iv, 0.0) == 0

    def test_out_of_range(self):
        with pytest.raises(InputError):
            markov.sample_index(self.intervals(), 1.5)

    def test_grid_exactness(self):
        # quasi-uniform grid oracle: hit frequencies match masses within 1e-3
        dist = DiscreteDistribution(np.array([0.1, 0.0, 0.35, 0.3, 0.25]))
        iv = markov.cumulative(dist)
        hits = np.zeros(5)
        for k in range(10000):
            hits[markov.sample_index(iv, k / 10000)] += 1
        assert np.abs(hits / 10000 - dist.probs).max() <= 1e-3

    @given(
        st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=1, max_size=8),
        st.floats(min_value=0.0, max_value=1.0),
    )
    @settings(max_examples=300, deadline=None)
    def test_partition_property(self, weights, r):
        # every r maps to exactly one outcome and never one of zero probability
        total = sum(weights)
        if total <= 0:
            return
        probs = np.array(weights) / total
        probs = probs / probs.sum()
        iv = markov.cumulative(DiscreteDistribution(probs))
        k = markov.sample_index(iv, r)
        assert 0 <= k < len(probs)
        assert probs[k] > 0


class TestAugment:
    def test_prepends(self):
        out = markov.augment(np.array([1.0, 0, 0, 0]), 0.5)
        assert out.tolist() == [0.5, 1, 0, 0, 0]

    def test_empty_vector(self):
        assert markov.augment(np.array([]), 0.0).tolist() == [0.0]

    def test_general_concat(self):
        assert markov.augment(np.array([-1.0, 0, 1]), 0.25).tolist() == [0.25, -1, 0, 1]

    def test_rejects_bad_r(self):
        with pytest.raises(InputError):
            markov.augment(np.zeros(2), 1.0001)


class TestGeneratePairs:
    def walker_emp(self):
        # first state's conditional: successors 2, 3, 4 each with mass 1/3
        outcomes = [(one_hot(i, 4), p) for i, p in enumerate([0, 1 / 3, 1 / 3, 1 / 3])]
        return markov.EmpiricalConditional.from_conditionals([(one_hot(0, 4), outcomes)])

    def test_injected_r_table(self):
        rs = [0.5, 0.2, 0.8, 0.9, 0.1]
        pairs = markov.generate_pairs(self.walker_emp(), 5, r_stream=iter(rs))
        expected_targets = [
            [0, 0, 1, 0],
            [0, 1, 0, 0],
            [0, 0, 0, 1],
            [0, 0, 0, 1],
            [0, 1, 0, 0],
        ]
        for pair, r, target in zip(pairs, rs, expected_targets):
            assert pair.input.tolist() == [r, 1, 0, 0, 0]
            assert pair.target.tolist() == target

    def test_degenerate_outcome(self):
        emp = markov.EmpiricalConditional.from_conditionals(
            [(np.array([1.0]), [(np.array([5.0]), 1.0)])]
        )
        pairs = markov.generate_pairs(emp, 50, seed=1)
        assert all(p.target.tolist() == [5.0] for p in pairs)

    def test_large_sample_frequencies(self):
        pairs = markov.generate_pairs(self.walker_emp(), 100000, seed=3)
        freqs = np.zeros(4)
        for p in pairs:
            freqs[int(np.argmax(p.target))] += 1
        freqs /= len(pairs)
        assert freqs[0] == 0.0
        for i in (1, 2, 3):
            assert abs(freqs[i] - 1 / 3) <= 0.01

    def test_deterministic_given_seed(self):
        a = markov.generate_pairs(self.walker_emp(), 20, seed=11)
        b = markov.generate_pairs(self.walker_emp(), 20, seed=11)
        assert all(
            np.array_equal(x.input, y.input) and np.array_equal(x.target, y.target)
            for x, y in zip(a, b)
        )

    def test_resample_round_trip(self):
        # generate -> re-estimate recovers the distribution within L1 0.02
        emp = markov.EmpiricalConditional.from_conditionals(
            [
                (one_hot(0, 2), [(one_hot(0, 3), 0.2), (one_hot(1, 3), 0.5), (one_hot(2, 3), 0.3)]),
                (one_hot(1, 2), [(one_hot(0, 3), 0.9), (one_hot(2, 3), 0.1)]),
            ]
        )
        pairs = markov.generate_pairs(emp, 100000, seed=7)
        again = markov.estimate_empirical([(p.input[1:], p.target) for p in pairs])
        for key, entry in emp.table.items():
            re_entry = again.table[key]
            probs = dict(zip(re_entry.outcome_keys, re_entry.distribution.probs))
            l1 = sum(
                abs(probs.get(k, 0.0) - p)
                for k, p in zip(entry.outcome_keys, entry.distribution.probs)
            )
            assert l1 <= 0.02


class TestChain:
    def test_chain_step_interval_logic(self):
        chain = no_repeat_chain()
        assert markov.chain_step(chain, 0, 0.5) == 2

    def test_one_hot_column(self):
        t = np.array([[0.0, 1.0], [1.0, 0.0]])
        chain = MarkovChain(["a", "b"], t)
        for r in (0.0, 0.3, 0.99, 1.0):
            assert markov.chain_step(chain, 0, r) == 1

    def test_half_split_column(self):
        chain = MarkovChain(["a", "b"], np.array([[0.5, 0.5], [0.5, 0.5]]))
        assert markov.chain_step(chain, 0, 0.49) == 0
        assert markov.chain_step(chain, 0, 0.51) == 1

    def test_simulate_zero_steps(self):
        assert markov.simulate_chain(no_repeat_chain(), 2, 0, seed=0) == [2]

    def test_absorbing_chain(self):
        chain = MarkovChain(["a", "b"], np.eye(2))
        assert markov.simulate_chain(chain, 1, 50, seed=0) == [1] * 51

    def test_visit_frequencies_converge(self):
        states = markov.simulate_chain(no_repeat_chain(), 0, 20000, seed=123)
        freqs = np.bincount(states, minlength=4) / len(states)
        assert np.abs(freqs - 0.25).max() <= 0.03

    def test_column_sum_validated(self):
        with pytest.raises(InputError):
            MarkovChain(["a", "b"], np.array([[0.5, 0.2], [0.4, 0.8]]))


class TestChainSerialization:
    def test_round_trip(self):
        chain = no_repeat_chain()
        again = markov.load_chain(markov.save_chain(chain))
        assert again.state_labels == chain.state_labels
        assert np.allclose(again.transition, chain.transition, atol=1e-15)

    def test_rejects_bad_column_sums(self):
        doc = '{"format":"mcnn-chain-v1","states":["a","b"],"transition":[[0.5,0.5],[0.4,0.5]]}'
        with pytest.raises(FormatError):
            markov.load_chain(doc)

    def test_rejects_unknown_format(self):
        with pytest.raises(FormatError):
            markov.load_chain(b'{"format":"nope","states":[],"transition":[]}')

    def test_accepts_small_drift(self):
        # drift below the 1e-6 file tolerance is renormalized on load
        doc = (
            '{"format":"mcnn-chain-v1","states":["a","b"],'
            '"transition":[[0.5000001,0.5],[0.4999999,0.5]]}'
        )
        chain = markov.load_chain(doc)
        assert np.allclose(chain.transition.sum(axis=0), 1.0, atol=1e-12)


class TestCanonicalKey:
    def test_integers_render_plainly(self):
        assert markov.canonical_key([-1.0, 0.0, 1.0]) == "-1,0,1"

    def test_distinct_fractions_distinct_keys(self):
        keys = {markov.canonical_key([i / 255.0]) for i in range(256)}
        assert len(keys) == 256
