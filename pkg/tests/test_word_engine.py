"""Tests for free-group word reduction, enumeration, and evaluation."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from homeoforge import map_core as mc
from homeoforge import word_engine as we


class TestReduce:
    def test_cancellation(self):
        assert we.reduce_runs([(0, 1), (0, -1)]).is_empty()

    def test_merge(self):
        assert we.reduce_runs([(0, 2), (0, 3)]).runs == ((0, 5),)

    def test_stack_cancellation_oracle(self):
        # a b b^-1 a -> a^2, matching naive letter-stack cancellation
        w = we.reduce_runs([(0, 1), (1, 1), (1, -1), (0, 1)])
        assert w.runs == ((0, 2),)

    def test_idempotent_random(self):
        rng = np.random.default_rng(0)
        for _ in range(10_000):
            runs = [
                (int(rng.integers(0, 3)), int(rng.integers(-3, 4)))
                for _ in range(rng.integers(0, 8))
            ]
            w = we.reduce_runs(runs)
            assert we.reduce_runs(w.runs) == w

    @given(
        st.lists(
            st.tuples(st.integers(0, 2), st.integers(-4, 4)), max_size=12
        )
    )
    @settings(max_examples=200, deadline=None)
    def test_reduce_matches_letter_stack(self, runs):
        # oracle: push single letters onto a stack with cancellation
        stack: list[int] = []  # signed letters: +-(i+1)
        for a, e in runs:
            s = 1 if e > 0 else -1
            for _ in range(abs(e)):
                tok = s * (a + 1)
                if stack and stack[-1] == -tok:
                    stack.pop()
                else:
                    stack.append(tok)
        w = we.reduce_runs(runs)
        flat = []
        for a, e in w.runs:
            s = 1 if e > 0 else -1
            flat.extend([s * (a + 1)] * abs(e))
        assert flat == stack


class TestAlgebra:
    def test_commutator_self(self):
        a = we.letter(0)
        assert we.commutator(a, a).is_empty()

    def test_conjugate(self):
        w = we.conjugate(we.letter(0), we.letter(1))
        assert w.runs == ((1, 1), (0, 1), (1, -1))

    def test_commutator_reduced_length(self):
        # [h^p f, u] with p=2: letters h=0, f=1, u=2
        w1 = we.concat(we.letter(0, 2), we.letter(1))
        w2 = we.letter(2)
        c = we.commutator(w1, w2)
        assert c.length == 8

    def test_power(self):
        a = we.letter(0)
        assert we.word_power(a, -3).runs == ((0, -3),)
        assert we.word_power(we.concat(a, we.letter(1)), 2).length == 4

    def test_substitute(self):
        w = we.parse_word("a1 b-1")
        out = we.substitute(w, {1: we.parse_word("c1 a1 c-1")})
        assert we.format_word(out) == "a1 c1 a-1 c-1"


class TestEnumerate:
    def test_n1_l2(self):
        words = list(we.enumerate_reduced(1, 2))
        texts = {we.format_word(w) for w in words}
        assert texts == {"a1", "a-1", "a2", "a-2"}

    def test_n2_l1(self):
        assert len(list(we.enumerate_reduced(2, 1))) == 4

    def test_n2_l3_count(self):
        words = list(we.enumerate_reduced(2, 3))
        assert len(words) == 52 == we.count_reduced(2, 3)
        assert len(set(words)) == 52  # exactly once each

    def test_counts_match_formula(self):
        for n in (1, 2, 3):
            for L in range(1, 7):
                got = sum(1 for _ in we.enumerate_reduced(n, L, budget=10**9))
                assert got == we.count_reduced(n, L)

    def test_budget_error_mentions_formula(self):
        with pytest.raises(we.EnumerationBudgetError, match="2n"):
            list(we.enumerate_reduced(3, 20, budget=100))

    def test_all_reduced(self):
        for w in we.enumerate_reduced(2, 4):
            assert we.reduce_runs(w.runs) == w


def disjoint_bumps():
    """Two pl maps with disjoint supports: they commute exactly."""
    f = mc.pl_map([0, 0.1, 0.2, 0.3, 1], [0, 0.1, 0.25, 0.3, 1])
    g = mc.pl_map([0, 0.6, 0.7, 0.8, 1], [0, 0.6, 0.75, 0.8, 1])
    return f, g


class TestEvaluate:
    def test_empty_word(self):
        out = we.evaluate(we.empty_word(), (mc.identity(),))
        assert mc.is_identity(out)

    def test_disjoint_commutator(self):
        f, g = disjoint_bumps()
        w = we.commutator(we.letter(0), we.letter(1))
        out = we.evaluate(w, (f, g))
        assert mc.c0_dist(out, mc.identity()).c0 < 1e-10

    def test_conjugated_power_vs_nested_compose(self):
        # G^-(N+1) F^M G^(N+1) evaluated as a word equals the explicit chain
        f, g = disjoint_bumps()
        N, M = 2, 3
        w = we.concat(we.letter(1, -(N + 1)), we.letter(0, M), we.letter(1, N + 1))
        out = we.evaluate(w, (f, g))
        chain = mc.compose_chain(
            [mc.invert(g)] * (N + 1) + [f] * M + [g] * (N + 1)
        )
        assert mc.c0_dist(out, chain).c0 < 1e-8

    def test_index_out_of_range(self):
        with pytest.raises(IndexError):
            we.evaluate(we.letter(5), (mc.identity(),))

    def test_homomorphism_property(self):
        rng = np.random.default_rng(7)
        f, g = disjoint_bumps()
        for _ in range(10):
            runs1 = [(int(rng.integers(0, 2)), int(rng.integers(-2, 3))) for _ in range(3)]
            runs2 = [(int(rng.integers(0, 2)), int(rng.integers(-2, 3))) for _ in range(3)]
            w1, w2 = we.reduce_runs(runs1), we.reduce_runs(runs2)
            lhs = we.evaluate(we.concat(w1, w2), (f, g))
            rhs = mc.compose(we.evaluate(w1, (f, g)), we.evaluate(w2, (f, g)))
            assert mc.c0_dist(lhs, rhs).c0 < 1e-8

    def test_evaluate_matches_pointwise_apply(self):
        f, g = disjoint_bumps()
        w = we.parse_word("a2 b-1 a-1 b3")
        m = we.evaluate(w, (f, g))
        xs = np.linspace(0, 1, 301)
        assert np.max(np.abs(mc.eval_map(m, xs) - we.apply_word(w, (f, g), xs))) < 1e-9

    def test_apply_word_deriv_chain_rule(self):
        f = mc.from_function(
            lambda x: x + 0.1 * np.sin(np.pi * x) ** 2,
            lambda x: 1 + 0.1 * np.pi * np.sin(2 * np.pi * x),
        )
        w = we.parse_word("a3")
        xs = np.linspace(0.1, 0.9, 50)
        y, dy = we.apply_word_with_deriv(w, (f,), xs)
        # finite-difference oracle for (f^3)'
        h = 1e-6
        yl = we.apply_word(w, (f,), xs - h)
        yr = we.apply_word(w, (f,), xs + h)
        fd = (yr - yl) / (2 * h)
        assert np.max(np.abs(dy - fd)) < 1e-4


class TestTextFormat:
    def test_roundtrip(self):
        w = we.parse_word("a2 B1 c-3")
        assert w.runs == ((0, 2), (1, -1), (2, -3))
        assert we.parse_word(we.format_word(w)) == w

    def test_empty(self):
        assert we.format_word(we.empty_word()) == "e"
        assert we.parse_word("e").is_empty()
