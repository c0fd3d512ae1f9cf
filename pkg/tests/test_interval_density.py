"""Tests for the dyadic engine and generic dense pairs."""

from fractions import Fraction

import numpy as np
import pytest

from homeoforge import interval_density as idm
from homeoforge import map_core as mc
from homeoforge import word_engine as we


class TestGenerators:
    def test_first_generator_pins(self):
        x0, x1 = idm.thompson_generators()
        assert x0(Fraction(1, 2)) == Fraction(1, 4)
        assert x1(Fraction(1, 4)) == Fraction(1, 4)  # identity below 1/2
        assert x1(Fraction(3, 8)) == Fraction(3, 8)

    def test_slopes_dyadic(self):
        x0, x1 = idm.thompson_generators()
        assert set(x0.slopes()) == {Fraction(1, 2), Fraction(1), Fraction(2)}
        assert set(x1.slopes()) <= {Fraction(1, 2), Fraction(1), Fraction(2)}

    def test_closure_under_compose_invert(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            a = idm.random_f_element(rng, 3)
            b = idm.random_f_element(rng, 3)
            c = idm.compose_dyadic(a, idm.invert_dyadic(b))
            # constructor re-validates dyadicity and power-of-two slopes
            assert isinstance(c, idm.DyadicPLMap)

    def test_conjugation_relation(self):
        # x2 = x0^-1 x1 x0 (functional), exact
        x0, x1 = idm.thompson_generators()
        w = we.parse_word("a-1 b1 a1")
        x2 = idm.evaluate_dyadic_word(w, (x0, x1))
        assert x2(Fraction(3, 4)) == Fraction(3, 4)
        assert x2(Fraction(7, 8)) == Fraction(13, 16)


class TestDyadicApproximate:
    def test_identity(self):
        out = idm.dyadic_approximate(mc.identity(), 0.25)
        assert out.is_identity()

    def test_square_map(self):
        target = mc.pl_map(np.linspace(0, 1, 257), np.linspace(0, 1, 257) ** 2 * 0 + np.linspace(0, 1, 257))
        # x^2 as a pl sample
        xs = np.linspace(0, 1, 257)
        target = mc.pl_map(xs, np.maximum.accumulate(np.concatenate(([0], xs[1:-1] ** 2, [1]))))
        out = idm.dyadic_approximate(target, 0.25)
        m = out.to_homeo()
        grid = np.linspace(0, 1, 2048)
        assert np.max(np.abs(mc.eval_map(m, grid) - mc.eval_map(target, grid))) < 0.25

    def test_fixed_point_of_procedure(self):
        x0, _ = idm.thompson_generators()
        out = idm.dyadic_approximate(x0.to_homeo(), 1e-3)
        assert out.knots == x0.knots and out.values == x0.values

    def test_random_targets_meet_bound(self):
        rng = np.random.default_rng(17)
        for _ in range(10):
            k = np.concatenate(([0], np.sort(rng.uniform(0.1, 0.9, 4)), [1]))
            v = np.concatenate(([0], np.sort(rng.uniform(0.1, 0.9, 4)), [1]))
            target = mc.pl_map(np.unique(k), np.unique(v)[: len(np.unique(k))])
            for eps in (0.25, 0.125):
                out = idm.dyadic_approximate(target, eps)
                grid = np.linspace(0, 1, 2048)
                err = np.max(np.abs(mc.eval_map(out.to_homeo(), grid) - mc.eval_map(target, grid)))
                assert err < eps


class TestWords:
    def test_identity_empty(self):
        assert idm.f_element_to_word(idm.dyadic_identity()).is_empty()

    def test_x0_single_letter(self):
        x0, _ = idm.thompson_generators()
        w = idm.f_element_to_word(x0)
        assert we.format_word(w) == "a1"

    def test_x1_single_letter(self):
        _, x1 = idm.thompson_generators()
        assert we.format_word(idm.f_element_to_word(x1)) == "b1"

    def test_product_roundtrip(self):
        x0, x1 = idm.thompson_generators()
        m = idm.compose_dyadic(x0, x1)
        w = idm.f_element_to_word(m)  # verify=True checks exactness
        assert w.length >= 2

    def test_random_roundtrips(self):
        # verify=True re-applies the word at the generators pointwise
        rng = np.random.default_rng(23)
        for _ in range(40):
            m = idm.random_f_element(rng, int(rng.integers(1, 6)))
            idm.f_element_to_word(m, verify=True)

    def test_short_roundtrips_exact_rational(self):
        rng = np.random.default_rng(31)
        for _ in range(8):
            m = idm.random_f_element(rng, 2)
            w = idm.f_element_to_word(m, verify=False)
            back = idm.evaluate_dyadic_word(w, idm.thompson_generators())
            for q in m.knots:
                assert back(q) == m(q)

    def test_roundtrip_float_tolerance(self):
        rng = np.random.default_rng(29)
        m = idm.random_f_element(rng, 5)
        w = idm.f_element_to_word(m)
        x0, x1 = idm.thompson_generators()
        ev = we.evaluate(w, (x0.to_homeo(), x1.to_homeo()))
        assert mc.c0_dist(ev, m.to_homeo()).c0 < 1e-10

    def test_non_dyadic_rejected(self):
        with pytest.raises(idm.DyadicError):
            idm.DyadicPLMap(
                (Fraction(0), Fraction(1, 3), Fraction(1)),
                (Fraction(0), Fraction(1, 2), Fraction(1)),
            )


class TestGenericPair:
    def test_identity_pair_conditions(self):
        pair = idm.construct_generic_pair(mc.identity(), mc.identity(), 0.05)
        checks = idm.generic_pair_conditions(pair)
        failed = {k: v for k, v in checks.items() if not v[0]}
        assert not failed, failed

    def test_delta_small(self):
        pair = idm.construct_generic_pair(mc.identity(), mc.identity(), 1e-3)
        checks = idm.generic_pair_conditions(pair)
        failed = {k: v for k, v in checks.items() if not v[0]}
        assert not failed, failed
        assert pair.alpha <= 1e-3

    def test_nontrivial_inputs(self):
        f = mc.pl_map([0, 0.4, 1], [0, 0.55, 1])
        g = mc.pl_map([0, 0.6, 1], [0, 0.45, 1])
        pair = idm.construct_generic_pair(f, g, 0.1)
        checks = idm.generic_pair_conditions(pair)
        failed = {k: v for k, v in checks.items() if not v[0]}
        assert not failed, failed

    def test_rho_within_delta_of_originals(self):
        delta = 0.05
        pair = idm.construct_generic_pair(mc.identity(), mc.identity(), delta)
        xs = np.linspace(0, 1, 4096)
        rho_f = np.max(np.abs(mc.eval_map(pair.f_tilde, xs) - xs))
        rho_g = np.max(np.abs(mc.eval_map(pair.g_tilde, xs) - xs))
        assert rho_f < delta and rho_g < delta


class TestApproximate:
    @pytest.fixture(scope="class")
    def pair(self):
        return idm.construct_generic_pair(mc.identity(), mc.identity(), 0.05)

    def test_identity_target(self, pair):
        res = idm.approximate_by_pair(pair, mc.identity(), 0.25)
        assert res.passed and res.word.is_empty()

    def test_f_tilde_target(self, pair):
        res = idm.approximate_by_pair(pair, pair.f_tilde, 0.05)
        assert res.passed and res.word.length <= 1

    def test_square_like_target(self, pair):
        xs = np.linspace(0, 1, 513)
        target = mc.pl_map(xs, np.concatenate(([0], xs[1:-1] ** 2, [1])))
        res = idm.approximate_by_pair(pair, target, 0.1)
        assert res.passed, res
        assert res.rho < 0.1

    def test_witness_table(self, pair):
        xs = np.linspace(0, 1, 257)
        targets = [
            mc.pl_map(xs, np.concatenate(([0], np.sqrt(xs[1:-1]), [1]))),
            mc.identity(),
        ]
        rep = idm.density_gdelta_witness(pair, targets, [0.5, 0.25], budget=200_000)
        assert rep["all_passed"], rep

    def test_vacuous(self, pair):
        rep = idm.density_gdelta_witness(pair, [], [0.5])
        assert rep["vacuous"] and rep["all_passed"]
