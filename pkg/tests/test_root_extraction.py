"""Tests for iterative root extraction."""

import math

import numpy as np
import pytest

from homeoforge import map_core as mc
from homeoforge import root_extraction as rx


def sin_bump_map(n_knots=1025, amp=0.1):
    return mc.from_function(
        lambda x: x + amp * np.sin(np.pi * x) ** 2,
        lambda x: 1.0 + amp * np.pi * np.sin(2.0 * np.pi * x),
        n_knots=n_knots,
    )


class TestQuasiMonotone:
    def test_monotone(self):
        ok, _ = rx.is_l_quasi_monotone([1, 2, 3], 1)
        assert ok

    def test_single_peak(self):
        ok, witness = rx.is_l_quasi_monotone([1, 2, 3, 2, 1], 1)
        assert ok
        assert len(witness) == 1

    def test_zigzag_minimal_three(self):
        s, _ = rx.minimal_quasi_monotone_splits([1, 3, 2, 4, 1])
        assert s == 3
        assert rx.brute_force_minimal_splits([1, 3, 2, 4, 1]) == 3

    def test_length_two_has_no_split(self):
        s, _ = rx.minimal_quasi_monotone_splits([1, 2])
        assert s is None
        assert rx.brute_force_minimal_splits([1, 2]) is None

    def test_plateaus(self):
        s, _ = rx.minimal_quasi_monotone_splits([1, 2, 2, 1])
        assert s == 1
        assert rx.brute_force_minimal_splits([1, 2, 2, 1]) == 1

    def test_greedy_matches_brute_force_sampled(self):
        rng = np.random.default_rng(11)
        for _ in range(300):
            n = int(rng.integers(2, 9))
            seq = rng.integers(1, 5, size=n).tolist()
            s_greedy, _ = rx.minimal_quasi_monotone_splits(seq)
            s_brute = rx.brute_force_minimal_splits(seq)
            assert s_greedy == s_brute, seq


class TestSmoothCandidate:
    def test_cubic_passthrough(self):
        f = sin_bump_map()
        cand = rx.smooth_candidate(f, 0.5)
        assert cand.f1 is f
        assert cand.c1_error == 0.0
        # f'' = 0.2 pi^2 cos(2 pi x) changes sign twice
        assert cand.l <= 2

    def test_identity_rejected(self):
        with pytest.raises(rx.RootHypothesisError):
            rx.smooth_candidate(mc.identity(), 0.5)

    def test_wrong_endpoint_slope_rejected(self):
        f = mc.from_function(lambda x: 0.5 * x + 0.5 * x**2, lambda x: 0.5 + x)
        with pytest.raises(rx.RootHypothesisError):
            rx.smooth_candidate(f, 0.5)


class TestSelectOrbit:
    def test_orbit_is_f_orbit(self):
        f = sin_bump_map()
        orbit = rx.select_orbit(f, 0.5)
        assert np.max(np.abs(mc.eval_map(f, orbit[:-1]) - orbit[1:])) < 1e-10
        assert max(orbit[0], 1 - orbit[-1]) < 0.5 / 4

    def test_derivative_window_conditions(self):
        f = sin_bump_map()
        r = 0.5
        orbit = rx.select_orbit(f, r)
        xs = np.linspace(0, orbit[1], 2000)
        assert np.max(np.abs(mc.deriv(f, xs) - 1)) < r / 4
        xs = np.linspace(orbit[-2], 1, 2000)
        assert np.max(np.abs(mc.deriv(f, xs) - 1)) < r / 4

    def test_huge_r_gives_tiny_orbit(self):
        f = sin_bump_map()
        orbit = rx.select_orbit(f, 4.0)
        assert len(orbit) - 1 in (1, 2)

    def test_bad_endpoint_slope_errors(self):
        g = mc.from_function(lambda x: 1.5 * x - 0.5 * x**2, lambda x: 1.5 - x)
        with pytest.raises(rx.RootHypothesisError):
            rx.select_orbit(g, 0.1)


class TestMesh:
    def test_pushforward_consistency(self):
        f = sin_bump_map()
        orbit = rx.select_orbit(f, 0.5)
        mesh = rx.build_mesh(f, orbit, 16)
        assert mesh.consistency_error(f) < 1e-10
        assert np.all(np.diff(mesh.z) > 0)
        # z_{iN} = x_i
        assert np.max(np.abs(mesh.z[:: mesh.N] - mesh.x)) < 1e-12


class TestBuildRoot:
    def test_identity_rejected(self):
        with pytest.raises(rx.RootHypothesisError):
            rx.build_root(mc.identity(), 0.5)

    def test_sin_bump_r_half(self):
        f = sin_bump_map()
        res = rx.build_root(f, 0.5, rng=np.random.default_rng(0))
        assert res.passed
        assert res.achieved_g_norm < 0.5
        assert res.achieved_power_c1 < 0.5
        assert res.achieved_power_c0 < 0.25
        assert res.verification.interp_exactness < 1e-10

    def test_smaller_r_needs_larger_N(self):
        f = sin_bump_map()
        res1 = rx.build_root(f, 0.5)
        res2 = rx.build_root(f, 0.2)
        assert res2.passed
        assert res2.N >= res1.N

    def test_epsilon_sign_rule(self):
        f = sin_bump_map()
        res = rx.build_root(f, 0.5)
        z = res.mesh.z
        dd = np.diff(z)[1:] / np.diff(z)[:-1]
        gaps = np.diff(dd)
        eps = res.epsilons
        for i in range(len(gaps)):
            if gaps[i] > 0:
                assert eps[i] <= 0
            elif gaps[i] < 0:
                assert eps[i] >= 0
            else:
                assert eps[i] == 0

    def test_interpolation_exactness(self):
        f = sin_bump_map()
        res = rx.build_root(f, 0.5)
        z = res.mesh.z
        assert np.max(np.abs(mc.eval_map(res.g, z[:-1]) - z[1:])) < 1e-10

    def test_decreasing_map_flipped(self):
        f = mc.from_function(
            lambda x: x - 0.1 * np.sin(np.pi * x) ** 2,
            lambda x: 1.0 - 0.1 * np.pi * np.sin(2.0 * np.pi * x),
        )
        res = rx.build_root(f, 0.5)
        assert res.passed and res.flipped
        xs = np.linspace(0, 1, 2000)
        y, _ = rx._power_pointwise(res.g, res.N, xs)
        assert np.max(np.abs(y - mc.eval_map(f, xs))) < 0.25


class TestVerifyRoot:
    def test_identity_root_of_identity_shape(self):
        # degenerate sanity: g = f = identity-like map passes with zeros
        ver = rx.verify_root(mc.identity(), mc.identity(), 1, 0.5)
        assert ver.g_norm == 0.0
        assert ver.power_c0_f == 0.0
        assert ver.power_c1_f == 0.0
        assert ver.passes(0.5)

    def test_corrupted_derivative_detected(self):
        f = sin_bump_map()
        res = rx.build_root(f, 0.5)
        g = res.g
        bad_derivs = g.derivs.copy()
        i = len(bad_derivs) // 2
        bad_derivs[i] *= 2.0
        try:
            bad = mc.cubic_map(g.knots, g.values, bad_derivs)
        except mc.HomeoError:
            pytest.skip("corruption made the map non-monotone outright")
        ver = rx.verify_root(f, bad, res.N, 0.5)
        assert ver.power_c1_f > res.verification.power_c1_f
        assert abs(ver.attained_c1_at - g.knots[i]) < 0.2

    def test_windows_quasi_monotone(self):
        f = sin_bump_map()
        res = rx.build_root(f, 0.5, rng=np.random.default_rng(1))
        assert res.verification.windows_quasi_monotone in (True, None)
        if res.verification.window_max_splits is not None:
            assert res.verification.window_max_splits <= max(res.l, 1)
