import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dcsfix.comparison import affine, monotone_envelope
from dcsfix.maps import HypothesisReport, SelfMap, compose_power
from dcsfix.solver import (
    Banach,
    Extended,
    Iterated,
    Nonlinear,
    OracleMismatch,
    Quasi,
    SolveOptions,
    brute_force_fixed_points,
    gap_decay_violations,
    gaps_csv,
    mode_from_name,
    picard_orbit,
    power_map_reduction,
    solve_fixed_point,
)
from dcsfix.spaces import AnalyticDistanceSpace, FiniteDistanceSpace

from corpus import RATIOS, contractive_instance, random_a1_space, random_map

HALF = affine(F(1, 2))
REAL = AnalyticDistanceSpace("abs(x-y)", complete=True)
QUASI = AnalyticDistanceSpace("abs(y-x)+(y-x)/2", complete=True)


def quasi_d(x, y):
    # the same distance written out by hand, as an independent oracle
    return abs(y - x) + (y - x) / 2


def line(n):
    return FiniteDistanceSpace(list(range(n)), [[abs(i - j) for j in range(n)] for i in range(n)])


class TestPicard:
    def test_affine_closed_form(self):
        o = picard_orbit(REAL, SelfMap.analytic("x/2+1"), 0)
        assert o.orbit[:4] == [0, 1, 1.5, 1.75]
        assert all(x == pytest.approx(2 * (1 - 2.0**-n), abs=1e-15) for n, x in enumerate(o.orbit))
        assert o.converged and o.stop_reason == "tolerance"
        assert o.limit == pytest.approx(2, abs=1e-8)
        assert len(o.orbit) == o.iterations + 1

    def test_finite_exact(self):
        o = picard_orbit(line(3), SelfMap.finite([1, 1, 2]), 0)
        assert o.orbit == ["0", "1"] and o.limit == "1"
        assert o.stop_reason == "exact_fixed_point" and o.iterations == 1
        assert o.forward_residual == 0 == o.backward_residual

    def test_quasi_gaps(self):
        o = picard_orbit(QUASI, SelfMap.analytic("x/2"), 1)
        for n, (a, c) in enumerate(zip(o.forward_gaps, o.backward_gaps), 1):
            x_prev, x = F(1, 2 ** (n - 1)), F(1, 2**n)
            assert a == float(quasi_d(x_prev, x)) == 2.0 ** -(n + 1)
            assert c == float(quasi_d(x, x_prev)) == 3 * 2.0 ** -(n + 1)
        assert o.converged and abs(o.limit) < 1e-9

    def test_cycle(self):
        o = picard_orbit(line(3), SelfMap.finite([1, 2, 0]), 0)
        assert not o.converged and o.stop_reason == "cycle" and o.limit is None
        assert o.orbit == ["0", "1", "2", "0"]

    def test_max_iter(self):
        o = picard_orbit(REAL, SelfMap.analytic("x/2+1"), 0, SolveOptions(max_iter=5))
        assert not o.converged and o.stop_reason == "max_iter" and o.iterations == 5

    def test_divergence(self):
        o = picard_orbit(REAL, SelfMap.analytic("2*x+1"), 1, SolveOptions(max_iter=2000))
        assert not o.converged and o.stop_reason in ("max_iter", "non_finite")

    def test_iterate_hits_pole(self):
        # 5/2 -> 2 -> 1/0
        o = picard_orbit(REAL, SelfMap.analytic("1/(x-2)"), F(5, 2))
        assert o.stop_reason == "non_finite" and not o.converged
        assert o.orbit == [2.5, 2.0]

    def test_options_validated(self):
        with pytest.raises(ValueError):
            SolveOptions(tol=0)
        with pytest.raises(ValueError):
            SolveOptions(window=0)

    def test_csv(self):
        o = picard_orbit(line(3), SelfMap.finite([1, 2, 2]), 0)
        assert gaps_csv(o) == "n,a_n,c_n\n1,1,1\n2,1,1\n"


class TestOracle:
    def test_two_fixed_points(self):
        assert brute_force_fixed_points(line(3), SelfMap.finite([1, 1, 2])) == {"1", "2"}

    def test_cycle(self):
        assert brute_force_fixed_points(line(3), SelfMap.finite([1, 2, 0])) == frozenset()

    def test_constant(self):
        assert brute_force_fixed_points(line(3), SelfMap.finite([0, 0, 0])) == {"0"}

    def test_finite_only(self):
        with pytest.raises(ValueError):
            brute_force_fixed_points(REAL, SelfMap.analytic("x"))


class TestSolve:
    def test_nonlinear_two_seeds(self):
        for x0 in (0, 100):
            r = solve_fixed_point(REAL, SelfMap.analytic("x/2+1"), Nonlinear(HALF), x0)
            assert r.solved and r.fixed_point == pytest.approx(2, abs=1e-8)
            assert r.uniqueness == "verified-by-contraction-argument"
            assert r.gap_violations == []

    def test_quasi_instance(self):
        r = solve_fixed_point(QUASI, SelfMap.analytic("x/2"), Quasi((HALF,) * 3), 1)
        assert r.solved and abs(r.fixed_point) < 1e-9
        assert r.preconditions["quasi_metric"].holds

    def test_extended_finite(self):
        r = solve_fixed_point(line(3), SelfMap.finite([0, 0, 0]), Extended((HALF,) * 3), 2)
        assert r.solved and r.fixed_point == "0"
        assert r.oracle == {"0"} and r.uniqueness == "verified-by-oracle"
        assert r.preconditions["d_continuity"].holds

    def test_hypothesis_failure_stops(self):
        r = solve_fixed_point(line(3), SelfMap.finite([1, 2, 0]), Banach(F(1, 2)), 0)
        assert r.status == "hypothesis_failed" and r.orbit is None and r.fixed_point is None

    def test_force_marks_uncertified(self):
        r = solve_fixed_point(line(3), SelfMap.finite([1, 1, 2]), Banach(F(1, 2)), 0, SolveOptions(force=True))
        assert r.status == "uncertified" and r.fixed_point == "1"
        assert r.oracle == {"1", "2"} and r.uniqueness == "unverified"

    def test_quasi_rejects_non_quasi_metric(self):
        s = FiniteDistanceSpace([0, 1], [[1, 0], [0, 1]])
        r = solve_fixed_point(s, SelfMap.finite([0, 0]), Quasi((HALF,) * 3), 0)
        assert r.status == "hypothesis_failed" and not r.preconditions["quasi_metric"].holds

    def test_w3_required_on_finite(self):
        s = FiniteDistanceSpace([0, 1, 2], [[1, 0, 0], [1, 1, 1], [1, 1, 1]])
        r = solve_fixed_point(s, SelfMap.finite([0, 0, 0]), Banach(0), 0)
        assert not r.preconditions["w3"].holds and r.status == "hypothesis_failed"

    def test_oracle_mismatch_is_loud(self):
        class Liar:
            name = "liar"

            def check(self, space, f, sampler=None):
                return HypothesisReport("liar", True, 0, None, "exhaustive", 0)

            def governing(self):
                return None

        with pytest.raises(OracleMismatch):
            solve_fixed_point(line(3), SelfMap.finite([1, 1, 2]), Liar(), 0)

    def test_json_shape(self):
        r = solve_fixed_point(line(3), SelfMap.finite([0, 0, 0]), Banach(0), 2)
        out = r.to_json()
        for key in ("fixed_point", "iterations", "stop_reason", "hypothesis", "uniqueness"):
            assert key in out
        assert out["fixed_point"] == "0" and out["iterations"] == 1

    def test_mode_names(self):
        assert isinstance(mode_from_name("quasi", [HALF]), Quasi)
        assert mode_from_name("iterated", [HALF], n=2).n == 2
        with pytest.raises(ValueError):
            mode_from_name("banach")
        with pytest.raises(ValueError):
            mode_from_name("extended", [HALF, HALF])


class TestPower:
    def test_halving_squared(self):
        r = power_map_reduction(REAL, SelfMap.analytic("x/2"), 2, Banach(F(1, 4)), 1)
        assert r.solved and abs(r.fixed_point) < 1e-9 and r.power["lift"] == "ok"

    def test_three_cycle_lift_failure(self):
        r = power_map_reduction(line(3), SelfMap.finite([1, 2, 0]), 3, Banach(F(1, 2)), 0)
        assert r.status == "lift_failure"
        assert r.power["power_fixed_points"] == ["0", "1", "2"]

    def test_sign_flip(self):
        f = SelfMap.analytic("-x/2")
        assert not solve_fixed_point(QUASI, f, Banach(F(9, 10)), 1).solved
        r = power_map_reduction(REAL, f, 2, Banach(F(1, 4)), 1)
        assert r.solved and r.power["lift"] == "ok"
        assert r.power["f_orbit"]["converged"]

    def test_finite_reduction(self):
        f = SelfMap.finite([1, 1, 0])
        assert solve_fixed_point(line(3), f, Banach(F(1, 2)), 2).status == "hypothesis_failed"
        r = power_map_reduction(line(3), f, 2, Banach(F(1, 2)), 2)
        assert r.solved and r.fixed_point == "1" and r.power["subsampled_orbit_matches"]

    @settings(max_examples=60)
    @given(st.integers(0, 2**31), st.integers(1, 4))
    def test_subsampled_orbit_is_power_orbit(self, seed, l):
        rng = random.Random(seed)
        s, f = contractive_instance(rng, rng.randint(1, 8))
        x0 = rng.randrange(s.n)
        r = power_map_reduction(s, f, l, Banach(F(3, 4)), x0)
        assert r.solved
        full = picard_orbit(s, f, x0).orbit
        power = picard_orbit(s, compose_power(f, l), x0).orbit
        padded = full + [full[-1]] * (l * len(power))
        assert padded[::l][: len(power)] == power


def _certified(seed):
    rng = random.Random(seed)
    n = rng.randint(1, 8)
    if rng.random() < 0.7:
        s, f = contractive_instance(rng, n)
    else:
        s, f = random_a1_space(rng, n), random_map(rng, n)
    phi = affine(rng.choice(RATIOS[5:]))
    mode = rng.choice([Banach(F(3, 4)), Nonlinear(phi), Extended((phi, HALF, phi)), Iterated(phi, 0), Iterated(phi, 1)])
    return s, f, mode


@settings(max_examples=120)
@given(st.integers(0, 2**31))
def test_oracle_agreement(seed):
    s, f, mode = _certified(seed)
    for x0 in range(s.n):
        r = solve_fixed_point(s, f, mode, x0)
        if r.solved:
            assert r.oracle == {r.fixed_point}
            assert r.uniqueness == "verified-by-oracle"
        elif r.status == "hypothesis_failed":
            break


@settings(max_examples=120)
@given(st.integers(0, 2**31))
def test_gap_decay(seed):
    s, f, mode = _certified(seed)
    r = solve_fixed_point(s, f, mode, 0)
    if r.solved and mode.governing() is not None:
        assert gap_decay_violations(r.orbit, monotone_envelope(mode.governing())) == []
        assert r.gap_violations == []


@settings(max_examples=40, deadline=None)
@given(st.fractions(min_value=-50, max_value=50, max_denominator=8), st.fractions(min_value=-50, max_value=50, max_denominator=8))
def test_two_starts_agree(x0, y0):
    f = SelfMap.analytic("x/2+1")
    a = solve_fixed_point(REAL, f, Nonlinear(HALF), x0, SolveOptions(alternate=float(y0)))
    assert a.solved and a.uniqueness == "verified-by-contraction-argument"
    assert abs(a.fixed_point - a.second_orbit.limit) <= 1e-8

