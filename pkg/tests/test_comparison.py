from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dcsfix.comparison import (
    PiecewiseFn,
    affine,
    check_boyd_wong,
    check_comparison,
    check_matkowski,
    check_pasicki,
    check_phi_membership,
    evaluate,
    iterate_to_zero,
    max_combine,
    monotone_envelope,
    one_sided_limits,
)

from corpus import piecewise_fns, capped_half


def rising_after_touch():
    # t/2 on [0,1), 2-t on [1,2), t/2 on [2,inf)
    return PiecewiseFn([0, 1, 2], [0, 1, 1], [(F(1, 2), 0), (-1, 2), (F(1, 2), 0)])


def touch_with_jump():
    # t/2 on [0,1), value 0.9 at 1, 2-t on (1,2), t/2 beyond
    return PiecewiseFn([0, 1, 2], [0, F(9, 10), 1], [(F(1, 2), 0), (-1, 2), (F(1, 2), 0)])


class TestConstruction:
    def test_rejects_negative_tail_slope(self):
        with pytest.raises(ValueError, match="tail slope"):
            PiecewiseFn([0, 1], [0, 1], [(1, 0), (-1, 2)])

    def test_rejects_negative_piece(self):
        with pytest.raises(ValueError, match="negative"):
            PiecewiseFn([0, 1, 3], [0, 1, 0], [(1, 0), (-1, 1), (0, 0)])

    def test_rejects_unsorted_breakpoints(self):
        with pytest.raises(ValueError):
            PiecewiseFn([0, 2, 1], [0, 0, 0], [(0, 0)] * 3)

    def test_redundant_breakpoints_dropped(self):
        f = PiecewiseFn([0, 1, 2], [0, F(1, 2), 1], [(F(1, 2), 0)] * 3)
        assert f == affine(F(1, 2))
        assert f.breakpoints == (0,)

    def test_json_round_trip(self):
        for f in (capped_half(), touch_with_jump(), affine("0.3", "0")):
            assert PiecewiseFn.from_json(f.to_json()) == f

    def test_json_accepts_decimal_and_rational_strings(self):
        f = PiecewiseFn.from_json(
            {
                "breakpoints": ["0", "1/2"],
                "pieces": [{"at": "0", "slope": "0.5", "intercept": "0"}],
                "tail": {"at": "0.25", "slope": "0", "intercept": "1/2"},
            }
        )
        assert f == capped_half()


class TestEval:
    def test_capped_half(self):
        assert evaluate(capped_half(), F(1, 4)) == F(1, 8)

    def test_zero(self):
        assert evaluate(capped_half(), 0) == 0

    def test_affine(self):
        assert evaluate(affine(F(1, 2)), 1) == F(1, 2)

    def test_explicit_value_at_breakpoint(self):
        assert evaluate(touch_with_jump(), 1) == F(9, 10)

    def test_float_argument(self):
        assert evaluate(capped_half(), 0.25) == pytest.approx(0.125)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            evaluate(capped_half(), -1)


class TestLimits:
    def test_capped_half_at_half(self):
        assert one_sided_limits(capped_half(), F(1, 2)) == (F(1, 4), F(1, 2))

    def test_continuous(self):
        assert one_sided_limits(affine(F(1, 2)), 1) == (F(1, 2), F(1, 2))

    def test_jump_at_one(self):
        assert one_sided_limits(touch_with_jump(), 1) == (F(1, 2), F(1))

    @given(piecewise_fns(), st.fractions(min_value=F(1, 100), max_value=50))
    def test_agree_with_eval_at_continuity_points(self, f, t):
        if t in f.breakpoints:
            return
        left, right = one_sided_limits(f, t)
        assert left == right == evaluate(f, t)


class TestComparison:
    def test_capped_half(self):
        assert check_comparison(capped_half())

    def test_identity_fails(self):
        v = check_comparison(affine(1))
        assert not v and v.witness > 0

    def test_shifted_tail(self):
        f = PiecewiseFn([0, 1], [0, F(7, 10)], [(F(1, 2), 0), (1, F(-3, 10))])
        assert check_comparison(f)

    def test_nonzero_at_origin(self):
        assert not check_comparison(affine(F(1, 2), F(1, 10)))

    def test_witness_really_fails(self):
        f = PiecewiseFn([0, 1], [0, F(1, 2)], [(F(1, 2), 0), (2, -1)])
        v = check_comparison(f)
        assert not v
        assert evaluate(f, v.witness) >= v.witness


class TestPhi:
    def test_capped_half(self):
        r = check_phi_membership(capped_half())
        assert r.verdict and r.is_comparison and r.plateau_ok

    def test_plateau_clause_fails(self):
        r = check_phi_membership(touch_with_jump())
        assert not r.verdict
        assert r.is_comparison and r.left_limsup_ok and r.right_limsup_ok
        assert r.plateau_witness == 1

    def test_touching_value_fails_as_comparison(self):
        # with f(1) = 2 - 1 = 1 the function is not even a comparison function
        r = check_phi_membership(rising_after_touch())
        assert not r.verdict and not r.is_comparison and r.plateau_witness == 1

    def test_affine(self):
        assert check_phi_membership(affine(F(1, 2))).verdict

    def test_non_comparison_clears_flag(self):
        r = check_phi_membership(affine(1))
        assert not r.verdict and not r.is_comparison

    def test_left_limit_equal_to_r(self):
        # approaches the diagonal from the left at t=1, jumps down there
        f = PiecewiseFn([0, F(1, 2), 1], [0, F(1, 4), F(1, 2)], [(F(1, 2), 0), (F(3, 2), F(-1, 2)), (F(1, 2), 0)])
        r = check_phi_membership(f)
        assert r.is_comparison and not r.left_limsup_ok and r.left_witness == 1


class TestBoydWongPasicki:
    def test_capped_half_boyd_wong(self):
        v = check_boyd_wong(capped_half())
        assert not v and v.witness == F(1, 2)

    def test_affine_boyd_wong(self):
        assert check_boyd_wong(affine(F(1, 2)))

    def test_step(self):
        f = PiecewiseFn([0, 1], [0, F(1, 2)], [(0, 0), (0, F(1, 2))])
        assert check_boyd_wong(f)

    def test_capped_half_pasicki(self):
        assert check_pasicki(capped_half())

    def test_falling_after_touch_is_pasicki(self):
        assert check_pasicki(touch_with_jump())
        assert not check_boyd_wong(touch_with_jump())

    def test_shifted_tail_pasicki(self):
        f = PiecewiseFn([0, 1], [0, F(7, 10)], [(F(1, 2), 0), (1, F(-3, 10))])
        assert check_pasicki(f)

    def test_rising_after_touch_not_pasicki(self):
        f = PiecewiseFn([0, 1], [0, F(1, 2)], [(F(1, 2), 0), (F(1, 2), F(1, 2))])
        v = check_pasicki(f)
        assert not v and v.witness == 1


class TestMatkowski:
    def test_halving(self):
        assert check_matkowski(affine(F(1, 2)), [1, 10], n_max=64, tol=F(1, 10**9))

    def test_capped_half(self):
        assert check_matkowski(capped_half(), [10])

    def test_not_monotone(self):
        r = check_matkowski(rising_after_touch())
        assert not r and not r.monotone

    def test_stuck_orbit_is_undecided(self):
        # monotone, but orbits above t=1 decrease to 1 and stay there
        f = PiecewiseFn([0, 1], [0, F(1, 2)], [(F(1, 2), 0), (F(1, 2), F(1, 2))])
        r = check_matkowski(f, [F(1, 1000)], n_max=200)
        assert r.monotone and r.undecided_iterate and not r

    def test_empty_probes(self):
        with pytest.raises(ValueError):
            check_matkowski(affine(F(1, 2)), [])


class TestEnvelope:
    def test_monotone_input_unchanged(self):
        assert monotone_envelope(capped_half()) == capped_half()

    def test_running_sup(self):
        f = PiecewiseFn([0, 1], [0, F(1, 5)], [(F(1, 2), 0), (0, F(1, 5))])
        expected = PiecewiseFn([0, 1], [0, F(1, 2)], [(F(1, 2), 0), (0, F(1, 2))])
        assert monotone_envelope(f) == expected

    def test_zero(self):
        assert monotone_envelope(affine(0)) == affine(0)

    def test_rising_law_crossing_the_running_sup(self):
        f = rising_after_touch()
        env = monotone_envelope(f)
        # sup over (0,t]: t/2 to 1/2, then the 2-t piece lifts it to 1, flat until t/2 catches up at 2
        assert evaluate(env, F(1, 2)) == F(1, 4)
        assert evaluate(env, 1) == 1
        assert evaluate(env, F(3, 2)) == 1
        assert evaluate(env, 3) == F(3, 2)

    @given(piecewise_fns())
    def test_dominates_and_monotone(self, f):
        env = monotone_envelope(f)
        for t in [F(k, 7) for k in range(1, 80)] + list(f.breakpoints[1:]):
            assert evaluate(env, t) >= evaluate(f, t)
        assert all(l.slope >= 0 for l in env.laws)
        for i in range(1, len(env.breakpoints)):
            left, right = one_sided_limits(env, env.breakpoints[i])
            assert left <= env.values[i] <= right


class TestMaxCombine:
    def test_dominant(self):
        assert max_combine([affine(F(1, 2)), affine(F(1, 3))]) == affine(F(1, 2))

    def test_capped_half_and_quarter(self):
        expected = PiecewiseFn(
            [0, F(1, 2), 2], [0, F(1, 4), F(1, 2)], [(F(1, 2), 0), (0, F(1, 2)), (F(1, 4), 0)]
        )
        assert max_combine([capped_half(), affine(F(1, 4))]) == expected

    def test_idempotent(self):
        assert max_combine([capped_half(), capped_half()]) == capped_half()

    def test_empty(self):
        with pytest.raises(ValueError):
            max_combine([])

    def test_rejects_non_phi(self):
        with pytest.raises(ValueError):
            max_combine([rising_after_touch()])

    @given(piecewise_fns(), piecewise_fns())
    def test_pointwise_max(self, f, g):
        h = max_combine([f, g], require_phi=False)
        for t in [F(k, 5) for k in range(0, 60)] + list(f.breakpoints) + list(g.breakpoints):
            assert evaluate(h, t) == max(evaluate(f, t), evaluate(g, t))


class TestIterate:
    def test_halving_twenty_steps(self):
        tr = iterate_to_zero(affine(F(1, 2)), 1, tol=F(1, 10**6))
        assert tr.converged and tr.steps == 20

    def test_capped_half_from_seven(self):
        tr = iterate_to_zero(capped_half(), 7)
        assert tr.values[:3] == (7, F(1, 2), F(1, 4)) and tr.converged

    def test_one_step_to_zero(self):
        f = PiecewiseFn([0], [0], [(0, 0)])
        tr = iterate_to_zero(f, 5)
        assert tr.converged and tr.steps == 1

    def test_budget_exhausted(self):
        f = PiecewiseFn([0, 1], [0, F(1, 2)], [(F(1, 2), 0), (F(1, 2), F(1, 2))])
        tr = iterate_to_zero(f, 3, n_max=50)
        assert not tr.converged and tr.steps == 50

    @settings(max_examples=50)
    @given(piecewise_fns())
    def test_trace_decreases_for_comparison_functions(self, f):
        if not check_comparison(f):
            return
        tr = iterate_to_zero(f, 3, n_max=200)
        # upward rounding near a limit point may stall the orbit
        assert all(b <= a for a, b in zip(tr.values, tr.values[1:]))
