import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jointwg import _kernels
from jointwg.censoring import (
    CensoringPlan,
    InconsistentSampleWarning,
    InfeasibleWithdrawal,
    JointSample,
    PlanError,
    censor_complete,
    complete_plan,
    format_scheme,
    generate_joint_sample,
    is_joint_type2,
    parse_scheme,
    validate_plan,
)
from jointwg.dist import WGParams

TWO_LINES = [WGParams(6, 3, 4), WGParams(2, 5, 1.5)]


@st.composite
def pooled_plans(draw):
    k = draw(st.integers(1, 3))
    n = [draw(st.integers(1, 8)) for _ in range(k)]
    N = sum(n)
    r = draw(st.integers(1, N))
    R = []
    left = N - r
    for _ in range(r - 1):
        v = draw(st.integers(0, left))
        R.append(v)
        left -= v
    R.append(left)
    return CensoringPlan.pooled(n, r, R)


class TestPlan:
    def test_paper_style_scheme(self):
        plan = parse_scheme("n=24,23; r=10; s1=2,0,0,0,2,0,1,2,0,9; s2=0,2,0,2,0,1,0,0,0,16")
        assert plan.k == 2 and plan.N == 47 and plan.r == 10
        assert plan.R == (2, 2, 0, 2, 2, 1, 1, 2, 0, 25)
        assert validate_plan(plan) == []

    def test_pooled_r_vector(self):
        plan = parse_scheme("n=30,30; r=20; R=2,2,0,2,2,1,1,2,0,0,2,0,0,0,2,0,1,2,0,21")
        assert plan.allocation == "pooled"
        assert sum(plan.R) == 40

    def test_repeat_tokens(self):
        plan = parse_scheme("n=20,10; r=10; R=0*9,20")
        assert plan.R == (0,) * 9 + (20,)
        assert is_joint_type2(plan)

    def test_positional_n_and_r(self):
        assert parse_scheme("5,5; 10; R=0*10") == complete_plan((5, 5)).pooled((5, 5), 10, [0] * 10)

    def test_s_key_variants(self):
        a = parse_scheme("n=2,2; r=2; s1=0,1; s2=0,1")
        b = parse_scheme("n=2,2; r=2; s(1)=0,1; s(2)=0,1")
        assert a == b

    @pytest.mark.parametrize(
        "text, fragment",
        [
            ("n=5,5; r=3; s1=0,0; s2=0,0,7", "arity"),
            ("n=5,5; r=3; R=0,0", "arity"),
            ("n=5,5; r=3; s1=0,0,7", "s1..s2"),
            ("n=5,5; r=3; x=1", "unknown"),
            ("n=5,5; R=1", "both n and r"),
            ("n=5,5; r=2; R=a,1", "not an integer"),
        ],
    )
    def test_parse_errors(self, text, fragment):
        with pytest.raises(ValueError, match=fragment):
            parse_scheme(text)

    def test_violations_are_named(self):
        plan = CensoringPlan.pooled((3, 3), 4, [1, 1, 1, 0])
        msgs = validate_plan(plan)
        assert any("terminal-count" in m for m in msgs)
        assert any("prefix" in m for m in msgs)
        with pytest.raises(PlanError):
            parse_scheme("n=3,3; r=4; R=1,1,1,0")

    def test_negative_and_line_feasibility(self):
        plan = CensoringPlan(n=(2, 2), r=2, s=[[-1, 0], [1, 0]])
        msgs = validate_plan(plan)
        assert any("non-negativity" in m for m in msgs)
        plan = CensoringPlan(n=(1, 5), r=2, s=[[2, 0], [0, 2]])
        assert any("line feasibility" in m for m in validate_plan(plan))

    def test_r_range(self):
        assert any("failure count" in m for m in validate_plan(CensoringPlan.pooled((2,), 3, [0, 0, -1])))

    def test_complete_plan(self):
        plan = complete_plan((3, 4))
        assert plan.r == 7 and plan.R == (0,) * 7
        assert validate_plan(plan) == [] and is_joint_type2(plan)

    def test_s_and_R_must_agree(self):
        with pytest.raises(PlanError):
            CensoringPlan(n=(3, 3), r=2, s=[[1, 0], [0, 3]], R=(1, 2))

    @settings(max_examples=100, deadline=None)
    @given(pooled_plans())
    def test_format_round_trip(self, plan):
        assert parse_scheme(format_scheme(plan)) == plan


class TestGeneration:
    def test_fixed_plan_invariants(self, rng):
        plan = CensoringPlan(n=(20, 15), r=10, s=np.vstack([[[1, 0], [0, 1]], np.zeros((8, 2), int)]))
        # the terminal step of a fixed plan must absorb every survivor, so a
        # plan that leaves survivors is rejected by validation, not by the walk
        assert validate_plan(plan)
        pooled = CensoringPlan.pooled((20, 15), 10, [1, 1] + [0] * 7 + [23])
        s = generate_joint_sample(TWO_LINES, pooled, rng)
        assert s.r == 10
        assert np.all(np.diff(s.times) >= 0)
        np.testing.assert_array_equal(s.withdrawn.sum(axis=1), pooled.R_array)
        used = s.M + s.withdrawn.sum(axis=0)
        np.testing.assert_array_equal(used, [20, 15])

    def test_fixed_allocation_followed_exactly(self, rng):
        n = (6, 6)
        s = np.array([[0, 1], [0, 0], [0, 0], [0, 0]])
        # the terminal step is fixed too, so the lifetimes make line 1 fail
        # four times while line 2 only loses units to withdrawal
        lifetimes = [np.array([1.0, 2.0, 3.0, 4.0, 11, 12]), np.array([20.0, 21, 22, 23, 24, 25])]
        s[-1] = [2, 5]
        plan = CensoringPlan(n=n, r=4, s=s)
        assert validate_plan(plan) == []
        out = censor_complete(lifetimes, plan, rng)
        np.testing.assert_array_equal(out.withdrawn, s)
        np.testing.assert_array_equal(out.times, [1.0, 2.0, 3.0, 4.0])
        np.testing.assert_array_equal(out.line_of, [1, 1, 1, 1])

    def test_infeasible_withdrawal_raises(self, rng):
        plan = CensoringPlan(n=(2, 5), r=2, s=[[2, 0], [0, 3]])
        assert validate_plan(plan) == []
        # line 1 fails first, leaving one unit, but two must be withdrawn
        lifetimes = [np.array([1.0, 5.0]), np.array([2.0, 3.0, 4.0, 6.0, 7.0])]
        with pytest.raises(InfeasibleWithdrawal) as info:
            censor_complete(lifetimes, plan, rng)
        assert info.value.step == 1 and info.value.line == 1

    def test_complete_plan_returns_sorted_data(self, rng):
        lifetimes = [np.array([3.0, 1.0]), np.array([2.0])]
        out = censor_complete(lifetimes, complete_plan((2, 1)), rng)
        np.testing.assert_array_equal(out.times, [1.0, 2.0, 3.0])
        np.testing.assert_array_equal(out.line_of, [1, 2, 1])

    def test_ties_broken_by_line_index(self, rng):
        out = censor_complete([np.array([1.0]), np.array([1.0])], complete_plan((1, 1)), rng)
        np.testing.assert_array_equal(out.line_of, [1, 2])

    def test_seed_determinism(self):
        plan = CensoringPlan.pooled((20, 10), 10, [2] * 5 + [0] * 4 + [10])
        a = generate_joint_sample(TWO_LINES, plan, np.random.default_rng(99))
        b = generate_joint_sample(TWO_LINES, plan, np.random.default_rng(99))
        assert a == b

    def test_parameter_count_checked(self, rng):
        with pytest.raises(ValueError):
            generate_joint_sample(TWO_LINES[:1], complete_plan((2, 2)), rng)

    @settings(max_examples=60, deadline=None)
    @given(pooled_plans(), st.integers(0, 2**32 - 1))
    def test_pooled_walk_invariants(self, plan, seed):
        params = [WGParams(1.0 + h, 2.0, 1.0) for h in range(plan.k)]
        s = generate_joint_sample(params, plan, np.random.default_rng(seed))
        np.testing.assert_array_equal(s.withdrawn.sum(axis=1), plan.R_array)
        np.testing.assert_array_equal(s.M + s.withdrawn.sum(axis=0), plan.n)
        assert s.M.sum() == plan.r


class TestKernelPaths:
    @settings(max_examples=40, deadline=None)
    @given(pooled_plans(), st.integers(0, 2**32 - 1))
    def test_walk_numpy_matches_compiled(self, plan, seed):
        rng = np.random.default_rng(seed)
        times = rng.random(plan.N)
        lines = np.concatenate([np.full(v, h) for h, v in enumerate(plan.n)]).astype(np.int64)
        fail_order = np.argsort(times, kind="stable").astype(np.int64)
        key_order = np.argsort(rng.random(plan.N), kind="stable").astype(np.int64)
        s = np.zeros((plan.r, plan.k), dtype=np.int64)
        args = (times, lines, fail_order, key_order, s, plan.R_array, plan.k, True)
        a = _kernels._walk_jit(*args)
        b = _kernels._walk_numpy(*args)
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x, y)


class TestJointSample:
    def test_validation(self):
        plan = complete_plan((1, 1))
        with pytest.raises(ValueError):
            JointSample(times=[2.0, 1.0], line_of=[1, 2], plan=plan)
        with pytest.raises(ValueError):
            JointSample(times=[1.0, 2.0], line_of=[1, 3], plan=plan)
        with pytest.raises(ValueError):
            JointSample(times=[1.0], line_of=[1], plan=plan)

    def test_indicators_and_weights(self):
        plan = CensoringPlan(n=(2, 2), r=2, s=[[0, 1], [1, 0]])
        s = JointSample(times=[1.0, 2.0], line_of=[1, 2], plan=plan)
        np.testing.assert_array_equal(s.delta, [[1, 0], [0, 1]])
        np.testing.assert_array_equal(s.weights, [[1, 1], [1, 1]])
        np.testing.assert_array_equal(s.M, [1, 1])
        np.testing.assert_array_equal(s.line_times(2), [2.0])

    def test_published_samples_warn(self):
        from jointwg import datasets

        with pytest.warns(InconsistentSampleWarning):
            datasets.simulated_example()
        with pytest.warns(InconsistentSampleWarning):
            datasets.jute_example()

    def test_consistent_sample_is_quiet(self):
        plan = CensoringPlan(n=(2, 2), r=2, s=[[0, 1], [1, 0]])
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            JointSample(times=[1.0, 2.0], line_of=[1, 2], plan=plan)

    def test_immutable(self, jute_sample):
        with pytest.raises(ValueError):
            jute_sample.times[0] = 1.0
