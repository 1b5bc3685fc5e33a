import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from palloc.errors import InvalidParameter
from palloc.policy import (AllocationVector, OrderComparison, error_allocation, gsc_compare, gsc_le, hadamard,
                           jsq_allocation, pw_allocation, satisfies_maximality_condition, tail_sums,
                           tie_aware_routing_distribution, uniform_allocation)
from palloc.state import OrderedState

LE, GE, EQ, INC = (OrderComparison.LESS_OR_EQUAL, OrderComparison.GREATER_OR_EQUAL,
                   OrderComparison.EQUAL, OrderComparison.INCOMPARABLE)


def test_uniform_allocation():
    assert uniform_allocation(4).probs == (0.25, 0.25, 0.25, 0.25)
    assert uniform_allocation(2).probs == (0.5, 0.5)
    assert sum(uniform_allocation(17).probs) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(InvalidParameter):
        uniform_allocation(1)


def test_allocation_vector_invariants():
    with pytest.raises(InvalidParameter):
        AllocationVector((0.5, 0.6))
    with pytest.raises(InvalidParameter):
        AllocationVector((1.5, -0.5))
    assert AllocationVector((0.5, 0.5)).s == 2


def test_pw_allocation_examples():
    assert pw_allocation(4, 4).probs == pytest.approx((1, 0, 0, 0), abs=1e-15)
    assert pw_allocation(4, 1).probs == pytest.approx((0.25,) * 4, abs=1e-15)
    assert pw_allocation(4, 2).probs == pytest.approx((3 / 6, 2 / 6, 1 / 6, 0), abs=1e-15)
    with pytest.raises(InvalidParameter):
        pw_allocation(4, 5)
    with pytest.raises(InvalidParameter):
        pw_allocation(4, 0)
    with pytest.raises(InvalidParameter):
        pw_allocation(61, 2)


@pytest.mark.parametrize("s", range(1, 21))
def test_pw_allocation_matches_exact_binomials(s):
    for d in range(1, s + 1):
        expected = [math.comb(s - i, d - 1) / math.comb(s, d) if i <= s - d + 1 else 0.0
                    for i in range(1, s + 1)]
        assert pw_allocation(s, d).probs == pytest.approx(expected, abs=1e-13)


def test_pw_endpoints_reproduce_uniform_and_jsq():
    for s in range(2, 15):
        assert pw_allocation(s, 1).probs == pytest.approx(uniform_allocation(s).probs, abs=1e-14)
        assert pw_allocation(s, s).probs == pytest.approx(jsq_allocation(s).probs, abs=1e-14)


def test_error_allocation():
    assert error_allocation(4, 2, 0.9).probs == pytest.approx((0.1, 0.9, 0, 0))
    assert error_allocation(4, 3, 1.0).probs == (0, 0, 1, 0)
    assert error_allocation(4, 2, 0.0).probs == jsq_allocation(4).probs
    for bad in [(4, 1, 0.5), (4, 5, 0.5), (4, 2, 1.2), (4, 2, -0.1)]:
        with pytest.raises(InvalidParameter):
            error_allocation(*bad)


def test_gsc_compare_examples():
    assert gsc_compare((1, 0, 0, 0), (0.25,) * 4) is LE
    assert gsc_compare((0.25,) * 4, (1, 0, 0, 0)) is GE
    assert gsc_compare((0.3, 0.2, 0.5), (0.3, 0.2, 0.5)) is EQ
    uni = uniform_allocation(4).probs
    assert gsc_compare(error_allocation(4, 2, 0.75).probs, uni) in (LE, EQ)
    assert gsc_compare(error_allocation(4, 2, 0.76).probs, uni) is INC
    with pytest.raises(InvalidParameter):
        gsc_compare((1, 0), (1, 0, 0))


def test_tail_sums():
    assert tail_sums([1, 2, 3]) == pytest.approx([6, 5, 3])


@pytest.mark.parametrize("s", range(2, 13))
def test_p_p2_below_uniform_iff_small_error(s):
    uni = uniform_allocation(s).probs
    for p in np.linspace(0, 1, 101):
        expected = p <= 1 - 1 / s + 1e-12
        assert gsc_le(error_allocation(s, 2, float(p)).probs, uni) == expected


def test_maximality_examples():
    assert satisfies_maximality_condition(pw_allocation(6, 3))
    assert not satisfies_maximality_condition(error_allocation(4, 2, 1.0))
    for s in range(2, 11):
        assert satisfies_maximality_condition(error_allocation(s, 2, 1 - 1 / s))


@pytest.mark.parametrize("s", range(2, 21))
def test_pw_chain(s):
    for d1, d2 in itertools.combinations(range(1, s + 1), 2):
        # d2 > d1 here: more choices is gsc-smaller
        assert gsc_compare(pw_allocation(s, d2).probs, pw_allocation(s, d1).probs) in (LE, EQ)


def test_hadamard():
    assert hadamard((1, 2), (3, 4)) == pytest.approx((3, 8))
    x = np.array([0.5, 2.0, 7.0])
    assert hadamard(x, np.ones(3)) == pytest.approx(x)
    assert hadamard(x, np.zeros(3)) == pytest.approx(np.zeros(3))
    with pytest.raises(InvalidParameter):
        hadamard((1, 2), (1,))


def test_tie_aware_examples():
    p = AllocationVector((0.5, 0.3, 0.2))
    assert tie_aware_routing_distribution(OrderedState((1, 1, 4)), p) == pytest.approx((0.4, 0.4, 0.2))
    assert tie_aware_routing_distribution((0, 2, 5), p) == pytest.approx(p.probs)
    assert tie_aware_routing_distribution((3, 3, 3), p) == pytest.approx((1 / 3,) * 3)
    with pytest.raises(InvalidParameter):
        tie_aware_routing_distribution((2, 1, 0), p)


# --- properties -------------------------------------------------------------

vec = st.integers(1, 12).flatmap(
    lambda s: st.tuples(*[st.lists(st.floats(0, 10, allow_nan=False), min_size=s, max_size=s)] * 3))


@settings(max_examples=1000, deadline=None)
@given(vec)
def test_gsc_is_a_partial_order(triple):
    a, b, c = triple
    assert gsc_compare(a, a) is EQ
    ab, ba = gsc_compare(a, b), gsc_compare(b, a)
    if ab is EQ:
        assert ba is EQ
        assert np.allclose(a, b, atol=1e-9)
    if gsc_le(a, b) and gsc_le(b, c):
        assert gsc_le(a, c, tol=1e-9)
    flipped = {LE: GE, GE: LE, EQ: EQ, INC: INC}
    assert ba is flipped[ab]


def _random_ordered_pair(rng, s):
    """``a`` gsc-below ``b``: build ``b`` then shrink its tail sums."""
    b = rng.exponential(size=s)
    tb = tail_sums(b)
    ta = tb * rng.uniform(0, 1, size=s)
    # tail sums of a non-negative vector must be non-increasing
    ta = np.minimum.accumulate(ta)
    a = ta - np.append(ta[1:], 0.0)
    return np.clip(a, 0, None), b


def test_hadamard_preserves_gsc_order():
    rng = np.random.default_rng(20261016)
    for _ in range(10_000):
        s = int(rng.integers(1, 11))
        a, b = _random_ordered_pair(rng, s)
        assert gsc_le(a, b)
        x = np.sort(rng.exponential(size=s) * rng.integers(0, 5))
        assert gsc_le(hadamard(x, a), hadamard(x, b), tol=1e-9)


@settings(max_examples=300, deadline=None)
@given(st.integers(2, 10).flatmap(lambda s: st.tuples(
    st.lists(st.floats(0, 1), min_size=s, max_size=s).filter(lambda v: sum(v) > 0),
    st.lists(st.floats(0, 1), min_size=s, max_size=s).filter(lambda v: sum(v) > 0))))
def test_gsc_matches_stochastic_order(pair):
    a = np.array(pair[0]) / sum(pair[0])
    b = np.array(pair[1]) / sum(pair[1])
    # X <=_st Y  iff  F_X(k) >= F_Y(k) for every k
    cdf_dominates = bool(np.all(np.cumsum(a)[:-1] >= np.cumsum(b)[:-1] - 1e-12))
    assert gsc_le(a, b) == cdf_dominates


@settings(max_examples=300, deadline=None)
@given(st.lists(st.integers(0, 4), min_size=2, max_size=8), st.data())
def test_tie_aware_distribution_properties(queues, data):
    s = len(queues)
    state = tuple(sorted(queues))
    w = np.array(data.draw(st.lists(st.floats(0.01, 1), min_size=s, max_size=s)))
    p = AllocationVector(tuple(w / w.sum()))
    out = tie_aware_routing_distribution(state, p)
    assert out.sum() == pytest.approx(1.0, abs=1e-12)
    assert (out >= 0).all()
    # shuffle p-mass inside each tie group: the distribution is unchanged
    probs = np.array(p.probs)
    rng = np.random.default_rng(len(queues))
    for v in set(state):
        idx = [i for i, q in enumerate(state) if q == v]
        probs[idx] = probs[rng.permutation(idx)]
    out2 = tie_aware_routing_distribution(state, AllocationVector(tuple(probs / probs.sum())))
    assert out2 == pytest.approx(out, abs=1e-12)
