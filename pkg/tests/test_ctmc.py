import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from palloc.ctmc import (Variant, boundary_mass, build_generator, compact_set_threshold, embedded_drift, mean_total,
                         ordered_states, state_transitions, stationary_distribution, verify_negative_drift)
from palloc.errors import InvalidParameter
from palloc.policy import (AllocationVector, error_allocation, jsq_allocation, pw_allocation,
                           satisfies_maximality_condition, uniform_allocation)
from palloc.state import SystemParams

P3 = AllocationVector((0.5, 0.3, 0.2))


def test_variant_parse():
    assert Variant.parse("NonIdling") is Variant.NON_IDLING
    assert Variant.parse("non-idling") is Variant.NON_IDLING
    assert Variant.parse("Idling") is Variant.IDLING
    with pytest.raises(InvalidParameter):
        Variant.parse("lazy")


def test_transitions_by_hand():
    params = SystemParams(3, 2.0, 1.0)
    out = state_transitions((0, 1, 1), params, P3, Variant.IDLING)
    # p-mass of the tie group {2,3} is 0.5, and it lands on the rightmost member
    assert out == pytest.approx({(1, 1, 1): 1.0, (0, 1, 2): 1.0, (0, 0, 1): 2.0})
    out = state_transitions((1, 1, 1), params, P3, Variant.IDLING)
    assert out == pytest.approx({(1, 1, 2): 2.0, (0, 1, 1): 3.0})
    out = state_transitions((0, 2, 2), params, P3, Variant.NON_IDLING)
    assert out == pytest.approx({(1, 2, 2): 2.0, (0, 1, 2): 2.0})
    out = state_transitions((0, 2, 2), params, P3, Variant.IDLING)
    assert out == pytest.approx({(1, 2, 2): 1.0, (0, 2, 3): 1.0, (0, 1, 2): 2.0})


def test_transitions_respect_cap():
    params = SystemParams(2, 1.5, 1.0)
    out = state_transitions((3, 3), params, uniform_allocation(2), Variant.IDLING, cap=3)
    assert out == pytest.approx({(2, 3): 2.0})


def test_state_space_size():
    from math import comb
    for s, cap in [(2, 5), (3, 7), (4, 4)]:
        assert len(ordered_states(s, cap)) == comb(cap + s, s)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 4), st.floats(0.1, 0.95), st.integers(2, 8), st.sampled_from(list(Variant)))
def test_outflow_matches_rates(s, rho, cap, variant):
    params = SystemParams.from_rho(s, rho)
    chain = build_generator(params, pw_allocation(s, 2), variant, cap)
    G = chain.generator()
    assert np.abs(np.asarray(G.sum(axis=1)).ravel()).max() < 1e-12
    for i, x in enumerate(chain.states):
        arrivals_kept = 0 if x[0] == cap else params.lam
        departures = params.mu * sum(v > 0 for v in x)
        # arrivals to capped queues are dropped, so outflow is bounded above
        assert chain.outflow()[i] <= params.lam + departures + 1e-12
        if x[-1] < cap:
            assert chain.outflow()[i] == pytest.approx(arrivals_kept + departures)


def test_nonidling_coincides_with_idling_for_jsq():
    params = SystemParams.from_rho(3, 0.7)
    a = build_generator(params, jsq_allocation(3), Variant.IDLING, 8)
    b = build_generator(params, jsq_allocation(3), Variant.NON_IDLING, 8)
    assert (a.rates != b.rates).nnz == 0


def test_nonidling_differs_only_with_an_idle_server():
    params = SystemParams.from_rho(3, 0.7)
    p = error_allocation(3, 3, 1.0)
    for x in ordered_states(3, 6):
        same = state_transitions(x, params, p, Variant.IDLING) == state_transitions(x, params, p, Variant.NON_IDLING)
        if x[0] > 0 or x[-1] == 0:
            assert same


def test_jsq_two_servers_mean():
    chain = build_generator(SystemParams.from_rho(2, 0.5), jsq_allocation(2), cap=30)
    pi = stationary_distribution(chain)
    assert mean_total(chain, pi) == pytest.approx(1.426320751167241, rel=1e-9)
    assert boundary_mass(chain, pi) < 1e-15


def test_uniform_routing_gives_independent_mm1_queues():
    rho = 0.6
    chain = build_generator(SystemParams.from_rho(3, rho), uniform_allocation(3), cap=25)
    pi = stationary_distribution(chain)
    assert mean_total(chain, pi) == pytest.approx(3 * rho / (1 - rho), abs=5e-4)
    assert boundary_mass(chain, pi) == pytest.approx(3.4116365034647793e-06, rel=1e-6)


def test_global_balance_and_normalization():
    chain = build_generator(SystemParams.from_rho(3, 0.8), pw_allocation(3, 2), Variant.NON_IDLING, 15)
    pi = stationary_distribution(chain)
    assert pi.sum() == pytest.approx(1.0, abs=1e-14)
    assert (pi >= 0).all()
    assert np.abs(chain.generator().T @ pi).max() < 1e-10


def test_mean_queue_decreases_with_more_choices():
    params = SystemParams.from_rho(3, 0.7)
    means = []
    for d in (1, 2, 3):
        chain = build_generator(params, pw_allocation(3, d), cap=25)
        means.append(mean_total(chain, stationary_distribution(chain)))
    assert means[0] > means[1] > means[2]


def test_compact_set_threshold():
    assert compact_set_threshold(SystemParams(4, 3.6, 1.0)) == pytest.approx(4 * 7.6 / 0.8)
    with pytest.raises(InvalidParameter):
        compact_set_threshold(SystemParams(4, 4.0, 1.0))


def brute_force_drift(x, params, p):
    """Expected one-step change of sum(x^2) for the jump chain, from the generator."""
    out = state_transitions(tuple(x), params, p, Variant.IDLING)
    total = sum(out.values())
    v = sum(q * q for q in x)
    return sum(r * (sum(q * q for q in y) - v) for y, r in out.items()) / total


@settings(max_examples=300, deadline=None)
@given(st.lists(st.integers(0, 12), min_size=2, max_size=6), st.floats(0.05, 1.5), st.data())
def test_drift_matches_generator(queues, rho, data):
    s = len(queues)
    x = tuple(sorted(queues))
    w = np.array(data.draw(st.lists(st.floats(0.0, 1), min_size=s, max_size=s).filter(lambda v: sum(v) > 0)))
    p = AllocationVector(tuple(w / w.sum()))
    params = SystemParams.from_rho(s, rho)
    rep = embedded_drift(x, params, p)
    assert rep.drift == pytest.approx(brute_force_drift(x, params, p), abs=1e-9)
    if rho >= 1:
        assert not rep.in_K


def test_drift_in_K_flag():
    params = SystemParams(2, 1.0, 1.0)
    thr = compact_set_threshold(params)  # 3.0
    assert embedded_drift((1, 2), params, jsq_allocation(2)).in_K
    assert not embedded_drift((2, 2), params, jsq_allocation(2)).in_K
    assert thr == pytest.approx(3.0)


@pytest.mark.parametrize("s,rho", [(2, 0.5), (3, 0.8), (4, 0.9), (5, 0.6)])
def test_negative_drift_for_certified_vectors(s, rho):
    params = SystemParams.from_rho(s, rho)
    bound = int(compact_set_threshold(params)) + 12
    for p in [uniform_allocation(s), jsq_allocation(s), pw_allocation(s, 2)]:
        assert satisfies_maximality_condition(p)
        assert verify_negative_drift(params, p, bound)


def test_scan_finds_positive_drift_for_uncertified_vector():
    params = SystemParams.from_rho(4, 0.9)
    p = error_allocation(4, 2, 1.0)
    assert not satisfies_maximality_condition(p)
    assert not verify_negative_drift(params, p, 60)


def test_scan_agrees_with_pointwise_drift():
    params = SystemParams.from_rho(3, 0.5)
    p = error_allocation(3, 2, 0.6)
    thr = compact_set_threshold(params)
    worst = max(embedded_drift(x, params, p).drift
                for x in ordered_states(3, 14) if thr < sum(x) <= 14)
    assert verify_negative_drift(params, p, 14) == (worst < 0)


def test_scan_bound_validation():
    params = SystemParams.from_rho(3, 0.5)
    with pytest.raises(InvalidParameter):
        verify_negative_drift(params, uniform_allocation(3), 2)


def test_two_server_transition_examples():
    params = SystemParams(2, 1.0, 1.0)
    for variant in Variant:
        assert state_transitions((0, 0), params, uniform_allocation(2), variant) == pytest.approx({(0, 1): 1.0})
    assert state_transitions((1, 2), params, jsq_allocation(2), Variant.IDLING) == \
        pytest.approx({(2, 2): 1.0, (0, 2): 1.0, (1, 1): 1.0})
    assert state_transitions((0, 3), params, error_allocation(2, 2, 1.0), Variant.NON_IDLING) == \
        pytest.approx({(1, 3): 1.0, (0, 2): 1.0})


def test_two_uniform_queues_at_cap_60():
    chain = build_generator(SystemParams(2, 1.0, 1.0), uniform_allocation(2), Variant.IDLING, cap=60)
    pi = stationary_distribution(chain)
    assert mean_total(chain, pi) == pytest.approx(2.0, abs=1e-3)
    assert pi[chain.index[(0, 0)]] == pytest.approx(0.25, abs=1e-3)
    jsq = build_generator(SystemParams.from_rho(2, 0.5), jsq_allocation(2), cap=60)
    assert boundary_mass(jsq, stationary_distribution(jsq)) < 1e-8


def test_threshold_examples():
    assert compact_set_threshold(SystemParams(2, 1.0, 1.0)) == pytest.approx(3.0)
    vals = [compact_set_threshold(SystemParams.from_rho(3, r)) for r in (0.9, 0.99, 0.999)]
    assert vals[0] < vals[1] < vals[2] and vals[2] > 1000


def test_drift_examples():
    params = SystemParams(2, 1.0, 1.0)
    assert embedded_drift((2, 3), params, jsq_allocation(2)).drift == pytest.approx(-1.0, abs=1e-15)
    for p in (jsq_allocation(3), uniform_allocation(3), P3):
        assert embedded_drift((0, 0, 0), SystemParams(3, 2.0, 1.0), p).drift == pytest.approx(1.0)


def test_negative_drift_scan_examples():
    assert verify_negative_drift(SystemParams(2, 1.0, 1.2), jsq_allocation(2), 40)
    assert verify_negative_drift(SystemParams.from_rho(3, 0.9), uniform_allocation(3), 30)
    assert not verify_negative_drift(SystemParams.from_rho(2, 0.95), error_allocation(2, 2, 1.0), 80)
