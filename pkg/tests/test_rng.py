import math

import pytest

from collagecode.rng import Prng, splitmix64_next
from collagecode.sim import LatencyModel, percentile_nearest_rank, sample_latency


def test_splitmix64_reference_vector():
    state, out = splitmix64_next(0)
    assert out == 0xE220A8397B1DCDAF
    state, out2 = splitmix64_next(state)
    assert out2 != out
    assert out2 == 0x6E789E6AA1B965F4
    _, out3 = splitmix64_next(state)
    assert out3 == 0x06C45D188009454F


def test_same_seed_same_stream():
    a, b = Prng(12345), Prng(12345)
    assert [a.next_u64() for _ in range(1000)] == [b.next_u64() for _ in range(1000)]


def test_different_seeds_differ():
    a, b = Prng(1), Prng(2)
    assert [a.next_u64() for _ in range(10)] != [b.next_u64() for _ in range(10)]


def test_uniform_range_and_conversion():
    p = Prng(3)
    for _ in range(10_000):
        u = p.next_float()
        assert 0.0 <= u < 1.0
    # the conversion is pinned: top 53 bits over 2^53
    q = Prng(3)
    r = Prng(3)
    for _ in range(100):
        assert q.next_float() == (r.next_u64() >> 11) * 2.0**-53


def test_normal_consumes_exactly_two_uniforms():
    p = Prng(9)
    before = p.draws
    p.next_normal()
    assert p.draws - before == 2


def test_normal_formula_pinned():
    p, q = Prng(4), Prng(4)
    z = p.next_normal()
    u1, u2 = q.next_float(), q.next_float()
    assert z == math.sqrt(-2.0 * math.log(1.0 - u1)) * math.cos(2.0 * math.pi * u2)


def test_sample_latency_consumes_exactly_three_uniforms():
    p = Prng(5)
    model = LatencyModel(mu=1.0, sigma=0.5, p_straggler=0.5, straggler_multiplier=3.0)
    before = p.draws
    sample_latency(model, p)
    assert p.draws - before == 3


def test_degenerate_latency_is_constant():
    model = LatencyModel(mu=2.0, sigma=0.0)
    p = Prng(6)
    for _ in range(100):
        assert sample_latency(model, p) == math.exp(2.0)


def test_all_stragglers_multiply():
    model = LatencyModel(mu=2.0, sigma=0.0, p_straggler=1.0, straggler_multiplier=5.0)
    p = Prng(6)
    for _ in range(100):
        assert sample_latency(model, p) == 5.0 * math.exp(2.0)


def test_floor_shifts_samples():
    model = LatencyModel(mu=0.0, sigma=0.0, floor=2.5)
    assert sample_latency(model, Prng(1)) == 3.5


def test_samples_strictly_positive():
    model = LatencyModel(mu=-5.0, sigma=2.0, p_straggler=0.2, straggler_multiplier=10.0)
    p = Prng(123)
    assert all(sample_latency(model, p) > 0 for _ in range(10_000))


def test_heavy_tail_percentile_ratio_golden():
    # frozen after the first verified run (seed 7, 100k draws)
    model = LatencyModel(mu=math.log(10), sigma=0.3, p_straggler=0.05, straggler_multiplier=5.0)
    p = Prng(7)
    vals = [sample_latency(model, p) for _ in range(100_000)]
    p50 = percentile_nearest_rank(vals, 50)
    p99 = percentile_nearest_rank(vals, 99)
    assert p99 / p50 >= 3.0
    assert p50 == pytest.approx(10.193542111470403, abs=1e-9)
    assert p99 == pytest.approx(64.92511929479319, abs=1e-9)


def test_latency_model_validation():
    with pytest.raises(ValueError):
        LatencyModel(mu=0, sigma=-1)
    with pytest.raises(ValueError):
        LatencyModel(mu=0, sigma=0, p_straggler=1.5)
    with pytest.raises(ValueError):
        LatencyModel(mu=0, sigma=0, straggler_multiplier=0.5)
    with pytest.raises(ValueError):
        LatencyModel(mu=0, sigma=0, floor=-1)
