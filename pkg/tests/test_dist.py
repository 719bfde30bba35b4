import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ears.dist import ProbDist, Rng, entropy, normalize, sample, sample_at, sample_many, temperature_scale, tv_distance
from ears.errors import DomainError, NormalizationError, ShapeError

weights = st.lists(st.floats(0, 1e6, allow_nan=False), min_size=1, max_size=40).filter(lambda w: sum(w) > 0)


def test_normalize_examples():
    assert np.array_equal(normalize([2, 2]).probs, [0.5, 0.5])
    assert np.array_equal(normalize([1, 0, 0]).probs, [1, 0, 0])
    d = normalize([0.5, 0.3, 0.2])
    assert np.array_equal(d.probs, [0.5, 0.3, 0.2])
    assert d.cached_max == 0.5


@pytest.mark.parametrize("bad", [[0, 0], [1, -1], [np.nan, 1], [np.inf, 1]])
def test_normalize_rejects(bad):
    with pytest.raises(NormalizationError):
        normalize(bad)


def test_probdist_rejects_unnormalized():
    with pytest.raises(NormalizationError):
        ProbDist([0.5, 0.4])
    with pytest.raises(ShapeError):
        ProbDist([])


def test_probdist_is_immutable():
    d = normalize([1, 2, 3])
    with pytest.raises(ValueError):
        d.probs[0] = 1.0
    with pytest.raises(AttributeError):
        d.cached_max = 0.1


@given(weights)
def test_normalize_idempotent_and_cached_max(w):
    d = normalize(w)
    assert abs(d.probs.sum() - 1) <= 1e-9
    assert normalize(d.probs) == d
    assert d.cached_max == d.probs.max()


def test_temperature_examples():
    assert np.allclose(temperature_scale([0, 0, 0], 0.7).probs, 1 / 3, rtol=0, atol=1e-15)
    assert np.allclose(temperature_scale([math.log(2), 0], 1).probs, [2 / 3, 1 / 3], rtol=0, atol=1e-15)
    # exp(2 ln 2) = 4 against exp(0) = 1
    assert np.allclose(temperature_scale([math.log(2), 0], 0.5).probs, [0.8, 0.2], rtol=0, atol=1e-15)


@pytest.mark.parametrize("T", [0, -1.0])
def test_temperature_domain(T):
    with pytest.raises(DomainError):
        temperature_scale([1.0, 2.0], T)


def test_temperature_large_logits_stable():
    d = temperature_scale([1000.0, 999.0, -1000.0], 0.9)
    assert np.all(np.isfinite(d.probs))


@given(st.lists(st.floats(-30, 30), min_size=1, max_size=30))
def test_temperature_one_matches_plain_softmax(logits):
    ref = normalize(np.exp(np.array(logits)))
    assert np.allclose(temperature_scale(logits, 1.0).probs, ref.probs, rtol=0, atol=1e-12)


def test_tv_examples():
    a = normalize([0.5, 0.3, 0.2])
    assert tv_distance(a, a) == 0
    assert tv_distance(normalize([1, 0]), normalize([0, 1])) == 1
    assert tv_distance(a, normalize([0.6, 0.2, 0.2])) == pytest.approx(0.1, abs=1e-15)
    with pytest.raises(ShapeError):
        tv_distance(a, normalize([1, 1]))


def test_tv_metric_properties():
    gen = np.random.default_rng(5)
    for _ in range(500):
        V = gen.integers(2, 20)
        a, b, c = (normalize(gen.random(V) ** 3) for _ in range(3))
        assert tv_distance(a, b) == tv_distance(b, a)
        assert tv_distance(a, c) <= tv_distance(a, b) + tv_distance(b, c) + 1e-15
        assert (tv_distance(a, b) == 0) == (a == b)


def test_entropy_examples():
    assert entropy(normalize([1, 0])) == 0
    assert entropy(normalize([1, 1, 1, 1])) == pytest.approx(math.log(4), abs=1e-15)
    assert entropy(normalize([0.5, 0.5, 0, 0])) == pytest.approx(math.log(2), abs=1e-15)


def test_sample_examples():
    point = normalize([1, 0, 0])
    rng = Rng(3)
    assert all(sample(point, rng) == 0 for _ in range(100))
    assert rng.draws == 100
    half = normalize([0.5, 0.5])
    assert sample_at(half, 0.25) == 0
    assert sample_at(half, 0.75) == 1
    assert sample_at(half, 0.5) == 1  # left-closed intervals


def test_sample_never_picks_zero_mass():
    d = normalize([0.0, 0.3, 0.0, 0.7, 0.0])
    us = np.linspace(0, 1, 10001)[:-1]
    assert set(sample_many(d, us)) <= {1, 3}
    assert sample_at(d, np.nextafter(1.0, 0)) == 3


def test_sample_frequencies_within_3_sigma():
    d = normalize([0.5, 0.3, 0.2])
    n = 1_000_000
    counts = np.bincount(sample_many(d, Rng(11).uniforms(n)), minlength=3)
    sigma = np.sqrt(n * d.probs * (1 - d.probs))
    assert np.all(np.abs(counts - n * d.probs) <= 3 * sigma)


def test_sample_many_matches_scalar():
    d = normalize([0.1, 0.0, 0.4, 0.25, 0.25])
    us = Rng(2).uniforms(10_000)
    assert [sample_at(d, u) for u in us] == list(sample_many(d, us))


def test_rng_reproducible_and_lanes_independent():
    a, b = Rng(42, 3), Rng(42).lane_stream(3)
    assert [a.uniform() for _ in range(50)] == [b.uniform() for _ in range(50)]
    assert Rng(42, 0).uniform() != Rng(42, 1).uniform()
    with pytest.raises(DomainError):
        Rng(-1)
    with pytest.raises(DomainError):
        Rng(1 << 64)


def test_uniforms_in_unit_interval():
    u = Rng(0).uniforms(100_000)
    assert u.min() >= 0 and u.max() < 1
