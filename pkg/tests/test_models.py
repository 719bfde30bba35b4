import numpy as np
import pytest

from ears.dist import tv_distance
from ears.errors import DomainError
from ears.models import context_hash, draft_dist, make_coupled_pair, target_dist


def _contexts(V, n, k, seed=0):
    gen = np.random.default_rng(seed)
    return [tuple(gen.integers(V, size=gen.integers(0, k + 3))) for _ in range(n)]


def test_zero_divergence_draft_equals_target_bitwise():
    pair = make_coupled_pair(7, 16, 2, 0.0, 0.9)
    for ctx in _contexts(16, 200, 2):
        assert np.array_equal(target_dist(pair, ctx).probs, draft_dist(pair, ctx).probs)


def test_same_seed_same_tables():
    a = make_coupled_pair(9, 12, 1, 0.5, 0.9)
    b = make_coupled_pair(9, 12, 1, 0.5, 0.9)
    assert np.array_equal(a.target_logits, b.target_logits)
    assert np.array_equal(a.draft_logits, b.draft_logits)
    assert not np.array_equal(a.target_logits, make_coupled_pair(10, 12, 1, 0.5, 0.9).target_logits)


def test_divergence_increases_mean_tv():
    ctxs = _contexts(16, 100, 2, seed=1)

    def mean_tv(delta):
        pair = make_coupled_pair(3, 16, 2, delta, 0.9)
        return np.mean([tv_distance(pair.target_dist(c), pair.draft_dist(c)) for c in ctxs])

    lo, hi = mean_tv(0.5), mean_tv(1.0)
    assert 0 < lo < hi


def test_uniform_logit_row_gives_uniform_dist():
    pair = make_coupled_pair(0, 8, 0, 0.0, 0.9)
    flat = type(pair)(8, 0, np.zeros((1, 8)), np.zeros((1, 8)), 0.0, 0.9)
    assert np.allclose(flat.target_dist(()).probs, 1 / 8, rtol=0, atol=1e-15)
    assert pair.n_rows == 1


def test_queries_are_pure():
    pair = make_coupled_pair(4, 10, 2, 0.3, 0.9)
    ctx = (1, 2, 3)
    assert target_dist(pair, ctx) == target_dist(pair, ctx)
    assert target_dist(pair, ctx) == target_dist(pair, (9, 9, 1, 2, 3))  # only the order-k suffix matters


def test_raising_temperature_lowers_max():
    pair = make_coupled_pair(5, 32, 1, 0.5, 0.9)
    hot = pair.with_temperature(2.0)
    for ctx in _contexts(32, 100, 1, seed=2):
        assert hot.target_dist(ctx).cached_max <= pair.target_dist(ctx).cached_max


def test_draft_tv_bounded():
    pair = make_coupled_pair(6, 8, 1, 3.0, 0.9)
    for ctx in _contexts(8, 50, 1):
        assert 0 <= tv_distance(pair.draft_dist(ctx), pair.target_dist(ctx)) <= 1


def test_context_lookup_total_and_bounded():
    pair = make_coupled_pair(1, 64, 3, 0.5, 0.9, max_rows=512)
    assert pair.n_rows == 512
    rows = {pair.context_row(c) for c in _contexts(64, 2000, 3)}
    assert all(0 <= r < 512 for r in rows)
    assert context_hash((1, 2)) != context_hash((2, 1))


@pytest.mark.parametrize("kwargs", [dict(vocab_size=1), dict(temperature=0.0), dict(divergence=-0.1)])
def test_make_pair_domain(kwargs):
    args = dict(seed=0, vocab_size=8, order=1, divergence=0.5, temperature=0.9) | kwargs
    with pytest.raises(DomainError):
        make_coupled_pair(**args)
