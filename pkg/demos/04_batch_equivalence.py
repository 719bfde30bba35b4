"""Eight lanes verified together reproduce eight standalone runs exactly."""
from ears import PolicyConfig, Rng, make_coupled_pair, run_batch, run_speculative

pair = make_coupled_pair(3, 48, 1, 0.6, 0.9)
cfg = PolicyConfig.ears(0.1)
batch = run_batch(pair, cfg, 5, 1000, [Rng(3, lane) for lane in range(8)], trace=True)
for lane, (tokens, stats) in enumerate(batch):
    ref_tokens, ref = run_speculative(pair, cfg, 5, 1000, Rng(3, lane), trace=True)
    same = tokens == ref_tokens and stats.outcomes == ref.outcomes
    print(f"lane {lane}: {len(tokens)} tokens, {stats.target_calls} target calls, identical={same}")
