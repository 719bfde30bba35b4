"""Exact acceptance rate and output bias as beta grows, checked against Monte Carlo."""
import numpy as np

from ears import PolicyConfig, Rng, normalize, step_oracle, tv_distance
from ears.verifier import simulate_one_step

p_t = normalize([0.5, 0.3, 0.2])
p_d = normalize([0.6, 0.2, 0.2])

print("beta  accept(exact)  accept(MC)  bias_tv(exact)  bias_tv(MC)")
for beta in (0.0, 0.05, 0.1, 0.2):
    o = step_oracle(p_t, p_d, beta)
    toks, dec = simulate_one_step(p_t, p_d, PolicyConfig.ears(beta), 1_000_000, Rng(0))
    emp = normalize(np.bincount(toks, minlength=3))
    print(f"{beta:4.2f}  {o.overall_accept_rate:13.5f}  {np.mean(dec != 2):10.5f}  "
          f"{o.bias_tv:14.5f}  {tv_distance(emp, p_t):11.5f}")
