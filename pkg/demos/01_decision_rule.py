"""Walk one draft token through the baseline and EARS decision rules.

A flat target row has high uncertainty, so EARS opens a pardon window
below the uniform draw; a peaked row barely moves the threshold.
"""
from ears import PolicyConfig, normalize, verify_token


class Replay:
    def __init__(self, u):
        self.u = u

    def uniform(self):
        return self.u


flat = normalize([0.22, 0.20, 0.20, 0.19, 0.19])
peaked = normalize([0.90, 0.04, 0.03, 0.02, 0.01])

for name, row in [("flat", flat), ("peaked", peaked)]:
    p_t = float(row.probs[1])
    p_d = p_t / 0.7  # acceptance ratio 0.7
    for u in (0.65, 0.74, 0.80):
        base = verify_token(p_t, p_d, row, PolicyConfig.baseline(), Replay(u))
        ears = verify_token(p_t, p_d, row, PolicyConfig.ears(0.1), Replay(u))
        print(f"{name:6s} U={u:.2f} tol={ears.tolerance:.4f} "
              f"baseline={base.decision.name:15s} ears={ears.decision.name}")
