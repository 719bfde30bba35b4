"""Baseline vs EARS on the default synthetic workload, with the oracle's prediction."""
from ears.harness import ExperimentConfig, simulate

report = simulate(ExperimentConfig(n_tokens=20000))
for name, row in report["policies"].items():
    print(f"{name:8s} mean accepted {row['mean_accepted_len']:.3f}  "
          f"tokens/cost {row['throughput']:.4f}  pardon share {row['pardon_share']:.3f}  "
          f"oracle bias_tv {row['oracle']['bias_tv']:.4f}")
print(f"uplift measured {100 * report['uplift']:.2f}%  predicted {100 * report['predicted_uplift']:.2f}%")
