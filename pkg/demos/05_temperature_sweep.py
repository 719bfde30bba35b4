"""Temperature sweep: uncertainty, accept rate and pardon statistics per policy."""
import csv
import io

from ears.harness import ExperimentConfig, dump_csv, sweep

rows = sweep(ExperimentConfig(order=1, n_tokens=10000), "temperature", [0.4, 0.9, 1.5])
for r in csv.DictReader(io.StringIO(dump_csv(rows))):
    print(f"T={float(r['value']):.1f} {r['policy']:8s} uncertainty={float(r['mean_uncertainty']):.3f} "
          f"accept={float(r['accept_rate']):.3f} pardon_share={float(r['pardon_share']):.3f} "
          f"rescued={float(r['pardon_rescue_rate']):.3f} uplift={float(r['uplift']):+.3f}")
