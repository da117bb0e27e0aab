"""
Energy sweep demo: feedback scheme against the no-feedback simplex.

Runs both decoders over the same total energies at M=3, sigma=0.05 and
prints the empirical slopes of -ln(p_hat) next to min(B) and E(M,A).
"""

import sys
from pathlib import Path

# Add src to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from src.errors import InsufficientDataError
from src.harness.config import DecoderConfig, RunConfig, SchemeConfig, SweepConfig
from src.simulation.monte_carlo import sweep
from src.simulation.statistics import fit_slope

ENERGIES = [8.0, 12.0, 16.0, 20.0]


def main():
    """Run the two sweeps and compare slopes."""

    print("="*60)
    print("ENERGY SWEEP DEMO")
    print("="*60 + "\n")

    grid = SweepConfig(axis='total_energy', values=ENERGIES)
    runs = {
        'FullBayes': RunConfig(scheme=SchemeConfig(M=3, sigma=0.05), trials=200_000, sweep=grid),
        'NoFeedbackML': RunConfig(scheme=SchemeConfig(M=3), decoder=DecoderConfig(mode='NoFeedbackML'),
                                  trials=200_000, sweep=grid),
    }

    for mode, cfg in runs.items():
        print(f"\n{mode}:")
        table = sweep(cfg)
        print(table[['total_energy', 'p_hat', 'ci_low', 'ci_high', 'theory_min_b', 'theory_e_nofb']]
              .to_string(index=False))
        try:
            fit = fit_slope(table)
        except InsufficientDataError as e:
            print(f"[WARN] {e}")
            continue
        print(f"  Slope: {fit['slope']:.4f} +- {fit['stderr']:.4f} ({fit['n_used']} points)")

    print("\n[OK] Demo complete")


if __name__ == "__main__":
    main()
