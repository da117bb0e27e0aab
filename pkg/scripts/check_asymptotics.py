"""
Compare the optimizer against the closed-form asymptotic gains.

For small sigma the achieved gain should approach 1 + 1/(2+sqrt5) - 1/(2M);
for large sigma the excess gain should approach 1/(56 sigma^2) (M -> inf form).
"""

import sys
from pathlib import Path

# Add src to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from src.exponents.bounds import asymptotic_large_sigma, asymptotic_small_sigma, exponent_nofeedback
from src.exponents.optimizer import f1_lower


def main():
    """Print optimizer gains next to the asymptotic predictions."""

    print("="*60)
    print("SMALL-SIGMA ASYMPTOTICS")
    print("="*60 + "\n")

    print(f"{'M':>10} {'sigma':>8} {'gain':>10} {'predicted':>10} {'beta*':>8}")
    for M in (3, 10, 100, 10 ** 6):
        report = f1_lower(M, 1.0, 1e-3)
        predicted = asymptotic_small_sigma(M, 1.0)
        ratio = predicted['value'] / exponent_nofeedback(M, 1.0)
        print(f"{M:>10} {1e-3:>8g} {report.gain:>10.6f} {ratio:>10.6f} {report.best_beta:>8.4f}")

    print("\n" + "="*60)
    print("LARGE-SIGMA ASYMPTOTICS")
    print("="*60 + "\n")

    print(f"{'sigma':>8} {'gain-1':>12} {'predicted':>12} {'ratio':>8}")
    for sigma in (3.0, 10.0, 30.0):
        report = f1_lower(3, 1.0, sigma)
        predicted = asymptotic_large_sigma(3, 1.0, sigma) / exponent_nofeedback(3, 1.0) - 1.0
        excess = report.gain - 1.0
        print(f"{sigma:>8g} {excess:>12.4e} {predicted:>12.4e} {excess / predicted:>8.3f}")

    print("\n[OK] Asymptotic check complete")


if __name__ == "__main__":
    main()
