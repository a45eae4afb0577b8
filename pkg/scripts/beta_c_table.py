"""Print the localization threshold beta_c and the rate at a few beta for d = 1, 2, 3.

beta_c here is the sufficient condition of the path-sum bound, not the location of the
transition itself (numerically the 3D transition sits near beta ~ 0.038).
"""

import argparse
import math

from h22sigma.bounds import I_beta, beta_c, rate


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--beta", type=float, nargs="*", default=[1e-3, 5e-3, 0.01, 0.05])
    args = ap.parse_args()
    print(f"{'d':>2} {'beta_c':>14} {'(2d-1)^-2':>10}")
    for d in (1, 2, 3):
        bc = beta_c(d)
        print(f"{d:>2} {bc:>14.10g} {1 / (2 * d - 1) ** 2:>10.4g}")
    print()
    print(f"{'beta':>8} {'I_beta':>10} " + " ".join(f"{'r(d=' + str(d) + ')':>10}" for d in (1, 2, 3)))
    for b in args.beta:
        rs = " ".join(f"{rate(d, b):>10.5f}" for d in (1, 2, 3))
        print(f"{b:>8.4g} {I_beta(b):>10.6f} {rs}   sqrt(b)ln(1/b)={math.sqrt(b) * math.log(1 / b):.4f}")


if __name__ == "__main__":
    main()
