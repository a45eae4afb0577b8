"""Fitted decay rate of <G_0y> on a chain across several beta, next to the proven rate -ln I_beta."""

import argparse
import math

from h22sigma import mcmc
from h22sigma.bounds import I_beta, fit_decay_rate
from h22sigma.exact import Observable
from h22sigma.lattice import Lattice
from h22sigma.model import ModelParams, PinningScheme


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--length", type=int, default=12)
    ap.add_argument("--beta", type=float, nargs="*", default=[0.05, 0.2, 1.0])
    ap.add_argument("--sweeps", type=int, default=50_000)
    ap.add_argument("--chains", type=int, default=4)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    L = args.length
    print(f"{'beta':>6} {'fitted':>9} {'stderr':>8} {'-ln I_beta':>10}")
    for b in args.beta:
        p = ModelParams(b, Lattice.chain(L), PinningScheme.two_point(0, 1.0, L - 1, 1.0))
        obs = [Observable.G(0, y) for y in range(L)]
        res = mcmc.estimate_many(p, obs, args.sweeps, n_chains=args.chains, seed=args.seed, allow_unpinned=True)
        fit = fit_decay_rate([(y, r.mean, r.stderr) for y, r in enumerate(res)])
        print(f"{b:>6.3g} {fit.rate:>9.4f} {fit.rate_stderr:>8.4f} {-math.log(I_beta(b)):>10.4f}")


if __name__ == "__main__":
    main()
