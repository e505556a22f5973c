"""Bias of the coefficient and the plug-in as the treated fraction varies.

Only logs the curve; nothing is asserted about its shape.

    python scripts/pi_t_bias_curve.py --n 1000 --reps 400
"""

import argparse
import csv
import sys

import numpy as np

from neyman_logit.montecarlo import ScenarioSpec, build_population, run_study


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--reps", type=int, default=400)
    p.add_argument("--seed", type=int, default=ScenarioSpec.seed)
    p.add_argument("--pi-t", type=float, nargs="+", default=list(np.round(np.arange(0.1, 0.95, 0.1), 2)))
    args = p.parse_args()

    # one frozen population for the whole curve
    pop = build_population(ScenarioSpec(n=args.n, seed=args.seed))
    w = csv.writer(sys.stdout)
    w.writerow(("pi_t", "truth", "bias_b2", "bias_plug_in", "bias_itt", "mcse_plug_in", "failures"))
    for pi_t in args.pi_t:
        spec = ScenarioSpec(n=args.n, pi_t=pi_t, replications=args.reps, seed=args.seed)
        rep = run_study(spec, population=pop)
        w.writerow((
            pi_t,
            f"{rep.truth.delta:.5f}",
            f"{rep.bias('b2'):.5f}",
            f"{rep.bias('plug_in'):.5f}",
            f"{rep.bias('itt'):.5f}",
            f"{rep.mcse['plug_in']:.5f}",
            rep.failure_count,
        ))


if __name__ == "__main__":
    main()
