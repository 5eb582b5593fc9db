"""Count rate versus flux for every-other-gate illumination, with and without afterpulsing."""
import argparse

import numpy as np

from sdapd.analysis import theory_rate
from sdapd.detector import DetectorSpec
from sdapd.experiments import run_saturation


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--frames", type=int, default=5 * 10**6)
    ap.add_argument("--seed", type=int, default=3)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    mus = [0.0, 0.01, 0.1, 1.0, 3.0, 10.0, 30.0, 100.0]
    for a in (0.0, 0.05):
        spec = DetectorSpec(efficiency=0.14, dark_prob=1.67e-5, afterpulse_total=a)
        curve = run_saturation(spec, mus, frames=args.frames, seed=args.seed, jobs=args.jobs)
        # theory counts illuminated gates only; dark clicks in the idle gates add p_d * f/2
        theory = theory_rate(np.array(mus), spec.efficiency, spec.dark_prob, curve.illumination_hz)
        print(f"A = {a}")
        for p, t in zip(curve.points, theory):
            print(f"  mu={p.mu:7.2f}  rate={p.rate_hz / 1e6:10.4f} MHz  theory={t / 1e6:10.4f} MHz")
        print(f"  asymptote {curve.asymptote_hz / 1e6:.2f} MHz "
              f"({curve.asymptote_hz / curve.illumination_hz:.1%} of illumination)")


if __name__ == "__main__":
    main()
