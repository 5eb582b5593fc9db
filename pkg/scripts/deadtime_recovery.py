"""Double-pulse recovery: P2 conditioned on P1 against the unconditional P2."""
import argparse

from sdapd.analysis import TheoryCurve, compare
from sdapd.detector import DetectorSpec
from sdapd.experiments import run_dead_time


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--frames", type=int, default=10**6)
    ap.add_argument("--separation", type=int, default=2)
    ap.add_argument("--afterpulse", type=float, default=0.0)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    spec = DetectorSpec(efficiency=0.10, dark_prob=1.67e-5, afterpulse_total=args.afterpulse)
    mus = [0.1, 0.3, 1.0, 3.0, 10.0]
    res = run_dead_time(spec, mus, args.separation, frames=args.frames, seed=args.seed,
                        jobs=args.jobs)
    print(f"{'mu':>6} {'P1':>9} {'P2':>9} {'P2|1':>9} {'z(P2|1-P2)':>11}")
    for r in res:
        se = (r.stderr("P2given1") ** 2 + r.stderr("P2") ** 2) ** 0.5
        print(f"{r.mu:6.2f} {r.P1:9.5f} {r.P2:9.5f} {r.P2given1:9.5f} "
              f"{(r.P2given1 - r.P2) / se:11.2f}")
    curve = TheoryCurve.click_probability(mus, spec.efficiency, spec.dark_prob)
    print(compare(mus, [r.P2 for r in res], [r.stderr("P2") for r in res], curve).summary())


if __name__ == "__main__":
    main()
