"""Joint click probability versus pulse separation at fixed single-pulse probability."""
import argparse

from sdapd.analysis import flatness_test
from sdapd.detector import DetectorSpec
from sdapd.experiments import run_delay_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--frames", type=int, default=10**6)
    ap.add_argument("--residual", type=float, default=0.0, help="SD residual click probability")
    ap.add_argument("--seed", type=int, default=2)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    spec = DetectorSpec(efficiency=0.10, afterpulse_total=0.0, sd_residual=args.residual)
    res = run_delay_sweep(spec, range(1, 11), click_probability=0.36, frames=args.frames,
                          seed=args.seed, jobs=args.jobs)
    for r in res:
        lo, hi = r.ci("P12")
        print(f"delta={r.separation:2d}  P12={r.P12:.5f}  [{lo:.5f}, {hi:.5f}]")
    mean, chi2, dof, p = flatness_test([r.P12 for r in res[1:]], [r.stderr("P12") for r in res[1:]])
    print(f"delta >= 2: mean {mean:.5f}, chi2 {chi2:.1f}/{dof}, p = {p:.3f}")


if __name__ == "__main__":
    main()
