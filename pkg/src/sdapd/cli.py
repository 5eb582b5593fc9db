"""``simulate <config> [--seed N] [--frames N] [--out DIR] [--jobs N]``

Exit status: 0 on success, 2 on a configuration error, 3 on a runtime error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, load_config, validate
from .experiments import (
    amzi_input_for_slot_mean,
    run_dead_time,
    run_delay_sweep,
    run_hbt_g2,
    run_saturation,
)

log = logging.getLogger("sdapd")

# column order is part of the output contract
SCHEMAS = {
    "deadtime": ("mu", "P1", "P1_lo", "P1_hi", "P2", "P2_lo", "P2_hi",
                 "P12", "P12_lo", "P12_hi", "P2given1"),
    "delaysweep": ("delta_gates", "P12", "lo", "hi"),
    "saturation": ("mu", "rate_hz", "lo", "hi"),
    "saturation_asymptote": ("asymptote_hz", "lo", "hi", "n_points"),
    "hbt": ("lag_periods", "g2", "stderr"),
}


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _write_csv(path: Path, columns, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def execute(cfg: RunConfig) -> tuple[dict, dict]:
    """Run the configured experiment; returns ``(tables, extra_manifest)``.

    ``tables`` maps a table name to its rows, ordered by sweep key.
    """
    p = cfg.params
    det = cfg.detector
    extra = {}
    if cfg.experiment == "deadtime":
        res = run_dead_time(det, p["mu_list"], p["separation"], p["frame_gates"], cfg.frames,
                            cfg.seed, cfg.jobs)
        rows = []
        for r in sorted(res, key=lambda r: r.mu):
            rows.append((r.mu, r.P1, *r.ci("P1"), r.P2, *r.ci("P2"), r.P12, *r.ci("P12"),
                         r.P2given1))
        return {"deadtime": rows}, extra
    if cfg.experiment == "delaysweep":
        res = run_delay_sweep(det, p["separations"], p["mu"], p["click_probability"],
                              p["frame_gates"], cfg.frames, cfg.seed, cfg.jobs)
        extra["mu"] = res[0].mu if res else p["mu"]
        rows = [(r.separation, r.P12, *r.ci("P12")) for r in sorted(res, key=lambda r: r.separation)]
        return {"delaysweep": rows}, extra
    if cfg.experiment == "saturation":
        curve = run_saturation(det, p["mu_list"], cfg.frames, cfg.seed, p["frame_gates"],
                               p["saturation_level"], cfg.jobs)
        rows = [(pt.mu, pt.rate_hz, *pt.ci) for pt in sorted(curve.points, key=lambda q: q.mu)]
        tables = {"saturation": rows}
        extra["illumination_hz"] = curve.illumination_hz
        extra["asymptote_mu"] = list(curve.asymptote_mu)
        extra["theory_capped"] = False
        if curve.asymptote_hz is not None:
            tables["saturation_asymptote"] = [(curve.asymptote_hz, *curve.asymptote_ci,
                                               len(curve.asymptote_mu))]
        return tables, extra
    if cfg.experiment == "hbt":
        source = cfg.source
        if p["flux_reference"] == "detector":
            source = amzi_input_for_slot_mean(source, p["survival"])
        res = run_hbt_g2(source, det, p["pulse_period"], p["delay"], cfg.frames, p["max_lag"],
                         cfg.seed, p["survival"], p["normalization"])
        extra["parent_source"] = dataclasses.asdict(source)
        extra["hbt_flags"] = res.flags
        extra["rate_a_per_pulse"] = res.rate_a
        extra["rate_b_per_pulse"] = res.rate_b
        rows = list(zip(res.lags.tolist(), res.g2.tolist(), res.stderr.tolist()))
        return {"hbt": rows}, extra
    raise ConfigError(f"unknown experiment {cfg.experiment!r}", key="name")


def run(cfg: RunConfig, out_dir: Path | None = None) -> Path:
    out = Path(out_dir if out_dir is not None else cfg.out)
    t0 = time.perf_counter()
    tables, extra = execute(cfg)
    wall = time.perf_counter() - t0
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name in sorted(tables):
        path = out / f"{name}.csv"
        _write_csv(path, SCHEMAS[name], tables[name])
        written.append(path.name)
    manifest = cfg.manifest()
    manifest.update({
        "results": extra,
        "outputs": written,
        "code_version": __version__,
        "numpy_version": np.__version__,
        "wall_time_s": wall,
    })
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=float)
        fh.write("\n")
    log.info("wrote %s to %s in %.1f s", ", ".join(written), out, wall)
    return out


def build_parser():
    ap = argparse.ArgumentParser(prog="simulate", description=__doc__.splitlines()[0])
    ap.add_argument("config", help="path to the run configuration (INI)")
    ap.add_argument("--seed", type=int, help="override the master seed")
    ap.add_argument("--frames", type=int, help="override the frame count")
    ap.add_argument("--out", help="output directory")
    ap.add_argument("--jobs", type=int, help="concurrent sweep jobs")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.frames is not None:
            cfg.frames = args.frames
        if args.jobs is not None:
            cfg.jobs = args.jobs
        validate(cfg)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        run(cfg, args.out)
    except Exception as exc:  # surfaced as a runtime failure with context
        print(f"runtime error in {cfg.experiment}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
