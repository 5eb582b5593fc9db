"""Drivers for the double-pulse, delay-sweep, saturation and single-detector HBT runs.

Every sweep point is an independent job seeded by ``job_seed(seed, index)``,
so results do not depend on execution order or on ``jobs``.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .analysis import (
    G2Estimate,
    binomial_stderr,
    count_common,
    estimate_g2,
    estimate_proportion,
    solve_flux_for_click_probability,
)
from .detector import DetectorSpec, iter_detector
from .sources import (
    GeometryError,
    ParameterError,
    SourceSpec,
    apply_amzi,
    build_double_pulse_train,
    build_periodic_train,
)

MIN_DEADTIME_FRAMES = 10_000


def job_seed(master_seed: int, job_index: int) -> np.random.SeedSequence:
    """Seed for sweep point ``job_index``: numpy's SeedSequence hash of the pair."""
    return np.random.SeedSequence([int(master_seed), int(job_index)])


def _map(fn, arglist, jobs=1):
    if jobs is None or jobs <= 1 or len(arglist) <= 1:
        return [fn(*args) for args in arglist]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(fn, *args) for args in arglist]
        return [f.result() for f in futures]


# ---------------------------------------------------------------- double pulse

@dataclass(frozen=True)
class DeadTimeResult:
    """Double-pulse statistics at one flux point."""

    mu: float
    separation: int
    frames: int
    n1: int
    n2: int
    n12: int

    @property
    def P1(self):
        return self.n1 / self.frames

    @property
    def P2(self):
        return self.n2 / self.frames

    @property
    def P12(self):
        return self.n12 / self.frames

    @property
    def P2given1(self):
        return self.n12 / self.n1 if self.n1 else math.nan

    def ci(self, name):
        """95% Wilson interval for ``P1``, ``P2``, ``P12`` or ``P2given1``."""
        k, n = {"P1": (self.n1, self.frames), "P2": (self.n2, self.frames),
                "P12": (self.n12, self.frames), "P2given1": (self.n12, self.n1)}[name]
        if n == 0:
            return (0.0, 1.0)
        return estimate_proportion(k, n)[1]

    def stderr(self, name):
        p = getattr(self, name)
        n = self.n1 if name == "P2given1" else self.frames
        return float(binomial_stderr(p, n)) if n else math.inf


def _double_pulse_counts(spec, mu, separation, frame_gates, frames, seed):
    train = build_double_pulse_train(frame_gates, separation, SourceSpec.coherent(mu),
                                     spec.clock_hz)
    n1 = n2 = n12 = 0
    for _, _, clicks, _ in iter_detector(train, spec, frames, seed):
        off = clicks % frame_gates
        f1 = clicks[off == 0] // frame_gates
        f2 = clicks[off == separation] // frame_gates
        n1 += f1.size
        n2 += f2.size
        n12 += count_common(f1, f2)
    return DeadTimeResult(float(mu), int(separation), int(frames), n1, n2, n12)


def run_dead_time(spec: DetectorSpec, mu_list, separation: int = 2, frame_gates: int = 64,
                  frames: int = 10**6, seed: int = 0, jobs: int = 1) -> list[DeadTimeResult]:
    """Double-pulse runs over a flux sweep; one result per ``mu``."""
    if frames < MIN_DEADTIME_FRAMES:
        raise ParameterError(f"dead-time runs need >= {MIN_DEADTIME_FRAMES} frames, got {frames}")
    # validate geometry before launching anything
    build_double_pulse_train(frame_gates, separation, SourceSpec.vacuum(), spec.clock_hz)
    args = [(spec, mu, separation, frame_gates, frames, job_seed(seed, i))
            for i, mu in enumerate(mu_list)]
    return _map(_double_pulse_counts, args, jobs)


def run_delay_sweep(spec: DetectorSpec, separations, mu: float | None = None,
                    click_probability: float = 0.36, frame_gates: int = 64,
                    frames: int = 10**6, seed: int = 0, jobs: int = 1) -> list[DeadTimeResult]:
    """Joint detection probability versus pulse separation at fixed flux.

    Unless ``mu`` is given it is solved from the single-pulse
    ``click_probability``.
    """
    if frames < MIN_DEADTIME_FRAMES:
        raise ParameterError(f"delay sweeps need >= {MIN_DEADTIME_FRAMES} frames, got {frames}")
    if mu is None:
        mu = solve_flux_for_click_probability(click_probability, spec.efficiency, spec.dark_prob)
    for d in separations:
        build_double_pulse_train(frame_gates, d, SourceSpec.vacuum(), spec.clock_hz)
    args = [(spec, mu, d, frame_gates, frames, job_seed(seed, i))
            for i, d in enumerate(separations)]
    return _map(_double_pulse_counts, args, jobs)


# ------------------------------------------------------------------ saturation

@dataclass(frozen=True)
class RatePoint:
    mu: float
    clicks: int
    gates: int
    clock_hz: float

    @property
    def rate_hz(self):
        return self.clicks / self.gates * self.clock_hz

    @property
    def ci(self):
        lo, hi = estimate_proportion(self.clicks, self.gates)[1]
        return lo * self.clock_hz, hi * self.clock_hz

    @property
    def stderr(self):
        return float(binomial_stderr(self.clicks / self.gates, self.gates)) * self.clock_hz


@dataclass(frozen=True)
class RateCurve:
    points: list
    illumination_hz: float
    clock_hz: float
    asymptote_hz: float | None = None
    asymptote_ci: tuple | None = None
    asymptote_mu: tuple = ()

    @property
    def mu(self):
        return np.array([p.mu for p in self.points])

    @property
    def rate_hz(self):
        return np.array([p.rate_hz for p in self.points])

    @property
    def stderr(self):
        return np.array([p.stderr for p in self.points])


def _rate_point(spec, mu, frame_gates, frames, seed):
    train = build_periodic_train(frame_gates, SourceSpec.coherent(mu), 0, spec.clock_hz)
    clicks = sum(c.size for _, _, c, _ in iter_detector(train, spec, frames, seed))
    return RatePoint(float(mu), int(clicks), int(frames * frame_gates), spec.clock_hz)


def run_saturation(spec: DetectorSpec, mu_list, frames: int = 5 * 10**7, seed: int = 0,
                   frame_gates: int = 2, saturation_level: float = 1e-3,
                   jobs: int = 1) -> RateCurve:
    """Count rate versus flux for one pulse every ``frame_gates`` gates.

    The asymptote pools every point whose illuminated gates avalanche with
    probability above ``1 - saturation_level`` (exp(-eta mu) < level).
    """
    if frames < 1:
        raise ParameterError(f"frames must be >= 1, got {frames}")
    args = [(spec, mu, frame_gates, frames, job_seed(seed, i)) for i, mu in enumerate(mu_list)]
    points = _map(_rate_point, args, jobs)
    sat = [p for p in points if math.exp(-spec.efficiency * p.mu) < saturation_level]
    asym = ci = None
    if sat:
        clicks = sum(p.clicks for p in sat)
        gates = sum(p.gates for p in sat)
        frac, (lo, hi) = estimate_proportion(clicks, gates)
        asym, ci = frac * spec.clock_hz, (lo * spec.clock_hz, hi * spec.clock_hz)
    return RateCurve(points, spec.clock_hz / frame_gates, spec.clock_hz, asym, ci,
                     tuple(p.mu for p in sat))


# ------------------------------------------------------------------------- HBT

def amzi_input_for_slot_mean(slot_source: SourceSpec, survival: float = 0.5) -> SourceSpec:
    """Parent pulse whose AMZI output carries ``slot_source`` in each time slot.

    Binomial thinning keeps the statistics family and mode count, so only the
    mean is rescaled.
    """
    if not 0 < survival <= 1:
        raise ParameterError(f"survival must lie in (0, 1], got {survival!r}")
    return slot_source.scaled(2.0 / survival)


@dataclass(frozen=True)
class G2Result:
    lags: np.ndarray
    g2: np.ndarray
    stderr: np.ndarray
    rate_a: float
    rate_b: float
    frames: int
    pulse_period: int
    delay: int
    estimate: G2Estimate = field(repr=False, default=None)
    flags: dict = field(default_factory=dict)

    def at(self, lag):
        i = int(np.flatnonzero(self.lags == lag)[0])
        return float(self.g2[i]), float(self.stderr[i])


def run_hbt_g2(parent_source: SourceSpec, spec: DetectorSpec, pulse_period: int = 8,
               delay: int = 4, frames: int = 10**6, max_lag: int = 10, seed: int = 0,
               survival: float = 0.5, normalization: str = "singles") -> G2Result:
    """Single-detector HBT: AMZI time multiplexing, gate demux, g2 over pulse lags.

    Channel A is gate 0 of each pulse period, channel B is gate ``delay``.
    """
    if not (1 <= delay < pulse_period):
        raise GeometryError(
            f"delay must satisfy 1 <= delay < pulse_period={pulse_period}, got {delay}")
    train = apply_amzi(build_periodic_train(pulse_period, parent_source, 0, spec.clock_hz),
                       delay, survival)
    a_parts, b_parts = [], []
    for _, _, clicks, _ in iter_detector(train, spec, frames, seed):
        off = clicks % pulse_period
        a_parts.append(clicks[off == 0] // pulse_period)
        b_parts.append(clicks[off == delay] // pulse_period)
    a_idx = np.concatenate(a_parts)
    b_idx = np.concatenate(b_parts)
    est = estimate_g2(a_idx, b_idx, frames, max_lag, normalization)
    slot_mean = parent_source.mean_photons * survival / 2
    x = spec.efficiency * slot_mean
    flags = {
        "mean_photons_per_slot": slot_mean,
        # relative shortfall of the click probability from linear response
        "pileup_fraction": 0.0 if x == 0 else 1.0 - (-math.expm1(-x)) / x,
        "normalization": normalization,
    }
    return G2Result(est.lags, est.g2, est.stderr, a_idx.size / frames, b_idx.size / frames,
                    frames, pulse_period, delay, est, flags)
