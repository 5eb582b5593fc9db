"""Photon-number statistics and the optical transforms in front of the detector.

Every sampler takes an explicit ``numpy.random.Generator``; nothing here holds
random state of its own.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DEFAULT_CLOCK_HZ = 1.036e9


class ParameterError(ValueError):
    """A physical parameter is outside its admissible range."""


class GeometryError(ValueError):
    """Slot positions or delays do not fit inside the frame."""


def _check_probability(name, value):
    if not (0.0 <= value <= 1.0):
        raise ParameterError(f"{name} must lie in [0, 1], got {value!r}")


@dataclass(frozen=True)
class SourceSpec:
    """Photon-number statistics of one optical pulse.

    ``kind`` is one of ``"coherent"``, ``"thermal"`` or ``"vacuum"``. Thermal
    light with a real ``mode_count`` M is the gamma-mixed Poisson
    (negative-binomial) distribution, whose zero-delay g2 is 1 + 1/M.
    """

    kind: str
    mean_photons: float = 0.0
    mode_count: float = 1.0

    def __post_init__(self):
        if self.kind not in ("coherent", "thermal", "vacuum"):
            raise ParameterError(f"unknown source kind {self.kind!r}")
        mu = float(self.mean_photons)
        if not math.isfinite(mu) or mu < 0:
            raise ParameterError(f"mean_photons must be finite and >= 0, got {self.mean_photons!r}")
        m = float(self.mode_count)
        if not math.isfinite(m) or m < 1:
            raise ParameterError(f"mode_count must be finite and >= 1, got {self.mode_count!r}")
        if self.kind == "vacuum" and mu != 0:
            raise ParameterError("vacuum source cannot carry photons")

    @classmethod
    def coherent(cls, mean_photons: float) -> "SourceSpec":
        return cls("coherent", mean_photons)

    @classmethod
    def thermal(cls, mean_photons: float, mode_count: float = 1.0) -> "SourceSpec":
        return cls("thermal", mean_photons, mode_count)

    @classmethod
    def vacuum(cls) -> "SourceSpec":
        return cls("vacuum")

    @property
    def g2(self) -> float:
        """Zero-delay normalized second-order correlation of the photon number."""
        if self.kind == "thermal":
            return 1.0 + 1.0 / self.mode_count
        return 1.0

    def scaled(self, factor: float) -> "SourceSpec":
        """Same statistics with the mean multiplied by ``factor`` (mode count kept)."""
        if self.kind == "vacuum":
            return self
        return SourceSpec(self.kind, self.mean_photons * factor, self.mode_count)


def sample_photon_numbers(source: SourceSpec, rng: np.random.Generator, size) -> np.ndarray:
    """Vectorized draw of photon numbers, returned as int64."""
    mu = source.mean_photons
    if source.kind == "vacuum" or mu == 0:
        return np.zeros(size, dtype=np.int64)
    if source.kind == "coherent":
        return rng.poisson(mu, size=size).astype(np.int64, copy=False)
    m = source.mode_count
    # negative binomial with real shape M: mean mu, variance mu + mu^2/M
    return rng.negative_binomial(m, m / (m + mu), size=size).astype(np.int64, copy=False)


def sample_photon_number(source: SourceSpec, rng: np.random.Generator) -> int:
    return int(sample_photon_numbers(source, rng, 1)[0])


def attenuate(n, transmission: float, rng: np.random.Generator):
    """Binomial thinning: each photon survives independently with ``transmission``."""
    _check_probability("transmission", transmission)
    out = rng.binomial(n, transmission)
    return int(out) if np.ndim(out) == 0 else out.astype(np.int64, copy=False)


def beamsplit(n, reflectance: float, rng: np.random.Generator):
    """Split photons between two output ports; returns ``(reflected, transmitted)``."""
    _check_probability("reflectance", reflectance)
    n_a = rng.binomial(n, reflectance)
    n_b = np.subtract(n, n_a)
    if np.ndim(n_a) == 0:
        return int(n_a), int(n_b)
    return n_a.astype(np.int64, copy=False), n_b.astype(np.int64, copy=False)


@dataclass(frozen=True)
class Slot:
    position: int
    source: SourceSpec


@dataclass(frozen=True)
class PulseTrain:
    """A frame of ``frame_gates`` gates that repeats identically.

    Gate index g belongs to slot position ``g % frame_gates``. Photons of a
    slot all land in that single gate.
    """

    frame_gates: int
    slots: tuple
    clock_hz: float = DEFAULT_CLOCK_HZ

    def __post_init__(self):
        if int(self.frame_gates) != self.frame_gates or self.frame_gates < 1:
            raise GeometryError(f"frame_gates must be a positive integer, got {self.frame_gates!r}")
        if not (self.clock_hz > 0 and math.isfinite(self.clock_hz)):
            raise ParameterError(f"clock_hz must be positive, got {self.clock_hz!r}")
        object.__setattr__(self, "slots", tuple(sorted(self.slots, key=lambda s: s.position)))
        seen = set()
        for slot in self.slots:
            if not (0 <= slot.position < self.frame_gates):
                raise GeometryError(
                    f"slot position {slot.position} outside frame of {self.frame_gates} gates")
            if slot.position in seen:
                raise GeometryError(f"duplicate slot position {slot.position}")
            seen.add(slot.position)

    @property
    def positions(self) -> np.ndarray:
        return np.array([s.position for s in self.slots], dtype=np.int64)

    @property
    def gate_period(self) -> float:
        return 1.0 / self.clock_hz

    @property
    def frame_rate(self) -> float:
        return self.clock_hz / self.frame_gates

    def sample_frames(self, frames: int, rng: np.random.Generator) -> np.ndarray:
        """Photon numbers for ``frames`` consecutive frames, shape ``(frames, n_slots)``."""
        out = np.empty((frames, len(self.slots)), dtype=np.int64)
        for j, slot in enumerate(self.slots):
            out[:, j] = sample_photon_numbers(slot.source, rng, frames)
        return out


def build_periodic_train(frame_gates: int, source: SourceSpec, position: int = 0,
                         clock_hz: float = DEFAULT_CLOCK_HZ) -> PulseTrain:
    """One pulse per frame, e.g. every-other-gate illumination with ``frame_gates=2``."""
    return PulseTrain(frame_gates, (Slot(position, source),), clock_hz)


def build_double_pulse_train(frame_gates: int, separation: int, source: SourceSpec,
                             clock_hz: float = DEFAULT_CLOCK_HZ) -> PulseTrain:
    """Two equal pulses at gate positions 0 and ``separation`` of each frame."""
    if frame_gates < 2:
        raise GeometryError(f"double-pulse frame needs at least 2 gates, got {frame_gates}")
    if not (1 <= separation < frame_gates):
        raise GeometryError(
            f"separation must satisfy 1 <= separation < {frame_gates}, got {separation}")
    return PulseTrain(frame_gates, (Slot(0, source), Slot(separation, source)), clock_hz)


@dataclass(frozen=True)
class MultiplexedTrain:
    """Output of an unbalanced Mach-Zehnder fed by a single-slot train.

    Each parent photon takes the short arm (gate 0) or the long arm (gate
    ``delay``) with probability 1/2 and then survives the output coupler with
    probability ``survival``. The two slot counts share the parent pulse and
    are therefore correlated for non-Poissonian light.
    """

    parent: PulseTrain
    delay: int
    survival: float = 0.5

    @property
    def frame_gates(self) -> int:
        return self.parent.frame_gates

    @property
    def clock_hz(self) -> float:
        return self.parent.clock_hz

    @property
    def source(self) -> SourceSpec:
        return self.parent.slots[0].source

    @property
    def positions(self) -> np.ndarray:
        return np.array([0, self.delay], dtype=np.int64)

    @property
    def slots(self) -> tuple:
        # marginal statistics only; the joint law lives in sample_frames
        s = self.source.scaled(self.survival / 2)
        return (Slot(0, s), Slot(self.delay, s))

    def sample_frames(self, frames: int, rng: np.random.Generator) -> np.ndarray:
        n = sample_photon_numbers(self.source, rng, frames)
        p_arm = self.survival / 2
        short = rng.binomial(n, p_arm)
        # conditional on not taking the short arm
        long_ = rng.binomial(n - short, p_arm / (1 - p_arm))
        return np.stack([short, long_], axis=1).astype(np.int64, copy=False)


def apply_amzi(train: PulseTrain, delay: int, survival: float = 0.5) -> MultiplexedTrain:
    """Time-multiplex a single-slot train onto gate positions 0 and ``delay``."""
    if len(train.slots) != 1 or train.slots[0].position != 0:
        raise GeometryError("AMZI input must carry a single slot at position 0")
    if not (1 <= delay < train.frame_gates):
        raise GeometryError(
            f"AMZI delay must satisfy 1 <= delay < {train.frame_gates}, got {delay}")
    _check_probability("survival", survival)
    return MultiplexedTrain(train, int(delay), float(survival))
