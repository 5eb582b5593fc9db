"""Self-differencing gated APD: per-gate avalanche process and click rule.

Avalanches come from three independent hazards in each gate: photons (each
detected with probability ``efficiency``), dark counts, and trap release
(afterpulsing). The self-differencing output suppresses an avalanche whose
preceding gate also avalanched, except with a residual probability.

Traces are stored sparsely as sorted global gate indices so that runs of
10^8-10^9 gates stay cheap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import _kernel
from .sources import DEFAULT_CLOCK_HZ, ParameterError

CHUNK_GATES = 1 << 22


@dataclass(frozen=True)
class DetectorSpec:
    efficiency: float = 0.10
    dark_prob: float = 1.67e-5
    afterpulse_total: float = 0.05
    afterpulse_decay: float = 10.0
    sd_residual: float = 0.0
    sd_residual_per_photon: float = 0.0
    clock_hz: float = DEFAULT_CLOCK_HZ

    def __post_init__(self):
        for name in ("efficiency", "dark_prob", "sd_residual"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ParameterError(f"{name} must lie in [0, 1], got {v!r}")
        if not (0.0 <= self.afterpulse_total < 1.0):
            raise ParameterError(
                f"afterpulse_total must lie in [0, 1), got {self.afterpulse_total!r}")
        if not (self.afterpulse_decay > 0 and math.isfinite(self.afterpulse_decay)):
            raise ParameterError(
                f"afterpulse_decay must be finite and > 0, got {self.afterpulse_decay!r}")
        if not (0.0 <= self.sd_residual_per_photon <= 1.0):
            raise ParameterError(
                f"sd_residual_per_photon must lie in [0, 1], got {self.sd_residual_per_photon!r}")
        if not (self.clock_hz > 0 and math.isfinite(self.clock_hz)):
            raise ParameterError(f"clock_hz must be positive, got {self.clock_hz!r}")

    @property
    def gate_period(self) -> float:
        return 1.0 / self.clock_hz

    @property
    def dead_time(self) -> float:
        """Two gate periods: the gate after an avalanche is blind."""
        return 2.0 / self.clock_hz

    @property
    def afterpulse_decay_factor(self) -> float:
        return math.exp(-1.0 / self.afterpulse_decay)

    @property
    def afterpulse_increment(self) -> float:
        """Hazard added to the next gate by one avalanche; the tail sums to the total."""
        return self.afterpulse_total * (1.0 - self.afterpulse_decay_factor)

    def residual(self, n=0):
        return min(1.0, self.sd_residual + self.sd_residual_per_photon * n)

    def with_(self, **changes) -> "DetectorSpec":
        return replace(self, **changes)


@dataclass(frozen=True)
class DetectorState:
    trap_hazard: float = 0.0
    previous_avalanche: bool = False


@dataclass(frozen=True)
class EventTrace:
    positions: np.ndarray
    total_gates: int
    frame_gates: int

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=np.int64)
        object.__setattr__(self, "positions", pos)
        if pos.size and (pos[0] < 0 or pos[-1] >= self.total_gates):
            raise ValueError("event position outside trace")

    @classmethod
    def from_bool(cls, events, frame_gates: int | None = None):
        events = np.asarray(events, dtype=bool)
        return cls(np.flatnonzero(events), events.size,
                   frame_gates if frame_gates is not None else events.size)

    def to_bool(self) -> np.ndarray:
        out = np.zeros(self.total_gates, dtype=bool)
        out[self.positions] = True
        return out

    def __len__(self):
        return self.total_gates

    @property
    def count(self) -> int:
        return int(self.positions.size)

    @property
    def frames(self) -> int:
        return self.total_gates // self.frame_gates


class AvalancheTrace(EventTrace):
    """Raw avalanches before the self-differencing stage."""


class ClickTrace(EventTrace):
    """Detector output after self-differencing."""

    def has_consecutive(self) -> bool:
        return bool(np.any(np.diff(self.positions) == 1))


def avalanche_probability(n, spec: DetectorSpec, state: DetectorState = DetectorState()):
    """Probability that a gate holding ``n`` photons avalanches."""
    quiet = (1.0 - spec.dark_prob) * np.power(1.0 - spec.efficiency, n) * (1.0 - state.trap_hazard)
    return 1.0 - quiet


def step_gate(state: DetectorState, n: int, spec: DetectorSpec, rng: np.random.Generator):
    """Advance one gate; returns ``(new_state, avalanched)``.

    An avalanche adds ``afterpulse_increment`` to the hazard seen by the
    following gate, on top of the decayed hazard already present. A lone
    avalanche therefore contributes ``afterpulse_total`` summed over all later
    gates, and the hazard stays below ``afterpulse_total`` < 1 under any
    avalanche history.
    """
    aval = bool(rng.random() < avalanche_probability(n, spec, state))
    h = state.trap_hazard * spec.afterpulse_decay_factor
    if aval:
        h += spec.afterpulse_increment
    return DetectorState(h, aval), aval


def self_difference(avalanches, eps=0.0, rng: np.random.Generator | None = None,
                    frame_gates: int | None = None) -> ClickTrace:
    """Cancel every avalanche that directly follows another one.

    A cancelled avalanche still clicks with probability ``eps`` (scalar, or an
    array aligned with the avalanche positions). Gate -1 counts as quiet.
    Accepts an ``AvalancheTrace`` or a boolean per-gate sequence.
    """
    if not isinstance(avalanches, EventTrace):
        avalanches = AvalancheTrace.from_bool(avalanches, frame_gates)
    pos = avalanches.positions
    follows = np.zeros(pos.size, dtype=bool)
    if pos.size > 1:
        follows[1:] = np.diff(pos) == 1
    keep = ~follows
    eps = np.broadcast_to(np.asarray(eps, dtype=float), pos.shape)
    if np.any(eps[follows] > 0):
        if rng is None:
            raise ValueError("a generator is required when eps > 0")
        idx = np.flatnonzero(follows)
        keep[idx] = rng.random(idx.size) < eps[idx]
    return ClickTrace(pos[keep], avalanches.total_gates, avalanches.frame_gates)


def _as_rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def iter_detector(train, spec: DetectorSpec, frames: int, seed, keep_avalanches=False,
                  skip_empty=True, chunk_gates: int = CHUNK_GATES):
    """Stream the detector response chunk by chunk.

    Yields ``(first_frame, n_frames, clicks, avalanches)`` with global gate
    indices; ``avalanches`` is None unless requested. Photon numbers and
    detector decisions use two independent child streams of ``seed``.
    """
    if frames < 1:
        raise ParameterError(f"frames must be >= 1, got {frames}")
    photon_rng, detector_rng = _as_rng(seed).spawn(2)
    G = int(train.frame_gates)
    positions = np.ascontiguousarray(train.positions, dtype=np.int64)
    chunk_frames = max(1, chunk_gates // G)
    buf_len = chunk_frames * G
    clicks = np.empty(buf_len, dtype=np.int64)
    avals = np.empty(buf_len if keep_avalanches else 1, dtype=np.int64)
    h, prev = 0.0, False
    done = 0
    while done < frames:
        nf = min(chunk_frames, frames - done)
        photons = np.ascontiguousarray(train.sample_frames(nf, photon_rng))
        nc, na, h, prev = _kernel.run_chunk(
            detector_rng, photons, positions, G, done * G,
            spec.efficiency, spec.dark_prob, spec.afterpulse_increment,
            spec.afterpulse_decay_factor, spec.sd_residual, spec.sd_residual_per_photon,
            h, prev, skip_empty, clicks, avals, keep_avalanches)
        yield done, nf, clicks[:nc].copy(), (avals[:na].copy() if keep_avalanches else None)
        done += nf


def run_detector(train, spec: DetectorSpec, frames: int, seed=None,
                 keep_avalanches: bool = False, skip_empty: bool = True):
    """Simulate ``frames`` frames of ``train`` and return the click trace.

    With ``keep_avalanches`` the pre-differencing trace is returned as well,
    as ``(clicks, avalanches)``.
    """
    G = int(train.frame_gates)
    click_parts, aval_parts = [], []
    for _, _, c, a in iter_detector(train, spec, frames, seed, keep_avalanches, skip_empty):
        click_parts.append(c)
        if keep_avalanches:
            aval_parts.append(a)
    total = frames * G
    clicks = ClickTrace(np.concatenate(click_parts), total, G)
    if keep_avalanches:
        return clicks, AvalancheTrace(np.concatenate(aval_parts), total, G)
    return clicks
