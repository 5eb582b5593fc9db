"""Run configuration: flat INI sections ``[detector]``, ``[source]``, ``[experiment]``.

Example::

    [detector]
    efficiency = 0.14

    [experiment]
    name = saturation
    mu_list = 0, 0.01, 0.1, 1, 10, 100

Every key is validated before any simulation starts. Errors carry the key
name and the line it was found on.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import asdict, dataclass, field, fields

from .detector import DetectorSpec
from .sources import ParameterError, SourceSpec

EXPERIMENTS = ("deadtime", "delaysweep", "saturation", "hbt")

DETECTOR_KEYS = {f.name: float for f in fields(DetectorSpec)}
SOURCE_KEYS = {"kind": str, "mean_photons": float, "mode_count": float}


def _floats(text):
    return [float(t) for t in re.split(r"[,\s]+", text.strip()) if t]


def _ints(text):
    out = []
    for tok in re.split(r"[,\s]+", text.strip()):
        if not tok:
            continue
        if ".." in tok:
            a, b = tok.split("..")
            out.extend(range(int(a), int(b) + 1))
        else:
            out.append(int(tok))
    return out


def _int(text):
    return int(float(text)) if re.fullmatch(r"[0-9.]+e[0-9]+", text.strip(), re.I) else int(text)


_COMMON = {"name": str, "frames": _int, "seed": _int, "out": str, "jobs": _int}
EXPERIMENT_KEYS = {
    "deadtime": {**_COMMON, "mu_list": _floats, "separation": _int, "frame_gates": _int},
    "delaysweep": {**_COMMON, "separations": _ints, "mu": float, "click_probability": float,
                   "frame_gates": _int},
    "saturation": {**_COMMON, "mu_list": _floats, "frame_gates": _int,
                   "saturation_level": float},
    "hbt": {**_COMMON, "pulse_period": _int, "delay": _int, "max_lag": _int, "survival": float,
            "normalization": str, "flux_reference": str},
}

EXPERIMENT_DEFAULTS = {
    "deadtime": {"mu_list": [0.0, 0.01, 0.1, 1.0, 3.0, 10.0, 100.0], "separation": 2,
                 "frame_gates": 64, "frames": 10**6},
    "delaysweep": {"separations": list(range(1, 11)), "mu": None, "click_probability": 0.36,
                   "frame_gates": 64, "frames": 10**6},
    "saturation": {"mu_list": [0.0, 0.001, 0.01, 0.1, 1.0, 10.0, 100.0], "frame_gates": 2,
                   "saturation_level": 1e-3, "frames": 5 * 10**7},
    "hbt": {"pulse_period": 8, "delay": 4, "max_lag": 10, "survival": 0.5,
            "normalization": "singles", "flux_reference": "detector", "frames": 125 * 10**5},
}


class ConfigError(ValueError):
    def __init__(self, message, key=None, line=None):
        self.key = key
        self.line = line
        where = ""
        if key is not None:
            where += f"`{key}`"
        if line is not None:
            where += f" (line {line})"
        super().__init__(f"{where}: {message}" if where else message)


@dataclass
class RunConfig:
    experiment: str
    detector: DetectorSpec
    source: SourceSpec | None
    params: dict
    frames: int
    seed: int = 0
    out: str = "results"
    jobs: int = 1
    raw: dict = field(default_factory=dict, repr=False)

    def manifest(self) -> dict:
        return {
            "experiment": self.experiment,
            "detector": asdict(self.detector),
            "source": asdict(self.source) if self.source is not None else None,
            "parameters": dict(self.params),
            "frames": self.frames,
            "seed": self.seed,
            "jobs": self.jobs,
        }


def _line_index(text):
    """Map (section, key) and (section, None) to 1-based line numbers."""
    index = {}
    section = None
    for no, line in enumerate(text.splitlines(), 1):
        m = re.match(r"\s*\[([^\]]+)\]", line)
        if m:
            section = m.group(1).strip()
            index.setdefault((section, None), no)
            continue
        m = re.match(r"\s*([^=:#;\s][^=:]*?)\s*[=:]", line)
        if m and section is not None:
            index.setdefault((section, m.group(1).strip().lower()), no)
    return index


def parse_config(text: str) -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}", line=getattr(exc, "lineno", None)) from exc
    lines = _line_index(text)

    def line(section, key=None):
        return lines.get((section, key))

    for sec in parser.sections():
        if sec not in ("detector", "source", "experiment"):
            raise ConfigError(f"unknown section [{sec}]", key=sec, line=line(sec))
    if not parser.has_section("experiment"):
        raise ConfigError("missing [experiment] section", key="experiment")
    exp = parser["experiment"]
    if "name" not in exp:
        raise ConfigError("missing required key", key="name", line=line("experiment"))
    name = exp["name"].strip()
    if name not in EXPERIMENTS:
        raise ConfigError(f"experiment must be one of {EXPERIMENTS}, got {name!r}",
                          key="name", line=line("experiment", "name"))

    def convert(section, key, value, conv):
        try:
            return conv(value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"cannot parse {value!r}: {exc}", key=key,
                              line=line(section, key)) from exc

    def read(section, allowed):
        out = {}
        if not parser.has_section(section):
            return out
        for key, value in parser[section].items():
            if key not in allowed:
                raise ConfigError(f"unknown key in [{section}]", key=key, line=line(section, key))
            out[key] = convert(section, key, value, allowed[key])
        return out

    det_vals = read("detector", DETECTOR_KEYS)
    try:
        detector = DetectorSpec(**det_vals)
    except ParameterError as exc:
        key = str(exc).split()[0]
        raise ConfigError(str(exc), key=key, line=line("detector", key)) from exc

    source = None
    if parser.has_section("source"):
        if name != "hbt":
            raise ConfigError(f"[source] is not used by experiment {name!r}", key="source",
                              line=line("source"))
        src_vals = read("source", SOURCE_KEYS)
        if "kind" not in src_vals:
            raise ConfigError("missing required key", key="kind", line=line("source"))
        try:
            source = SourceSpec(src_vals["kind"], src_vals.get("mean_photons", 0.0),
                                src_vals.get("mode_count", 1.0))
        except ParameterError as exc:
            bad = next((k for k in SOURCE_KEYS if k in str(exc)), "kind")
            raise ConfigError(str(exc), key=bad, line=line("source", bad)) from exc
    elif name == "hbt":
        raise ConfigError("hbt needs a [source] section", key="source")

    vals = read("experiment", EXPERIMENT_KEYS[name])
    params = {k: v for k, v in EXPERIMENT_DEFAULTS[name].items()}
    params.update({k: v for k, v in vals.items() if k not in _COMMON})
    frames = vals.get("frames", params.pop("frames"))
    params.pop("frames", None)
    cfg = RunConfig(name, detector, source, params, frames, vals.get("seed", 0),
                    vals.get("out", "results"), vals.get("jobs", 1), vals)
    validate(cfg, line)
    return cfg


def validate(cfg: RunConfig, line=lambda section, key=None: None):
    """Range and geometry checks; raises ConfigError."""
    p = cfg.params

    def bad(key, msg):
        raise ConfigError(msg, key=key, line=line("experiment", key))

    if cfg.frames < 1:
        bad("frames", "must be >= 1")
    if cfg.jobs < 1:
        bad("jobs", "must be >= 1")
    for key in ("mu_list",):
        if key in p and any(m < 0 or m != m for m in p[key]):
            bad(key, "photon fluxes must be >= 0")
    if cfg.experiment in ("deadtime", "delaysweep") and cfg.frames < 10_000:
        bad("frames", "double-pulse runs need >= 10000 frames")
    if cfg.experiment == "deadtime":
        if not 1 <= p["separation"] < p["frame_gates"]:
            bad("separation", f"must satisfy 1 <= separation < frame_gates={p['frame_gates']}")
    if cfg.experiment == "delaysweep":
        for d in p["separations"]:
            if not 1 <= d < p["frame_gates"]:
                bad("separations", f"separation {d} does not fit a {p['frame_gates']}-gate frame")
        if not cfg.detector.dark_prob <= p["click_probability"] < 1:
            bad("click_probability", "must lie in [dark_prob, 1)")
        if p["mu"] is not None and p["mu"] < 0:
            bad("mu", "must be >= 0")
    if cfg.experiment == "saturation":
        if p["frame_gates"] < 1:
            bad("frame_gates", "must be >= 1")
        if not 0 < p["saturation_level"] < 1:
            bad("saturation_level", "must lie in (0, 1)")
    if cfg.experiment == "hbt":
        if not 1 <= p["delay"] < p["pulse_period"]:
            bad("delay", f"must satisfy 1 <= delay < pulse_period={p['pulse_period']}")
        if p["max_lag"] < 0 or p["max_lag"] * 2 >= cfg.frames:
            bad("max_lag", "must be >= 0 and well below the number of frames")
        if not 0 < p["survival"] <= 1:
            bad("survival", "must lie in (0, 1]")
        if p["normalization"] not in ("singles", "long_lag"):
            bad("normalization", "must be 'singles' or 'long_lag'")
        if p["flux_reference"] not in ("detector", "input"):
            bad("flux_reference", "must be 'detector' or 'input'")


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())

