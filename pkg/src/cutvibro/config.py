"""Scenario configuration: INI sections, built-in presets, validation.

A file may name a preset under ``[scenario] base = <name>``; keys it sets
override that preset. Without a base the paper-scale defaults apply and the
``[bands]`` section is required.
"""

from __future__ import annotations

import configparser
import dataclasses
import hashlib
import io
from dataclasses import dataclass, field, fields
from pathlib import Path

from .spectrum import Band


@dataclass
class MeshConfig:
    h: float = 2e-3
    inlet_length: float = 0.1
    design_length: float = 0.3
    outlet_length: float = 0.1
    height: float = 0.1


@dataclass
class MaterialConfig:
    E: float = 50e6
    nu: float = 0.4
    rho_s: float = 1000.0
    c_a: float = 343.0
    rho_a: float = 1.21
    alpha_void: float = 1e-8
    zeta: float = 0.1
    f1: float = 1600.0
    f2: float = 2200.0


@dataclass
class TimeConfig:
    dt: float = 2e-5
    steps: int = 1000


@dataclass
class SignalConfig:
    kind: str = "white-noise"
    seed: int = 0
    amplitude: float = 1.0
    frequency: float = 2000.0
    path: str = ""


@dataclass
class DesignConfig:
    filter_radius: float = 8e-3
    r1: int = 7
    r2: int = 7
    lx: float = 0.1
    ly: float = 0.1
    threshold: float = 0.01
    noise: float = 0.0


@dataclass
class BandConfig:
    pass_band: str = ""
    stop_band: str = ""
    a: float = 1.0
    b: float = 1e-3


@dataclass
class OptimizerConfig:
    iterations: int = 400
    c: float = 1000.0
    asyinit: float = 0.5
    asydecr: float = 0.7
    asyincr: float = 1.2
    move: float = 0.0
    normalize: bool = False
    snapshot_every: int = 50


@dataclass
class OutputConfig:
    directory: str = "out"
    cache: str = ""
    harmonic: bool = False


# INI section name -> (attribute, dataclass); band keys are spelled pass/stop in files
SECTIONS = {
    "mesh": ("mesh", MeshConfig),
    "material": ("material", MaterialConfig),
    "time": ("time", TimeConfig),
    "signal": ("signal", SignalConfig),
    "design": ("design", DesignConfig),
    "bands": ("bands", BandConfig),
    "optimizer": ("optimizer", OptimizerConfig),
    "output": ("output", OutputConfig),
}
_KEY_ALIASES = {"bands": {"pass": "pass_band", "stop": "stop_band"}}
SIGNAL_KINDS = ("white-noise", "sine", "file")


@dataclass
class ScenarioConfig:
    name: str = "custom"
    mesh: MeshConfig = field(default_factory=MeshConfig)
    material: MaterialConfig = field(default_factory=MaterialConfig)
    time: TimeConfig = field(default_factory=TimeConfig)
    signal: SignalConfig = field(default_factory=SignalConfig)
    design: DesignConfig = field(default_factory=DesignConfig)
    bands: BandConfig = field(default_factory=BandConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    @property
    def df(self) -> float:
        return 1.0 / (self.time.steps * self.time.dt)

    def band_objects(self) -> list[Band]:
        out = []
        if self.bands.pass_band:
            out.append(Band.from_hz(self.bands.pass_band, self.bands.a, self.df))
        if self.bands.stop_band:
            out.append(Band.from_hz(self.bands.stop_band, self.bands.b, self.df))
        return out

    def validate(self) -> "ScenarioConfig":
        if not self.time.dt > 0:
            raise ValueError("time.dt must be positive")
        if self.time.steps < 2:
            raise ValueError("time.steps must be at least 2")
        if not self.mesh.h > 0:
            raise ValueError("mesh.h must be positive")
        if self.design.filter_radius < 0:
            raise ValueError("design.filter_radius must be non-negative")
        if self.signal.kind not in SIGNAL_KINDS:
            raise ValueError(f"signal.kind must be one of {SIGNAL_KINDS}")
        if self.signal.kind == "file" and not self.signal.path:
            raise ValueError("signal.path is required for kind = file")
        if not self.bands.pass_band and not self.bands.stop_band:
            raise ValueError("bands: at least one of pass/stop must be given")
        if not (self.bands.a > 0 and self.bands.b > 0):
            raise ValueError("band targets a and b must be positive")
        if self.optimizer.iterations < 0:
            raise ValueError("optimizer.iterations must be non-negative")
        bands = self.band_objects()
        nyq = self.time.steps // 2
        for band in bands:
            if max(band.bins) > nyq:
                raise ValueError(f"band {band.text!r} exceeds the Nyquist bin {nyq}")
        if len(bands) == 2 and set(bands[0].bins) & set(bands[1].bins):
            raise ValueError("pass and stop bands overlap")
        return self

    # -- serialization ----------------------------------------------------
    def to_ini(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        cp["scenario"] = {"name": self.name}
        for sec, (attr, _) in SECTIONS.items():
            inv = {v: k for k, v in _KEY_ALIASES.get(sec, {}).items()}
            obj = getattr(self, attr)
            cp[sec] = {inv.get(f.name, f.name): _fmt(getattr(obj, f.name)) for f in fields(obj)}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    def digest(self) -> str:
        return hashlib.sha256(self.to_ini().encode()).hexdigest()


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _convert(value: str, typ, where: str):
    try:
        if typ is bool or typ == "bool":
            low = value.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(value)
        if typ is int or typ == "int":
            return int(value)
        if typ is float or typ == "float":
            return float(value)
        return value.strip()
    except ValueError:
        raise ValueError(f"{where}: cannot parse {value!r}") from None


def parse_ini(text: str, source: str = "<string>") -> ScenarioConfig:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    cp.read_string(text, source=source)
    base = cp.get("scenario", "base", fallback="")
    cfg = preset(base) if base else ScenarioConfig()
    if not base and not cp.has_section("bands"):
        raise ValueError(f"{source}: missing [bands] section (or [scenario] base)")
    cfg.name = cp.get("scenario", "name", fallback=base or cfg.name)
    for sec in cp.sections():
        if sec == "scenario":
            unknown = set(cp[sec]) - {"base", "name"}
            if unknown:
                raise ValueError(f"{source}: unknown keys in [scenario]: {sorted(unknown)}")
            continue
        if sec not in SECTIONS:
            raise ValueError(f"{source}: unknown section [{sec}]")
        attr, cls = SECTIONS[sec]
        obj = getattr(cfg, attr)
        types = {f.name: f.type for f in fields(cls)}
        aliases = _KEY_ALIASES.get(sec, {})
        for key, value in cp[sec].items():
            name = aliases.get(key, key)
            if name not in types:
                raise ValueError(f"{source}: unknown key {key!r} in [{sec}]")
            setattr(obj, name, _convert(value, types[name], f"{source} [{sec}] {key}"))
    return cfg.validate()


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    return parse_ini(path.read_text(), str(path))


# -- presets ---------------------------------------------------------------

LOWPASS = ("[1000, 2500]", "(2500, 4000]")
HIGHPASS = ("[2500, 4000]", "[1000, 2500)")
BANDPASS = ("[2500, 4000]", "[1000, 2500); (4000, 5500]")
BANDSTOP = ("[1000, 2500); (4000, 5500]", "[2500, 4000]")
VALIDATION = ("[500, 2000]", "(2000, 3500]")


def _paper(name, bands, b=1e-3, iterations=400) -> ScenarioConfig:
    cfg = ScenarioConfig(name=name)
    cfg.bands = BandConfig(bands[0], bands[1], 1.0, b)
    cfg.optimizer.iterations = iterations
    return cfg


def _coarse(cfg: ScenarioConfig, name: str) -> ScenarioConfig:
    """Desk-scale variant: 30x15 elements, N = 200, 250 Hz bins.

    The duct keeps its 1:3:1 proportions and 0.1 m height, so the element
    size is 0.1/15 m and the inlet/design/outlet spans are 6/18/6 elements.
    """
    c = dataclasses.replace(cfg, name=name)
    c.mesh = MeshConfig(h=0.1 / 15, inlet_length=0.04, design_length=0.12, outlet_length=0.04, height=0.1)
    c.time = TimeConfig(dt=2e-5, steps=200)
    c.design = DesignConfig(filter_radius=0.01, r1=3, r2=3, lx=0.1, ly=0.1, threshold=0.01, noise=0.02)
    c.optimizer = dataclasses.replace(cfg.optimizer, iterations=100, snapshot_every=10)
    c.signal = dataclasses.replace(cfg.signal)
    c.bands = dataclasses.replace(cfg.bands)
    c.material = dataclasses.replace(cfg.material)
    c.output = dataclasses.replace(cfg.output)
    return c


def _presets() -> dict:
    paper = {
        "lowpass-paper": _paper("lowpass-paper", LOWPASS),
        "highpass-paper": _paper("highpass-paper", HIGHPASS),
        "bandpass-paper": _paper("bandpass-paper", BANDPASS, iterations=800),
        "bandstop-paper": _paper("bandstop-paper", BANDSTOP, iterations=800),
        "lowpass-validation": _paper("lowpass-validation", VALIDATION, b=1e-4),
    }
    out = dict(paper)
    for name, cfg in paper.items():
        cname = name.replace("-paper", "") + "-coarse" if name.endswith("-paper") else name + "-coarse"
        out[cname] = _coarse(cfg, cname)
    return out


PRESET_NAMES = tuple(_presets())


def preset(name: str) -> ScenarioConfig:
    table = _presets()
    if name not in table:
        raise ValueError(f"unknown preset {name!r}; choose from {', '.join(table)}")
    return table[name].validate()
