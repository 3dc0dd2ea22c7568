"""INI-style run configuration.

Every key is optional; an empty file gives the calibration of the
810/1550 nm source at 1.2 mW.  See the README for the key list.
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .detection import DetectorConfig
from .lock import DriftModel, LockGains
from .source import SourceConfig


class ConfigFileError(Exception):
    """Raised for missing, malformed or invalid configuration files."""


@dataclass(frozen=True)
class LockSettings:
    gains: LockGains = LockGains()
    target_phi_rad: float = -np.pi / 2
    initial_mismatch_nm: float = 2000.0
    prealign_error_nm: float = 20.0
    settle_s: float = 1.0


@dataclass(frozen=True)
class ScanSettings:
    start_deg: float = 0.0
    stop_deg: float = 90.0
    count: int = 37
    endpoint: bool = False
    duration_per_point_s: float = 100.0

    def angles(self) -> np.ndarray:
        return np.deg2rad(np.linspace(self.start_deg, self.stop_deg, self.count, endpoint=self.endpoint))


@dataclass(frozen=True)
class RunSettings:
    duration_s: float = 10.0
    dt_s: float = 1e-3
    seed: int = 2008


@dataclass(frozen=True)
class OutputSettings:
    directory: Path = Path("out")
    emit_svg: bool = False


@dataclass(frozen=True)
class RunConfig:
    source: SourceConfig = SourceConfig()
    detector: DetectorConfig = DetectorConfig()
    lock: LockSettings = LockSettings()
    drift: DriftModel = DriftModel()
    scan: ScanSettings = ScanSettings()
    run: RunSettings = RunSettings()
    output: OutputSettings = field(default_factory=OutputSettings)


def _convert(raw: str, default):
    if isinstance(default, bool):
        low = raw.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, Path):
        return Path(raw)
    return float(raw)


def _build(cls, section: str, values: dict, defaults=None):
    defaults = defaults or cls()
    # keys match case-insensitively (delta_L_s_nm or delta_l_s_nm)
    names = {f.name.lower(): f.name for f in dataclasses.fields(cls)}
    kwargs = {}
    for raw_key, raw in values.items():
        key = names.get(raw_key.lower())
        if key is None:
            raise ConfigFileError(f"unknown key [{section}] {raw_key}")
        try:
            kwargs[key] = _convert(raw, getattr(defaults, key))
        except ValueError as exc:
            raise ConfigFileError(f"invalid value for [{section}] {key}: {exc}") from None
    try:
        return dataclasses.replace(defaults, **kwargs)
    except ValueError as exc:
        raise ConfigFileError(f"invalid [{section}]: {exc}") from None


SECTIONS = ("source", "detector", "lock", "drift", "scan", "run", "output")


def parse_config(path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigFileError(f"config file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(path.read_text(), source=str(path))
    except configparser.Error as exc:
        raise ConfigFileError(f"malformed config {path}: {exc}") from None
    return config_from_sections({s: dict(parser[s]) for s in parser.sections()})


def config_from_sections(sections: dict) -> RunConfig:
    for name in sections:
        if name not in SECTIONS:
            raise ConfigFileError(f"unknown section [{name}]")
    get = lambda name: sections.get(name, {})  # noqa: E731

    lock_values = dict(get("lock"))
    gain_keys = {f.name for f in dataclasses.fields(LockGains)}
    gains = _build(LockGains, "lock",
                   {k: lock_values.pop(k) for k in list(lock_values) if k.lower() in gain_keys})
    lock = _build(LockSettings, "lock", lock_values, LockSettings(gains=gains))

    scan = _build(ScanSettings, "scan", get("scan"))
    if scan.count < 2:
        raise ConfigFileError("invalid [scan] count: need at least 2 angles")
    if scan.duration_per_point_s <= 0:
        raise ConfigFileError("invalid [scan] duration_per_point_s: must be positive")
    run = _build(RunSettings, "run", get("run"))
    if not run.duration_s >= run.dt_s > 0:
        raise ConfigFileError("invalid [run]: need duration_s >= dt_s > 0")

    return RunConfig(
        source=_build(SourceConfig, "source", get("source")),
        detector=_build(DetectorConfig, "detector", get("detector")),
        lock=lock,
        drift=_build(DriftModel, "drift", get("drift")),
        scan=scan,
        run=run,
        output=_build(OutputSettings, "output", get("output")),
    )
