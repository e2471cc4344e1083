"""Scenario files: versioned key-value text mirroring ScenarioConfig.

A scenario file is parsed with ``dotenv_values``::

    # comments are allowed
    schema_version=1
    channel=elaa
    esno_db=22
    detectors=SSOR:uwsvd:50,SSOR:plain:50

Values resolve in three layers: built-in defaults, then the file, then
explicit overrides (the CLI flags). Every result file gets a sidecar
written by ``write_scenario`` so the run can be replayed with ``--config``.
See docs/configuration/scenario_format.md for the key reference.
"""

import logging
import math
from dataclasses import dataclass, field, fields
from enum import Enum
from pathlib import Path
from typing import Dict, Mapping, Optional, Tuple

import numpy as np
from dotenv import dotenv_values

from .channel import FadingConfig, GeometryConfig
from .detectors import Method, ThetaMode, X0Policy, parse_method, parse_theta_mode, parse_x0_policy
from .errors import ConfigError, ResultWriteError
from .modem import qam_constellation

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

GEOMETRY_KEYS = tuple(f.name for f in fields(GeometryConfig))
FADING_KEYS = tuple(f.name for f in fields(FadingConfig))
SCENARIO_KEYS = (
    ("schema_version", "channel", "esno_db", "modulation", "trials", "seed", "workers", "x0_policy",
     "lbfgs_theta")
    + GEOMETRY_KEYS
    + FADING_KEYS
    + ("detectors",)
)


class ChannelKind(str, Enum):
    ELAA = "elaa"
    IID = "iid"


@dataclass(frozen=True)
class DetectorEntry:
    """One detector curve to compute: method, path and iteration budget."""
    method: Method
    uwsvd: bool
    max_iters: int

    def __post_init__(self):
        object.__setattr__(self, "method", parse_method(self.method))
        if int(self.max_iters) < 1:
            raise ConfigError(f"Detector {self.method.value} needs max_iters >= 1, got {self.max_iters}")
        object.__setattr__(self, "max_iters", int(self.max_iters))

    @property
    def label(self) -> str:
        return f"{self.method.value}:{'uwsvd' if self.uwsvd else 'plain'}:{self.max_iters}"


def _default_detectors() -> Tuple[DetectorEntry, ...]:
    return tuple(
        DetectorEntry(method=method, uwsvd=uwsvd, max_iters=50)
        for method in Method
        for uwsvd in (True, False)
    )


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything one experiment run depends on.

    Attributes:
        geometry: array and user placement
        fading: path loss and LoS window parameters
        channel_kind: 'elaa' or 'iid'
        esno_db: Es/No per receive antenna in dB
        modulation: square QAM order
        detectors: curves to compute in Experiment 1
        trials: Monte Carlo trials
        master_seed: seed every per-trial stream is derived from
        workers: threads running trials
        x0_policy: detector start point
        lbfgs_theta: how diag(A) enters the L-BFGS direction
    """
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    fading: FadingConfig = field(default_factory=FadingConfig)
    channel_kind: ChannelKind = ChannelKind.ELAA
    esno_db: float = 22.0
    modulation: int = 16
    detectors: Tuple[DetectorEntry, ...] = field(default_factory=_default_detectors)
    trials: int = 500
    master_seed: int = 0
    workers: int = 1
    x0_policy: X0Policy = X0Policy.ZERO
    lbfgs_theta: ThetaMode = ThetaMode.DIAGONAL

    def __post_init__(self):
        try:
            object.__setattr__(self, "channel_kind", ChannelKind(self.channel_kind))
        except ValueError:
            raise ConfigError(f"Unknown channel kind '{self.channel_kind}' (expected elaa or iid)")
        object.__setattr__(self, "x0_policy", parse_x0_policy(self.x0_policy))
        object.__setattr__(self, "lbfgs_theta", parse_theta_mode(self.lbfgs_theta))
        object.__setattr__(self, "detectors", tuple(self.detectors))
        if self.trials < 1:
            raise ConfigError(f"trials must be at least 1, got {self.trials}")
        if self.workers < 1:
            raise ConfigError(f"workers must be at least 1, got {self.workers}")
        if self.master_seed < 0:
            raise ConfigError(f"seed must be nonnegative, got {self.master_seed}")
        if not math.isfinite(self.esno_db):
            raise ConfigError(f"esno_db must be finite, got {self.esno_db}")
        if not self.detectors:
            raise ConfigError("At least one detector is required")
        qam_constellation(self.modulation)

    @property
    def constellation(self):
        return qam_constellation(self.modulation)


def parse_detectors(text: str) -> Tuple[DetectorEntry, ...]:
    """Parse ``METHOD:uwsvd|plain:MAX_ITERS`` entries separated by commas."""
    entries = []
    for raw in text.split(","):
        raw = raw.strip()
        if not raw:
            continue
        parts = [p.strip() for p in raw.split(":")]
        if len(parts) != 3:
            raise ConfigError(f"Detector entry '{raw}' must look like METHOD:uwsvd:ITERS")
        method, path, iters = parts
        if path.lower() not in ("uwsvd", "plain"):
            raise ConfigError(f"Detector entry '{raw}': path must be uwsvd or plain")
        try:
            max_iters = int(iters)
        except ValueError:
            raise ConfigError(f"Detector entry '{raw}': '{iters}' is not an iteration count")
        entries.append(DetectorEntry(method=parse_method(method), uwsvd=path.lower() == "uwsvd", max_iters=max_iters))
    if not entries:
        raise ConfigError("detectors is empty")
    return tuple(entries)


def _format_number(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def scenario_to_mapping(config: ScenarioConfig) -> Dict[str, str]:
    """Flatten a scenario into the key-value form used by scenario files."""
    values = {
        "schema_version": str(SCHEMA_VERSION),
        "channel": config.channel_kind.value,
        "esno_db": repr(float(config.esno_db)),
        "modulation": str(config.modulation),
        "trials": str(config.trials),
        "seed": str(config.master_seed),
        "workers": str(config.workers),
        "x0_policy": config.x0_policy.value,
        "lbfgs_theta": config.lbfgs_theta.value,
    }
    for key in GEOMETRY_KEYS:
        values[key] = _format_number(getattr(config.geometry, key))
    for key in FADING_KEYS:
        values[key] = _format_number(getattr(config.fading, key))
    values["detectors"] = ",".join(entry.label for entry in config.detectors)
    return values


def _convert(key: str, value: str, kind, source: str):
    try:
        return kind(value.strip())
    except (TypeError, ValueError):
        raise ConfigError(f"{source}: '{key}' has invalid value '{value}'")


def scenario_from_mapping(values: Mapping[str, Optional[str]], source: str = "scenario") -> ScenarioConfig:
    """Build a ScenarioConfig from a complete key-value mapping.

    Raises:
        ConfigError: on unknown keys, missing values or invalid values
    """
    unknown = sorted(set(values) - set(SCENARIO_KEYS))
    if unknown:
        raise ConfigError(f"{source}: unknown keys {', '.join(unknown)}")
    missing = [key for key, value in values.items() if value is None or str(value).strip() == ""]
    if missing:
        raise ConfigError(f"{source}: keys without a value: {', '.join(missing)}")

    version = values.get("schema_version")
    if version is None or _convert("schema_version", version, int, source) != SCHEMA_VERSION:
        raise ConfigError(f"{source}: schema_version must be {SCHEMA_VERSION}, got {version}")

    int_keys = {"m", "k_users", "n_per_user"}
    geometry = GeometryConfig(**{
        key: _convert(key, values[key], int if key in int_keys else float, source)
        for key in GEOMETRY_KEYS if key in values and values[key] != "None"
    })
    fading = FadingConfig(**{
        key: _convert(key, values[key], float, source) for key in FADING_KEYS if key in values
    })

    kwargs = {}
    if "channel" in values:
        kwargs["channel_kind"] = values["channel"].strip()
    if "esno_db" in values:
        kwargs["esno_db"] = _convert("esno_db", values["esno_db"], float, source)
    for key, target in (("modulation", "modulation"), ("trials", "trials"),
                        ("seed", "master_seed"), ("workers", "workers")):
        if key in values:
            kwargs[target] = _convert(key, values[key], int, source)
    if "x0_policy" in values:
        kwargs["x0_policy"] = values["x0_policy"]
    if "lbfgs_theta" in values:
        kwargs["lbfgs_theta"] = values["lbfgs_theta"]
    if "detectors" in values:
        kwargs["detectors"] = parse_detectors(values["detectors"])
    return ScenarioConfig(geometry=geometry, fading=fading, **kwargs)


def resolve_scenario(path=None, overrides: Optional[Mapping[str, object]] = None,
                     base: Optional[ScenarioConfig] = None) -> ScenarioConfig:
    """Layer a scenario file and overrides on top of ``base``.

    Args:
        path: optional scenario file
        overrides: scenario keys to force; None values are ignored
        base: starting point (default: built-in defaults)

    Raises:
        ConfigError: if the file is missing, unversioned or invalid
    """
    values = scenario_to_mapping(base or ScenarioConfig())
    source = "defaults"
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"Scenario file not found: {path}")
        from_file = dotenv_values(path)
        if "schema_version" not in from_file:
            raise ConfigError(f"{path}: missing schema_version")
        values.update(from_file)
        source = str(path)
        logger.debug(f"Loaded {len(from_file)} scenario keys from {path}")
    if overrides:
        for key, value in overrides.items():
            if value is not None:
                values[key] = value.value if isinstance(value, Enum) else str(value)
    return scenario_from_mapping(values, source=source)


def load_scenario(path) -> ScenarioConfig:
    """Read a scenario file over the built-in defaults."""
    return resolve_scenario(path)


def write_scenario(config: ScenarioConfig, path) -> Path:
    """Write the fully resolved scenario next to a result file."""
    path = Path(path)
    lines = [
        "# Resolved uwsvd-mimo scenario; replay with --config",
        "# esno_db is symbol energy per receive antenna over noise variance",
    ]
    lines += [f"{key}={value}" for key, value in scenario_to_mapping(config).items()]
    try:
        path.write_text("\n".join(lines) + "\n")
    except OSError as e:
        raise ResultWriteError(f"Could not write scenario sidecar {path}: {e}") from e
    logger.debug(f"Wrote scenario sidecar {path}")
    return path
