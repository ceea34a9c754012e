"""Flat key-value run configuration: parse, validate, echo, hash.

The file format is one `key = value` pair per line, `#` comments, blank
lines ignored.  Unknown keys are errors; the parse -> echo round trip is
lossless in the sense that re-parsing the echo reproduces the same
configuration and hash.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

_PERT_KINDS = ("single_mode", "multi_mode", "random_seeded")
_ORIENTATIONS = ("unstable", "stable")


class ConfigError(ValueError):
    """Invalid run configuration or unparsable config text."""


@dataclass
class RunConfig:
    rho_plus: float = 3.0
    rho_minus: float = 2.0
    g: float = 50.0
    L: float = 8.0
    H: float = 16.0
    ny: int = 128
    nz: int = 512
    t_end: float = 1.0
    sample_interval: float = 0.05
    pert_kind: str = "single_mode"
    pert_amplitude: float = 0.05
    pert_width: float = 0.25
    pert_seed: int = 0
    pert_mode: int = 1
    pert_nmodes: int = 8
    edge_threshold: float = 0.01
    snapshot_every: float = 0.0
    orientation: str = "unstable"

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not (self.rho_plus > self.rho_minus > 0.0):
            raise ConfigError("need rho_plus > rho_minus > 0")
        if self.g <= 0.0:
            raise ConfigError("g must be positive (use orientation=stable for the stable arrangement)")
        if self.L <= 0.0 or self.H <= 0.0:
            raise ConfigError("L and H must be positive")
        if self.ny < 4 or self.ny % 2 or self.nz < 8 or self.nz % 2:
            raise ConfigError("ny must be even >= 4 and nz even >= 8")
        if self.t_end < 0.0:
            raise ConfigError("t_end must be nonnegative")
        if self.sample_interval <= 0.0:
            raise ConfigError("sample_interval must be positive")
        if self.pert_kind not in _PERT_KINDS:
            raise ConfigError(f"perturbation.kind must be one of {_PERT_KINDS}")
        if self.orientation not in _ORIENTATIONS:
            raise ConfigError(f"orientation must be one of {_ORIENTATIONS}")
        if not (0.0 < self.edge_threshold < 0.5):
            raise ConfigError("edge_threshold must lie in (0, 1/2)")
        if self.snapshot_every < 0.0:
            raise ConfigError("snapshot_every must be nonnegative")
        dz = 2.0 * self.H / self.nz
        if self.pert_width < 2.0 * dz:
            raise ConfigError(f"perturbation.width must be >= 2 dz = {2.0 * dz}")

    @property
    def g_signed(self) -> float:
        """Signed gravity: negative for the stable arrangement, in which
        every balance identity holds verbatim with g < 0."""
        return self.g if self.orientation == "unstable" else -self.g

    def to_text(self) -> str:
        lines = [
            f"rho_plus = {self.rho_plus:.17g}",
            f"rho_minus = {self.rho_minus:.17g}",
            f"g = {self.g:.17g}",
            f"L = {self.L:.17g}",
            f"H = {self.H:.17g}",
            f"ny = {self.ny}",
            f"nz = {self.nz}",
            f"t_end = {self.t_end:.17g}",
            f"sample_interval = {self.sample_interval:.17g}",
            f"perturbation.kind = {self.pert_kind}",
            f"perturbation.amplitude = {self.pert_amplitude:.17g}",
            f"perturbation.width = {self.pert_width:.17g}",
            f"perturbation.seed = {self.pert_seed}",
            f"perturbation.mode = {self.pert_mode}",
            f"perturbation.nmodes = {self.pert_nmodes}",
            f"edge_threshold = {self.edge_threshold:.17g}",
            f"snapshot_every = {self.snapshot_every:.17g}",
            f"orientation = {self.orientation}",
        ]
        return "\n".join(lines) + "\n"

    def config_hash(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()


_KEY_MAP = {
    "rho_plus": ("rho_plus", float),
    "rho_minus": ("rho_minus", float),
    "g": ("g", float),
    "L": ("L", float),
    "H": ("H", float),
    "ny": ("ny", int),
    "nz": ("nz", int),
    "t_end": ("t_end", float),
    "sample_interval": ("sample_interval", float),
    "perturbation.kind": ("pert_kind", str),
    "perturbation.amplitude": ("pert_amplitude", float),
    "perturbation.width": ("pert_width", float),
    "perturbation.seed": ("pert_seed", int),
    "perturbation.mode": ("pert_mode", int),
    "perturbation.nmodes": ("pert_nmodes", int),
    "edge_threshold": ("edge_threshold", float),
    "snapshot_every": ("snapshot_every", float),
    "orientation": ("orientation", str),
}


def parse_config(text: str) -> RunConfig:
    kwargs = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _KEY_MAP:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        attr, conv = _KEY_MAP[key]
        if attr in kwargs:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            kwargs[attr] = conv(value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from exc
    try:
        return RunConfig(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
