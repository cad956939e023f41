"""Run configuration: grammar, schema, presets.

A config is an INI-style text file. Top-level keys (before any section)
are ``schema``, ``command`` and ``seed``; everything else lives in named
sections. Unknown sections or keys are errors. Example::

    schema = 1
    command = sweep

    [system]
    g = 1
    kappa = 2
    gamma = 0.1

    [sweep]
    scenario = cavity-homodyne
    efficiencies = 0,0; 0.4,0; 1,0
    deltas = -6:6:241

Value types
-----------
grid
    ``start:stop:count`` (inclusive, evenly spaced) or a comma list.
list
    comma-separated floats.
pairs
    ``eta1,eta2`` pairs separated by ``;``.
bool
    ``true``/``false`` (also ``1``/``0``, ``yes``/``no``).
optional float
    a float, or an empty value for "not set".

Every value is normalised on parsing, and :meth:`RunConfig.dumps` writes
the canonical form back, so a dumped config reparses to the same object.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

SCHEMA_VERSION = 1
COMMANDS = (
    "stability-map",
    "steady-state",
    "sweep",
    "decoupled",
    "trajectory",
    "experiment-sweep",
)
_TOP = "run"


def _num(x: float) -> str:
    # repr gives the shortest string that round-trips exactly
    x = float(x)
    return repr(int(x)) if x.is_integer() and abs(x) < 1e15 else repr(x)


class _Float:
    def parse(self, text):
        try:
            x = float(text)
        except ValueError:
            raise ConfigError(f"expected a number, got {text!r}") from None
        if not math.isfinite(x):
            raise ConfigError(f"expected a finite number, got {text!r}")
        return x

    def dump(self, value):
        return _num(value)


class _OptFloat(_Float):
    def parse(self, text):
        return None if text.strip() == "" else super().parse(text)

    def dump(self, value):
        return "" if value is None else _num(value)


class _Int:
    def __init__(self, minimum=None):
        self.minimum = minimum

    def parse(self, text):
        try:
            x = int(text)
        except ValueError:
            raise ConfigError(f"expected an integer, got {text!r}") from None
        if self.minimum is not None and x < self.minimum:
            raise ConfigError(f"expected an integer >= {self.minimum}, got {x}")
        return x

    def dump(self, value):
        return str(value)


class _Bool:
    _TRUE = ("true", "yes", "on", "1")
    _FALSE = ("false", "no", "off", "0")

    def parse(self, text):
        t = text.strip().lower()
        if t in self._TRUE:
            return True
        if t in self._FALSE:
            return False
        raise ConfigError(f"expected true/false, got {text!r}")

    def dump(self, value):
        return "true" if value else "false"


class _Choice:
    def __init__(self, *choices):
        self.choices = choices

    def parse(self, text):
        t = text.strip()
        if t not in self.choices:
            raise ConfigError(f"expected one of {', '.join(self.choices)}; got {t!r}")
        return t

    def dump(self, value):
        return value


class _List:
    def parse(self, text):
        items = [p.strip() for p in text.split(",") if p.strip()]
        if not items:
            raise ConfigError("expected a non-empty comma list")
        return tuple(_Float().parse(p) for p in items)

    def dump(self, value):
        return ", ".join(_num(x) for x in value)


@dataclass(frozen=True)
class Grid:
    """Either ``linspace(start, stop, count)`` or an explicit tuple."""

    start: float | None = None
    stop: float | None = None
    count: int | None = None
    values: tuple | None = None

    def array(self) -> np.ndarray:
        if self.values is not None:
            return np.array(self.values, dtype=float)
        return np.linspace(self.start, self.stop, self.count)


class _Grid:
    def parse(self, text):
        t = text.strip()
        if ":" in t:
            parts = t.split(":")
            if len(parts) != 3:
                raise ConfigError(f"grid must be start:stop:count, got {t!r}")
            start, stop = _Float().parse(parts[0]), _Float().parse(parts[1])
            count = _Int(minimum=1).parse(parts[2])
            if count > 1 and not stop > start:
                raise ConfigError(f"grid stop must exceed start, got {t!r}")
            return Grid(start, stop, count)
        return Grid(values=_List().parse(t))

    def dump(self, value):
        if value.values is not None:
            return _List().dump(value.values)
        return f"{_num(value.start)}:{_num(value.stop)}:{value.count}"


class _Pairs:
    def parse(self, text):
        pairs = []
        for chunk in text.split(";"):
            if not chunk.strip():
                continue
            vals = _List().parse(chunk)
            if len(vals) != 2:
                raise ConfigError(f"efficiency pairs are 'eta1,eta2', got {chunk.strip()!r}")
            pairs.append(vals)
        if not pairs:
            raise ConfigError("expected at least one eta1,eta2 pair")
        return tuple(pairs)

    def dump(self, value):
        return "; ".join(f"{_num(a)},{_num(b)}" for a, b in value)


_F, _OF, _B, _G, _L = _Float(), _OptFloat(), _Bool(), _Grid(), _List()
_OBJ = _Choice("n_ph", "purity", "squeezing", "delta_x")

#: section -> key -> (type, default text)
SCHEMA = {
    _TOP: {
        "schema": (_Int(), "1"),
        "command": (_Choice(*COMMANDS), "sweep"),
        "seed": (_Int(minimum=0), "0"),
    },
    "system": {
        "omega_m": (_F, "1"),
        "delta": (_F, "0"),
        "g": (_F, "1"),
        "kappa": (_F, "2"),
        "gamma": (_F, "0.1"),
    },
    "measurement": {
        "eta1": (_F, "0"),
        "eta2": (_F, "0"),
        "phi": (_F, "0"),
        "optimize_phase": (_B, "false"),
        "objective": (_OBJ, "n_ph"),
    },
    "sweep": {
        "deltas": (_G, "-6:6:241"),
        "scenario": (_Choice("unconditional", "cavity-homodyne", "position-only", "both"),
                     "unconditional"),
        "efficiencies": (_Pairs(), "0,0"),
        "objective": (_OBJ, "n_ph"),
    },
    "stability": {
        "deltas": (_G, "-6:6:241"),
        "gs": (_G, "0:3:61"),
    },
    "experiment": {
        "radius": (_F, "2e-07"),
        "mass": (_F, "7.35e-17"),
        "wavelength": (_F, "1.064e-06"),
        "cavity_length": (_F, "0.013"),
        "finesse": (_F, "400000"),
        "waist": (_F, "6e-05"),
        "epsilon_r": (_F, "2.1"),
        "gamma_ratio": (_F, "0.15"),
        "mode_volume": (_Choice("standing-wave", "beam"), "standing-wave"),
        "kappa_total": (_OF, ""),
        "input_power": (_OF, ""),
        "omega_m0_hz": (_F, "33000"),
        "g0_hz": (_OF, "20000"),
    },
    "decoupled": {
        "gammas": (_G, "0.01:1:100"),
        "eta2": (_L, "0.2, 0.5, 0.8, 1"),
    },
    "trajectory": {
        "t_final": (_F, "20"),
        "dt": (_F, "0.001"),
        "n_trajectories": (_Int(minimum=1), "1"),
        "feedback": (_B, "false"),
        "record_every": (_Int(minimum=1), "10"),
        "n_cavity": (_F, "0"),
        "n_mech": (_F, "1"),
        "r0": (_L, "0, 0, 1, 0"),
    },
    "output": {
        "format": (_Choice("csv", "json"), "csv"),
        "precision": (_Int(minimum=1), "10"),
        "path": (None, ""),
    },
}


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved configuration: ``values[section][key]`` holds parsed values."""

    values: dict

    def __getitem__(self, section):
        return self.values[section]

    @property
    def command(self) -> str:
        return self.values[_TOP]["command"]

    @property
    def seed(self) -> int:
        return self.values[_TOP]["seed"]

    def as_text(self) -> dict:
        """Canonical string form, section by section."""
        out = {}
        for section, keys in SCHEMA.items():
            out[section] = {}
            for key, (kind, _) in keys.items():
                value = self.values[section][key]
                out[section][key] = value if kind is None else kind.dump(value)
        return out

    def dumps(self) -> str:
        text = self.as_text()
        lines = [f"{k} = {v}" for k, v in text[_TOP].items()]
        for section in SCHEMA:
            if section == _TOP:
                continue
            lines.append("")
            lines.append(f"[{section}]")
            lines.extend(f"{k} = {v}".rstrip() for k, v in text[section].items())
        return "\n".join(lines) + "\n"


def _raw_defaults():
    return {s: {k: d for k, (_, d) in keys.items()} for s, keys in SCHEMA.items()}


def _merge(raw, section, key, value, origin):
    if section not in SCHEMA:
        raise ConfigError(f"{origin}: unknown section [{section}]")
    if key not in SCHEMA[section]:
        known = ", ".join(SCHEMA[section])
        raise ConfigError(f"{origin}: unknown key {key!r} in [{section}] (known: {known})")
    raw[section][key] = value


def parse_text(text: str, raw=None, origin: str = "config"):
    """Merge a config text into ``raw`` (string values, not yet validated)."""
    raw = raw if raw is not None else _raw_defaults()
    parser = configparser.ConfigParser(
        interpolation=None, delimiters=("=",), comment_prefixes=("#",),
        inline_comment_prefixes=None, default_section="__none__", strict=True,
    )
    parser.optionxform = str
    try:
        parser.read_string(f"[{_TOP}]\n" + text, source=origin)
    except configparser.Error as exc:
        raise ConfigError(f"{origin}: {exc}") from None
    for section in parser.sections():
        for key, value in parser.items(section):
            _merge(raw, section, key, value, origin)
    return raw


def apply_override(raw, assignment: str):
    """Apply one ``section.key=value`` (or top-level ``key=value``) override."""
    if "=" not in assignment:
        raise ConfigError(f"--set expects key=value, got {assignment!r}")
    name, value = assignment.split("=", 1)
    name = name.strip()
    section, _, key = name.rpartition(".")
    _merge(raw, section or _TOP, key, value.strip(), "--set")
    return raw


def resolve(raw) -> RunConfig:
    """Parse every value; raises :class:`ConfigError` naming the bad key."""
    values = {}
    for section, keys in SCHEMA.items():
        values[section] = {}
        for key, (kind, _) in keys.items():
            text = raw[section][key]
            if kind is None:
                values[section][key] = text.strip()
                continue
            try:
                values[section][key] = kind.parse(text)
            except ConfigError as exc:
                name = key if section == _TOP else f"{section}.{key}"
                raise ConfigError(f"{name}: {exc}") from None
    if values[_TOP]["schema"] != SCHEMA_VERSION:
        raise ConfigError(
            f"unsupported schema {values[_TOP]['schema']}; this version reads schema={SCHEMA_VERSION}"
        )
    return RunConfig(values)


def loads(text: str) -> RunConfig:
    return resolve(parse_text(text))


_PRESETS = {
    "fig1": (
        "Hurwitz map over detuning and coupling, kappa = 2, Gamma = 0.1",
        """
command = stability-map
[system]
kappa = 2
gamma = 0.1
[stability]
deltas = -6:6:241
gs = 0:3:61
""",
    ),
    "fig2": (
        "unconditional steady state versus detuning, g = 1, kappa = 2, Gamma = 0.1",
        """
command = sweep
[system]
g = 1
kappa = 2
gamma = 0.1
[sweep]
scenario = unconditional
efficiencies = 0,0
""",
    ),
    "fig3": (
        "cavity homodyne with optimized phase, eta1 in {0, 0.4, 1}",
        """
command = sweep
[system]
g = 1
kappa = 2
gamma = 0.1
[sweep]
scenario = cavity-homodyne
efficiencies = 0,0; 0.4,0; 1,0
""",
    ),
    "fig4": (
        "position monitoring only, eta2 in {0.2, 0.5, 0.8, 1}",
        """
command = sweep
[system]
g = 1
kappa = 2
gamma = 0.1
[sweep]
scenario = position-only
efficiencies = 0,0.2; 0,0.5; 0,0.8; 0,1
""",
    ),
    "fig5": (
        "decoupled oscillator (g = 0) under position monitoring, closed form",
        """
command = decoupled
[decoupled]
gammas = 0.01:1:100
eta2 = 0.2, 0.5, 0.8, 1
""",
    ),
    "fig6": (
        "unit-efficiency cavity homodyne plus position monitoring, eta2 in {0, 0.5, 0.8, 1}",
        """
command = sweep
[system]
g = 1
kappa = 2
gamma = 0.1
[sweep]
scenario = both
efficiencies = 1,0; 1,0.5; 1,0.8; 1,1
""",
    ),
    "fig7": (
        "cavity setup, eta1 = 1, eta2 in {0, 0.2, 0.5, 1}",
        """
command = experiment-sweep
[sweep]
scenario = both
efficiencies = 1,0; 1,0.2; 1,0.5; 1,1
""",
    ),
    "fig8": (
        "cavity setup with realistic efficiencies eta1 = 0.5, eta2 = 0.2",
        """
command = experiment-sweep
[sweep]
scenario = both
efficiencies = 0.5,0.2
""",
    ),
}


def presets() -> list[tuple[str, str]]:
    """``(name, description)`` for every built-in preset, in a stable order."""
    return [(name, desc) for name, (desc, _) in _PRESETS.items()]


def preset_text(name: str) -> str:
    try:
        return _PRESETS[name][1].lstrip("\n")
    except KeyError:
        known = ", ".join(_PRESETS)
        raise ConfigError(f"unknown preset {name!r} (known: {known})") from None


def build(preset=None, config_text=None, overrides=(), origin="config") -> RunConfig:
    """Defaults, then preset, then config text, then ``--set`` overrides."""
    raw = _raw_defaults()
    if preset is not None:
        parse_text(preset_text(preset), raw, origin=f"preset {preset}")
    if config_text is not None:
        parse_text(config_text, raw, origin=origin)
    for item in overrides:
        apply_override(raw, item)
    return resolve(raw)
