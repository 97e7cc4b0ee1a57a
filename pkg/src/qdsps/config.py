"""Scenario configuration: schema, unit-checked parsing, canonical hashing.

Config files are INI-style structured text with nested sections.  Every
physical quantity must carry an explicit unit suffix (meV, ueV, ps, ps2, K,
pi, rad); unitless entries are accepted only for counts, tolerances and
booleans.  Unknown sections or keys are rejected with line information.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .models import DissipatorKind
from .units import mev_to_radps, uev_to_radps

SCHEMES = ("resonant", "phonon_assisted", "tpe_biexciton")

# key -> (kind, default).  Kinds: energy, time, temperature, alpha, area,
# int, float, bool.  Defaults are the baseline experiment parameters.
_SCHEMA: dict[str, dict[str, tuple[str, object]]] = {
    "": {
        "scheme": ("scheme", None),
        "dissipator": ("dissipator", "weak_full"),
        "label": ("str", ""),
    },
    "pulse": {
        "area": ("area", np.pi),
        "tau_p": ("time", 2.0),
        "center": ("time", None),
    },
    "laser": {
        "delta_l": ("energy", None),
    },
    "cavity": {
        "g": ("energy", uev_to_radps(20.0)),
        "kappa": ("energy", uev_to_radps(50.0)),
        "n_max": ("int", 2),
    },
    "emitter": {
        "gamma": ("energy", uev_to_radps(1.0)),
        "binding_energy": ("energy", None),
        "gamma_u": ("energy", None),
    },
    "bath": {
        "alpha": ("alpha", 0.03),
        "omega_b": ("energy", mev_to_radps(0.9)),
        "temperature": ("temperature", 4.0),
    },
    "numerics": {
        "dt": ("time", None),
        "stride": ("int", None),
        "threshold": ("float", 1e-6),
        "t_max": ("time", None),
    },
    "outputs": {
        "trajectory": ("bool", True),
        "surfaces": ("bool", False),
        "fom": ("bool", True),
    },
    "sweep": {
        "area": ("list-area", None),
        "tau_p": ("list-time", None),
        "delta_l": ("list-energy", None),
    },
    "check": {
        "n_a_min": ("float", None),
        "n_a_max": ("float", None),
        "indist_min": ("float", None),
        "indist_max": ("float", None),
        "d1_max": ("float", None),
        "d2_max": ("float", None),
    },
}

_ENERGY_UNITS = {"mev": mev_to_radps, "uev": uev_to_radps}


class ConfigError(ValueError):
    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


def _parse_scalar(kind: str, raw: str, line_no: int):
    tokens = raw.split()
    if kind == "scheme":
        if raw not in SCHEMES:
            raise ConfigError(f"unknown scheme {raw!r} (one of {SCHEMES})", line_no)
        return raw
    if kind == "dissipator":
        try:
            return DissipatorKind(raw)
        except ValueError:
            opts = [k.value for k in DissipatorKind]
            raise ConfigError(f"unknown dissipator {raw!r} (one of {opts})", line_no)
    if kind == "str":
        return raw
    if kind == "bool":
        if raw.lower() in ("true", "yes", "1"):
            return True
        if raw.lower() in ("false", "no", "0"):
            return False
        raise ConfigError(f"expected a boolean, got {raw!r}", line_no)
    if kind == "int":
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"expected an integer, got {raw!r}", line_no)
    if kind == "float":
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"expected a number, got {raw!r}", line_no)
    if kind == "area":
        if raw == "optimize":
            return "optimize"
        if len(tokens) != 2:
            raise ConfigError(
                f"pulse area needs a unit ('pi' or 'rad') or 'optimize', got {raw!r}",
                line_no,
            )
        value, unit = tokens
        try:
            value = float(value)
        except ValueError:
            raise ConfigError(f"bad number {value!r}", line_no)
        if unit == "pi":
            return value * np.pi
        if unit == "rad":
            return value
        raise ConfigError(f"pulse area unit must be 'pi' or 'rad', got {unit!r}", line_no)
    # Remaining kinds are physical quantities that demand a unit suffix.
    if len(tokens) != 2:
        raise ConfigError(f"missing unit on physical quantity: {raw!r}", line_no)
    value, unit = tokens
    try:
        value = float(value)
    except ValueError:
        raise ConfigError(f"bad number {value!r}", line_no)
    unit_l = unit.lower()
    if kind == "energy":
        if unit_l not in _ENERGY_UNITS:
            raise ConfigError(f"energy unit must be meV or ueV, got {unit!r}", line_no)
        return _ENERGY_UNITS[unit_l](value)
    if kind == "time":
        if unit_l != "ps":
            raise ConfigError(f"time unit must be ps, got {unit!r}", line_no)
        return value
    if kind == "temperature":
        if unit != "K":
            raise ConfigError(f"temperature unit must be K, got {unit!r}", line_no)
        return value
    if kind == "alpha":
        if unit_l != "ps2":
            raise ConfigError(f"coupling unit must be ps2, got {unit!r}", line_no)
        return value
    raise ConfigError(f"unhandled kind {kind!r}", line_no)


def _parse_value(kind: str, raw: str, line_no: int):
    if kind.startswith("list-"):
        inner = kind[5:]
        return [_parse_scalar(inner, part.strip(), line_no) for part in raw.split(",")]
    return _parse_scalar(kind, raw, line_no)


@dataclass
class ScenarioConfig:
    """Fully resolved scenario in internal units (rad/ps, ps, K)."""

    scheme: str
    dissipator: DissipatorKind
    label: str
    pulse_area: float | None  # None means optimize
    tau_p: float
    center: float | None
    delta_l: float
    g: float
    kappa: float
    n_max: int
    gamma: float
    binding_energy: float | None
    gamma_u: float | None
    alpha: float
    omega_b: float
    temperature: float
    dt: float | None
    stride: int | None
    threshold: float
    t_max: float | None
    outputs: dict[str, bool]
    sweep: dict[str, list[float]] = field(default_factory=dict)
    check: dict[str, float] = field(default_factory=dict)

    @property
    def optimize_area(self) -> bool:
        return self.pulse_area is None

    def canonical(self) -> str:
        """Stable text form used for hashing and reproducibility records."""
        pairs = []
        for key, val in sorted(vars(self).items()):
            if isinstance(val, dict):
                val = {k: val[k] for k in sorted(val)}
            if isinstance(val, DissipatorKind):
                val = val.value
            if isinstance(val, float):
                val = f"{val:.12g}"
            pairs.append(f"{key}={val}")
        return "\n".join(pairs)

    def digest(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]


def parse_config(text: str) -> ScenarioConfig:
    """Parse and validate structured key-value scenario text."""
    section = ""
    seen: dict[str, dict[str, object]] = {name: {} for name in _SCHEMA}
    for line_no, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in _SCHEMA or section == "":
                raise ConfigError(f"unknown section [{section}]", line_no)
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", line_no)
        key, raw = (part.strip() for part in line.split("=", 1))
        table = _SCHEMA[section]
        if key not in table:
            where = f"[{section}]" if section else "top level"
            raise ConfigError(f"unknown key {key!r} in {where}", line_no)
        if key in seen[section]:
            raise ConfigError(f"duplicate key {key!r}", line_no)
        kind, _default = table[key]
        seen[section][key] = _parse_value(kind, raw, line_no)

    def get(section: str, key: str):
        if key in seen[section]:
            return seen[section][key]
        return _SCHEMA[section][key][1]

    scheme = get("", "scheme")
    if scheme is None:
        raise ConfigError("missing required top-level key 'scheme'")
    dissipator = get("", "dissipator")
    if isinstance(dissipator, str):
        dissipator = DissipatorKind(dissipator)

    area = get("pulse", "area")
    delta_l = get("laser", "delta_l")
    binding_energy = get("emitter", "binding_energy")
    gamma_u = get("emitter", "gamma_u")

    if scheme == "resonant":
        if delta_l not in (None, 0.0):
            raise ConfigError("resonant scheme requires delta_l = 0 (omit the key)")
        delta_l = 0.0
    elif scheme == "phonon_assisted":
        if delta_l is None:
            delta_l = mev_to_radps(1.0)
        if delta_l <= 0:
            raise ConfigError("phonon_assisted scheme needs delta_l > 0")
    else:  # tpe_biexciton
        if delta_l is not None:
            raise ConfigError("tpe_biexciton drives at the two-photon resonance; omit delta_l")
        delta_l = 0.0
        if binding_energy is None:
            raise ConfigError("tpe_biexciton requires emitter.binding_energy")
        if gamma_u is None:
            raise ConfigError("tpe_biexciton requires emitter.gamma_u")
        if dissipator in (DissipatorKind.WEAK_SIMPLIFIED, DissipatorKind.POLARON):
            raise ConfigError(
                f"dissipator {dissipator.value} is defined for two-level schemes only"
            )
    if scheme != "tpe_biexciton" and (binding_energy is not None or gamma_u is not None):
        raise ConfigError("binding_energy/gamma_u apply to the tpe_biexciton scheme only")

    if area == "optimize":
        if scheme == "resonant":
            raise ConfigError("area = optimize applies to the off-resonant schemes only")
        area = None

    return ScenarioConfig(
        scheme=scheme,
        dissipator=dissipator,
        label=get("", "label"),
        pulse_area=area,
        tau_p=get("pulse", "tau_p"),
        center=get("pulse", "center"),
        delta_l=delta_l,
        g=get("cavity", "g"),
        kappa=get("cavity", "kappa"),
        n_max=get("cavity", "n_max"),
        gamma=get("emitter", "gamma"),
        binding_energy=binding_energy,
        gamma_u=gamma_u,
        alpha=get("bath", "alpha"),
        omega_b=get("bath", "omega_b"),
        temperature=get("bath", "temperature"),
        dt=get("numerics", "dt"),
        stride=get("numerics", "stride"),
        threshold=get("numerics", "threshold"),
        t_max=get("numerics", "t_max"),
        outputs={
            "trajectory": get("outputs", "trajectory"),
            "surfaces": get("outputs", "surfaces"),
            "fom": get("outputs", "fom"),
        },
        sweep={k: v for k, v in seen["sweep"].items()},
        check={k: v for k, v in seen["check"].items() if v is not None},
    )
