"""Scenario configuration: a line-oriented ``section.key = value unit`` format.

Every physical quantity carries its unit in the file; values are converted to
the package's internal units (s, rad/s, m, km, km/s, ppm, rad) when parsed.
Dimensionless numbers and counts take no unit. ``#`` starts a comment.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from importlib import resources

UNITS = {
    "time": {"s": 1.0, "ms": 1e-3, "us": 1e-6, "ns": 1e-9},
    "rate": {"MHz2pi": 2 * math.pi * 1e6, "rad/s": 1.0},
    "distance": {"km": 1.0, "m": 1e-3},
    "length": {"m": 1.0, "mm": 1e-3, "um": 1e-6, "nm": 1e-9},
    "speed": {"km/s": 1.0, "m/s": 1e-3},
    "ppm": {"ppm": 1.0},
    "angle": {"rad": 1.0, "deg": math.pi / 180},
    "number": {},
    "count": {},
    "text": {},
}


@dataclass(frozen=True)
class Field:
    kind: str
    default: object
    unit: str = ""  # unit used when writing the value back out
    lo: float = -math.inf
    hi: float = math.inf


def _f(kind, default, unit="", lo=-math.inf, hi=math.inf):
    return Field(kind, default, unit, lo, hi)


def _q(kind, value, unit, lo=0.0, hi=math.inf):
    """Physical quantity whose default is given in ``unit``."""
    s = UNITS[kind][unit]
    return Field(kind, value * s, unit, lo, hi)


P = dict(lo=0.0, hi=1.0)

SCHEMA = {
    "run": {
        "seed": _f("count", None, lo=0),
        "out_dir": _f("text", "out"),
    },
    "cavity": {
        "g_t": _q("rate", 70, "MHz2pi"),
        "kappa_t_oc": _q("rate", 95, "MHz2pi"),
        "kappa_t_loss": _q("rate", 8, "MHz2pi"),
        "g_h": _q("rate", 16.3, "MHz2pi"),
        "kappa_h_oc": _q("rate", 11.9, "MHz2pi"),
        "kappa_h_loss": _q("rate", 1.5, "MHz2pi"),
        "fiber_efficiency": _f("number", 0.96, **P),
    },
    "heralding_cavity": {
        "length": _q("length", 400, "um", lo=1e-9),
        "roc1": _q("length", 500, "um", lo=1e-9),
        "roc2": _q("length", 500, "um", lo=1e-9),
        "t_oc": _q("ppm", 400, "ppm"),
        "t_hr": _q("ppm", 10, "ppm"),
        "loss": _q("ppm", 20, "ppm"),
        "atom_offset": _q("length", 0, "um", lo=-math.inf),
    },
    "entangling_cavity": {
        "length": _q("length", 75, "um", lo=1e-9),
        "roc1": _q("length", 100, "um", lo=1e-9),
        "roc2": _q("length", 200, "um", lo=1e-9),
        "t_oc": _q("ppm", 600, "ppm"),
        "t_hr": _q("ppm", 10, "ppm"),
        "loss": _q("ppm", 20, "ppm"),
        "fiber_mfd": _q("length", 10, "um", lo=1e-9),
    },
    "scheme": {
        "theta": _q("angle", 0, "rad", lo=-math.inf),
    },
    "pulse": {
        "fwhm": _q("time", 5.9, "ns", lo=0.5e-9, hi=50e-9),
        "target_residual": _f("number", 0.01, lo=1e-6, hi=0.5),
        "sweep_min": _q("time", 5, "ns", lo=0.5e-9, hi=50e-9),
        "sweep_max": _q("time", 10, "ns", lo=0.5e-9, hi=50e-9),
        "sweep_step": _q("time", 2.5, "ns", lo=1e-12),
    },
    "cascade": {
        "n_traj": _f("count", 20000, lo=1),
        "recycling_scale": _f("number", 1.0, lo=0.0),
    },
    "contrast": {
        "n_traj": _f("count", 10000, lo=1),
        "n_boot": _f("count", 30, lo=0),
        "window": _q("time", 1, "ns", lo=1e-15),
    },
    "herald": {
        "a": _f("number", -1.0),
        "b": _f("number", math.sqrt(3)),
        "c": _f("number", -math.sqrt(6)),
    },
    "repeater": {
        "L_a": _q("distance", 22, "km", lo=1e-9),
        "c_f": _q("speed", 2e5, "km/s", lo=1e-9),
        "tau": _q("time", 100, "us", lo=1e-15),
        "p_ht": _f("number", 0.53, **P),
        "eta_h": _f("number", 0.8, **P),
        "eta_t": _f("number", 0.8, **P),
        "R": _f("number", 0.61, **P),
        "p_p": _f("number", 0.8, **P),
        "L_min": _q("distance", 20, "km"),
        "L_max": _q("distance", 250, "km"),
        "L_step": _q("distance", 5, "km", lo=1e-9),
        "runs": _f("count", 100000, lo=1),
        "n_boot": _f("count", 1000, lo=10),
    },
    "keyrate": {
        "contrast": _f("number", 0.97, **P),
        "bsm_fidelity": _f("number", 0.95, lo=0.25, hi=1.0),
        "N": _f("count", 2, lo=1),
    },
}

_LINE = re.compile(r"^\s*([A-Za-z_]\w*)\.([A-Za-z_]\w*)\s*=\s*(\S+)(?:\s+(\S+))?\s*$")


class ConfigError(ValueError):
    """Invalid configuration; ``errors`` lists (line number, message)."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(f"line {n}: {m}" if n else m for n, m in self.errors))

    def as_record(self):
        return {"error": "config", "details": [{"line": n, "message": m} for n, m in self.errors]}


@dataclass
class ScenarioConfig:
    """Resolved configuration in internal units."""

    values: dict = field(default_factory=dict)

    def __post_init__(self):
        full = {s: {k: f.default for k, f in keys.items()} for s, keys in SCHEMA.items()}
        for s, keys in self.values.items():
            full[s].update(keys)
        self.values = full

    def __getitem__(self, item):
        section, key = item.split(".")
        return self.values[section][key]

    def set(self, name, value):
        """Set an already-converted value, validating its range."""
        section, key = name.split(".")
        spec = SCHEMA[section][key]
        _check_range(name, spec, value, 0)
        self.values[section][key] = value

    @property
    def seed(self):
        return self["run.seed"]

    def to_text(self):
        """Canonical text form (12 significant digits)."""
        lines = []
        for s, keys in SCHEMA.items():
            for k, spec in keys.items():
                v = self.values[s][k]
                if v is None:
                    continue
                if spec.kind in ("count", "text"):
                    lines.append(f"{s}.{k} = {v}")
                elif spec.kind == "number":
                    lines.append(f"{s}.{k} = {v:.12g}")
                else:
                    lines.append(f"{s}.{k} = {v / UNITS[spec.kind][spec.unit]:.12g} {spec.unit}")
        return "\n".join(lines) + "\n"

    # builders for the module parameter objects
    def cavities(self):
        from .cascade import CrossedCavityParams

        c = self.values["cavity"]
        return CrossedCavityParams(**c)

    def scheme(self):
        from .cascade import LevelScheme

        return LevelScheme(theta=self["scheme.theta"])

    def link_params(self):
        from .repeater import LinkParams

        r = self.values["repeater"]
        return LinkParams(**{k: r[k] for k in ("L_a", "c_f", "tau", "p_ht", "eta_h", "eta_t", "R", "p_p")})


def _check_range(name, spec, value, lineno):
    if spec.kind == "text" or value is None:
        return
    if not spec.lo <= value <= spec.hi:
        unit = UNITS[spec.kind].get(spec.unit, 1.0) if spec.unit else 1.0
        raise ConfigError([(lineno, f"{name} = {value / unit:g} {spec.unit}".rstrip()
                            + f" outside [{spec.lo / unit:g}, {spec.hi / unit:g}]")])


def convert(name, raw, unit, lineno=0):
    """Convert one textual value (and unit) for ``section.key`` to internal units."""
    section, key = name.split(".")
    if section not in SCHEMA or key not in SCHEMA[section]:
        raise ConfigError([(lineno, f"unknown key {name}")])
    spec = SCHEMA[section][key]
    table = UNITS[spec.kind]
    if spec.kind == "text":
        if unit:
            raise ConfigError([(lineno, f"{name} takes a single value")])
        return raw
    if table:
        if not unit:
            raise ConfigError([(lineno, f"{name} needs a unit ({', '.join(table)})")])
        if unit not in table:
            raise ConfigError([(lineno, f"{name}: unit {unit!r} not one of {', '.join(table)}")])
    elif unit:
        raise ConfigError([(lineno, f"{name} is dimensionless, got unit {unit!r}")])
    try:
        if spec.kind == "count":
            value = int(raw)
        else:
            value = float(raw) * (table[unit] if table else 1.0)
    except ValueError:
        raise ConfigError([(lineno, f"{name}: cannot parse {raw!r}")]) from None
    if isinstance(value, float) and not math.isfinite(value):
        raise ConfigError([(lineno, f"{name}: value must be finite")])
    _check_range(name, spec, value, lineno)
    return value


def parse_config(text):
    """Parse configuration text; collects all errors before raising :class:`ConfigError`."""
    values, errors = {}, []
    for n, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        m = _LINE.match(body)
        if not m:
            errors.append((n, f"expected 'section.key = value [unit]', got {body!r}"))
            continue
        section, key, raw, unit = m.groups()
        name = f"{section}.{key}"
        try:
            values.setdefault(section, {})[key] = convert(name, raw, unit or "", n)
        except ConfigError as exc:
            errors.extend(exc.errors)
    if errors:
        raise ConfigError(errors)
    return ScenarioConfig(values)


def default_config_text():
    return resources.files("atomrepeater").joinpath("data/default.cfg").read_text(encoding="utf-8")


def load_config(path=None):
    if path is None:
        return parse_config(default_config_text())
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError([(0, f"cannot read {path}: {exc.strerror}")]) from None
    return parse_config(text)
