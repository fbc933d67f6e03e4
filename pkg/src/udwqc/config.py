"""Configuration files for devices and channels.

Files are TOML documents.  A top-level ``kind = "device"`` or ``kind =
"channel"`` selects the schema (see ``docs/config.md``).  Parsing collects
every problem as a :class:`FieldError` with the dotted field name and the
line it was found on; unknown keys are errors.
"""
from __future__ import annotations

import json
import math
import re
import sys
from dataclasses import dataclass
from typing import Any, Callable

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = [
    "FieldError", "ConfigError", "DeviceConfig", "ChannelConfig",
    "parse_config", "load_config", "serialize_config",
]


@dataclass(frozen=True)
class FieldError:
    field: str
    message: str
    line: int | None = None

    def __str__(self):
        where = f"line {self.line}: " if self.line else ""
        return f"{where}{self.field}: {self.message}"


class ConfigError(ValueError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("\n".join(str(e) for e in self.errors))


# --- schema -----------------------------------------------------------------

@dataclass(frozen=True)
class Key:
    type: str                       # float | int | str | bool | vec2 | vec3 | floats
    required: bool = True
    default: Any = None
    check: Callable[[Any], str | None] | None = None
    choices: tuple = ()


def _positive(v):
    return None if v > 0 else "must be positive"


def _nonnegative(v):
    return None if v >= 0 else "must be non-negative"


def _at_least(n):
    return lambda v: None if v >= n else f"must be at least {n}"


def _all_positive(v):
    return None if all(x > 0 for x in v) else "entries must be positive"


def _all_finite(v):
    return None if all(math.isfinite(x) for x in v) else "entries must be finite"


def _finite(v):
    return None if math.isfinite(v) else "must be finite"


PARAMS = {
    "epsilon": Key("float", False, check=_finite),
    "mass": Key("float", False, check=_finite),
    "lambda": Key("float", False, check=_finite),
    "A": Key("float", False, check=_finite),
    "B": Key("float", False, check=_finite),
    "M_cont": Key("float", False, check=_finite),
    "lattice_constant": Key("float", check=_positive),
}
GEOMETRY = {
    "nx": Key("int", check=_at_least(1)),
    "ny": Key("int", check=_at_least(1)),
    "boundary_x": Key("str", False, "open", choices=("open", "periodic")),
    "boundary_y": Key("str", False, "open", choices=("open", "periodic")),
}
GATE = {
    "shape": Key("str", choices=("rectangle", "disk", "half-disk")),
    "center": Key("vec2", check=_all_finite),
    "potential": Key("float", check=_finite),
    "radius": Key("float", False, check=_positive),
    "extent": Key("vec2", False, check=_all_positive),
    "normal": Key("vec2", False, check=_all_finite),
}
LOCAL_FIELD = {
    "center": Key("vec2", check=_all_finite),
    "b_vec": Key("vec3", check=_all_finite),
    "profile": Key("str", False, "disk", choices=("disk", "gaussian")),
    "width": Key("float", False, check=_positive),
}
WINDOW = {
    "e_min": Key("float", check=_finite),
    "e_max": Key("float", check=_finite),
    "max_pairs": Key("int", False, 64, check=_at_least(1)),
}
SOLVER = {
    "method": Key("str", False, "folded", choices=("folded", "shift-invert")),
    "tol": Key("float", False, 1e-12, check=_positive),
    "seed": Key("int", False, 0, check=_nonnegative),
    "krylov_factor": Key("int", False, 4, check=_at_least(2)),
    "max_restarts": Key("int", False, 40, check=_nonnegative),
    "max_iterations": Key("int", False, 200_000, check=_at_least(1)),
    "initial_pairs": Key("int", False, 8, check=_at_least(1)),
    "max_dimension": Key("int", False, 2_000_000, check=_at_least(8)),
}
BANDS = {
    "width": Key("int", check=_at_least(2)),
    "k_count": Key("int", check=_at_least(16)),
    "k_min": Key("float", False, -math.pi),
    "k_max": Key("float", False, math.pi),
    "boundary_y": Key("str", False, "open", choices=("open", "periodic")),
}

KINDS = ("Pi", "dPhi", "PiChiral+", "PiChiral-", "CosinePhi", "DiracQuadratic")
FACTOR = {
    "J": Key("float", check=_finite),
    "theta": Key("float", False, 0.0, check=_finite),
    "gap": Key("float", False, 0.0, check=_finite),
    "kind": Key("str", choices=KINDS),
    "offset": Key("float", False, 0.0, check=_finite),
    "sigma": Key("float", False, check=_positive),
    "species": Key("str", False, ""),
    "coefficient": Key("float", False, check=_finite),
    "argument": Key("float", False, check=_finite),
    "klein_sign": Key("int", False, choices=(1, -1)),
}
GATE_PLACEMENT = {
    "x": Key("float", check=_finite),
    "t": Key("float", False, 0.0, check=_finite),
}
CHANNEL = {
    "velocity": Key("float", check=_positive),
    "oracle_only": Key("bool", False, False),
}
SWEEP = {
    "J": Key("floats", check=_all_finite),
    "sigma": Key("floats", False, check=_all_positive),
    "coupling": Key("str", False, "scale", choices=("scale", "matched")),
}
ORACLE = {
    "enabled": Key("bool", False, False),
    "modes": Key("int", False, 2, check=lambda v: None if 1 <= v <= 3 else "must be 1, 2 or 3"),
    "k": Key("floats"),
    "weights": Key("floats", False, check=_all_positive),
    "n_max": Key("int", False, 12, check=lambda v: None if 1 <= v <= 12 else "must be between 1 and 12"),
    "J": Key("floats", False, check=_all_finite),
    "coupling": Key("str", False, "scale", choices=("scale", "matched")),
}

# section name -> (schema, kind, required); kind is "table" or "array"
DEVICE_SECTIONS = {
    "params": (PARAMS, "table", True),
    "geometry": (GEOMETRY, "table", True),
    "gates": (GATE, "array", False),
    "fields": (LOCAL_FIELD, "array", False),
    "window": (WINDOW, "table", True),
    "solver": (SOLVER, "table", False),
    "bands": (BANDS, "table", False),
}
CHANNEL_SECTIONS = {
    "channel": (CHANNEL, "table", True),
    "encoder": (GATE_PLACEMENT, "gate", True),
    "decoder": (GATE_PLACEMENT, "gate", True),
    "sweep": (SWEEP, "table", True),
    "oracle": (ORACLE, "table", False),
}


# --- line lookup ------------------------------------------------------------

_HEADER = re.compile(r"^\s*(\[\[?)\s*([A-Za-z0-9_.\-\"]+)\s*\]\]?")
_KEYLINE = re.compile(r"^\s*([A-Za-z0-9_\-\"]+)\s*=")


def _line_index(text: str) -> dict:
    """Map dotted paths (``gates[1].radius``) to 1-based line numbers."""
    index, counters, current = {}, {}, ""
    for no, line in enumerate(text.splitlines(), 1):
        m = _HEADER.match(line)
        if m:
            name = m.group(2).replace('"', "")
            if m.group(1) == "[[":
                counters[name] = counters.get(name, -1) + 1
                current = f"{name}[{counters[name]}]"
            else:
                current = name
            index.setdefault(current, no)
            continue
        m = _KEYLINE.match(line)
        if m:
            key = m.group(1).replace('"', "")
            index.setdefault(f"{current}.{key}" if current else key, no)
    return index


class _Ctx:
    def __init__(self, text):
        self.lines = _line_index(text)
        self.errors: list[FieldError] = []

    def line(self, path):
        while path:
            if path in self.lines:
                return self.lines[path]
            path = path.rsplit(".", 1)[0] if "." in path else ""
        return None

    def err(self, path, msg):
        self.errors.append(FieldError(path, msg, self.line(path)))


def _coerce(value, key: Key):
    t = key.type
    if t == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise TypeError("expected a number")
        return float(value)
    if t == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise TypeError("expected an integer")
        return value
    if t == "str":
        if not isinstance(value, str):
            raise TypeError("expected a string")
        return value
    if t == "bool":
        if not isinstance(value, bool):
            raise TypeError("expected true or false")
        return value
    n = {"vec2": 2, "vec3": 3}.get(t)
    if not isinstance(value, list) or (n and len(value) != n):
        raise TypeError(f"expected an array of {n} numbers" if n else "expected an array of numbers")
    out = []
    for v in value:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise TypeError("array entries must be numbers")
        out.append(float(v))
    if t == "floats" and not out:
        raise TypeError("array must not be empty")
    return out


def _table(data, schema, path, ctx):
    if not isinstance(data, dict):
        ctx.err(path, "expected a table")
        return {}
    out = {}
    for k in data:
        if k not in schema:
            ctx.err(f"{path}.{k}", "unknown key")
    for k, key in schema.items():
        p = f"{path}.{k}"
        if k not in data:
            if key.required:
                ctx.err(p, "missing required key")
            elif key.default is not None:
                out[k] = key.default
            continue
        try:
            v = _coerce(data[k], key)
        except TypeError as exc:
            ctx.err(p, str(exc))
            continue
        if key.choices and v not in key.choices:
            ctx.err(p, f"must be one of {', '.join(map(str, key.choices))}")
            continue
        msg = key.check(v) if key.check else None
        if msg:
            ctx.err(p, msg)
            continue
        out[k] = v
    return out


def _sections(doc, sections, ctx):
    out = {}
    for k in doc:
        if k != "kind" and k not in sections:
            ctx.err(k, "unknown section")
    missing = [k for k, (_, _, req) in sections.items() if req and k not in doc]
    if missing:
        ctx.err("document", "missing required section(s): " + ", ".join(missing))
    for name, (schema, kind, _) in sections.items():
        if name not in doc:
            if kind == "array":
                out[name] = []
            continue
        val = doc[name]
        if kind == "array":
            if not isinstance(val, list):
                ctx.err(name, "expected an array of tables ([[%s]])" % name)
                continue
            out[name] = [_table(v, schema, f"{name}[{i}]", ctx) for i, v in enumerate(val)]
        elif kind == "gate":
            out[name] = _gate(val, name, ctx)
        else:
            out[name] = _table(val, schema, name, ctx)
    return out


def _gate(val, name, ctx):
    if not isinstance(val, dict):
        ctx.err(name, "expected a table")
        return {}
    factors = val.get("factors")
    rest = {k: v for k, v in val.items() if k != "factors"}
    out = _table(rest, GATE_PLACEMENT, name, ctx)
    if not isinstance(factors, list) or not factors:
        ctx.err(f"{name}.factors", "at least one [[%s.factors]] table is required" % name)
        out["factors"] = []
        return out
    out["factors"] = []
    for i, f in enumerate(factors):
        p = f"{name}.factors[{i}]"
        t = _table(f, FACTOR, p, ctx)
        if t.get("kind") in ("Pi", "dPhi", "PiChiral+", "PiChiral-", "DiracQuadratic") \
                and isinstance(f, dict) and "sigma" not in f:
            ctx.err(f"{p}.sigma", f"required for kind {t['kind']}")
        out["factors"].append(t)
    return out


# --- configs ----------------------------------------------------------------

@dataclass
class DeviceConfig:
    data: dict

    def params(self):
        from .bhz import BhzParams, continuum_map
        p = self.data["params"]
        if "epsilon" in p:
            return BhzParams(p["epsilon"], p["mass"], p["lambda"], p["lattice_constant"])
        return continuum_map(p["A"], p["B"], p["M_cont"], p["lattice_constant"])

    def geometry(self):
        from .bhz import DeviceGeometry
        g = self.data["geometry"]
        return DeviceGeometry(g["nx"], g["ny"], g["boundary_x"], g["boundary_y"])

    def gates(self):
        from .bhz import GateRegion
        out = []
        for g in self.data["gates"]:
            kw = {k: tuple(g[k]) for k in ("extent", "normal") if k in g}
            if "radius" in g:
                kw["radius"] = g["radius"]
            out.append(GateRegion(g["shape"], tuple(g["center"]), g["potential"], **kw))
        return out

    def fields(self):
        from .bhz import LocalField
        out = []
        for f in self.data["fields"]:
            kw = {"width": f["width"]} if "width" in f else {}
            out.append(LocalField(tuple(f["center"]), tuple(f["b_vec"]), f["profile"], **kw))
        return out

    def window(self):
        from .spectra import SpectralWindow
        w = self.data["window"]
        return SpectralWindow(w["e_min"], w["e_max"], w["max_pairs"])

    def solver(self, seed: int | None = None):
        from .spectra import SolverOptions
        s = dict(_defaults(SOLVER), **self.data.get("solver", {}))
        s.pop("max_dimension")
        if seed is not None:
            s["seed"] = seed
        return SolverOptions(**s)

    @property
    def max_dimension(self) -> int:
        return self.data.get("solver", {}).get("max_dimension", SOLVER["max_dimension"].default)


@dataclass
class ChannelConfig:
    data: dict

    @property
    def velocity(self) -> float:
        return self.data["channel"]["velocity"]

    def gate(self, name):
        from .fields import DetectorOp, FieldObservable, GateFactor, GateSpec, SmearingProfile
        g = self.data[name]
        factors = []
        for f in g["factors"]:
            sm = SmearingProfile(g["x"] + f["offset"], f["sigma"]) if "sigma" in f else None
            extra = {k: f[k] for k in ("coefficient", "argument", "klein_sign") if k in f}
            o = FieldObservable(f["kind"], sm, g["t"], self.velocity, f["species"], **extra)
            factors.append(GateFactor(f["J"], DetectorOp(f["theta"], f["gap"]), o))
        return GateSpec(tuple(factors), name)

    def setup(self):
        from .channel import ChannelSetup
        return ChannelSetup(self.gate("encoder"), self.gate("decoder"))

    @property
    def sweep(self) -> dict:
        return self.data["sweep"]

    @property
    def oracle(self) -> dict | None:
        o = self.data.get("oracle")
        return o if o and o.get("enabled") else None


def _defaults(schema):
    return {k: v.default for k, v in schema.items() if v.default is not None}


def _check_device(data, ctx):
    p = data.get("params", {})
    lattice = {"epsilon", "mass", "lambda"} & p.keys()
    cont = {"A", "B", "M_cont"} & p.keys()
    if lattice and cont:
        ctx.err("params", "give either epsilon/mass/lambda or A/B/M_cont, not both")
    elif lattice or cont:
        need = {"epsilon", "mass", "lambda"} if lattice else {"A", "B", "M_cont"}
        for k in sorted(need - p.keys()):
            ctx.err(f"params.{k}", "missing required key")
        if cont and p.get("B") == 0:
            ctx.err("params.B", "must be nonzero")
    elif "params" in data:
        ctx.err("params", "missing epsilon/mass/lambda (or A/B/M_cont)")
    w = data.get("window", {})
    if "e_min" in w and "e_max" in w and not w["e_min"] < w["e_max"]:
        ctx.err("window.e_max", "must exceed e_min")
    b = data.get("bands")
    if b and "k_min" in b and "k_max" in b:
        if not -math.pi <= b["k_min"] < b["k_max"] <= math.pi:
            ctx.err("bands.k_max", "k range must satisfy -pi <= k_min < k_max <= pi")
    for i, g in enumerate(data.get("gates", [])):
        if g.get("shape") == "rectangle" and "extent" not in g:
            ctx.err(f"gates[{i}].extent", "required for rectangle gates")
        if g.get("shape") in ("disk", "half-disk") and "radius" not in g:
            ctx.err(f"gates[{i}].radius", "required for disk and half-disk gates")
    if not ctx.errors:
        try:
            cfg = DeviceConfig(data)
            cfg.params(), cfg.geometry(), cfg.gates(), cfg.fields()
        except ValueError as exc:
            ctx.err("params", str(exc))


def _check_channel(data, ctx):
    if all(k in data for k in ("encoder", "decoder")):
        ta, tb = data["encoder"].get("t"), data["decoder"].get("t")
        if ta is not None and tb is not None and tb < ta:
            ctx.err("decoder.t", "decoder must act no earlier than the encoder")
    o = data.get("oracle")
    if o and "k" in o and "modes" in o and len(o["k"]) != o["modes"]:
        ctx.err("oracle.k", "needs one entry per mode")
    if o and "weights" in o and "k" in o and len(o["weights"]) != len(o["k"]):
        ctx.err("oracle.weights", "needs one entry per mode")


def parse_config(text: str) -> DeviceConfig | ChannelConfig:
    """Parse and validate a configuration document; raises :class:`ConfigError`."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigError([FieldError("document", str(exc), int(m.group(1)) if m else None)])
    ctx = _Ctx(text)
    if not doc:
        raise ConfigError([FieldError("document", "empty document; required: kind and sections "
                                      + ", ".join(k for k, v in DEVICE_SECTIONS.items() if v[2])
                                      + " (device) or "
                                      + ", ".join(k for k, v in CHANNEL_SECTIONS.items() if v[2])
                                      + " (channel)")])
    kind = doc.get("kind")
    if kind not in ("device", "channel"):
        raise ConfigError([FieldError("kind", 'must be "device" or "channel"', ctx.line("kind"))])
    sections = DEVICE_SECTIONS if kind == "device" else CHANNEL_SECTIONS
    data = _sections(doc, sections, ctx)
    data["kind"] = kind
    (_check_device if kind == "device" else _check_channel)(data, ctx)
    if ctx.errors:
        raise ConfigError(ctx.errors)
    return DeviceConfig(data) if kind == "device" else ChannelConfig(data)


def load_config(path) -> DeviceConfig | ChannelConfig:
    with open(path, "rb") as fh:
        raw = fh.read()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ConfigError([FieldError("document", f"not valid UTF-8: {exc}")])
    return parse_config(text)


# --- serialization ----------------------------------------------------------

def _value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_value(x) for x in v) + "]"
    raise TypeError(f"cannot serialize {type(v).__name__}")


def _emit(lines, header, table):
    lines.append(header)
    for k, v in table.items():
        if k != "factors":
            lines.append(f"{k} = {_value(v)}")
    lines.append("")


def serialize_config(cfg: DeviceConfig | ChannelConfig) -> str:
    """TOML text that parses back to an equal config."""
    d = cfg.data
    lines = [f'kind = "{d["kind"]}"', ""]
    sections = DEVICE_SECTIONS if d["kind"] == "device" else CHANNEL_SECTIONS
    for name, (_, kind, _) in sections.items():
        if name not in d:
            continue
        if kind == "array":
            for t in d[name]:
                _emit(lines, f"[[{name}]]", t)
        elif kind == "gate":
            _emit(lines, f"[{name}]", d[name])
            for f in d[name]["factors"]:
                _emit(lines, f"[[{name}.factors]]", f)
        else:
            _emit(lines, f"[{name}]", d[name])
    return "\n".join(lines)
