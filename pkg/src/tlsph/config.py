"""Scene configuration files: TOML-subset grammar, versioned, round-trip.

A config either names a built-in preset (plus optional overrides) or
describes a full scene. The `units` header selects the unit system of the
file: "SI" (m, Pa) or "mm-MPa" (lengths in mm, moduli/stresses in MPa; all
other quantities stay SI). Internally everything is SI.

The grammar is documented in docs/config.md; unknown keys are rejected so
typos fail loudly instead of silently keeping defaults.
"""

from __future__ import annotations

import math
import os
from dataclasses import replace

import tomli

from .core import (DAMAGE_DUCTILE, DAMAGE_NONE, DAMAGE_RANKINE, ContactParams,
                   DamageLaw, NumericalParams, OutOfRange, make_material)
from .scenes import (PRESETS, BCRegion, BodySpec, NotchSpec, ProbeSpec, Rect,
                     SceneSpec)

CONFIG_VERSION = 1

_DAMAGE_NAMES = {DAMAGE_NONE: "none", DAMAGE_DUCTILE: "ductile",
                 DAMAGE_RANKINE: "rankine"}
_DAMAGE_KINDS = {v: k for k, v in _DAMAGE_NAMES.items()}


class ParseError(ValueError):
    def __init__(self, line: int | None, message: str):
        self.line = line
        self.message = message
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{message}")


class ValidationError(ValueError):
    def __init__(self, field: str, message: str = ""):
        self.field = field
        super().__init__(f"invalid value for {field!r}"
                         + (f": {message}" if message else ""))


class _Units:
    """Scale factors from file units to SI."""

    def __init__(self, name: str):
        if name == "SI":
            self.length = 1.0
            self.stress = 1.0
        elif name == "mm-MPa":
            self.length = 1e-3
            self.stress = 1e6
        else:
            raise ValidationError("units", f"unknown unit system {name!r}")
        self.name = name


def _check_keys(table: dict, allowed: set[str], where: str) -> None:
    for key in table:
        if key not in allowed:
            raise ParseError(None, f"unknown key {key!r} in {where}")


def _rect(values, u: _Units, where: str) -> Rect:
    if not (isinstance(values, list) and len(values) == 4):
        raise ParseError(None, f"{where} must be [x0, y0, x1, y1]")
    x0, y0, x1, y1 = (float(v) * u.length for v in values)
    return Rect(x0, y0, x1, y1)


def _pair(values, where: str, scale: float = 1.0) -> tuple[float, float]:
    if not (isinstance(values, list) and len(values) == 2):
        raise ParseError(None, f"{where} must be a pair of numbers")
    return (float(values[0]) * scale, float(values[1]) * scale)


def _damage_law(table: dict, where: str) -> DamageLaw:
    _check_keys(table, {"kind", "threshold"}, where)
    kind = table.get("kind", "none")
    if kind not in _DAMAGE_KINDS:
        raise ValidationError("damage.kind", f"unknown kind {kind!r}")
    threshold = float(table.get("threshold", 0.0))
    if kind == "none":
        return DamageLaw.none()
    if kind == "ductile":
        return DamageLaw.ductile(threshold)
    return DamageLaw.rankine(threshold)


def _material(table: dict, u: _Units, where: str):
    _check_keys(table, {"rho0", "E", "nu", "sigma_y", "damage"}, where)
    try:
        return make_material(
            rho0=float(table["rho0"]),
            E=float(table["E"]) * u.stress,
            nu=float(table["nu"]),
            sigma_y=float(table["sigma_y"]) * u.stress,
            damage_law=_damage_law(table.get("damage", {}), f"{where}.damage"),
        )
    except KeyError as exc:
        raise ParseError(None, f"missing key {exc.args[0]!r} in {where}") from None
    except OutOfRange as exc:
        raise ValidationError(exc.field, str(exc)) from None


def _notch(table: dict, u: _Units, where: str) -> NotchSpec:
    _check_keys(table, {"center", "width", "depth", "edge"}, where)
    try:
        return NotchSpec(center=float(table["center"]) * u.length,
                         width=float(table["width"]) * u.length,
                         depth=float(table["depth"]) * u.length,
                         edge=table.get("edge", "bottom"))
    except KeyError as exc:
        raise ParseError(None, f"missing key {exc.args[0]!r} in {where}") from None


def _body(table: dict, u: _Units, where: str) -> BodySpec:
    _check_keys(table, {"name", "body_id", "region", "velocity", "material",
                        "notches", "shape"}, where)
    try:
        return BodySpec(
            name=str(table["name"]),
            material=_material(table["material"], u, f"{where}.material"),
            region=_rect(table["region"], u, f"{where}.region"),
            body_id=int(table["body_id"]),
            velocity=_pair(table.get("velocity", [0.0, 0.0]),
                           f"{where}.velocity"),
            notches=tuple(_notch(t, u, f"{where}.notches[{k}]")
                          for k, t in enumerate(table.get("notches", []))),
            shape=str(table.get("shape", "rect")),
        )
    except KeyError as exc:
        raise ParseError(None, f"missing key {exc.args[0]!r} in {where}") from None


def _params(table: dict, u: _Units) -> NumericalParams:
    _check_keys(table, {"dp", "h", "r_neighbor", "beta1", "beta2", "eps_visc",
                        "cfl", "dt_max"}, "[params]")
    if "dp" not in table:
        raise ParseError(None, "missing key 'dp' in [params]")
    kwargs = {}
    for key in ("dp", "h", "r_neighbor"):
        if key in table:
            kwargs[key] = float(table[key]) * u.length
    for key in ("beta1", "beta2", "eps_visc", "cfl", "dt_max"):
        if key in table:
            kwargs[key] = float(table[key])
    try:
        return NumericalParams(**kwargs)
    except OutOfRange as exc:
        raise ValidationError(exc.field, str(exc)) from None


def _contact(table: dict) -> ContactParams:
    _check_keys(table, {"k_contact", "K_p"}, "[contact]")
    try:
        return ContactParams(**{k: float(v) for k, v in table.items()})
    except OutOfRange as exc:
        raise ValidationError(exc.field, str(exc)) from None


def _scene_fields(table: dict, u: _Units) -> dict:
    _check_keys(table, {"name", "t_end", "snapshot_every", "crack_origin",
                        "crack_axis"}, "[scene]")
    out: dict = {}
    if "name" in table:
        out["name"] = str(table["name"])
    if "t_end" in table:
        out["t_end"] = float(table["t_end"])
    if "snapshot_every" in table:
        out["snapshot_every"] = int(table["snapshot_every"])
    if "crack_origin" in table:
        out["crack_origin"] = _pair(table["crack_origin"],
                                    "[scene].crack_origin", u.length)
    if "crack_axis" in table:
        out["crack_axis"] = _pair(table["crack_axis"], "[scene].crack_axis")
    return out


def _full_scene(doc: dict, u: _Units) -> SceneSpec:
    scene = _scene_fields(doc.get("scene", {}), u)
    if "name" not in scene:
        raise ParseError(None, "missing key 'name' in [scene]")
    if "params" not in doc:
        raise ParseError(None, "missing [params] table")
    if "bodies" not in doc or not doc["bodies"]:
        raise ParseError(None, "at least one [[bodies]] table is required")
    bodies = tuple(_body(t, u, f"[[bodies]][{k}]")
                   for k, t in enumerate(doc["bodies"]))
    bcs = []
    for k, t in enumerate(doc.get("bc_regions", [])):
        where = f"[[bc_regions]][{k}]"
        _check_keys(t, {"region", "kind", "value", "rise_time"}, where)
        bcs.append(BCRegion(region=_rect(t["region"], u, where),
                            kind=str(t.get("kind", "fixed")),
                            value=_pair(t.get("value", [0.0, 0.0]),
                                        f"{where}.value"),
                            rise_time=float(t.get("rise_time", 0.0))))
    probes = {}
    for name, t in doc.get("probes", {}).items():
        where = f"[probes.{name}]"
        _check_keys(t, {"x", "y", "body_id"}, where)
        probes[name] = ProbeSpec(x=float(t["x"]) * u.length,
                                 y=float(t["y"]) * u.length,
                                 body_id=int(t.get("body_id", 0)))
    return SceneSpec(params=_params(doc["params"], u),
                     contact=_contact(doc.get("contact", {})),
                     bodies=bodies, bc_regions=tuple(bcs), probes=probes,
                     **scene)


def _preset_scene(doc: dict, u: _Units) -> SceneSpec:
    name = doc["preset"]
    if name not in PRESETS:
        raise ValidationError("preset", f"unknown preset {name!r}; "
                              f"choose from {sorted(PRESETS)}")
    args = dict(doc.get("preset_args", {}))
    if "dp" in args:
        args["dp"] = float(args["dp"]) * u.length
    spec = PRESETS[name](**args)
    if "params" in doc:
        merged = {**{k: getattr(spec.params, k)
                     for k in ("dp", "h", "r_neighbor", "beta1", "beta2",
                               "eps_visc", "cfl", "dt_max")},
                  **_params_overrides(doc["params"], u)}
        spec = replace(spec, params=NumericalParams(**merged))
    if "contact" in doc:
        _check_keys(doc["contact"], {"k_contact", "K_p"}, "[contact]")
        spec = replace(spec, contact=replace(
            spec.contact, **{k: float(v) for k, v in doc["contact"].items()}))
    if "scene" in doc:
        spec = replace(spec, **_scene_fields(doc["scene"], u))
    if "material" in doc:
        spec = _override_materials(spec, doc["material"], u)
    return spec


def _params_overrides(table: dict, u: _Units) -> dict:
    _check_keys(table, {"dp", "h", "r_neighbor", "beta1", "beta2", "eps_visc",
                        "cfl", "dt_max"}, "[params]")
    out = {}
    for key, value in table.items():
        scale = u.length if key in ("dp", "h", "r_neighbor") else 1.0
        out[key] = float(value) * scale
    return out


def _override_materials(spec: SceneSpec, table: dict, u: _Units) -> SceneSpec:
    """Apply partial material overrides to every body (or one named body)."""
    _check_keys(table, {"body", "rho0", "E", "nu", "sigma_y", "eps_max",
                        "eps_pl_max", "threshold"}, "[material]")
    target = table.get("body")
    bodies = []
    for body in spec.bodies:
        if target is not None and body.name != target:
            bodies.append(body)
            continue
        mat = body.material
        law = mat.damage_law
        threshold = law.threshold
        for alias in ("threshold", "eps_max", "eps_pl_max"):
            if alias in table:
                threshold = float(table[alias])
        if threshold != law.threshold:
            if law.kind == DAMAGE_NONE:
                raise ValidationError("threshold",
                                      f"body {body.name!r} has no damage law")
            law = DamageLaw(law.kind, threshold)
        try:
            mat = make_material(
                rho0=float(table.get("rho0", mat.rho0)),
                E=float(table.get("E", mat.E / u.stress)) * u.stress,
                nu=float(table.get("nu", mat.nu)),
                sigma_y=float(table.get("sigma_y", mat.sigma_y / u.stress))
                * u.stress,
                damage_law=law)
        except OutOfRange as exc:
            raise ValidationError(exc.field, str(exc)) from None
        bodies.append(replace(body, material=mat))
    return replace(spec, bodies=tuple(bodies))


def parse_config_text(text: str) -> SceneSpec:
    """Parse config file content into a validated SceneSpec."""
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        line = None
        msg = str(exc)
        if "(at line " in msg:
            try:
                line = int(msg.split("(at line ")[1].split(",")[0])
            except (IndexError, ValueError):
                pass
        raise ParseError(line, msg) from None

    top = {"version", "units", "preset", "preset_args", "scene", "params",
           "contact", "bodies", "bc_regions", "probes", "material"}
    _check_keys(doc, top, "top level")
    version = doc.get("version", CONFIG_VERSION)
    if version != CONFIG_VERSION:
        raise ValidationError("version", f"unsupported config version {version}")
    units = _Units(doc.get("units", "SI"))
    if "preset" in doc:
        return _preset_scene(doc, units)
    return _full_scene(doc, units)


def parse_config(path: str) -> SceneSpec:
    """Load a scene from a config file path or a built-in preset name."""
    if not os.path.exists(path):
        if path in PRESETS:
            return PRESETS[path]()
        raise ParseError(None, f"no such config file or preset: {path!r}")
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read())


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isinf(value):
            return "inf"
        return repr(value)
    if isinstance(value, int):
        return str(value)
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, (tuple, list)):
        return "[" + ", ".join(_fmt(v) for v in value) + "]"
    raise TypeError(f"cannot serialise {value!r}")


def serialize_config(spec: SceneSpec, units: str = "SI") -> str:
    """Emit a full-scene config; parse_config_text inverts it exactly for SI."""
    u = _Units(units)
    L = 1.0 / u.length
    S = 1.0 / u.stress
    out = [f"version = {CONFIG_VERSION}", f'units = "{units}"', ""]
    out.append("[scene]")
    out.append(f"name = {_fmt(spec.name)}")
    out.append(f"t_end = {_fmt(spec.t_end)}")
    out.append(f"snapshot_every = {spec.snapshot_every}")
    if spec.crack_origin is not None:
        out.append("crack_origin = "
                   + _fmt([c * L for c in spec.crack_origin]))
    out.append(f"crack_axis = {_fmt(list(spec.crack_axis))}")
    out.append("")
    p = spec.params
    out.append("[params]")
    for key in ("dp", "h", "r_neighbor"):
        out.append(f"{key} = {_fmt(getattr(p, key) * L)}")
    for key in ("beta1", "beta2", "eps_visc", "cfl"):
        out.append(f"{key} = {_fmt(getattr(p, key))}")
    if math.isfinite(p.dt_max):
        out.append(f"dt_max = {_fmt(p.dt_max)}")
    out.append("")
    out.append("[contact]")
    out.append(f"k_contact = {_fmt(spec.contact.k_contact)}")
    out.append(f"K_p = {_fmt(spec.contact.K_p)}")
    for body in spec.bodies:
        r = body.region
        out.append("")
        out.append("[[bodies]]")
        out.append(f"name = {_fmt(body.name)}")
        out.append(f"body_id = {body.body_id}")
        out.append("region = " + _fmt([r.x0 * L, r.y0 * L, r.x1 * L, r.y1 * L]))
        out.append(f"velocity = {_fmt(list(body.velocity))}")
        if body.shape != "rect":
            out.append(f"shape = {_fmt(body.shape)}")
        m = body.material
        out.append("[bodies.material]")
        out.append(f"rho0 = {_fmt(m.rho0)}")
        out.append(f"E = {_fmt(m.E * S)}")
        out.append(f"nu = {_fmt(m.nu)}")
        out.append(f"sigma_y = {_fmt(m.sigma_y * S)}")
        if m.damage_law.kind != DAMAGE_NONE:
            out.append("[bodies.material.damage]")
            out.append(f"kind = {_fmt(_DAMAGE_NAMES[m.damage_law.kind])}")
            out.append(f"threshold = {_fmt(m.damage_law.threshold)}")
        for notch in body.notches:
            out.append("[[bodies.notches]]")
            out.append(f"center = {_fmt(notch.center * L)}")
            out.append(f"width = {_fmt(notch.width * L)}")
            out.append(f"depth = {_fmt(notch.depth * L)}")
            out.append(f"edge = {_fmt(notch.edge)}")
    for bc in spec.bc_regions:
        r = bc.region
        out.append("")
        out.append("[[bc_regions]]")
        out.append("region = " + _fmt([r.x0 * L, r.y0 * L, r.x1 * L, r.y1 * L]))
        out.append(f"kind = {_fmt(bc.kind)}")
        out.append(f"value = {_fmt(list(bc.value))}")
        if bc.rise_time:
            out.append(f"rise_time = {_fmt(bc.rise_time)}")
    for name, probe in spec.probes.items():
        out.append("")
        out.append(f"[probes.{name}]")
        out.append(f"x = {_fmt(probe.x * L)}")
        out.append(f"y = {_fmt(probe.y * L)}")
        out.append(f"body_id = {probe.body_id}")
    return "\n".join(out) + "\n"
