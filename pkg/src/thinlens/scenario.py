"""JSON scenario schema, defaults and lens construction."""
import copy

import jsonschema

from .analytic_reduction import Polynomial
from .errors import ScenarioError
from .lens_models import (ChangRefsdalLens, ConfocalPowerProfile, ConfocalProfileLens,
                          EllipseGeometry, IsothermalEllipseLens, IsothermalProfile,
                          PointMassLens, PowerProfile, RadialLens, UniformEllipseLens,
                          UniformProfile)
from .quadrature_domains import ConformalMap, nodes_and_weights, reduce_to_point_lens

SCHEMA_VERSION = 1
DEFAULTS = {"grid": 64, "tol": 1e-9, "seed": 42}

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_point = {"type": "array", "items": _num, "minItems": 2, "maxItems": 2}
_window = {"type": "array", "items": _num, "minItems": 4, "maxItems": 4}
_shear = {"type": "number", "exclusiveMinimum": -1, "exclusiveMaximum": 1}


def _obj(props, required=()):
    return {"type": "object", "properties": props, "required": list(required),
            "additionalProperties": False}


MODEL_SCHEMAS = {
    "point_masses": _obj({
        "type": {"const": "point_masses"},
        "masses": {"type": "array", "minItems": 1,
                   "items": _obj({"sigma": _pos, "z": _point}, ["sigma", "z"])},
        "shear": _shear}, ["type", "masses"]),
    "uniform_ellipse": _obj({
        "type": {"const": "uniform_ellipse"}, "a": _pos, "b": _pos, "density": _pos,
        "shear": _shear}, ["type", "a", "b", "density"]),
    "confocal_ellipse": _obj({
        "type": {"const": "confocal_ellipse"}, "a": _pos, "b": _pos, "shear": _shear,
        "profile": _obj({"kind": {"const": "power"}, "coefficient": _pos, "exponent": _num},
                        ["kind", "exponent"])}, ["type", "a", "b", "profile"]),
    "isothermal_ellipse": _obj({
        "type": {"const": "isothermal_ellipse"}, "a": _pos, "b": _pos, "strength": _pos,
        "shear": _shear}, ["type", "a", "b", "strength"]),
    "radial": _obj({
        "type": {"const": "radial"}, "radius": _pos, "shear": _shear,
        "profile": {"oneOf": [
            _obj({"kind": {"const": "uniform"}, "density": {"type": "number", "minimum": 0}},
                 ["kind", "density"]),
            _obj({"kind": {"const": "isothermal"}, "coefficient": _pos}, ["kind", "coefficient"]),
            _obj({"kind": {"const": "power"}, "density": {"type": "number", "minimum": 0},
                  "exponent": {"type": "number", "minimum": 0}}, ["kind", "density", "exponent"]),
        ]}}, ["type", "radius", "profile"]),
    "chang_refsdal": _obj({
        "type": {"const": "chang_refsdal"}, "mass": _pos, "shear": _shear}, ["type", "mass"]),
    "quadrature_domain": _obj({
        "type": {"const": "quadrature_domain"},
        "numerator": {"type": "array", "items": _point, "minItems": 1},
        "denominator": {"type": "array", "items": _point, "minItems": 1},
        "density": _pos, "shear": _shear}, ["type", "numerator"]),
}

SCENARIO_SCHEMA = _obj({
    "schema": {"const": SCHEMA_VERSION},
    "model": {"type": "object", "required": ["type"],
              "properties": {"type": {"enum": sorted(MODEL_SCHEMAS)}}},
    "source": _point,
    "solver": _obj({"grid": {"type": "integer", "minimum": 8},
                    "tol": _pos, "seed": {"type": "integer", "minimum": 0}}),
    "outputs": {"type": "array", "items": {"enum": ["results", "counts", "svg"]},
                "uniqueItems": True},
    "survey": _obj({"window": _window, "resolution": {"type": "integer", "minimum": 2},
                    "grid": {"type": "integer", "minimum": 8}, "certify": {"type": "boolean"}}),
    "critical": _obj({"window": _window, "resolution": {"type": "integer", "minimum": 16}}),
}, ["schema", "model"])


def validate(doc):
    """Validate and return a copy with defaults filled in; raises :class:`ScenarioError`."""
    try:
        jsonschema.validate(doc, SCENARIO_SCHEMA)
        jsonschema.validate(doc["model"], MODEL_SCHEMAS[doc["model"]["type"]])
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ScenarioError(f"{where}: {exc.message}") from None
    out = copy.deepcopy(doc)
    solver = {**DEFAULTS, **out.get("solver", {})}
    out["solver"] = solver
    out.setdefault("outputs", ["results", "svg"])
    return out


def _c(p):
    return complex(p[0], p[1])


def build_lens(model):
    """Lens object for a validated model block."""
    kind = model["type"]
    shear = model.get("shear", 0.0)
    try:
        if kind == "point_masses":
            return PointMassLens(tuple((m["sigma"], _c(m["z"])) for m in model["masses"]), shear)
        if kind == "uniform_ellipse":
            return UniformEllipseLens(EllipseGeometry(model["a"], model["b"]), model["density"], shear)
        if kind == "confocal_ellipse":
            prof = model["profile"]
            profile = ConfocalPowerProfile(prof.get("coefficient", 1.0), prof["exponent"], model["b"])
            return ConfocalProfileLens(EllipseGeometry(model["a"], model["b"]), profile, shear)
        if kind == "isothermal_ellipse":
            return IsothermalEllipseLens(EllipseGeometry(model["a"], model["b"]),
                                         model["strength"], shear)
        if kind == "radial":
            prof = model["profile"]
            if prof["kind"] == "uniform":
                profile = UniformProfile(prof["density"])
            elif prof["kind"] == "isothermal":
                profile = IsothermalProfile(prof["coefficient"])
            else:
                profile = PowerProfile(prof["density"], prof["exponent"])
            return RadialLens(model["radius"], profile, shear)
        if kind == "chang_refsdal":
            return ChangRefsdalLens(model["mass"], shear)
        if kind == "quadrature_domain":
            cmap = conformal_map(model)
            qd = nodes_and_weights(cmap, model.get("density", 1.0))
            return reduce_to_point_lens(qd, shear)
    except ValueError as exc:
        raise ScenarioError(f"model: {exc}") from None
    raise ScenarioError(f"model: unknown type {kind!r}")


def conformal_map(model):
    num = Polynomial([_c(p) for p in model["numerator"]])
    den = Polynomial([_c(p) for p in model.get("denominator", [[1.0, 0.0]])])
    return ConformalMap(num, den)


def source_of(scenario):
    if "source" not in scenario:
        raise ScenarioError("source: required for this command")
    return _c(scenario["source"])
