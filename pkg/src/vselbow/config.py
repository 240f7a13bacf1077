"""Run configuration: JSON schema validation, defaults and conversion to model objects.

Config files use degrees for angles; everything past this module is radians.
"""
import copy
import json
import math
from dataclasses import replace
from importlib import resources

import jsonschema

from .characterization import ElasticProtocolConfig
from .errors import ConfigError
from .plant import ContactSpec, PayloadSpec, SegmentProps
from .presets import default_gains, default_plant, resolve_preset
from .scenarios import KINDS, default_spec

DEFAULTS = {
    "layout": "aa",
    "seed": 0,
    "output_dir": "out",
    "plant": {},
    "controller": {},
    "simulate": {
        "mode": "tracking",
        "horizon_s": 4.0,
        "preset": "stiff",
        "start_deg": 0.0,
        "target_deg": 120.0,
        "step_time_s": 0.0,
        "initial_output_deg": None,
        "backend": None,
    },
    "characterize": {"period_s": 20.0, "repetitions": 3, "presets": 9, "margin": 0.3, "payload_kg": 3.0,
                     "lever_m": 0.30, "parallel": 1},
    "scenario": {},
    "fit": {"degrees": [4, 5], "odd_in_delta": False},
}


def schema():
    return json.loads((resources.files("vselbow") / "data" / "config.schema.json").read_text())


def _path(err):
    return "/".join(str(p) for p in err.absolute_path) or "<root>"


def validate(doc):
    """Raise :class:`ConfigError` naming the offending field."""
    validator = jsonschema.Draft202012Validator(schema())
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        err = errors[0]
        raise ConfigError(err.message, _path(err))


def _merge(base, over):
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def load_config(path=None, overrides=None):
    """Validated effective configuration: defaults, then the file, then ``overrides``."""
    doc = {}
    if path is not None:
        try:
            with open(path) as fh:
                doc = json.load(fh)
        except OSError as exc:
            raise ConfigError(str(exc), "--config") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}", "--config") from None
        validate(doc)
    doc = _merge(DEFAULTS, doc)
    doc = _merge(doc, overrides or {})
    validate(doc)
    return doc


# --------------------------------------------------------------------------
# builders


def build_plant(doc, layout=None):
    p = doc.get("plant", {})
    cfg = default_plant((layout or doc["layout"]).upper(), frictionless=p.get("frictionless", False))
    tr, seg = cfg.transmission, cfg.segment
    if "tau_fric" in p or "tau_stiction" in p:
        tr = replace(tr, tau_fric=p.get("tau_fric", tr.tau_fric), tau_stiction=p.get("tau_stiction", tr.tau_stiction))
    if "segment_damping" in p:
        seg = SegmentProps(seg.m_F, seg.l_F, seg.L, seg.I_F, p["segment_damping"])
    changes = {"transmission": tr, "segment": seg}
    if "gravity" in p:
        changes["gravity"] = p["gravity"]
    if "dt_s" in p:
        changes["dt"] = p["dt_s"]
    if "payload" in p:
        pl = p["payload"]
        changes["payload"] = PayloadSpec(pl.get("mass_kg", 0.0), pl.get("lever_m", 0.30))
    if p.get("obstacle_deg") is not None:
        changes["contact"] = ContactSpec(theta_obs=math.radians(p["obstacle_deg"]))
    try:
        return cfg.with_(**changes)
    except ValueError as exc:
        raise ConfigError(str(exc), "plant") from None


def build_gains(doc, layout=None):
    gains = doc.get("controller", {}).get("gains")
    return tuple(gains) if gains else default_gains((layout or doc["layout"]).upper())


def resolve(doc_preset, plant, path):
    try:
        return resolve_preset(doc_preset, plant.transmission.theta_s_range)
    except ValueError as exc:
        raise ConfigError(str(exc), path) from None


def build_protocol(doc):
    c = doc["characterize"]
    return ElasticProtocolConfig(payload=PayloadSpec(c["payload_kg"], c["lever_m"]), period=c["period_s"],
                                 repetitions=c["repetitions"], n_presets=c["presets"], margin=c["margin"])


def build_scenario(doc, name):
    if name not in KINDS:
        raise ConfigError(f"unknown scenario {name!r}; available: {', '.join(KINDS)}", "scenario")
    spec = default_spec(name)
    s = doc.get("scenario", {})
    for key in s.get("params", {}):
        if key not in spec.params:
            raise ConfigError(f"unknown parameter for {name}; allowed: {', '.join(sorted(spec.params))}",
                              f"scenario/params/{key}")
    for key in s.get("thresholds", {}):
        if key not in spec.thresholds:
            raise ConfigError(f"unknown threshold for {name}", f"scenario/thresholds/{key}")
    changes = {}
    if "layout" in s:
        changes["layout"] = s["layout"].upper()
    if "presets" in s:
        changes["presets"] = tuple(s["presets"])
    if "horizon_s" in s:
        changes["horizon"] = s["horizon_s"]
    if s.get("params"):
        changes["params"] = s["params"]
    if s.get("thresholds"):
        changes["thresholds"] = {k: tuple(v) if isinstance(v, list) and k != "labels" else v
                                 for k, v in s["thresholds"].items()}
    return spec.with_(**changes) if changes else spec
