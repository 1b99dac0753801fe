"""JSON run configuration: parsing, validation, defaults, and named presets.

One JSON document describes a complete run: the plant, the output
constraint with its tightening, the disturbance model and seed, the
governor tuning, the reference profile, and the step count. A document may
start from a named preset ("preset": "desk-scale") and override any subset
of keys; the bundled presets live next to this module.

Constraint bounds use null for an unbounded side. The governor's epsilon
may be given either as constraint.epsilon or governor.epsilon (they are the
same quantity; giving both with different values is an error).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .constraints import ConstraintSet
from .disturbance import DisturbanceModel
from .dynamics import Plant, make_plant
from .errors import ConfigError
from .governor import GovernorConfig
from .harness import ReferenceProfile

__all__ = ["RunSetup", "load_config", "load_preset", "preset_names", "DEFAULT_PRESET"]

DEFAULT_PRESET = "desk-scale"


@dataclass
class RunSetup:
    """Everything a closed-loop run or benchmark needs, already validated."""

    plant: Plant
    cset: ConstraintSet
    epsilon: float
    tighten_mode: str
    model: DisturbanceModel
    governor: GovernorConfig
    profile: ReferenceProfile
    steps: int
    seed: int
    raw: dict


def preset_names() -> list[str]:
    root = resources.files("refgov").joinpath("presets")
    return sorted(p.name[: -len(".json")] for p in root.iterdir() if p.name.endswith(".json"))


def load_preset(name: str) -> dict:
    path = resources.files("refgov").joinpath("presets", f"{name}.json")
    try:
        return json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(
            f"unknown preset {name!r}; bundled presets: {preset_names()}"
        ) from None


def _merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def _bound(value, side: str) -> float:
    if value is None:
        return -math.inf if side == "lower" else math.inf
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"constraint.{side} must be a number or null, got {value!r}") from None


def _dig(doc: dict, path: tuple):
    for key in path:
        if not isinstance(doc, dict):
            return None
        doc = doc.get(key)
    return doc


def _dual_value(doc: dict, path_a: tuple, path_b: tuple, name: str):
    """A quantity accepted at two locations of the same document.

    Both present with different values is a contradiction; the check only
    applies within one document, so an override may restate the quantity
    at either spot without tripping over what its preset chose.
    """
    a, b = _dig(doc, path_a), _dig(doc, path_b)
    if a is not None and b is not None and a != b:
        raise ConfigError(
            f"{name} given twice with different values: "
            f"{'.'.join(path_a)}={a}, {'.'.join(path_b)}={b}"
        )
    return b if b is not None else a


def _strip(doc: dict, path: tuple) -> None:
    parent = _dig(doc, path[:-1]) if len(path) > 1 else doc
    if isinstance(parent, dict):
        parent.pop(path[-1], None)


def load_config(source=None) -> RunSetup:
    """Build a validated RunSetup from a JSON file path, a dict, or None.

    None loads the default preset unchanged. A dict or file may name a
    "preset" to start from; its remaining keys override the preset's.
    """
    if source is None:
        doc: dict = {}
    elif isinstance(source, dict):
        doc = dict(source)
    else:
        path = Path(source)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: invalid JSON: {e}") from None
        if not isinstance(doc, dict):
            raise ConfigError(f"{path}: top level must be a JSON object")

    preset = doc.pop("preset", DEFAULT_PRESET)
    if not isinstance(preset, str):
        raise ConfigError(f"preset must be a string, got {preset!r}")
    preset_doc = load_preset(preset)

    # epsilon and seed each have two accepted spots; resolve them per
    # document (override beats preset) before merging flattens provenance.
    eps_path_a, eps_path_b = ("constraint", "epsilon"), ("governor", "epsilon")
    seed_path_a, seed_path_b = ("seed",), ("disturbance", "seed")
    epsilon = _dual_value(doc, eps_path_a, eps_path_b, "epsilon")
    seed = _dual_value(doc, seed_path_a, seed_path_b, "seed")
    if epsilon is None:
        epsilon = _dual_value(preset_doc, eps_path_a, eps_path_b, "epsilon")
    if seed is None:
        seed = _dual_value(preset_doc, seed_path_a, seed_path_b, "seed")

    doc = _merge(preset_doc, doc)
    for path in (eps_path_a, eps_path_b, seed_path_a, seed_path_b):
        _strip(doc, path)

    known = {"plant", "constraint", "disturbance", "governor", "profile", "steps", "seed"}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}; known: {sorted(known)}")

    plant_doc = dict(doc.get("plant", {}))
    kind = plant_doc.pop("kind", "surrogate-fc")
    try:
        plant = make_plant(kind, **plant_doc)
    except TypeError as e:
        raise ConfigError(f"plant: {e}") from None

    cons = dict(doc.get("constraint", {}))
    lower = _bound(cons.pop("lower", None), "lower")
    upper = _bound(cons.pop("upper", None), "upper")
    anchor = float(cons.pop("anchor", 0.0))
    tighten_mode = cons.pop("tighten_mode", "scale")
    if tighten_mode not in ("scale", "margin"):
        raise ConfigError(f"constraint.tighten_mode must be scale or margin, got {tighten_mode!r}")
    if cons:
        raise ConfigError(f"unknown constraint keys {sorted(cons)}")
    cset = ConstraintSet(lower, upper, anchor=anchor)

    gov = dict(doc.get("governor", {}))
    epsilon = 0.05 if epsilon is None else float(epsilon)
    try:
        governor = GovernorConfig(epsilon=epsilon, tighten_mode=tighten_mode, **gov)
    except TypeError as e:
        raise ConfigError(f"governor: {e}") from None

    dist = dict(doc.get("disturbance", {}))
    ranges = dist.pop("ranges", None)
    dist_kind = dist.pop("kind", "uniform")
    if dist:
        raise ConfigError(f"unknown disturbance keys {sorted(dist)}")
    if ranges is None:
        raise ConfigError("disturbance.ranges is required")
    model = DisturbanceModel(tuple(tuple(r) for r in ranges), kind=dist_kind)
    if model.state_dim != plant.state_dim:
        raise ConfigError(
            f"disturbance.ranges has {model.state_dim} entries, plant has "
            f"{plant.state_dim} states"
        )

    seed = 2024 if seed is None else int(seed)

    profile_doc = doc.get("profile")
    if profile_doc is None:
        raise ConfigError("profile is required (list of [t_start, r] pairs)")
    profile = ReferenceProfile(tuple(tuple(p) for p in profile_doc))

    steps = int(doc.get("steps", 2000))
    if steps < 1:
        raise ConfigError(f"steps must be >= 1, got {steps}")

    return RunSetup(
        plant=plant,
        cset=cset,
        epsilon=epsilon,
        tighten_mode=tighten_mode,
        model=model,
        governor=governor,
        profile=profile,
        steps=steps,
        seed=seed,
        raw=doc,
    )
