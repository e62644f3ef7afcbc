"""Scenario files: JSON documents describing one two-photon layout.

Angles are degrees in files and radians in :class:`~bwave.geometry.ScenarioConfig`.
The file model keeps the degree values, so a parse/serialize/parse round trip is
exact.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from .geometry import SPEED_OF_LIGHT, TRIGGER_RULES, OpticalElement, ScenarioConfig
from .polarization import IDENTITY, hwp, rotator

__all__ = [
    "ScenarioFileError",
    "ElementSpec",
    "ScenarioSpec",
    "SWEEP_PARAMS",
    "DEG",
    "parse_scenario",
    "load_scenario",
    "dump_scenario",
    "default_scenario",
]

DEG = math.pi / 180
SWEEP_PARAMS = ("b_deg", "pc.theta_deg", "v_b", "y")
_ELEMENT_KINDS = {"hwp": hwp, "rotator": rotator}
_SPEED_WORDS = ("instantaneous", "none")


class ScenarioFileError(ValueError):
    """Malformed scenario document; the message names the offending key or line."""


@dataclass(frozen=True)
class ElementSpec:
    arm: int
    kind: str
    theta_deg: float
    position: float


@dataclass(frozen=True)
class ScenarioSpec:
    x_a: float
    y: float
    x_b: float
    x: float
    c: float = SPEED_OF_LIGHT
    v_b: float | str = 1e4 * SPEED_OF_LIGHT
    a_deg: float = 0.0
    b_deg: float = 0.0
    pc_kind: str = "rotator"
    pc_theta_deg: float = 45.0
    extra_elements: tuple[ElementSpec, ...] = field(default=())
    rule: str = "on_reflection_D1prime"
    trials: int = 10_000
    seed: int = 0

    def to_config(self) -> ScenarioConfig:
        if isinstance(self.v_b, str):
            mode, v_b = self.v_b, None
        else:
            mode, v_b = "finite", self.v_b
        elements = tuple(
            OpticalElement(arm=e.arm, position=e.position, idle=_ELEMENT_KINDS[e.kind](e.theta_deg * DEG),
                           name=f"{e.kind}{i}")
            for i, e in enumerate(self.extra_elements)
        )
        return ScenarioConfig(
            x_a=self.x_a, y=self.y, x_b=self.x_b, x=self.x, c=self.c, v_b=v_b,
            a=self.a_deg * DEG, b=self.b_deg * DEG,
            pc=_ELEMENT_KINDS[self.pc_kind](self.pc_theta_deg * DEG),
            trigger_rule=self.rule, bwave_mode=mode, extra_elements=elements,
            trials=self.trials, seed=self.seed,
        )

    def with_param(self, name: str, value: float) -> ScenarioSpec:
        """Copy with one sweepable parameter changed."""
        if name not in SWEEP_PARAMS:
            raise ScenarioFileError(f"unknown sweep parameter {name!r}; expected one of {SWEEP_PARAMS}")
        key = "pc_theta_deg" if name == "pc.theta_deg" else name
        return replace(self, **{key: float(value)})

    def to_document(self) -> dict:
        return {
            "geometry": {"x_a": self.x_a, "y": self.y, "x_b": self.x_b, "x": self.x},
            "speeds": {"c": self.c, "v_b": self.v_b},
            "optics": {
                "a_deg": self.a_deg,
                "b_deg": self.b_deg,
                "pc": {"kind": self.pc_kind, "theta_deg": self.pc_theta_deg},
                "extra_elements": [asdict(e) for e in self.extra_elements],
            },
            "trigger": {"rule": self.rule},
            "run": {"trials": self.trials, "seed": self.seed},
        }


_LAYOUT = {
    "geometry": {"x_a", "y", "x_b", "x"},
    "speeds": {"c", "v_b"},
    "optics": {"a_deg", "b_deg", "pc", "extra_elements"},
    "trigger": {"rule"},
    "run": {"trials", "seed"},
}
_REQUIRED = {"geometry": {"x_a", "y", "x_b", "x"}}


def _check_keys(obj, allowed, where):
    if not isinstance(obj, dict):
        raise ScenarioFileError(f"{where}: expected an object, got {type(obj).__name__}")
    unknown = sorted(set(obj) - set(allowed))
    if unknown:
        raise ScenarioFileError(f"{where}: unknown key(s) {', '.join(map(repr, unknown))}")


def _number(obj, key, where, default=None):
    if key not in obj:
        if default is None:
            raise ScenarioFileError(f"{where}.{key}: missing")
        return default
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ScenarioFileError(f"{where}.{key}: expected a number, got {v!r}")
    return float(v)


def _integer(obj, key, where, default):
    v = obj.get(key, default)
    if isinstance(v, bool) or not isinstance(v, int) or v < 0:
        raise ScenarioFileError(f"{where}.{key}: expected a non-negative integer, got {v!r}")
    return v


def _kind(obj, where):
    kind = obj.get("kind")
    if kind not in _ELEMENT_KINDS:
        raise ScenarioFileError(f"{where}.kind: expected one of {sorted(_ELEMENT_KINDS)}, got {kind!r}")
    return kind


def parse_scenario(text: str) -> ScenarioSpec:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioFileError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    _check_keys(doc, _LAYOUT, "scenario")
    for section, keys in _LAYOUT.items():
        _check_keys(doc.get(section, {}), keys, section)
    for section, keys in _REQUIRED.items():
        missing = sorted(keys - set(doc.get(section, {})))
        if missing:
            raise ScenarioFileError(f"{section}: missing key(s) {', '.join(map(repr, missing))}")

    geo = doc["geometry"]
    speeds = doc.get("speeds", {})
    optics = doc.get("optics", {})
    v_b = speeds.get("v_b", ScenarioSpec.v_b)
    if isinstance(v_b, str):
        if v_b not in _SPEED_WORDS:
            raise ScenarioFileError(f"speeds.v_b: expected a number or one of {_SPEED_WORDS}, got {v_b!r}")
    else:
        v_b = _number(speeds, "v_b", "speeds")

    pc = optics.get("pc", {"kind": "rotator", "theta_deg": 45.0})
    _check_keys(pc, {"kind", "theta_deg"}, "optics.pc")
    elements = []
    raw_elements = optics.get("extra_elements", [])
    if not isinstance(raw_elements, list):
        raise ScenarioFileError("optics.extra_elements: expected a list")
    for i, el in enumerate(raw_elements):
        where = f"optics.extra_elements[{i}]"
        _check_keys(el, {"arm", "kind", "theta_deg", "position"}, where)
        arm = el.get("arm")
        if arm not in (1, 2) or isinstance(arm, bool):
            raise ScenarioFileError(f"{where}.arm: expected 1 or 2, got {arm!r}")
        elements.append(ElementSpec(arm, _kind(el, where), _number(el, "theta_deg", where),
                                    _number(el, "position", where)))

    rule = doc.get("trigger", {}).get("rule", "on_reflection_D1prime")
    if rule not in TRIGGER_RULES:
        raise ScenarioFileError(f"trigger.rule: expected one of {TRIGGER_RULES}, got {rule!r}")
    run = doc.get("run", {})
    return ScenarioSpec(
        x_a=_number(geo, "x_a", "geometry"),
        y=_number(geo, "y", "geometry"),
        x_b=_number(geo, "x_b", "geometry"),
        x=_number(geo, "x", "geometry"),
        c=_number(speeds, "c", "speeds", SPEED_OF_LIGHT),
        v_b=v_b,
        a_deg=_number(optics, "a_deg", "optics", 0.0),
        b_deg=_number(optics, "b_deg", "optics", 0.0),
        pc_kind=_kind(pc, "optics.pc"),
        pc_theta_deg=_number(pc, "theta_deg", "optics.pc", 45.0),
        extra_elements=tuple(elements),
        rule=rule,
        trials=_integer(run, "trials", "run", 10_000),
        seed=_integer(run, "seed", "run", 0),
    )


def load_scenario(path) -> ScenarioSpec:
    return parse_scenario(Path(path).read_text())


def dump_scenario(spec: ScenarioSpec) -> str:
    return json.dumps(spec.to_document(), indent=2) + "\n"


def default_scenario() -> ScenarioSpec:
    """v_b = 1e4 c, x = 1 m, detour 10% above its minimum, a = b = 0, PC rotating by 45 degrees."""
    c = SPEED_OF_LIGHT
    v_b = 1e4 * c
    y_min = (v_b - c) * 1.0 / (2 * c)
    return ScenarioSpec(x_a=2.0, y=1.1 * y_min, x_b=12_000.0, x=1.0, c=c, v_b=v_b, seed=20240101)
