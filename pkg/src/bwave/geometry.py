"""Preferred-frame layout of the two-photon experiment and its timing algebra.

Lengths are metres, speeds metres per second, times seconds. The source S sits
at path coordinate 0 of both arms. Photon 1 travels ``x_a + 2*y`` (straight arm
plus detour) to the co-located detectors D1/D1'. Photon 2 travels ``x_b`` to
D2/D2'. The Pockels cell sits on arm 1 at path coordinate ``x_a - x`` so that
the photon (and the B-wave) covers ``x + 2*y`` between it and D1, while the
light-speed trigger from D1' goes straight, covering ``x``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Literal

import numpy as np

from .polarization import IDENTITY, JonesOperator, canonical_angle, rotator

__all__ = [
    "SPEED_OF_LIGHT",
    "TRIGGER_RULES",
    "BWAVE_MODES",
    "OpticalElement",
    "ScenarioConfig",
    "TimingReport",
    "Violation",
    "InfeasibleScenarioError",
    "light_signal_time",
    "bwave_transit_time",
    "race_ok",
    "min_detour",
    "detection_times",
    "validate_scenario",
    "require_feasible",
    "default_config",
]

SPEED_OF_LIGHT = 299_792_458.0

TriggerRule = Literal["on_reflection_D1prime", "never", "always"]
BWaveMode = Literal["finite", "instantaneous", "none"]
TRIGGER_RULES = ("on_reflection_D1prime", "never", "always")
BWAVE_MODES = ("finite", "instantaneous", "none")


@dataclass(frozen=True)
class OpticalElement:
    """An element placed on one arm at a path coordinate measured from S.

    A switchable element applies ``idle`` until activated and ``active``
    afterwards; a static element always applies ``idle``.
    """

    arm: int
    position: float
    idle: JonesOperator
    active: JonesOperator | None = None
    name: str = ""

    def __post_init__(self):
        if self.arm not in (1, 2):
            raise ValueError(f"arm must be 1 or 2, got {self.arm!r}")
        if not (math.isfinite(self.position) and self.position >= 0):
            raise ValueError(f"element position must be finite and >= 0, got {self.position!r}")

    @property
    def switchable(self) -> bool:
        return self.active is not None


@dataclass(frozen=True)
class ScenarioConfig:
    x_a: float
    y: float
    x_b: float
    x: float
    a: float = 0.0
    b: float = 0.0
    c: float = SPEED_OF_LIGHT
    v_b: float | None = None
    pc: JonesOperator = field(default_factory=lambda: rotator(np.pi / 4))
    trigger_rule: TriggerRule = "on_reflection_D1prime"
    bwave_mode: BWaveMode = "finite"
    extra_elements: tuple[OpticalElement, ...] = ()
    trials: int = 10_000
    seed: int = 0

    def __post_init__(self):
        for name in ("x_a", "y", "x_b", "x", "c"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be finite and > 0, got {value!r}")
        if self.x > self.x_a:
            raise ValueError(
                f"Pockels cell must lie on arm 1: need x <= x_a, got x={self.x!r}, x_a={self.x_a!r}"
            )
        if self.bwave_mode not in BWAVE_MODES:
            raise ValueError(f"bwave_mode must be one of {BWAVE_MODES}, got {self.bwave_mode!r}")
        if self.trigger_rule not in TRIGGER_RULES:
            raise ValueError(f"trigger_rule must be one of {TRIGGER_RULES}, got {self.trigger_rule!r}")
        if self.bwave_mode == "finite":
            if self.v_b is None or not math.isfinite(self.v_b) or self.v_b <= self.c:
                raise ValueError(f"finite B-wave mode needs v_b > c, got v_b={self.v_b!r}, c={self.c!r}")
        object.__setattr__(self, "a", canonical_angle(self.a))
        object.__setattr__(self, "b", canonical_angle(self.b))
        object.__setattr__(self, "extra_elements", tuple(self.extra_elements))
        for el in self.extra_elements:
            limit = self.arm_length(el.arm)
            if el.position >= limit:
                raise ValueError(f"element {el.name or el!r} at {el.position!r} m lies beyond arm {el.arm} ({limit!r} m)")
        if self.trials < 0:
            raise ValueError("trials must be >= 0")

    def arm_length(self, arm: int) -> float:
        return self.x_a + 2 * self.y if arm == 1 else self.x_b

    @property
    def pc_position(self) -> float:
        return self.x_a - self.x

    @property
    def pockels_cell(self) -> OpticalElement:
        return OpticalElement(arm=1, position=self.pc_position, idle=IDENTITY, active=self.pc, name="PC")

    def elements(self, arm: int) -> list[OpticalElement]:
        """Elements on ``arm`` ordered by distance from S (the Pockels cell included on arm 1)."""
        els = [el for el in self.extra_elements if el.arm == arm]
        if arm == 1:
            els.append(self.pockels_cell)
        return sorted(els, key=lambda el: el.position)

    def replace(self, **changes) -> ScenarioConfig:
        return replace(self, **changes)


@dataclass(frozen=True)
class TimingReport:
    t1: float
    t2: float
    t_l: float
    t_b: float | None
    t_catch: float | None

    @property
    def ordered(self) -> bool:
        return self.t1 < self.t2


@dataclass(frozen=True)
class Violation:
    """One failed feasibility condition; ``kind`` is a stable identifier."""

    kind: str
    message: str

    def __str__(self):
        return f"{self.kind}: {self.message}"


class InfeasibleScenarioError(ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


def _require_finite(cfg: ScenarioConfig) -> None:
    if cfg.bwave_mode != "finite":
        raise ValueError(f"B-wave transit time is undefined in {cfg.bwave_mode!r} mode")


def light_signal_time(cfg: ScenarioConfig) -> float:
    """Flight time of the trigger from D1' to the Pockels cell."""
    return cfg.x / cfg.c


def bwave_transit_time(cfg: ScenarioConfig) -> float:
    """Time for the B-wave to retrace photon 1's path from D1 back to the Pockels cell."""
    _require_finite(cfg)
    return (cfg.x + 2 * cfg.y) / cfg.v_b


def race_ok(cfg: ScenarioConfig) -> bool:
    """True iff the trigger strictly beats the B-wave to the Pockels cell.

    Evaluated exactly on the binary values of the inputs, so the answer at the
    threshold does not depend on rounding.
    """
    _require_finite(cfg)
    x, y, c, v = (Fraction(val) for val in (cfg.x, cfg.y, cfg.c, cfg.v_b))
    return x * v < (x + 2 * y) * c


def min_detour(cfg: ScenarioConfig) -> float:
    """Detour height at which the trigger and the B-wave tie; ``race_ok`` needs ``y`` above it."""
    _require_finite(cfg)
    return (cfg.v_b - cfg.c) * cfg.x / (2 * cfg.c)


def _catch_time(cfg: ScenarioConfig, t1: float) -> float | None:
    if cfg.bwave_mode == "none":
        return None
    if cfg.bwave_mode == "instantaneous":
        return t1
    # B-wave leaves D1 at t1, reaches S after the path length L1, then runs
    # down arm 2 after photon 2 (which left S at t=0): v(t - t_S) = c t.
    v, c, L1 = cfg.v_b, cfg.c, cfg.arm_length(1)
    return L1 * (v + c) / (c * (v - c))


def detection_times(cfg: ScenarioConfig) -> TimingReport:
    t1 = cfg.arm_length(1) / cfg.c
    t2 = cfg.x_b / cfg.c
    t_b = bwave_transit_time(cfg) if cfg.bwave_mode == "finite" else None
    t_catch = _catch_time(cfg, t1)
    if t_catch is not None and not cfg.c * t_catch < cfg.x_b:
        t_catch = None
    return TimingReport(t1=t1, t2=t2, t_l=light_signal_time(cfg), t_b=t_b, t_catch=t_catch)


def validate_scenario(cfg: ScenarioConfig) -> list[Violation]:
    """All violated feasibility conditions; an empty list means feasible."""
    out = []
    L1 = cfg.arm_length(1)
    if not cfg.x_b > L1:
        out.append(Violation(
            "OrderingViolation",
            f"need x_b > x_a + 2y for photon 1 to be detected first; x_b={cfg.x_b!r}, x_a + 2y={L1!r}",
        ))
    if cfg.bwave_mode == "finite":
        if not race_ok(cfg):
            out.append(Violation(
                "RaceViolation",
                f"trigger does not beat the B-wave to the Pockels cell; y={cfg.y!r} m, y_min={min_detour(cfg)!r} m",
            ))
    elif cfg.bwave_mode == "instantaneous" and cfg.trigger_rule != "never":
        out.append(Violation(
            "RaceViolation",
            "an instantaneous B-wave always crosses the Pockels cell before any trigger arrives",
        ))
    timing = detection_times(cfg)
    if timing.t_catch is None:
        if cfg.bwave_mode == "none":
            msg = "no B-wave is emitted in 'none' mode"
        elif cfg.bwave_mode == "finite":
            pos = cfg.c * _catch_time(cfg, timing.t1)
            msg = f"B-wave would reach photon 2 at {pos!r} m, not before its detector at x_b={cfg.x_b!r} m"
        else:
            msg = f"photon 2 is already detected (t2={timing.t2!r} s) when photon 1 is (t1={timing.t1!r} s)"
        out.append(Violation("NoCatch", msg))
    return out


def require_feasible(cfg: ScenarioConfig) -> None:
    violations = validate_scenario(cfg)
    if violations:
        raise InfeasibleScenarioError(violations)


def default_config(**overrides) -> ScenarioConfig:
    """Feasible layout with v_b = 1e4 c, x = 1 m and the detour 10% above its minimum."""
    c = SPEED_OF_LIGHT
    v_b = 1e4 * c
    x = 1.0
    y_min = (v_b - c) * x / (2 * c)
    params = dict(x_a=2.0, y=1.1 * y_min, x_b=12_000.0, x=x, c=c, v_b=v_b)
    params.update(overrides)
    return ScenarioConfig(**params)
