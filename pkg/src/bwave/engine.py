"""Discrete-event simulation of one two-photon trial in the preferred frame.

Photon 1 is detected first. Its detection creates a B-wave that carries the
state photon 2 must be forced into. The B-wave retraces arm 1 back to the
source, applying the adjoint of every element it crosses, then runs down arm 2
applying each element's unitary, until it overtakes photon 2. Each crossing
uses the element's action at the crossing instant, so a Pockels cell switched
on by a light-speed trigger in between changes what photon 2 receives.

A photon 2 that is not overtaken before its detector gets an unbiased coin.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

from .geometry import ScenarioConfig, require_feasible
from .polarization import (
    Channel,
    JonesOperator,
    SinglePhotonState,
    apply_jones_to_photon,
    channel_probability,
    collapse_on_first_detection,
    singlet,
)
from .rng import TrialStream

__all__ = [
    "Event",
    "BWave",
    "DeviceTimeline",
    "TrialRecord",
    "BranchOutcome",
    "pc_active_at",
    "bwave_trace",
    "simulate_trial",
    "branch_outcomes",
]

# Tie-break among simultaneous events: a B-wave reaching photon 2 wins over
# anything else at that instant, and photon 1 is detected before photon 2.
_PRIORITY = {
    "BWaveReachesPartner": 0,
    "Detection1": 1,
    "Detection2": 2,
    "TriggerArrivesAtPC": 3,
    "BWaveCrossesElement": 3,
    "PhotonArrivesAtElement": 3,
}


@dataclass(frozen=True)
class Event:
    time: float
    kind: str
    detail: str = ""


@dataclass
class BWave:
    carried_state: SinglePhotonState
    position: float
    leg: str
    speed: float


@dataclass
class DeviceTimeline:
    """Activation instants of switchable elements, keyed by element name."""

    activations: dict[str, float] = field(default_factory=dict)

    def activate(self, name: str, t: float) -> None:
        self.activations.setdefault(name, t)

    def activation_time(self, name: str) -> float | None:
        return self.activations.get(name)


def pc_active_at(timeline: DeviceTimeline, t: float, name: str = "PC") -> bool:
    """Strictly after activation; an element is still idle at its activation instant."""
    t_act = timeline.activation_time(name)
    return t_act is not None and t > t_act


def _action(element, timeline: DeviceTimeline, t: float) -> JonesOperator:
    if element.switchable and pc_active_at(timeline, t, element.name):
        return element.active
    return element.idle


@dataclass(frozen=True)
class TrialRecord:
    ch1: Channel
    ch2: Channel
    t1: float
    t2: float
    pc_activated: bool
    bwave_arrived: bool
    t_catch: float | None
    pc_seen_active: bool = False
    simultaneous: bool = False
    events: tuple[Event, ...] = ()


class _Queue:
    def __init__(self):
        self._heap = []
        self._seq = itertools.count()
        self.log: list[Event] = []

    def push(self, time: float, kind: str, action: Callable[[float], None], detail: str = "") -> None:
        if not math.isfinite(time) or time < 0:
            raise ValueError(f"event time must be finite and >= 0, got {time!r}")
        heapq.heappush(self._heap, (time, _PRIORITY[kind], next(self._seq), kind, detail, action))

    def run(self) -> None:
        while self._heap:
            time, _, _, kind, detail, action = heapq.heappop(self._heap)
            if kind.startswith("Detection"):
                kind = "Detection"
            self.log.append(Event(time, kind, detail))
            action(time)


def _bwave_speed(cfg: ScenarioConfig) -> float:
    return math.inf if cfg.bwave_mode == "instantaneous" else cfg.v_b


class _Trial:
    """One trial; the two sampling callbacks decide the channels from Born probabilities."""

    def __init__(self, cfg: ScenarioConfig, choose_ch1, choose_ch2):
        self.cfg = cfg
        self.choose_ch1 = choose_ch1
        self.choose_ch2 = choose_ch2
        self.queue = _Queue()
        self.timeline = DeviceTimeline()
        self.photon1_ops: list[JonesOperator] = []
        self.photon2_state: SinglePhotonState | None = None
        self.catch_position: float | None = None
        self.bwave: BWave | None = None
        self.ch1 = self.ch2 = None
        self.t1 = cfg.arm_length(1) / cfg.c
        self.t2 = cfg.x_b / cfg.c
        self.t_catch = None
        self.p_ch1_T = self.p_ch2_T = None
        self.pc_seen_active = False

    def run(self) -> TrialRecord:
        cfg, q = self.cfg, self.queue
        for el in cfg.elements(1):
            q.push(el.position / cfg.c, "PhotonArrivesAtElement",
                   lambda t, el=el: self.photon1_ops.append(_action(el, self.timeline, t)), f"photon1 {el.name}")
        for el in cfg.elements(2):
            q.push(el.position / cfg.c, "PhotonArrivesAtElement",
                   lambda t, el=el: self._photon2_passes(el, t), f"photon2 {el.name}")
        q.push(self.t1, "Detection1", self._detect_photon1, "D1")
        q.push(self.t2, "Detection2", self._detect_photon2, "D2")
        q.run()
        return TrialRecord(
            ch1=self.ch1,
            ch2=self.ch2,
            t1=self.t1,
            t2=self.t2,
            pc_activated=self.timeline.activation_time("PC") is not None,
            bwave_arrived=self.photon2_state is not None,
            t_catch=self.t_catch,
            pc_seen_active=self.pc_seen_active,
            simultaneous=self.t1 == self.t2,
            events=tuple(q.log),
        )

    # -- photon 1 ------------------------------------------------------------

    def _detect_photon1(self, t: float) -> None:
        cfg = self.cfg
        state = singlet()
        for u in self.photon1_ops:
            state = apply_jones_to_photon(state, 1, u)
        self.p_ch1_T, _ = collapse_on_first_detection(state, cfg.a, "T")
        self.ch1 = self.choose_ch1(self.p_ch1_T)

        fires = cfg.trigger_rule == "always" or (
            cfg.trigger_rule == "on_reflection_D1prime" and self.ch1 == "R"
        )
        if fires:
            self.queue.push(t + cfg.x / cfg.c, "TriggerArrivesAtPC",
                            lambda ta: self.timeline.activate("PC", ta), "PC")
        if cfg.bwave_mode != "none":
            _, carried = collapse_on_first_detection(singlet(), cfg.a, self.ch1)
            self.bwave = BWave(carried, cfg.arm_length(1), "backward_on_arm1", _bwave_speed(cfg))
            self._schedule_backward(t)

    # -- B-wave --------------------------------------------------------------

    def _schedule_backward(self, t_start: float) -> None:
        cfg, bw = self.cfg, self.bwave
        L1 = cfg.arm_length(1)
        for el in reversed(cfg.elements(1)):
            t = t_start + (L1 - el.position) / bw.speed
            self.queue.push(t, "BWaveCrossesElement", lambda tc, el=el: self._cross(el, tc, backward=True),
                            f"backward {el.name}")
        self._start_chase(t_start + L1 / bw.speed)

    def _start_chase(self, t_source: float) -> None:
        cfg, bw = self.cfg, self.bwave
        # photon 2 is a distance c*t_source down arm 2 when the B-wave passes S
        gap = cfg.c * t_source
        if math.isinf(bw.speed):
            t_catch = t_source
        else:
            t_catch = t_source + gap / (bw.speed - cfg.c)
        position = cfg.c * t_catch
        if not position < cfg.x_b:
            return
        self.catch_position = position
        for el in cfg.elements(2):
            if el.position < position:
                t = t_source + (0.0 if math.isinf(bw.speed) else el.position / bw.speed)
                self.queue.push(t, "BWaveCrossesElement", lambda tc, el=el: self._cross(el, tc, backward=False),
                                f"forward {el.name}")
        self.queue.push(t_catch, "BWaveReachesPartner", self._reach_partner, "photon2")

    def _cross(self, el, t: float, backward: bool) -> None:
        u = _action(el, self.timeline, t)
        if el.switchable and u is el.active:
            self.pc_seen_active = True
        bw = self.bwave
        bw.carried_state = (u.adjoint if backward else u).apply(bw.carried_state)
        bw.position = el.position
        bw.leg = "backward_on_arm1" if backward else "forward_on_arm2"

    def _reach_partner(self, t: float) -> None:
        self.t_catch = t
        self.bwave.position = self.catch_position
        self.photon2_state = self.bwave.carried_state

    # -- photon 2 ------------------------------------------------------------

    def _photon2_passes(self, el, t: float) -> None:
        if self.photon2_state is not None:
            self.photon2_state = _action(el, self.timeline, t).apply(self.photon2_state)

    def _detect_photon2(self, t: float) -> None:
        if self.photon2_state is None:
            self.p_ch2_T = 0.5
        else:
            self.p_ch2_T = channel_probability(self.photon2_state, self.cfg.b, "T")
        self.ch2 = self.choose_ch2(self.p_ch2_T)


def _sampler(u: float) -> Callable[[float], Channel]:
    return lambda p: "T" if u < p else "R"


def simulate_trial(cfg: ScenarioConfig, rng: TrialStream, allow_infeasible: bool = False) -> TrialRecord:
    """Run one trial; ``rng`` supplies the two uniforms deciding the channels.

    Refuses infeasible configurations unless ``allow_infeasible`` is set.
    """
    if not allow_infeasible:
        require_feasible(cfg)
    u1, u2 = rng.uniform(), rng.uniform()
    return _Trial(cfg, _sampler(u1), _sampler(u2)).run()


@dataclass(frozen=True)
class BranchOutcome:
    """Everything about a trial that is fixed once photon 1's channel is known."""

    ch1: Channel
    p_ch1: float
    p_ch2_T: float
    record: TrialRecord


def branch_outcomes(cfg: ScenarioConfig) -> dict[Channel, BranchOutcome]:
    """Simulate both photon-1 branches once each.

    A trial is deterministic given photon 1's channel, so these two runs fix
    the conditional law of photon 2. Batch runners sample from it directly.
    """
    out = {}
    for ch in ("T", "R"):
        trial = _Trial(cfg, lambda p, ch=ch: ch, lambda p: "T")
        record = trial.run()
        p_ch1 = trial.p_ch1_T if ch == "T" else 1.0 - trial.p_ch1_T
        out[ch] = BranchOutcome(ch, p_ch1, trial.p_ch2_T, record)
    return out


def bwave_trace(
    arm1,
    arm2,
    carried: SinglePhotonState,
    timelines: DeviceTimeline,
    t_start: float,
    cfg: ScenarioConfig,
) -> tuple[SinglePhotonState, float | None]:
    """Carry ``carried`` from D1 back along ``arm1`` and forward along ``arm2``.

    ``arm1``/``arm2`` are element lists (any order; positions decide). Returns
    the state delivered to photon 2 and the arrival time, or the state at the
    end of the traversable path and ``None`` if photon 2 escapes.
    """
    speed = _bwave_speed(cfg)
    L1 = cfg.arm_length(1)
    state = carried
    for el in sorted(arm1, key=lambda e: e.position, reverse=True):
        t = t_start + (L1 - el.position) / speed
        state = _action(el, timelines, t).adjoint.apply(state)
    t_source = t_start + L1 / speed
    if math.isinf(speed):
        t_catch = t_source
    else:
        t_catch = t_source + cfg.c * t_source / (speed - cfg.c)
    position = cfg.c * t_catch
    for el in sorted(arm2, key=lambda e: e.position):
        if el.position < position:
            t = t_source + (0.0 if math.isinf(speed) else el.position / speed)
            state = _action(el, timelines, t).apply(state)
    return state, (t_catch if position < cfg.x_b else None)
