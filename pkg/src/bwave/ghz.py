"""Three-party GHZ signaling with a finite-speed influence.

Alice (qubit 1) may measure at ``t_a``; Bob and Charlie (qubits 2, 3), both a
distance ``l`` away, measure at the same later instant ``t_l_meas``. Alice's
measurement forces their qubits only if its influence, moving at ``v``,
arrives strictly before they measure. Bob and Charlie are simultaneous and
never influence each other, so without Alice's influence their outcomes are
independent fair coins.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import SPEED_OF_LIGHT
from .polarization import NQubitState, ghz_state, measure_qubit
from .rng import TrialStream, trial_uniforms

__all__ = [
    "GhzConfig",
    "GhzTrialRecord",
    "GhzResult",
    "validate_ghz_timing",
    "influence_arrives",
    "ghz_trial",
    "ghz_run",
    "ghz_experiment",
]


@dataclass(frozen=True)
class GhzConfig:
    l: float
    t_a: float
    t_l_meas: float
    v: float
    alice_measures: bool = True
    trials: int = 10_000
    seed: int = 0
    c: float = SPEED_OF_LIGHT

    def __post_init__(self):
        if not self.l > 0:
            raise ValueError(f"l must be > 0, got {self.l!r}")
        if not self.t_l_meas > self.t_a:
            raise ValueError(f"need t_l_meas > t_a, got t_a={self.t_a!r}, t_l_meas={self.t_l_meas!r}")
        if not self.v > 0:
            raise ValueError(f"v must be > 0, got {self.v!r}")
        if self.trials < 0:
            raise ValueError("trials must be >= 0")

    @property
    def required_speed(self) -> float:
        """l / (t_L - t_A): the speed an influence needs to arrive in time."""
        return self.l / (self.t_l_meas - self.t_a)


@dataclass(frozen=True)
class GhzTrialRecord:
    a_outcome: int | None
    b_outcome: int
    c_outcome: int
    influence_reached: bool


def validate_ghz_timing(cfg: GhzConfig) -> bool:
    """v > l/(t_L - t_A) > c, both strict."""
    return cfg.v > cfg.required_speed > cfg.c


def influence_arrives(cfg: GhzConfig) -> bool:
    return cfg.alice_measures and cfg.v > cfg.required_speed


def _prob_zero(state: NQubitState, qubit: int) -> float:
    return measure_qubit(state, qubit)[0][0]


def _law(cfg: GhzConfig):
    """(P(Alice reads 0), {alice outcome or None: (P(Bob 0), P(Charlie 0))})."""
    psi = ghz_state()
    alice = measure_qubit(psi, 1)
    law = {None: (_prob_zero(psi, 2), _prob_zero(psi, 3))}
    for outcome, (_, rest) in alice.items():
        if rest is not None:
            law[outcome] = (_prob_zero(rest, 1), _prob_zero(rest, 2))
    return alice[0][0], law


def ghz_trial(cfg: GhzConfig, rng: TrialStream) -> GhzTrialRecord:
    u_a, u_b, u_c = rng.uniform(), rng.uniform(), rng.uniform()
    p_a0, law = _law(cfg)
    a = None
    if cfg.alice_measures:
        a = 0 if u_a < p_a0 else 1
    reached = influence_arrives(cfg)
    p_b0, p_c0 = law[a if reached else None]
    return GhzTrialRecord(a, 0 if u_b < p_b0 else 1, 0 if u_c < p_c0 else 1, reached)


@dataclass(frozen=True)
class GhzResult:
    n: int
    n_same: int
    table: tuple[tuple[int, int], tuple[int, int]]
    influence_reached: bool
    timing_valid: bool

    @property
    def p_same(self) -> float:
        return self.n_same / self.n

    @property
    def stderr(self) -> float:
        p = self.p_same
        return math.sqrt(p * (1 - p) / self.n)


def ghz_run(cfg: GhzConfig, n: int | None = None, seed: int | None = None, start: int = 0):
    """Per-trial outcome arrays ``(a, b, c)``; ``a`` is -1 when Alice abstains.

    Draws the same uniforms, compared the same way, as :func:`ghz_trial`.
    """
    n = cfg.trials if n is None else n
    seed = cfg.seed if seed is None else seed
    u = trial_uniforms(seed, start, start + n)
    p_a0, law = _law(cfg)
    if cfg.alice_measures:
        a = np.where(u[:, 0] < p_a0, 0, 1)
    else:
        a = np.full(n, -1)
    if influence_arrives(cfg):
        p_b0 = np.where(a == 0, law[0][0], law[1][0])
        p_c0 = np.where(a == 0, law[0][1], law[1][1])
    else:
        p_b0 = np.full(n, law[None][0])
        p_c0 = np.full(n, law[None][1])
    b = np.where(u[:, 1] < p_b0, 0, 1)
    c = np.where(u[:, 2] < p_c0, 0, 1)
    return a, b, c


def ghz_experiment(cfg: GhzConfig, n: int | None = None, seed: int | None = None) -> GhzResult:
    n = cfg.trials if n is None else n
    if n < 1:
        raise ValueError("need at least one trial")
    _, b, c = ghz_run(cfg, n, seed)
    table = tuple(tuple(int(np.count_nonzero((b == i) & (c == j))) for j in (0, 1)) for i in (0, 1))
    return GhzResult(
        n=n,
        n_same=table[0][0] + table[1][1],
        table=table,
        influence_reached=influence_arrives(cfg),
        timing_valid=validate_ghz_timing(cfg),
    )
