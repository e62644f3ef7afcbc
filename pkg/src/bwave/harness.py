"""Batch execution of two-photon trials and the statistics built on them."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .engine import BranchOutcome, branch_outcomes
from .geometry import ScenarioConfig, require_feasible
from .rng import trial_uniforms

__all__ = [
    "CountsTable",
    "Estimate",
    "ProbabilityEstimates",
    "SignalTestResult",
    "TrialBatch",
    "run_trials",
    "run_experiment",
    "estimate_probabilities",
    "closed_form_joints",
    "closed_form_marginals",
    "effective_b_prime",
    "two_proportion_ztest",
    "signaling_test",
    "decode_message",
    "required_trials",
    "MAX_REQUIRED_TRIALS",
]

MAX_REQUIRED_TRIALS = 10**9
_CHUNK = 1 << 18


@dataclass(frozen=True)
class CountsTable:
    n: int
    c_12: int
    c_12p: int
    c_1p2: int
    c_1p2p: int
    c_bwave_missed: int = 0

    def __post_init__(self):
        if self.c_12 + self.c_12p + self.c_1p2 + self.c_1p2p != self.n:
            raise ValueError("channel counts must sum to n")

    def __add__(self, other: CountsTable) -> CountsTable:
        return CountsTable(*(getattr(self, f) + getattr(other, f) for f in self.__dataclass_fields__))

    @property
    def c_2(self) -> int:
        return self.c_12 + self.c_1p2


@dataclass(frozen=True)
class TrialBatch:
    """Per-trial outcomes of a contiguous trial range, as arrays."""

    start: int
    ch1_T: np.ndarray
    ch2_T: np.ndarray
    branches: dict

    def __len__(self):
        return len(self.ch1_T)

    def counts(self) -> CountsTable:
        t1, t2 = self.ch1_T, self.ch2_T
        c_12 = int(np.count_nonzero(t1 & t2))
        c_12p = int(np.count_nonzero(t1 & ~t2))
        c_1p2 = int(np.count_nonzero(~t1 & t2))
        n = len(t1)
        missed = 0
        for ch, mask in (("T", t1), ("R", ~t1)):
            if not self.branches[ch].record.bwave_arrived:
                missed += int(np.count_nonzero(mask))
        return CountsTable(n, c_12, c_12p, c_1p2, n - c_12 - c_12p - c_1p2, missed)

    def rows(self):
        """Per-trial rows: trial, ch1, ch2, t1_s, t2_s, pc_activated, bwave_arrived."""
        for i, (a, b) in enumerate(zip(self.ch1_T.tolist(), self.ch2_T.tolist())):
            rec = self.branches["T" if a else "R"].record
            yield (self.start + i, "T" if a else "R", "T" if b else "R",
                   rec.t1, rec.t2, rec.pc_activated, rec.bwave_arrived)


def _sample(branches: dict[str, BranchOutcome], seed: int, start: int, stop: int) -> TrialBatch:
    u = trial_uniforms(seed, start, stop)
    # same comparisons as the scalar sampler in engine.simulate_trial
    ch1_T = u[:, 0] < branches["T"].p_ch1
    p2 = np.where(ch1_T, branches["T"].p_ch2_T, branches["R"].p_ch2_T)
    ch2_T = u[:, 1] < p2
    return TrialBatch(start, ch1_T, ch2_T, branches)


def _ranges(start: int, n: int, chunk: int):
    return [(s, min(s + chunk, start + n)) for s in range(start, start + n, chunk)]


def run_trials(cfg: ScenarioConfig, n: int, seed: int, start: int = 0,
               allow_infeasible: bool = False) -> TrialBatch:
    """Trials ``start .. start+n-1`` with per-trial outcomes kept."""
    if not allow_infeasible:
        require_feasible(cfg)
    return _sample(branch_outcomes(cfg), seed, start, start + n)


def run_experiment(cfg: ScenarioConfig, n: int, seed: int, *, start: int = 0, workers: int = 1,
                   allow_infeasible: bool = False) -> CountsTable:
    """Counts over ``n`` trials; identical for any ``workers`` at fixed seed."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if not allow_infeasible:
        require_feasible(cfg)
    branches = branch_outcomes(cfg)
    chunk = _CHUNK if workers <= 1 else max(1, math.ceil(n / workers))
    ranges = _ranges(start, n, chunk)

    def job(r):
        return _sample(branches, seed, *r).counts()

    total = CountsTable(0, 0, 0, 0, 0, 0)
    if workers <= 1:
        parts = map(job, ranges)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(job, ranges))
    for part in parts:
        total = total + part
    return total


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float


@dataclass(frozen=True)
class ProbabilityEstimates:
    p12: Estimate
    p12p: Estimate
    p1p2: Estimate
    p1p2p: Estimate
    p1: Estimate
    p1p: Estimate
    p2: Estimate
    p2p: Estimate
    n: int

    def items(self):
        for name in ("p12", "p12p", "p1p2", "p1p2p", "p1", "p1p", "p2", "p2p"):
            yield name, getattr(self, name)


def _binomial(count: int, n: int) -> Estimate:
    p = count / n
    return Estimate(p, math.sqrt(p * (1 - p) / n))


def estimate_probabilities(counts: CountsTable) -> ProbabilityEstimates:
    n = counts.n
    if n <= 0:
        raise ValueError("cannot estimate probabilities from an empty table")
    c1 = counts.c_12 + counts.c_12p
    c2 = counts.c_12 + counts.c_1p2
    return ProbabilityEstimates(
        p12=_binomial(counts.c_12, n),
        p12p=_binomial(counts.c_12p, n),
        p1p2=_binomial(counts.c_1p2, n),
        p1p2p=_binomial(counts.c_1p2p, n),
        p1=_binomial(c1, n),
        p1p=_binomial(n - c1, n),
        p2=_binomial(c2, n),
        p2p=_binomial(n - c2, n),
        n=n,
    )


def closed_form_joints(a: float, b: float, b_prime: float) -> dict[str, float]:
    """Joint detection probabilities when D1' hits see analyzer ``b_prime`` in place of ``b``."""
    return {
        "p12": 0.5 * math.sin(b - a) ** 2,
        "p12p": 0.5 * math.cos(b - a) ** 2,
        "p1p2": 0.5 * math.cos(b_prime - a) ** 2,
        "p1p2p": 0.5 * math.sin(b_prime - a) ** 2,
    }


def closed_form_marginals(a: float, b: float, b_prime: float) -> dict[str, float]:
    j = closed_form_joints(a, b, b_prime)
    return {
        "p1": j["p12"] + j["p12p"],
        "p1p": j["p1p2"] + j["p1p2p"],
        "p2": j["p12"] + j["p1p2"],
        "p2p": j["p12p"] + j["p1p2p"],
    }


def effective_b_prime(cfg: ScenarioConfig) -> float:
    """Analyzer angle photon 2 effectively meets after photon 1 reflects.

    Read off the engine's R branch, where photon 2 transmits with probability
    cos^2(b' - a). Only ``|b' - a|`` is recoverable; that is all the joint
    probabilities depend on. For a Pockels cell wired as a rotator by theta
    this equals ``|b + theta - a|`` mod pi.
    """
    p = branch_outcomes(cfg)["R"].p_ch2_T
    return cfg.a + math.acos(math.sqrt(min(1.0, max(0.0, p))))


@dataclass(frozen=True)
class SignalTestResult:
    z_statistic: float
    p_value: float
    reject_null: bool
    effect: float
    significance: float


def two_proportion_ztest(x1: int, n1: int, x2: int, n2: int, significance: float = 1e-6) -> SignalTestResult:
    """Pooled two-sided z-test of ``x1/n1`` against ``x2/n2``."""
    if n1 <= 0 or n2 <= 0:
        raise ValueError("both samples must be non-empty")
    p1, p2 = x1 / n1, x2 / n2
    pooled = (x1 + x2) / (n1 + n2)
    var = pooled * (1 - pooled) * (1 / n1 + 1 / n2)
    if var == 0:
        raise ValueError("degenerate pooled variance: every trial fell in the same channel on both sides")
    z = (p1 - p2) / math.sqrt(var)
    p_value = float(2 * stats.norm.sf(abs(z)))
    return SignalTestResult(z, p_value, p_value < significance, abs(p1 - p2), significance)


def signaling_test(counts_on: CountsTable, counts_off: CountsTable, significance: float = 1e-6) -> SignalTestResult:
    """Does photon 2's transmission rate differ between trigger-on and trigger-off runs?"""
    return two_proportion_ztest(counts_on.c_2, counts_on.n, counts_off.c_2, counts_off.n, significance)


def decode_message(blocks, threshold: float, truth=None, regime: tuple[float, float] | None = None) -> dict:
    """One bit per block: 1 when the block's transmission rate falls below ``threshold``.

    ``regime`` = (expected p2 with trigger on, with trigger off) enables the
    threshold sanity check. ``truth`` (bit sequence) enables the bit error rate.
    """
    blocks = list(blocks)
    if not blocks:
        raise ValueError("no blocks to decode")
    if regime is not None:
        lo, hi = sorted(regime)
        if not lo < threshold < hi:
            raise ValueError(f"threshold {threshold!r} is not strictly between the regime means {lo!r} and {hi!r}")
    bits = [1 if estimate_probabilities(b).p2.value < threshold else 0 for b in blocks]
    ber = None
    if truth is not None:
        truth = list(truth)
        if len(truth) != len(bits):
            raise ValueError("ground truth length differs from the number of blocks")
        ber = sum(int(x != y) for x, y in zip(bits, truth)) / len(bits)
    return {"bits": bits, "ber": ber}


def required_trials(p_on: float, p_off: float, alpha: float = 1e-6, power: float = 0.99) -> int:
    """Trials per condition for a two-sided pooled two-proportion test.

    n = [z_{1-alpha/2} sqrt(2 pbar qbar) + z_power sqrt(p1 q1 + p2 q2)]^2 / (p1 - p2)^2
    """
    for name, p in (("p_on", p_on), ("p_off", p_off)):
        if not 0 < p < 1:
            raise ValueError(f"{name} must lie in (0, 1), got {p!r}")
    if not (0 < alpha < 1 and 0 < power < 1):
        raise ValueError("alpha and power must lie in (0, 1)")
    delta = abs(p_on - p_off)
    if delta == 0:
        raise ValueError("p_on equals p_off; no sample size detects a null effect")
    pbar = (p_on + p_off) / 2
    z_a = stats.norm.isf(alpha / 2)
    z_b = stats.norm.ppf(power)
    root = z_a * math.sqrt(2 * pbar * (1 - pbar)) + z_b * math.sqrt(p_on * (1 - p_on) + p_off * (1 - p_off))
    n = (root / delta) ** 2
    if not n <= MAX_REQUIRED_TRIALS:
        raise ValueError(f"required sample size {n:.3g} exceeds the cap of {MAX_REQUIRED_TRIALS}")
    return math.ceil(n)
