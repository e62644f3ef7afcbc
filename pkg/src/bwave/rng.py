"""Counter-based random substreams.

Every trial owns one Philox block: key = master seed, counter = trial index.
A block yields four 64-bit words, so a trial may draw up to four uniforms.
Because blocks are addressed directly, any partition of the trial range over
workers reproduces exactly the same draws.
"""

from __future__ import annotations

import numpy as np
from numpy.random import Philox

__all__ = ["DRAWS_PER_TRIAL", "TrialStream", "trial_uniforms"]

DRAWS_PER_TRIAL = 4
_MAX_SEED = 2**128


def _key(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed < _MAX_SEED:
        raise ValueError(f"seed must be in [0, 2**128), got {seed}")
    return seed


def _to_unit(raw: np.ndarray) -> np.ndarray:
    # 53 high bits -> [0, 1), same mapping numpy uses for doubles
    return (raw >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


def trial_uniforms(seed: int, start: int, stop: int) -> np.ndarray:
    """Uniforms for trials ``start..stop-1`` as an array of shape (n, 4)."""
    n = stop - start
    if n < 0:
        raise ValueError("stop must be >= start")
    bitgen = Philox(key=_key(seed), counter=start)
    return _to_unit(bitgen.random_raw(DRAWS_PER_TRIAL * n)).reshape(n, DRAWS_PER_TRIAL)


class TrialStream:
    """The substream of one trial; hands out its uniforms in order."""

    def __init__(self, seed: int, trial: int):
        self.seed = seed
        self.trial = trial
        self._draws = trial_uniforms(seed, trial, trial + 1)[0]
        self._next = 0

    def uniform(self) -> float:
        if self._next >= DRAWS_PER_TRIAL:
            raise RuntimeError(f"trial substream exhausted after {DRAWS_PER_TRIAL} draws")
        u = float(self._draws[self._next])
        self._next += 1
        return u
