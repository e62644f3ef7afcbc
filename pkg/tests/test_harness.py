import functools

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.stats import binom, norm

from _builders import counts_by_pair
from bwave.geometry import InfeasibleScenarioError, default_config
from bwave.harness import (
    MAX_REQUIRED_TRIALS,
    CountsTable,
    closed_form_joints,
    closed_form_marginals,
    decode_message,
    effective_b_prime,
    estimate_probabilities,
    required_trials,
    run_experiment,
    signaling_test,
)
from bwave.polarization import rotator

ON = default_config(a=0.0, b=0.0, pc=rotator(np.pi / 4))
OFF = ON.replace(trigger_rule="never")


@functools.lru_cache
def exact_rejection_rate(n, p1, p2, alpha):
    """Oracle: total binomial weight of the outcome pairs a pooled z-test rejects."""
    x = np.arange(n + 1)
    i, j = np.meshgrid(x, x, indexing="ij")
    pooled = (i + j) / (2 * n)
    var = pooled * (1 - pooled) * 2 / n
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.abs(i - j) / n / np.sqrt(var)
    reject = (var > 0) & (2 * norm.sf(z) < alpha)
    weights = np.outer(binom.pmf(x, n, p1), binom.pmf(x, n, p2))
    return float(weights[reject].sum())


class TestRunExperiment:
    def test_equal_angles_zero_counts(self):
        c = run_experiment(OFF.replace(a=0.4, b=0.4), 50_000, 1)
        assert c.c_12 == 0 and c.c_1p2p == 0

    def test_trigger_never_matches_closed_form(self):
        cfg = OFF.replace(a=0.3, b=1.2)
        n = 1_000_000
        counts = counts_by_pair(run_experiment(cfg, n, 2))
        cf = closed_form_joints(cfg.a, cfg.b, cfg.b)
        for pair, key in zip([("T", "T"), ("T", "R"), ("R", "T"), ("R", "R")], ["p12", "p12p", "p1p2", "p1p2p"]):
            p = cf[key]
            assert abs(counts[pair] - n * p) < 5 * np.sqrt(n * p * (1 - p))

    def test_deterministic(self):
        assert run_experiment(ON, 30_000, 9) == run_experiment(ON, 30_000, 9)
        assert run_experiment(ON, 30_000, 9) != run_experiment(ON, 30_000, 10)

    @pytest.mark.parametrize("workers", [1, 4, 16])
    def test_worker_count_irrelevant(self, workers):
        assert run_experiment(ON, 100_003, 9, workers=workers) == run_experiment(ON, 100_003, 9)

    def test_split_ranges_add_up(self):
        whole = run_experiment(ON, 10_000, 4)
        parts = run_experiment(ON, 3_000, 4) + run_experiment(ON, 7_000, 4, start=3_000)
        assert whole == parts

    def test_infeasible_refused(self):
        with pytest.raises(InfeasibleScenarioError):
            run_experiment(ON.replace(y=1.0), 10, 0)


class TestEstimates:
    def test_symmetric_counts(self):
        est = estimate_probabilities(CountsTable(1000, 250, 250, 250, 250))
        for name in ("p12", "p12p", "p1p2", "p1p2p"):
            assert getattr(est, name).value == 0.25
        assert est.p2.value == 0.5
        assert_allclose(est.p12.stderr, np.sqrt(0.25 * 0.75 / 1000))

    def test_signaling_counts(self):
        est = estimate_probabilities(CountsTable(1000, 0, 500, 250, 250))
        assert est.p2.value == 0.25 and est.p2p.value == 0.75

    def test_complementarity(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            c = rng.integers(0, 1000, 4)
            est = estimate_probabilities(CountsTable(int(c.sum()), *map(int, c)))
            assert est.p1.value + est.p1p.value == 1
            assert est.p2.value + est.p2p.value == 1

    def test_empty_refused(self):
        with pytest.raises(ValueError):
            estimate_probabilities(CountsTable(0, 0, 0, 0, 0))

    def test_counts_must_sum(self):
        with pytest.raises(ValueError):
            CountsTable(10, 1, 2, 3, 3)


class TestClosedForm:
    def test_no_trigger(self):
        m = closed_form_marginals(0.3, 1.1, 1.1)
        assert_allclose([m["p2"], m["p2p"], m["p1"], m["p1p"]], 0.5, atol=1e-15)

    def test_signaling_values(self):
        m = closed_form_marginals(0.0, 0.0, np.pi / 4)
        assert_allclose([m["p2"], m["p2p"]], [0.25, 0.75], atol=1e-15)

    def test_sum(self):
        rng = np.random.default_rng(1)
        for a, b, bp in rng.uniform(-4, 4, size=(100, 3)):
            m = closed_form_marginals(a, b, bp)
            assert abs(m["p2"] + m["p2p"] - 1) < 1e-15

    def test_engine_b_prime(self):
        # rotator by theta on arm 1, adjoint on the backward leg: b' = b + theta
        for theta in (0.2, np.pi / 4, 1.3):
            cfg = ON.replace(b=0.1, pc=rotator(theta))
            assert_allclose(np.cos(effective_b_prime(cfg) - cfg.a) ** 2, np.cos(cfg.b + theta - cfg.a) ** 2,
                            atol=1e-12)


class TestSignalingTest:
    def test_clear_difference(self):
        res = signaling_test(CountsTable(10_000, 0, 5000, 2500, 2500), CountsTable(10_000, 2500, 2500, 2500, 2500))
        assert res.reject_null and res.p_value < 1e-6
        pooled = 0.375
        assert_allclose(abs(res.z_statistic), 0.25 / np.sqrt(pooled * (1 - pooled) * 2e-4), rtol=1e-12)
        assert 36 < abs(res.z_statistic) < 38
        assert_allclose(res.effect, 0.25)

    def test_identical(self):
        t = CountsTable(1000, 100, 400, 300, 200)
        res = signaling_test(t, t)
        assert res.z_statistic == 0 and not res.reject_null

    def test_degenerate(self):
        t = CountsTable(100, 100, 0, 0, 0)
        with pytest.raises(ValueError):
            signaling_test(t, t)

    def test_simulated_detection(self):
        res = signaling_test(run_experiment(ON, 10_000, 1), run_experiment(OFF, 10_000, 2), 1e-6)
        assert res.reject_null

    def test_calibration_small_samples(self):
        alpha = 0.05
        exact = exact_rejection_rate(10, 0.5, 0.5, alpha)
        assert exact <= alpha
        reps = 2000
        rejected = sum(
            signaling_test(run_experiment(OFF, 10, 2 * k), run_experiment(OFF, 10, 2 * k + 1), alpha).reject_null
            for k in range(reps)
        )
        assert abs(rejected / reps - exact) < 5 * np.sqrt(exact * (1 - exact) / reps)
        assert rejected / reps <= alpha


class TestDecode:
    def blocks(self, bits, n, seed=3):
        return [run_experiment(ON if b else OFF, n, seed, start=k * n) for k, b in enumerate(bits)]

    def test_alternating(self):
        bits = [1, 0] * 8
        out = decode_message(self.blocks(bits, 10_000), 0.375, truth=bits, regime=(0.25, 0.5))
        assert out["bits"] == bits and out["ber"] == 0

    def test_all_off(self):
        out = decode_message(self.blocks([0] * 6, 1000), 0.375)
        assert out["bits"] == [0] * 6 and out["ber"] is None

    def test_short_blocks_error_rate(self):
        n, nbits = 16, 4000
        bits = [k % 2 for k in range(nbits)]
        out = decode_message(self.blocks(bits, n), 0.375, truth=bits)
        # a "1" is lost when >= 6 of 16 transmit at p = 1/4; a "0" when <= 5 transmit at p = 1/2
        predicted = 0.5 * (binom.sf(5, n, 0.25) + binom.cdf(5, n, 0.5))
        assert out["ber"] > 0
        assert abs(out["ber"] - predicted) < 5 * np.sqrt(predicted * (1 - predicted) / nbits)

    def test_refusals(self):
        with pytest.raises(ValueError):
            decode_message([], 0.375)
        with pytest.raises(ValueError):
            decode_message(self.blocks([1], 10), 0.9, regime=(0.25, 0.5))


class TestRequiredTrials:
    def test_design_value(self):
        n = required_trials(0.25, 0.5, 1e-6, 0.99)
        assert n == 383
        assert exact_rejection_rate(n, 0.25, 0.5, 1e-6) >= 0.99

    def test_simulated_power(self):
        n, reps = required_trials(0.25, 0.5, 1e-6, 0.99), 1000
        exact = exact_rejection_rate(n, 0.25, 0.5, 1e-6)
        hits = sum(
            signaling_test(run_experiment(ON, n, 1000 + k), run_experiment(OFF, n, 5000 + k), 1e-6).reject_null
            for k in range(reps)
        )
        assert abs(hits / reps - exact) < 5 * np.sqrt(exact * (1 - exact) / reps)

    def test_symmetric(self):
        assert required_trials(0.25, 0.5) == required_trials(0.5, 0.25)
        assert required_trials(0.1, 0.7, 0.01, 0.8) == required_trials(0.7, 0.1, 0.01, 0.8)

    def test_vanishing_effect(self):
        with pytest.raises(ValueError):
            required_trials(0.3, 0.3)
        with pytest.raises(ValueError, match="cap"):
            required_trials(0.5, 0.5 + 1e-6)
        assert required_trials(0.5, 0.45) < required_trials(0.5, 0.49) < MAX_REQUIRED_TRIALS

    @pytest.mark.parametrize("p_on,p_off", [(0.0, 0.5), (0.5, 1.0), (-0.1, 0.5)])
    def test_out_of_range(self, p_on, p_off):
        with pytest.raises(ValueError):
            required_trials(p_on, p_off)
