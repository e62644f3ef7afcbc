import numpy as np
import pytest
from numpy.testing import assert_allclose

from _builders import born_joints, counts_by_pair, no_catch_config, random_static_config
from bwave.engine import (
    DeviceTimeline,
    branch_outcomes,
    bwave_trace,
    pc_active_at,
    simulate_trial,
)
from bwave.geometry import InfeasibleScenarioError, OpticalElement, default_config, min_detour
from bwave.harness import run_experiment, run_trials
from bwave.polarization import (
    IDENTITY,
    collapse_on_first_detection,
    hwp,
    linear_state,
    rotator,
    same_up_to_phase,
    singlet,
)
from bwave.rng import TrialStream


def trials(cfg, n, seed=0, **kw):
    return [simulate_trial(cfg, TrialStream(seed, i), **kw) for i in range(n)]


class TestPcActiveAt:
    def test_tie_is_idle(self):
        tl = DeviceTimeline({"PC": 1e-6})
        assert not pc_active_at(tl, 1e-6)
        assert pc_active_at(tl, 1e-6 + 1e-18)

    def test_never_activated(self):
        tl = DeviceTimeline()
        assert not any(pc_active_at(tl, t) for t in (0.0, 1.0, 1e9))


class TestSimulateTrial:
    def test_equal_angles_anticorrelated(self):
        cfg = default_config(a=0.7, b=0.7, trigger_rule="never")
        recs = trials(cfg, 500)
        assert all(r.ch1 != r.ch2 for r in recs)
        counts = run_experiment(cfg, 100_000, seed=3)
        assert counts.c_12 == 0 and counts.c_1p2p == 0

    def test_trigger_always_rotator(self):
        cfg = default_config(a=0.0, b=0.0, trigger_rule="always", pc=rotator(np.pi / 4))
        br = branch_outcomes(cfg)
        # carried |a + pi/2>, then the backward rotator adjoint turns it by -pi/4
        assert_allclose(br["T"].p_ch2_T, np.cos(0 - 0 - np.pi / 2 + np.pi / 4) ** 2, atol=1e-12)
        counts = run_experiment(cfg, 200_000, seed=9)
        freq = counts.c_12 / (counts.c_12 + counts.c_12p)
        sigma = np.sqrt(0.25 / (counts.c_12 + counts.c_12p))
        assert abs(freq - 0.5) < 5 * sigma

    @pytest.mark.parametrize("a", [0.0, np.pi / 6, np.pi / 3])
    def test_missed_interception(self, a):
        cfg = no_catch_config(a=a, b=0.0)
        with pytest.raises(InfeasibleScenarioError, match="NoCatch"):
            simulate_trial(cfg, TrialStream(0, 0))
        recs = trials(cfg, 50, allow_infeasible=True)
        assert not any(r.bwave_arrived or r.t_catch for r in recs)
        counts = run_experiment(cfg, 100_000, seed=4, allow_infeasible=True)
        assert counts.c_bwave_missed == counts.n
        assert abs(counts.c_2 / counts.n - 0.5) < 5 * np.sqrt(0.25 / counts.n)

    def test_records_match_batch_sampler(self):
        cfg = random_static_config(np.random.default_rng(1)).replace(trigger_rule="on_reflection_D1prime")
        batch = run_trials(cfg, 400, seed=77)
        recs = trials(cfg, 400, seed=77)
        for rec, row in zip(recs, batch.rows()):
            assert (rec.ch1, rec.ch2, rec.t1, rec.t2, rec.pc_activated, rec.bwave_arrived) == row[1:]

    def test_simultaneous_detection_flagged(self):
        cfg = default_config()
        cfg = cfg.replace(x_b=cfg.x_a + 2 * cfg.y)
        rec = simulate_trial(cfg, TrialStream(0, 0), allow_infeasible=True)
        assert rec.simultaneous and not rec.bwave_arrived
        kinds = [e.kind for e in rec.events if e.kind == "Detection"]
        assert [e.detail for e in rec.events if e.kind == "Detection"] == ["D1", "D2"] and len(kinds) == 2

    def test_causal_ordering(self):
        rng = np.random.default_rng(2)
        for i in range(50):
            cfg = random_static_config(rng).replace(trigger_rule="always")
            rec = simulate_trial(cfg, TrialStream(5, i))
            times = [e.time for e in rec.events]
            assert times == sorted(times)
            assert all(e.time > rec.t1 for e in rec.events if e.kind.startswith("BWave"))


class TestMechanism:
    def test_branch_law_equals_born_rule(self):
        rng = np.random.default_rng(123)
        for _ in range(50):
            cfg = random_static_config(rng)
            br = branch_outcomes(cfg)
            born = born_joints(cfg)
            for c1 in ("T", "R"):
                p2 = br[c1].p_ch2_T
                assert abs(br[c1].p_ch1 * p2 - born[(c1, "T")]) < 1e-12
                assert abs(br[c1].p_ch1 * (1 - p2) - born[(c1, "R")]) < 1e-12

    def test_static_hwp_frequencies(self):
        cfg = default_config(trigger_rule="never", a=0.2, b=1.0,
                             extra_elements=(OpticalElement(1, 1.5, hwp(0.3), name="hwp"),))
        n = 200_000
        counts = counts_by_pair(run_experiment(cfg, n, seed=21))
        for pair, p in born_joints(cfg).items():
            assert abs(counts[pair] / n - p) <= 5 * np.sqrt(p * (1 - p) / n)


class TestRaceFidelity:
    def test_above_threshold(self):
        cfg = default_config(trigger_rule="on_reflection_D1prime")
        for rec in trials(cfg, 300, seed=8):
            assert rec.pc_seen_active == (rec.ch1 == "R")
            assert rec.pc_activated == (rec.ch1 == "R")

    def test_just_above_threshold(self):
        cfg = default_config()
        cfg = cfg.replace(y=min_detour(cfg) * (1 + 1e-9))
        for rec in trials(cfg, 100, seed=8):
            assert rec.pc_seen_active == (rec.ch1 == "R")

    def test_below_threshold(self):
        cfg = default_config()
        for factor in (0.5, 1 - 1e-9):
            low = cfg.replace(y=min_detour(cfg) * factor)
            recs = trials(low, 200, seed=8, allow_infeasible=True)
            assert not any(r.pc_seen_active for r in recs)
            assert any(r.pc_activated for r in recs)


class TestMarginalAsymmetry:
    @pytest.mark.parametrize("theta", [np.pi / 8, np.pi / 4, 1.0])
    def test_trigger_on_shifts_p2(self, theta):
        cfg = default_config(pc=rotator(theta), a=0.0, b=0.3)
        n = 200_000
        counts = run_experiment(cfg, n, seed=31)
        expected = 0.5 * (np.sin(cfg.b - cfg.a) ** 2 + np.cos(cfg.b + theta - cfg.a) ** 2)
        assert abs(counts.c_2 / n - expected) < 5 * np.sqrt(expected * (1 - expected) / n)
        assert abs(expected - 0.5) > 0.01

    def test_trigger_never_is_unbiased(self):
        cfg = default_config(pc=rotator(0.6), b=0.3, trigger_rule="never")
        n = 200_000
        counts = run_experiment(cfg, n, seed=31)
        assert abs(counts.c_2 / n - 0.5) < 5 * np.sqrt(0.25 / n)


class TestBwaveTrace:
    def test_no_devices(self):
        cfg = default_config()
        carried = linear_state(0.3)
        out, t = bwave_trace([], [], carried, DeviceTimeline(), 1e-5, cfg)
        assert_allclose(out.amps, carried.amps)
        assert t is not None

    def test_active_pc_applies_adjoint(self):
        cfg = default_config()
        theta = 0.4
        pc = OpticalElement(1, cfg.pc_position, IDENTITY, rotator(theta), name="PC")
        carried = linear_state(0.3)
        t1 = cfg.arm_length(1) / cfg.c
        out, _ = bwave_trace([pc], [], carried, DeviceTimeline({"PC": t1 + cfg.x / cfg.c}), t1, cfg)
        assert same_up_to_phase(out, rotator(theta).adjoint.apply(carried))
        idle, _ = bwave_trace([pc], [], carried, DeviceTimeline(), t1, cfg)
        assert same_up_to_phase(idle, carried)

    def test_matches_engine(self):
        cfg = random_static_config(np.random.default_rng(4))
        rec = branch_outcomes(cfg)["R"].record
        _, carried = collapse_on_first_detection(singlet(), cfg.a, "R")
        out, t = bwave_trace(cfg.elements(1), cfg.elements(2), carried, DeviceTimeline(), rec.t1, cfg)
        assert_allclose(t, rec.t_catch, rtol=1e-15)
        p2 = branch_outcomes(cfg)["R"].p_ch2_T
        # elements past the catch point are applied by photon 2 itself
        late = [el for el in cfg.elements(2) if el.position >= cfg.c * t]
        for el in late:
            out = el.idle.apply(out)
        assert_allclose(abs(linear_state(cfg.b).amps.conj() @ out.amps) ** 2, p2, atol=1e-12)


def test_determinism_same_seed():
    cfg = default_config()
    assert trials(cfg, 50, seed=3) == trials(cfg, 50, seed=3)
    assert run_experiment(cfg, 10_000, 3) == run_experiment(cfg, 10_000, 3, workers=4)
