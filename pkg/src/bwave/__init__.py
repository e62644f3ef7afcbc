"""Preferred-frame simulation of finite-speed B-wave correlations between entangled photons."""

from .engine import TrialRecord, branch_outcomes, bwave_trace, pc_active_at, simulate_trial
from .geometry import (
    SPEED_OF_LIGHT,
    InfeasibleScenarioError,
    OpticalElement,
    ScenarioConfig,
    bwave_transit_time,
    default_config,
    detection_times,
    light_signal_time,
    min_detour,
    race_ok,
    validate_scenario,
)
from .ghz import GhzConfig, ghz_experiment, ghz_trial, validate_ghz_timing
from .harness import (
    CountsTable,
    closed_form_marginals,
    decode_message,
    estimate_probabilities,
    required_trials,
    run_experiment,
    signaling_test,
)
from .polarization import (
    apply_jones_to_photon,
    collapse_on_first_detection,
    ghz_state,
    hwp,
    joint_probability,
    make_element,
    rotator,
    singlet,
)
from .rng import TrialStream

__version__ = "0.1.0"
