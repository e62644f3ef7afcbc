"""Command line: ``bwave validate|run|sweep|ghz|decode``.

Exit codes: 0 success, 1 usage or parse error, 2 infeasible scenario,
3 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import replace

import numpy as np

from .geometry import InfeasibleScenarioError, min_detour, validate_scenario
from .ghz import GhzConfig, ghz_experiment, validate_ghz_timing
from .harness import (
    closed_form_joints,
    closed_form_marginals,
    decode_message,
    estimate_probabilities,
    run_experiment,
    run_trials,
)
from .engine import branch_outcomes
from .scenario import SWEEP_PARAMS, ScenarioFileError, load_scenario

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_RUNTIME = 0, 1, 2, 3

TRIGGER_FLAGS = {"on": "always", "off": "never", "d1prime": "on_reflection_D1prime"}
_PER_TRIAL_CHUNK = 1 << 16


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def fmt(value) -> str:
    """Shortest round-trip text for a table cell."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _json(doc) -> str:
    return json.dumps(doc, indent=2) + "\n"


def _emit(text: str, out) -> None:
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load(path, trials=None, seed=None, trigger=None):
    spec = load_scenario(path)
    changes = {}
    if trials is not None:
        changes["trials"] = trials
    if seed is not None:
        changes["seed"] = seed
    if trigger is not None:
        changes["rule"] = TRIGGER_FLAGS[trigger]
    if changes:
        spec = replace(spec, **changes)
    try:
        cfg = spec.to_config()
    except ValueError as exc:
        raise ScenarioFileError(str(exc)) from None
    return spec, cfg


def effective_angles(cfg):
    """Analyzer angles at which the closed-form joint law matches each engine branch.

    Returns ``(b_T, b_R)``: photon 2 transmits with probability sin^2(b_T - a)
    after photon 1 transmits and cos^2(b_R - a) after it reflects.
    """
    br = branch_outcomes(cfg)
    b_t = cfg.a + float(np.arcsin(np.sqrt(np.clip(br["T"].p_ch2_T, 0, 1))))
    b_r = cfg.a + float(np.arccos(np.sqrt(np.clip(br["R"].p_ch2_T, 0, 1))))
    return b_t, b_r


def run_report(spec, cfg, workers=1, allow_infeasible=False):
    counts = run_experiment(cfg, spec.trials, spec.seed, workers=workers, allow_infeasible=allow_infeasible)
    est = estimate_probabilities(counts)
    b_t, b_r = effective_angles(cfg)
    closed = {**closed_form_joints(cfg.a, b_t, b_r), **closed_form_marginals(cfg.a, b_t, b_r)}
    return counts, est, closed, (b_t, b_r)


def _cmd_validate(args) -> int:
    spec, cfg = _load(args.scenario)
    violations = validate_scenario(cfg)
    if not violations:
        print("OK")
        return EXIT_OK
    for v in violations:
        extra = ""
        if v.kind == "RaceViolation" and cfg.bwave_mode == "finite":
            extra = f" (y_min={fmt(min_detour(cfg))})"
        print(f"{v}{extra}")
    return EXIT_INFEASIBLE


def _cmd_run(args) -> int:
    spec, cfg = _load(args.scenario, args.trials, args.seed, args.trigger)
    if spec.trials < 1:
        raise UsageError("--trials must be >= 1")
    counts, est, closed, (b_t, b_r) = run_report(spec, cfg, args.workers, args.allow_infeasible)
    if args.format == "json":
        doc = {
            "scenario": spec.to_document(),
            "counts": {k: getattr(counts, k) for k in counts.__dataclass_fields__},
            "estimates": {
                name: {"value": e.value, "stderr": e.stderr, "closed_form": closed[name]} for name, e in est.items()
            },
            "effective_b_deg": {"after_T": float(np.degrees(b_t)), "after_R": float(np.degrees(b_r))},
        }
        text = _json(doc)
    else:
        rows = [(k, getattr(counts, k), None, None) for k in counts.__dataclass_fields__]
        rows += [(name, e.value, e.stderr, closed[name]) for name, e in est.items()]
        text = _csv(("name", "value", "stderr", "closed_form"), rows)
    _emit(text, args.out)
    if args.per_trial_out:
        _write_trials(cfg, spec, args.per_trial_out, args.allow_infeasible)
    return EXIT_OK


def _write_trials(cfg, spec, path, allow_infeasible) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("trial", "ch1", "ch2", "t1_s", "t2_s", "pc_activated", "bwave_arrived"))
        for start in range(0, spec.trials, _PER_TRIAL_CHUNK):
            n = min(_PER_TRIAL_CHUNK, spec.trials - start)
            batch = run_trials(cfg, n, spec.seed, start=start, allow_infeasible=allow_infeasible)
            w.writerows([fmt(v) for v in row] for row in batch.rows())


def _cmd_sweep(args) -> int:
    if args.param not in SWEEP_PARAMS:
        raise UsageError(f"--param must be one of {', '.join(SWEEP_PARAMS)}; got {args.param!r}")
    if args.steps < 1:
        raise UsageError("--steps must be >= 1")
    spec, _ = _load(args.scenario, args.trials, args.seed, args.trigger)
    rows = []
    for value in np.linspace(args.start, args.stop, args.steps):
        step = spec.with_param(args.param, float(value))
        try:
            cfg = step.to_config()
        except ValueError as exc:
            rows.append((float(value), None, None, None, False, f"ConfigError: {exc}"))
            continue
        violations = validate_scenario(cfg)
        _, est, closed, _ = run_report(step, cfg, args.workers, allow_infeasible=True)
        rows.append((float(value), est.p2.value, est.p2.stderr, closed["p2"], not violations,
                     ";".join(v.kind for v in violations)))
    header = (args.param, "p2", "p2_stderr", "closed_form_p2", "feasible", "violations")
    _emit(_csv(header, rows), args.out)
    return EXIT_OK


def _cmd_ghz(args) -> int:
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    try:
        cfg = GhzConfig(l=args.l, t_a=args.ta, t_l_meas=args.tl, v=args.v, alice_measures=args.alice == "on",
                        trials=args.trials, seed=args.seed, c=args.c)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    timing_ok = validate_ghz_timing(cfg)
    if cfg.alice_measures and not timing_ok:
        print(f"warning: timing condition v > l/(t_L - t_A) > c fails (v={fmt(cfg.v)}, "
              f"l/(t_L - t_A)={fmt(cfg.required_speed)}, c={fmt(cfg.c)}); running as a negative test",
              file=sys.stderr)
    res = ghz_experiment(cfg)
    rows = [
        ("n", res.n, None),
        ("n_same", res.n_same, None),
        ("p_same", res.p_same, res.stderr),
        ("b0_c0", res.table[0][0], None),
        ("b0_c1", res.table[0][1], None),
        ("b1_c0", res.table[1][0], None),
        ("b1_c1", res.table[1][1], None),
        ("alice_measures", cfg.alice_measures, None),
        ("v", cfg.v, None),
        ("required_speed", cfg.required_speed, None),
        ("c", cfg.c, None),
        ("timing_valid", timing_ok, None),
        ("influence_reached", res.influence_reached, None),
    ]
    if args.format == "json":
        text = _json({name: {"value": value, "stderr": se} if se is not None else value
                      for name, value, se in rows})
    else:
        text = _csv(("name", "value", "stderr"), rows)
    _emit(text, args.out)
    return EXIT_OK


def _cmd_decode(args) -> int:
    if args.bits < 1 or args.blocks < 1:
        raise UsageError("--bits and --blocks must be >= 1")
    spec, cfg = _load(args.scenario, seed=args.seed)
    on = cfg.replace(trigger_rule="on_reflection_D1prime")
    off = cfg.replace(trigger_rule="never")
    p_on = closed_form_marginals(on.a, *effective_angles(on))["p2"]
    p_off = closed_form_marginals(off.a, *effective_angles(off))["p2"]
    lo, hi = sorted((p_on, p_off))
    if not lo < args.threshold < hi:
        raise UsageError(f"--threshold {fmt(args.threshold)} lies outside the regime interval "
                         f"({fmt(lo)}, {fmt(hi)})")
    for c in (on, off):
        violations = validate_scenario(c)
        if violations:
            raise InfeasibleScenarioError(violations)
    seed = spec.seed
    message = np.random.default_rng([seed, 1]).integers(0, 2, args.bits).tolist()
    n = args.blocks
    blocks = [run_experiment(on if bit else off, n, seed, start=k * n) for k, bit in enumerate(message)]
    decoded = decode_message(blocks, args.threshold, truth=message, regime=(p_on, p_off))
    p2 = [estimate_probabilities(b).p2 for b in blocks]
    if args.format == "json":
        doc = {
            "sent": "".join(map(str, message)),
            "decoded": "".join(map(str, decoded["bits"])),
            "ber": decoded["ber"],
            "threshold": args.threshold,
            "trials_per_block": n,
            "p2_on": p_on,
            "p2_off": p_off,
            "blocks": [{"sent": s, "p2": e.value, "p2_stderr": e.stderr, "decoded": d}
                       for s, e, d in zip(message, p2, decoded["bits"])],
        }
        text = _json(doc)
    else:
        rows = [("block", "sent", "p2", "p2_stderr", "decoded")]
        rows += [(k, s, e.value, e.stderr, d) for k, (s, e, d) in enumerate(zip(message, p2, decoded["bits"]))]
        text = _csv(rows[0], rows[1:])
    _emit(text, args.out)
    print(f"sent    {''.join(map(str, message))}\ndecoded {''.join(map(str, decoded['bits']))}\n"
          f"BER {fmt(decoded['ber'])}", file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="bwave", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common_out(sp, formats=True):
        sp.add_argument("--out", help="write the table here instead of standard output")
        if formats:
            sp.add_argument("--format", choices=("csv", "json"), default="csv")

    v = sub.add_parser("validate", help="check a scenario's timing conditions")
    v.add_argument("scenario")
    v.set_defaults(func=_cmd_validate)

    r = sub.add_parser("run", help="run a scenario and emit counts and estimates")
    r.add_argument("scenario")
    r.add_argument("--trials", type=int)
    r.add_argument("--seed", type=int)
    r.add_argument("--trigger", choices=tuple(TRIGGER_FLAGS))
    r.add_argument("--per-trial-out", help="also write one CSV row per trial to this path")
    r.add_argument("--workers", type=int, default=1)
    r.add_argument("--allow-infeasible", action="store_true", help="run even if the scenario fails validation")
    common_out(r)
    r.set_defaults(func=_cmd_run)

    s = sub.add_parser("sweep", help="sweep one parameter and emit p2 against the closed form")
    s.add_argument("scenario")
    s.add_argument("--param", required=True)
    s.add_argument("--from", dest="start", type=float, required=True)
    s.add_argument("--to", dest="stop", type=float, required=True)
    s.add_argument("--steps", type=int, required=True)
    s.add_argument("--trials", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--trigger", choices=tuple(TRIGGER_FLAGS))
    s.add_argument("--workers", type=int, default=1)
    common_out(s, formats=False)
    s.set_defaults(func=_cmd_sweep)

    g = sub.add_parser("ghz", help="three-party GHZ signaling run")
    g.add_argument("--alice", choices=("on", "off"), required=True)
    g.add_argument("--trials", type=int, default=10_000)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("-l", type=float, required=True, help="distance from Alice to Bob and to Charlie (m)")
    g.add_argument("--ta", type=float, required=True, help="Alice's measurement instant (s)")
    g.add_argument("--tl", type=float, required=True, help="Bob's and Charlie's measurement instant (s)")
    g.add_argument("-v", type=float, required=True, help="influence speed (m/s)")
    g.add_argument("--c", type=float, default=GhzConfig.c)
    common_out(g)
    g.set_defaults(func=_cmd_ghz)

    d = sub.add_parser("decode", help="send a random bitstring through the trigger channel and decode it")
    d.add_argument("scenario")
    d.add_argument("--bits", type=int, default=32, help="message length; one block per bit")
    d.add_argument("--blocks", "--block-trials", dest="blocks", type=int, default=10_000,
                   help="trials per block")
    d.add_argument("--threshold", type=float, default=0.375)
    d.add_argument("--seed", type=int)
    common_out(d)
    d.set_defaults(func=_cmd_decode)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except ScenarioFileError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InfeasibleScenarioError as exc:
        for v in exc.violations:
            print(v, file=sys.stderr)
        return EXIT_INFEASIBLE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
