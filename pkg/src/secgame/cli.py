"""Command line entry point: ``secgame <command> [options]``.

Every command that takes ``--out DIR`` writes its CSV files there together
with a ``manifest.json`` recording the command, inputs and configuration;
each CSV starts with a ``# manifest:`` line naming it. Exit status is 0 on
success, 2 for unreadable or invalid input and 3 when an iterative
computation does not converge.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from . import __version__
from .engine import EngineConfig, run_game, write_trajectories
from .errors import ContractError, ConvergenceError, NotFoundError, SpecError
from .fixture import five_state_game, fixture_path, load_fixture
from .iif import analyse, apply_iif, matrix_to_csv, profile_strategies
from .model import ADMIN, USER, dump_spec, load_spec, save_spec, validate_spec
from .multiplayer import (read_collective_csv, read_coop_csv, should_cooperate,
                          should_respond_collectively)
from .ploy import assess_response, load_pool, select_offer
from .sensor import load_signatures, perception_distribution
from .strategy import (DEFAULT_LEVELS, REFERENCE_PRESCRIPTIONS, aggression_profile, apply_skill,
                       epsilon_nosp, nosp_table, nosp_to_csv, parse_levels, skill_profile, sweep,
                       sweep_from_csv, sweep_to_csv)

EXIT_OK, EXIT_INPUT, EXIT_CONVERGENCE = 0, 2, 3
MANIFEST = "manifest.json"


class InputError(Exception):
    """Problem with command-line input that should exit with status 2."""


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _load_game(path):
    spec = load_fixture() if path is None else load_spec(path)
    report = validate_spec(spec)
    if not report.ok:
        raise InputError("spec validation failed:\n" + "\n".join(f"  {v}" for v in report))
    for w in report.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return report.spec if report.spec is not None else spec


def _spec_label(path) -> str:
    return str(path) if path is not None else f"<bundled {fixture_path().name}>"


class Output:
    """Collects files for ``--out`` and writes them with a manifest."""

    def __init__(self, out_dir, command: str, inputs: dict, config: dict):
        self.dir = Path(out_dir) if out_dir else None
        self.manifest = {"command": command, "version": __version__, "inputs": inputs,
                         "config": config, "outputs": []}

    @property
    def active(self) -> bool:
        return self.dir is not None

    def csv_text(self, body: str) -> str:
        return f"# manifest: {MANIFEST}\n{body}" if self.active else body

    def write(self, name: str, text: str) -> None:
        if not self.active:
            return
        self.dir.mkdir(parents=True, exist_ok=True)
        (self.dir / name).write_text(text, encoding="utf-8")
        self.manifest["outputs"].append(name)

    def close(self) -> None:
        if not self.active:
            return
        self.dir.mkdir(parents=True, exist_ok=True)
        text = json.dumps(self.manifest, indent=1, sort_keys=True) + "\n"
        (self.dir / MANIFEST).write_text(text, encoding="utf-8")


# --------------------------------------------------------------------------
# commands


def cmd_classify(args) -> int:
    labels, sigs, reading = load_signatures(args.signatures)
    if args.reading is not None:
        reading = parse_levels(args.reading)
    if reading is None:
        raise InputError("no reading given (use --reading or a 'reading' entry in the file)")
    probs = perception_distribution(sigs, reading)
    out = Output(args.out, "classify", {"signatures": str(args.signatures)},
                 {"reading": [float(x) for x in reading]})
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["state", "probability"])
    for label, p in zip(labels, probs):
        w.writerow([label, _fmt(p)])
        print(f"{label}: {p:.6g}")
    out.write("classification.csv", out.csv_text(buf.getvalue()))
    out.close()
    return EXIT_OK


def cmd_validate(args) -> int:
    spec = load_fixture() if args.spec is None else load_spec(args.spec)
    report = validate_spec(spec)
    for w in report.warnings:
        print(f"warning: {w}")
    for v in report:
        print(f"error: {v}")
    if not report.ok:
        return EXIT_INPUT
    print(f"{_spec_label(args.spec)}: ok ({spec.n_states} states, {len(spec.actions)} actions, "
          f"{len(spec.transitions)} action pairs)")
    return EXIT_OK


def _engine_config(args) -> EngineConfig:
    return EngineConfig(theta=args.theta, max_steps=args.max_steps, base_seed=args.seed)


def _skilled_game(args):
    spec = _load_game(args.spec)
    skill = skill_profile(args.skill)
    if spec.contests:
        spec = apply_skill(spec, skill)
    else:
        print("warning: spec has no contested transitions; --skill has no effect", file=sys.stderr)
    return spec, skill


def _run_sweep(args, command):
    spec, skill = _skilled_game(args)
    levels = parse_levels(args.levels) if args.levels else DEFAULT_LEVELS
    config = _engine_config(args)
    result = sweep(spec, levels, args.runs, config, workers=args.workers)
    echo = dict(result.config, skill=skill.name, attack_success=skill.attack_success)
    out = Output(args.out, command, {"spec": _spec_label(args.spec)}, echo)
    out.write("sweep.csv", sweep_to_csv(result, MANIFEST if out.active else None))
    if args.trajectories:
        if not out.active:
            raise InputError("--trajectories needs --out")
        buf = io.StringIO()
        write_trajectories(spec, _trajectories(spec, result.levels, args.trajectories, config), buf)
        out.write("trajectories.csv", out.csv_text(buf.getvalue()))
    return spec, skill, result, out


def _trajectories(spec, levels, n_runs, config):
    for i, a in enumerate(levels):
        for j, u in enumerate(levels):
            profile = aggression_profile(spec, a, u, key=(i, j))
            for r in range(n_runs):
                yield f"{i}:{j}:{r}", run_game(spec, profile, config, run=r, record=True)


def cmd_sweep(args) -> int:
    _, _, result, out = _run_sweep(args, "sweep")
    if not out.active:
        sys.stdout.write(sweep_to_csv(result))
    else:
        print(f"wrote {len(result.levels)}x{len(result.levels)} sweep to {out.dir / 'sweep.csv'}")
    out.close()
    return EXIT_OK


def cmd_nosp(args) -> int:
    if args.epsilon < 0:
        raise InputError("--epsilon must be >= 0")
    if args.sweep:
        try:
            text = Path(args.sweep).read_text(encoding="utf-8")
        except OSError as exc:
            raise SpecError(str(exc), args.sweep) from None
        result = sweep_from_csv(text)
        out = Output(args.out, "nosp", {"sweep": str(args.sweep)}, {"epsilon": args.epsilon})
        skill_key = None
    else:
        _, skill, result, out = _run_sweep(args, "nosp")
        out.manifest["config"]["epsilon"] = args.epsilon
        skill_key = args.skill
    nosp = epsilon_nosp(result, args.epsilon)
    reference = REFERENCE_PRESCRIPTIONS.get(skill_key) if skill_key else None
    print(nosp_table(result, nosp, reference))
    out.write("nosp.csv", nosp_to_csv(result, nosp, MANIFEST if out.active else None))
    out.close()
    return EXIT_OK


def cmd_iif(args) -> int:
    spec = _load_game(args.spec)
    player = {"admin": ADMIN, "user": USER}[args.player]
    levels = parse_levels(args.profile)
    if len(levels) != 2:
        raise InputError("--profile needs two levels: admin,user")
    a_level, u_level = levels
    profile = aggression_profile(spec, a_level, u_level)
    start = spec.state_index(args.start) if args.start is not None else None
    occ, rp, z = analyse(spec, profile, player, start, args.tol, args.max_iter)
    states = list(spec.states)
    r_csv = matrix_to_csv(["r", "r_perceived"], states, [occ.r, rp], corner="ratio")
    z_csv = matrix_to_csv(states, states, z.z, corner="perceived\\true")
    ids, mixed = apply_iif(z, profile_strategies(spec, profile, player))
    p_csv = matrix_to_csv(states, ids, mixed, corner="perceived\\action")
    out = Output(args.out, "iif", {"spec": _spec_label(args.spec)},
                 {"player": args.player, "profile": [a_level, u_level], "start": occ.start,
                  "tol": args.tol, "max_iter": args.max_iter})
    out.write("ratios.csv", out.csv_text(r_csv))
    out.write("iif.csv", out.csv_text(z_csv))
    out.write("perceived_strategy.csv", out.csv_text(p_csv))
    print(f"converged after {occ.iterations} doublings (residual {occ.residual:.3g})")
    sys.stdout.write(r_csv)
    sys.stdout.write(z_csv)
    if z.flagged:
        print("flagged (never perceived) states: " + ", ".join(states[i] for i in z.flagged))
    out.close()
    return EXIT_OK


def cmd_ploy(args) -> int:
    pool, min_size, max_size = load_pool(args.pool)
    min_size = args.min_size if args.min_size is not None else min_size
    max_size = args.max_size if args.max_size is not None else max_size
    offer = select_offer(pool, min_size, max_size)
    print(f"regime: {offer.regime}")
    print(f"offer: {', '.join(offer.actions)}")
    print(f"gap: {_fmt(offer.gap)}")
    print(f"entropy: {_fmt(offer.entropy)} bits")
    if args.taken:
        verdict = assess_response(offer, args.taken)
        if verdict.confirms_belief:
            print(f"response {args.taken}: confirms belief")
        else:
            print(f"response {args.taken}: deviation, preference rank {verdict.rank}")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["action", "probability", "nash"])
    for a, p in zip(offer.actions, offer.probabilities):
        w.writerow([a, _fmt(p), int(a == offer.nash_action)])
    out = Output(args.out, "ploy", {"pool": str(args.pool)},
                 {"min_size": min_size, "max_size": max_size, "regime": offer.regime,
                  "gap": offer.gap, "entropy": offer.entropy})
    out.write("offer.csv", out.csv_text(buf.getvalue()))
    out.close()
    return EXIT_OK


def _read_text(path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise SpecError(str(exc), str(path)) from None


def cmd_coop(args) -> int:
    if args.collective:
        individual, common = read_collective_csv(_read_text(args.file))
        decision, margin = should_respond_collectively(individual, common)
        print("respond collectively" if decision else "respond per game")
        print(f"margin: {_fmt(margin)}")
        return EXIT_OK
    decision, margins = should_cooperate(read_coop_csv(_read_text(args.file)))
    print("cooperate" if decision else "no cooperation")
    for name, m in margins.items():
        print(f"{name}: margin {_fmt(m)}")
    return EXIT_OK


def cmd_fixture(args) -> int:
    spec = five_state_game()
    if args.output:
        save_spec(spec, args.output)
        print(f"wrote {args.output}")
    else:
        sys.stdout.write(dump_spec(spec))
    return EXIT_OK


# --------------------------------------------------------------------------
# parser


def _add_game_options(p, sweep_options=True):
    p.add_argument("--spec", help="game file (JSON); default: bundled five-state game")
    if not sweep_options:
        return
    p.add_argument("--seed", type=int, default=0, help="base seed (default 0)")
    p.add_argument("--runs", type=int, default=100, help="runs per profile (default 100)")
    p.add_argument("--levels", help='aggression levels, "0:0.9:0.1" or "0,0.5"')
    p.add_argument("--skill", choices=["below", "average", "above"], default="average")
    p.add_argument("--theta", type=float, default=1e-3, help="discount weight cut-off")
    p.add_argument("--max-steps", type=int, default=200)
    p.add_argument("--workers", type=int, default=1, help="processes for the sweep")
    p.add_argument("--trajectories", type=int, default=0, metavar="N",
                   help="also write the first N runs of every cell step by step")
    p.add_argument("--out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="secgame", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="perceived-state distribution for a sensor reading")
    p.add_argument("signatures", help="JSON file with a 'signatures' section")
    p.add_argument("--reading", help="comma-separated reading (overrides the file)")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("validate", help="check a game file")
    _add_game_options(p, sweep_options=False)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("sweep", help="Monte Carlo grid over aggression levels")
    _add_game_options(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("nosp", help="epsilon-NOSP set from a sweep")
    _add_game_options(p)
    p.add_argument("--epsilon", type=float, default=0.01)
    p.add_argument("--sweep", help="read a sweep CSV instead of running one")
    p.set_defaults(func=cmd_nosp)

    p = sub.add_parser("iif", help="occurrence ratios and imperfect-information matrix")
    _add_game_options(p, sweep_options=False)
    p.add_argument("--player", choices=["admin", "user"], default="admin")
    p.add_argument("--profile", default="0.5,0.5", help="admin,user aggression levels")
    p.add_argument("--start", help="start state (label or index); default: the game's")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--max-iter", type=int, default=200, help="maximum number of doublings")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_iif)

    p = sub.add_parser("ploy", help="choose a honeypot action offer")
    p.add_argument("pool", help="JSON file with a 'ploy' section")
    p.add_argument("--min-size", type=int)
    p.add_argument("--max-size", type=int)
    p.add_argument("--taken", help="action the user took, to assess")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_ploy)

    p = sub.add_parser("coop", help="cooperation / collective-response decisions")
    p.add_argument("file", help="CSV of reward sequences")
    p.add_argument("--collective", action="store_true",
                   help="file holds game,individual,common sums for the administrator")
    p.set_defaults(func=cmd_coop)

    p = sub.add_parser("fixture", help="print or write the bundled five-state game")
    p.add_argument("-o", "--output", help="file to write")
    p.set_defaults(func=cmd_fixture)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (InputError, SpecError, ContractError, NotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
