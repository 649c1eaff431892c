"""Aggression-graded strategies, skill profiles, sweeps and ε-NOSP search.

The strategy universe is a grid of aggression levels per player. A level
``a`` puts mass ``a`` on the state's aggressive action and spreads the rest
evenly over the other allowed actions. Every (admin level, user level) cell
is evaluated by Monte Carlo; :func:`epsilon_nosp` then looks for cells from
which no player's best unilateral deviation stands out once the spread of
both reward distributions is taken into account.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .engine import EngineConfig, RewardStats, StrategyProfile, evaluate_profile
from .errors import ContractError, SpecError
from .model import ADMIN, USER, GameSpec

DEFAULT_LEVELS = tuple(k / 10 for k in range(10))
SKILL_DEFAULTS = {"below": 0.3, "average": 0.5, "above": 0.7}
SKILL_NAMES = {"below": "Below_Average", "average": "Average", "above": "Above_Average"}
#: Reference prescriptions reported for the original simulation; printed, never asserted.
REFERENCE_PRESCRIPTIONS = {"below": (7, 2), "average": (8, 6), "above": (4, 1)}


def aggression_to_mixed(spec: GameSpec, player: int, a: float) -> dict[int, tuple[float, ...]]:
    """Mixed strategy at every state for aggression level ``a`` in [0, 1)."""
    if not 0.0 <= a < 1.0:
        raise ContractError(f"aggression level must lie in [0, 1), got {a!r}")
    out = {}
    for s in range(spec.n_states):
        actions = spec.allowed(player, s)
        aggressive = [i for i, act in enumerate(actions) if act.tag == "aggressive"]
        if not aggressive or len(actions) == 1:
            out[s] = tuple(1.0 / len(actions) for _ in actions)
            continue
        target = aggressive[0]
        rest = (1.0 - a) / (len(actions) - 1)
        out[s] = tuple(a if i == target else rest for i in range(len(actions)))
    return out


def aggression_profile(spec: GameSpec, admin_level: float, user_level: float,
                       key: tuple[int, int] = (0, 0)) -> StrategyProfile:
    return StrategyProfile(
        (aggression_to_mixed(spec, ADMIN, admin_level), aggression_to_mixed(spec, USER, user_level)),
        key=key, levels=(admin_level, user_level))


@dataclass(frozen=True)
class SkillProfile:
    name: str
    attack_success: float

    def __post_init__(self):
        p = self.attack_success
        ok = {"Below_Average": p < 0.5, "Average": p == 0.5, "Above_Average": p > 0.5}
        if self.name not in ok:
            raise ContractError(f"unknown skill profile {self.name!r}")
        if not (0.0 <= p <= 1.0 and ok[self.name]):
            raise ContractError(f"{self.name} cannot have attack success {p!r}")


def skill_profile(name: str, attack_success: float | None = None) -> SkillProfile:
    """Look up ``below`` / ``average`` / ``above`` (or the full names)."""
    short = {v.lower(): k for k, v in SKILL_NAMES.items()}.get(name.lower(), name.lower())
    if short not in SKILL_DEFAULTS:
        raise ContractError(f"unknown skill profile {name!r}")
    p = SKILL_DEFAULTS[short] if attack_success is None else attack_success
    return SkillProfile(SKILL_NAMES[short], p)


def apply_skill(spec: GameSpec, skill: SkillProfile) -> GameSpec:
    """Copy of ``spec`` with every contested transition set by the user's skill.

    A user-initiated contest succeeds with ``attack_success``; an
    administrator-initiated one (trap against resistance) with its
    complement. Failure mass stays on the current state.
    """
    if not spec.contests:
        raise ContractError("spec has no contested transition entries")
    transitions = dict(spec.transitions)
    for key, contest in spec.contests.items():
        s = key[0]
        p = skill.attack_success if contest.aggressor == USER else 1.0 - skill.attack_success
        row = [0.0] * spec.n_states
        row[contest.success_state] += p
        row[s] += 1.0 - p
        transitions[key] = tuple(row)
    return replace(spec, transitions=transitions)


# --------------------------------------------------------------------------
# sweeps


@dataclass
class SweepResult:
    levels: tuple[float, ...]
    admin: list[list[RewardStats]]   # [admin index][user index]
    user: list[list[RewardStats]]
    n_runs: int
    config: dict = field(default_factory=dict)

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.admin), len(self.admin[0]) if self.admin else 0

    def means(self, player: int) -> np.ndarray:
        grid = self.admin if player == ADMIN else self.user
        return np.array([[c.mean for c in row] for row in grid])

    def sigmas(self, player: int) -> np.ndarray:
        grid = self.admin if player == ADMIN else self.user
        return np.array([[c.sigma for c in row] for row in grid])

    @classmethod
    def from_grids(cls, admin_means, user_means, admin_sigmas=None, user_sigmas=None,
                   levels=None, n_runs: int = 1) -> "SweepResult":
        """Build a result directly from mean (and optional σ) grids."""
        am = np.asarray(admin_means, dtype=float)
        um = np.asarray(user_means, dtype=float)
        if am.shape != um.shape or am.ndim != 2:
            raise ContractError("mean grids must be 2-D with equal shapes")
        asg = np.zeros_like(am) if admin_sigmas is None else np.asarray(admin_sigmas, float)
        usg = np.zeros_like(um) if user_sigmas is None else np.asarray(user_sigmas, float)

        def cells(m, s):
            return [[RewardStats(float(m[i, j]), float(s[i, j]), n_runs, np.array([m[i, j]]))
                     for j in range(m.shape[1])] for i in range(m.shape[0])]

        if levels is None:
            levels = tuple(range(max(am.shape)))
        return cls(tuple(levels), cells(am, asg), cells(um, usg), n_runs)


def _evaluate_cell(args):
    spec, i, j, a_level, u_level, n_runs, config = args
    profile = aggression_profile(spec, a_level, u_level, key=(i, j))
    admin, user, _ = evaluate_profile(spec, profile, n_runs, config)
    return i, j, admin, user


def sweep(spec: GameSpec, levels: Sequence[float] = DEFAULT_LEVELS, n_runs: int = 100,
          config: EngineConfig | None = None, workers: int | None = None) -> SweepResult:
    """Evaluate every (admin level, user level) pair.

    With ``workers > 1`` cells are spread over a process pool; results are
    identical to the serial run because each cell's seeds depend only on
    its grid indices.
    """
    levels = tuple(float(a) for a in levels)
    if not levels:
        raise ContractError("at least one aggression level is required")
    for a in levels:
        if not 0.0 <= a < 1.0:
            raise ContractError(f"aggression level must lie in [0, 1), got {a!r}")
    config = config or EngineConfig()
    tasks = [(spec, i, j, a, u, n_runs, config)
             for i, a in enumerate(levels) for j, u in enumerate(levels)]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_evaluate_cell, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    else:
        results = [_evaluate_cell(t) for t in tasks]
    n = len(levels)
    admin = [[None] * n for _ in range(n)]
    user = [[None] * n for _ in range(n)]
    for i, j, a_stats, u_stats in results:
        admin[i][j] = a_stats
        user[i][j] = u_stats
    echo = {"theta": config.theta, "max_steps": config.max_steps, "base_seed": config.base_seed,
            "discount": config.beta(spec), "n_runs": n_runs, "levels": list(levels)}
    return SweepResult(levels, admin, user, n_runs, echo)


SWEEP_HEADER = ["admin_level", "user_level", "admin_mean", "admin_sigma",
                "user_mean", "user_sigma", "n_runs"]


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def sweep_to_csv(result: SweepResult, manifest: str | None = None) -> str:
    buf = io.StringIO()
    if manifest:
        buf.write(f"# manifest: {manifest}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_HEADER)
    for i, a in enumerate(result.levels):
        for j, u in enumerate(result.levels):
            sa, su = result.admin[i][j], result.user[i][j]
            w.writerow([_fmt(a), _fmt(u), _fmt(sa.mean), _fmt(sa.sigma),
                        _fmt(su.mean), _fmt(su.sigma), sa.n])
    return buf.getvalue()


def sweep_from_csv(text: str) -> SweepResult:
    """Parse a sweep CSV (``#`` lines are skipped). Raises SpecError if incomplete."""
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    reader = csv.DictReader(lines)
    if reader.fieldnames is None or set(SWEEP_HEADER) - set(reader.fieldnames):
        raise SpecError(f"sweep CSV must have columns {', '.join(SWEEP_HEADER)}")
    rows = {}
    order: list[float] = []
    n_runs = set()
    for lineno, row in enumerate(reader, start=2):
        try:
            a, u = float(row["admin_level"]), float(row["user_level"])
            vals = tuple(float(row[c]) for c in SWEEP_HEADER[2:6])
            n_runs.add(int(row["n_runs"]))
        except (TypeError, ValueError):
            raise SpecError("malformed number", f"line {lineno}") from None
        for lv in (a, u):
            if lv not in order:
                order.append(lv)
        rows[(a, u)] = vals
    levels = tuple(order)
    missing = [(a, u) for a in levels for u in levels if (a, u) not in rows]
    if not levels or missing:
        raise SpecError(f"incomplete sweep grid: {len(missing)} missing cell(s)")
    n = len(levels)
    grids = np.zeros((4, n, n))
    for i, a in enumerate(levels):
        for j, u in enumerate(levels):
            grids[:, i, j] = rows[(a, u)]
    return SweepResult.from_grids(grids[0], grids[2], grids[1], grids[3], levels=levels,
                                  n_runs=max(n_runs) if n_runs else 1)


# --------------------------------------------------------------------------
# ε-NOSP


@dataclass
class NospResult:
    epsilon: float
    members: list[tuple[int, int]]
    prescribed: tuple[int, int] | None
    attacker_gain: np.ndarray      # max unilateral mean gain of the user, per cell
    required_epsilon: np.ndarray   # smallest ε admitting each cell


def _deviation_ratio(means: np.ndarray, sigmas: np.ndarray, axis: int) -> np.ndarray:
    """Per cell: (V_max - V) / (σ(V_max) + σ(V)) over unilateral deviations along ``axis``."""
    n0, n1 = means.shape
    out = np.zeros_like(means)
    for i in range(n0):
        for j in range(n1):
            line = means[:, j] if axis == 0 else means[i, :]
            best = int(np.argmax(line))
            vmax = line[best]
            v = means[i, j]
            gain = vmax - v
            if gain <= 0:
                continue
            s_best = sigmas[best, j] if axis == 0 else sigmas[i, best]
            den = s_best + sigmas[i, j]
            if den == 0:
                out[i, j] = np.inf
            else:
                with np.errstate(over="ignore"):   # a tiny spread just means "not admitted"
                    out[i, j] = gain / den
    return out


def epsilon_nosp(result: SweepResult, epsilon: float) -> NospResult:
    """Profiles within ε of unilateral-deviation optimality for both players.

    The prescribed profile is the member leaving the user (attacker) the
    smallest gain from a unilateral deviation; ties go to the smallest
    (admin index, user index).
    """
    if epsilon < 0:
        raise ContractError("epsilon must be >= 0")
    am, asg = result.means(ADMIN), result.sigmas(ADMIN)
    um, usg = result.means(USER), result.sigmas(USER)
    required = np.maximum(_deviation_ratio(am, asg, axis=0), _deviation_ratio(um, usg, axis=1))
    gain = um.max(axis=1, keepdims=True) - um
    members = [(int(i), int(j)) for i, j in zip(*np.nonzero(required <= epsilon))]
    prescribed = min(members, key=lambda ij: (gain[ij], ij)) if members else None
    return NospResult(float(epsilon), members, prescribed, gain, required)


def pure_nash_oracle(admin_means, user_means) -> set[tuple[int, int]]:
    """Brute-force pure equilibria of a bimatrix of means.

    A cell survives if neither player strictly gains by changing only their
    own index.
    """
    A = [list(map(float, row)) for row in admin_means]
    U = [list(map(float, row)) for row in user_means]
    rows, cols = len(A), len(A[0])
    found = set()
    for i in range(rows):
        for j in range(cols):
            admin_stays = all(A[k][j] <= A[i][j] for k in range(rows))
            user_stays = all(U[i][k] <= U[i][j] for k in range(cols))
            if admin_stays and user_stays:
                found.add((i, j))
    return found


NOSP_HEADER = ["admin_index", "user_index", "admin_level", "user_level",
               "required_epsilon", "attacker_gain", "prescribed"]


def nosp_to_csv(result: SweepResult, nosp: NospResult, manifest: str | None = None) -> str:
    buf = io.StringIO()
    if manifest:
        buf.write(f"# manifest: {manifest}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(NOSP_HEADER)
    for i, j in nosp.members:
        w.writerow([i, j, _fmt(result.levels[i]), _fmt(result.levels[j]),
                    _fmt(nosp.required_epsilon[i, j]), _fmt(nosp.attacker_gain[i, j]),
                    int((i, j) == nosp.prescribed)])
    return buf.getvalue()


def nosp_table(result: SweepResult, nosp: NospResult, reference: tuple[int, int] | None = None) -> str:
    lines = [f"epsilon = {nosp.epsilon:g}; {len(nosp.members)} profile(s) in the set"]
    lines.append(f"{'admin':>6} {'user':>6} {'a_lvl':>6} {'u_lvl':>6} {'req. eps':>12} {'user gain':>12}")
    for i, j in nosp.members:
        mark = "  <- prescribed" if (i, j) == nosp.prescribed else ""
        lines.append(f"{i:>6} {j:>6} {result.levels[i]:>6.2f} {result.levels[j]:>6.2f} "
                     f"{nosp.required_epsilon[i, j]:>12.6g} {nosp.attacker_gain[i, j]:>12.6g}{mark}")
    lines.append(f"prescribed: {nosp.prescribed}")
    if reference is not None:
        lines.append(f"reference prescription from the original study: {reference} (not asserted)")
    return "\n".join(lines)


def parse_levels(text: str) -> tuple[float, ...]:
    """``"0:0.9:0.1"`` (inclusive range) or ``"0,0.25,0.5"``."""
    text = text.strip()
    try:
        if ":" in text:
            start, stop, step = (float(x) for x in text.split(":"))
            if step <= 0:
                raise ValueError
            count = int(round((stop - start) / step)) + 1
            return tuple(round(start + k * step, 12) for k in range(count))
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise SpecError(f"cannot parse levels {text!r}") from None

