"""Seeded Monte Carlo execution of the game.

Each step, every player samples the state they *perceive* from their error
row, samples an action from their mixed strategy at that perceived state,
and the action is mapped to the one that actually takes effect at the true
state (see :func:`secgame.model.effective_action`). The next state is drawn
from the transition row of the effective pair. Rewards are those of the
effective pair plus the attempt cost of any substituted action.

Seeds
-----
Run ``r`` of the profile with key ``(i, j)`` uses a PCG64 generator seeded
with ``numpy.random.SeedSequence([base_seed, i, j, r])``. The derived stream
depends on nothing else, so serial and parallel evaluation agree bit for
bit. Each step consumes exactly five uniforms in a fixed order: admin
perception, admin action, user perception, user action, next state.
"""

from __future__ import annotations

import csv
import math
from bisect import bisect_right
from itertools import accumulate
from dataclasses import dataclass, field
from typing import IO, Iterable, Mapping, Sequence

import numpy as np

from .errors import ContractError
from .model import ADMIN, USER, GameSpec, effective_action, information_set
from .rewards import ZERO, RewardVector, attempt_penalty, gram_matrix, scalar_reward

GENERATOR = "PCG64"
DEFAULT_THETA = 1e-3
DEFAULT_MAX_STEPS = 200


@dataclass(frozen=True)
class EngineConfig:
    theta: float = DEFAULT_THETA
    max_steps: int = DEFAULT_MAX_STEPS
    base_seed: int = 0
    discount: float | None = None  # None: use the game's own discount

    def __post_init__(self):
        if not 0.0 < self.theta <= 1.0:
            raise ContractError("theta must lie in (0, 1]")
        if self.max_steps < 1:
            raise ContractError("max_steps must be >= 1")
        if not 0 <= self.base_seed < 2**64:
            raise ContractError("base_seed must be a non-negative 64-bit integer")

    def beta(self, spec: GameSpec) -> float:
        return spec.discount if self.discount is None else self.discount


@dataclass(frozen=True)
class StrategyProfile:
    """Per-player, per-state mixed strategies over the allowed action sets.

    ``strategies[k][s]`` lists probabilities aligned with
    ``spec.allowed(k, s)``. ``key`` identifies the profile in seed
    derivation (sweeps use the grid indices).
    """

    strategies: tuple[Mapping[int, tuple[float, ...]], Mapping[int, tuple[float, ...]]]
    key: tuple[int, int] = (0, 0)
    levels: tuple[float, float] | None = None

    def strategy(self, player: int, state: int) -> tuple[float, ...]:
        try:
            return self.strategies[player][state]
        except (KeyError, IndexError):
            raise ContractError(f"no strategy for player {player} at state {state}") from None

    @classmethod
    def from_actions(cls, spec: GameSpec, admin: Mapping, user: Mapping, key=(0, 0)):
        """Build from ``{state: {action_id: probability}}`` maps.

        States may be given by label or index; unlisted actions get zero and
        a bare action id means a pure strategy.
        """
        out = []
        for player, table in ((ADMIN, admin), (USER, user)):
            per_state = {}
            for state, dist in table.items():
                s = spec.state_index(state)
                if isinstance(dist, str):
                    dist = {dist: 1.0}
                ids = [a.id for a in spec.allowed(player, s)]
                unknown = set(dist) - set(ids)
                if unknown:
                    raise ContractError(f"actions {sorted(unknown)} not allowed at state {s}")
                per_state[s] = tuple(float(dist.get(i, 0.0)) for i in ids)
            out.append(per_state)
        return cls((out[0], out[1]), key=key)


@dataclass(frozen=True)
class TrajectoryStep:
    t: int
    true_state: int
    perceived: tuple[int, int]
    chosen: tuple[str, str]
    effective: tuple[str, str]
    rewards: tuple[RewardVector, RewardVector]
    scalars: tuple[float, float]
    weight: float


@dataclass
class RunResult:
    returns: tuple[float, float]
    trajectory: list[TrajectoryStep]
    seed: tuple[int, ...]
    generator: str
    termination: str  # "horizon", "absorbed" or "max_steps"
    steps: int


@dataclass
class RewardStats:
    mean: float
    sigma: float
    n: int
    returns: np.ndarray = field(repr=False)

    @classmethod
    def from_returns(cls, values: Sequence[float]) -> "RewardStats":
        arr = np.asarray(values, dtype=float)
        if arr.size < 1:
            raise ContractError("at least one run is required")
        if np.all(arr == arr[0]):
            return cls(float(arr[0]), 0.0, int(arr.size), arr)
        return cls(float(arr.mean()), float(arr.std()), int(arr.size), arr)


def horizon(beta: float, theta: float) -> int:
    """Smallest ``h >= 0`` with ``beta**h < theta``."""
    if not 0.0 < beta < 1.0:
        raise ContractError("beta must lie in (0, 1)")
    if not 0.0 < theta <= 1.0:
        raise ContractError("theta must lie in (0, 1]")
    h = max(0, math.ceil(math.log(theta) / math.log(beta)))
    while beta**h >= theta:
        h += 1
    while h > 0 and beta ** (h - 1) < theta:
        h -= 1
    return h


def derive_seed(base_seed: int, key: tuple[int, int], run: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(base_seed), int(key[0]), int(key[1]), int(run)])


def _cumulative(probs) -> list[float]:
    # plain Python: these rows are short and built many times per simulator
    try:
        p = [float(x) for x in probs]
    except (TypeError, ValueError):
        raise ContractError(f"invalid distribution {probs!r}") from None
    if not p or any(not (x >= 0) or x == math.inf for x in p):
        raise ContractError(f"invalid distribution {probs!r}")
    total = math.fsum(p)
    if abs(total - 1.0) > 1e-9:
        raise ContractError(f"distribution sums to {total!r}")
    cum = [c / total for c in accumulate(p)]
    last = max(i for i, x in enumerate(p) if x > 0)
    cum[last:] = [1.0] * (len(p) - last)
    return cum


def _pick(cum: list[float], u: float) -> int:
    return bisect_right(cum, u)


class Simulator:
    """A (spec, profile) pair compiled into index tables for fast sampling."""

    def __init__(self, spec: GameSpec, profile: StrategyProfile, config: EngineConfig | None = None):
        self.spec = spec
        self.profile = profile
        self.config = config or EngineConfig()
        n = spec.n_states
        g = gram_matrix(spec.gram)
        self.beta = self.config.beta(spec)
        self.horizon = horizon(self.beta, self.config.theta)
        self.n_steps = min(self.horizon, self.config.max_steps)
        self.weights = [self.beta**t for t in range(self.n_steps)]

        self.allowed = [[spec.allowed(k, s) for s in range(n)] for k in (ADMIN, USER)]
        self.perceive = [[_cumulative(spec.error_row(k, s)) for s in range(n)] for k in (ADMIN, USER)]
        self.choose = []
        for k in (ADMIN, USER):
            rows = []
            for s in range(n):
                probs = profile.strategy(k, s)
                if len(probs) != len(self.allowed[k][s]):
                    raise ContractError(
                        f"strategy for {spec.players[k]} at {spec.states[s]} has {len(probs)} "
                        f"entries, expected {len(self.allowed[k][s])}")
                rows.append(_cumulative(probs))
            self.choose.append(rows)

        # effect[k][true][perceived][i] -> (effective index at true, penalty vector)
        self.effect = []
        for k in (ADMIN, USER):
            per_true = []
            for s in range(n):
                index = {a.id: i for i, a in enumerate(self.allowed[k][s])}
                members = information_set(spec, k, s)
                per_p = []
                for p in range(n):
                    if p not in members:
                        per_p.append(None)
                        continue
                    entries = []
                    for a in self.allowed[k][p]:
                        eff = effective_action(spec, k, s, a)
                        pen = ZERO if eff.id == a.id else attempt_penalty(a)
                        entries.append((index[eff.id], pen))
                    per_p.append(entries)
                per_true.append(per_p)
            self.effect.append(per_true)

        self.trans = []
        self.reward_vec = []
        for s in range(n):
            t_rows, r_rows = [], []
            for a in self.allowed[ADMIN][s]:
                t_cells, r_cells = [], []
                for u in self.allowed[USER][s]:
                    key = (s, a.id, u.id)
                    t_cells.append(_cumulative(spec.transitions[key]))
                    r_cells.append(spec.rewards[key])
                t_rows.append(t_cells)
                r_rows.append(r_cells)
            self.trans.append(t_rows)
            self.reward_vec.append(r_rows)
        self._gram = g
        self._scalar_cache: dict[RewardVector, float] = {}

    def scalar(self, v: RewardVector) -> float:
        try:
            return self._scalar_cache[v]
        except KeyError:
            value = self._scalar_cache[v] = scalar_reward(v, self._gram)
            return value

    def step(self, state: int, draws: Sequence[float]):
        """Advance one step from ``state`` using five uniforms.

        Returns ``(next_state, (admin_scalar, user_scalar), info)`` where
        ``info`` carries perceived states, action ids and reward vectors.
        """
        perceived, chosen, effective, penalties = [], [], [], []
        for k in (ADMIN, USER):
            p = _pick(self.perceive[k][state], draws[2 * k])
            i = _pick(self.choose[k][p], draws[2 * k + 1])
            e, pen = self.effect[k][state][p][i]
            perceived.append(p)
            chosen.append(self.allowed[k][p][i].id)
            effective.append(e)
            penalties.append(pen)
        ea, eu = effective
        ra, ru = self.reward_vec[state][ea][eu]
        vec = (ra + penalties[0], ru + penalties[1])
        scalars = (self.scalar(ra) + self.scalar(penalties[0]),
                   self.scalar(ru) + self.scalar(penalties[1]))
        nxt = _pick(self.trans[state][ea][eu], draws[4])
        info = {
            "perceived": tuple(perceived),
            "chosen": tuple(chosen),
            "effective": (self.allowed[ADMIN][state][ea].id, self.allowed[USER][state][eu].id),
            "rewards": vec,
        }
        return nxt, scalars, info

    def run(self, seed: np.random.SeedSequence, record: bool = False) -> RunResult:
        rng = np.random.Generator(np.random.PCG64(seed))
        draws = rng.random((self.n_steps, 5)).tolist()
        state = self.spec.start_state
        absorbing = self.spec.absorbing
        ret_a = ret_u = 0.0
        trajectory: list[TrajectoryStep] = []
        termination = "horizon" if self.horizon <= self.config.max_steps else "max_steps"
        steps = 0
        for t in range(self.n_steps):
            nxt, (sa, su), info = self.step(state, draws[t])
            w = self.weights[t]
            ret_a += w * sa
            ret_u += w * su
            steps += 1
            if record:
                trajectory.append(TrajectoryStep(
                    t, state, info["perceived"], info["chosen"], info["effective"],
                    info["rewards"], (sa, su), w))
            state = nxt
            if state in absorbing:
                termination = "absorbed"
                break
        return RunResult((ret_a, ret_u), trajectory, tuple(int(x) for x in seed.entropy),
                         GENERATOR, termination, steps)


def play_step(spec: GameSpec, true_state: int, profile: StrategyProfile,
              rng: np.random.Generator):
    """One step of the game from ``true_state``.

    Returns ``(next_state, (admin_reward, user_reward), TrajectoryStep)``;
    the trajectory step has ``t = 0`` and unit weight.
    """
    sim = Simulator(spec, profile)
    nxt, scalars, info = sim.step(true_state, rng.random(5).tolist())
    step = TrajectoryStep(0, true_state, info["perceived"], info["chosen"],
                          info["effective"], info["rewards"], scalars, 1.0)
    return nxt, scalars, step


def run_game(spec: GameSpec, profile: StrategyProfile, config: EngineConfig | None = None,
             run: int = 0, record: bool = True) -> RunResult:
    """Play one game from the start state, seeded from ``(config.base_seed, profile.key, run)``."""
    config = config or EngineConfig()
    sim = Simulator(spec, profile, config)
    return sim.run(derive_seed(config.base_seed, profile.key, run), record=record)


def evaluate_profile(spec: GameSpec, profile: StrategyProfile, n_runs: int,
                     config: EngineConfig | None = None, record: bool = False):
    """Play ``n_runs`` independent games; returns ``(admin_stats, user_stats, runs)``.

    ``runs`` holds the per-run results (trajectories only when ``record``).
    """
    if n_runs < 1:
        raise ContractError("n_runs must be >= 1")
    config = config or EngineConfig()
    sim = Simulator(spec, profile, config)
    runs = [sim.run(derive_seed(config.base_seed, profile.key, r), record=record)
            for r in range(n_runs)]
    admin = RewardStats.from_returns([r.returns[ADMIN] for r in runs])
    user = RewardStats.from_returns([r.returns[USER] for r in runs])
    return admin, user, runs


TRAJECTORY_HEADER = ["run", "t", "true_state",
                     "admin_perceived", "admin_chosen", "admin_effective",
                     "user_perceived", "user_chosen", "user_effective",
                     "admin_reward", "user_reward", "weight"]


def write_trajectories(spec: GameSpec, runs: Iterable[tuple[str, RunResult]], out: IO[str]) -> None:
    """One CSV row per step; ``runs`` yields ``(run_id, result)`` pairs."""
    w = csv.writer(out, lineterminator="\n")
    w.writerow(TRAJECTORY_HEADER)
    st = spec.states
    for run_id, result in runs:
        for step in result.trajectory:
            w.writerow([run_id, step.t, st[step.true_state],
                        st[step.perceived[0]], step.chosen[0], step.effective[0],
                        st[step.perceived[1]], step.chosen[1], step.effective[1],
                        format(step.scalars[0], ".17g"), format(step.scalars[1], ".17g"),
                        format(step.weight, ".17g")])
