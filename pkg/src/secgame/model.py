"""Game tuple, information sets and the disallowed-action substitution rule.

A :class:`GameSpec` holds everything needed to play a two-player stochastic
game with imperfect state perception: states, the per-player sensor error
rows, per-state action sets, transitions and rewards keyed by
``(state, admin action id, user action id)``, the reward Gram matrix and
the discount factor.

Specs are read from and written to a JSON document (see :func:`load_spec`).
Structural problems (bad JSON, unknown keys, references to undefined
states or actions) raise :class:`~secgame.errors.SpecError`; semantic
problems (rows not summing to one, missing table entries, discount out of
range) are collected by :func:`validate_spec` instead.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import Any, Iterator, Mapping

import numpy as np

from .errors import ContractError, NotFoundError, SpecError
from .rewards import RewardVector, gram_problems

ADMIN = 0
USER = 1
PLAYER_NAMES = ("administrator", "user")
TAGS = ("normal", "exit", "escalate", "aggressive", "defensive", "judge")

#: Rows within this distance of summing to one are renormalized silently.
SUM_TOL = 1e-9

Key = tuple  # (state index, admin action id, user action id)


@dataclass(frozen=True)
class ActionDef:
    id: str
    label: str
    owner: int
    home_state: int
    tag: str
    attempt_cost: float = 0.0


@dataclass(frozen=True)
class Contest:
    """Marks a transition entry where an aggressive action meets its counter.

    The aggressor reaches ``success_state`` with the skill-dependent success
    probability; the rest of the mass stays on the current state.
    """

    aggressor: int
    success_state: int


@dataclass(frozen=True)
class GameSpec:
    name: str
    states: tuple[str, ...]
    players: tuple[str, ...]
    actions: tuple[ActionDef, ...]
    error_model: tuple[tuple[tuple[float, ...], ...], ...]
    transitions: Mapping[Key, tuple[float, ...]]
    rewards: Mapping[Key, tuple[RewardVector, RewardVector]]
    gram: tuple[tuple[float, ...], ...]
    discount: float
    start_state: int
    absorbing: frozenset = frozenset()
    contests: Mapping[Key, Contest] = field(default_factory=dict)
    notes: tuple[str, ...] = ()

    @property
    def n_states(self) -> int:
        return len(self.states)

    @cached_property
    def _action_index(self) -> dict[str, ActionDef]:
        return {a.id: a for a in self.actions}

    @cached_property
    def _allowed(self) -> dict[tuple[int, int], tuple[ActionDef, ...]]:
        table: dict[tuple[int, int], list[ActionDef]] = {}
        for a in self.actions:
            table.setdefault((a.owner, a.home_state), []).append(a)
        return {k: tuple(v) for k, v in table.items()}

    def action(self, action_id: str) -> ActionDef:
        try:
            return self._action_index[action_id]
        except KeyError:
            raise NotFoundError(f"unknown action {action_id!r}") from None

    def state_index(self, label: str | int) -> int:
        if isinstance(label, (int, np.integer)):
            self._check_state(int(label))
            return int(label)
        try:
            return self.states.index(label)
        except ValueError:
            raise NotFoundError(f"unknown state {label!r}") from None

    def allowed(self, player: int, state: int) -> tuple[ActionDef, ...]:
        """The action set ``A^k_ξ`` in declaration order."""
        self._check_player(player)
        self._check_state(state)
        return self._allowed.get((player, state), ())

    def normal_action(self, player: int, state: int) -> ActionDef:
        for a in self.allowed(player, state):
            if a.tag == "normal":
                return a
        raise NotFoundError(
            f"no normal action for {self.players[player]} at {self.states[state]}")

    def error_row(self, player: int, state: int) -> tuple[float, ...]:
        self._check_player(player)
        self._check_state(state)
        return self.error_model[player][state]

    def _check_player(self, player: int) -> None:
        if not 0 <= player < len(self.players):
            raise NotFoundError(f"unknown player {player!r}")

    def _check_state(self, state: int) -> None:
        if not 0 <= state < len(self.states):
            raise NotFoundError(f"unknown state {state!r}")


# --------------------------------------------------------------------------
# information sets


def information_set(spec: GameSpec, player: int, state: int) -> frozenset[int]:
    """States the player may believe current when ``state`` is true."""
    row = spec.error_row(player, state)
    members = {i for i, p in enumerate(row) if p > 0.0}
    members.add(state)
    return frozenset(members)


def extended_action_set(spec: GameSpec, player: int, state: int) -> tuple[ActionDef, ...]:
    """Union of the allowed sets over the information set.

    Ordered by state index, then by the in-state declaration order.
    """
    out: list[ActionDef] = []
    for s in sorted(information_set(spec, player, state)):
        out.extend(spec.allowed(player, s))
    return tuple(out)


def effective_action(spec: GameSpec, player: int, true_state: int,
                     chosen: ActionDef | str) -> ActionDef:
    """Action that actually drives the transition at ``true_state``.

    An action attempted outside the true state's allowed set behaves like the
    state's normal operation.
    """
    if isinstance(chosen, str):
        chosen = spec.action(chosen)
    if chosen.owner != player or chosen not in extended_action_set(spec, player, true_state):
        raise ContractError(
            f"{chosen.id} is not in the extended action set of "
            f"{spec.players[player]} at {spec.states[true_state]}")
    if chosen.home_state == true_state:
        return chosen
    return spec.normal_action(player, true_state)


def sensor_error(spec: GameSpec, player: int, state: int) -> float:
    """Probability of perceiving any state other than the true one."""
    return 1.0 - spec.error_row(player, state)[state]


# --------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Violation:
    location: str
    message: str

    def __str__(self):
        return f"{self.location}: {self.message}"


@dataclass
class ValidationReport:
    """Outcome of :func:`validate_spec`.

    Iterating (or ``len``) covers violations only; an empty report means the
    spec is valid. ``spec`` is the input with near-unit rows renormalized.
    """

    violations: list[Violation]
    warnings: list[str]
    spec: GameSpec

    def __iter__(self) -> Iterator[Violation]:
        return iter(self.violations)

    def __len__(self) -> int:
        return len(self.violations)

    @property
    def ok(self) -> bool:
        return not self.violations


def _check_distribution(row, where, violations, warnings, positive_at=None):
    """Return the (possibly renormalized) row, recording problems."""
    arr = np.asarray(row, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        violations.append(Violation(where, "probabilities must be finite and non-negative"))
        return tuple(row)
    total = math.fsum(arr)
    if abs(total - 1.0) > SUM_TOL:
        violations.append(Violation(where, f"probabilities sum to {total!r}, not 1"))
        return tuple(row)
    if positive_at is not None and arr[positive_at] <= 0:
        violations.append(Violation(where, "true state must have positive probability"))
    if total != 1.0:
        warnings.append(f"{where}: renormalized row summing to {total!r}")
        return tuple(float(x) for x in arr / total)
    return tuple(float(x) for x in arr)


def validate_spec(spec: GameSpec) -> ValidationReport:
    violations: list[Violation] = []
    warnings: list[str] = []
    n = spec.n_states

    if n < 1:
        violations.append(Violation("states", "at least one state is required"))
    if len(spec.players) != 2:
        violations.append(Violation(
            "players", "exactly one administrator and one user are supported"))
    if not 0.0 < spec.discount < 1.0:
        violations.append(Violation("discount", "discount out of range"))
    if not 0 <= spec.start_state < max(n, 1):
        violations.append(Violation("start_state", "unknown start state"))
    for problem in gram_problems(spec.gram):
        violations.append(Violation("gram", problem))

    for a in spec.actions:
        where = f"actions.{a.id}"
        if a.tag not in TAGS:
            violations.append(Violation(where, f"unknown tag {a.tag!r}"))
        if not (math.isfinite(a.attempt_cost) and a.attempt_cost <= 0):
            violations.append(Violation(where, "attempt_cost must be finite and <= 0"))
    for k in range(len(spec.players)):
        for s in range(n):
            normals = [a for a in spec._allowed.get((k, s), ()) if a.tag == "normal"]
            if len(normals) != 1:
                violations.append(Violation(
                    f"actions[{spec.players[k]}@{spec.states[s]}]",
                    f"expected exactly one normal action, found {len(normals)}"))

    error_model = []
    for k, rows in enumerate(spec.error_model):
        fixed = []
        if len(rows) != n:
            violations.append(Violation(f"error_model.{spec.players[k]}",
                                        f"expected {n} rows, got {len(rows)}"))
        for s, row in enumerate(rows):
            where = f"error_model.{spec.players[k]}.{spec.states[s]}"
            if len(row) != n:
                violations.append(Violation(where, f"expected {n} entries"))
                fixed.append(row)
                continue
            fixed.append(_check_distribution(row, where, violations, warnings, positive_at=s))
        error_model.append(tuple(fixed))

    def key_name(key):
        s, a, u = key
        return f"[{spec.states[s]}, {a}, {u}]"

    def check_key(key, table):
        s, a_id, u_id = key
        ok = True
        for player, aid in ((0, a_id), (1, u_id)):
            act = spec._action_index.get(aid)
            if act is None or act.owner != player or act.home_state != s:
                violations.append(Violation(
                    f"{table}{key_name(key)}",
                    f"{aid} is not allowed for {spec.players[player]} at {spec.states[s]}"))
                ok = False
        return ok

    expected = {
        (s, a.id, u.id)
        for s in range(n)
        for a in spec._allowed.get((0, s), ())
        for u in spec._allowed.get((1, s), ())
    }

    transitions = {}
    for key, row in spec.transitions.items():
        check_key(key, "transitions")
        if len(row) != n:
            violations.append(Violation(f"transitions{key_name(key)}", f"expected {n} entries"))
            transitions[key] = row
            continue
        transitions[key] = _check_distribution(
            row, f"transitions{key_name(key)}", violations, warnings)
    for key in sorted(expected - set(spec.transitions)):
        violations.append(Violation(f"transitions{key_name(key)}", "missing entry"))

    for key, (ra, ru) in spec.rewards.items():
        check_key(key, "rewards")
        if not (RewardVector(*ra).is_finite() and RewardVector(*ru).is_finite()):
            violations.append(Violation(f"rewards{key_name(key)}", "non-finite component"))
    for key in sorted(expected - set(spec.rewards)):
        violations.append(Violation(f"rewards{key_name(key)}", "missing entry"))

    for key, contest in spec.contests.items():
        if key not in spec.transitions:
            violations.append(Violation(f"contests{key_name(key)}", "no matching transition"))
        if not 0 <= contest.success_state < n:
            violations.append(Violation(f"contests{key_name(key)}", "unknown success state"))
    for s in spec.absorbing:
        if not 0 <= s < n:
            violations.append(Violation("absorbing", f"unknown state {s!r}"))

    normalized = replace(spec, error_model=tuple(error_model), transitions=transitions)
    return ValidationReport(violations, warnings, normalized)


# --------------------------------------------------------------------------
# JSON serialization

_GAME_KEYS = {"name", "notes", "states", "players", "start_state", "discount",
              "absorbing", "gram", "actions", "error_model", "transitions", "rewards"}
_ACTION_KEYS = {"id", "label", "owner", "state", "tag", "attempt_cost"}
_TRANSITION_KEYS = {"state", "admin", "user", "next", "contest"}
_REWARD_KEYS = {"state", "admin", "user", "administrator", "user_reward"}


def read_document(path) -> dict:
    """Parse a JSON configuration file, mapping decode errors to SpecError."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise SpecError(str(exc), str(path)) from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(exc.msg, f"{path}:{exc.lineno}:{exc.colno}") from None
    if not isinstance(doc, dict):
        raise SpecError("top level must be an object", str(path))
    return doc


def check_keys(obj: Any, allowed: set[str], where: str, required=()) -> None:
    if not isinstance(obj, dict):
        raise SpecError("expected an object", where)
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise SpecError(f"unknown key(s) {', '.join(unknown)}", where)
    missing = [k for k in required if k not in obj]
    if missing:
        raise SpecError(f"missing key(s) {', '.join(missing)}", where)


def _number(value, where) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SpecError(f"expected a number, got {value!r}", where)
    return float(value)


def spec_from_dict(doc: Mapping[str, Any], where: str = "game") -> GameSpec:
    check_keys(doc, _GAME_KEYS, where,
               required=("states", "players", "start_state", "discount", "actions",
                         "error_model", "transitions", "rewards"))
    states = tuple(doc["states"])
    if len(set(states)) != len(states) or not all(isinstance(s, str) for s in states):
        raise SpecError("state labels must be unique strings", f"{where}.states")
    players = tuple(doc["players"])
    state_of = {s: i for i, s in enumerate(states)}
    player_of = {p: i for i, p in enumerate(players)}

    def state_ref(label, loc):
        if label not in state_of:
            raise SpecError(f"unknown state {label!r}", loc)
        return state_of[label]

    actions = []
    seen = set()
    for i, item in enumerate(doc["actions"]):
        loc = f"{where}.actions[{i}]"
        check_keys(item, _ACTION_KEYS, loc, required=("id", "owner", "state", "tag"))
        if item["id"] in seen:
            raise SpecError(f"duplicate action id {item['id']!r}", loc)
        seen.add(item["id"])
        if item["owner"] not in player_of:
            raise SpecError(f"unknown player {item['owner']!r}", loc)
        actions.append(ActionDef(
            id=item["id"],
            label=item.get("label", item["id"]),
            owner=player_of[item["owner"]],
            home_state=state_ref(item["state"], loc),
            tag=item["tag"],
            attempt_cost=_number(item.get("attempt_cost", 0.0), loc),
        ))
    owner_of = {a.id: a.owner for a in actions}

    def dense(mapping, loc):
        if not isinstance(mapping, dict):
            raise SpecError("expected an object of state -> probability", loc)
        row = [0.0] * len(states)
        for label, p in mapping.items():
            row[state_ref(label, loc)] = _number(p, f"{loc}.{label}")
        return tuple(row)

    em = doc["error_model"]
    check_keys(em, set(players), f"{where}.error_model", required=players)
    error_model = []
    for p in players:
        rows_doc = em[p]
        check_keys(rows_doc, set(states), f"{where}.error_model.{p}", required=states)
        error_model.append(tuple(dense(rows_doc[s], f"{where}.error_model.{p}.{s}")
                                 for s in states))

    def action_key(item, loc):
        s = state_ref(item["state"], loc)
        for role, idx in (("admin", 0), ("user", 1)):
            if owner_of.get(item[role]) != idx:
                raise SpecError(f"{item[role]!r} is not a {players[idx]} action", loc)
        return (s, item["admin"], item["user"])

    transitions = {}
    contests = {}
    for i, item in enumerate(doc["transitions"]):
        loc = f"{where}.transitions[{i}]"
        check_keys(item, _TRANSITION_KEYS, loc, required=("state", "admin", "user", "next"))
        key = action_key(item, loc)
        if key in transitions:
            raise SpecError("duplicate transition entry", loc)
        transitions[key] = dense(item["next"], f"{loc}.next")
        if "contest" in item:
            c = item["contest"]
            check_keys(c, {"aggressor", "success"}, f"{loc}.contest",
                       required=("aggressor", "success"))
            if c["aggressor"] not in player_of:
                raise SpecError(f"unknown player {c['aggressor']!r}", f"{loc}.contest")
            contests[key] = Contest(player_of[c["aggressor"]],
                                    state_ref(c["success"], f"{loc}.contest"))

    def vector(v, loc):
        if not isinstance(v, list) or len(v) != 3:
            raise SpecError("reward must be [cost, desirability, leak]", loc)
        return RewardVector(*(_number(x, loc) for x in v))

    rewards = {}
    for i, item in enumerate(doc["rewards"]):
        loc = f"{where}.rewards[{i}]"
        check_keys(item, _REWARD_KEYS, loc,
                   required=("state", "admin", "user", "administrator", "user_reward"))
        key = action_key(item, loc)
        if key in rewards:
            raise SpecError("duplicate reward entry", loc)
        rewards[key] = (vector(item["administrator"], f"{loc}.administrator"),
                        vector(item["user_reward"], f"{loc}.user_reward"))

    gram = doc.get("gram", [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    try:
        gram = tuple(tuple(_number(x, f"{where}.gram") for x in row) for row in gram)
    except TypeError:
        raise SpecError("gram must be a 3x3 array", f"{where}.gram") from None

    return GameSpec(
        name=doc.get("name", ""),
        states=states,
        players=players,
        actions=tuple(actions),
        error_model=tuple(error_model),
        transitions=transitions,
        rewards=rewards,
        gram=gram,
        discount=_number(doc["discount"], f"{where}.discount"),
        start_state=state_ref(doc["start_state"], f"{where}.start_state"),
        absorbing=frozenset(state_ref(s, f"{where}.absorbing") for s in doc.get("absorbing", [])),
        contests=contests,
        notes=tuple(doc.get("notes", ())),
    )


def spec_to_dict(spec: GameSpec) -> dict:
    st = spec.states

    def sparse(row):
        return {st[i]: p for i, p in enumerate(row) if p != 0.0}

    transitions = []
    for key, row in spec.transitions.items():
        s, a, u = key
        item = {"state": st[s], "admin": a, "user": u, "next": sparse(row)}
        if key in spec.contests:
            c = spec.contests[key]
            item["contest"] = {"aggressor": spec.players[c.aggressor],
                               "success": st[c.success_state]}
        transitions.append(item)
    rewards = [
        {"state": st[s], "admin": a, "user": u,
         "administrator": list(ra), "user_reward": list(ru)}
        for (s, a, u), (ra, ru) in spec.rewards.items()
    ]
    doc = {
        "name": spec.name,
        "notes": list(spec.notes),
        "states": list(st),
        "players": list(spec.players),
        "start_state": st[spec.start_state],
        "discount": spec.discount,
        "absorbing": [st[s] for s in sorted(spec.absorbing)],
        "gram": [list(r) for r in spec.gram],
        "actions": [
            {"id": a.id, "label": a.label, "owner": spec.players[a.owner],
             "state": st[a.home_state], "tag": a.tag, "attempt_cost": a.attempt_cost}
            for a in spec.actions
        ],
        "error_model": {
            p: {st[s]: sparse(row) for s, row in enumerate(spec.error_model[k])}
            for k, p in enumerate(spec.players)
        },
        "transitions": transitions,
        "rewards": rewards,
    }
    return doc


def load_spec(path) -> GameSpec:
    """Read a game file. The game may sit at the top level or under ``game``."""
    doc = read_document(path)
    if "game" in doc:
        check_keys(doc, {"game", "signatures", "reading", "ploy"}, str(path))
        return spec_from_dict(doc["game"], "game")
    return spec_from_dict(doc, str(Path(path).name))


def dump_spec(spec: GameSpec) -> str:
    return json.dumps(spec_to_dict(spec), indent=1, ensure_ascii=False) + "\n"


def save_spec(spec: GameSpec, path) -> None:
    Path(path).write_text(dump_spec(spec), encoding="utf-8")
