"""Decision rules for games with several users.

Two questions are answered from supplied reward sequences (undiscounted
sums over a window of states):

* should a group of users coordinate? Only if every member strictly gains
  over their solo-best play.
* should the administrator treat concurrent users as one adversary? Only if
  the summed reward of the collective response strictly beats the sum of
  the per-game responses.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

from .errors import ContractError, SpecError


@dataclass(frozen=True)
class RewardTrajectory:
    """One user's rewards over a window, under solo-best and cooperative play."""

    player: str
    solo: tuple[float, ...]
    cooperative: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "solo", tuple(float(x) for x in self.solo))
        object.__setattr__(self, "cooperative", tuple(float(x) for x in self.cooperative))
        if len(self.solo) != len(self.cooperative):
            raise ContractError(
                f"{self.player}: solo window has {len(self.solo)} states, "
                f"cooperative window has {len(self.cooperative)}")

    @property
    def margin(self) -> float:
        return math.fsum(self.cooperative) - math.fsum(self.solo)


def should_cooperate(trajs: Sequence[RewardTrajectory]) -> tuple[bool, dict[str, float]]:
    """True iff every user strictly gains from cooperating.

    Returns the decision and the per-user margins ``sum(co) - sum(solo)``.
    """
    if len(trajs) < 2:
        raise ContractError("cooperation needs at least two users")
    lengths = {len(t.solo) for t in trajs}
    if len(lengths) != 1:
        raise ContractError(f"users cover different window lengths: {sorted(lengths)}")
    margins = {t.player: t.margin for t in trajs}
    if len(margins) != len(trajs):
        raise ContractError("duplicate player names")
    return all(m > 0 for m in margins.values()), margins


def should_respond_collectively(individual: Sequence[float],
                                common: Sequence[float]) -> tuple[bool, float]:
    """True iff the summed collective reward strictly exceeds the per-game sum.

    ``individual[g]`` is the administrator's reward sum in game ``g`` when
    each user is answered separately, ``common[g]`` the sum under a single
    response to all users.
    """
    if not individual or not common:
        raise ContractError("reward sums must be non-empty")
    if len(individual) != len(common):
        raise ContractError(f"{len(individual)} individual sums vs {len(common)} common sums")
    if len(individual) < 2:
        raise ContractError("a collective response needs at least two concurrent games")
    margin = math.fsum(map(float, common)) - math.fsum(map(float, individual))
    return margin > 0, margin


def read_coop_csv(text: str) -> list[RewardTrajectory]:
    """Parse rows ``player,variant,r1,r2,...`` with variant ``solo`` or ``co``.

    A header line starting with ``player`` and ``#`` comment lines are skipped.
    """
    solo: dict[str, tuple[float, ...]] = {}
    coop: dict[str, tuple[float, ...]] = {}
    order: list[str] = []
    for lineno, row in enumerate(csv.reader(text.splitlines()), start=1):
        if not row or not "".join(row).strip() or row[0].startswith("#"):
            continue
        if lineno == 1 and row[0].strip().lower() == "player":
            continue
        if len(row) < 3:
            raise SpecError("expected player, variant and at least one reward", f"line {lineno}")
        name, variant = row[0].strip(), row[1].strip().lower()
        try:
            values = tuple(float(x) for x in row[2:] if x.strip())
        except ValueError:
            raise SpecError("malformed reward", f"line {lineno}") from None
        if variant in ("solo", "max"):
            table = solo
        elif variant in ("co", "coop", "cooperative"):
            table = coop
        else:
            raise SpecError(f"unknown variant {row[1]!r} (use solo or co)", f"line {lineno}")
        if name in table:
            raise SpecError(f"duplicate {variant} row for {name}", f"line {lineno}")
        table[name] = values
        if name not in order:
            order.append(name)
    for name in order:
        if name not in solo or name not in coop:
            raise SpecError(f"{name} needs both a solo and a co row")
    return [RewardTrajectory(name, solo[name], coop[name]) for name in order]


def read_collective_csv(text: str) -> tuple[list[float], list[float]]:
    """Parse rows ``game,individual,common`` (header optional)."""
    individual, common = [], []
    for lineno, row in enumerate(csv.reader(text.splitlines()), start=1):
        if not row or not "".join(row).strip() or row[0].startswith("#"):
            continue
        if lineno == 1 and row[0].strip().lower() == "game":
            continue
        if len(row) != 3:
            raise SpecError("expected game, individual, common", f"line {lineno}")
        try:
            individual.append(float(row[1]))
            common.append(float(row[2]))
        except ValueError:
            raise SpecError("malformed reward sum", f"line {lineno}") from None
    return individual, common
