"""Choosing which actions to offer a user engaged in a honeypot.

The administrator keeps a pool of actions with the user's preference
probabilities and one action the user's equilibrium strategy calls for.
Each step it offers a subset; the user only sees the subset, so the
probabilities renormalize over it. A good offer makes the equilibrium
action exactly as likely as the average alternative (gap 0), which means a
user who then takes it reveals their motive rather than their preference
ordering. Among equally good offers, the one with the most entropy leaks
the least about the planner.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Mapping, Sequence

from .errors import ContractError, SpecError
from .model import check_keys, read_document

EXHAUSTIVE_LIMIT = 20
KEY_DIGITS = 12       # gap/entropy ties are compared after rounding
POOL_TOL = 1e-9


@dataclass(frozen=True)
class PloyPool:
    actions: tuple[tuple[str, float], ...]
    nash_action: str

    def __post_init__(self):
        acts = tuple((str(a), float(p)) for a, p in self.actions)
        object.__setattr__(self, "actions", acts)
        ids = [a for a, _ in acts]
        if len(set(ids)) != len(ids):
            raise ContractError("duplicate action ids in pool")
        if any(not (p > 0) or not math.isfinite(p) for _, p in acts):
            raise ContractError("pool probabilities must be positive and finite")
        total = math.fsum(p for _, p in acts)
        if abs(total - 1.0) > POOL_TOL:
            raise ContractError(f"pool probabilities sum to {total:.17g}, not 1")
        if self.nash_action not in ids:
            raise ContractError(f"equilibrium action {self.nash_action!r} is not in the pool")

    @classmethod
    def from_weights(cls, weights: Mapping[str, float], nash_action: str) -> "PloyPool":
        """Normalize arbitrary positive weights into a pool."""
        total = math.fsum(weights.values())
        if not total > 0:
            raise ContractError("weights must have a positive sum")
        return cls(tuple((a, w / total) for a, w in weights.items()), nash_action)

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(a for a, _ in self.actions)

    def prob(self, action: str) -> float:
        return dict(self.actions)[action]

    def __len__(self):
        return len(self.actions)


@dataclass(frozen=True)
class PloyOffer:
    actions: tuple[str, ...]           # in pool preference order
    probabilities: tuple[float, ...]   # renormalized over the offer
    nash_action: str
    gap: float
    entropy: float
    regime: str = "exhaustive"

    @property
    def size(self) -> int:
        return len(self.actions)


@dataclass(frozen=True)
class Assessment:
    confirms_belief: bool
    taken: str
    rank: int | None = None   # preference rank among offered non-equilibrium actions, 1 = most preferred


def sort_pool(pool: PloyPool) -> PloyPool:
    """Descending preference; equal probabilities ordered by id."""
    return PloyPool(tuple(sorted(pool.actions, key=lambda ap: (-ap[1], ap[0]))), pool.nash_action)


def _gap(p_nash: float, total: float, y: int) -> float:
    # |q - (1 - q)/(y - 1)| with q = p_nash/total, simplified to one division
    return abs(p_nash * y - total) / (total * (y - 1))


def _entropy(probs: Sequence[float]) -> float:
    return math.fsum(-q * math.log2(q) for q in probs if q > 0)


def equiprobability_gap(offer: PloyOffer | Sequence[float], nash_index: int = 0) -> float:
    """Distance of the equilibrium action from the mean of the other offered actions.

    Accepts an offer or a bare probability list with the equilibrium action
    at ``nash_index``.
    """
    if isinstance(offer, PloyOffer):
        probs = offer.probabilities
        nash_index = offer.actions.index(offer.nash_action)
    else:
        probs = tuple(float(p) for p in offer)
    y = len(probs)
    if y < 2:
        raise ContractError("an offer needs at least two actions")
    return _gap(probs[nash_index], math.fsum(probs), y)


def offer_entropy(offer: PloyOffer | Sequence[float]) -> float:
    """Shannon entropy in bits, with 0 log 0 = 0."""
    probs = offer.probabilities if isinstance(offer, PloyOffer) else offer
    total = math.fsum(probs)
    return _entropy([p / total for p in probs])


def make_offer(pool: PloyPool, subset: Sequence[str], regime: str = "exhaustive") -> PloyOffer:
    """Offer built from a subset of pool ids (must include the equilibrium action)."""
    pool = sort_pool(pool)
    chosen = set(subset)
    if pool.nash_action not in chosen:
        raise ContractError("the offer must contain the equilibrium action")
    unknown = chosen - set(pool.ids)
    if unknown:
        raise ContractError(f"actions {sorted(unknown)} are not in the pool")
    acts = [(a, p) for a, p in pool.actions if a in chosen]
    if len(acts) < 2:
        raise ContractError("an offer needs at least two actions")
    total = math.fsum(p for _, p in acts)
    probs = tuple(p / total for _, p in acts)
    p_nash = dict(acts)[pool.nash_action]
    return PloyOffer(tuple(a for a, _ in acts), probs, pool.nash_action,
                     _gap(p_nash, total, len(acts)), _entropy(probs), regime)


def _rank_key(gap, entropy, ids):
    return (round(gap, KEY_DIGITS), -round(entropy, KEY_DIGITS), len(ids), tuple(sorted(ids)))


def _score(p_nash, others, ids):
    total = p_nash + math.fsum(others)
    y = len(others) + 1
    probs = [p_nash / total] + [p / total for p in others]
    gap = _gap(p_nash, total, y)
    ent = _entropy(probs)
    return _rank_key(gap, ent, ids)


def select_offer(pool: PloyPool, min_size: int = 2, max_size: int | None = None) -> PloyOffer:
    """Best offer containing the equilibrium action with size in ``[min_size, max_size]``.

    Minimizes the equiprobability gap; ties go to higher entropy, then the
    smaller offer, then the lexicographically smaller sorted id tuple. Pools
    of up to 20 actions are searched exhaustively. Larger pools use a greedy
    search that starts from the equilibrium action and repeatedly adds the
    action giving the best key, keeping the best offer seen at any
    admissible size; the returned offer reports ``regime="greedy"``.
    """
    pool = sort_pool(pool)
    n = len(pool)
    if max_size is None:
        max_size = n
    if not 2 <= min_size <= max_size <= n:
        raise ContractError(f"need 2 <= min_size <= max_size <= {n}, got {min_size}..{max_size}")
    nash = pool.nash_action
    p_nash = pool.prob(nash)
    others = [(a, p) for a, p in pool.actions if a != nash]

    best_key, best_ids = None, None
    if n <= EXHAUSTIVE_LIMIT:
        regime = "exhaustive"
        for size in range(min_size, max_size + 1):
            for combo in combinations(others, size - 1):
                ids = (nash,) + tuple(a for a, _ in combo)
                key = _score(p_nash, [p for _, p in combo], ids)
                if best_key is None or key < best_key:
                    best_key, best_ids = key, ids
    else:
        regime = "greedy"
        current: list[tuple[str, float]] = []
        remaining = list(others)
        while len(current) + 1 < max_size:
            step_key, step_idx = None, None
            for k, cand in enumerate(remaining):
                trial = current + [cand]
                ids = (nash,) + tuple(a for a, _ in trial)
                key = _score(p_nash, [p for _, p in trial], ids)
                if step_key is None or key < step_key:
                    step_key, step_idx = key, k
            current.append(remaining.pop(step_idx))
            if len(current) + 1 >= min_size and (best_key is None or step_key < best_key):
                best_key = step_key
                best_ids = (nash,) + tuple(a for a, _ in current)
    return make_offer(pool, best_ids, regime)


def assess_response(offer: PloyOffer, taken: str) -> Assessment:
    """Did the user's choice confirm the assumed motive?

    Taking the equilibrium action confirms it. Any other action is a
    deviation, reported with its preference rank among the offered
    alternatives as the direction in which the belief should move.
    """
    if taken not in offer.actions:
        raise ContractError(f"{taken!r} was not offered")
    if taken == offer.nash_action:
        return Assessment(True, taken)
    alternatives = sorted(
        ((p, a) for a, p in zip(offer.actions, offer.probabilities) if a != offer.nash_action),
        key=lambda pa: (-pa[0], pa[1]))
    rank = 1 + [a for _, a in alternatives].index(taken)
    return Assessment(False, taken, rank)


_PLOY_KEYS = {"actions", "min_size", "max_size"}
_ENTRY_KEYS = {"id", "probability", "nash"}


def pool_from_dict(doc: Mapping, where: str = "ploy") -> tuple[PloyPool, int, int | None]:
    """Parse a ``ploy`` section: ``{"actions": [{"id", "probability", "nash"?}], ...}``."""
    check_keys(doc, _PLOY_KEYS, where, required=("actions",))
    entries = doc["actions"]
    if not isinstance(entries, list) or not entries:
        raise SpecError("must be a non-empty list", f"{where}.actions")
    actions, nash = [], []
    for k, item in enumerate(entries):
        loc = f"{where}.actions[{k}]"
        check_keys(item, _ENTRY_KEYS, loc, required=("id", "probability"))
        p = item["probability"]
        if isinstance(p, bool) or not isinstance(p, (int, float)):
            raise SpecError("probability must be a number", loc)
        actions.append((str(item["id"]), float(p)))
        if item.get("nash", False) is True:
            nash.append(str(item["id"]))
    if len(nash) != 1:
        raise SpecError(f"exactly one action must be flagged nash, found {len(nash)}", where)
    try:
        pool = PloyPool(tuple(actions), nash[0])
    except ContractError as exc:
        raise SpecError(str(exc), where) from None
    min_size = doc.get("min_size", 2)
    max_size = doc.get("max_size")
    for name, v in (("min_size", min_size), ("max_size", max_size)):
        if v is not None and (isinstance(v, bool) or not isinstance(v, int)):
            raise SpecError("must be an integer", f"{where}.{name}")
    return pool, min_size, max_size


def load_pool(path) -> tuple[PloyPool, int, int | None]:
    """Read a pool from a JSON file (top level or a ``ploy`` section)."""
    doc = read_document(path)
    if isinstance(doc, dict) and "ploy" in doc:
        check_keys(doc, {"ploy", "game", "signatures", "reading"}, str(path))
        doc = doc["ploy"]
    return pool_from_dict(doc)
