"""Rewards as vectors over the cost / desirability / information-leak axes.

A reward is a point in a three dimensional space. How strongly the axes
couple is described by a Gram matrix of their inner products; the scalar
payoff used when comparing strategies is ``1ᵀ G v``.
"""

from __future__ import annotations

import math
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ContractError

#: Symbolic reward levels used throughout the five-state fixture.
REWARD_SCALE = (-1000.0, -100.0, -10.0, 0.0, 10.0, 100.0, 1000.0)


class RewardVector(NamedTuple):
    cost: float = 0.0
    desirability: float = 0.0
    leak: float = 0.0

    def __add__(self, other):
        return RewardVector(*(a + b for a, b in zip(self, other)))

    def is_finite(self) -> bool:
        return all(math.isfinite(c) for c in self)


ZERO = RewardVector()


def gram_matrix(values: Sequence[Sequence[float]] | None = None) -> np.ndarray:
    """Validate and return a 3x3 Gram matrix (identity when ``values`` is None).

    Raises
    ------
    ContractError
        If the matrix is not 3x3, not symmetric, has a non-unit diagonal or
        an off-diagonal entry outside ``[0, 1]``.
    """
    if values is None:
        return np.eye(3)
    g = np.asarray(values, dtype=float)
    problems = gram_problems(g)
    if problems:
        raise ContractError("invalid Gram matrix: " + "; ".join(problems))
    return g


def gram_problems(g) -> list[str]:
    g = np.asarray(g, dtype=float)
    if g.shape != (3, 3):
        return [f"expected shape (3, 3), got {g.shape}"]
    problems = []
    if not np.all(np.isfinite(g)):
        problems.append("non-finite entries")
    if not np.array_equal(g, g.T):
        problems.append("not symmetric")
    if not np.all(np.diag(g) == 1.0):
        problems.append("diagonal must be 1")
    off = g[~np.eye(3, dtype=bool)]
    if np.any(off < 0.0) or np.any(off > 1.0):
        problems.append("off-diagonal entries must lie in [0, 1]")
    return problems


def scalar_reward(v: Sequence[float], gram=None) -> float:
    """Collapse a reward vector to a scalar via ``1ᵀ G v``.

    Every component is weighted by the column sum of ``G``; with the
    identity this is the plain component sum.
    """
    g = gram_matrix(gram)
    weights = g.sum(axis=0)
    return float(math.fsum(w * c for w, c in zip(weights, v)))


def attempt_penalty(action) -> RewardVector:
    """Cost charged for attempting ``action`` (cost axis only)."""
    return RewardVector(float(action.attempt_cost), 0.0, 0.0)
