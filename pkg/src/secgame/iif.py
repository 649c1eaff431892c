"""Occurrence ratios, perceived ratios and the imperfect-information matrix.

The long-run share of time a chain spends in each state is the start row of
the Cesàro average ``(P + P^2 + ... + P^m) / m``. A sensor that reports state
``i`` while the truth is ``j`` with probability ``E[j, i]`` sees the shares
``r' = r E``. The matrix ``z[i, j] = E[j, i] r[j] / r'[i]`` is the posterior
over true states given a perceived one; applying it to a profile gives the
strategy the player is effectively playing at each perceived state.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .engine import StrategyProfile
from .errors import ContractError, ConvergenceError
from .model import ADMIN, USER, GameSpec, effective_action

DEFAULT_TOL = 1e-9
DEFAULT_MAX_ITER = 200   # doublings, i.e. up to 2**200 averaged powers
STOCHASTIC_TOL = 1e-9


@dataclass(frozen=True)
class OccurrenceRatios:
    r: np.ndarray
    start: int
    iterations: int     # doublings performed
    powers: int         # number of averaged powers, 2**iterations
    residual: float     # max-norm change at the last doubling


@dataclass(frozen=True)
class IifMatrix:
    z: np.ndarray
    flagged: tuple[int, ...]   # perceived states with r'_i = 0, set to identity rows


def _stochastic(P, name="P") -> np.ndarray:
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] == 0:
        raise ContractError(f"{name} must be a non-empty square matrix, got shape {P.shape}")
    if not np.all(np.isfinite(P)) or np.any(P < 0):
        raise ContractError(f"{name} has negative or non-finite entries")
    bad = np.nonzero(np.abs(P.sum(axis=1) - 1.0) > STOCHASTIC_TOL)[0]
    if bad.size:
        raise ContractError(f"{name} row {int(bad[0])} sums to {P[bad[0]].sum():.17g}, not 1")
    return P


def occurrence_ratios(P, start: int = 0, tol: float = DEFAULT_TOL,
                      max_iter: int = DEFAULT_MAX_ITER) -> OccurrenceRatios:
    """Start row of the Cesàro average of the powers of ``P``.

    The average over ``m`` powers is doubled each iteration using
    ``A_2m = (A_m + P^m A_m) / 2``, so reaching ``m = 2**k`` costs ``k``
    matrix products. Iteration stops once two successive start rows differ
    by less than ``tol`` in max norm.

    Raises
    ------
    ContractError
        If ``P`` is not row-stochastic or ``start`` is out of range.
    ConvergenceError
        If ``max_iter`` doublings do not reach ``tol``.
    """
    P = _stochastic(P)
    n = P.shape[0]
    if not 0 <= start < n:
        raise ContractError(f"start state {start} out of range for {n} states")
    if tol <= 0:
        raise ContractError("tol must be > 0")
    A = P.copy()       # average of P^1..P^m
    Pm = P.copy()      # P^m
    prev = A[start].copy()
    residual = np.inf
    for it in range(1, max_iter + 1):
        A = 0.5 * (A + Pm @ A)
        Pm = Pm @ Pm
        # squaring amplifies row-sum drift geometrically; keep both stochastic
        A /= A.sum(axis=1, keepdims=True)
        Pm /= Pm.sum(axis=1, keepdims=True)
        row = A[start]
        residual = float(np.max(np.abs(row - prev)))
        if residual < tol:
            r = np.clip(row, 0.0, None)
            return OccurrenceRatios(r / r.sum(), start, it, 2**it, residual)
        prev = row.copy()
    raise ConvergenceError(f"occurrence ratios did not converge in {max_iter} doublings", residual)


def _error_matrix(error_rows, n=None) -> np.ndarray:
    E = np.asarray(error_rows, dtype=float)
    if E.ndim != 2 or E.shape[0] != E.shape[1]:
        raise ContractError(f"error rows must form a square matrix, got shape {E.shape}")
    if n is not None and E.shape[0] != n:
        raise ContractError(f"{E.shape[0]} error rows for {n} occurrence ratios")
    return _stochastic(E, "error rows")


def perceived_ratios(error_rows, r) -> np.ndarray:
    """``r'_i = sum_j E[j, i] r_j``."""
    r = np.asarray(getattr(r, "r", r), dtype=float)
    E = _error_matrix(error_rows, r.shape[0])
    return r @ E


def iif_matrix(error_rows, r) -> IifMatrix:
    """``z[i, j] = E[j, i] r_j / r'_i``; rows with ``r'_i = 0`` become identity rows."""
    r = np.asarray(getattr(r, "r", r), dtype=float)
    E = _error_matrix(error_rows, r.shape[0])
    rp = r @ E
    num = E.T * r[None, :]
    z = np.zeros_like(num)
    flagged = []
    for i, total in enumerate(rp):
        if total > 0:
            z[i] = num[i] / total
        else:
            z[i, i] = 1.0
            flagged.append(i)
    return IifMatrix(z, tuple(flagged))


def apply_iif(z, per_state: Sequence[Mapping[str, float]]) -> tuple[list[str], np.ndarray]:
    """Mix per-state strategies through ``z``.

    ``per_state[j]`` maps action ids to probabilities at true state ``j``.
    Each distribution is placed in a shared action coordinate space (ids in
    first-seen order) and row ``i`` of the result is ``sum_j z[i, j]`` times
    the embedded strategy of state ``j``.
    """
    z = np.asarray(getattr(z, "z", z), dtype=float)
    if z.ndim != 2 or z.shape[0] != z.shape[1] or z.shape[1] != len(per_state):
        raise ContractError(f"z of shape {z.shape} does not match {len(per_state)} state strategies")
    ids: list[str] = []
    for dist in per_state:
        for a in dist:
            if a not in ids:
                ids.append(a)
    col = {a: k for k, a in enumerate(ids)}
    emb = np.zeros((len(per_state), len(ids)))
    for j, dist in enumerate(per_state):
        for a, p in dist.items():
            emb[j, col[a]] = p
    return ids, z @ emb


def profile_strategies(spec: GameSpec, profile: StrategyProfile, player: int) -> list[dict[str, float]]:
    """The profile's per-state strategies for one player as id -> probability maps."""
    return [{a.id: float(p) for a, p in zip(spec.allowed(player, s), profile.strategy(player, s))}
            for s in range(spec.n_states)]


def _effective_mix(spec: GameSpec, profile: StrategyProfile, player: int, s: int) -> np.ndarray:
    allowed = spec.allowed(player, s)
    index = {a.id: i for i, a in enumerate(allowed)}
    w = np.zeros(len(allowed))
    for p, q in enumerate(spec.error_row(player, s)):
        if q == 0.0:
            continue
        for a, pa in zip(spec.allowed(player, p), profile.strategy(player, p)):
            if pa:
                w[index[effective_action(spec, player, s, a).id]] += q * pa
    return w


def marginal_transition_matrix(spec: GameSpec, profile: StrategyProfile) -> np.ndarray:
    """Per-step state transition matrix induced by a profile.

    Averages the pair transitions over both players' perception errors and
    mixed strategies, with out-of-set actions replaced by the normal action
    exactly as the engine does.
    """
    n = spec.n_states
    P = np.zeros((n, n))
    for s in range(n):
        wa = _effective_mix(spec, profile, ADMIN, s)
        wu = _effective_mix(spec, profile, USER, s)
        for ia, a in enumerate(spec.allowed(ADMIN, s)):
            if wa[ia] == 0.0:
                continue
            for iu, u in enumerate(spec.allowed(USER, s)):
                if wu[iu] == 0.0:
                    continue
                P[s] += wa[ia] * wu[iu] * np.asarray(spec.transitions[(s, a.id, u.id)])
    return P


def matrix_to_csv(row_labels: Sequence[str], col_labels: Sequence[str], M,
                  corner: str = "", manifest: str | None = None) -> str:
    buf = io.StringIO()
    if manifest:
        buf.write(f"# manifest: {manifest}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([corner, *col_labels])
    for label, row in zip(row_labels, np.atleast_2d(M)):
        w.writerow([label, *(format(float(x), ".17g") for x in row)])
    return buf.getvalue()


def analyse(spec: GameSpec, profile: StrategyProfile, player: int = ADMIN, start: int | None = None,
            tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER):
    """Occurrence ratios, perceived ratios and z for one player of a game."""
    if player not in (ADMIN, USER):
        raise ContractError(f"unknown player {player}")
    P = marginal_transition_matrix(spec, profile)
    occ = occurrence_ratios(P, spec.start_state if start is None else start, tol, max_iter)
    E = np.array(spec.error_model[player], dtype=float)
    return occ, perceived_ratios(E, occ), iif_matrix(E, occ)
