"""State perception from sensor readings.

Each state is described by a signature: one or more representative points
(one per typical behaviour) in the space of observed parameters. A reading
is compared with every signature by the minimum root-mean-square distance
to its points; closer states are perceived as more probable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import ContractError, SpecError
from .model import check_keys, read_document


@dataclass(frozen=True)
class StateSignature:
    state: int
    elements: np.ndarray          # (F, g) representative points
    scales: np.ndarray | None = None

    def __post_init__(self):
        elements = np.atleast_2d(np.asarray(self.elements, dtype=float))
        if elements.shape[0] < 1 or elements.shape[1] < 1:
            raise ContractError(f"signature of state {self.state} has no elements")
        object.__setattr__(self, "elements", elements)
        if self.scales is not None:
            scales = np.asarray(self.scales, dtype=float)
            if scales.shape != (elements.shape[1],) or np.any(scales <= 0):
                raise ContractError("scales must be positive, one per parameter")
            object.__setattr__(self, "scales", scales)

    @property
    def dim(self) -> int:
        return self.elements.shape[1]


def min_rms_distance(sig: StateSignature, cv: Sequence[float]) -> tuple[float, int]:
    """Smallest RMS distance from ``cv`` to the signature's elements.

    Returns the distance and the index of the first closest element.
    """
    cv = np.asarray(cv, dtype=float)
    if cv.shape != (sig.dim,):
        raise ContractError(f"reading has dimension {cv.size}, signature has {sig.dim}")
    diff = sig.elements - cv
    if sig.scales is not None:
        diff = diff / sig.scales
    # factor out the largest component so tiny or huge differences neither underflow nor overflow
    peak = np.max(np.abs(diff), axis=1)
    safe = np.where(peak > 0, peak, 1.0)
    ratio = diff / safe[:, None]
    dist = peak * np.sqrt(np.sum(ratio * ratio, axis=1) / sig.dim)
    idx = int(np.argmin(dist))
    return float(dist[idx]), idx


def distance_profile(sigs: Sequence[StateSignature], cv) -> np.ndarray:
    dims = {s.dim for s in sigs}
    if len(dims) > 1:
        raise ContractError("signatures disagree on dimension")
    return np.array([min_rms_distance(s, cv)[0] for s in sigs])


def perception_distribution(sigs: Sequence[StateSignature], cv) -> np.ndarray:
    """Probability of perceiving each state given reading ``cv``.

    ``p_i = (ΣΔ - Δ_i) / (ΣΔ (N - 1))``. A reading at zero distance from one
    or more states puts all mass on those states, split evenly.
    """
    if not sigs:
        raise ContractError("at least one signature is required")
    delta = distance_profile(sigs, cv)
    n = len(delta)
    if n == 1:
        return np.ones(1)
    zero = delta == 0.0
    if zero.any():
        return zero / zero.sum()
    total = delta.sum()
    return (total - delta) / (total * (n - 1))


def derive_error_rows(sigs: Sequence[StateSignature],
                      labelled_readings: Mapping[int, Sequence[Sequence[float]]]) -> np.ndarray:
    """Error rows estimated from readings taken while each state was true.

    Row ``j`` is the average perception distribution over state ``j``'s
    readings, indexed like ``sigs``.
    """
    order = [s.state for s in sigs]
    rows = []
    for j, state in enumerate(order):
        readings = labelled_readings.get(state, ())
        if len(readings) == 0:
            raise ContractError(f"no readings for state {state}")
        row = np.mean([perception_distribution(sigs, r) for r in readings], axis=0)
        if row[j] <= 0.0:
            raise ContractError(
                f"state {state} is never perceived when true; it must stay in its information set")
        rows.append(row)
    return np.array(rows)


def load_signatures(path) -> tuple[list[str], list[StateSignature], np.ndarray | None]:
    """Read a ``signatures`` section.

    Format::

        {"signatures": {"scales": [1, 1],            # optional
                        "states": [{"state": "Low", "elements": [[1.0, 0.15]]}, ...]},
         "reading": [1.7, 0.15]}                      # optional

    Returns state labels, signatures and the reading (or None).
    """
    doc = read_document(path)
    check_keys(doc, {"signatures", "reading", "game", "ploy"}, str(path), required=("signatures",))
    sec = doc["signatures"]
    check_keys(sec, {"states", "scales"}, "signatures", required=("states",))
    scales = sec.get("scales")
    labels, sigs = [], []
    for i, item in enumerate(sec["states"]):
        loc = f"signatures.states[{i}]"
        check_keys(item, {"state", "elements"}, loc, required=("state", "elements"))
        try:
            sigs.append(StateSignature(i, np.asarray(item["elements"], dtype=float), scales))
        except (ValueError, TypeError, ContractError) as exc:
            raise SpecError(str(exc), loc) from None
        labels.append(str(item["state"]))
    if len({s.dim for s in sigs}) > 1:
        raise SpecError("all elements must have the same dimension", "signatures.states")
    reading = doc.get("reading")
    if reading is not None:
        try:
            reading = np.asarray(reading, dtype=float)
        except (ValueError, TypeError):
            raise SpecError("reading must be a list of numbers", "reading") from None
    return labels, sigs, reading
