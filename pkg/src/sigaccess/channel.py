"""Base-station view of preamble activity within a signature frame.

The BS sees, per RAO, which preambles were detected: one detection draw per
preamble with probability ``p_d`` if at least one device sent it, ``p_f`` if
none did. Multiplicity is not observable.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np


@dataclass(frozen=True)
class DetectionModel:
    p_d: float = 0.99
    p_f: float = 1e-3

    def __post_init__(self):
        if not (0.0 <= self.p_f < self.p_d <= 1.0):
            raise ValueError(f"need 0 <= p_f < p_d <= 1, got p_d={self.p_d}, p_f={self.p_f}")


NOISELESS = DetectionModel(1.0, 0.0)


class FrameObservation:
    """Detected preamble sets for RAOs 1..L, filled in RAO order."""

    def __init__(self, L: int, M: int):
        self.L = L
        self.M = M
        self.active = np.zeros((L, M), dtype=bool)
        self.received = 0

    @classmethod
    def from_sets(cls, sets: Iterable[Iterable[int]], M: int, L: int | None = None):
        sets = [set(s) for s in sets]
        obs = cls(L if L is not None else len(sets), M)
        for s in sets:
            obs.add_rao(s)
        return obs

    @classmethod
    def from_array(cls, active: np.ndarray) -> "FrameObservation":
        L, M = active.shape
        obs = cls(L, M)
        obs.active[:] = active
        obs.received = L
        return obs

    def add_rao(self, detected) -> None:
        """Append the next RAO; ``detected`` is a set of 1-based preambles or a bool mask."""
        if self.received >= self.L:
            raise ValueError("observation already covers all L RAOs")
        self.active[self.received] = _as_mask(detected, self.M)
        self.received += 1

    @property
    def complete(self) -> bool:
        return self.received == self.L

    def detected(self, rao: int) -> frozenset[int]:
        return frozenset(int(p) + 1 for p in np.flatnonzero(self.active[rao - 1]))

    def is_active(self, rao: int, preamble: int) -> bool:
        if rao > self.received:
            raise ValueError(f"RAO {rao} not observed yet")
        return bool(self.active[rao - 1, preamble - 1])

    def __eq__(self, other):
        if not isinstance(other, FrameObservation):
            return NotImplemented
        return self.received == other.received and np.array_equal(self.active, other.active)

    def __repr__(self):
        rows = [sorted(self.detected(i + 1)) for i in range(self.received)]
        return f"FrameObservation(L={self.L}, M={self.M}, detected={rows})"


def _as_mask(detected, M: int) -> np.ndarray:
    arr = np.asarray(detected) if not isinstance(detected, (set, frozenset)) else None
    if arr is not None and arr.dtype == bool:
        if arr.shape != (M,):
            raise ValueError(f"mask must have length M={M}")
        return arr
    mask = np.zeros(M, dtype=bool)
    for p in detected:
        if not 1 <= p <= M:
            raise ValueError(f"preamble {p} outside [1, {M}]")
        mask[p - 1] = True
    return mask


def detect(sent: np.ndarray, model: DetectionModel, rng: np.random.Generator) -> np.ndarray:
    """Detection draws for one RAO; ``sent`` is a bool mask over the M preambles."""
    u = rng.random(sent.shape)
    return np.where(sent, u < model.p_d, u < model.p_f)


def observe_rao(transmissions, model: DetectionModel, rng: np.random.Generator, M: int) -> set[int]:
    """Detected preambles for one RAO.

    ``transmissions`` is an iterable of (device, preamble) pairs with 1-based
    preamble indices.
    """
    sent = np.zeros(M, dtype=bool)
    for _, p in transmissions:
        if not 1 <= p <= M:
            raise ValueError(f"preamble {p} outside [1, {M}]")
        sent[p - 1] = True
    return {int(p) + 1 for p in np.flatnonzero(detect(sent, model, rng))}


def superpose(slot_lists: Iterable[Iterable[tuple[int, int]]], L: int, M: int) -> FrameObservation:
    """Noiseless OR of the given signatures' slots over a full frame."""
    obs = FrameObservation(L, M)
    for slots in slot_lists:
        for r, p in slots:
            obs.active[r - 1, p - 1] = True
    obs.received = L
    return obs
