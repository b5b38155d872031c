"""Access signatures: K (RAO, preamble) slots spread over a frame of L RAOs.

A signature is derived from a device's 64-bit RES in two stages. Stage one
picks K distinct RAOs, stage two one preamble per picked RAO. Each stage
draws its own hashes from a SplitMix64 stream seeded with RES, so every
signature in the C(L, K) * M^K space is equally likely.

Public slot indices are 1-based: RAO in [1, L], preamble in [1, M]. The
vectorized helpers return 0-based arrays for the decoder and simulator.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from sigaccess.channel import FrameObservation

_U64 = np.uint64
_GAMMA = 0x9E3779B97F4A7C15


@dataclass(frozen=True)
class SignatureParams:
    L: int
    K: int
    M: int

    def __post_init__(self):
        if self.K < 1:
            raise ValueError(f"K must be >= 1, got {self.K}")
        if self.M < 1:
            raise ValueError(f"M must be >= 1, got {self.M}")
        if self.L < self.K:
            raise ValueError(f"frame length L={self.L} is shorter than K={self.K}")

    @property
    def space_size(self) -> int:
        """Number of distinct signatures, C(L, K) * M^K."""
        return math.comb(self.L, self.K) * self.M**self.K


@dataclass(frozen=True)
class Signature:
    slots: tuple[tuple[int, int], ...]

    def __post_init__(self):
        slots = tuple(sorted((int(r), int(p)) for r, p in self.slots))
        raos = [r for r, _ in slots]
        if len(set(raos)) != len(raos):
            raise ValueError("a signature uses each RAO at most once")
        object.__setattr__(self, "slots", slots)

    @property
    def K(self) -> int:
        return len(self.slots)

    def check(self, params: SignatureParams) -> None:
        if len(self.slots) != params.K:
            raise ValueError(f"expected {params.K} slots, got {len(self.slots)}")
        for r, p in self.slots:
            if not (1 <= r <= params.L and 1 <= p <= params.M):
                raise ValueError(f"slot ({r},{p}) outside L={params.L}, M={params.M}")

    def __str__(self) -> str:
        return ";".join(f"({r},{p})" for r, p in self.slots)

    @classmethod
    def parse(cls, text: str) -> "Signature":
        slots = []
        for part in text.split(";"):
            part = part.strip()
            if not (part.startswith("(") and part.endswith(")")):
                raise ValueError(f"bad slot {part!r}")
            r, p = part[1:-1].split(",")
            slots.append((int(r), int(p)))
        return cls(tuple(slots))


def _splitmix64(x: np.ndarray) -> np.ndarray:
    z = x
    z = (z ^ (z >> _U64(30))) * _U64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> _U64(27))) * _U64(0x94D049BB133111EB)
    return z ^ (z >> _U64(31))


def hash_stream(res: np.ndarray, count: int) -> np.ndarray:
    """``count`` independent 64-bit hashes per RES (SplitMix64 seeded with RES)."""
    res = np.atleast_1d(np.asarray(res, dtype=_U64))
    steps = (np.arange(1, count + 1, dtype=_U64) * _U64(_GAMMA))
    return _splitmix64(res[:, None] + steps[None, :])


def derive_slots(res, params: SignatureParams) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized derivation for an array of RES values.

    Returns ``(rao, pre)``, each of shape (n, K), 0-based and sorted by RAO
    within each row.
    """
    L, K, M = params.L, params.K, params.M
    h = hash_stream(res, 2 * K)
    n = h.shape[0]

    # stage 1: Floyd's sampling; hash j picks from the first L-K+j+1 RAOs and
    # falls back to the newest RAO on a repeat, giving a uniform K-subset
    rao = np.empty((n, K), dtype=np.int64)
    for j in range(K):
        top = L - K + j
        pick = (h[:, j] % _U64(top + 1)).astype(np.int64)
        repeat = (rao[:, :j] == pick[:, None]).any(axis=1)
        rao[:, j] = np.where(repeat, top, pick)

    # stage 2: one preamble per selected RAO from its own hash
    pre = (h[:, K:] % _U64(M)).astype(np.int64)

    order = np.argsort(rao, axis=1, kind="stable")
    return np.take_along_axis(rao, order, axis=1), np.take_along_axis(pre, order, axis=1)


def derive_signature(res: bytes | int, params: SignatureParams) -> Signature:
    if isinstance(res, (bytes, bytearray)):
        if len(res) != 8:
            raise ValueError("RES must be 64 bits")
        res = int.from_bytes(res, "little")
    rao, pre = derive_slots(np.array([res], dtype=_U64), params)
    return Signature(tuple((int(r) + 1, int(p) + 1) for r, p in zip(rao[0], pre[0])))


def to_dense(sig: Signature, params: SignatureParams) -> np.ndarray:
    sig.check(params)
    width = params.M + 1
    bits = np.zeros(params.L * width, dtype=np.uint8)
    bits[params.M :: width] = 1
    for r, p in sig.slots:
        bits[(r - 1) * width + params.M] = 0
        bits[(r - 1) * width + (p - 1)] = 1
    return bits


def from_dense(bits, params: SignatureParams) -> Signature:
    width = params.M + 1
    blocks = np.asarray(bits, dtype=np.uint8).reshape(params.L, width)
    if not np.all(blocks.sum(axis=1) == 1):
        raise ValueError("each RAO block must have exactly one bit set")
    slots = [
        (i + 1, int(np.argmax(block)) + 1)
        for i, block in enumerate(blocks)
        if not block[params.M]
    ]
    sig = Signature(tuple(slots))
    sig.check(params)
    return sig


def matches(sig: Signature, obs: FrameObservation) -> bool:
    """True when every slot of ``sig`` is detected active in ``obs``."""
    return all(obs.is_active(r, p) for r, p in sig.slots)


def enumerate_signatures(params: SignatureParams) -> Iterable[Signature]:
    """Every signature under ``params``; only sensible for tiny parameters."""
    from itertools import combinations, product

    for raos in combinations(range(1, params.L + 1), params.K):
        for pres in product(range(1, params.M + 1), repeat=params.K):
            yield Signature(tuple(zip(raos, pres)))
