"""Keyed authentication functions f1-f4.

All four functions are one keyed PRF (SipHash-2-4, 128-bit key, 64-bit
output) with a one-byte function tag and a one-byte block counter prepended
to the message. 128-bit outputs are two consecutive counter blocks.

The PRF is vectorized over numpy so the base station can recompute f2 for a
whole population per frame. Outputs are modeled as uniform over their range;
signature collision analysis in :mod:`sigaccess.designer` relies on that.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SK_BYTES = 16
RAND_BYTES = 16
SQN_BITS = 48
AMF_BITS = 16

TAG_F1 = 0x01
TAG_F2 = 0x02
TAG_F3 = 0x03
TAG_F4 = 0x04

_U64 = np.uint64


@dataclass(frozen=True)
class AuthChallenge:
    rand: bytes
    sqn: int = 0
    amf: int = 0

    def __post_init__(self):
        if len(self.rand) != RAND_BYTES:
            raise ValueError(f"RAND must be {RAND_BYTES} bytes, got {len(self.rand)}")
        if not 0 <= self.sqn < 1 << SQN_BITS:
            raise ValueError("SQN must fit in 48 bits")
        if not 0 <= self.amf < 1 << AMF_BITS:
            raise ValueError("AMF must fit in 16 bits")

    def encode(self) -> bytes:
        return self.rand + self.sqn.to_bytes(6, "big") + self.amf.to_bytes(2, "big")


@dataclass(frozen=True)
class AuthVector:
    res: bytes
    mac: bytes
    ck: bytes
    ik: bytes


def _rotl(x, b):
    return (x << _U64(b)) | (x >> _U64(64 - b))


def _sipround(v0, v1, v2, v3):
    v0 = v0 + v1
    v1 = _rotl(v1, 13) ^ v0
    v0 = _rotl(v0, 32)
    v2 = v2 + v3
    v3 = _rotl(v3, 16) ^ v2
    v0 = v0 + v3
    v3 = _rotl(v3, 21) ^ v0
    v2 = v2 + v1
    v1 = _rotl(v1, 17) ^ v2
    v2 = _rotl(v2, 32)
    return v0, v1, v2, v3


def siphash24(keys, messages) -> np.ndarray:
    """SipHash-2-4 over rows of ``keys`` (n, 16) and ``messages`` (n, len).

    Either argument may have a single row, which is broadcast. Returns the
    64-bit tags as a uint64 array of length n.
    """
    keys = np.atleast_2d(np.asarray(keys, dtype=np.uint8))
    messages = np.atleast_2d(np.asarray(messages, dtype=np.uint8))
    if keys.shape[1] != SK_BYTES:
        raise ValueError("SipHash keys are 16 bytes")
    n = max(keys.shape[0], messages.shape[0])
    length = messages.shape[1]

    kw = np.ascontiguousarray(keys).view("<u8").astype(_U64)
    k0 = np.broadcast_to(kw[:, 0], (n,))
    k1 = np.broadcast_to(kw[:, 1], (n,))
    v0 = k0 ^ _U64(0x736F6D6570736575)
    v1 = k1 ^ _U64(0x646F72616E646F6D)
    v2 = k0 ^ _U64(0x6C7967656E657261)
    v3 = k1 ^ _U64(0x7465646279746573)

    # pad to whole words; the final word carries the length in its top byte
    nwords = length // 8 + 1
    padded = np.zeros((messages.shape[0], nwords * 8), dtype=np.uint8)
    padded[:, :length] = messages
    padded[:, -1] = length & 0xFF
    words = padded.view("<u8").astype(_U64)

    for w in range(nwords):
        m = np.broadcast_to(words[:, w], (n,))
        v3 = v3 ^ m
        v0, v1, v2, v3 = _sipround(v0, v1, v2, v3)
        v0, v1, v2, v3 = _sipround(v0, v1, v2, v3)
        v0 = v0 ^ m
    v2 = v2 ^ _U64(0xFF)
    for _ in range(4):
        v0, v1, v2, v3 = _sipround(v0, v1, v2, v3)
    return v0 ^ v1 ^ v2 ^ v3


def _check_key(sk: bytes) -> None:
    if len(sk) != SK_BYTES:
        raise ValueError(f"secret key must be {SK_BYTES} bytes, got {len(sk)}")


def _check_rand(rand: bytes) -> None:
    if len(rand) != RAND_BYTES:
        raise ValueError(f"RAND must be {RAND_BYTES} bytes, got {len(rand)}")


def _prf(sk: bytes, tag: int, payload: bytes, nblocks: int) -> bytes:
    _check_key(sk)
    key = np.frombuffer(sk, dtype=np.uint8)
    msgs = np.array(
        [np.frombuffer(bytes([tag, ctr]) + payload, dtype=np.uint8) for ctr in range(nblocks)]
    )
    out = siphash24(key, msgs)
    return b"".join(int(v).to_bytes(8, "little") for v in out)


def f1(sk: bytes, challenge: AuthChallenge) -> bytes:
    """Network authentication code (64 bits) over RAND, SQN and AMF."""
    return _prf(sk, TAG_F1, challenge.encode(), 1)


def f2(sk: bytes, rand: bytes) -> bytes:
    """User response RES (64 bits)."""
    _check_rand(rand)
    return _prf(sk, TAG_F2, rand, 1)


def f3(sk: bytes, rand: bytes) -> bytes:
    """Cipher key CK (128 bits)."""
    _check_rand(rand)
    return _prf(sk, TAG_F3, rand, 2)


def f4(sk: bytes, rand: bytes) -> bytes:
    """Integrity key IK (128 bits)."""
    _check_rand(rand)
    return _prf(sk, TAG_F4, rand, 2)


def auth_vector(sk: bytes, challenge: AuthChallenge) -> AuthVector:
    return AuthVector(
        res=f2(sk, challenge.rand),
        mac=f1(sk, challenge),
        ck=f3(sk, challenge.rand),
        ik=f4(sk, challenge.rand),
    )


def verify_network(sk: bytes, challenge: AuthChallenge, received_mac: bytes) -> bool:
    """Device-side check of the MAC carried in RRC Connection Setup."""
    return f1(sk, challenge) == received_mac


def f2_batch(keys: np.ndarray, rand: bytes) -> np.ndarray:
    """f2 for every row of ``keys`` (n, 16) uint8; returns RES values as uint64.

    ``f2_batch(keys, r)[h]`` equals ``int.from_bytes(f2(keys[h], r), "little")``.
    """
    _check_rand(rand)
    msg = np.frombuffer(bytes([TAG_F2, 0]) + rand, dtype=np.uint8)
    return siphash24(keys, msg)


def res_to_int(res: bytes) -> int:
    return int.from_bytes(res, "little")


def generate_keys(n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` distinct 128-bit secret keys as an (n, 16) uint8 array."""
    keys = rng.integers(0, 256, size=(n, SK_BYTES), dtype=np.uint8)
    # duplicates are ~n^2 / 2^129 likely; redraw rather than assume
    while len(np.unique(keys, axis=0)) < n:
        keys = rng.integers(0, 256, size=(n, SK_BYTES), dtype=np.uint8)
    return keys


def f1_batch(keys: np.ndarray, challenge: AuthChallenge) -> np.ndarray:
    """f1 for every row of ``keys``; element h equals ``res_to_int(f1(keys[h], challenge))``."""
    msg = np.frombuffer(bytes([TAG_F1, 0]) + challenge.encode(), dtype=np.uint8)
    return siphash24(keys, msg)
