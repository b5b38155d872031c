import os
import struct
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sigaccess.auth_kdf import (
    AuthChallenge,
    auth_vector,
    f1,
    f1_batch,
    f2,
    f2_batch,
    f3,
    f4,
    generate_keys,
    res_to_int,
    siphash24,
    verify_network,
)

MASK = (1 << 64) - 1


def _rotl(x, b):
    return ((x << b) | (x >> (64 - b))) & MASK


def ref_siphash(key: bytes, msg: bytes) -> int:
    """Scalar SipHash-2-4 written from the reference algorithm, independent of the package."""
    k0, k1 = struct.unpack("<QQ", key)
    v = [k0 ^ 0x736F6D6570736575, k1 ^ 0x646F72616E646F6D, k0 ^ 0x6C7967656E657261, k1 ^ 0x7465646279746573]

    def rnd():
        v[0] = (v[0] + v[1]) & MASK; v[1] = _rotl(v[1], 13) ^ v[0]; v[0] = _rotl(v[0], 32)
        v[2] = (v[2] + v[3]) & MASK; v[3] = _rotl(v[3], 16) ^ v[2]
        v[0] = (v[0] + v[3]) & MASK; v[3] = _rotl(v[3], 21) ^ v[0]
        v[2] = (v[2] + v[1]) & MASK; v[1] = _rotl(v[1], 17) ^ v[2]; v[2] = _rotl(v[2], 32)

    tail = len(msg) % 8
    body = msg[: len(msg) - tail]
    for (m,) in struct.iter_unpack("<Q", body):
        v[3] ^= m; rnd(); rnd(); v[0] ^= m
    last = int.from_bytes(msg[len(body):], "little") | ((len(msg) & 0xFF) << 56)
    v[3] ^= last; rnd(); rnd(); v[0] ^= last
    v[2] ^= 0xFF
    for _ in range(4):
        rnd()
    return v[0] ^ v[1] ^ v[2] ^ v[3]


def _key(rng):
    return rng.integers(0, 256, 16, dtype=np.uint8).tobytes()


def test_siphash_reference_vectors():
    key = bytes(range(16))
    # published test vectors for inputs of length 0 and 15
    assert int(siphash24(np.frombuffer(key, np.uint8), np.zeros((1, 0), np.uint8))[0]) == 0x726FDB47DD0E0E31
    msg = np.frombuffer(bytes(range(15)), np.uint8)
    assert int(siphash24(np.frombuffer(key, np.uint8), msg)[0]) == 0xA129CA6149BE45E5
    assert ref_siphash(key, bytes(range(15))) == 0xA129CA6149BE45E5


def test_siphash_matches_cpython_bytes_hash():
    # CPython hashes bytes with SipHash keyed from PYTHONHASHSEED; seed 0 is the zero key
    code = "import sys; sys.stdout.write(str(hash(b'abc') & ((1 << 64) - 1)))"
    env = dict(os.environ, PYTHONHASHSEED="0")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    got = int(siphash24(np.zeros(16, np.uint8), np.frombuffer(b"abc", np.uint8))[0])
    if sys.hash_info.algorithm.startswith("siphash"):
        assert int(out.stdout) == got


@settings(max_examples=200, deadline=None)
@given(key=st.binary(min_size=16, max_size=16), msg=st.binary(max_size=40))
def test_siphash_agrees_with_scalar_reference(key, msg):
    got = siphash24(np.frombuffer(key, np.uint8), np.frombuffer(msg, np.uint8).reshape(1, -1))
    assert int(got[0]) == ref_siphash(key, msg)


def test_output_widths(rng):
    sk = _key(rng)
    ch = AuthChallenge(_key(rng), sqn=5, amf=0x8000)
    assert len(f1(sk, ch)) == 8
    assert len(f2(sk, ch.rand)) == 8
    assert len(f3(sk, ch.rand)) == 16
    assert len(f4(sk, ch.rand)) == 16
    av = auth_vector(sk, ch)
    assert (len(av.res), len(av.mac), len(av.ck), len(av.ik)) == (8, 8, 16, 16)


def test_determinism(rng):
    sk, rand = _key(rng), _key(rng)
    ch = AuthChallenge(rand, 7, 1)
    assert f2(sk, rand) == f2(sk, rand)
    assert f1(sk, ch) == f1(sk, ch)
    assert auth_vector(sk, ch) == auth_vector(sk, ch)


def test_prf_output_is_tagged_siphash(rng):
    sk, rand = _key(rng), _key(rng)
    expect = ref_siphash(sk, bytes([2, 0]) + rand)
    assert res_to_int(f2(sk, rand)) == expect
    ck = f3(sk, rand)
    assert res_to_int(ck[:8]) == ref_siphash(sk, bytes([3, 0]) + rand)
    assert res_to_int(ck[8:]) == ref_siphash(sk, bytes([3, 1]) + rand)


def test_input_width_checks():
    with pytest.raises(ValueError):
        f2(bytes(15), bytes(16))
    with pytest.raises(ValueError):
        f2(bytes(16), bytes(17))
    with pytest.raises(ValueError):
        AuthChallenge(bytes(16), sqn=1 << 48)
    with pytest.raises(ValueError):
        AuthChallenge(bytes(16), amf=1 << 16)


def test_f2_differs_across_keys(rng):
    keys = generate_keys(10_000, rng)
    rand = _key(rng)
    res = f2_batch(keys, rand)
    assert len(np.unique(res)) == len(res)


def test_batch_matches_scalar(rng):
    keys = generate_keys(50, rng)
    ch = AuthChallenge(_key(rng), 3, 0x8000)
    res = f2_batch(keys, ch.rand)
    mac = f1_batch(keys, ch)
    for h in range(50):
        sk = keys[h].tobytes()
        assert int(res[h]) == res_to_int(f2(sk, ch.rand))
        assert int(mac[h]) == res_to_int(f1(sk, ch))


def test_network_authentication(rng):
    sk = _key(rng)
    ch = AuthChallenge(_key(rng), 1, 0x8000)
    assert verify_network(sk, ch, f1(sk, ch))
    assert not verify_network(_key(rng), ch, f1(sk, ch))


def test_tampered_rand_breaks_mac(rng):
    keys = generate_keys(100, rng)
    ch = AuthChallenge(_key(rng), 1, 0x8000)
    good = f1_batch(keys, ch)
    rand = bytearray(ch.rand)
    matches = 0
    for bit in range(128):
        flipped = bytearray(rand)
        flipped[bit // 8] ^= 1 << (bit % 8)
        bad = f1_batch(keys, AuthChallenge(bytes(flipped), ch.sqn, ch.amf))
        matches += int(np.count_nonzero(bad == good))
    assert matches == 0


def test_f3_f4_and_tags_are_separated(rng):
    for _ in range(2000):
        sk, rand = _key(rng), _key(rng)
        ch = AuthChallenge(rand, 1, 0)
        outs = {f1(sk, ch), f2(sk, rand), f3(sk, rand)[:8], f4(sk, rand)[:8]}
        assert len(outs) == 4
        assert f3(sk, rand) != f4(sk, rand)


def test_avalanche(rng):
    keys = generate_keys(10_000, rng)
    rand = _key(rng)
    base = f2_batch(keys, rand)
    # flip one random key bit per trial
    pos = rng.integers(0, 128, len(keys))
    flipped = keys.copy()
    flipped[np.arange(len(keys)), pos // 8] ^= (1 << (pos % 8)).astype(np.uint8)
    diff = base ^ f2_batch(flipped, rand)
    bits = np.unpackbits(diff.view(np.uint8)).reshape(len(keys), 64).sum(axis=1)
    assert abs(bits.mean() / 64 - 0.5) < 0.05


def test_generate_keys_unique(rng):
    keys = generate_keys(1000, rng)
    assert keys.shape == (1000, 16)
    assert len(np.unique(keys, axis=0)) == 1000
