"""Closed-form dimensioning and analysis of the signature protocol.

Goodput model: with lambda*L expected arrivals per frame and T - lambda*L
inactive signatures, each falsely matched with probability p_fa,

    E[G] ~= lambda*L / (lambda*L + p_fa * (T - lambda*L))

p_fa follows from the probability that a preamble slot is idle and from the
detection model; solving E[G] = G_target for L gives the frame length.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

# chance a captured signature's RAND is ever broadcast again
REPLAY_PROBABILITY = 2.0**-128
RES_SPACE = 2**64
# above this space size the exact product is replaced by the birthday form
BIRTHDAY_SWITCH = 1e15


class InfeasibleDesignError(ValueError):
    """No frame length satisfies K <= L <= ceil(G_target * T / lambda)."""


@dataclass(frozen=True)
class LoadModel:
    T: int
    lam: float
    G_target: float

    def __post_init__(self):
        if self.T < 1:
            raise ValueError("T must be >= 1")
        if self.lam <= 0:
            raise ValueError("lambda must be > 0")
        if not 0 < self.G_target <= 1:
            raise ValueError("G_target must be in (0, 1]")

    def arrivals_per_frame(self, L: int) -> float:
        return self.lam * L


@dataclass(frozen=True)
class DesignOutput:
    L: int
    L_raw: float
    p_i: float
    p_fa: float
    E_G: float
    p_c1: float
    p_c2: float
    p_c: float
    clamped: bool

    def as_dict(self) -> dict:
        return asdict(self)


def _check_prob(name: str, x: float) -> None:
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"{name} must be a probability, got {x}")


def p_idle(lam: float, K: int, M: int, L: int | None = None) -> float:
    """Probability that a given preamble slot is activated by no active signature.

    Finite form ``(1 - K/(L*M))**(lam*L)`` when ``L`` is given, otherwise the
    large-L limit ``exp(-lam*K/M)``.
    """
    if lam < 0 or K < 0 or M < 1:
        raise ValueError("need lam >= 0, K >= 0, M >= 1")
    if K == 0:
        return 1.0
    if L is None:
        return math.exp(-lam * K / M)
    if L < 1 or K > L * M:
        raise ValueError("need K <= L*M")
    return math.exp(lam * L * math.log1p(-K / (L * M)))


def p_false_alarm(lam: float, K: int, M: int, p_d: float, p_f: float) -> float:
    """Probability that an inactive signature passes the AND test."""
    _check_prob("p_d", p_d)
    _check_prob("p_f", p_f)
    pi = p_idle(lam, K, M)
    return (p_d + (p_f - p_d) * pi) ** K


def expected_goodput(lam: float, L: int, T: int, p_fa: float) -> float:
    n = lam * L
    if n > T:
        raise ValueError(f"lambda*L = {n} exceeds the population T = {T}")
    _check_prob("p_fa", p_fa)
    if n == 0:
        return 1.0
    return n / (n + p_fa * (T - n))


def frame_length_raw(T: int, lam: float, K: int, M: int, p_d: float, p_f: float, G_target: float) -> float:
    """Frame length solving E[G] = G_target, before rounding and clamping."""
    q = p_false_alarm(lam, K, M, p_d, p_f)
    return q * G_target / (lam * (1.0 + G_target * (q - 1.0))) * T


def frame_length(
    T: int,
    lam: float,
    K: int,
    M: int,
    p_d: float,
    p_f: float,
    G_target: float,
) -> DesignOutput:
    load = LoadModel(T, lam, G_target)
    if G_target >= 1:
        raise ValueError("G_target must be < 1 for a finite frame length")
    upper = math.ceil(G_target * T / lam)
    if upper < K:
        raise InfeasibleDesignError(
            f"empty interval for L: K={K} > ceil(G_target*T/lambda)={upper}"
        )
    raw = frame_length_raw(T, lam, K, M, p_d, p_f, G_target)
    L = min(max(math.ceil(raw), K), upper)
    clamped = L != math.ceil(raw)
    pfa = p_false_alarm(lam, K, M, p_d, p_f)
    # the ceiling on the upper bound can push lambda*L just past T
    eg = 1.0 if load.arrivals_per_frame(L) >= T else expected_goodput(lam, L, T, pfa)
    pc1, pc2, pc = collision_prob(T, L, K, M) if T >= 2 else (0.0, 0.0, 0.0)
    return DesignOutput(
        L=L,
        L_raw=raw,
        p_i=p_idle(lam, K, M),
        p_fa=pfa,
        E_G=eg,
        p_c1=pc1,
        p_c2=pc2,
        p_c=pc,
        clamped=clamped,
    )


def collision_exact(T: int, S: int) -> float:
    """P(at least two of T uniform draws from S values coincide), exact product.

    Evaluated as ``-expm1(sum(log1p(-k/S)))`` which stays accurate when the
    result is tiny.
    """
    if T < 2:
        return 0.0
    if T > S:
        return 1.0
    if T == 2:
        # int / int rounds once; converting S to float first can lose an ulp
        return 1 / S
    total = 0.0
    chunk = 1 << 20
    for start in range(1, T, chunk):
        k = np.arange(start, min(T, start + chunk), dtype=np.float64)
        total += math.fsum(np.log1p(-k / S))
    return -math.expm1(total)


def collision_birthday(T: int, S: int) -> float:
    return -math.expm1(-T * (T - 1) / (2.0 * S))


def _collision(T: int, S: int) -> float:
    if T == 2 or S <= BIRTHDAY_SWITCH:
        return collision_exact(T, S)
    return collision_birthday(T, S)


def collision_prob(T: int, L: int, K: int, M: int) -> tuple[float, float, float]:
    """(p_c1, p_c2, p_c): RES collision, signature collision, combined."""
    if T < 2:
        raise ValueError("collision probability needs T >= 2")
    S = math.comb(L, K) * M**K
    pc1 = _collision(T, RES_SPACE)
    pc2 = _collision(T, S)
    return pc1, pc2, pc1 + (1.0 - pc1) * pc2


def attacker_candidates(N: int, K: int) -> int:
    """Candidate signatures an eavesdropper faces when N devices send K preambles each."""
    if N < 1 or K < 1:
        raise ValueError("need N >= 1 and K >= 1")
    return math.comb(K * N, K)
