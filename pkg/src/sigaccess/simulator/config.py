from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields, replace
from enum import IntEnum

from sigaccess.channel import DetectionModel
from sigaccess.designer import frame_length

PROTOCOLS = ("signature", "lte_full", "lte_mtc")


class DeviceStatus(IntEnum):
    IDLE = 0
    AWAITING_FRAME = 1
    TRANSMITTING_SIGNATURE = 2
    STOPPED_DECODED = 3
    LTE_WAIT_RAR = 4
    LTE_WAIT_CR = 5
    LTE_BACKOFF = 6
    AUTHENTICATED = 7
    DONE = 8
    FAILED = 9


@dataclass(frozen=True)
class ScenarioConfig:
    """One simulation point. Times are in sub-frames of ``t_s`` ms."""

    protocol: str = "signature"
    T: int = 5000
    M: int = 54
    K: int = 4
    lam: float = 1.0
    G_target: float = 0.99
    p_d: float = 0.99
    p_f: float = 1e-3
    t_s: float = 1.0
    delta_RAO: int = 1
    delta_RAR: int = 10
    delta_CR: int = 40
    W: int = 20
    R: int = 10
    n_frames: int = 500
    seed: int = 1
    # fixed frame length instead of the designed one
    L: int | None = None
    # observed slots a sole explainer needs before it is peeled; None picks
    # 1 for a noiseless channel and K-1 otherwise
    confirm: int | None = None

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise ValueError(f"protocol must be one of {PROTOCOLS}, got {self.protocol!r}")
        for name in ("T", "M", "K", "delta_RAO", "delta_RAR", "delta_CR", "W", "R"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.n_frames < 0:
            raise ValueError("n_frames must be >= 0")
        if not self.lam > 0 or not math.isfinite(self.lam):
            raise ValueError("lambda must be positive")
        if self.lam > self.T:
            raise ValueError("lambda cannot exceed T (arrival probability per device is lambda/T)")
        if not self.t_s > 0:
            raise ValueError("t_s must be positive")
        if not 0 < self.G_target < 1:
            raise ValueError("G_target must be in (0, 1)")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned value")
        if self.L is not None and self.L < self.K:
            raise ValueError("L must be >= K")
        if self.confirm is not None and self.confirm < 1:
            raise ValueError("confirm must be >= 1")
        self.detection  # validates p_d, p_f

    @property
    def detection(self) -> DetectionModel:
        return DetectionModel(self.p_d, self.p_f)

    def frame_length(self) -> int:
        if self.L is not None:
            return self.L
        return frame_length(self.T, self.lam, self.K, self.M, self.p_d, self.p_f, self.G_target).L

    def peel_confirm(self) -> int:
        if self.confirm is not None:
            return self.confirm
        if self.p_d == 1.0 and self.p_f == 0.0:
            return 1
        return max(1, self.K - 1)

    def with_(self, **changes) -> "ScenarioConfig":
        return replace(self, **changes)

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


@dataclass
class AccessMetrics:
    """Per-run outcome. Means come with their sample counts."""

    goodput: float = 1.0
    goodput_frames: int = 0
    reliability: float = 1.0
    mean_latency: float = 0.0
    mean_messages: float = 0.0
    max_messages: int = 0
    arrivals: int = 0
    successes: int = 0
    failures: int = 0
    in_progress: int = 0
    false_positive_count: int = 0
    collision_count: int = 0
    frames_run: int = 0
    L: int = 0
    appended_payloads: int = 0
    mean_exposed_preambles: float = 0.0
    auth_failures: int = 0

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class AccessLog:
    """Accumulates per-attempt outcomes during a run."""

    latencies: list[float] = field(default_factory=list)
    messages: list[int] = field(default_factory=list)
    outcomes: list[bool] = field(default_factory=list)
    frame_goodputs: list[float] = field(default_factory=list)

    def record(self, latency: float, messages: int, ok: bool) -> None:
        self.latencies.append(latency)
        self.messages.append(messages)
        self.outcomes.append(ok)

    def fill(self, m: AccessMetrics, in_progress: int = 0) -> AccessMetrics:
        n = len(self.outcomes)
        m.successes = sum(self.outcomes)
        m.failures = n - m.successes
        m.in_progress = in_progress
        m.arrivals = n + in_progress
        m.reliability = m.successes / n if n else 1.0
        m.mean_latency = sum(self.latencies) / n if n else 0.0
        m.mean_messages = sum(self.messages) / n if n else 0.0
        m.max_messages = max(self.messages, default=0)
        m.goodput_frames = len(self.frame_goodputs)
        m.goodput = sum(self.frame_goodputs) / len(self.frame_goodputs) if self.frame_goodputs else 1.0
        return m
