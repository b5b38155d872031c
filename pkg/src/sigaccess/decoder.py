"""Signature detection at the base station.

Two decoders share one candidate registry (the signatures of all T devices for
the current RAND):

* :func:`decode_full` applies the AND test to a complete frame observation.
* :class:`IterativeDecoder` consumes the frame RAO by RAO. It eliminates
  candidates whose preamble in the current RAO was not detected, and peels:
  a detected slot explained by exactly one remaining candidate decodes that
  candidate, which is told to stop transmitting from the next RAO onwards.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from sigaccess.channel import FrameObservation
from sigaccess.signature import Signature, SignatureParams, derive_slots

ELIMINATED = "eliminated"
DECODED_ACTIVE = "decoded_active"
STOP_FEEDBACK_SENT = "stop_feedback_sent"
FALSE_POSITIVE_DECLARED = "false_positive_declared"
EVENT_KINDS = (ELIMINATED, DECODED_ACTIVE, STOP_FEEDBACK_SENT, FALSE_POSITIVE_DECLARED)


class CandidateRegistry:
    """Per-frame signatures of every device, as 0-based (T, K) slot arrays."""

    def __init__(self, rao: np.ndarray, pre: np.ndarray, params: SignatureParams):
        rao = np.asarray(rao, dtype=np.int64)
        pre = np.asarray(pre, dtype=np.int64)
        if rao.shape != pre.shape or rao.ndim != 2 or rao.shape[1] != params.K:
            raise ValueError("slot arrays must both have shape (T, K)")
        if rao.size and (rao.min() < 0 or rao.max() >= params.L or pre.min() < 0 or pre.max() >= params.M):
            raise ValueError("slot index outside the frame")
        self.rao = rao
        self.pre = pre
        self.params = params

    @classmethod
    def from_signatures(cls, sigs: Iterable[Signature], params: SignatureParams):
        sigs = list(sigs)
        for s in sigs:
            s.check(params)
        rao = np.array([[r - 1 for r, _ in s.slots] for s in sigs], dtype=np.int64).reshape(-1, params.K)
        pre = np.array([[p - 1 for _, p in s.slots] for s in sigs], dtype=np.int64).reshape(-1, params.K)
        return cls(rao, pre, params)

    @classmethod
    def from_res(cls, res: np.ndarray, params: SignatureParams):
        rao, pre = derive_slots(res, params)
        return cls(rao, pre, params)

    def __len__(self) -> int:
        return self.rao.shape[0]

    def signature(self, h: int) -> Signature:
        return Signature(tuple((int(r) + 1, int(p) + 1) for r, p in zip(self.rao[h], self.pre[h])))


@dataclass(frozen=True)
class TraceEvent:
    rao: int
    kind: str
    device: int


@dataclass
class DecodeTrace:
    L: int
    events: list[TraceEvent] = field(default_factory=list)
    last_rao: int = 0

    def devices(self, kind: str) -> list[int]:
        return [e.device for e in self.events if e.kind == kind]

    @property
    def eliminated(self) -> list[int]:
        return self.devices(ELIMINATED)

    @property
    def declared(self) -> list[int]:
        return [e.device for e in self.events if e.kind in (DECODED_ACTIVE, FALSE_POSITIVE_DECLARED)]

    @property
    def false_positives(self) -> list[int]:
        return self.devices(FALSE_POSITIVE_DECLARED)

    def rows(self) -> list[tuple[int, str, int]]:
        return [(e.rao, e.kind, e.device) for e in self.events]

    def write_csv(self, fp, labels: Callable[[int], str] | None = None) -> None:
        w = csv.writer(fp, lineterminator="\n")
        w.writerow(["rao_index", "event", "device_id"])
        for e in self.events:
            w.writerow([e.rao, e.kind, labels(e.device) if labels else e.device])


def decode_full(obs: FrameObservation, registry: CandidateRegistry) -> set[int]:
    """Devices whose every slot is detected in the complete observation."""
    if not obs.complete:
        raise ValueError("decode_full needs all L RAOs")
    hit = obs.active[registry.rao, registry.pre].all(axis=1)
    return set(np.flatnonzero(hit).tolist())


class IterativeDecoder:
    """Per-RAO peeling decoder over one signature frame.

    Feed detected preamble sets with :meth:`push` in RAO order; call
    :meth:`finish` at frame end to declare the surviving candidates. With
    ``feedback`` a device decoded in RAO i no longer transmits from RAO i+1,
    so it stops counting as an explanation for slots after i.

    ``active`` (optional) is the ground truth used only to label declared
    inactive devices as false positives in the trace.
    """

    def __init__(
        self,
        registry: CandidateRegistry,
        *,
        feedback: bool = True,
        active=None,
        record: bool = True,
        confirm: int = 1,
    ):
        p = registry.params
        if confirm < 1:
            raise ValueError("confirm must be >= 1")
        self.confirm = min(confirm, p.K)
        self.registry = registry
        self.params = p
        self.feedback = feedback
        self.record = record
        T = len(registry)
        self.truth = None
        if active is not None:
            self.truth = np.zeros(T, dtype=bool)
            idx = np.asarray(active)
            if idx.dtype == bool:
                self.truth[:] = idx
            else:
                self.truth[np.asarray(list(active), dtype=np.int64)] = True

        flat_r = registry.rao.ravel()
        order = np.argsort(flat_r, kind="stable")
        self._c = np.repeat(np.arange(T), p.K)[order]
        self._r = flat_r[order]
        self._p = registry.pre.ravel()[order]
        self._key = self._r * p.M + self._p
        self._bounds = np.searchsorted(self._r, np.arange(p.L + 1))

        self._count = np.zeros(p.L * p.M, dtype=np.int64)
        self._idsum = np.zeros(p.L * p.M, dtype=np.int64)
        self.eliminated = np.zeros(T, dtype=bool)
        self.decoded = np.zeros(T, dtype=bool)
        # RAO (0-based) at which each device was decoded; L means never
        self.decoded_at = np.full(T, p.L, dtype=np.int64)
        self.end_declared: list[int] = []
        self.obs = FrameObservation(p.L, p.M)
        self.trace = DecodeTrace(p.L)
        self.finished = False

    @property
    def done(self) -> bool:
        """Every candidate is decoded or eliminated; later RAOs carry no information."""
        return bool(np.all(self.eliminated | self.decoded))

    def _log(self, rao: int, kind: str, devices) -> None:
        if self.record:
            self.trace.events.extend(TraceEvent(rao, kind, int(d)) for d in devices)

    def _declare_kind(self, h: int) -> str:
        if self.truth is not None and not self.truth[h]:
            return FALSE_POSITIVE_DECLARED
        return DECODED_ACTIVE

    def push(self, detected) -> list[int]:
        """Consume the next RAO; returns devices decoded in it, in decode order."""
        if self.finished:
            raise RuntimeError("frame already finished")
        i = self.obs.received
        self.obs.add_rao(detected)
        self.trace.last_rao = i + 1
        lo, hi = self._bounds[i], self._bounds[i + 1]

        cs = self._c[lo:hi]
        ps = self._p[lo:hi]
        hit = self.obs.active[i, ps]
        open_ = ~(self.eliminated[cs] | self.decoded[cs])
        # one slot per candidate per RAO, rows already in id order
        gone = cs[open_ & ~hit]
        self.eliminated[gone] = True
        self._log(i + 1, ELIMINATED, gone)

        # explanation sets are kept as per-slot member counts and id sums;
        # a slot with one member names it by its id sum
        if len(gone):
            g_rao = self.registry.rao[gone]
            earlier = g_rao < i
            g_keys = (g_rao * self.params.M + self.registry.pre[gone])[earlier]
            g_ids = np.broadcast_to(gone[:, None], g_rao.shape)[earlier]
            np.subtract.at(self._count, g_keys, 1)
            np.subtract.at(self._idsum, g_keys, g_ids)
        join = hit & ~self.eliminated[cs]
        if self.feedback:
            join &= self.decoded_at[cs] >= i
        np.add.at(self._count, self._key[lo:hi][join], 1)
        np.add.at(self._idsum, self._key[lo:hi][join], cs[join])

        upto = (i + 1) * self.params.M
        keys = np.flatnonzero(self._count[:upto] == 1)
        cands = self._idsum[keys]
        fresh = ~self.decoded[cands]
        cands = cands[fresh]
        if self.confirm > 1 and len(cands):
            # every observed slot of a live candidate was detected, so its
            # evidence is the number of its slots in RAOs 0..i
            seen = (self.registry.rao[cands] <= i).sum(axis=1)
            cands = cands[seen >= self.confirm]
        new = list(dict.fromkeys(cands.tolist()))

        for h in new:
            self.decoded[h] = True
            self.decoded_at[h] = i
            if self.record:
                self.trace.events.append(TraceEvent(i + 1, self._declare_kind(h), h))
                if self.feedback:
                    self.trace.events.append(TraceEvent(i + 1, STOP_FEEDBACK_SENT, h))
        return new

    def finish(self) -> list[int]:
        """Declare every candidate neither eliminated nor decoded."""
        if self.finished:
            return self.end_declared
        self.finished = True
        rest = np.flatnonzero(~(self.eliminated | self.decoded)).tolist()
        for h in rest:
            if self.record:
                self.trace.events.append(TraceEvent(self.trace.last_rao, self._declare_kind(h), h))
        self.end_declared = rest
        return rest

    @property
    def declared(self) -> set[int]:
        return set(np.flatnonzero(self.decoded).tolist()) | set(self.end_declared)

    def transmitting(self, rao: int) -> np.ndarray:
        """Bool mask of devices still allowed to transmit in 1-based ``rao``."""
        if not self.feedback:
            return np.ones(len(self.registry), dtype=bool)
        return self.decoded_at >= rao - 1


def decode_iterative(
    rao_stream: Iterable,
    registry: CandidateRegistry,
    stop: Callable[[int, int], None] | None = None,
    *,
    feedback: bool = True,
    active=None,
) -> DecodeTrace:
    """Run the iterative decoder over a stream of per-RAO detected sets.

    ``stop(device, rao)`` is called for each decode so the transmitting side
    can silence the device before the next RAO is produced; the stream is only
    advanced after the callbacks for the current RAO have run. Consumption
    stops as soon as every candidate is resolved.
    """
    dec = IterativeDecoder(registry, feedback=feedback, active=active)
    for detected in rao_stream:
        new = dec.push(detected)
        if stop is not None:
            for h in new:
                stop(h, dec.obs.received)
        if dec.done or dec.obs.complete:
            break
    dec.finish()
    return dec.trace
