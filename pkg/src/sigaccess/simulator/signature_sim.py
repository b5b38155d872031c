"""Frame-gated simulation of the signature protocol.

Timeline: frame f occupies sub-frames [f*L, (f+1)*L), one RAO per sub-frame.
Devices arriving during frame f contend in frame f+1 with the signature
derived from f2(SK, RAND_{f+1}). A device decoded in RAO i completes access at
the end of that sub-frame and exchanges RRC Connection Setup (downlink, with
the f1 MAC) and Setup Complete + data (uplink).
"""
from __future__ import annotations

import numpy as np

from sigaccess.auth_kdf import AuthChallenge, f1_batch, f2_batch, generate_keys
from sigaccess.channel import detect
from sigaccess.decoder import CandidateRegistry, DecodeTrace, IterativeDecoder
from sigaccess.signature import SignatureParams
from sigaccess.simulator.config import AccessLog, AccessMetrics, ScenarioConfig

# frames run after the arrival horizon to flush contenders
DRAIN_FRAMES = 50
# RRC Connection Setup + Setup Complete with data
POST_DECODE_MESSAGES = 2
SQN = 1
AMF = 0x8000


class MessageBoundViolation(RuntimeError):
    pass


def _duplicate_signatures(reg: CandidateRegistry) -> int:
    """Devices whose frame signature equals another device's."""
    rows = np.concatenate([reg.rao, reg.pre], axis=1)
    _, counts = np.unique(rows, axis=0, return_counts=True)
    return int(counts[counts > 1].sum())


def run_signature_sim(config: ScenarioConfig, *, keep_traces: bool = False):
    """Returns ``(AccessMetrics, traces)``; traces are per-frame DecodeTraces if requested."""
    if config.protocol != "signature":
        raise ValueError(f"run_signature_sim got protocol {config.protocol!r}")
    T, K, M = config.T, config.K, config.M
    L = config.frame_length()
    params = SignatureParams(L, K, M)
    model = config.detection
    rng = np.random.default_rng(np.random.SeedSequence(config.seed))
    keys = generate_keys(T, rng)
    p_arrive = config.lam / T
    # protocol bound: K preambles, the grant and the data
    msg_bound = K + 2

    busy = np.zeros(T, dtype=bool)
    log = AccessLog()
    metrics = AccessMetrics(L=L)
    traces: list[DecodeTrace] = []
    exposed: list[int] = []

    # contenders for the coming frame: device ids and arrival times (sub-frames)
    next_ids: list[np.ndarray] = []
    next_times: list[np.ndarray] = []

    leftover = 0
    frame = 0
    while True:
        ids = np.concatenate(next_ids) if next_ids else np.zeros(0, dtype=np.int64)
        arrived = np.concatenate(next_times) if next_times else np.zeros(0)
        next_ids, next_times = [], []
        open_arrivals = frame < config.n_frames
        if not open_arrivals and (len(ids) == 0 or frame >= config.n_frames + DRAIN_FRAMES):
            leftover = len(ids)
            break
        start = frame * L
        metrics.frames_run += 1

        dec = None
        if len(ids):
            challenge = AuthChallenge(rng.bytes(16), SQN, AMF)
            reg = CandidateRegistry.from_res(f2_batch(keys, challenge.rand), params)
            metrics.collision_count += _duplicate_signatures(reg)
            active = np.zeros(T, dtype=bool)
            active[ids] = True
            dec = IterativeDecoder(reg, feedback=True, active=active, record=keep_traces, confirm=config.peel_confirm())
            # contenders' slots grouped by RAO
            fr = reg.rao[ids].ravel()
            order = np.argsort(fr, kind="stable")
            c_dev = np.repeat(ids, K)[order]
            c_pre = reg.pre[ids].ravel()[order]
            bounds = np.searchsorted(fr[order], np.arange(L + 1))
            sent_count = np.zeros(T, dtype=np.int64)
            frame_exposed = 0
            finished_at = {}

        for i in range(L):
            t = start + i
            decoded_now = []
            if dec is not None:
                devs = c_dev[bounds[i] : bounds[i + 1]]
                pres = c_pre[bounds[i] : bounds[i + 1]]
                still = dec.decoded_at[devs] >= i
                sent = np.zeros(M, dtype=bool)
                sent[pres[still]] = True
                np.add.at(sent_count, devs[still], 1)
                frame_exposed += int(sent.sum())
                detected = detect(sent, model, rng)
                if not dec.done:
                    decoded_now = dec.push(detected)
                    for h in decoded_now:
                        finished_at[h] = t + 1

            if open_arrivals:
                idle = np.flatnonzero(~busy)
                metrics.appended_payloads += int(rng.binomial(T - len(idle), p_arrive))
                n = rng.binomial(len(idle), p_arrive)
                if n:
                    who = rng.choice(idle, size=n, replace=False)
                    busy[who] = True
                    next_ids.append(who)
                    next_times.append(t + rng.random(n))

            if decoded_now:
                done_ids = np.asarray(decoded_now)
                busy[done_ids[active[done_ids]]] = False

        if dec is None:
            frame += 1
            continue

        end_rao = dec.obs.received
        for h in dec.finish():
            finished_at[h] = start + end_rao
            if active[h]:
                busy[h] = False
        if keep_traces:
            traces.append(dec.trace)
        exposed.append(frame_exposed)

        declared = np.fromiter(finished_at.keys(), dtype=np.int64, count=len(finished_at))
        ok_ids = declared[active[declared]]
        fp = len(declared) - len(ok_ids)
        metrics.false_positive_count += fp
        if len(declared):
            log.frame_goodputs.append(len(ok_ids) / len(declared))

        # network authentication: device recomputes the MAC sent with RRC Connection Setup
        if len(ok_ids):
            bs_mac = f1_batch(keys[ok_ids], challenge)
            ue_mac = f1_batch(keys[ok_ids], challenge)
            metrics.auth_failures += int(np.count_nonzero(bs_mac != ue_mac))

        ok = np.zeros(T, dtype=bool)
        ok[ok_ids] = True
        frame_end = start + L
        for h, t_arr in zip(ids.tolist(), arrived.tolist()):
            if ok[h]:
                n_msg = int(sent_count[h]) + POST_DECODE_MESSAGES
                log.record((finished_at[h] - t_arr) * config.t_s, n_msg, True)
            else:
                n_msg = int(sent_count[h])
                log.record((frame_end - t_arr) * config.t_s, n_msg, False)
                # the device still holds its data and retries in the next frame
                next_ids.append(np.array([h]))
                next_times.append(np.array([float(frame_end)]))
            if n_msg > msg_bound:
                raise MessageBoundViolation(f"device {h} sent {n_msg} > K+2 messages")
        frame += 1

    log.fill(metrics, in_progress=leftover)
    metrics.mean_exposed_preambles = float(np.mean(exposed)) if exposed else 0.0
    return metrics, traces
