"""Baseline LTE random access followed by the post-access exchanges.

One RAO every ``delta_RAO`` sub-frames. A contender picks a uniform preamble
and the channel detects each preamble independently. An attempt in RAO t
then goes one of three ways:

* preamble missed: no RAR; retry at the first RAO after
  t + delta_RAR + U{0..W-1}. One message.
* preamble detected, one sender: RAR at t+3, RRC Connection Request at t+5,
  contention resolution at t+8. Access completes there.
* preamble detected, several senders: all read the RAR and collide in msg3.
  No resolution arrives; retry after t + 5 + delta_CR + U{0..W-1}. Three
  messages each.

A device that has used R attempts fails when its last wait expires.
Detected but unsent preambles (false alarms) get a RAR that nobody uses.
"""
from __future__ import annotations

import numpy as np

from sigaccess.channel import detect
from sigaccess.simulator.config import AccessLog, AccessMetrics, ScenarioConfig

RAR_DELAY = 3
MSG3_DELAY = 5
CR_DELAY = 8

# preamble, RAR, RRC Connection Request, contention resolution
ACCESS_MESSAGES = 4
# preamble, RAR, colliding RRC Connection Request
COLLIDED_MESSAGES = 3
# after access: auth request/response and security mode command/complete,
# RRC reconfiguration pair, data
POST_ACCESS_MESSAGES = {"lte_full": 4 + 2 + 1, "lte_mtc": 2}

# sub-frames allowed after the arrival horizon; attempts are bounded by R so
# this is only a guard
_DRAIN_GUARD = 10**6


def run_lte_sim(config: ScenarioConfig) -> AccessMetrics:
    if config.protocol not in POST_ACCESS_MESSAGES:
        raise ValueError(f"run_lte_sim got protocol {config.protocol!r}")
    T, M, R, W = config.T, config.M, config.R, config.W
    step = config.delta_RAO
    post = POST_ACCESS_MESSAGES[config.protocol]
    model = config.detection
    rng = np.random.default_rng(np.random.SeedSequence(config.seed))
    p_arrive = config.lam / T
    horizon = config.n_frames

    # next transmission sub-frame per device; inf when idle
    next_tx = np.full(T, np.inf)
    arrived = np.zeros(T)
    attempts = np.zeros(T, dtype=np.int64)
    msgs = np.zeros(T, dtype=np.int64)

    # out of attempts; next_tx then holds the time the failure is declared
    failing = np.zeros(T, dtype=bool)

    log = AccessLog()
    metrics = AccessMetrics()

    def first_rao(t):
        return np.ceil(t / step) * step

    def give_up_or_retry(devs, ready):
        last = attempts[devs] >= R
        failing[devs[last]] = True
        next_tx[devs[last]] = ready[last]
        keep = ~last
        backoff = rng.integers(0, W, size=int(keep.sum()))
        next_tx[devs[keep]] = first_rao(ready[keep] + backoff)

    t = 0
    while True:
        if t >= horizon and not np.isfinite(next_tx).any():
            break
        if t >= horizon + _DRAIN_GUARD:
            break
        metrics.frames_run += 1

        due = next_tx <= t
        quit_ = np.flatnonzero(due & failing)
        for h in quit_.tolist():
            log.record((next_tx[h] - arrived[h]) * config.t_s, int(msgs[h]), False)
        next_tx[quit_] = np.inf
        failing[quit_] = False

        due[quit_] = False
        contenders = np.flatnonzero(due)
        choice = rng.integers(0, M, size=len(contenders))
        attempts[contenders] += 1
        msgs[contenders] += 1
        senders = np.bincount(choice, minlength=M)
        detected = detect(senders > 0, model, rng)

        hit = detected[choice]
        single = hit & (senders[choice] == 1)
        collided = hit & ~single
        missed = ~hit

        ok = contenders[single]
        if len(ok):
            msgs[ok] += ACCESS_MESSAGES - 1 + post
            done_at = t + CR_DELAY
            for h in ok.tolist():
                log.record((done_at - arrived[h]) * config.t_s, int(msgs[h]), True)
            next_tx[ok] = np.inf

        bad = contenders[collided]
        if len(bad):
            msgs[bad] += COLLIDED_MESSAGES - 1
            metrics.collision_count += int(np.count_nonzero(detected & (senders > 1)))
            give_up_or_retry(bad, np.full(len(bad), float(t + MSG3_DELAY + config.delta_CR)))
        lost = contenders[missed]
        if len(lost):
            give_up_or_retry(lost, np.full(len(lost), float(t + config.delta_RAR)))

        grants = int(detected.sum())
        if grants:
            log.frame_goodputs.append(len(ok) / grants)
            metrics.false_positive_count += int(np.count_nonzero(detected & (senders == 0)))

        # arrivals over the coming RAO period contend in the next RAO
        if t < horizon:
            idle = np.flatnonzero(~np.isfinite(next_tx))
            busy = T - len(idle)
            metrics.appended_payloads += int(rng.binomial(busy, p_arrive)) if busy else 0
            n = rng.binomial(len(idle), p_arrive)
            if n:
                who = rng.choice(idle, size=n, replace=False)
                arrived[who] = t + step * rng.random(n)
                attempts[who] = 0
                msgs[who] = 0
                next_tx[who] = t + step
        t += step

    busy_left = int(np.isfinite(next_tx).sum())
    log.fill(metrics, in_progress=busy_left)
    return metrics
