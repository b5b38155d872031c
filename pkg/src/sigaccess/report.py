"""CSV records for sweep results and the worked decoding example."""
from __future__ import annotations

import csv
import math
from dataclasses import astuple, dataclass, fields

from sigaccess.decoder import CandidateRegistry, DecodeTrace, IterativeDecoder
from sigaccess.signature import Signature, SignatureParams
from sigaccess.simulator.sweep import SweepResult


@dataclass
class RunRecord:
    """One CSV row per (config, aggregate). Column order is part of the format."""

    protocol: str
    T: int
    M: int
    K: int
    lambda_: float
    L: int | None
    G_target: float
    p_d: float
    p_f: float
    n_frames: int
    replications: int
    goodput_mean: float
    goodput_ci95: float
    reliability_mean: float
    reliability_ci95: float
    latency_ms_mean: float
    latency_ms_ci95: float
    messages_mean: float
    messages_ci95: float
    false_positives_total: int
    collisions_total: int


COLUMNS = tuple(f.name.rstrip("_") for f in fields(RunRecord))


def record(res: SweepResult) -> RunRecord:
    c, e = res.config, res.estimates
    return RunRecord(
        c.protocol, c.T, c.M, c.K, c.lam, res.L, c.G_target, c.p_d, c.p_f, c.n_frames,
        res.replications,
        e["goodput"].mean, e["goodput"].ci95,
        e["reliability"].mean, e["reliability"].ci95,
        e["mean_latency"].mean, e["mean_latency"].ci95,
        e["mean_messages"].mean, e["mean_messages"].ci95,
        res.totals["false_positive_count"], res.totals["collision_count"],
    )


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        # NaN marks a CI from a single replication
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def write_csv(records, fp) -> None:
    """Header always, then one row per record."""
    w = csv.writer(fp, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in records:
        w.writerow([_cell(v) for v in astuple(r)])


# worked decoding example: four devices, two active, noiseless channel
DEMO_PARAMS = SignatureParams(L=4, K=3, M=3)
DEMO_SIGNATURES = (
    "(2,2);(3,3);(4,1)",
    "(1,2);(3,1);(4,3)",
    "(1,1);(2,2);(3,3)",
    "(1,1);(2,3);(4,2)",
)
DEMO_ACTIVE = (0, 2)


def demo_label(h: int) -> str:
    return f"s{h + 1}"


def run_demo() -> DecodeTrace:
    sigs = [Signature.parse(s) for s in DEMO_SIGNATURES]
    reg = CandidateRegistry.from_signatures(sigs, DEMO_PARAMS)
    dec = IterativeDecoder(reg, feedback=True, active=DEMO_ACTIVE)
    for rao in range(1, DEMO_PARAMS.L + 1):
        # only active devices not yet told to stop transmit in this RAO
        live = dec.transmitting(rao)
        sent = {p for h in DEMO_ACTIVE if live[h] for r, p in sigs[h].slots if r == rao}
        dec.push(sent)
        if dec.done:
            break
    dec.finish()
    return dec.trace


def demo_text(trace: DecodeTrace) -> str:
    lines = []
    for i, s in enumerate(DEMO_SIGNATURES):
        tag = "active" if i in DEMO_ACTIVE else "inactive"
        lines.append(f"{demo_label(i)}: {s}  [{tag}]")
    lines.append("")
    lines.append("rao_index,event,device_id")
    lines.extend(f"{r},{k},{demo_label(d)}" for r, k, d in trace.rows())
    lines.append("")
    lines.append(f"frame terminated after RAO {trace.last_rao} of {trace.L}")
    n_dec = len(trace.declared) - len(trace.false_positives)
    lines.append(
        f"decoded {n_dec}, eliminated {len(trace.eliminated)}, false positives {len(trace.false_positives)}"
    )
    return "\n".join(lines) + "\n"
