"""Signature and LTE access simulators behind one entry point."""
from sigaccess.simulator.config import AccessMetrics, DeviceStatus, ScenarioConfig, PROTOCOLS
from sigaccess.simulator.lte_sim import run_lte_sim
from sigaccess.simulator.signature_sim import MessageBoundViolation, run_signature_sim


def run(config: ScenarioConfig) -> AccessMetrics:
    if config.protocol == "signature":
        return run_signature_sim(config)[0]
    return run_lte_sim(config)


__all__ = [
    "AccessMetrics",
    "DeviceStatus",
    "MessageBoundViolation",
    "PROTOCOLS",
    "ScenarioConfig",
    "run",
    "run_lte_sim",
    "run_signature_sim",
]
