"""Central tolerance profile.

Every numerical slack used by the oracles lives here so that experiments can
be rerun with a single knob changed.
"""
from dataclasses import dataclass, replace


@dataclass(frozen=True)
class ToleranceProfile:
    membership: float = 1e-9
    bisection_rel: float = 1e-10
    stationarity: float = 1e-8
    witness: float = 1e-7
    audit_slack: float = 1e-6

    def with_(self, **changes):
        return replace(self, **changes)


DEFAULT = ToleranceProfile()
