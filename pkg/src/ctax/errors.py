"""Exception types shared across the harness."""

from __future__ import annotations


class ConfigError(ValueError):
    """Raised for invalid configuration: unknown family or mode, a schema
    outside the supported keyword subset, or a constrained request with no
    transport mapping for its constraint kind."""


class PairingError(ValueError):
    """Raised when a paired comparison receives mismatched instance-id sets."""

    def __init__(self, missing_in_baseline: list[str], missing_in_constrained: list[str]):
        self.missing_in_baseline = list(missing_in_baseline)
        self.missing_in_constrained = list(missing_in_constrained)
        parts = []
        if missing_in_baseline:
            parts.append(f"missing in baseline: {', '.join(missing_in_baseline[:5])}"
                         + (" ..." if len(missing_in_baseline) > 5 else ""))
        if missing_in_constrained:
            parts.append(f"missing in constrained: {', '.join(missing_in_constrained[:5])}"
                         + (" ..." if len(missing_in_constrained) > 5 else ""))
        super().__init__("instance sets differ; " + "; ".join(parts))


class GenerationFailed(RuntimeError):
    """Raised by the endpoint backend after bounded retries are exhausted.

    The harness converts this into a generation_failed record rather than
    aborting the run.
    """
