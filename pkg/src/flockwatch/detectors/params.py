"""Detector thresholds, all in one place and loadable from a params file."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from ..domain import ConfigurationError

YEAR_SECONDS = 365 * 86400


@dataclass(frozen=True)
class DetectorParams:
    baseline_window: int = 30        # trailing samples for the running baseline
    theta_abs: int = 50              # absolute event-open threshold
    mad_k: float = 5.0               # threshold = max(theta_abs, mad_k * MAD of deltas)
    recovery_eps: float = 0.1        # spike recovery tolerance, fraction of peak deviation
    recovery_horizon: int = 60       # samples to wait for recovery / persistence
    saw_max_fall: int = 3            # samples a sawtooth drop may take to complete
    noise_margin: int = 3            # rank-inversion margin for circulation detection
    min_gap_seconds: int = YEAR_SECONDS
    stratigraphy_batch: int = 5000
    inversion_min_run: int = 10
    critical_effect: int = 15_000_000
    circulation_bucket: int = 86400

    def validate(self) -> "DetectorParams":
        if self.baseline_window < 2:
            raise ConfigurationError("baseline_window must be >= 2")
        if self.recovery_horizon < self.baseline_window:
            raise ConfigurationError(
                "recovery_horizon must be >= baseline_window so the baseline "
                "re-seeds from post-event samples"
            )
        for name in ("theta_abs", "mad_k", "recovery_eps", "saw_max_fall",
                     "min_gap_seconds", "stratigraphy_batch", "inversion_min_run",
                     "critical_effect", "circulation_bucket"):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"{name} must be > 0")
        if self.noise_margin < 0:
            raise ConfigurationError("noise_margin must be >= 0")
        return self


def load_params(path: str | Path) -> DetectorParams:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigurationError(f"params file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from exc
    known = set(DetectorParams.__dataclass_fields__)
    unknown = set(doc) - known
    if unknown:
        raise ConfigurationError(f"{path}: unknown params fields {sorted(unknown)}")
    return DetectorParams(**doc).validate()
