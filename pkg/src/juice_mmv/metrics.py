"""Support detection and the two benchmark metrics.

NASE (normalized average square error) is the Monte-Carlo estimate of
``E||X - X_hat||_F^2 / E||X||_F^2`` computed as a ratio of sums over
trials, so numerator and denominator are each averaged before dividing.
SRR (support recovery rate) scores the detected active set against the
true one; the primary form is ``|S & S_hat| / (|S - S_hat| + K)`` with a
plain set difference, which leaves false alarms unpenalized, and a
symmetric-difference variant is reported alongside it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .estimator import SupportEstimate

RELATIVE = "relative"
ABSOLUTE = "absolute"


@dataclass
class TrialOutcome:
    """Per-trial raw ingredients for aggregate metrics."""

    se_num: float
    se_den: float
    s_true: np.ndarray
    s_hat: np.ndarray
    iterations: int = 0
    outer_iterations: int = 0
    wall_time: float = 0.0


def detect_support(
    X_hat: np.ndarray,
    threshold_mode: str = RELATIVE,
    threshold_value: float = 0.1,
) -> SupportEstimate:
    """Detect active devices by column norm.

    RELATIVE mode thresholds at ``threshold_value *`` the largest column
    norm (an all-zero estimate yields an empty support); ABSOLUTE mode
    uses ``threshold_value`` directly.  The comparison is strict, so a
    relative threshold of 1.0 keeps nothing.
    """
    if threshold_value < 0:
        raise ValueError("threshold_value must be >= 0")
    norms = np.linalg.norm(X_hat, axis=0)
    if threshold_mode == RELATIVE:
        tau = threshold_value * norms.max() if norms.size else 0.0
    elif threshold_mode == ABSOLUTE:
        tau = threshold_value
    else:
        raise ValueError(f"unknown threshold_mode {threshold_mode!r}")
    return SupportEstimate(indices=np.flatnonzero(norms > tau))


def srr(s_true, s_hat, K: int | None = None, symmetric: bool = False) -> float:
    """Support recovery rate.

    Default: ``|S & S_hat| / (|S \\ S_hat| + K)``, which equals 1 exactly
    when every true device is detected.  With ``symmetric=True`` the
    denominator uses the symmetric difference, additionally penalizing
    false alarms, so 1 then requires the sets to be equal.
    """
    st = set(int(i) for i in np.asarray(s_true).ravel())
    sh = set(int(i) for i in np.asarray(s_hat).ravel())
    if K is None:
        K = len(st)
    if K < 1:
        raise ValueError("K must be >= 1")
    hit = len(st & sh)
    miss = len(st - sh)
    if symmetric:
        miss += len(sh - st)
    return hit / (miss + K)


def nase(trials: list[TrialOutcome]) -> float:
    """Ratio-of-sums error energy over trials."""
    if not trials:
        raise ValueError("need at least one trial")
    num = sum(t.se_num for t in trials)
    den = sum(t.se_den for t in trials)
    if den <= 0:
        raise ValueError("zero total signal energy")
    return num / den


def nase_db(value: float) -> float:
    """NASE in decibels; 0 maps to -inf."""
    with np.errstate(divide="ignore"):
        return float(10.0 * np.log10(value))


def squared_error(X_true: np.ndarray, X_hat_full: np.ndarray) -> tuple[float, float]:
    """(||X - X_hat||_F^2, ||X||_F^2) for one trial; X_hat must be the full-size embedding."""
    num = float(np.linalg.norm(X_true - X_hat_full) ** 2)
    den = float(np.linalg.norm(X_true) ** 2)
    return num, den
