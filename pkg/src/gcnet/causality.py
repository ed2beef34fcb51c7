"""Kernel-weighted cross-correlation causality tests on standardized residuals.

The statistic is a standardized sum of squared cross-lagged correlations
with Bartlett weights.  Because the Bartlett kernel has compact support,
only correlations up to lag M-1 contribute for bandwidth M.  Under the
null of no spillover the statistic is asymptotically standard normal and
the test is one-sided (upper tail).

Two variants are provided: the lagged form summing k >= 1, and an
instantaneous form that also includes the k = 0 correlation, intended for
pairs of markets whose closing instants coincide.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "CcfResult",
    "CausalityDecision",
    "bartlett_weight",
    "cross_correlations",
    "hong_q",
    "normal_upper_tail",
    "decide",
    "bonferroni_level",
]


@dataclass(frozen=True)
class CcfResult:
    """Cross-lagged correlations rho[k], k = 0..max_lag, on T observations.

    rho[k] correlates the current value of the first (target) series with
    the k-steps-earlier value of the second (source) series; all sums use
    divisor T.
    """

    source_id: str
    target_id: str
    rho: np.ndarray
    sample_size: int


@dataclass(frozen=True)
class CausalityDecision:
    source_id: str
    target_id: str
    statistic: float
    variant: str  # "lagged" | "instantaneous"
    p_value: float
    reject: bool
    level: float


def bartlett_weight(z: float) -> float:
    """Triangular kernel: 1 - |z| inside the unit interval, 0 outside."""
    az = abs(z)
    if not math.isfinite(az):
        raise ValueError("non-finite kernel argument")
    return 1.0 - az if az < 1.0 else 0.0


def cross_correlations(
    s_target: np.ndarray,
    s_source: np.ndarray,
    max_lag: int,
    source_id: str = "source",
    target_id: str = "target",
) -> CcfResult:
    """Sample cross-correlations of the target with the lagged source.

    rho[k] = C(k) / sqrt(C_tt(0) C_ss(0)) with
    C(k) = (1/T) sum_{t=k+1..T} target_t * source_{t-k}; the divisor is T
    for every lag and no demeaning is applied (inputs are standardized
    residuals).
    """
    x = np.asarray(s_target, dtype=float)
    y = np.asarray(s_source, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("residual vectors must be 1-d and of equal length")
    T = x.size
    if T <= max_lag:
        raise ValueError(f"sample size {T} must exceed max_lag {max_lag}")
    c_tt = float(x @ x) / T
    c_ss = float(y @ y) / T
    if c_tt <= 0.0 or c_ss <= 0.0:
        raise ValueError("zero variance in residual vector")
    denom = math.sqrt(c_tt * c_ss)
    rho = np.empty(max_lag + 1)
    for k in range(max_lag + 1):
        rho[k] = (float(x[k:] @ y[: T - k]) / T) / denom
    return CcfResult(source_id, target_id, rho, T)


def hong_q(ccf: CcfResult, bandwidth: int, include_k0: bool = False) -> float:
    """Standardized kernel-weighted spillover statistic.

    The leading sum runs over k >= 1 (or k >= 0 when ``include_k0``), while
    the centering and variance sums always start at k = 1.  Thanks to the
    kernel's compact support only lags below ``bandwidth`` contribute, so a
    ccf computed up to bandwidth-1 gives exactly the full-sum value.
    """
    M = int(bandwidth)
    T = ccf.sample_size
    if M < 2:
        raise ValueError("bandwidth must be at least 2")
    if T <= M:
        raise ValueError(f"sample size {T} must exceed bandwidth {M}")
    kmax = min(M - 1, T - 1, ccf.rho.size - 1)
    lead = 0.0
    k0 = 0 if include_k0 else 1
    for k in range(k0, kmax + 1):
        w2 = bartlett_weight(k / M) ** 2
        lead += w2 * float(ccf.rho[k]) ** 2
    center = 0.0
    spread = 0.0
    for k in range(1, min(M - 1, T - 1) + 1):
        w2 = bartlett_weight(k / M) ** 2
        center += (1.0 - k / T) * w2
        spread += (1.0 - k / T) * (1.0 - (k + 1.0) / T) * w2 * w2
    return (T * lead - center) / math.sqrt(2.0 * spread)


def normal_upper_tail(q: float) -> float:
    """P(Z > q) for standard normal Z, accurate deep into the tail."""
    return 0.5 * math.erfc(q / math.sqrt(2.0))


def bonferroni_level(n_markets: int, family_level: float = 0.01) -> float:
    """Per-test level controlling the family error over all ordered pairs."""
    if n_markets < 2:
        raise ValueError("need at least two markets")
    return family_level / (n_markets * (n_markets - 1))


def decide(
    statistic: float,
    level: float,
    source_id: str = "source",
    target_id: str = "target",
    variant: str = "lagged",
) -> CausalityDecision:
    """One-sided decision: reject no-spillover when 1 - Phi(Q) < level."""
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    p = normal_upper_tail(statistic)
    return CausalityDecision(
        source_id, target_id, float(statistic), variant, p, p < level, level
    )
