"""Rubin's rules: combine per-imputation analyses into one pooled estimate.

Each completed dataset yields a point estimate and its squared standard
error.  Pooling averages the estimates, splits the variance into within-
and between-imputation parts, and derives the fraction of missing
information and the degrees of freedom of the variance estimate.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .fmi import GammaInterval, clamp_gamma, gamma_ci
from .quantiles import t_quantile

RESULTS_CSV_HEADER = ("imputation", "estimate", "variance")


@dataclass(frozen=True)
class ImputationResult:
    """One analysis of one completed dataset.

    ``estimate`` is the point estimate; ``within_variance`` is its squared
    standard error, both computed as though the dataset were complete.
    """

    estimate: float
    within_variance: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.estimate):
            raise ValueError(f"invalid input: estimate must be finite, got {self.estimate!r}")
        if not math.isfinite(self.within_variance) or self.within_variance < 0.0:
            raise ValueError(
                "invalid input: within_variance must be finite and >= 0, "
                f"got {self.within_variance!r}"
            )


@dataclass(frozen=True)
class PooledAnalysis:
    """Pooled output across m imputations.

    v_total = w_bar + (1 + 1/m) * b; se = sqrt(v_total).
    gamma_hat = (1 + 1/m) * b / v_total, clamped into [eps, 1-eps];
    gamma_raw keeps the unclamped value for diagnostics.
    df_hat = (m - 1) / gamma_hat**2 is the large-sample df of v_total.
    """

    m: int
    theta: float
    w_bar: float
    b: float
    v_total: float
    se: float
    gamma_hat: float
    gamma_raw: float
    df_hat: float
    gamma_interval: GammaInterval
    theta_interval: tuple[float, float]
    level: float


def pool(
    results: Iterable[ImputationResult | Sequence[float]],
    level: float = 0.95,
) -> PooledAnalysis:
    """Pool per-imputation results with Rubin's rules.

    Parameters
    ----------
    results : iterable of ImputationResult (or (estimate, variance) pairs)
        One entry per imputation; at least two are required.
    level : float
        Confidence level for both the gamma interval and the interval
        for the pooled estimate.

    Returns
    -------
    PooledAnalysis
    """
    if not (0.0 < level < 1.0):
        raise ValueError(f"domain error: level must be in (0, 1), got {level!r}")
    items = [r if isinstance(r, ImputationResult) else ImputationResult(*r) for r in results]
    m = len(items)
    if m < 2:
        raise ValueError(f"insufficient imputations: need at least 2, got {m}")

    estimates = np.array([r.estimate for r in items], dtype=np.float64)
    withins = np.array([r.within_variance for r in items], dtype=np.float64)
    # Canonical ordering makes the result bit-identical under permutation
    # of the inputs.
    order = np.lexsort((withins, estimates))
    estimates = estimates[order]
    withins = withins[order]

    theta = float(np.mean(estimates))
    b = float(np.var(estimates, ddof=1))
    w_bar = float(np.mean(withins))
    v_total = w_bar + (1.0 + 1.0 / m) * b
    if not v_total > 0.0:
        raise ValueError("invalid input: pooled variance must be positive")
    se = math.sqrt(v_total)

    gamma_raw = (1.0 + 1.0 / m) * b / v_total
    gamma_hat = clamp_gamma(gamma_raw)
    df_hat = (m - 1) / (gamma_hat * gamma_hat)

    interval = gamma_ci(gamma_hat, m, level)
    half = t_quantile(0.5 * (1.0 + level), df_hat) * se
    return PooledAnalysis(
        m=m,
        theta=theta,
        w_bar=w_bar,
        b=b,
        v_total=v_total,
        se=se,
        gamma_hat=gamma_hat,
        gamma_raw=gamma_raw,
        df_hat=df_hat,
        gamma_interval=interval,
        theta_interval=(theta - half, theta + half),
        level=level,
    )


def read_results_csv(path: str) -> list[ImputationResult]:
    """Read per-imputation results from CSV.

    The header must be exactly ``imputation,estimate,variance``; extra
    columns are rejected.  Rows may appear in any order; duplicate
    imputation indices are an error.  Returns results ordered by index.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"invalid input: {path}: empty file") from None
        if tuple(h.strip() for h in header) != RESULTS_CSV_HEADER:
            raise ValueError(
                f"invalid input: {path}: header must be "
                f"{','.join(RESULTS_CSV_HEADER)!r}, got {','.join(header)!r}"
            )
        rows: dict[int, ImputationResult] = {}
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ValueError(f"invalid input: {path}:{lineno}: expected 3 columns")
            try:
                index = int(row[0])
                result = ImputationResult(float(row[1]), float(row[2]))
            except ValueError as exc:
                raise ValueError(f"invalid input: {path}:{lineno}: {exc}") from None
            if index < 1:
                raise ValueError(
                    f"invalid input: {path}:{lineno}: imputation index must be >= 1"
                )
            if index in rows:
                raise ValueError(
                    f"invalid input: {path}:{lineno}: duplicate imputation index {index}"
                )
            rows[index] = result
    return [rows[i] for i in sorted(rows)]
