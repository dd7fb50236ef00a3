"""Proper normal-regression imputation of one incomplete variable.

The model: an incomplete outcome y regressed on one fully observed
auxiliary x.  Each imputation first draws the regression parameters from
their posterior given the complete cases (so between-imputation variance
reflects parameter uncertainty), then fills each missing y with a draw
from the predictive distribution at its x.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .pooling import ImputationResult


def _as_readonly(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=np.float64, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class IncompleteBivariate:
    """An incomplete outcome with one fully observed auxiliary.

    ``y`` uses NaN for missing entries (None in input sequences is
    accepted and converted).  At least 4 complete cases are required so
    the residual-variance posterior has at least 2 degrees of freedom.
    """

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self) -> None:
        # float conversion turns None entries into NaN
        x = _as_readonly(self.x)
        y = _as_readonly(self.y)
        if x.ndim != 1 or y.ndim != 1 or x.shape != y.shape:
            raise ValueError("invalid input: x and y must be 1-d sequences of equal length")
        if not np.all(np.isfinite(x)):
            raise ValueError("invalid input: auxiliary x must be fully observed and finite")
        obs = ~np.isnan(y)
        if not np.all(np.isfinite(y[obs])):
            raise ValueError("invalid input: observed y values must be finite")
        if int(obs.sum()) < 4:
            raise ValueError(
                f"insufficient complete cases: need at least 4, got {int(obs.sum())}"
            )
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def missing_mask(self) -> np.ndarray:
        return np.isnan(self.y)

    @property
    def n_obs(self) -> int:
        return int((~np.isnan(self.y)).sum())


@dataclass(frozen=True)
class PosteriorDraw:
    """One draw of the imputation-model parameters."""

    beta0: float
    beta1: float
    sigma: float


@dataclass(frozen=True)
class CompletedDataset:
    """A completed copy of the data; imputed_mask marks the filled entries."""

    x: np.ndarray
    y: np.ndarray
    imputed_mask: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "y", _as_readonly(self.y))
        mask = np.array(self.imputed_mask, dtype=bool, copy=True)
        mask.setflags(write=False)
        object.__setattr__(self, "imputed_mask", mask)

    @property
    def n(self) -> int:
        return self.y.shape[0]


def fit_and_draw(data: IncompleteBivariate, rng: np.random.Generator) -> PosteriorDraw:
    """Draw regression parameters from their posterior given complete cases.

    The residual variance is drawn as (n_obs - 2) * s^2 / chi2(n_obs - 2)
    where s^2 is the least-squares residual variance; the coefficients are
    drawn from a bivariate normal centered at the least-squares fit with
    covariance sigma^2 * (X'X)^-1.  Consumes exactly one chi-square and
    two normal variates from ``rng``.
    """
    obs = ~data.missing_mask
    xo = data.x[obs]
    yo = data.y[obs]
    n_obs = xo.shape[0]
    if n_obs < 4:
        raise ValueError(f"insufficient complete cases: need at least 4, got {n_obs}")

    x_mean = float(np.mean(xo))
    y_mean = float(np.mean(yo))
    dx = xo - x_mean
    dy = yo - y_mean
    sxx = float(dx @ dx)
    if sxx <= 0.0:
        raise ValueError("singular design: auxiliary x is constant among complete cases")
    sxy = float(dx @ dy)
    syy = float(dy @ dy)

    slope = sxy / sxx
    rss = max(syy - slope * sxy, 0.0)
    s2 = rss / (n_obs - 2)

    chi2 = rng.chisquare(n_obs - 2)
    sigma = math.sqrt((n_obs - 2) * s2 / chi2)
    z0, z1 = rng.standard_normal(2)
    beta1 = slope + sigma * float(z1) / math.sqrt(sxx)
    beta0 = (y_mean + sigma * float(z0) / math.sqrt(n_obs)) - beta1 * x_mean
    return PosteriorDraw(beta0=beta0, beta1=beta1, sigma=sigma)


def impute_once(
    data: IncompleteBivariate,
    draw: PosteriorDraw,
    rng: np.random.Generator,
) -> CompletedDataset:
    """Fill the missing y values from the predictive distribution at ``draw``.

    Observed entries are copied bit-for-bit; each missing y_i becomes
    beta0 + beta1 * x_i + sigma * z_i with independent standard normal z_i.
    """
    mask = data.missing_mask
    y = np.array(data.y, copy=True)
    k = int(mask.sum())
    if k:
        z = rng.standard_normal(k)
        y[mask] = draw.beta0 + draw.beta1 * data.x[mask] + draw.sigma * z
    return CompletedDataset(x=data.x, y=y, imputed_mask=mask)


def impute_m(
    data: IncompleteBivariate,
    m: int,
    rng: np.random.Generator,
) -> list[CompletedDataset]:
    """m independent proper imputations: fresh parameter draw, then fill."""
    if m < 2:
        raise ValueError(f"insufficient imputations: need m >= 2, got {m}")
    return [impute_once(data, fit_and_draw(data, rng), rng) for _ in range(m)]


def analyze_mean(completed: CompletedDataset) -> ImputationResult:
    """Estimate the mean of y and its squared SE from one completed dataset."""
    n = completed.n
    if n < 2:
        raise ValueError(f"insufficient data: need n >= 2, got {n}")
    y = completed.y
    estimate = float(np.mean(y))
    within = float(np.var(y, ddof=1)) / n
    return ImputationResult(estimate=estimate, within_variance=within)
