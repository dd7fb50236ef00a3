"""Shared helpers: pilots engineered to hit exact pooled statistics."""

from __future__ import annotations

import math

import pytest

from miplan import ImputationResult


def make_pilot_results(
    m: int,
    gamma_hat: float,
    se: float,
    theta: float = 16.642,
) -> list[ImputationResult]:
    """Build m per-imputation results whose pooled analysis reproduces the
    requested gamma_hat and se (to float precision).

    Uses estimates symmetric about theta so the mean is exact, with every
    within-variance equal; m must be odd so the symmetric layout exists.
    """
    assert m % 2 == 1, "symmetric construction needs odd m"
    v_total = se * se
    b = gamma_hat * v_total / (1.0 + 1.0 / m)
    w = v_total - (1.0 + 1.0 / m) * b
    half = m // 2
    offsets = list(range(-half, half + 1))
    # sample variance of the offsets, divisor m - 1
    denom = sum(k * k for k in offsets) / (m - 1)
    step = math.sqrt(b / denom)
    return [ImputationResult(theta + k * step, w) for k in offsets]


@pytest.fixture
def pilot_csv_factory(tmp_path):
    """Write an imputation,estimate,variance CSV and return its path."""

    def write(results, name="pilot.csv"):
        path = tmp_path / name
        lines = ["imputation,estimate,variance"]
        for i, r in enumerate(results, start=1):
            lines.append(f"{i},{r.estimate!r},{r.within_variance!r}")
        path.write_text("\n".join(lines) + "\n")
        return str(path)

    return write
