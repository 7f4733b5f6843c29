"""Hypothesis tests used to judge per-run g2 samples."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri
from scipy.stats import norm, t as student_t


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    dof: float | None = None


def _sample(x, name: str, min_size: int) -> np.ndarray:
    x = np.asarray(x, dtype=float).ravel()
    if x.size < min_size:
        raise ValueError(f"{name} needs at least {min_size} values, got {x.size}")
    if not np.isfinite(x).all():
        raise ValueError(f"{name} contains non-finite values")
    return x


def welch_test_one_sided(sample_a, sample_b) -> TestResult:
    """H0: equal means; alternative: mean(a) > mean(b). Welch-Satterthwaite dof."""
    a = _sample(sample_a, "sample_a", 2)
    b = _sample(sample_b, "sample_b", 2)
    va, vb = a.var(ddof=1) / a.size, b.var(ddof=1) / b.size
    if va + vb == 0:
        raise ValueError("both samples have zero variance")
    t = (a.mean() - b.mean()) / np.sqrt(va + vb)
    dof = (va + vb) ** 2 / (va**2 / (a.size - 1) + vb**2 / (b.size - 1))
    return TestResult(float(t), float(student_t.sf(t, dof)), float(dof))


def t_test_one_sample_two_sided(sample, mu0: float) -> TestResult:
    x = _sample(sample, "sample", 2)
    sd = x.std(ddof=1)
    if sd == 0:
        raise ValueError("sample has zero variance")
    t = (x.mean() - mu0) / (sd / np.sqrt(x.size))
    dof = x.size - 1
    return TestResult(float(t), float(min(1.0, 2.0 * student_t.sf(abs(t), dof))), float(dof))


# Royston (1995), algorithm AS R94
_C1 = (0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056)
_C2 = (0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633)
_C3 = (0.5440, -0.39978, 0.025054, -6.714e-4)
_C4 = (1.3822, -0.77857, 0.062767, -0.0020322)
_C5 = (-1.5861, -0.31082, -0.083751, 0.0038915)
_C6 = (-0.4803, -0.082676, 0.0030302)
_G = (-2.273, 0.459)


def _poly(coef, x):
    return sum(c * x**k for k, c in enumerate(coef))


def shapiro_weights(n: int) -> np.ndarray:
    """Antisymmetric Shapiro-Wilk coefficients for sample size ``n`` (ascending order)."""
    if n < 3:
        raise ValueError("Shapiro-Wilk needs n >= 3")
    half = n // 2
    if n == 3:
        a = np.zeros(3)
        a[0], a[2] = -np.sqrt(0.5), np.sqrt(0.5)
        return a
    i = np.arange(1, n + 1)
    m = ndtri((i - 0.375) / (n + 0.25))
    summ2 = float(m @ m)
    ssumm2 = np.sqrt(summ2)
    rsn = 1.0 / np.sqrt(n)
    upper = np.empty(half)
    a_n = _poly(_C1, rsn) + m[-1] / ssumm2
    if n > 5:
        a_n1 = _poly(_C2, rsn) + m[-2] / ssumm2
        fac = np.sqrt((summ2 - 2 * m[-1] ** 2 - 2 * m[-2] ** 2) / (1 - 2 * a_n**2 - 2 * a_n1**2))
        upper[0], upper[1] = a_n, a_n1
        start = 2
    else:
        fac = np.sqrt((summ2 - 2 * m[-1] ** 2) / (1 - 2 * a_n**2))
        upper[0] = a_n
        start = 1
    upper[start:] = m[::-1][start:half] / fac
    a = np.zeros(n)
    a[n - half :] = upper[::-1]
    a[:half] = -upper
    return a


def shapiro_wilk(sample) -> TestResult:
    x = np.sort(_sample(sample, "sample", 3))
    n = x.size
    if n > 5000:
        raise ValueError("Shapiro-Wilk approximation is valid for n <= 5000")
    ssq = ((x - x.mean()) ** 2).sum()
    if ssq == 0:
        raise ValueError("sample is constant")
    a = shapiro_weights(n)
    W = min(1.0, float((a @ x) ** 2 / ssq))

    if n == 3:
        p = 6.0 / np.pi * (np.arcsin(np.sqrt(W)) - np.arcsin(np.sqrt(0.75)))
        return TestResult(W, float(max(0.0, min(1.0, p))))
    y = np.log1p(-W) if W < 1 else -np.inf
    if n <= 11:
        gamma = _poly(_G, n)
        if y >= gamma:
            return TestResult(W, 1e-99)
        y = -np.log(gamma - y)
        mean, sd = _poly(_C3, n), np.exp(_poly(_C4, n))
    else:
        ln = np.log(n)
        mean, sd = _poly(_C5, ln), np.exp(_poly(_C6, ln))
    return TestResult(W, float(norm.sf((y - mean) / sd)))
