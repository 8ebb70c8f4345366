"""Paired t-test over per-fold scores, with a self-contained Student-t tail."""

import math
from dataclasses import dataclass
from typing import Sequence

from .errors import DegenerateTestError

_FPMIN = 1e-300
_EPS = 1e-15
_MAX_ITER = 500


def _betacf(a, b, x):
    """Continued fraction for the incomplete beta function (modified Lentz)."""
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = 1.0 / (d if abs(d) > _FPMIN else _FPMIN)
    h = d
    for m in range(1, _MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > _FPMIN else _FPMIN)
        c = 1.0 + aa / c
        c = c if abs(c) > _FPMIN else _FPMIN
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > _FPMIN else _FPMIN)
        c = 1.0 + aa / c
        c = c if abs(c) > _FPMIN else _FPMIN
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b)."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must lie in [0, 1], got {x}")
    if x in (0.0, 1.0):
        return x
    log_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                 + a * math.log(x) + b * math.log1p(-x))
    # the fraction converges fast only on one side of the mean
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(log_front) * _betacf(a, b, x) / a
    return 1.0 - math.exp(log_front) * _betacf(b, a, 1.0 - x) / b


def t_sf(t: float, df: float) -> float:
    """P(T > t) for Student's t with ``df`` degrees of freedom."""
    if math.isinf(t):
        return 0.0 if t > 0 else 1.0
    t2 = t * t
    if t2 < df:
        # near t = 0, df / (df + t^2) rounds to 1; use the mirrored argument instead
        tail = 0.5 * (1.0 - betainc(0.5, df / 2.0, t2 / (df + t2)))
    else:
        tail = 0.5 * betainc(df / 2.0, 0.5, df / (df + t2))
    return tail if t >= 0 else 1.0 - tail


def t_cdf(t: float, df: float) -> float:
    return 1.0 - t_sf(t, df) if t >= 0 else t_sf(-t, df)


@dataclass(frozen=True)
class TTestResult:
    t: float
    p: float
    df: int
    mean_difference: float


def paired_t_test(scores_a: Sequence[float], scores_b: Sequence[float]) -> TTestResult:
    """Paired t-test on fold-wise differences ``a - b``.

    ``p`` is one-sided in the direction of the observed difference, i.e.
    ``P(T >= |t|)``.  Zero-variance differences make the statistic undefined
    and raise :class:`DegenerateTestError`.
    """
    a, b = list(map(float, scores_a)), list(map(float, scores_b))
    if len(a) != len(b):
        raise ValueError(f"score lists differ in length ({len(a)} vs {len(b)})")
    k = len(a)
    if k < 2:
        raise ValueError("need at least two paired scores")
    diffs = [x - y for x, y in zip(a, b)]
    mean = math.fsum(diffs) / k
    var = math.fsum((d - mean) ** 2 for d in diffs) / (k - 1)
    # relative guard: differences like 3-1, 4-2 are not bitwise identical after fp rounding
    scale = max(1.0, max(abs(d) for d in diffs))
    if var <= (1e-12 * scale) ** 2:
        kind = "all-zero" if all(d == 0 for d in diffs) else "constant"
        raise DegenerateTestError(f"{kind} differences: zero variance, t is undefined")
    t = mean / math.sqrt(var / k)
    return TTestResult(t, t_sf(abs(t), k - 1), k - 1, mean)
