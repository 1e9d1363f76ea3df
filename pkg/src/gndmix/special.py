"""Scalar special functions used by the density, moment and shape updates.

Everything here works on plain Python floats. The shape M-step calls these a
handful of times per iteration, so there is no need for array versions.
"""

import math
from fractions import Fraction

_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)

# Below this argument the recurrences shift x upward before using the
# asymptotic series.
_ASYMPTOTIC_CUTOFF = 15.0

# B_2k / (2k (2k - 1)) for the Stirling series of log-gamma.
_STIRLING = (
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
)

# B_2k / (2k) for the digamma series.
_DIGAMMA = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
)

# B_2k for the trigamma series.
_TRIGAMMA = (
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
)


def _check_positive(x, name):
    x = float(x)
    if not math.isfinite(x) or x <= 0.0:
        raise ValueError(f"{name} requires a finite positive argument, got {x!r}")
    return x


def _shift(x):
    """Number of unit steps needed to bring x above the asymptotic cutoff."""
    return max(0, math.ceil(_ASYMPTOTIC_CUTOFF - x))


def log_gamma(x):
    """Natural log of the gamma function for x > 0.

    Uses the recurrence ln G(x) = ln G(x + n) - ln(x (x+1) ... (x+n-1)) to
    reach the region where the Stirling series converges to machine precision.
    """
    x = _check_positive(x, "log_gamma")
    n = _shift(x)
    correction = 0.0
    if n:
        prod = 1.0
        for i in range(n):
            prod *= x + i
        correction = math.log(prod)
        x += n
    inv = 1.0 / x
    inv2 = inv * inv
    series = 0.0
    for c in reversed(_STIRLING):
        series = series * inv2 + c
    series *= inv
    lx = math.log(x)
    return ((x - 0.5) * lx - x + _HALF_LOG_2PI + series) - correction


def digamma(x):
    """Logarithmic derivative of the gamma function for x > 0."""
    x = _check_positive(x, "digamma")
    n = _shift(x)
    acc = 0.0
    for i in range(n):
        acc += 1.0 / (x + i)
    y = x + n
    inv2 = 1.0 / (y * y)
    series = 0.0
    for c in reversed(_DIGAMMA):
        series = series * inv2 + c
    series *= inv2
    return (math.log(y) - 0.5 / y - series) - acc


def trigamma(x):
    """Second derivative of log-gamma for x > 0."""
    x = _check_positive(x, "trigamma")
    n = _shift(x)
    y = x + n
    inv = 1.0 / y
    inv2 = inv * inv
    series = 0.0
    for c in reversed(_TRIGAMMA):
        series = series * inv2 + c
    tail = inv + 0.5 * inv2 + series * inv2 * inv
    if not n:
        return tail
    rest = math.fsum([1.0 / ((x + i) * (x + i)) for i in range(1, n)] + [tail])
    if x < 0.1:
        # 1/x^2 is ~1e6 near 1e-3; keep it exact so the sum is rounded once.
        return float(Fraction(1) / (Fraction(x) ** 2) + Fraction(rest))
    return 1.0 / (x * x) + rest


def gammaincc(a, x):
    """Regularized upper incomplete gamma Q(a, x) for a > 0, x >= 0."""
    a = _check_positive(a, "gammaincc")
    x = float(x)
    if not x >= 0.0:
        raise ValueError(f"gammaincc requires x >= 0, got {x!r}")
    if x == 0.0:
        return 1.0
    if math.isinf(x):
        return 0.0
    log_prefix = a * math.log(x) - x - log_gamma(a)
    if x < a + 1.0:
        # Series for the lower function P(a, x).
        term = 1.0 / a
        total = term
        ap = a
        for _ in range(10_000):
            ap += 1.0
            term *= x / ap
            total += term
            if abs(term) < abs(total) * 1e-17:
                break
        return max(0.0, 1.0 - total * math.exp(log_prefix))
    # Continued fraction (modified Lentz) for Q(a, x).
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 10_000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return math.exp(log_prefix) * h


def chi2_sf(x, df):
    """Upper tail probability of the chi-squared distribution."""
    if x <= 0.0:
        return 1.0
    return gammaincc(0.5 * df, 0.5 * x)
