"""Scalar special functions used by the bounds.

Binary KL divergence and its upper/lower inverses, the two real branches of
the Lambert W function, and the Bennett function ``phi(x) = e^x - x - 1``.
"""
import math

_INV_E = math.exp(-1.0)
_KL_INV_TOL = 1e-16
_KL_INV_MAX_ITER = 60


def _scaled_h(a, d):
    # a * h(d / a) with h(u) = u - ln(1 + u) >= 0, free of cancellation
    u = d / a
    if u <= -1.0:
        return math.inf
    if abs(u) < 0.01:
        # alternating series, truncation below 1e-20 relative
        s = 0.0
        for k in range(10, 1, -1):
            s = u * s + (-1.0) ** k / k
        return a * s * u * u
    if u > 1.0:
        return d - a * (math.log(d) - math.log(a) + math.log1p(a / d))
    return d - a * math.log1p(u)


def kl(p, q):
    """Kullback-Leibler divergence between Bernoulli(p) and Bernoulli(q).

    Written as p h(d/p) + (1-p) h(-d/(1-p)) with d = q - p, which has no
    cancellation even when q is within a few ulps of p.
    """
    p = float(p)
    q = float(q)
    if not (0.0 <= p <= 1.0 and 0.0 <= q <= 1.0):
        raise ValueError(f"kl arguments must lie in [0, 1], got p={p}, q={q}")
    d = q - p
    first = _scaled_h(p, d) if p > 0.0 else d
    second = _scaled_h(1.0 - p, -d) if p < 1.0 else -d
    return max(first + second, 0.0)


def kl_inv_upper(p, bound):
    """Largest q in [p, 1] with kl(p || q) <= bound."""
    p = float(p)
    if bound < 0 or not math.isfinite(bound):
        if bound == math.inf:
            return 1.0
        raise ValueError(f"bound must be finite and non-negative, got {bound}")
    if p >= 1.0:
        return 1.0
    lo, hi = p, 1.0
    for _ in range(_KL_INV_MAX_ITER):
        if hi - lo <= _KL_INV_TOL:
            break
        mid = 0.5 * (lo + hi)
        if kl(p, mid) > bound:
            hi = mid
        else:
            lo = mid
    return lo


def kl_inv_lower(p, bound):
    """Smallest q in [0, p] with kl(p || q) <= bound."""
    p = float(p)
    if bound < 0 or not math.isfinite(bound):
        if bound == math.inf:
            return 0.0
        raise ValueError(f"bound must be finite and non-negative, got {bound}")
    if p <= 0.0:
        return 0.0
    lo, hi = 0.0, p
    for _ in range(_KL_INV_MAX_ITER):
        if hi - lo <= _KL_INV_TOL:
            break
        mid = 0.5 * (lo + hi)
        if kl(p, mid) > bound:
            lo = mid
        else:
            hi = mid
    return hi


def _halley(w, x, max_iter=100):
    for _ in range(max_iter):
        ew = math.exp(w)
        f = w * ew - x
        wp1 = w + 1.0
        if wp1 == 0.0:
            break
        denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1)
        if denom == 0.0:
            break
        step = f / denom
        w -= step
        if abs(step) <= 1e-15 * (1.0 + abs(w)):
            break
    return w


def _branch_series(x, sign):
    # expansion around the branch point -1/e; sign=+1 for W0, -1 for W-1
    p = sign * math.sqrt(max(2.0 * (1.0 + math.e * x), 0.0))
    return -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p ** 3


def lambert_w0(x):
    """Principal branch W0: the solution w >= -1 of w * exp(w) = x."""
    x = float(x)
    if x < -_INV_E:
        if x > -_INV_E - 1e-15:
            return -1.0
        raise ValueError(f"lambert_w0 is undefined for x < -1/e, got {x}")
    if x == 0.0:
        return 0.0
    if x == -_INV_E:
        return -1.0
    if x == math.inf:
        return math.inf
    if x < -0.25:
        w = _branch_series(x, 1.0)
    elif x < math.e:
        w = math.log1p(x)
    else:
        # w + ln(w) = ln(x) by Newton avoids overflow of exp(w) for huge x
        lx = math.log(x)
        w = lx - math.log(lx)
        for _ in range(50):
            step = (w + math.log(w) - lx) / (1.0 + 1.0 / w)
            w -= step
            if abs(step) <= 1e-15 * w:
                break
        if x < 1e300:
            w = _halley(w, x, max_iter=3)
        return w
    return _halley(w, x)


def lambert_w_minus1(x):
    """Lower branch W-1: the solution w <= -1 of w * exp(w) = x, x in [-1/e, 0)."""
    x = float(x)
    if not (-_INV_E <= x < 0.0):
        if -_INV_E - 1e-15 < x < -_INV_E:
            return -1.0
        raise ValueError(f"lambert_w_minus1 requires -1/e <= x < 0, got {x}")
    if x == -_INV_E:
        return -1.0
    if x < -0.25:
        w = _branch_series(x, -1.0)
    else:
        l1 = math.log(-x)
        l2 = math.log(-l1)
        w = l1 - l2 + l2 / l1
    w = _halley(w, x)
    return min(w, -1.0)


def phi(x):
    """Bennett function e^x - x - 1."""
    x = float(x)
    if abs(x) < 1e-4:
        return x * x * (0.5 + x * (1.0 / 6.0 + x * (1.0 / 24.0 + x / 120.0)))
    return math.expm1(x) - x


def phi_ratio(x):
    """phi(x) / x**2, continuously extended by 1/2 at zero."""
    x = float(x)
    if abs(x) < 1e-4:
        return 0.5 + x * (1.0 / 6.0 + x * (1.0 / 24.0 + x / 120.0))
    return phi(x) / (x * x)
