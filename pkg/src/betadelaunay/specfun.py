"""Real-argument log-gamma, polygamma and log Barnes G.

All routines accept scalars or numpy arrays and return the same shape.
Evaluation scheme: shift the argument with the functional recurrence until the
Bernoulli-number asymptotic series converges to double precision; around the
zeros of log-gamma and log-G (x near 1, 2) Taylor series in zeta values are
used instead so that the result stays relatively accurate.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DomainError, UnsupportedOrderError

__all__ = [
    "MAX_POLYGAMMA_ORDER",
    "EULER_GAMMA",
    "log_gamma",
    "log_gamma_ratio",
    "digamma",
    "polygamma",
    "log_barnes_g",
    "digamma_halfsum",
    "trigamma_halfsum",
    "halfsum_bound",
]

MAX_POLYGAMMA_ORDER = 12
EULER_GAMMA = 0.5772156649015329
ZETA_PRIME_M1 = -0.16542114370045094  # zeta'(-1)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)

# B_2, B_4, ..., B_26
_BERNOULLI = np.array([
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
    854513.0 / 138.0,
    -236364091.0 / 2730.0,
    8553103.0 / 6.0,
])

# zeta(k) - 1 for k = 2, 3, ..., 63
_ZETA_M1 = np.array([
    0.6449340668482264, 0.2020569031595943, 0.08232323371113819,
    0.03692775514336993, 0.01734306198444914, 0.008349277381922827,
    0.00407735619794434, 0.0020083928260822143, 0.0009945751278180853,
    0.0004941886041194645, 0.0002460865533080483, 0.00012271334757848915,
    6.124813505870483e-05, 3.058823630702049e-05, 1.528225940865187e-05,
    7.637197637899763e-06, 3.81729326499984e-06, 1.908212716553939e-06,
    9.539620338727962e-07, 4.769329867878064e-07, 2.38450502727733e-07,
    1.1921992596531106e-07, 5.960818905125948e-08, 2.980350351465228e-08,
    1.4901554828365043e-08, 7.45071178983543e-09, 3.725334024788457e-09,
    1.862659723513049e-09, 9.313274324196682e-10, 4.656629065033784e-10,
    2.3283118336765053e-10, 1.164155017270052e-10, 5.820772087902701e-11,
    2.9103850444971e-11, 1.4551921891041985e-11, 7.275959835057482e-12,
    3.637979547378651e-12, 1.818989650307066e-12, 9.094947840263888e-13,
    4.547473783042154e-13, 2.2737368458246524e-13, 1.136868407680228e-13,
    5.684341987627585e-14, 2.842170976889302e-14, 1.4210854828031605e-14,
    7.105427395210853e-15, 3.552713691337114e-15, 1.7763568435791204e-15,
    8.881784210930816e-16, 4.440892103143814e-16, 2.2204460507980424e-16,
    1.1102230251410657e-16, 5.55111512484548e-17, 2.775557562136117e-17,
    1.3877787809725275e-17, 6.938893904544234e-18, 3.469446952166015e-18,
    1.7347234760476074e-18, 8.673617380120694e-19, 4.336808690020904e-19,
    2.168404344996647e-19, 1.084202172493393e-19,
])
_K = np.arange(2, 2 + _ZETA_M1.size)

_STIRLING_X0 = 12.0
_BARNES_X0 = 20.0


def _as_array(x, name="x"):
    arr = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(arr)):
        raise DomainError(f"{name} must be finite")
    return arr


def _wrap(result, like):
    if np.ndim(like) == 0:
        return float(result)
    return result


def _require_positive(arr, fname):
    if np.any(arr <= 0.0):
        bad = float(arr[arr <= 0.0].flat[0])
        raise DomainError(f"{fname} requires x > 0, got {bad!r}")


def _stirling_correction(x):
    """Sum of B_2k / (2k (2k-1) x^(2k-1)) for x >= 12."""
    inv = 1.0 / x
    inv2 = inv * inv
    acc = np.zeros_like(x)
    for k in range(8, 0, -1):
        b = _BERNOULLI[k - 1]
        acc = acc * inv2 + b / (2 * k * (2 * k - 1))
    return acc * inv


def _lgamma_taylor2(z):
    # log Gamma(2 + z) = (1 - gamma) z + sum_k (-1)^k (zeta(k) - 1) z^k / k, |z| <= 1/2
    coef = ((-1.0) ** _K) * _ZETA_M1 / _K
    acc = np.zeros_like(z)
    for c in coef[::-1]:
        acc = acc * z + c
    return z * ((1.0 - EULER_GAMMA) + acc * z)


def _lgamma_core(x):
    """log Gamma on x > 0 without argument checks (x is a 1-d array)."""
    out = np.empty_like(x)

    big = x >= _STIRLING_X0
    if np.any(big):
        xb = x[big]
        out[big] = (xb - 0.5) * np.log(xb) - xb + _HALF_LOG_2PI + _stirling_correction(xb)

    mid = (x >= 2.5) & ~big
    if np.any(mid):
        xm = x[mid]
        # downward recurrence into [1.5, 2.5): every term is positive
        n = np.floor(xm - 1.5)
        base = xm - n
        prod = np.ones_like(xm)
        for j in range(1, int(n.max()) + 1):
            active = n >= j
            prod = np.where(active, prod * (xm - j), prod)
        out[mid] = _lgamma_taylor2(base - 2.0) + np.log(prod)

    near2 = (x >= 1.5) & (x < 2.5)
    if np.any(near2):
        out[near2] = _lgamma_taylor2(x[near2] - 2.0)

    near1 = (x >= 0.5) & (x < 1.5)
    if np.any(near1):
        z = x[near1] - 1.0
        out[near1] = _lgamma_taylor2(z) - np.log1p(z)

    small = x < 0.5
    if np.any(small):
        xs = x[small]
        # log Gamma(x) = log Gamma(2 + x) - log(1 + x) - log x
        out[small] = _lgamma_taylor2(xs) - np.log1p(xs) - np.log(xs)
    return out


def log_gamma(x):
    """Natural log of the gamma function for x > 0."""
    arr = _as_array(x)
    _require_positive(arr, "log_gamma")
    flat = arr.reshape(-1)
    return _wrap(_lgamma_core(flat).reshape(arr.shape), x)


def log_gamma_ratio(x, h):
    """log Gamma(x + h) - log Gamma(x), accurate when x is huge and h moderate.

    Both x and x + h must be positive.
    """
    xa = _as_array(x)
    ha = _as_array(h, "h")
    xa, ha = np.broadcast_arrays(xa, ha)
    y = xa + ha
    _require_positive(xa, "log_gamma_ratio")
    _require_positive(y, "log_gamma_ratio")
    xf = xa.reshape(-1).copy()
    hf = ha.reshape(-1).copy()
    yf = y.reshape(-1)
    out = np.empty_like(xf)
    asym = (np.minimum(xf, yf) >= 1.0e3)
    if np.any(asym):
        xs, hs, ys = xf[asym], hf[asym], yf[asym]
        out[asym] = ((xs - 0.5) * np.log1p(hs / xs) + hs * np.log(ys) - hs
                     + _stirling_correction(ys) - _stirling_correction(xs))
    rest = ~asym
    if np.any(rest):
        out[rest] = _lgamma_core(yf[rest]) - _lgamma_core(xf[rest])
    res = out.reshape(xa.shape)
    if np.ndim(x) == 0 and np.ndim(h) == 0:
        return float(res)
    return res


def _polygamma_asym(m, x):
    """Asymptotic series for psi^(m)(x), x >= 20 + m."""
    inv = 1.0 / x
    inv2 = inv * inv
    if m == 0:
        acc = np.zeros_like(x)
        for k in range(10, 0, -1):
            acc = acc * inv2 + _BERNOULLI[k - 1] / (2 * k)
        return np.log(x) - 0.5 * inv - acc * inv2
    sign = -1.0 if m % 2 == 0 else 1.0  # (-1)^(m+1)
    acc = np.zeros_like(x)
    for k in range(10, 0, -1):
        coef = _BERNOULLI[k - 1] * math.factorial(2 * k + m - 1) / math.factorial(2 * k)
        acc = acc * inv2 + coef
    lead = math.factorial(m - 1) + 0.5 * math.factorial(m) * inv + acc * inv2
    return sign * lead * inv ** m


def polygamma(order, x):
    """psi^(order)(x) for x > 0; order 0 is the digamma function."""
    m = int(order)
    if m != order or m < 0:
        raise UnsupportedOrderError(f"polygamma order must be a non-negative integer, got {order!r}")
    if m > MAX_POLYGAMMA_ORDER:
        raise UnsupportedOrderError(
            f"polygamma order {m} exceeds the supported maximum {MAX_POLYGAMMA_ORDER}")
    arr = _as_array(x)
    _require_positive(arr, "polygamma")
    flat = arr.reshape(-1)
    x0 = 20.0 + m
    n = np.maximum(np.ceil(x0 - flat), 0.0)
    shifted = flat + n
    out = _polygamma_asym(m, shifted)
    nmax = int(n.max()) if n.size else 0
    if nmax:
        # psi^(m)(x) = psi^(m)(x + n) + (-1)^(m+1) m! sum_{k<n} (x + k)^-(m+1)
        tail = np.zeros_like(flat)
        for k in range(nmax - 1, -1, -1):
            active = n > k
            tail = np.where(active, tail + (flat + k) ** (-(m + 1)), tail)
        sign = -1.0 if m % 2 == 0 else 1.0
        out = out + sign * math.factorial(m) * tail
    return _wrap(out.reshape(arr.shape), x)


def digamma(x):
    return polygamma(0, x)


def _log_barnes_taylor1(z):
    # log G(1 + z) = z/2 log(2 pi) - (z + (1 + gamma) z^2)/2 + sum_{k>=2} (-1)^k zeta(k) z^(k+1)/(k+1)
    coef = ((-1.0) ** _K) * (1.0 + _ZETA_M1) / (_K + 1)
    acc = np.zeros_like(z)
    for c in coef[::-1]:
        acc = acc * z + c
    return z * _HALF_LOG_2PI - 0.5 * (z + (1.0 + EULER_GAMMA) * z * z) + acc * z ** 3


def _log_barnes_asym(x):
    """log G(x) for x >= 20 via the expansion of log G(z + 1), z = x - 1."""
    z = x - 1.0
    logz = np.log(z)
    inv2 = 1.0 / (z * z)
    acc = np.zeros_like(z)
    for k in range(11, 0, -1):
        acc = acc * inv2 + _BERNOULLI[k] / (4.0 * k * (k + 1))
    return (0.5 * z * z * logz - 0.75 * z * z + z * _HALF_LOG_2PI
            - logz / 12.0 + ZETA_PRIME_M1 + acc * inv2)


def log_barnes_g(x):
    """log G(x) for x > 0, where G(x + 1) = Gamma(x) G(x) and G(1) = 1."""
    arr = _as_array(x)
    _require_positive(arr, "log_barnes_g")
    flat = arr.reshape(-1)
    out = np.empty_like(flat)

    big = flat >= _BARNES_X0
    if np.any(big):
        out[big] = _log_barnes_asym(flat[big])

    low = ~big
    if np.any(low):
        xl = flat[low]
        # bring the argument into [0.5, 1.5), then recurse upward
        down = xl < 0.5
        base = np.where(down, xl + 1.0, xl)
        steps = np.where(down, 0.0, np.floor(xl - 0.5))
        base = base - steps
        val = _log_barnes_taylor1(base - 1.0)
        for j in range(int(steps.max()) if steps.size else 0):
            active = steps > j
            g = _lgamma_core(base + j)
            val = np.where(active, val + g, val)
        if np.any(down):
            val = np.where(down, val - _lgamma_core(xl), val)
        out[low] = val
    return _wrap(out.reshape(arr.shape), x)


def _check_halfsum_args(k, a):
    if int(k) != k or k < 2:
        raise DomainError(f"k must be an integer >= 2, got {k!r}")
    if not a > 0:
        raise DomainError(f"a must be positive, got {a!r}")
    return int(k), float(a)


def digamma_halfsum(k, a):
    """(1/2) sum_{j=1..k} psi((j + a)/2) through its closed form."""
    k, a = _check_halfsum_args(k, a)
    c = k % 2
    psi = digamma
    return ((0.5 * (k - c) + 0.5 * a - 0.5) * psi(a + k - c - 1.0)
            + 0.5 * c * psi(k + a - 1.0)
            + 0.25 * psi(0.5 * (k + a))
            - (0.5 * a - 0.5) * psi(a + 1.0)
            - 0.25 * psi(0.5 * a + 1.0)
            - 0.5 * k * (1.0 + math.log(2.0))
            + 1.0 + 0.5 * c)


def trigamma_halfsum(k, a):
    """(1/4) sum_{j=1..k} psi'((j + a)/2) through its closed form."""
    k, a = _check_halfsum_args(k, a)
    c = k % 2
    psi = digamma

    def tri(v):
        return polygamma(1, v)

    top = k + a - c + 1.0
    return (0.5 * (psi(top) - psi(a + 1.0))
            + 0.5 * a * (tri(top) - tri(a + 1.0))
            - 0.125 * (tri(0.5 * top) - tri(0.5 * (a + 1.0)))
            + 0.5 * (k - c) * tri(top)
            + 0.25 * c * tri(0.5 * (k + a)))


def halfsum_bound(m, a):
    """Upper bound 2^(m+3) m! / (a+1)^(m-1) on |sum_j psi^(m)((j + a)/2)|, any k.

    Valid for m >= 2 only: for m = 1 the sum grows like 2 log k without bound.
    """
    if int(m) != m or m < 2 or m > MAX_POLYGAMMA_ORDER:
        raise DomainError(f"half-sum bound holds for integer orders 2..{MAX_POLYGAMMA_ORDER}, got {m!r}")
    if not a > 0:
        raise DomainError(f"a must be positive, got {a!r}")
    return 2.0 ** (m + 3) * math.factorial(m) / (a + 1.0) ** (m - 1)
