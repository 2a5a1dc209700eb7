"""Closed-form quantities for the weighted typical cell of a beta-Delaunay tessellation.

Everything is evaluated in the log domain: the gamma arguments grow like d^2/2,
so raw gamma values overflow already for moderate d.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import specfun
from .errors import DomainError, UnsupportedOrderError
from .specfun import log_barnes_g, log_gamma, log_gamma_ratio, polygamma

MAX_CUMULANT_ORDER = 10
_HALF_LOG_PI = 0.5 * math.log(math.pi)


@dataclass(frozen=True)
class ModelParams:
    """Dimension parameter ``d`` (cells live in R^(d-1)), shape ``beta``,
    weight exponent ``nu`` and intensity ``gamma``."""

    d: int
    beta: float = 0.0
    nu: float = 0.0
    gamma: float = 1.0

    def problems(self) -> list[str]:
        out = []
        if int(self.d) != self.d or self.d < 2:
            out.append(f"d must be an integer >= 2 (got {self.d!r})")
        if not self.beta > -1.0:
            out.append(f"beta must exceed -1 (got {self.beta!r})")
        if not self.nu >= -1.0:
            out.append(f"nu must be >= -1 (got {self.nu!r})")
        if not self.gamma > 0.0:
            out.append(f"gamma must be positive (got {self.gamma!r})")
        for name in ("beta", "nu", "gamma"):
            if not math.isfinite(getattr(self, name)):
                out.append(f"{name} must be finite")
        return out

    @property
    def dim(self) -> int:
        """Ambient dimension of the tessellation."""
        return int(self.d) - 1

    @property
    def radial_exponent(self) -> float:
        """Power of r in the radial density."""
        d, b, n = self.d, self.beta, self.nu
        return 2 * d * b + d * d + n * (d - 1)

    @property
    def radial_power(self) -> float:
        """Power of r inside the exponential of the radial density, d + 1 + 2 beta."""
        return self.d + 1 + 2 * self.beta


@dataclass(frozen=True)
class CumulantReport:
    order: int
    value: float
    bound: Optional[float] = None


@dataclass(frozen=True)
class ModGaussianFrame:
    centering: float
    variance: float
    strip_lower: float


def validate(params: ModelParams) -> ModelParams:
    """Return ``params`` unchanged, or raise listing every violated constraint."""
    issues = params.problems()
    if issues:
        raise DomainError("; ".join(issues))
    return params


def m_const(params: ModelParams) -> float:
    """gamma Gamma(d/2) / (2 sqrt(pi) Gamma((d+1)/2)); does not depend on beta."""
    validate(params)
    d = params.d
    return params.gamma * math.exp(log_gamma(d / 2) - log_gamma((d + 1) / 2)) / (2.0 * math.sqrt(math.pi))


def radial_rate(params: ModelParams) -> float:
    """Rate of the radial law r^A exp(-rate r^(d+1+2beta)) that reproduces the volume moments.

    Equals gamma Gamma(d/2+beta+1) / (sqrt(pi) Gamma((d+1)/2+beta+1)). This is the
    constant used by the sampler; it differs from :func:`m_const` by a
    (d, beta)-dependent factor.
    """
    validate(params)
    d, b = params.d, params.beta
    return params.gamma * math.exp(log_gamma_ratio((d + 1) / 2 + b + 1, -0.5)) / math.sqrt(math.pi)


def c_const(params: ModelParams) -> float:
    """Normalizing constant of the height density Gamma(d/2+beta+1) / (pi^(d/2) Gamma(beta+1))."""
    validate(params)
    d, b = params.d, params.beta
    return math.exp(log_gamma(d / 2 + b + 1) - log_gamma(b + 1) - (d / 2) * math.log(math.pi))


def log_c_const(dim: int, beta: float) -> float:
    """log of Gamma(dim/2+beta+1) / (pi^(dim/2) Gamma(beta+1)) for any dim >= 1."""
    return log_gamma(dim / 2 + beta + 1) - log_gamma(beta + 1) - (dim / 2) * math.log(math.pi)


def log_alpha(params: ModelParams) -> float:
    """log of the constant normalizing r^A exp(-rate r^c) Delta^(nu+1) prod (1-|y_i|^2)^beta.

    The radial rate is :func:`radial_rate`. The power of pi is -d(d-1)/2; with
    +d(d-1)/2 the density integrates to pi^(d(d-1)) instead of 1.
    """
    validate(params)
    d, b, n, g = params.d, params.beta, params.nu, params.gamma
    D = d + 2 * b + 1
    E = d + 2 * b + n
    P = d + (n - 1) * (d - 1) / D
    i = np.arange(1, d)
    val = (-d * (d - 1) / 2 * math.log(math.pi)
           + (n + 1) * log_gamma(d)
           + math.log(D)
           + log_gamma((d * E - n + 1) / 2)
           - log_gamma(d * E / 2 + 1)
           - log_gamma(P)
           + P * (math.log(g) + log_gamma_ratio((d + 1) / 2 + b + 1, -0.5) - _HALF_LOG_PI)
           + d * (log_gamma((d + n) / 2 + b + 1) - log_gamma(b + 1))
           + float(np.sum(log_gamma(i / 2) - log_gamma((i + n + 1) / 2))))
    return val


def _moment_terms(params: ModelParams):
    d, b, n = params.d, params.beta, params.nu
    D = d + 2 * b + 1
    return d, b, n, D


def log_volume_moment(params: ModelParams, s: float) -> float:
    """log E[Vol^s] of the weighted typical cell, for s >= -nu-1."""
    validate(params)
    s = float(s)
    if not math.isfinite(s) or s < -params.nu - 1:
        raise DomainError(f"moment order s={s!r} must be >= -nu-1 = {-params.nu - 1!r}")
    return _log_moment_formula(params, s)


def _log_moment_formula(params: ModelParams, s: float) -> float:
    """The moment formula wherever its gamma arguments are positive.

    It is analytic in s there, including a neighbourhood of s = -nu-1 for
    nu = -1, which lets derivative checks at s = 0 use central stencils.
    """
    d, b, n, D = _moment_terms(params)
    if s == 0.0:
        return 0.0
    # pairs (x, h) whose log Gamma(x+h) - log Gamma(x) enter with the given weights
    pairs = [
        ((d * (d + 2 * b) + n * (d - 1) + 1) / 2, s * (d - 1) / 2, -1.0),
        (d * (d + n + 2 * b) / 2 + 1, d * s / 2, 1.0),
        (d + (n - 1) * (d - 1) / D, s * (d - 1) / D, 1.0),
        ((d + n) / 2 + b + 1, s / 2, -float(d)),
    ]
    for x, h, _ in pairs:
        if not (x > 0 and x + h > 0):
            raise DomainError(f"moment order s={s!r} puts a gamma argument out of domain")
    i = np.arange(1, d, dtype=float)
    xs = (i + n + 1) / 2
    if np.any(xs + s / 2 <= 0):
        raise DomainError(f"moment order s={s!r} puts a gamma argument out of domain")

    # one vectorized call: the constant ratio, the weighted pairs, then the sum over i
    x_all = np.concatenate(([d / 2 + b + 1], [p[0] for p in pairs], xs))
    h_all = np.concatenate(([0.5], [p[1] for p in pairs], np.full(xs.shape, s / 2)))
    ratios = log_gamma_ratio(x_all, h_all)
    weights = np.concatenate(([s * (d - 1) / D], [p[2] for p in pairs], np.ones(xs.shape)))
    val = -s * log_gamma(d) + s * (d - 1) / D * (_HALF_LOG_PI - math.log(params.gamma))
    return float(val + np.dot(weights, ratios))


def volume_moment(params: ModelParams, s: float) -> float:
    return math.exp(log_volume_moment(params, s))


def _halfsum_polygamma(order: int, d: int, nu: float) -> float:
    """sum_{i=1}^{d-1} psi^(order)((i+nu+1)/2)."""
    k = d - 1
    if k >= 2 and nu > -1 and order == 0:
        return 2.0 * specfun.digamma_halfsum(k, nu + 1.0)
    if k >= 2 and nu > -1 and order == 1:
        return 4.0 * specfun.trigamma_halfsum(k, nu + 1.0)
    i = np.arange(1, d, dtype=float)
    return float(np.sum(polygamma(order, (i + nu + 1) / 2)))


def cumulant_value(params: ModelParams, m: int) -> float:
    """m-th cumulant of the log-volume, from the polygamma closed form."""
    validate(params)
    if int(m) != m or m < 1:
        raise UnsupportedOrderError(f"cumulant order must be a positive integer, got {m!r}")
    if m > MAX_CUMULANT_ORDER:
        raise UnsupportedOrderError(f"cumulant order {m} exceeds {MAX_CUMULANT_ORDER}")
    d, b, n = params.d, params.beta, params.nu
    D = d + 2 * b + 1
    E = d + 2 * b + n
    k = m - 1
    # arguments shifted by +1 where the unshifted form can leave (0, inf); the
    # rational correction term of the unshifted form is then absorbed exactly
    val = 0.0
    if m == 1:
        val += (d - 1) / D * (_HALF_LOG_PI + log_gamma_ratio((d + 2 * b + 2) / 2, 0.5)
                              - math.log(params.gamma)) - log_gamma(d)
    val += (d / 2) ** m * polygamma(k, d * E / 2 + 1)
    val += ((d - 1) / D) ** m * polygamma(k, (d * E - (n - 1)) / D)
    val -= ((d - 1) / 2) ** m * polygamma(k, (d * E - (n - 1)) / 2)
    val -= d / 2 ** m * polygamma(k, E / 2 + 1)
    val += 2.0 ** (-m) * _halfsum_polygamma(k, d, n)
    return float(val)


def corollary_bound(params: ModelParams, m: int) -> Optional[float]:
    """18 (beta+2)^(m-1) (m-1)! / (nu+2)^(m-2), when m >= 3 and d > max(4, 1-2beta-nu)."""
    d, b, n = params.d, params.beta, params.nu
    if m < 3 or not d > max(4.0, 1 - 2 * b - n):
        return None
    return 18.0 * (b + 2) ** (m - 1) * math.factorial(m - 1) / (n + 2) ** (m - 2)


def general_cumulant_bound(params: ModelParams, m: int) -> Optional[float]:
    """Dimension-explicit cumulant bound, valid for d >= 3 and nu + 2beta + d > 1."""
    d, b, n = params.d, params.beta, params.nu
    E = d + 2 * b + n
    if d < 3 or not E > 1 or m < 3:
        return None
    f = math.factorial(m - 1)
    return ((11 * d + 3 + 6 * (b + 2) ** (m - 1)) * f / (4 * E ** (m - 1))
            + 4 * f / (n + 2) ** (m - 2))


def cumulant(params: ModelParams, m: int) -> CumulantReport:
    value = cumulant_value(params, m)
    return CumulantReport(order=int(m), value=value, bound=corollary_bound(params, m))


def c_nu(nu: float) -> float:
    """Constant term of the asymptotic log-volume variance."""
    if not nu >= -1:
        raise DomainError(f"nu must be >= -1 (got {nu!r})")
    return (-0.5 * polygamma(0, nu + 2) - (nu + 1) / 2 * polygamma(1, nu + 2)
            + polygamma(1, (nu + 2) / 2) / 8)


def mean_variance_asymptotic(params: ModelParams) -> tuple[float, float]:
    """Leading-order mean and variance of the log-volume as d grows."""
    validate(params)
    d, n = params.d, params.nu
    ld = math.log(d)
    mean = -d * ld + (11 + 2 * n) / 4 * ld + d / 2 - math.log(params.gamma)
    var = 0.5 * ld + c_nu(n)
    return mean, var


def berry_esseen_scale_at(d: float, beta: float, nu: float) -> float:
    """2 (beta+2) / ((nu+2) sqrt(log d)); ``d`` may be any real > 1."""
    if not d > 1:
        raise DomainError("berry_esseen_scale needs d > 1")
    return 2.0 * (beta + 2) / ((nu + 2) * math.sqrt(math.log(d)))


def berry_esseen_scale(params: ModelParams) -> float:
    validate(params)
    return berry_esseen_scale_at(params.d, params.beta, params.nu)


def mod_gaussian_frame(params: ModelParams) -> ModGaussianFrame:
    """Centering and variance parameter under which the log-MGF converges.

    centering = (9/4 + nu/2) log(d/2) - (d+nu+2beta)/2 - 1/2 + log(4 pi / gamma)
                - 3 (beta+1) log d / (d+2beta+1) - log (d-1)!
    variance  = log(d/2)/2 - 1/2

    With these two parameters the residual against the Barnes-G limit decays
    like 1/d. The variants with -1 + log(pi/(4 gamma)) and log(d/2)/2 - 1 leave a
    residual (4 log 2 + 1/2) t + t^2/4 that does not vanish.
    """
    validate(params)
    d, b, n, g = params.d, params.beta, params.nu, params.gamma
    half_log = math.log(d / 2)
    centering = ((9 / 4 + n / 2) * half_log - (d + n + 2 * b) / 2 - 0.5
                 + math.log(4 * math.pi / g)
                 - 3 * (b + 1) * math.log(d) / (d + 2 * b + 1)
                 - log_gamma(d))
    variance = 0.5 * half_log - 0.5
    return ModGaussianFrame(centering=centering, variance=variance, strip_lower=-n - 1)


def mod_gaussian_limit(nu: float, t: float) -> float:
    """log of G((nu+2)/2) G((nu+3)/2) / (G((nu+2+t)/2) G((nu+3+t)/2))."""
    if not t > -nu - 1:
        raise DomainError(f"t={t!r} must exceed -nu-1={-nu - 1!r}")
    return float(log_barnes_g((nu + 2) / 2) + log_barnes_g((nu + 3) / 2)
                 - log_barnes_g((nu + 2 + t) / 2) - log_barnes_g((nu + 3 + t) / 2))


def mod_gaussian_residual(params: ModelParams, t: float) -> float:
    """log E[exp(t(Y - centering))] - variance t^2/2 - log limit(t), Y the log-volume."""
    if not t > -params.nu - 1:
        raise DomainError(f"t={t!r} must exceed -nu-1")
    if t == 0:
        return 0.0
    frame = mod_gaussian_frame(params)
    return (log_volume_moment(params, t) - frame.centering * t
            - frame.variance * t * t / 2 - mod_gaussian_limit(params.nu, t))


def ldp_scaled_cgf(params: ModelParams, t: float) -> float:
    """(1/a_d) log E exp(a_d t X_d) with X_d = (Y - EY)/a_d and a_d = log(d/2)/2.

    This reduces to (2/log(d/2)) (log E Vol^t - t E log Vol) and tends to t^2/2.
    """
    validate(params)
    if params.d <= 2:
        raise DomainError("ldp_scaled_cgf needs d > 2")
    if t == 0:
        return 0.0
    c1 = cumulant_value(params, 1)
    return 2.0 / math.log(params.d / 2) * (log_volume_moment(params, t) - t * c1)
