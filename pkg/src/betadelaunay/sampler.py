"""Exact sampling of the weighted typical cell conv(R Y_1, ..., R Y_d).

R has density proportional to r^A exp(-rate r^c) and is drawn through the gamma
change of variables. The points Y_i are beta-distributed in the unit ball and
jointly reweighted by Delta^(nu+1). Three exact schemes are offered for the
reweighting:

``plain``
    Independent points accepted with probability (Delta / tau)^(nu+1).
``volume``
    Proposals from the law proportional to Delta^2 (sequential projection
    sampling), then thinned. Used for nu + 1 >= 2 and as one mixture component.
``auto``
    ``plain`` for nu = -1, ``volume`` for nu >= 1, and for -1 < nu < 1 a mixture
    of the independent law and the Delta^2 law whose envelope a + b x^2 dominates
    x^(nu+1). All three produce the same distribution; they differ in speed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, LowAcceptanceError
from .geometry import Simplex, batch_log_volume, log_tau
from .model import ModelParams, radial_rate, validate

DEFAULT_ATTEMPT_CAP = 10_000_000
_METHODS = ("plain", "volume", "mixture", "auto")


@dataclass(frozen=True)
class RngStream:
    """Reproducible generator identified by (seed, stream id)."""

    seed: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream),))
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, stream: int) -> "RngStream":
        return RngStream(self.seed, stream)


def _gen(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError("rng must be an RngStream or numpy Generator")


@dataclass
class CellSample:
    radius: float
    points: np.ndarray
    simplex: Simplex = field(repr=False)
    log_volume: float
    attempts: int = 1


# ---------------------------------------------------------------------------
# radius


def radius_shape(params: ModelParams) -> float:
    """Gamma shape (A + 1) / c of rate * R^c."""
    return (params.radial_exponent + 1.0) / params.radial_power


def sample_radius(params: ModelParams, rng, size=None):
    """R = (G / rate)^(1/c) with G ~ Gamma(shape=(A+1)/c)."""
    validate(params)
    gen = _gen(rng)
    shape = radius_shape(params)
    assert shape > 0
    g = gen.standard_gamma(shape, size=size)
    return (g / radial_rate(params)) ** (1.0 / params.radial_power)


def log_radius_moment(params: ModelParams, k: float) -> float:
    """log E R^k = log Gamma(shape + k/c) - log Gamma(shape) - (k/c) log rate."""
    c = params.radial_power
    shape = radius_shape(params)
    return math.lgamma(shape + k / c) - math.lgamma(shape) - k / c * math.log(radial_rate(params))


# ---------------------------------------------------------------------------
# beta points


def _radial_beta(gen: np.random.Generator, a: float, b: float, size: int) -> np.ndarray:
    """Beta(a, b) draws, through U^(1/a) or 1 - U^(1/b) when one parameter is 1."""
    if b == 1.0:
        return gen.random(size) ** (1.0 / a)
    if a == 1.0:
        return 1.0 - gen.random(size) ** (1.0 / b)
    return gen.beta(a, b, size=size)


def _beta_points(gen: np.random.Generator, dim: int, beta: float, size: int) -> np.ndarray:
    """``size`` points in the unit ball of R^dim with density proportional to (1-|x|^2)^beta."""
    if dim == 1:
        direction = np.where(gen.random(size) < 0.5, -1.0, 1.0)[:, None]
    elif dim == 2:
        phi = gen.random(size) * (2.0 * math.pi)
        direction = np.column_stack([np.cos(phi), np.sin(phi)])
    else:
        direction = gen.standard_normal((size, dim))
        direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    r2 = _radial_beta(gen, dim / 2.0, beta + 1.0, size)
    return direction * np.sqrt(r2)[:, None]


def sample_beta_point(params: ModelParams, rng, size=None) -> np.ndarray:
    """Beta point(s) in the unit ball of R^(d-1)."""
    validate(params)
    gen = _gen(rng)
    n = 1 if size is None else int(size)
    pts = _beta_points(gen, params.dim, params.beta, n)
    return pts[0] if size is None else pts


# ---------------------------------------------------------------------------
# weighted points


def _simplex_log_volumes(points: np.ndarray) -> np.ndarray:
    return batch_log_volume(points)


def iid_second_moment(params: ModelParams) -> float:
    """E[Delta^2] for d independent beta points: d! s^k / (k!)^2 with s = 1/(d+2beta+1)."""
    d, k = params.d, params.dim
    s = 1.0 / (d + 2 * params.beta + 1)
    return math.exp(math.lgamma(d + 1) + k * math.log(s) - 2 * math.lgamma(k + 1))


def _used_attempts(acc: np.ndarray, needed: int) -> int:
    """Proposals consumed up to and including the last accepted one that is kept."""
    hits = np.flatnonzero(acc)
    return len(acc) if hits.size <= needed else int(hits[needed - 1]) + 1


def _plain_batch(params, gen, n, cap):
    d, k = params.d, params.dim
    p = params.nu + 1.0
    ltau = log_tau(k)
    out = np.empty((n, d, k))
    filled = 0
    attempts = 0
    chunk = max(64, min(200_000, 4 * n))
    while filled < n:
        pts = _beta_points(gen, k, params.beta, chunk * d).reshape(chunk, d, k)
        if p == 0.0:
            acc = np.ones(chunk, dtype=bool)
        else:
            logw = p * (_simplex_log_volumes(pts) - ltau)
            assert np.all(logw <= 1e-9), "acceptance weight exceeds 1"
            acc = np.log(gen.random(chunk)) < logw
        attempts += _used_attempts(acc, n - filled)
        take = pts[acc][: n - filled]
        out[filled:filled + len(take)] = take
        filled += len(take)
        if filled < n and attempts > cap * (filled + 1):
            rate = filled / attempts
            raise LowAcceptanceError(
                f"rejection sampler exceeded {cap} attempts (empirical acceptance {rate:.3g})")
        if filled < n and filled > 0:
            chunk = int(min(500_000, max(64, 1.2 * (n - filled) * attempts / filled)))
    return out, attempts


def _volume_law_batch(params, gen, n):
    """n tuples with joint density proportional to Delta^2 prod f(y_i).

    With z = (1, y / sqrt(s)), E[z z^T] = I, so the tuple is built one point at
    a time: point j has density f(z) |P_j z|^2 / (d - j), P_j projecting onto
    the orthogonal complement of the previous z's. Each step is a rejection
    step with bound |z|^2 <= 1 + 1/s.
    """
    d, k = params.d, params.dim
    s = 1.0 / (d + 2 * params.beta + 1)
    bound = 1.0 + 1.0 / s
    root_s = math.sqrt(s)
    z_all = np.empty((n, d, d))
    basis = np.zeros((n, d, 0))
    for j in range(d):
        chosen = np.empty((n, d))
        resid_out = np.empty((n, d))
        pending = np.arange(n)
        while pending.size:
            m = pending.size
            y = _beta_points(gen, k, params.beta, m)
            z = np.concatenate([np.ones((m, 1)), y / root_s], axis=1)
            q = basis[pending]
            resid = z - np.einsum("mij,mj->mi", q, np.einsum("mij,mi->mj", q, z))
            w = np.sum(resid * resid, axis=1)
            acc = gen.random(m) * bound < w
            idx = pending[acc]
            chosen[idx] = z[acc]
            resid_out[idx] = resid[acc]
            pending = pending[~acc]
        z_all[:, j, :] = chosen
        unit = resid_out / np.linalg.norm(resid_out, axis=1, keepdims=True)
        basis = np.concatenate([basis, unit[:, :, None]], axis=2)
    return z_all[:, :, 1:] * root_s


def _volume_batch(params, gen, n, cap):
    """Weighted law for nu >= 1: Delta^2 proposals thinned by (Delta/tau)^(nu-1)."""
    k = params.dim
    extra = params.nu - 1.0
    ltau = log_tau(k)
    out = np.empty((n, params.d, k))
    filled = attempts = 0
    while filled < n:
        m = n - filled if extra == 0 else max(64, int(1.5 * (n - filled)))
        pts = _volume_law_batch(params, gen, m)
        if extra == 0:
            acc = np.ones(m, dtype=bool)
        else:
            acc = np.log(gen.random(m)) < extra * (_simplex_log_volumes(pts) - ltau)
        attempts += _used_attempts(acc, n - filled)
        take = pts[acc][: n - filled]
        out[filled:filled + len(take)] = take
        filled += len(take)
        if filled < n and attempts > cap * (filled + 1):
            raise LowAcceptanceError(
                f"sampler exceeded {cap} attempts (empirical acceptance {filled / attempts:.3g})")
    return out, attempts


def mixture_envelope(params: ModelParams) -> tuple[float, float, float]:
    """(a, b, E x^2) with x = Delta / tau, a + b x^2 >= x^p for p = nu + 1 in (0, 2).

    Weighted Young inequality with the free scale chosen to minimize a + b E x^2,
    which then equals (E x^2)^(p/2).
    """
    p = params.nu + 1.0
    theta = p / 2.0
    ex2 = iid_second_moment(params) * math.exp(-2 * log_tau(params.dim))
    alpha = ex2 ** (-(1.0 - theta))
    a = (1.0 - theta) * alpha ** (-theta / (1.0 - theta))
    b = theta * alpha
    return a, b, ex2


def _mixture_batch(params, gen, n, cap):
    k = params.dim
    p = params.nu + 1.0
    a, b, ex2 = mixture_envelope(params)
    w_iid = a / (a + b * ex2)
    ltau = log_tau(k)
    out = np.empty((n, params.d, k))
    filled = attempts = 0
    while filled < n:
        m = max(64, int(1.3 * (n - filled)))
        n_iid = int(gen.binomial(m, w_iid))
        parts = []
        if n_iid:
            parts.append(_beta_points(gen, k, params.beta, n_iid * params.d).reshape(n_iid, params.d, k))
        if m - n_iid:
            parts.append(_volume_law_batch(params, gen, m - n_iid))
        pts = np.concatenate(parts, axis=0)
        pts = pts[gen.permutation(m)]
        x = np.exp(_simplex_log_volumes(pts) - ltau)
        prob = x ** p / (a + b * x * x)
        assert np.all(prob <= 1.0 + 1e-12), "acceptance weight exceeds 1"
        acc = gen.random(m) < prob
        attempts += _used_attempts(acc, n - filled)
        take = pts[acc][: n - filled]
        out[filled:filled + len(take)] = take
        filled += len(take)
        if filled < n and attempts > cap * (filled + 1):
            raise LowAcceptanceError(
                f"sampler exceeded {cap} attempts (empirical acceptance {filled / attempts:.3g})")
    return out, attempts


def resolve_method(params: ModelParams, method: str) -> str:
    if method not in _METHODS:
        raise DomainError(f"unknown sampling method {method!r}; choose from {_METHODS}")
    if method == "auto":
        if params.nu == -1.0:
            return "plain"
        return "volume" if params.nu >= 1.0 else "mixture"
    if method == "volume" and params.nu < 1.0:
        raise DomainError("the volume method needs nu >= 1")
    return method


def sample_weighted_points_batch(params: ModelParams, n: int, rng, method: str = "auto",
                                 cap: int = DEFAULT_ATTEMPT_CAP):
    """``n`` independent draws of (Y_1, ..., Y_d); returns (array (n, d, d-1), attempts)."""
    validate(params)
    gen = _gen(rng)
    kind = resolve_method(params, method)
    if kind == "plain":
        return _plain_batch(params, gen, n, cap)
    if kind == "volume":
        return _volume_batch(params, gen, n, cap)
    return _mixture_batch(params, gen, n, cap)


def sample_weighted_points(params: ModelParams, rng, method: str = "plain",
                           cap: int = DEFAULT_ATTEMPT_CAP):
    """One tuple of weighted points and the number of attempts used."""
    validate(params)
    gen = _gen(rng)
    kind = resolve_method(params, method)
    if kind != "plain":
        pts, att = sample_weighted_points_batch(params, 1, gen, method=method, cap=cap)
        return pts[0], att
    d, k = params.d, params.dim
    p = params.nu + 1.0
    ltau = log_tau(k)
    for attempt in range(1, cap + 1):
        pts = _beta_points(gen, k, params.beta, d)
        if p == 0.0:
            return pts, attempt
        logw = p * (float(_simplex_log_volumes(pts[None])[0]) - ltau)
        assert logw <= 1e-9, "acceptance weight exceeds 1"
        if math.log(gen.random()) < logw:
            return pts, attempt
    raise LowAcceptanceError(f"no acceptance within {cap} attempts (empirical acceptance < {1 / cap:.3g})")


def sample_cell(params: ModelParams, rng, method: str = "plain") -> CellSample:
    gen = _gen(rng)
    radius = float(sample_radius(params, gen))
    pts, attempts = sample_weighted_points(params, gen, method=method)
    verts = radius * pts
    logvol = float(_simplex_log_volumes(pts[None])[0]) + params.dim * math.log(radius)
    return CellSample(radius=radius, points=pts, simplex=Simplex(verts), log_volume=logvol,
                      attempts=attempts)


@dataclass
class CellBatch:
    dim: int
    radius: np.ndarray
    log_shape_volume: np.ndarray
    points: np.ndarray | None
    attempts: int

    @property
    def log_volume(self) -> np.ndarray:
        return self.dim * np.log(self.radius) + self.log_shape_volume


def sample_cells(params: ModelParams, n: int, rng, method: str = "auto",
                 keep_points: bool = True) -> CellBatch:
    """``n`` independent cells: radii, point tuples and log-volumes."""
    gen = _gen(rng)
    radius = np.asarray(sample_radius(params, gen, size=n))
    pts, attempts = sample_weighted_points_batch(params, n, gen, method=method)
    logdelta = _simplex_log_volumes(pts)
    return CellBatch(dim=params.dim, radius=radius, log_shape_volume=logdelta,
                     points=pts if keep_points else None, attempts=attempts)


def sample_log_volumes(params: ModelParams, n: int, rng, method: str = "auto",
                       chunk: int = 50_000) -> np.ndarray:
    """log-volumes of ``n`` independent cells.

    For nu = -1 with ``method="auto"`` the points are never materialized: the
    volume is a product of successive distances to affine hulls, and each
    distance is drawn from its exact conditional law (see
    :func:`iid_log_shape_volumes`). Otherwise cells are sampled in chunks.
    """
    validate(params)
    gen = _gen(rng)
    out = np.empty(n)
    for start in range(0, n, chunk):
        m = min(chunk, n - start)
        logr = np.log(np.asarray(sample_radius(params, gen, size=m)))
        if params.nu == -1.0 and method == "auto":
            logdelta = iid_log_shape_volumes(params.dim, params.beta, m, gen)
        else:
            pts, _ = sample_weighted_points_batch(params, m, gen, method=method)
            logdelta = _simplex_log_volumes(pts)
        out[start:start + m] = params.dim * logr + logdelta
    return out


def iid_log_shape_volumes(dim: int, beta: float, n: int, rng) -> np.ndarray:
    """log volume of the simplex spanned by dim+1 independent beta points in B^dim.

    The j-th point adds a factor equal to its distance h to the affine hull of
    the previous points. Projected onto the m-dimensional orthogonal complement
    of that hull's direction space, the point is beta distributed with parameter
    beta + (dim - m)/2, and only the distance q of the hull from the origin
    matters: h^2 = (rho u - q)^2 + rho^2 (1 - u^2) with rho the radial part and u
    the cosine to the hull's nearest point. The hull's new distance from the
    origin follows by one more projection.
    """
    gen = _gen(rng)
    q2 = gen.beta(dim / 2.0, beta + 1.0, size=n)
    total = np.zeros(n)
    for j in range(1, dim + 1):
        m = dim - j + 1
        b = beta + (j - 1) / 2.0
        rho = np.sqrt(gen.beta(m / 2.0, b + 1.0, size=n))
        sign = np.where(gen.random(n) < 0.5, -1.0, 1.0)
        if m == 1:
            u = sign
        else:
            u = sign * np.sqrt(gen.beta(0.5, (m - 1) / 2.0, size=n))
        q = np.sqrt(q2)
        along = rho * u - q
        h2 = along * along + rho * rho * (1.0 - u * u)
        h2 = np.maximum(h2, np.finfo(float).tiny)
        total += 0.5 * np.log(h2)
        q2 = np.maximum(q2 - q2 * along * along / h2, 0.0)
    return total - math.lgamma(dim + 1)
