"""Simplex geometry: volume, circumsphere, vertex-matching distance, shape deviation."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm
from scipy.optimize import minimize
from scipy.spatial.transform import Rotation

from .errors import DegenerateSimplexError, DomainError

DEGENERACY_RTOL = 1e-12


@dataclass(frozen=True)
class Simplex:
    """A simplex given by ``dim + 1`` vertices in R^dim (rows of ``vertices``)."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1] + 1:
            raise DomainError(f"a simplex in R^k needs k+1 vertices, got array of shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise DomainError("simplex vertices must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    def scaled(self, factor: float, shift=None) -> "Simplex":
        v = self.vertices * factor
        if shift is not None:
            v = v + np.asarray(shift, dtype=float)
        return Simplex(v)


@dataclass(frozen=True)
class Circumsphere:
    center: np.ndarray
    radius: float


def _as_simplex(s) -> Simplex:
    return s if isinstance(s, Simplex) else Simplex(np.asarray(s, dtype=float))


def simplex_volume(s) -> float:
    """|det[v_1 - v_0, ..., v_k - v_0]| / k!."""
    v = _as_simplex(s).vertices
    k = v.shape[1]
    return abs(float(np.linalg.det(v[1:] - v[0]))) / math.factorial(k)


def batch_log_volume(vertices: np.ndarray) -> np.ndarray:
    """log volume of many simplices; ``vertices`` has shape (n, k+1, k)."""
    v = np.asarray(vertices, dtype=float)
    k = v.shape[-1]
    edges = v[:, 1:, :] - v[:, :1, :]
    _, logdet = np.linalg.slogdet(edges)
    return logdet - math.lgamma(k + 1)


def circumsphere(s) -> Circumsphere:
    """Center equidistant from all vertices, via the linear system 2(v_i - v_0).z = |v_i|^2 - |v_0|^2."""
    simplex = _as_simplex(s)
    v = simplex.vertices
    k = simplex.dim
    a = 2.0 * (v[1:] - v[0])
    b = np.sum(v[1:] ** 2, axis=1) - np.sum(v[0] ** 2)
    scale = float(np.max(np.linalg.norm(v - v.mean(axis=0), axis=1)))
    vol = simplex_volume(simplex)
    if scale == 0.0 or vol < DEGENERACY_RTOL * scale ** k:
        raise DegenerateSimplexError("simplex is degenerate; circumsphere undefined")
    try:
        z = np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:
        raise DegenerateSimplexError("singular circumsphere system") from exc
    radius = float(np.mean(np.linalg.norm(v - z, axis=1)))
    return Circumsphere(center=z, radius=radius)


def rho_pair(s1, s2) -> float:
    """Smallest r such that every vertex of s1 lies within r of some vertex of s2."""
    a = _as_simplex(s1).vertices
    b = _as_simplex(s2).vertices
    if a.shape[1] != b.shape[1]:
        raise DomainError("rho_pair needs simplices of equal dimension")
    dist = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=2)
    return float(dist.min(axis=1).max())


def tau(dim: int) -> float:
    """Volume of the regular dim-simplex inscribed in the unit sphere."""
    if int(dim) != dim or dim < 1:
        raise DomainError("tau needs an integer dimension >= 1")
    n = int(dim)
    return math.sqrt(n + 1) / math.factorial(n) * ((n + 1) / n) ** (n / 2)


def log_tau(dim: int) -> float:
    n = int(dim)
    return 0.5 * math.log(n + 1) - math.lgamma(n + 1) + 0.5 * n * math.log((n + 1) / n)


def regular_simplex(dim: int) -> np.ndarray:
    """Vertices of a regular simplex inscribed in the unit sphere of R^dim."""
    n = int(dim)
    e = np.eye(n + 1)
    centered = e - e.mean(axis=0)
    # orthonormal basis of the hyperplane sum(x) = 0
    q, _ = np.linalg.qr(centered.T)
    coords = centered @ q[:, :n]
    return coords / np.linalg.norm(coords[0])


def normalize(s) -> np.ndarray:
    """Vertices moved so the circumsphere is the unit sphere centred at 0."""
    sphere = circumsphere(s)
    return (_as_simplex(s).vertices - sphere.center) / sphere.radius


def _rho_shape_planar(unit_vertices: np.ndarray) -> float:
    """Exact shape deviation of a triangle inscribed in the unit circle.

    A rotated equilateral triangle has vertices at phi + {0, 120, 240} degrees,
    so only vertex angles modulo 120 degrees matter. The best phi covers those
    reduced angles by the shortest arc L; the worst vertex is then at angular
    distance L/2 and rho = 2 sin(L/4). Reflections produce the same family.
    """
    third = 2.0 * math.pi / 3.0
    ang = np.sort(np.mod(np.arctan2(unit_vertices[:, 1], unit_vertices[:, 0]), third))
    gaps = np.diff(np.concatenate([ang, [ang[0] + third]]))
    arc = third - float(gaps.max())
    return 2.0 * math.sin(arc / 4.0)


def _rotations_from(x: np.ndarray, template: np.ndarray) -> list[np.ndarray]:
    """Orthogonal alignments of template onto x for every vertex assignment."""
    n = x.shape[0]
    out = []
    for perm in itertools.permutations(range(n)):
        t = template[list(perm)]
        u, _, vt = np.linalg.svd(t.T @ x)
        out.append(u @ vt)  # may be a reflection; both orientation classes are kept
    return out


def _rho_shape_general(x: np.ndarray, refine: bool = True) -> float:
    dim = x.shape[1]
    template = regular_simplex(dim)

    def rho_for(q):
        return rho_pair(x, template @ q)

    candidates = _rotations_from(x, template)
    candidates.sort(key=rho_for)
    best = rho_for(candidates[0])
    if not refine:
        return best
    for q0 in candidates[: min(6, len(candidates))]:
        sign = np.sign(np.linalg.det(q0))
        base = q0 if sign > 0 else q0 * np.array([-1.0] + [1.0] * (dim - 1))[:, None]

        def obj(w, base=base, sign=sign):
            rot = _small_rotation(w, dim) @ base
            if sign < 0:
                rot = np.diag([-1.0] + [1.0] * (dim - 1)) @ rot
            return rho_for(rot)

        n_par = dim * (dim - 1) // 2
        res = minimize(obj, np.zeros(n_par), method="Nelder-Mead",
                       options={"xatol": 1e-9, "fatol": 1e-12, "maxiter": 4000})
        best = min(best, float(res.fun))
    return best


def _small_rotation(w: np.ndarray, dim: int) -> np.ndarray:
    if dim == 3:
        return Rotation.from_rotvec(w).as_matrix()
    skew = np.zeros((dim, dim))
    iu = np.triu_indices(dim, 1)
    skew[iu] = w
    skew = skew - skew.T
    return expm(skew)


def rho_shape(s, refine: bool = True) -> float:
    """Deviation of the simplex shape from regularity.

    Exact in dimension 1 (always 0) and 2; for dimension >= 3 an upper bound
    obtained from orthogonal alignment over all vertex assignments followed by
    local rotation refinement.
    """
    x = normalize(s)
    dim = x.shape[1]
    if dim == 1:
        return 0.0
    if dim == 2:
        return _rho_shape_planar(x)
    return _rho_shape_general(x, refine=refine)


def rho_shape_planar_batch(vertices: np.ndarray) -> np.ndarray:
    """Vectorized exact shape deviation for triangles, ``vertices`` of shape (n, 3, 2)."""
    v = np.asarray(vertices, dtype=float)
    a = 2.0 * (v[:, 1:, :] - v[:, :1, :])
    b = np.sum(v[:, 1:, :] ** 2, axis=2) - np.sum(v[:, :1, :] ** 2, axis=2)
    z = np.linalg.solve(a, b[..., None])[..., 0]
    rel = v - z[:, None, :]
    third = 2.0 * math.pi / 3.0
    ang = np.sort(np.mod(np.arctan2(rel[..., 1], rel[..., 0]), third), axis=1)
    wrapped = np.concatenate([ang, ang[:, :1] + third], axis=1)
    arc = third - np.diff(wrapped, axis=1).max(axis=1)
    return 2.0 * np.sin(arc / 4.0)


def normalize_batch(vertices: np.ndarray) -> np.ndarray:
    """Circumsphere normalization of a stack of simplices, shape (n, k+1, k)."""
    v = np.asarray(vertices, dtype=float)
    a = 2.0 * (v[:, 1:, :] - v[:, :1, :])
    b = np.sum(v[:, 1:, :] ** 2, axis=2) - np.sum(v[:, :1, :] ** 2, axis=2)
    z = np.linalg.solve(a, b[..., None])[..., 0]
    rel = v - z[:, None, :]
    return rel / np.linalg.norm(rel[:, :1, :], axis=2, keepdims=True)


def rho_shape_aligned_batch(vertices: np.ndarray) -> np.ndarray:
    """Shape deviation upper bound for a stack of simplices, shape (n, k+1, k).

    Vectorized version of the alignment stage of :func:`rho_shape` without the
    local refinement: the minimum over vertex assignments of the directed
    vertex distance after orthogonal alignment. Exact values in the plane come
    from :func:`rho_shape_planar_batch`.
    """
    x = normalize_batch(vertices)
    dim = x.shape[2]
    template = regular_simplex(dim)
    best = np.full(x.shape[0], np.inf)
    for perm in itertools.permutations(range(dim + 1)):
        t = template[list(perm)]
        u, _, vt = np.linalg.svd(np.einsum("ij,nik->njk", t, x))
        fitted = np.einsum("ij,njk->nik", template, u @ vt)
        dist = np.linalg.norm(x[:, :, None, :] - fitted[:, None, :, :], axis=3)
        best = np.minimum(best, dist.min(axis=2).max(axis=1))
    return best
