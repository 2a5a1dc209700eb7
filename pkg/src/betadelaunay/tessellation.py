"""Planar (and linear) beta-Delaunay tessellations from Poisson input.

Points (v, h) of a Poisson process with intensity gamma c h^beta dh dv are
lifted to (v, |v|^2 + h); the lower convex hull of the lifted cloud is the
triangulation dual to the power (Laguerre) diagram with power function
pow(w, (v, h)) = |w - v|^2 + h. Each cell carries its apex z (the Laguerre
vertex) and the common power value K of its vertices at z.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.spatial import ConvexHull, cKDTree

from .errors import (CertificateError, DegenerateConfigurationError, DomainError,
                     EmptySelectionError)
from .model import ModelParams, c_const, log_volume_moment, validate
from .sampler import _gen

PREDICATE_RTOL = 1e-10


@dataclass(frozen=True)
class Window:
    """Axis-aligned box given by lower and upper corners."""

    lower: tuple
    upper: tuple

    def __post_init__(self):
        lo = tuple(float(x) for x in self.lower)
        hi = tuple(float(x) for x in self.upper)
        if len(lo) != len(hi) or not lo or any(h <= l for l, h in zip(lo, hi)):
            raise DomainError("window needs matching corners with upper > lower in every coordinate")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def square(cls, side: float, dim: int = 2, center: float = 0.0) -> "Window":
        h = side / 2.0
        return cls(tuple([center - h] * dim), tuple([center + h] * dim))

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def volume(self) -> float:
        return float(np.prod(np.subtract(self.upper, self.lower)))

    def padded(self, margin: float) -> "Window":
        return Window(tuple(x - margin for x in self.lower), tuple(x + margin for x in self.upper))

    def shifted(self, offset) -> "Window":
        off = np.broadcast_to(np.asarray(offset, dtype=float), (self.dim,))
        return Window(tuple(np.add(self.lower, off)), tuple(np.add(self.upper, off)))

    def contains(self, pts: np.ndarray) -> np.ndarray:
        p = np.asarray(pts, dtype=float).reshape(-1, self.dim)
        return np.all((p >= np.array(self.lower)) & (p < np.array(self.upper)), axis=1)


@dataclass
class WeightedPointSet:
    positions: np.ndarray
    heights: np.ndarray
    window: Window
    margin: float
    h_max: float
    params: ModelParams

    @property
    def box(self) -> Window:
        return self.window.padded(self.margin)

    def __len__(self) -> int:
        return len(self.heights)


@dataclass
class RegularTriangulation:
    input: WeightedPointSet
    cells: np.ndarray          # (n_cells, d) indices into input points
    apex: np.ndarray           # (n_cells, d-1)
    power: np.ndarray          # (n_cells,) common power value K
    volume: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.volume is None:
            self.volume = cell_volumes(self.input.positions, self.cells)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    def in_window(self, window: Window | None = None) -> np.ndarray:
        return (window or self.input.window).contains(self.apex)


@dataclass(frozen=True)
class ErgodicEstimate:
    s: float
    nu: float
    estimate: float
    cells_used: int
    boundary_discarded: int


# ---------------------------------------------------------------------------
# Poisson input


def expected_point_count(params: ModelParams, box: Window, h_max: float) -> float:
    b = params.beta
    return params.gamma * c_const(params) * box.volume * h_max ** (b + 1) / (b + 1)


def default_margin(params: ModelParams) -> float:
    """Three times the typical cell diameter, estimated as 2 sqrt(mean cell volume)."""
    mean_vol = math.exp(log_volume_moment(ModelParams(params.d, params.beta, 0.0, params.gamma), 1.0))
    diam = 2.0 * mean_vol ** (1.0 / params.dim)
    return 3.0 * diam


def sample_poisson(params: ModelParams, window: Window, h_max: float, rng,
                   margin: float | None = None) -> WeightedPointSet:
    """Poisson points with height density proportional to h^beta on [0, h_max] in the padded window."""
    validate(params)
    if params.d not in (2, 3):
        raise DomainError("tessellations are supported for d in {2, 3}")
    if window.dim != params.dim:
        raise DomainError(f"window dimension {window.dim} does not match d-1 = {params.dim}")
    if not h_max > 0:
        raise DomainError("h_max must be positive")
    if margin is None:
        margin = default_margin(params)
    gen = _gen(rng)
    box = window.padded(margin)
    n = int(gen.poisson(expected_point_count(params, box, h_max)))
    pos = gen.uniform(np.array(box.lower), np.array(box.upper), size=(n, params.dim))
    heights = h_max * gen.random(n) ** (1.0 / (params.beta + 1.0))
    return WeightedPointSet(pos, heights, window, float(margin), float(h_max), params)


def sample_fixed_count(params: ModelParams, n_points: int, window: Window, h_max: float,
                       rng) -> WeightedPointSet:
    """``n_points`` iid points uniform in the window with heights of density h^beta on [0, h_max].

    This is the Poisson input conditioned on its count, used for small exhaustive checks.
    """
    validate(params)
    if window.dim != params.dim:
        raise DomainError(f"window dimension {window.dim} does not match d-1 = {params.dim}")
    gen = _gen(rng)
    pos = gen.uniform(np.array(window.lower), np.array(window.upper), size=(n_points, params.dim))
    heights = h_max * gen.random(n_points) ** (1.0 / (params.beta + 1.0))
    return WeightedPointSet(pos, heights, window, 0.0, float(h_max), params)


# ---------------------------------------------------------------------------
# triangulation


def cell_volumes(positions: np.ndarray, cells: np.ndarray) -> np.ndarray:
    if len(cells) == 0:
        return np.zeros(0)
    v = positions[cells]
    if positions.shape[1] == 1:
        return np.abs(v[:, 1, 0] - v[:, 0, 0])
    e1 = v[:, 1] - v[:, 0]
    e2 = v[:, 2] - v[:, 0]
    return 0.5 * np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])


def _apex(positions: np.ndarray, heights: np.ndarray, cells: np.ndarray):
    """Solve |z - v_i|^2 + h_i = K for all vertices of every cell."""
    v = positions[cells]
    h = heights[cells]
    w = np.sum(v * v, axis=2) + h
    a = 2.0 * (v[:, 1:] - v[:, :1])
    b = w[:, 1:] - w[:, :1]
    z = np.linalg.solve(a, b[..., None])[..., 0]
    k = np.sum((z - v[:, 0]) ** 2, axis=1) + h[:, 0]
    return z, k


def _lower_envelope_1d(x: np.ndarray, w: np.ndarray) -> list[int]:
    """Indices of the lower convex hull of (x, w), left to right (monotone chain)."""
    order = np.lexsort((w, x))
    hull: list[int] = []
    for i in order:
        while len(hull) >= 2:
            o, a = hull[-2], hull[-1]
            cross = _orient1d_lifted(x[o], w[o], x[a], w[a], x[i], w[i])
            if cross <= 0:
                hull.pop()
            else:
                break
        if hull and x[hull[-1]] == x[i]:
            continue
        hull.append(int(i))
    return hull


def _orient1d_lifted(x0, w0, x1, w1, x2, w2) -> float:
    """Sign of the turn (x0,w0) -> (x1,w1) -> (x2,w2), exact when nearly collinear."""
    val = (x1 - x0) * (w2 - w0) - (w1 - w0) * (x2 - x0)
    scale = abs((x1 - x0) * (w2 - w0)) + abs((w1 - w0) * (x2 - x0))
    if abs(val) > PREDICATE_RTOL * scale:
        return float(np.sign(val))
    fx0, fw0, fx1, fw1, fx2, fw2 = (Fraction(float(t)) for t in (x0, w0, x1, w1, x2, w2))
    exact = (fx1 - fx0) * (fw2 - fw0) - (fw1 - fw0) * (fx2 - fx0)
    if exact == 0:
        raise DegenerateConfigurationError("three lifted points are collinear")
    return 1.0 if exact > 0 else -1.0


def build_triangulation(pts: WeightedPointSet) -> RegularTriangulation:
    """Lower hull of the lifted points; points off the lower hull appear in no cell."""
    dim = pts.positions.shape[1]
    if dim not in (1, 2):
        raise DomainError("build_triangulation supports dimensions 1 and 2")
    n = len(pts)
    if n < dim + 1:
        raise DomainError(f"need at least {dim + 1} points, got {n}")
    pos, hts = pts.positions, pts.heights
    lifted_w = np.sum(pos * pos, axis=1) + hts
    if dim == 1:
        hull = _lower_envelope_1d(pos[:, 0], lifted_w)
        cells = np.array([[hull[i], hull[i + 1]] for i in range(len(hull) - 1)], dtype=np.int64)
        cells = cells.reshape(-1, 2)
    else:
        center = pos.mean(axis=0)
        lifted = np.column_stack([pos - center, np.sum((pos - center) ** 2, axis=1) + hts])
        hull = ConvexHull(lifted, qhull_options="Qt Qbb")
        normals = hull.equations[:, :3]
        lower = normals[:, 2] < -1e-12 * np.linalg.norm(normals, axis=1)
        cells = hull.simplices[lower].astype(np.int64)
        cells = _orient_ccw(pos, cells)
    if len(cells) == 0:
        return RegularTriangulation(pts, cells.reshape(0, dim + 1), np.zeros((0, dim)), np.zeros(0))
    z, k = _apex(pos, hts, cells)
    return RegularTriangulation(pts, cells, z, k)


def _orient_ccw(pos, cells):
    v = pos[cells]
    e1 = v[:, 1] - v[:, 0]
    e2 = v[:, 2] - v[:, 0]
    cw = (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]) < 0
    cells = cells.copy()
    cells[cw, 1], cells[cw, 2] = cells[cw, 2].copy(), cells[cw, 1].copy()
    return cells


def power_of(tri: RegularTriangulation, z: np.ndarray, idx) -> np.ndarray:
    p = tri.input.positions[idx]
    return np.sum((p - z) ** 2, axis=-1) + tri.input.heights[idx]


def _fraction_det(m):
    m = [row[:] for row in m]
    n = len(m)
    det = Fraction(1)
    for c in range(n):
        piv = next((r for r in range(c, n) if m[r][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            m[c], m[piv] = m[piv], m[c]
            det = -det
        det *= m[c][c]
        for r in range(c + 1, n):
            f = m[r][c] / m[c][c]
            for j in range(c, n):
                m[r][j] -= f * m[c][j]
    return det


def _exact_power_gap(tri: RegularTriangulation, cell: np.ndarray, q: int) -> Fraction:
    """pow(z, q) - K in exact rational arithmetic, z and K solved exactly from the cell."""
    pos, hts = tri.input.positions, tri.input.heights
    dim = pos.shape[1]
    v = [[Fraction(float(c)) for c in pos[i]] for i in cell]
    w = [sum(c * c for c in v[j]) + Fraction(float(hts[i])) for j, i in enumerate(cell)]
    rows = [[2 * (v[j][c] - v[0][c]) for c in range(dim)] for j in range(1, dim + 1)]
    rhs = [w[j] - w[0] for j in range(1, dim + 1)]
    det = _fraction_det(rows)
    if det == 0:
        raise DegenerateConfigurationError("cell vertices are affinely dependent")
    z = []
    for c in range(dim):
        swapped = [r[:c] + [rhs[j]] + r[c + 1:] for j, r in enumerate(rows)]
        z.append(_fraction_det(swapped) / det)
    k = sum((z[c] - v[0][c]) ** 2 for c in range(dim)) + Fraction(float(hts[cell[0]]))
    qv = [Fraction(float(c)) for c in pos[q]]
    return sum((z[c] - qv[c]) ** 2 for c in range(dim)) + Fraction(float(hts[q])) - k


def empty_power_sphere_violations(tri: RegularTriangulation, cell_ids=None,
                                  brute_force: bool = False) -> list[tuple[int, int]]:
    """(cell, point) pairs with pow(apex, point) < K for a point outside the cell.

    Near-ties (relative gap below ``PREDICATE_RTOL``) are re-decided in exact
    rational arithmetic; an exact tie raises DegenerateConfigurationError.
    """
    pos = tri.input.positions
    ids = np.arange(tri.n_cells) if cell_ids is None else np.asarray(cell_ids)
    tree = None if brute_force else cKDTree(pos)
    bad = []
    for c in ids:
        cell = tri.cells[c]
        z, k = tri.apex[c], tri.power[c]
        if brute_force:
            cand = np.arange(len(pos))
        else:
            cand = np.asarray(tree.query_ball_point(z, math.sqrt(max(k, 0.0)) * (1 + 1e-9) + 1e-12),
                              dtype=np.int64)
        cand = cand[~np.isin(cand, cell)]
        if cand.size == 0:
            continue
        gap = power_of(tri, z, cand) - k
        scale = np.abs(k) + np.sum((pos[cand] - z) ** 2, axis=1) + 1e-300
        for q, g, sc in zip(cand, gap, scale):
            if g > PREDICATE_RTOL * sc:
                continue
            if g < -PREDICATE_RTOL * sc:
                bad.append((int(c), int(q)))
                continue
            exact = _exact_power_gap(tri, cell, int(q))
            if exact == 0:
                raise DegenerateConfigurationError(f"point {q} lies on the power sphere of cell {c}")
            if exact < 0:
                bad.append((int(c), int(q)))
    return bad


def certificate_level(tri: RegularTriangulation) -> float:
    """Largest power value among cells whose apex lies in the window."""
    sel = tri.in_window()
    return float(tri.power[sel].max()) if np.any(sel) else 0.0


def verify_height_cap(tri: RegularTriangulation) -> bool:
    """True when truncation at h_max and at the sampling margin cannot alter window cells.

    An omitted point has power at least h_max (height cut) or at least margin^2
    (outside the padded box) at any apex in the window, so if every window apex
    has K below both levels, no omitted point can enter its power sphere.
    """
    pts = tri.input
    level = certificate_level(tri)
    return level < pts.h_max and level < pts.margin ** 2


def build_certified(params: ModelParams, window: Window, rng, h_max: float | None = None,
                    margin: float | None = None, max_rounds: int = 80):
    """Sample and triangulate, raising h_max (and the margin if needed) until certified.

    The point count grows like h_max^(beta+1), so the cap is raised in steps
    that at most double the expected count, or jump to just above the observed
    apex level when that costs at most an eightfold count. Every retry reuses
    the same generator state, so the result is reproducible.
    """
    gen = _gen(rng)
    if margin is None:
        margin = default_margin(params)
    if h_max is None:
        h_max = margin ** 2 / 4.0
    growth = 2.0 ** (1.0 / (params.beta + 1.0))
    state = gen.bit_generator.state
    for _ in range(max_rounds):
        gen.bit_generator.state = state
        pts = sample_poisson(params, window, h_max, gen, margin=margin)
        if len(pts) <= params.dim:
            expected = expected_point_count(params, window.padded(margin), h_max)
            h_max *= max(growth, (10.0 / expected) ** (1.0 / (params.beta + 1.0)))
            continue
        tri = build_triangulation(pts)
        if verify_height_cap(tri):
            return tri
        level = certificate_level(tri)
        if level >= h_max:
            h_max = min(max(h_max * growth, 1.01 * level), h_max * growth ** 3)
        if level >= margin ** 2:
            margin = math.sqrt(2.0) * margin
    raise CertificateError("could not certify the window after repeated enlargement")


# ---------------------------------------------------------------------------
# estimation


def estimate_typical_moment(tri: RegularTriangulation, nu: float, s: float,
                            window: Window | None = None) -> ErgodicEstimate:
    """Ratio estimator sum Vol^(nu+s) / sum Vol^nu over cells whose apex lies in the window."""
    sel = tri.in_window(window)
    used = int(sel.sum())
    if used == 0:
        raise EmptySelectionError("no cell has its apex in the window")
    logv = np.log(tri.volume[sel])
    if s == 0:
        est = 1.0
    else:
        shift = float(logv.max())
        num = np.sum(np.exp((nu + s) * (logv - shift)))
        den = np.sum(np.exp(nu * (logv - shift)))
        est = float(num / den * math.exp(s * shift))
    return ErgodicEstimate(s=float(s), nu=float(nu), estimate=est, cells_used=used,
                           boundary_discarded=int(tri.n_cells - used))


def window_for_cells(params: ModelParams, n_cells: int) -> Window:
    """Square window expected to hold about ``n_cells`` cells."""
    mean_vol = math.exp(log_volume_moment(ModelParams(params.d, params.beta, 0.0, params.gamma), 1.0))
    side = (n_cells * mean_vol) ** (1.0 / params.dim)
    return Window.square(side, dim=params.dim)


# ---------------------------------------------------------------------------
# output


def _clip_segment(p, q, window: Window):
    """Liang-Barsky clipping of segment pq to the window; None when outside."""
    (x0, y0), (x1, y1) = p, q
    dx, dy = x1 - x0, y1 - y0
    t0, t1 = 0.0, 1.0
    for pk, qk in ((-dx, x0 - window.lower[0]), (dx, window.upper[0] - x0),
                   (-dy, y0 - window.lower[1]), (dy, window.upper[1] - y0)):
        if pk == 0:
            if qk < 0:
                return None
            continue
        r = qk / pk
        if pk < 0:
            t0 = max(t0, r)
        else:
            t1 = min(t1, r)
        if t0 > t1:
            return None
    return (x0 + t0 * dx, y0 + t0 * dy), (x0 + t1 * dx, y0 + t1 * dy)


def unique_edges(cells: np.ndarray) -> np.ndarray:
    if len(cells) == 0:
        return np.zeros((0, 2), dtype=np.int64)
    e = np.concatenate([cells[:, [0, 1]], cells[:, [1, 2]], cells[:, [2, 0]]])
    e.sort(axis=1)
    return np.unique(e, axis=0)


def render_svg(tri: RegularTriangulation, window: Window, path, size: int = 800) -> Path:
    """Write the cell edges clipped to ``window`` as an SVG file."""
    if window.dim != 2:
        raise DomainError("render_svg needs a planar tessellation")
    w = window.upper[0] - window.lower[0]
    h = window.upper[1] - window.lower[1]
    scale = size / max(w, h)
    pos = tri.input.positions
    lines = []
    for a, b in unique_edges(tri.cells):
        seg = _clip_segment(pos[a], pos[b], window)
        if seg is None:
            continue
        (x0, y0), (x1, y1) = seg
        if x0 == x1 and y0 == y1:
            continue
        X0, X1 = (x0 - window.lower[0]) * scale, (x1 - window.lower[0]) * scale
        Y0, Y1 = (window.upper[1] - y0) * scale, (window.upper[1] - y1) * scale
        lines.append(f'<line x1="{X0:.3f}" y1="{Y0:.3f}" x2="{X1:.3f}" y2="{Y1:.3f}"/>')
    W, H = w * scale, h * scale
    svg = "\n".join([
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W:.0f}" height="{H:.0f}" '
        f'viewBox="0 0 {W:.3f} {H:.3f}">',
        f'<rect width="{W:.3f}" height="{H:.3f}" fill="white"/>',
        '<g stroke="black" stroke-width="0.6" fill="none">',
        *lines,
        "</g>",
        "</svg>",
        "",
    ])
    out = Path(path)
    out.write_text(svg)
    return out


def write_cells_csv(tri: RegularTriangulation, path, window: Window | None = None) -> Path:
    """One row per cell with apex in the window: vertex coordinates, volume, apex, power."""
    sel = np.flatnonzero(tri.in_window(window))
    dim = tri.input.positions.shape[1]
    header = [f"v{i}_{c}" for i in range(dim + 1) for c in "xy"[:dim]]
    header += ["volume"] + [f"apex_{c}" for c in "xy"[:dim]] + ["power"]
    rows = [",".join(header)]
    pos = tri.input.positions
    for c in sel:
        vals = list(pos[tri.cells[c]].reshape(-1)) + [tri.volume[c]] + list(tri.apex[c]) + [tri.power[c]]
        rows.append(",".join(repr(float(v)) for v in vals))
    out = Path(path)
    out.write_text("\n".join(rows) + "\n")
    return out


def manifest(tri: RegularTriangulation, seed: int | None = None) -> dict:
    pts = tri.input
    p = pts.params
    return {
        "params": {"d": p.d, "beta": p.beta, "nu": p.nu, "gamma": p.gamma},
        "window": {"lower": list(pts.window.lower), "upper": list(pts.window.upper)},
        "h_max": pts.h_max,
        "margin": pts.margin,
        "seed": seed,
        "points": len(pts),
        "cells": int(tri.n_cells),
        "cells_in_window": int(tri.in_window().sum()),
        "certified": bool(verify_height_cap(tri)),
    }


def write_manifest(tri: RegularTriangulation, path, seed: int | None = None) -> Path:
    out = Path(path)
    out.write_text(json.dumps(manifest(tri, seed), indent=2, sort_keys=True) + "\n")
    return out


def volume_cv(tri: RegularTriangulation, window: Window | None = None) -> float:
    v = tri.volume[tri.in_window(window)]
    return float(v.std() / v.mean())


def figure_presets() -> dict[str, ModelParams]:
    return {"beta5": ModelParams(3, 5.0, 0.0, 1.0), "beta15": ModelParams(3, 15.0, 0.0, 1.0)}


__all__: Sequence[str] = [
    "Window", "WeightedPointSet", "RegularTriangulation", "ErgodicEstimate",
    "sample_poisson", "sample_fixed_count", "build_triangulation", "verify_height_cap", "build_certified",
    "estimate_typical_moment", "empty_power_sphere_violations", "render_svg",
    "write_cells_csv", "write_manifest", "window_for_cells", "expected_point_count",
]
