"""Quadrature sets for the half space, its boundary, spheres and balls.

Besides the tensor-product builders this module holds the graded composite
Gauss rules used to integrate near-singular kernels accurately, and the
grid rearrangement used by the symmetrization check.
"""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Any, Callable, Iterable, Mapping

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

__all__ = [
    "DomainKind",
    "QuadratureSet",
    "ScalarField",
    "GridError",
    "DEFAULT_NODE_CAP",
    "build_sphere_mesh",
    "build_ball_quadrature",
    "build_halfspace_grids",
    "rearrange_decreasing",
    "gauss_legendre",
    "composite_gauss",
    "graded_breaks",
    "graded_radial_rule",
    "hemisphere_directions",
    "sphere_directions",
    "boundary_polar_rule",
    "volume_polar_rule",
    "write_csv",
    "read_csv",
]

DEFAULT_NODE_CAP = 2_000_000


class GridError(ValueError):
    """Invalid grid request (bad sizes, unsupported dimension, memory guard)."""


class DomainKind(enum.Enum):
    HALFSPACE_BOUNDARY = "halfspace_boundary"
    HALFSPACE_VOLUME = "halfspace_volume"
    SPHERE = "sphere"
    BALL = "ball"

    @property
    def is_boundary(self) -> bool:
        return self in (DomainKind.HALFSPACE_BOUNDARY, DomainKind.SPHERE)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class QuadratureSet:
    """Nodes and positive weights on one of the four model domains.

    Attributes
    ----------
    kind : DomainKind
    points : ndarray, shape (N, n)
        Nodes in ambient coordinates; boundary nodes carry ``x_n = 0``.
    weights : ndarray, shape (N,)
    meta : mapping
        Resolution and extent descriptors (read-only).
    """

    kind: DomainKind
    points: np.ndarray
    weights: np.ndarray
    meta: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if pts.ndim != 2 or w.ndim != 1 or len(pts) != len(w):
            raise GridError("points must be (N, n) and weights (N,)")
        if not np.all(w > 0):
            raise GridError("quadrature weights must be positive")
        object.__setattr__(self, "points", _frozen(pts))
        object.__setattr__(self, "weights", _frozen(w))
        object.__setattr__(self, "meta", MappingProxyType(dict(self.meta)))

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def size(self) -> int:
        return len(self.weights)

    def __len__(self) -> int:
        return self.size

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, np.asarray(values, dtype=float)))

    def measure(self) -> float:
        return float(self.weights.sum())

    def evaluate(self, func: Callable[[np.ndarray], np.ndarray]) -> "ScalarField":
        """Sample a vectorised closure ``func(points) -> values`` on the nodes."""
        return ScalarField(self, func(self.points))


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Values attached to the nodes of a :class:`QuadratureSet`."""

    grid: QuadratureSet
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.size,):
            raise GridError(
                f"field has {v.shape} values for a grid of {self.grid.size} nodes")
        if not np.all(np.isfinite(v)):
            raise GridError("field values must be finite")
        object.__setattr__(self, "values", _frozen(v))

    def with_values(self, values) -> "ScalarField":
        return ScalarField(self.grid, values)

    def integral(self) -> float:
        return self.grid.integrate(self.values)

    def __mul__(self, c: float) -> "ScalarField":
        return ScalarField(self.grid, self.values * float(c))

    __rmul__ = __mul__


# ---------------------------------------------------------------- 1-D rules

_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on ``[-1, 1]`` (cached, read-only)."""
    if order not in _GL_CACHE:
        x, w = roots_legendre(order)
        _GL_CACHE[order] = (_frozen(x), _frozen(w))
    return _GL_CACHE[order]


def composite_gauss(breaks, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre rule over consecutive breakpoints.

    ``breaks`` may be 1-D (one rule) or 2-D with one row of breakpoints per
    target; zero-width panels simply contribute zero weight, which lets a
    vectorised caller pad rows to a common length.
    """
    b = np.asarray(breaks, dtype=float)
    x, w = gauss_legendre(order)
    lo, hi = b[..., :-1], b[..., 1:]
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    nodes = mid[..., None] + half[..., None] * x
    weights = half[..., None] * w
    shape = b.shape[:-1] + (-1,)
    return nodes.reshape(shape), weights.reshape(shape)


def graded_breaks(a: float, b: float, focus: Iterable[float] = (),
                  min_scale: float = 1e-3, growth: float = 2.0,
                  extra: Iterable[float] = ()) -> np.ndarray:
    """Breakpoints on ``[a, b]`` refined geometrically towards focus points.

    Around every focus point ``c`` the breakpoints ``c +- min_scale * growth^j``
    are added, which resolves integrands varying on the scale of the
    distance to ``c`` (near-singular kernels).
    """
    if not b > a:
        raise GridError("graded_breaks needs b > a")
    pts = [a, b, *[e for e in extra if a < e < b]]
    span = b - a
    jmax = max(1, int(math.ceil(math.log(max(span / min_scale, 1.0)) / math.log(growth))) + 1)
    steps = min_scale * growth ** np.arange(jmax)
    for c in focus:
        if a <= c <= b:
            pts.append(c)
        for ladder in (c - steps, c + steps):
            pts.extend(ladder[(ladder > a) & (ladder < b)])
    out = np.unique(np.asarray(pts, dtype=float))
    return out


def graded_radial_rule(r_max: float | None, focus: Iterable[float] = (),
                       min_scale: float = 1e-3, order: int = 8,
                       scales: Iterable[float] = (), tail_panels: int = 12,
                       r_min: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """1-D rule on ``[r_min, r_max]`` or ``[r_min, inf)``.

    For an infinite range the part beyond ``T = max(focus, scales, 1) * 4``
    is mapped with ``r = T / s`` onto ``s in (0, 1]`` and split into panels
    graded towards ``s = 0``; algebraically decaying integrands become
    polynomially bounded in ``s``.
    """
    focus = [float(c) for c in focus]
    scales = [float(s) for s in scales]
    finite = r_max is not None and np.isfinite(r_max)
    if finite:
        upper = float(r_max)
    else:
        upper = 4.0 * max([abs(c) for c in focus] + scales + [1.0, r_min])
    extra = []
    for s in scales:
        extra.extend(r_min + s * 2.0 ** np.arange(-4, 6))
    br = graded_breaks(r_min, upper, focus, min_scale, extra=extra)
    x, w = composite_gauss(br, order)
    if finite:
        return x, w
    sb = np.concatenate([[0.0], 0.5 ** np.arange(tail_panels - 1, -1, -1)])
    s, ws = composite_gauss(sb, order)
    r_tail = upper / s
    w_tail = ws * upper / s**2
    return np.concatenate([x, r_tail]), np.concatenate([w, w_tail])


# ---------------------------------------------------------------- directions

def sphere_directions(n: int, level: int) -> tuple[np.ndarray, np.ndarray]:
    """Unit-sphere product rule in ``R^n`` (directions and weights)."""
    if level < 1:
        raise GridError("sphere level must be >= 1")
    if n == 2:
        m = 2 * level
        phi = (np.arange(m) + 0.5) * (2 * np.pi / m)
        return np.stack([np.cos(phi), np.sin(phi)], axis=1), np.full(m, 2 * np.pi / m)
    if n == 3:
        ct, wt = gauss_legendre(level)
        m = 2 * level
        phi = (np.arange(m) + 0.5) * (np.pi / level)
        st = np.sqrt(1.0 - ct**2)
        pts = np.stack([np.repeat(st, m) * np.tile(np.cos(phi), level),
                        np.repeat(st, m) * np.tile(np.sin(phi), level),
                        np.repeat(ct, m)], axis=1)
        return pts, np.repeat(wt, m) * (np.pi / level)
    if n == 4:
        # cos(psi) carries the weight sqrt(1 - u^2): Gauss-Jacobi(1/2, 1/2)
        u, wu = roots_jacobi(level, 0.5, 0.5)
        d3, w3 = sphere_directions(3, level)
        su = np.sqrt(1.0 - u**2)
        pts = np.concatenate([np.repeat(su, len(w3))[:, None] * np.tile(d3, (level, 1)),
                              np.repeat(u, len(w3))[:, None]], axis=1)
        return pts, np.repeat(wu, len(w3)) * np.tile(w3, level)
    raise GridError(f"sphere meshes are available for n in {{2, 3, 4}}, got n={n}")


def hemisphere_directions(n: int, order: int, azimuths: int | None = None,
                          graded: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Directions ``omega`` with ``omega_n > 0`` and weights summing to half the sphere.

    With ``graded`` the elevation rule is refined geometrically towards the
    boundary plane, where integrands concentrated near the plane vary fastest.
    """
    if graded:
        breaks = np.concatenate([[0.0], 0.5 ** np.arange(6, -1, -1)])
    else:
        breaks = np.array([0.0, 1.0])
    if n == 2:
        t, w = composite_gauss(breaks * (np.pi / 2), order)
        t = np.concatenate([t, np.pi - t])
        w = np.concatenate([w, w])
        return np.stack([np.cos(t), np.sin(t)], axis=1), w
    if n == 3:
        c, wc = composite_gauss(breaks, order)
        m = azimuths or 2 * order
        phi = (np.arange(m) + 0.5) * (2 * np.pi / m)
        s = np.sqrt(1.0 - c**2)
        k = len(c)
        pts = np.stack([np.repeat(s, m) * np.tile(np.cos(phi), k),
                        np.repeat(s, m) * np.tile(np.sin(phi), k),
                        np.repeat(c, m)], axis=1)
        return pts, np.repeat(wc, m) * (2 * np.pi / m)
    raise GridError(f"hemisphere rules are available for n in {{2, 3}}, got n={n}")


# ---------------------------------------------------------------- builders

def _as_center(center, n: int) -> np.ndarray:
    if center is None:
        return np.zeros(n)
    c = np.asarray(center, dtype=float).reshape(-1)
    if c.shape != (n,):
        raise GridError(f"center must have {n} coordinates")
    return c


def build_sphere_mesh(n: int, level: int, radius: float = 1.0,
                      center=None) -> QuadratureSet:
    """Product quadrature on the sphere ``|x - center| = radius``.

    For ``n = 3`` the rule is Gauss-Legendre in ``cos(theta)`` with ``level``
    nodes times ``2 level`` uniform azimuths, exact for spherical harmonics
    of degree below ``2 level``. ``n = 2`` uses ``2 level`` uniform nodes and
    ``n = 4`` adds a Gauss-Jacobi factor in the extra polar angle.

    Examples
    --------
    >>> s = build_sphere_mesh(3, 16)
    >>> round(s.measure() / (4 * np.pi), 12)
    1.0
    """
    if radius <= 0:
        raise GridError("radius must be positive")
    c = _as_center(center, n)
    d, w = sphere_directions(n, level)
    return QuadratureSet(DomainKind.SPHERE, c + radius * d, w * radius ** (n - 1),
                         {"n": n, "level": level, "radius": float(radius),
                          "center": tuple(c)})


def build_ball_quadrature(n: int, radial_order: int, sphere_level: int,
                          radius: float = 1.0, center=None) -> QuadratureSet:
    """Radial Gauss-Legendre times the sphere mesh, ``r^(n-1)`` folded in.

    Nodes are ordered shell by shell; ``meta["ray_index"][k]`` is the index
    of the sphere-mesh direction of node ``k`` and ``meta["radial_index"]``
    its shell.
    """
    if radial_order < 1:
        raise GridError("radial order must be >= 1")
    if radius <= 0:
        raise GridError("radius must be positive")
    c = _as_center(center, n)
    d, w = sphere_directions(n, sphere_level)
    x, wx = gauss_legendre(radial_order)
    r = 0.5 * radius * (x + 1.0)
    wr = 0.5 * radius * wx * r ** (n - 1)
    m = len(w)
    pts = c + (r[:, None, None] * d[None]).reshape(-1, n)
    weights = (wr[:, None] * w[None]).reshape(-1)
    return QuadratureSet(DomainKind.BALL, pts, weights, {
        "n": n, "radial_order": radial_order, "sphere_level": sphere_level,
        "radius": float(radius), "center": tuple(c),
        "radii": _frozen(r),
        "ray_index": np.tile(np.arange(m), radial_order),
        "radial_index": np.repeat(np.arange(radial_order), m),
    })


def vertical_layers(depth: float, h: float, ratio: float = 0.7,
                    bottom: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Geometric layers ``[H r^(k+1), H r^k]`` with midpoint nodes.

    Layers stop once the next interface falls below ``bottom`` (default
    ``h / 4``); the last layer reaches down to 0 so the weights sum to ``H``.
    """
    if not 0 < ratio < 1:
        raise GridError("layer ratio must lie in (0, 1)")
    bottom = h / 4 if bottom is None else bottom
    tops = [depth]
    while tops[-1] * ratio > bottom:
        tops.append(tops[-1] * ratio)
    tops.append(0.0)
    edges = np.array(tops[::-1])
    return 0.5 * (edges[1:] + edges[:-1]), np.diff(edges)


def build_halfspace_grids(n: int, extent: float, h: float, depth: float,
                          ratio: float = 0.7, node_cap: int = DEFAULT_NODE_CAP,
                          center=None) -> tuple[QuadratureSet, QuadratureSet]:
    """Uniform boundary grid on ``[-R, R]^(n-1)`` and a graded volume grid.

    The boundary is split into ``N = round(2R/h)`` cells per axis (the
    spacing is adjusted to ``2R/N``); the volume grid stacks the boundary
    cells over the geometric layers of :func:`vertical_layers`.

    Raises
    ------
    GridError
        For ``n`` outside ``{2, 3}``, inconsistent sizes, or when the total
        node count exceeds ``node_cap``.
    """
    if n not in (2, 3):
        raise GridError("half-space grids are limited to n in {2, 3}")
    if not (h > 0 and extent > h and depth > h):
        raise GridError("need h > 0, extent > h and depth > h")
    cells = int(round(2 * extent / h))
    h = 2 * extent / cells
    z, wz = vertical_layers(depth, h, ratio)
    nb = cells ** (n - 1)
    if nb * (1 + len(z)) > node_cap:
        raise GridError(f"grid would have {nb * (1 + len(z))} nodes, above the cap {node_cap}")
    c = np.zeros(n - 1) if center is None else np.asarray(center, float).reshape(n - 1)
    axis = (np.arange(cells) + 0.5 - cells / 2) * h
    mesh = np.meshgrid(*([axis] * (n - 1)), indexing="ij")
    yb = np.stack([m.reshape(-1) for m in mesh], axis=1) + c
    bpts = np.concatenate([yb, np.zeros((nb, 1))], axis=1)
    meta = {"n": n, "extent": float(extent), "h": h, "depth": float(depth),
            "cells": cells, "ratio": ratio, "uniform": True,
            "center": tuple(c)}
    boundary = QuadratureSet(DomainKind.HALFSPACE_BOUNDARY, bpts,
                             np.full(nb, h ** (n - 1)), meta)
    vpts = np.concatenate([np.repeat(yb, len(z), axis=0),
                           np.tile(z, nb)[:, None]], axis=1)
    vw = np.repeat(np.full(nb, h ** (n - 1)), len(z)) * np.tile(wz, nb)
    volume = QuadratureSet(DomainKind.HALFSPACE_VOLUME, vpts, vw,
                           {**meta, "uniform": False, "layers": len(z)})
    return boundary, volume


def boundary_polar_rule(n: int, center, scales: Iterable[float] = (1.0,),
                        focus: Iterable[float] = (), order: int = 8,
                        angular: int = 32, r_max: float | None = None,
                        min_scale: float = 1e-3) -> QuadratureSet:
    """Polar rule on the boundary plane centred at ``center`` (in ``R^(n-1)``).

    The weight ``r^(n-2)`` of polar coordinates absorbs a kernel singularity
    of order below ``n - 1`` at the centre. ``focus`` lists radii where the
    integrand has a near-singular feature; ``scales`` lists the length
    scales of the integrand.
    """
    c = np.asarray(center, float).reshape(-1)[: n - 1]
    r, wr = graded_radial_rule(r_max, focus=focus, scales=scales, order=order,
                               min_scale=min_scale)
    if n == 2:
        pts = np.concatenate([c + r, c - r])[:, None]
        w = np.concatenate([wr, wr])
    elif n == 3:
        phi = (np.arange(angular) + 0.5) * (2 * np.pi / angular)
        dirs = np.stack([np.cos(phi), np.sin(phi)], axis=1)
        pts = c + (r[:, None, None] * dirs[None]).reshape(-1, 2)
        w = (wr * r)[:, None].repeat(angular, axis=1).reshape(-1) * (2 * np.pi / angular)
    else:
        raise GridError("boundary polar rules are available for n in {2, 3}")
    pts = np.concatenate([pts, np.zeros((len(pts), 1))], axis=1)
    keep = w > 0
    return QuadratureSet(DomainKind.HALFSPACE_BOUNDARY, pts[keep], w[keep],
                         {"n": n, "uniform": False, "polar_center": tuple(c)})


def volume_polar_rule(n: int, center, scales: Iterable[float] = (1.0,),
                      focus: Iterable[float] = (), order: int = 8,
                      angular: int = 8, r_min: float = 0.0,
                      r_max: float | None = None,
                      min_scale: float = 1e-3,
                      azimuths: int | None = None) -> QuadratureSet:
    """Polar rule on the half space about a boundary point ``center``.

    Integrates over ``{eta : eta_n > 0, r_min < |eta - center| < r_max}``;
    ``center`` is given in ``R^n`` with last coordinate 0.
    """
    c = np.asarray(center, float).reshape(n)
    r, wr = graded_radial_rule(r_max, focus=focus, scales=scales, order=order,
                               min_scale=min_scale, r_min=r_min)
    d, wd = hemisphere_directions(n, angular, azimuths)
    pts = c + (r[:, None, None] * d[None]).reshape(-1, n)
    w = ((wr * r ** (n - 1))[:, None] * wd[None]).reshape(-1)
    keep = (w > 0) & (pts[:, -1] > 0)
    return QuadratureSet(DomainKind.HALFSPACE_VOLUME, pts[keep], w[keep],
                         {"n": n, "uniform": False, "polar_center": tuple(c)})


# ---------------------------------------------------------------- rearrangement

def rearrange_decreasing(f: ScalarField) -> ScalarField:
    """Discrete symmetric decreasing rearrangement on a uniform boundary grid.

    The multiset of ``|f|`` is assigned, largest first, to cells ordered by
    distance of the cell centre from the origin; equal distances are ordered
    by cell index. The map is a permutation, so every L^p norm is preserved
    exactly.

    Raises
    ------
    GridError
        If the grid is not a uniform boundary grid.
    """
    g = f.grid
    if g.kind is not DomainKind.HALFSPACE_BOUNDARY or not g.meta.get("uniform", False):
        raise GridError("rearrangement needs a uniform half-space boundary grid")
    if not np.all(g.weights == g.weights[0]):
        raise GridError("rearrangement needs equal cell weights")
    order = cell_order(g)
    out = np.empty(g.size)
    out[order] = np.sort(np.abs(f.values))[::-1]
    return ScalarField(g, out)


def cell_order(grid: QuadratureSet) -> np.ndarray:
    """Cell indices sorted by distance from the origin, ties by index."""
    dist2 = np.sum(grid.points[:, :-1] ** 2, axis=1)
    return np.lexsort((np.arange(grid.size), dist2))


# ---------------------------------------------------------------- serialization

def write_csv(path, grid_or_field) -> None:
    """Write one row per node: ``x1..xn, w, value`` (value empty for bare grids)."""
    if isinstance(grid_or_field, ScalarField):
        grid, values = grid_or_field.grid, grid_or_field.values
    else:
        grid, values = grid_or_field, None
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow([f"x{i + 1}" for i in range(grid.dim)] + ["w", "value"])
        for k in range(grid.size):
            row = [repr(float(x)) for x in grid.points[k]] + [repr(float(grid.weights[k]))]
            row.append("" if values is None else repr(float(values[k])))
            out.writerow(row)


def read_csv(path, kind: DomainKind) -> ScalarField | QuadratureSet:
    """Inverse of :func:`write_csv`; returns a field when values are present."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    n = len(header) - 2
    pts = np.array([[float(v) for v in r[:n]] for r in body])
    w = np.array([float(r[n]) for r in body])
    grid = QuadratureSet(kind, pts, w, {"n": n})
    if body and body[0][n + 1] != "":
        return ScalarField(grid, np.array([float(r[n + 1]) for r in body]))
    return grid
