"""Variational estimate of the sharp constant and the dilation sweep.

The constant is approached by a normalised fixed-point iteration on the
Euler-Lagrange equation

    f^(p-1) = R[(E f)^(q-1)],

posed on the unit ball, where the extremal problem is compact. The sweep
measures how the ratio of a dilated bubble family scales on the half space.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .discretization import (
    DomainKind,
    QuadratureSet,
    ScalarField,
    boundary_polar_rule,
    build_halfspace_grids,
    volume_polar_rule,
)
from .exponents import ExponentConfig, scaling_exponent
from .extremals import BubbleParams, bubble_fit, bubble_value
from .operators import DiscreteOperator, RegularizationSchedule, _norm

__all__ = [
    "OptimizeError",
    "IterationRecord",
    "ExtremalResult",
    "SweepResult",
    "random_positive_field",
    "euler_lagrange_step",
    "orbit_residual",
    "find_extremal",
    "pull_back_to_halfspace",
    "classify_extremal",
    "scaling_sweep",
]


class OptimizeError(RuntimeError):
    """Invalid request or numerical breakdown of the iteration.

    ``history`` holds the iterations recorded before the failure.
    """

    def __init__(self, msg: str, history: list | None = None):
        super().__init__(msg)
        self.history = history or []


@dataclass(frozen=True)
class IterationRecord:
    iter: int
    ratio: float
    step_residual: float
    wall_ms: float | None = None
    orbit_residual: float | None = None


@dataclass
class ExtremalResult:
    """Outcome of :func:`find_extremal`.

    ``ratios[k]`` is the ratio of the ``k``-th iterate (``k = 0`` is the
    normalised start) and ``step_residuals[k]`` the ``L^p`` distance between
    iterate ``k`` and its image under one step. ``orbit_residuals[k]`` is the
    same distance with the motion along the conformal orbit removed (see
    :func:`orbit_residual`).
    """

    field: ScalarField
    ratios: list[float]
    step_residuals: list[float]
    converged: bool
    records: list[IterationRecord] = field(default_factory=list)
    orbit_residuals: list[float] = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return len(self.ratios) - 1

    @property
    def constant_estimate(self) -> float:
        return self.ratios[-1]

    def summary(self) -> dict:
        return {"constant_estimate": self.constant_estimate,
                "iterations": self.iterations, "converged": self.converged}


@dataclass(frozen=True)
class SweepResult:
    lambdas: tuple[float, ...]
    ratios: tuple[float, ...]
    fitted_exponent: float
    analytic_exponent: float


def random_positive_field(grid: QuadratureSet, seed: int, spread: float = 0.5) -> ScalarField:
    """Seeded positive field ``exp(spread * N(0, 1))``, independent per node."""
    rng = np.random.default_rng(seed)
    return ScalarField(grid, np.exp(spread * rng.standard_normal(grid.size)))


def _require_critical(cfg: ExponentConfig, force: bool) -> None:
    if not force and not cfg.is_critical:
        raise OptimizeError(
            "the iteration targets the critical exponent pair; pass force=True to run "
            f"with p={cfg.p}, q={cfg.q}")


def _step_values(op: DiscreteOperator, f: np.ndarray, ext: np.ndarray | None = None
                 ) -> np.ndarray:
    cfg = op.cfg
    ext = op.extend_values(f) if ext is None else ext
    if not np.all(ext > 0):
        raise OptimizeError("extension of the iterate is not positive")
    back = op.restrict_values(ext ** (cfg.q - 1.0))
    if not np.all(back > 0):
        raise OptimizeError("restriction of the iterate is not positive")
    g = back ** (1.0 / (cfg.p - 1.0))
    return g / _norm(op.source.weights, g, cfg.p)


def euler_lagrange_step(f: ScalarField, op: DiscreteOperator, force: bool = False) -> ScalarField:
    """One normalised fixed-point step ``f -> R[(E f)^(q-1)]^(1/(p-1))``.

    The result has unit ``L^p`` norm on the source grid.

    Raises
    ------
    OptimizeError
        For a non-positive input or intermediate value, or a non-critical
        configuration without ``force``.
    """
    _require_critical(op.cfg, force)
    if f.grid is not op.source:
        raise OptimizeError("field does not live on the operator's source grid")
    if not np.all(f.values > 0):
        raise OptimizeError("the iteration needs a positive field")
    return ScalarField(op.source, _step_values(op, f.values))


def _orbit_tangent(f: np.ndarray, grid: QuadratureSet, p: float) -> np.ndarray:
    """Tangent vectors of the conformal orbit through the nearest orbit member.

    Orbit members on the sphere are ``A (1 - <b, xi>)^(-(n-1)/p)``; ``b`` is
    fitted linearly from ``f^(-p/(n-1)) = a0 - <a0 b, xi>`` and the tangent
    directions are ``f`` (amplitude) and ``f xi_i / (1 - <b, xi>)``.
    """
    n = grid.dim
    center = np.asarray(grid.meta.get("center", np.zeros(n)), float)
    radius = float(grid.meta.get("radius", 1.0))
    xi = (grid.points - center) / radius
    sw = np.sqrt(grid.weights)
    design = np.column_stack([np.ones(grid.size), -xi])
    coef = np.linalg.lstsq(sw[:, None] * design, sw * f ** (-p / (n - 1)), rcond=None)[0]
    b = coef[1:] / coef[0] if coef[0] > 0 else np.zeros(n)
    nb = np.linalg.norm(b)
    if nb > 0.99:
        b *= 0.99 / nb
    return np.column_stack([f, f[:, None] * xi / (1.0 - xi @ b)[:, None]])


def orbit_residual(f: np.ndarray, g: np.ndarray, grid: QuadratureSet, p: float) -> float:
    """``||f - g||_p`` after removing the part of ``f - g`` along the conformal orbit.

    Composing both fields with the sphere automorphism that recentres them
    removes, to first order, exactly the component of ``f - g`` tangent to
    the orbit of the constants at ``f``; that component is projected out in
    the weighted ``L^2`` sense. Exact composition would need ``f`` off the
    nodes, and interpolation error there exceeds useful tolerances.
    """
    d = np.asarray(f, float) - np.asarray(g, float)
    tangent = _orbit_tangent(np.asarray(f, float), grid, p)
    sw = np.sqrt(grid.weights)
    c = np.linalg.lstsq(sw[:, None] * tangent, sw * d, rcond=None)[0]
    return _norm(grid.weights, d - tangent @ c, p)


def find_extremal(init: ScalarField, op: DiscreteOperator, tol: float = 1e-7,
                  max_iter: int = 200, force: bool = False, timing: bool = False,
                  residual_tol: float | None = None, recenter: bool = True
                  ) -> ExtremalResult:
    """Iterate :func:`euler_lagrange_step` until the ratio settles.

    Stops once the relative change of the ratio between consecutive iterates
    is at most ``tol`` and the step residual is at most ``residual_tol``
    (default ``10 tol``), or after ``max_iter`` steps (``converged`` is then
    False). The ratio is stationary at an extremal, so it settles long before
    the iterate; the residual test covers the latter.

    On a sphere mesh the discretisation breaks the conformal invariance
    slightly, and iterates creep along the orbit of extremals at a constant
    rate per step. With ``recenter`` (the default on spheres) the stopping
    test uses :func:`orbit_residual`, which discounts that motion; the raw
    ``||f - step(f)||_p`` is still recorded.

    Parameters
    ----------
    init : ScalarField
        Positive start on ``op.source``.
    op : DiscreteOperator
        Sphere-to-ball operator (or any boundary-to-volume operator).
    timing : bool
        Record wall-clock milliseconds per iteration (non-deterministic).

    Raises
    ------
    OptimizeError
        If the ratio becomes non-finite; ``history`` holds the records so far.
    """
    _require_critical(op.cfg, force)
    if init.grid is not op.source:
        raise OptimizeError("start field does not live on the operator's source grid")
    if not np.all(init.values > 0):
        raise OptimizeError("the iteration needs a positive start")
    p = op.cfg.p
    w = op.source.weights
    rtol = 10.0 * tol if residual_tol is None else residual_tol
    f = init.values / _norm(w, init.values, p)
    ratios, resids, orbits, records = [], [], [], []
    use_orbit = recenter and op.source.kind is DomainKind.SPHERE
    converged = False
    t0 = time.perf_counter()
    for k in range(max_iter + 1):
        ext = op.extend_values(f)
        ratio = _norm(op.target.weights, ext, op.cfg.q) / _norm(w, f, p)
        if not math.isfinite(ratio):
            raise OptimizeError(f"ratio became non-finite at iteration {k}", records)
        g = _step_values(op, f, ext)
        resid = _norm(w, f - g, p)
        orbit = orbit_residual(f, g, op.source, p) if use_orbit else None
        ratios.append(ratio)
        resids.append(resid)
        orbits.append(orbit)
        wall = None
        if timing:
            now = time.perf_counter()
            wall, t0 = 1e3 * (now - t0), now
        records.append(IterationRecord(k, ratio, resid, wall, orbit))
        gate = orbit if use_orbit else resid
        if k > 0 and abs(ratios[-1] - ratios[-2]) <= tol * abs(ratios[-2]) and gate <= rtol:
            converged = True
            break
        if k < max_iter:
            f = g
    return ExtremalResult(ScalarField(op.source, f), ratios, resids, converged, records,
                          orbits)


def pull_back_to_halfspace(f: ScalarField, cfg: ExponentConfig) -> ScalarField:
    """Carry a field on a sphere to the boundary plane by inversion.

    The sphere of radius ``rho`` centred at ``c`` is the image of the plane
    under inversion about its lowest point ``x0 = c - rho e_n`` with radius
    ``2 rho``. Each sphere node ``z`` maps to the plane point ``y``, the value
    picks up the norm-preserving weight ``(2 rho / |y - x0|)^(n + alpha - 2)``
    and the weight the Jacobian ``(|y - x0| / (2 rho))^(2(n-1))``. The node at
    ``x0`` itself (if any) has no image and is dropped.
    """
    g = f.grid
    if g.kind is not DomainKind.SPHERE:
        raise OptimizeError("pull-back needs a field on a sphere")
    n = cfg.n
    rho = float(g.meta.get("radius", 1.0))
    c = np.asarray(g.meta.get("center", np.zeros(n)), float)
    lam = 2.0 * rho
    x0 = c.copy()
    x0[-1] -= rho
    rel = g.points - x0
    d2 = np.sum(rel**2, axis=1)
    keep = d2 > (1e-12 * lam) ** 2
    # the image is the plane x_n = c_n + rho; weights use distances to x0
    # before the points are shifted onto x_n = 0
    y = x0 + lam**2 * rel[keep] / d2[keep, None]
    ratio = lam / np.sqrt(np.sum((y - x0) ** 2, axis=1))
    y[:, -1] = 0.0
    # |z - x0| |y - x0| = lam^2, so dy = (|y - x0| / lam)^(2(n-1)) dS_z
    weights = g.weights[keep] * ratio ** (-2 * (n - 1))
    values = f.values[keep] * ratio**cfg.bubble_power
    grid = QuadratureSet(DomainKind.HALFSPACE_BOUNDARY, y, weights,
                         {"n": n, "uniform": False, "pulled_back_from": "sphere"})
    return ScalarField(grid, values)


def classify_extremal(f: ScalarField, cfg: ExponentConfig) -> tuple[BubbleParams, float]:
    """Fit a bubble to a sphere extremal pulled back to the boundary plane."""
    return bubble_fit(pull_back_to_halfspace(f, cfg), cfg)


def _column_norms(w: np.ndarray, m: np.ndarray, p: float) -> np.ndarray:
    return (w @ np.abs(m) ** p) ** (1.0 / p)


def scaling_sweep(cfg: ExponentConfig, params: BubbleParams, lambdas,
                  grid: str = "scaled", extent: float = 6.0, h: float = 0.25,
                  depth: float = 6.0, ratio: float = 0.7, reg_factor: float | None = 1.0,
                  order: int = 4, angular: int = 32, threads: int | None = None
                  ) -> SweepResult:
    """Ratios of the dilated bubbles ``b(y / lam)`` and their power-law slope.

    Parameters
    ----------
    grid : {"scaled", "polar"}
        ``"scaled"`` builds uniform grids whose extent, spacing and depth
        are all multiplied by ``lam`` (regularisation ``reg_factor`` times
        the local spacing, ``None`` for the bare kernel). ``"polar"`` uses a
        single pair of polar rules about the origin, graded on every scale
        in ``lambdas`` with Gauss order ``order`` and ``angular`` azimuths,
        and evaluates all dilations on it at once.

    Returns
    -------
    SweepResult
        Ratios and the least-squares slope of ``log ratio`` against ``log lam``.
    """
    lambdas = [float(v) for v in lambdas]
    if len(lambdas) < 2 or min(lambdas) <= 0:
        raise OptimizeError("the sweep needs at least two positive dilation factors")
    if grid == "scaled":
        ratios = []
        for lam in lambdas:
            hh = h * lam
            bdy, vol = build_halfspace_grids(cfg.n, extent * lam, hh, depth * lam, ratio)
            reg = None if reg_factor is None else RegularizationSchedule.default(reg_factor * hh)
            op = DiscreteOperator(bdy, vol, cfg, reg, threads)
            ratios.append(op.ratio_values(bubble_value(params, cfg, bdy.points / lam)))
    elif grid == "polar":
        origin = np.zeros(cfg.n)
        bdy = boundary_polar_rule(cfg.n, origin[:-1], lambdas, (), order, angular,
                                  min_scale=0.05 * min(lambdas))
        vol = volume_polar_rule(cfg.n, origin, lambdas, (), order, order,
                                min_scale=0.05 * min(lambdas), azimuths=angular)
        op = DiscreteOperator(bdy, vol, cfg, None, threads)
        vals = np.stack([bubble_value(params, cfg, bdy.points / lam) for lam in lambdas],
                        axis=1)
        ext = op.extend_values(vals)
        num = _column_norms(vol.weights, ext, cfg.q)
        ratios = list(num / _column_norms(bdy.weights, vals, cfg.p))
    else:
        raise OptimizeError(f"unknown sweep grid {grid!r}")
    r = np.asarray(ratios, float)
    ok = np.isfinite(r) & (r > 0)
    if ok.sum() < 2:
        raise OptimizeError("fewer than two valid ratios in the sweep")
    slope = float(np.polyfit(np.log(np.asarray(lambdas)[ok]), np.log(r[ok]), 1)[0])
    return SweepResult(tuple(lambdas), tuple(float(v) for v in r), slope,
                       scaling_exponent(cfg))
