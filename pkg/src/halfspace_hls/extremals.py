"""Bubble profiles, sharp constants and bubble fitting.

The extremal boundary densities form the family

    b(y) = c (|y - y0|^2 + d^2)^(-(n + alpha - 2)/2),

the conformal orbit of a constant on a sphere. The sharp constant can be
computed in closed form for ``alpha = 2`` and, for any ``alpha``, from the
potential ``V`` of the uniform density on the unit sphere:

    C = (n omega_n)^(-(n+alpha-2)/(2(n-1))) (int_B V^(2n/(n-alpha)))^((n-alpha)/(2n)).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .discretization import (
    DomainKind,
    QuadratureSet,
    ScalarField,
    build_ball_quadrature,
    build_sphere_mesh,
    composite_gauss,
    gauss_legendre,
    graded_breaks,
    graded_radial_rule,
)
from .exponents import ExponentConfig, critical_config, omega
from .operators import (
    RegularizationSchedule,
    _riesz_zonal,
    axisymmetric_extension,
    kernel_matrix,
)

__all__ = [
    "ExtremalError",
    "FitError",
    "BubbleParams",
    "bubble_value",
    "bubble_profile",
    "closed_form_constant_alpha2",
    "sphere_potential",
    "ConstantEstimate",
    "quadrature_constant",
    "bubble_fit",
    "bubble_extension",
    "restricted_power",
    "euler_lagrange_amplitude",
    "bubble_mass",
]


class ExtremalError(ValueError):
    """Invalid request for an extremal quantity."""


class FitError(RuntimeError):
    """Bubble fit failed; ``diagnostics`` carries the optimiser state."""

    def __init__(self, msg: str, diagnostics: dict | None = None):
        super().__init__(msg)
        self.diagnostics = diagnostics or {}


@dataclass(frozen=True)
class BubbleParams:
    """Amplitude ``c``, width ``d`` and boundary centre ``y0`` of a bubble."""

    c: float
    d: float
    y0: tuple[float, ...]

    def __post_init__(self):
        if not (self.c > 0 and self.d > 0):
            raise ExtremalError("bubble amplitude and width must be positive")
        object.__setattr__(self, "y0", tuple(float(v) for v in np.ravel(self.y0)))

    @classmethod
    def unit(cls, n: int, c: float = 1.0, d: float = 1.0) -> "BubbleParams":
        return cls(c, d, (0.0,) * (n - 1))


def _boundary_coords(y, n: int) -> np.ndarray:
    y = np.asarray(y, float)
    if y.ndim == 0 or y.shape[-1] not in (n - 1, n):
        raise ExtremalError(f"boundary points need {n - 1} (or {n}) coordinates")
    return y[..., : n - 1]


def bubble_profile(params: BubbleParams, cfg: ExponentConfig):
    """Radial profile ``s -> c (s^2 + d^2)^(-(n+alpha-2)/2)``."""
    power = cfg.bubble_power
    c, d2 = params.c, params.d**2
    return lambda s: c * (np.asarray(s) ** 2 + d2) ** (-power / 2)


def bubble_value(params: BubbleParams, cfg: ExponentConfig, y):
    """Bubble at boundary points ``y`` (shape ``(..., n-1)`` or ``(..., n)``).

    Examples
    --------
    >>> cfg = critical_config(3, 2.0)
    >>> float(bubble_value(BubbleParams.unit(3), cfg, [1.0, 0.0]))
    0.3535533905932738
    """
    yb = _boundary_coords(y, cfg.n)
    r2 = np.sum((yb - np.asarray(params.y0)) ** 2, axis=-1)
    out = params.c * (r2 + params.d**2) ** (-cfg.bubble_power / 2)
    return float(out) if np.ndim(out) == 0 else out


def closed_form_constant_alpha2(n: int) -> float:
    """Sharp constant for ``alpha = 2``: ``n^((n-2)/(2(n-1))) omega_n^(1 - 1/n - 1/(2(n-1)))``."""
    if n < 3:
        raise ExtremalError("the closed form needs n >= 3")
    return n ** ((n - 2) / (2 * (n - 1))) * omega(n) ** (1 - 1 / n - 1 / (2 * (n - 1)))


def _sphere_geometry(sphere: QuadratureSet) -> tuple[np.ndarray, float]:
    if sphere.kind is not DomainKind.SPHERE:
        raise ExtremalError("sphere_potential needs a sphere mesh")
    center = np.asarray(sphere.meta.get("center", np.zeros(sphere.dim)), float)
    return center, float(sphere.meta.get("radius", 1.0))


def sphere_potential(xi, cfg: ExponentConfig, sphere: QuadratureSet,
                     reg: RegularizationSchedule | None = None):
    """Kernel integral of the uniform density over a sphere at interior points.

    Without ``reg`` the integral is taken in geodesic polar coordinates about
    the radial projection of ``xi``, with a graded rule whose order follows
    the mesh level (the integrand depends on the distance only, so the
    azimuthal part is exact). With ``reg`` the mollified kernel is summed
    over the mesh nodes directly.

    Raises
    ------
    ExtremalError
        If a point is on or outside the sphere.
    """
    center, radius = _sphere_geometry(sphere)
    pts = np.atleast_2d(np.asarray(xi, float))
    r = np.sqrt(np.sum((pts - center) ** 2, axis=1))
    if np.any(r >= radius):
        raise ExtremalError("sphere_potential needs points strictly inside the sphere")
    if reg is None:
        order = max(16, int(sphere.meta.get("level", 16)))
        vals = np.array([_riesz_zonal(float(x), cfg, radius, order) for x in r])
    else:
        vals = np.zeros(len(pts))
        for c, e in zip(reg.coefficients(), reg.eps_list):
            if c:
                vals += c * (kernel_matrix(pts, sphere.points, cfg.n - cfg.alpha, e)
                             @ sphere.weights)
    return float(vals[0]) if np.ndim(xi) == 1 else vals


@dataclass(frozen=True)
class ConstantEstimate:
    """Quadrature value of the sharp constant with a refinement error estimate."""

    value: float
    est_error: float
    converged: bool
    coarse_value: float


def _constant_from(ball: QuadratureSet, sphere: QuadratureSet, cfg: ExponentConfig,
                   reg) -> float:
    n, alpha = cfg.n, cfg.alpha
    center = np.asarray(ball.meta.get("center", np.zeros(n)), float)
    s_center, _ = _sphere_geometry(sphere)
    if not np.allclose(center, s_center):
        raise ExtremalError("ball and sphere must share their centre")
    if "radial_index" in ball.meta and reg is None:
        # the potential of the uniform density is rotation invariant:
        # one evaluation per shell
        shells = np.asarray(ball.meta["radial_index"])
        first = np.unique(shells, return_index=True)[1]
        per_shell = sphere_potential(ball.points[first], cfg, sphere, reg)
        vals = np.asarray(per_shell)[shells]
    else:
        vals = np.asarray(sphere_potential(ball.points, cfg, sphere, reg))
    q = cfg.q
    radius = float(sphere.meta.get("radius", 1.0))
    integral = ball.integrate(vals**q)
    area = n * omega(n) * radius ** (n - 1)
    return area ** (-1.0 / cfg.p) * integral ** (1.0 / q)


def quadrature_constant(n: int, alpha: float, ball: QuadratureSet, sphere: QuadratureSet,
                        reg: RegularizationSchedule | None = None,
                        rtol: float = 1e-3) -> ConstantEstimate:
    """Sharp constant from the sphere-potential formula on the unit ball.

    The error estimate is the change against a rule with half the radial
    order and half the sphere level; ``converged`` flags whether it is
    below ``rtol`` relative.

    Examples
    --------
    >>> b, s = build_ball_quadrature(3, 8, 8), build_sphere_mesh(3, 8)
    >>> est = quadrature_constant(3, 2.0, b, s)
    >>> abs(est.value / closed_form_constant_alpha2(3) - 1) < 1e-10
    True
    """
    cfg = critical_config(n, alpha)
    if ball.kind is not DomainKind.BALL:
        raise ExtremalError("quadrature_constant needs a ball quadrature")
    value = _constant_from(ball, sphere, cfg, reg)
    meta = ball.meta
    if "radial_order" in meta:
        coarse_ball = build_ball_quadrature(
            n, max(1, meta["radial_order"] // 2), max(1, meta["sphere_level"] // 2),
            meta["radius"], meta["center"])
        sm = sphere.meta
        coarse_sphere = build_sphere_mesh(n, max(1, sm.get("level", 2) // 2),
                                          sm.get("radius", 1.0), sm.get("center"))
        coarse = _constant_from(coarse_ball, coarse_sphere, cfg, reg)
    else:
        coarse = value
    err = abs(value - coarse)
    return ConstantEstimate(value, err, bool(err <= rtol * abs(value)), coarse)


# ---------------------------------------------------------------- fitting

def _fit_init(pts: np.ndarray, f: np.ndarray, power: float) -> np.ndarray:
    k = int(np.argmax(f))
    y0 = pts[k]
    fmax = f[k]
    rel = (f / fmax) ** (2.0 / power)
    r2 = np.sum((pts - y0) ** 2, axis=1)
    mask = (rel > 0.1) & (rel < 0.9)
    if np.any(mask):
        d2 = np.median(r2[mask] * rel[mask] / (1.0 - rel[mask]))
    else:
        d2 = max(np.average(r2, weights=f), 1e-6)
    d = math.sqrt(max(d2, 1e-12))
    c = fmax * d**power
    return np.concatenate([[math.log(c), math.log(d)], y0])


def bubble_fit(f: ScalarField, cfg: ExponentConfig) -> tuple[BubbleParams, float]:
    """Least-squares bubble fit of a positive boundary field.

    A log-space fit (residuals ``f (ln f - ln b)``, weighted) provides a
    robust start; a second pass minimises ``sum w (f - b)^2`` directly.
    Returns the parameters and ``sqrt(sum w (f - b)^2 / sum w f^2)``.

    Raises
    ------
    FitError
        If the optimiser fails or returns non-finite parameters.
    """
    if f.grid.kind is not DomainKind.HALFSPACE_BOUNDARY:
        raise ExtremalError("bubble_fit needs a half-space boundary field")
    vals = np.asarray(f.values)
    if np.any(vals <= 0):
        raise ExtremalError("bubble_fit needs a positive field")
    n = cfg.n
    pts = f.grid.points[:, : n - 1]
    sw = np.sqrt(f.grid.weights)
    scale = math.sqrt(np.sum(f.grid.weights * vals**2))
    power = cfg.bubble_power
    lf = np.log(vals)

    def model_log(x):
        r2 = np.sum((pts - x[2:]) ** 2, axis=1)
        return x[0] - 0.5 * power * np.log(r2 + math.exp(2 * x[1]))

    def res_log(x):
        return sw * vals * (lf - model_log(x)) / scale

    def res_lin(x):
        return sw * (vals - np.exp(model_log(x))) / scale

    x0 = _fit_init(pts, vals, power)
    diag = {"init": x0.tolist()}
    try:
        sol = least_squares(res_log, x0, method="lm", xtol=1e-14, ftol=1e-14, gtol=1e-14,
                            max_nfev=2000)
        sol = least_squares(res_lin, sol.x, method="lm", xtol=1e-15, ftol=1e-15,
                            gtol=1e-15, max_nfev=2000)
    except (ValueError, FloatingPointError) as exc:
        raise FitError(f"bubble fit failed: {exc}", diag) from exc
    diag.update(status=int(sol.status), message=sol.message, x=sol.x.tolist(),
                nfev=int(sol.nfev))
    if sol.status <= 0 or not np.all(np.isfinite(sol.x)):
        raise FitError("bubble fit did not converge", diag)
    params = BubbleParams(math.exp(sol.x[0]), math.exp(sol.x[1]), tuple(sol.x[2:]))
    resid = float(np.sqrt(np.sum(res_lin(sol.x) ** 2)))
    return params, resid


# ---------------------------------------------------------------- solution pair

def bubble_extension(params: BubbleParams, cfg: ExponentConfig, points,
                     order: int = 8, method: str = "auto") -> np.ndarray:
    """Extension of a bubble to volume points.

    Parameters
    ----------
    method : {"auto", "closure", "poisson"}
        ``"closure"`` integrates the radial reduction numerically (any
        ``alpha``). ``"poisson"`` uses the exact formula available for
        ``alpha = 2``, where the bubble is a multiple of the Poisson kernel
        at height ``d`` and its extension is the Newtonian potential of the
        reflected point ``(y0, -d)``. ``"auto"`` picks ``"poisson"`` when it
        applies.
    """
    if method not in ("auto", "closure", "poisson"):
        raise ExtremalError(f"unknown extension method {method!r}")
    exact = math.isclose(cfg.alpha, 2.0, rel_tol=0.0, abs_tol=1e-14)
    if method == "poisson" and not exact:
        raise ExtremalError("the closed-form extension needs alpha = 2")
    if method == "poisson" or (method == "auto" and exact):
        pts = np.atleast_2d(np.asarray(points, float))
        n = cfg.n
        rel2 = (np.sum((pts[:, :-1] - np.asarray(params.y0)) ** 2, axis=1)
                + (pts[:, -1] + params.d) ** 2)
        mass = params.c * math.pi ** (n / 2) / math.gamma(n / 2) / params.d
        return mass * rel2 ** ((2.0 - n) / 2)
    return axisymmetric_extension(bubble_profile(params, cfg), points, cfg.n, cfg.alpha,
                                  center=params.y0, scale=params.d, order=order)


def restricted_power(params: BubbleParams, cfg: ExponentConfig, order: int = 8,
                     angular: int = 16) -> float:
    """``int_{R^n_+} (E b)^(q-1)(x) |x - y0|^(alpha-n) dx`` for a bubble ``b``.

    The integrand is symmetric about the vertical axis through ``y0``, so in
    polar coordinates about ``y0`` only the radius and the angle from the
    vertical are integrated numerically.
    """
    n, d = cfg.n, params.d
    r, wr = graded_radial_rule(None, focus=(), scales=(d,), order=order, min_scale=1e-3 * d)
    if n == 3:
        c, wc = composite_gauss(graded_breaks(0.0, 1.0, focus=(0.0,), min_scale=1e-3), order)
        wc = wc * 2 * np.pi
        sin_ = np.sqrt(1 - c**2)
        hor, ver = sin_, c
    elif n == 2:
        t, wc = composite_gauss(graded_breaks(0.0, np.pi, focus=(0.0, np.pi),
                                              min_scale=1e-3), order)
        hor, ver = np.cos(t), np.sin(t)
    else:
        raise ExtremalError("restricted_power is available for n in {2, 3}")
    y0 = np.asarray(params.y0)
    e1 = np.zeros(n - 1)
    e1[0] = 1.0
    pts = np.concatenate([
        (y0 + (r[:, None] * hor[None, :]).reshape(-1, 1) * e1),
        (r[:, None] * ver[None, :]).reshape(-1, 1)], axis=1)
    keep = pts[:, -1] > 0
    vals = np.zeros(len(pts))
    vals[keep] = bubble_extension(params, cfg, pts[keep], order) ** (cfg.q - 1)
    w = (wr * r ** (cfg.alpha - 1))[:, None] * wc[None, :]
    return float(np.sum(w.reshape(-1) * vals))


def euler_lagrange_amplitude(cfg: ExponentConfig, d: float = 1.0, y0=None,
                             order: int = 8) -> float:
    """Amplitude ``c`` making the bubble an exact solution of the integral equation.

    Solves ``f^(p-1) = R((E f)^(q-1))`` at the bubble centre; for a bubble the
    ratio of the two sides is constant, so matching at one point fixes ``c``.
    """
    y0 = (0.0,) * (cfg.n - 1) if y0 is None else y0
    unit = BubbleParams(1.0, d, y0)
    lhs = restricted_power(unit, cfg, order)
    b0 = d ** (-cfg.bubble_power)
    return (lhs / b0 ** (cfg.p - 1)) ** (1.0 / (cfg.p - cfg.q))


def bubble_mass(params: BubbleParams, cfg: ExponentConfig) -> float:
    """``int b(y) dy`` over the boundary plane, in closed form."""
    m, k = cfg.bubble_power, cfg.n - 1
    return (params.c * params.d ** (k - m) * math.pi ** (k / 2)
            * math.gamma((m - k) / 2) / math.gamma(m / 2))

