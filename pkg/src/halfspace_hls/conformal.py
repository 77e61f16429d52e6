"""Inversions, weighted Kelvin transforms and the identities they satisfy.

A :class:`KelvinMap` inverts about the sphere ``|xi - x| = lam`` and
weights a field by ``(lam / |xi - x|)^mu``. Centred at ``(x0', -lam)`` it
carries the boundary plane onto the sphere of radius ``lam/2`` about
``(x0', -lam/2)``, which is how half-space quantities are moved to the
ball and back.

The identity checks compare both sides of the transformed integral system
for an exact solution pair ``(u, v)`` built from a bubble: the left sides
are closed-form closures, the right sides are volume or boundary integrals
evaluated by polar rules centred at the kernel singularity.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.stats import qmc

from .discretization import (
    boundary_polar_rule,
    build_ball_quadrature,
    build_halfspace_grids,
    build_sphere_mesh,
    volume_polar_rule,
)
from .exponents import ExponentConfig, omega
from .extremals import (
    BubbleParams,
    bubble_extension,
    bubble_profile,
    bubble_value,
    euler_lagrange_amplitude,
)

__all__ = [
    "ConformalError",
    "KelvinMap",
    "kelvin_point",
    "kelvin_field_value",
    "halfspace_to_ball_map",
    "norm_invariance_check",
    "p_kernel",
    "jacobian_check",
    "BubblePair",
    "image_bubble",
    "KelvinResidual",
    "kelvin_identity_residual",
]


class ConformalError(ValueError):
    """Pole evaluation, domain violation or non-critical exponents."""


@dataclass(frozen=True)
class KelvinMap:
    """Inversion about ``|xi - center| = lam`` with weight exponent ``mu``."""

    center: tuple[float, ...]
    lam: float
    mu: float = 0.0

    def __post_init__(self):
        if not self.lam > 0:
            raise ConformalError("inversion radius must be positive")
        object.__setattr__(self, "center", tuple(float(v) for v in np.ravel(self.center)))

    @property
    def n(self) -> int:
        return len(self.center)

    @property
    def ball_center(self) -> np.ndarray:
        """Centre of the image of the boundary plane (for plane-to-ball maps)."""
        c = np.asarray(self.center)
        return c + np.eye(self.n)[-1] * (self.lam / 2)

    @property
    def ball_radius(self) -> float:
        return self.lam / 2

    def with_mu(self, mu: float) -> "KelvinMap":
        return KelvinMap(self.center, self.lam, mu)

    def point(self, xi) -> np.ndarray:
        return kelvin_point(self, xi)

    def factor(self, xi) -> np.ndarray:
        d = _dist(xi, self.center)
        if np.any(d == 0):
            raise ConformalError("the inversion centre is a pole")
        return (self.lam / d) ** self.mu


def _dist(xi, center) -> np.ndarray:
    return np.sqrt(np.sum((np.asarray(xi, float) - np.asarray(center)) ** 2, axis=-1))


def kelvin_point(kmap: KelvinMap, xi) -> np.ndarray:
    """``x + lam^2 (xi - x) / |xi - x|^2``, vectorised over leading axes.

    Examples
    --------
    >>> kelvin_point(KelvinMap((0.0, 0.0, 0.0), 1.0), [2.0, 0.0, 0.0])
    array([0.5, 0. , 0. ])
    """
    xi = np.asarray(xi, float)
    c = np.asarray(kmap.center)
    diff = xi - c
    d2 = np.sum(diff**2, axis=-1, keepdims=True)
    if np.any(d2 == 0):
        raise ConformalError("the inversion centre is a pole")
    return c + kmap.lam**2 * diff / d2


def kelvin_field_value(kmap: KelvinMap, f: Callable[[np.ndarray], np.ndarray], xi):
    """``(lam / |xi - x|)^mu f(xi^{x, lam})`` for a vectorised closure ``f``."""
    return kmap.factor(xi) * f(kelvin_point(kmap, xi))


def halfspace_to_ball_map(n: int, lam: float, mu: float, x0=None) -> KelvinMap:
    """Map centred at ``(x0', -lam)`` sending the boundary plane to a sphere.

    The image sphere has centre ``(x0', -lam/2)`` and radius ``lam/2``.
    """
    x0 = np.zeros(n - 1) if x0 is None else np.asarray(x0, float).reshape(n - 1)
    return KelvinMap(tuple(np.append(x0, -lam)), lam, mu)


def norm_invariance_check(f: Callable[[np.ndarray], np.ndarray], kmap: KelvinMap,
                          cfg: ExponentConfig, extent: float = 8.0, h: float = 0.125,
                          sphere_level: int = 24) -> tuple[float, float]:
    """Boundary ``L^p`` norm of ``f`` on the plane and of its transform on the sphere.

    ``f`` is a closure on boundary points ``(..., n)``; the plane norm uses
    the uniform grid on ``[-extent, extent]^(n-1)``, the sphere norm the
    product mesh of the given level. The weight exponent is forced to
    ``n + alpha - 2``.

    Raises
    ------
    ConformalError
        Unless ``cfg`` has the critical exponents, where the two norms agree.
    """
    if not cfg.is_critical:
        raise ConformalError("norm invariance holds only at the critical exponents")
    n, p = cfg.n, cfg.p
    kmap = kmap.with_mu(cfg.bubble_power)
    c = np.asarray(kmap.center)
    if abs(c[-1] + kmap.lam) > 1e-12 * kmap.lam:
        raise ConformalError("plane-to-sphere maps are centred at (x0', -lam)")
    if n == 2:
        cells = int(round(2 * extent / h))
        hh = 2 * extent / cells
        y = np.stack([(np.arange(cells) + 0.5 - cells / 2) * hh + c[0], np.zeros(cells)], 1)
        w = np.full(cells, hh)
    else:
        grid, _ = build_halfspace_grids(n, extent, h, 2 * h, center=c[:-1])
        y, w = grid.points, grid.weights
    plane = float(np.dot(w, np.abs(f(y)) ** p) ** (1 / p))
    sphere = build_sphere_mesh(n, sphere_level, kmap.ball_radius, kmap.ball_center)
    vals = kelvin_field_value(kmap, f, sphere.points)
    ball = float(np.dot(sphere.weights, np.abs(vals) ** p) ** (1 / p))
    return plane, ball


def p_kernel(x, lam: float, xi, eta, cfg: ExponentConfig, tol: float = 1e-12):
    """``|xi - eta|^(a-n) - (lam/|xi - x|)^(n-a) |xi^{x,lam} - eta|^(a-n)``.

    Both ``xi`` and ``eta`` must lie outside the open inversion ball.
    """
    x = np.asarray(x, float)
    xi, eta = np.asarray(xi, float), np.asarray(eta, float)
    dxi, deta = _dist(xi, x), _dist(eta, x)
    if np.any(dxi < lam * (1 - tol)) or np.any(deta < lam * (1 - tol)):
        raise ConformalError("p_kernel needs both points outside the inversion ball")
    s = cfg.n - cfg.alpha
    xs = kelvin_point(KelvinMap(tuple(x), lam), xi)
    out = _dist(xi, eta) ** (-s) - (lam / dxi) ** s * _dist(xs, eta) ** (-s)
    return float(out) if np.ndim(out) == 0 else out


def jacobian_check(kmap: KelvinMap, center, radius: float, radial_order: int = 8,
                   sphere_level: int = 8) -> tuple[float, float]:
    """Push a small ball through the inversion and compare measures.

    Returns the pushed weight ``sum_k w_k (lam/|eta_k - x|)^(2n)`` and the
    exact volume of the image ball (inversions map balls to balls, the image
    radius being ``lam^2 r / | |c - x|^2 - r^2 |``).
    """
    n = kmap.n
    ball = build_ball_quadrature(n, radial_order, sphere_level, radius, center)
    pushed = float(np.dot(ball.weights, kmap.with_mu(2 * n).factor(ball.points)))
    dc2 = float(np.sum((np.asarray(center, float) - np.asarray(kmap.center)) ** 2))
    if dc2 <= radius**2:
        raise ConformalError("the ball must not contain the inversion centre")
    r_img = kmap.lam**2 * radius / (dc2 - radius**2)
    return pushed, omega(n) * r_img**n


# ---------------------------------------------------------------- solution pairs

@dataclass(frozen=True)
class BubblePair:
    """Exact solution pair ``u = f^(p-1)``, ``v = E f`` for a bubble ``f``.

    ``f`` has the Euler-Lagrange amplitude, so ``u = R(v^kappa)`` holds as
    well. ``u`` is again bubble-shaped with decay power ``n - alpha``.
    """

    params: BubbleParams
    cfg: ExponentConfig
    order: int = 8

    @classmethod
    def solution(cls, cfg: ExponentConfig, d: float = 1.0, y0=None, order: int = 8):
        y0 = (0.0,) * (cfg.n - 1) if y0 is None else tuple(y0)
        c = euler_lagrange_amplitude(cfg, d, y0, order=max(order, 8))
        return cls(BubbleParams(c, d, y0), cfg, order)

    def f(self, y) -> np.ndarray:
        return bubble_value(self.params, self.cfg, y)

    def u(self, y) -> np.ndarray:
        return self.f(y) ** (self.cfg.p - 1)

    def v(self, x) -> np.ndarray:
        return bubble_extension(self.params, self.cfg, np.atleast_2d(x), self.order)


def image_bubble(params: BubbleParams, kmap: KelvinMap) -> tuple[np.ndarray, float]:
    """Centre and width of the Kelvin image of a bubble (map centred on the plane).

    A bubble is a power of the distance to the point ``P = (y0, d)``; its
    transform is the same power of the distance to the image of ``P``.
    """
    P = np.append(np.asarray(params.y0), params.d)
    Ps = kelvin_point(kmap, P)
    return Ps[:-1], float(Ps[-1])


@dataclass
class KelvinResidual:
    """Maximum relative residuals of the transformed identities."""

    res_K1: float
    res_K3: float
    res_K2: float
    res_K4: float
    lam: float
    n: int
    alpha: float
    seed: int
    order: int
    samples: dict = field(default_factory=dict)
    tau_shift: float = 0.0
    mu: float | None = None

    def reports(self) -> list[dict]:
        out = []
        for name in ("K1", "K2", "K3", "K4"):
            out.append({
                "identity": name, "lambda": self.lam, "n": self.n, "alpha": self.alpha,
                "max_rel_residual": getattr(self, f"res_{name}"),
                "sample_count": len(self.samples.get("boundary", [])),
                "seed": self.seed,
            })
        return out

    def to_json(self) -> str:
        return json.dumps({"reports": self.reports(), "samples": self.samples,
                           "order": self.order, "tau_shift": self.tau_shift,
                           "mu": self.mu},
                          sort_keys=True)


def _annulus_samples(center: np.ndarray, r_lo: float, r_hi: float, count: int,
                     seed: int, dim: int) -> np.ndarray:
    """Scrambled Halton points in the annulus ``r_lo < |y - center| < r_hi`` of ``R^dim``."""
    u = qmc.Halton(d=2, scramble=True, seed=seed).random(count)
    r = r_lo + (r_hi - r_lo) * u[:, 0]
    if dim == 1:
        sgn = np.where(u[:, 1] < 0.5, -1.0, 1.0)
        return center + (r * sgn)[:, None]
    t = 2 * np.pi * u[:, 1]
    return center + np.stack([r * np.cos(t), r * np.sin(t)], axis=1)


def kelvin_identity_residual(pair: BubblePair, kmap: KelvinMap, samples: int = 6,
                             seed: int = 0, order: int = 6, tau_shift: float = 0.0,
                             mu: float | None = None,
                             identities: Sequence[str] = ("K1", "K2", "K3", "K4")
                             ) -> KelvinResidual:
    """Residuals of the four Kelvin identities for a bubble solution pair.

    Parameters
    ----------
    pair : BubblePair
        Exact solution of the integral system.
    kmap : KelvinMap
        Centre on the boundary plane and radius. ``kmap.mu`` is ignored.
    mu : float, optional
        Weight exponent applied to both components. The identities hold for
        ``n - alpha`` (the default); any other value is a negative control.
    samples : int
        Number of boundary and of volume sample points (seeded Halton points
        outside the inversion ball, published in the result).
    order : int
        Gauss order per panel of the polar rules; doubling it refines every
        rule (radial panels and angular resolution).
    tau_shift : float
        Added to both volume and boundary weight mismatches; nonzero values
        give a deliberately wrong identity (negative control).

    Returns
    -------
    KelvinResidual
        ``res_K1`` and ``res_K2`` are ``max |lhs - rhs| / |lhs|``; for the
        difference identities ``res_K3`` and ``res_K4`` the denominator is
        ``|u_{x,lam}| + |u|`` (resp. for ``v``), the size of the two terms
        being subtracted.
    """
    cfg = pair.cfg
    n, a, lam = cfg.n, cfg.alpha, kmap.lam
    x = np.asarray(kmap.center)
    if abs(x[-1]) > 0:
        raise ConformalError("identity checks need the inversion centre on the boundary plane")
    s = n - a
    km = kmap.with_mu(s if mu is None else float(mu))
    tau1, tau2 = cfg.tau1 + tau_shift, cfg.tau2 + tau_shift
    kappa, theta = cfg.kappa, cfg.theta
    d = pair.params.d
    y0 = np.append(pair.params.y0, 0.0)
    img_c, img_d = image_bubble(pair.params, km)
    img_c = np.append(img_c, 0.0)
    scales = sorted({d, img_d, lam})
    min_sc = 0.02 * min(scales)
    ang = max(4, order)
    az = 16 * ang

    def u_t(p):
        return kelvin_field_value(km, pair.u, p)

    def v_t(p):
        return kelvin_field_value(km, pair.v, p)

    def weight(p, tau):
        return (lam / _dist(p, x)) ** tau

    def h_vol(p):
        return weight(p, tau1) * v_t(p) ** kappa - pair.v(p) ** kappa

    def h_bdy(p):
        return weight(p, tau2) * u_t(p) ** theta - pair.u(p) ** theta

    def ker(a_pts, b):
        return _dist(a_pts, b) ** (-s)

    def focus_of(c):
        return [_dist(c, y0), _dist(c, img_c), _dist(c, x)]

    xb = _annulus_samples(x[:-1], 1.5 * lam, 1.5 * lam + 2 * max(scales), samples, seed, n - 1)
    xb = np.concatenate([xb, np.zeros((samples, 1))], axis=1)
    # volume samples: feet in a disc about x, lifted clear of the inversion ball
    r_out = 1.5 * lam
    feet = _annulus_samples(x[:-1], 0.0, r_out + 2 * max(scales), samples, seed + 1, n - 1)
    lift = 0.5 * max(scales) + r_out * qmc.Halton(d=1, scramble=True,
                                                  seed=seed + 2).random(samples)[:, 0]
    base = np.sqrt(np.maximum(r_out**2 - np.sum((feet - x[:-1]) ** 2, axis=1), 0.0))
    xv = np.concatenate([feet, (base + lift)[:, None]], axis=1)
    res = dict.fromkeys(("K1", "K2", "K3", "K4"), float("nan"))

    # rules centred at x, shared by every sample
    if "K3" in identities:
        inner = volume_polar_rule(n, x, scales, focus_of(x), order, ang, r_max=lam,
                                  min_scale=min_sc, azimuths=az)
        outer = volume_polar_rule(n, x, scales, focus_of(x) + [lam], order, ang, r_min=lam,
                                  min_scale=min_sc, azimuths=az)
        h_in = h_vol(inner.points)
        h_out = h_vol(outer.points)
    if "K4" in identities:
        ring = boundary_polar_rule(n, x, scales, focus_of(x) + [lam], order, 8 * ang,
                                   min_scale=min_sc)
        ring_keep = _dist(ring.points, x) > lam
        ring_pts = ring.points[ring_keep]
        ring_w = ring.weights[ring_keep]
        hb_ring = h_bdy(ring_pts)

    k1, k3 = [], []
    for xi in xb:
        lhs_t = float(u_t(xi[None])[0])
        lhs_o = float(pair.u(xi[None])[0])
        if "K1" in identities or "K3" in identities:
            rule = volume_polar_rule(n, xi, scales, focus_of(xi), order, ang,
                                     min_scale=min_sc, azimuths=az)
            kv = rule.weights * ker(rule.points, xi)
            vt = v_t(rule.points) ** kappa
        if "K1" in identities:
            rhs = float(np.dot(kv, weight(rule.points, tau1) * vt))
            k1.append(abs(lhs_t - rhs) / abs(lhs_t))
        if "K3" in identities:
            full = float(np.dot(kv, weight(rule.points, tau1) * vt
                                - pair.v(rule.points) ** kappa))
            part_in = float(np.dot(inner.weights * ker(inner.points, xi), h_in))
            xs = kelvin_point(km, xi)
            part_out = float(np.dot(outer.weights * ker(outer.points, xs), h_out))
            rhs3 = full - part_in - (lam / _dist(xi, x)) ** s * part_out
            k3.append(abs((lhs_t - lhs_o) - rhs3) / (abs(lhs_t) + abs(lhs_o)))
    k2, k4 = [], []
    for eta in xv:
        lhs_t = float(v_t(eta[None])[0])
        lhs_o = float(pair.v(eta[None])[0])
        if "K2" in identities:
            foot = np.append(eta[:-1], 0.0)
            rule = boundary_polar_rule(n, eta[:-1], scales + [eta[-1]], focus_of(foot),
                                       order, 8 * ang, min_scale=min(min_sc, 0.05 * eta[-1]))
            rhs = float(np.dot(rule.weights * ker(rule.points, eta),
                               weight(rule.points, tau2) * u_t(rule.points) ** theta))
            k2.append(abs(lhs_t - rhs) / abs(lhs_t))
        if "K4" in identities:
            etas = kelvin_point(km, eta)
            pk = ker(ring_pts, eta) - (lam / _dist(eta, x)) ** s * ker(ring_pts, etas)
            rhs4 = float(np.dot(ring_w * pk, hb_ring))
            k4.append(abs((lhs_t - lhs_o) - rhs4) / (abs(lhs_t) + abs(lhs_o)))
    for key, vals in (("K1", k1), ("K2", k2), ("K3", k3), ("K4", k4)):
        if vals:
            res[key] = float(max(vals))
    return KelvinResidual(res["K1"], res["K3"], res["K2"], res["K4"], lam, n, a, seed, order,
                          {"boundary": xb.tolist(), "volume": xv.tolist()}, tau_shift,
                          km.mu)
