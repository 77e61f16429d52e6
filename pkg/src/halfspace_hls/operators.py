"""Discrete extension and restriction operators with the Riesz-type kernel.

The extension sends a boundary density ``f`` to
``E f(x) = int f(y) |x - y|^(alpha - n) dy`` in the volume; the restriction
is its adjoint. Both are realised as one weighted kernel matrix, applied
either densely or chunk by chunk over the targets, so that the discrete
duality ``<g, E f>_w = <R g, f>_w`` holds to rounding.

On the ball the kernel is nearly singular for targets close to the sphere.
Without a mollifier the matrix uses singularity subtraction: for a target
``xi`` on the ray through sphere node ``j``,

    E f(xi) = sum_k w_k K(xi, z_k) (f_k - f_j) + f_j V(|xi|),

where ``V`` is the kernel integral of the constant density, computed by a
graded one-dimensional rule. The subtracted integrand vanishes at the
nearest node, which removes the near-singular error.
"""
from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import ellipkm1, gamma, hyp2f1

from .discretization import (
    DomainKind,
    QuadratureSet,
    ScalarField,
    composite_gauss,
    graded_breaks,
    gauss_legendre,
)
from .exponents import ExponentConfig, omega

__all__ = [
    "OperatorError",
    "Extrapolation",
    "RegularizationSchedule",
    "riesz_kernel",
    "kernel_matrix",
    "sphere_area",
    "zonal_sphere_integral",
    "DiscreteOperator",
    "assemble_operator",
    "extend",
    "restrict",
    "lp_norm",
    "operator_ratio",
    "log_sphere_integral",
    "log_hls_constant",
    "log_functional",
    "axisymmetric_extension",
    "ring_integral",
    "default_threads",
]

DENSE_LIMIT = 40_000_000
CHUNK = 2048


class OperatorError(ValueError):
    """Invalid operator request (kind or dimension mismatch, singular input)."""


class Extrapolation(enum.Enum):
    NONE = "none"
    RICHARDSON1 = "richardson1"


@dataclass(frozen=True)
class RegularizationSchedule:
    """Mollification radii and how to combine them.

    With ``RICHARDSON1`` the kernels at the listed radii are combined by a
    Richardson table that removes the error terms of order ``eps^1``,
    ``eps^2``, ... in turn (one order per extra radius).
    """

    eps_list: tuple[float, ...]
    extrapolation: Extrapolation = Extrapolation.NONE

    def __post_init__(self):
        eps = tuple(float(e) for e in self.eps_list)
        if not eps or any(e <= 0 for e in eps):
            raise OperatorError("mollification radii must be positive")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise OperatorError("mollification radii must be strictly decreasing")
        if self.extrapolation is Extrapolation.RICHARDSON1:
            if len(eps) < 2:
                raise OperatorError("Richardson extrapolation needs two or more radii")
            ratios = [a / b for a, b in zip(eps, eps[1:])]
            if not np.allclose(ratios, ratios[0], rtol=1e-12):
                raise OperatorError("Richardson extrapolation needs a fixed radius ratio")
        object.__setattr__(self, "eps_list", eps)

    @classmethod
    def default(cls, h: float) -> "RegularizationSchedule":
        """``eps = (2h, h)`` with first-order Richardson extrapolation."""
        return cls((2.0 * h, h), Extrapolation.RICHARDSON1)

    def coefficients(self) -> np.ndarray:
        """Weights ``c_i`` such that the combined kernel is ``sum c_i K_{eps_i}``."""
        m = len(self.eps_list)
        if self.extrapolation is Extrapolation.NONE:
            c = np.zeros(m)
            c[-1] = 1.0
            return c
        rho = self.eps_list[0] / self.eps_list[1]
        # Richardson table on the unit vectors: level k kills eps^k
        table = [np.eye(m)[i] for i in range(m)]
        for k in range(1, m):
            fac = rho**k
            table = [(fac * table[i + 1] - table[i]) / (fac - 1.0)
                     for i in range(len(table) - 1)]
        return table[0]


def default_threads() -> int:
    env = os.environ.get("HLS_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


# ---------------------------------------------------------------- kernels

def riesz_kernel(x, y, cfg: ExponentConfig, eps: float = 0.0):
    """``(|x - y|^2 + eps^2)^((alpha - n)/2)``, broadcasting over leading axes.

    Raises
    ------
    OperatorError
        If ``eps`` is negative, or ``x = y`` with ``eps = 0``.
    """
    if eps < 0:
        raise OperatorError("eps must be non-negative")
    d2 = np.sum((np.asarray(x, float) - np.asarray(y, float)) ** 2, axis=-1)
    d2 = d2 + eps * eps
    if np.any(d2 == 0):
        raise OperatorError("kernel evaluated at coincident points without mollification")
    out = d2 ** ((cfg.alpha - cfg.n) / 2.0)
    return float(out) if np.ndim(out) == 0 else out


def kernel_matrix(targets: np.ndarray, sources: np.ndarray, power: float,
                  eps: float = 0.0) -> np.ndarray:
    """Matrix ``(|x_i - y_j|^2 + eps^2)^(-power/2)`` without weights."""
    d2 = (np.sum(targets**2, axis=1)[:, None] + np.sum(sources**2, axis=1)[None, :]
          - 2.0 * targets @ sources.T)
    np.maximum(d2, 0.0, out=d2)
    if eps:
        d2 += eps * eps
    return d2 ** (-0.5 * power)


def sphere_area(dim: int) -> float:
    """Measure of the unit sphere ``S^dim`` in ``R^(dim+1)``."""
    return 2.0 * math.pi ** ((dim + 1) / 2) / math.gamma((dim + 1) / 2)


def zonal_sphere_integral(r: float, n: int, radius: float,
                          integrand: Callable[[np.ndarray], np.ndarray],
                          order: int = 16) -> float:
    """``int_{|z| = radius} g(|xi - z|) dS_z`` for ``|xi| = r < radius``.

    Written in geodesic polar coordinates about the radial projection of
    ``xi``: the azimuthal part is exact for a function of the distance, and
    the polar angle is integrated by a composite rule graded towards the
    nearest point, where the distance drops to ``radius - r``.
    """
    rel = max((radius - r) / radius, 1e-14)
    br = graded_breaks(0.0, math.pi, focus=(0.0,), min_scale=min(rel, 0.5))
    s, w = composite_gauss(br, order)
    dist = np.sqrt((radius - r) ** 2 + 4.0 * r * radius * np.sin(0.5 * s) ** 2)
    if n == 2:
        meas = 2.0 * radius
    else:
        meas = sphere_area(n - 2) * radius ** (n - 1) * np.sin(s) ** (n - 2)
    return float(np.sum(w * meas * integrand(dist)))


def _riesz_zonal(r: float, cfg: ExponentConfig, radius: float, order: int) -> float:
    power = cfg.n - cfg.alpha
    return zonal_sphere_integral(r, cfg.n, radius, lambda d: d ** (-power), order)


# ---------------------------------------------------------------- operators

_PAIRS = {
    DomainKind.HALFSPACE_BOUNDARY: DomainKind.HALFSPACE_VOLUME,
    DomainKind.SPHERE: DomainKind.BALL,
}


def _check_pair(source: QuadratureSet, target: QuadratureSet) -> None:
    if _PAIRS.get(source.kind) is not target.kind:
        raise OperatorError(
            f"cannot pair a {source.kind.value} source with a {target.kind.value} target")
    if source.dim != target.dim:
        raise OperatorError("source and target live in different dimensions")


class DiscreteOperator:
    """Weighted kernel matrix between a boundary set and a volume set.

    ``extend`` maps boundary values to volume values and ``restrict`` is the
    adjoint with respect to the two quadrature inner products. Small
    operators are stored densely; larger ones are applied chunk by chunk,
    optionally on a thread pool (each chunk writes its own rows only).
    """

    def __init__(self, source: QuadratureSet, target: QuadratureSet,
                 cfg: ExponentConfig, reg: RegularizationSchedule | None = None,
                 threads: int | None = None, dense_limit: int = DENSE_LIMIT,
                 potential_order: int | None = None):
        _check_pair(source, target)
        if cfg.n != source.dim:
            raise OperatorError(f"config has n={cfg.n} but grids live in R^{source.dim}")
        self.source, self.target, self.cfg, self.reg = source, target, cfg, reg
        self.threads = default_threads() if threads is None else max(1, int(threads))
        self.power = cfg.n - cfg.alpha
        self._corrected = source.kind is DomainKind.SPHERE and reg is None
        self._potential = None
        if self._corrected:
            self._prepare_correction(potential_order)
        elif reg is None:
            if np.min(target.points[:, -1]) <= 0:
                raise OperatorError("volume targets must lie strictly above the boundary")
        self.matrix = None
        if source.size * target.size <= dense_limit:
            self.matrix = self._rows(0, target.size)

    # -- assembly
    def _prepare_correction(self, order):
        smeta, bmeta = self.source.meta, self.target.meta
        c_s = np.asarray(smeta.get("center", np.zeros(self.cfg.n)))
        c_b = np.asarray(bmeta.get("center", np.zeros(self.cfg.n)))
        radius = float(smeta.get("radius", 1.0))
        rel = self.target.points - c_s
        r = np.sqrt(np.sum(rel**2, axis=1))
        if np.any(r >= radius):
            raise OperatorError("ball targets must lie inside the sphere")
        dirs = self.source.points - c_s
        # nearest sphere node: the ray node when the meshes are aligned
        if (np.allclose(c_s, c_b) and "ray_index" in bmeta
                and bmeta.get("sphere_level") == smeta.get("level")
                and np.isclose(bmeta.get("radius", 1.0), radius)):
            nearest = np.asarray(bmeta["ray_index"])
        else:
            nearest = np.empty(self.target.size, dtype=int)
            for lo in range(0, self.target.size, CHUNK):
                hi = min(lo + CHUNK, self.target.size)
                nearest[lo:hi] = np.argmax(rel[lo:hi] @ dirs.T, axis=1)
        order = order or max(16, int(smeta.get("level", 16)))
        keys = np.round(r, 13)
        uniq, inv = np.unique(keys, return_inverse=True)
        vals = np.array([_riesz_zonal(float(u), self.cfg, radius, order) for u in uniq])
        self._nearest = nearest
        self._potential = vals[inv]

    def _raw(self, lo: int, hi: int) -> np.ndarray:
        x = self.target.points[lo:hi]
        y = self.source.points
        if self.reg is None:
            return kernel_matrix(x, y, self.power)
        out = np.zeros((hi - lo, len(y)))
        for c, e in zip(self.reg.coefficients(), self.reg.eps_list):
            if c:
                out += c * kernel_matrix(x, y, self.power, e)
        return out

    def _rows(self, lo: int, hi: int) -> np.ndarray:
        if self.threads > 1 and hi - lo > CHUNK:
            starts = list(range(lo, hi, CHUNK))
            with ThreadPoolExecutor(self.threads) as pool:
                blocks = list(pool.map(lambda s: self._rows_serial(s, min(s + CHUNK, hi)),
                                       starts))
            return np.concatenate(blocks, axis=0)
        return self._rows_serial(lo, hi)

    def _rows_serial(self, lo: int, hi: int) -> np.ndarray:
        out = np.empty((hi - lo, self.source.size))
        for a in range(lo, hi, CHUNK):
            b = min(a + CHUNK, hi)
            blk = self._raw(a, b) * self.source.weights
            if self._corrected:
                rows = np.arange(b - a)
                j = self._nearest[a:b]
                blk[rows, j] = 0.0
                blk[rows, j] = self._potential[a:b] - blk.sum(axis=1)
            out[a - lo:b - lo] = blk
        return out

    # -- application
    def _apply(self, vec: np.ndarray, transpose: bool) -> np.ndarray:
        if self.matrix is not None:
            return self.matrix.T @ vec if transpose else self.matrix @ vec
        n_t = self.target.size
        starts = list(range(0, n_t, CHUNK))

        def job(s):
            blk = self._rows_serial(s, min(s + CHUNK, n_t))
            return blk.T @ vec[s:s + CHUNK] if transpose else blk @ vec

        if self.threads > 1:
            with ThreadPoolExecutor(self.threads) as pool:
                parts = list(pool.map(job, starts))
        else:
            parts = [job(s) for s in starts]
        if transpose:
            return np.sum(parts, axis=0)
        return np.concatenate(parts)

    def extend_values(self, f: np.ndarray) -> np.ndarray:
        return self._apply(np.asarray(f, float), transpose=False)

    def restrict_values(self, g: np.ndarray) -> np.ndarray:
        wg = self.target.weights * np.asarray(g, float)
        return self._apply(wg, transpose=True) / self.source.weights

    def extend(self, f: ScalarField) -> ScalarField:
        if f.grid is not self.source:
            raise OperatorError("field does not live on the operator's source grid")
        return ScalarField(self.target, self.extend_values(f.values))

    def restrict(self, g: ScalarField) -> ScalarField:
        if g.grid is not self.target:
            raise OperatorError("field does not live on the operator's target grid")
        return ScalarField(self.source, self.restrict_values(g.values))

    def ratio_values(self, f: np.ndarray) -> float:
        p, q = self.cfg.p, self.cfg.q
        nf = _norm(self.source.weights, f, p)
        if nf == 0:
            raise OperatorError("ratio of the zero field is undefined")
        return _norm(self.target.weights, self.extend_values(f), q) / nf

    def ratio(self, f: ScalarField) -> float:
        return self.ratio_values(f.values)


def assemble_operator(source: QuadratureSet, target: QuadratureSet,
                      cfg: ExponentConfig, reg: RegularizationSchedule | None = None,
                      threads: int | None = None, **kw) -> DiscreteOperator:
    return DiscreteOperator(source, target, cfg, reg, threads, **kw)


def extend(f: ScalarField, target: QuadratureSet, cfg: ExponentConfig,
           reg: RegularizationSchedule | None = None, threads: int | None = None) -> ScalarField:
    """Apply the extension operator to a boundary field.

    Examples
    --------
    >>> from halfspace_hls.discretization import build_sphere_mesh, build_ball_quadrature
    >>> from halfspace_hls.exponents import critical_config
    >>> s, b = build_sphere_mesh(3, 8), build_ball_quadrature(3, 4, 8)
    >>> v = extend(ScalarField(s, np.ones(s.size)), b, critical_config(3, 2.0))
    >>> bool(np.allclose(v.values, 4 * np.pi))
    True
    """
    return DiscreteOperator(f.grid, target, cfg, reg, threads).extend(f)


def restrict(g: ScalarField, target: QuadratureSet, cfg: ExponentConfig,
             reg: RegularizationSchedule | None = None, threads: int | None = None) -> ScalarField:
    """Apply the adjoint (restriction) operator to a volume field."""
    return DiscreteOperator(target, g.grid, cfg, reg, threads).restrict(g)


def _norm(w: np.ndarray, v: np.ndarray, p: float) -> float:
    a = np.abs(v)
    if math.isinf(p):
        return float(a.max()) if a.size else 0.0
    return float(np.dot(w, a**p) ** (1.0 / p))


def lp_norm(f: ScalarField, p: float) -> float:
    """``(sum_k w_k |f_k|^p)^(1/p)``; ``p = inf`` gives the max norm."""
    if p < 1:
        raise OperatorError("lp_norm needs p >= 1")
    return _norm(f.grid.weights, f.values, p)


def operator_ratio(f: ScalarField, cfg: ExponentConfig, target: QuadratureSet | DiscreteOperator,
                   reg: RegularizationSchedule | None = None) -> float:
    """``||E f||_q / ||f||_p`` on the given target grid (or prebuilt operator)."""
    op = target if isinstance(target, DiscreteOperator) else DiscreteOperator(f.grid, target, cfg, reg)
    if lp_norm(f, cfg.p) == 0:
        raise OperatorError("ratio of the zero field is undefined")
    return op.ratio(f)


# ---------------------------------------------------------------- log kernel

def log_sphere_integral(r: float, n: int, order: int = 16) -> float:
    """``int_{S^(n-1)} ln|xi - eta| dS_eta`` for ``|xi| = r < 1``."""
    return zonal_sphere_integral(r, n, 1.0, np.log, order)


def log_hls_constant(n: int, radial_order: int = 48, order: int = 16) -> tuple[float, float]:
    """Constant of the logarithmic inequality and ``int_B exp(I_n)``.

    ``I_n(xi) = -2 / omega_n * int ln|xi - eta| dS_eta`` depends on ``|xi|``
    only, so the ball integral reduces to a radial one.
    """
    om = omega(n)
    br = graded_breaks(0.0, 1.0, focus=(1.0,), min_scale=1e-6)
    r, w = composite_gauss(br, max(4, radial_order // 6))
    vals = np.array([math.exp(-2.0 / om * log_sphere_integral(x, n, order)) for x in r])
    ball = float(n * om * np.sum(w * vals * r ** (n - 1)))
    const = math.log(n * om) / (n - 1) + math.log(ball) / n
    return const, ball


def _xlogx(v: np.ndarray) -> np.ndarray:
    out = np.zeros_like(v)
    pos = v > 0
    out[pos] = v[pos] * np.log(v[pos])
    return out


def log_functional(F: ScalarField, G: ScalarField, eps: float | None = None,
                   tol: float = 1e-8, constant: float | None = None) -> tuple[float, float]:
    """Both sides of the logarithmic inequality between a sphere and a ball density.

    Returns
    -------
    lhs : float
        ``-2 n omega_n sum_{xi, eta} G(xi) ln|xi - eta| F(eta)`` weighted.
    rhs : float
        ``(1/n) int G ln G + (1/(n-1)) int F ln F + C_n``.

    Notes
    -----
    Without ``eps`` the inner log integral uses singularity subtraction
    against the exact potential of the constant density; with ``eps`` the
    distance is mollified as ``sqrt(d^2 + eps^2)``.
    """
    s, b = F.grid, G.grid
    if s.kind is not DomainKind.SPHERE or b.kind is not DomainKind.BALL:
        raise OperatorError("log functional needs a sphere density and a ball density")
    n = s.dim
    if np.any(F.values < 0) or np.any(G.values < 0):
        raise OperatorError("densities must be non-negative")
    if abs(F.integral() - 1) > tol or abs(G.integral() - 1) > tol:
        raise OperatorError("densities must be normalised to unit mass")
    center = np.asarray(s.meta.get("center", np.zeros(n)))
    x = b.points - center
    z = s.points - center
    inner = np.empty(b.size)
    wf = s.weights * F.values
    if eps is None:
        order = max(16, int(s.meta.get("level", 16)))
        r = np.sqrt(np.sum(x**2, axis=1))
        keys, inv = np.unique(np.round(r, 13), return_inverse=True)
        pot = np.array([log_sphere_integral(k, n, order) for k in keys])[inv]
        nearest = np.asarray(b.meta["ray_index"]) if "ray_index" in b.meta else None
        for lo in range(0, b.size, CHUNK):
            hi = min(lo + CHUNK, b.size)
            d2 = np.sum((x[lo:hi, None, :] - z[None]) ** 2, axis=-1)
            lg = 0.5 * np.log(d2)
            j = nearest[lo:hi] if nearest is not None else np.argmax(x[lo:hi] @ z.T, axis=1)
            fj = F.values[j]
            inner[lo:hi] = (lg * s.weights) @ F.values - fj * (lg @ s.weights) + fj * pot[lo:hi]
    else:
        for lo in range(0, b.size, CHUNK):
            hi = min(lo + CHUNK, b.size)
            d2 = np.sum((x[lo:hi, None, :] - z[None]) ** 2, axis=-1) + eps * eps
            inner[lo:hi] = 0.5 * np.log(d2) @ wf
    om = omega(n)
    lhs = -2.0 * n * om * float(np.dot(b.weights * G.values, inner))
    if constant is None:
        constant = log_hls_constant(n)[0]
    rhs = (b.integrate(_xlogx(G.values)) / n + s.integrate(_xlogx(F.values)) / (n - 1)
           + constant)
    return lhs, rhs


# ---------------------------------------------------------------- closures

def ring_integral(A, B, A_minus_B, beta: float) -> np.ndarray:
    """``int_0^{2 pi} (A - B cos t)^(-beta) dt`` for ``A >= B >= 0``.

    ``A - B`` is passed separately so that ``1 - (B/A)^2`` keeps full
    relative accuracy when the ring passes close to the target. Points with
    ``A = B`` (exact coincidence) return 0; they carry zero quadrature
    weight in every caller.
    """
    A, B, amb = np.broadcast_arrays(*(np.asarray(v, float) for v in (A, B, A_minus_B)))
    out = np.zeros(A.shape)
    ok = amb > 0
    A, B, amb = A[ok], B[ok], amb[ok]
    if beta == 0.5:
        # complete elliptic integral with complementary parameter (A-B)/(A+B)
        out[ok] = 4.0 / np.sqrt(A + B) * ellipkm1(amb / (A + B))
        return out
    x = (B / A) ** 2
    one_minus = amb * (A + B) / A**2
    a, b = beta / 2, (beta + 1) / 2
    val = np.empty(A.shape)
    near = x > 0.5
    val[~near] = hyp2f1(a, b, 1.0, x[~near])
    if np.any(near):
        # connection formula about x = 1 (1 - a - b = 1/2 - beta is not an integer here)
        e = 0.5 - beta
        u = one_minus[near]
        val[near] = (gamma(e) / (gamma(1 - a) * gamma(1 - b)) * hyp2f1(a, b, 1 - e, u)
                     + u**e * gamma(-e) / (gamma(a) * gamma(b)) * hyp2f1(1 - a, 1 - b, 1 + e, u))
    out[ok] = 2.0 * np.pi * A ** (-beta) * val
    return out



def axisymmetric_extension(profile: Callable[[np.ndarray], np.ndarray], points,
                           n: int, alpha: float, center=None,
                           scale: float = 1.0, order: int = 8, tail_panels: int = 16,
                           chunk: int = 2048) -> np.ndarray:
    """Extension of a radial boundary density by one-dimensional quadrature.

    For ``f(y) = profile(|y' - center|)`` the angular integral of the kernel
    is a hypergeometric function,

        int_0^{2 pi} (A - B cos t)^(-beta) dt = 2 pi A^(-beta) 2F1(beta/2, (beta+1)/2; 1; (B/A)^2),

    with ``beta = (n - alpha)/2``, so ``E f`` needs only a radial quadrature
    graded towards the near-singular radius ``s = |x' - center|``. ``n = 2``
    uses the two-sided line integral instead.

    Parameters
    ----------
    profile : callable
        Radial profile of the density, vectorised.
    points : array_like, shape (P, n)
        Targets with ``x_n >= 0``.
    scale : float
        Length scale of the profile, used to place breakpoints.
    """
    pts = np.atleast_2d(np.asarray(points, float))
    if pts.shape[1] != n or n not in (2, 3):
        raise OperatorError("axisymmetric extension is available for n in {2, 3}")
    c = np.zeros(n - 1) if center is None else np.asarray(center, float).reshape(n - 1)
    a = np.sqrt(np.sum((pts[:, :-1] - c) ** 2, axis=1))
    z = pts[:, -1]
    beta = 0.5 * (n - alpha)
    out = np.empty(len(pts))
    prof_br = scale * 2.0 ** np.arange(-3, 5)
    ub = np.concatenate([[0.0], 0.5 ** np.arange(tail_panels - 1, -1, -1)])
    u, wu = composite_gauss(ub, order)
    # targets sorted by height so that each chunk needs a similar grading depth
    perm = np.argsort(z, kind="stable")
    for lo in range(0, len(pts), chunk):
        idx = perm[lo:lo + chunk]
        ak, zk = a[idx, None], z[idx, None]
        top = 4.0 * np.maximum(ak + 2.0 * zk, 16.0 * scale)
        delta = np.maximum(zk, 1e-9 * scale)
        # fixed breakpoint layout within the chunk: every target gets the
        # same node count, panels beyond the range collapse to zero width
        depth = int(np.ceil(np.log2(np.max(top / delta)))) + 1
        steps = 2.0 ** np.arange(depth)
        br = np.concatenate([
            np.zeros_like(ak), top, ak,
            ak - delta * steps, ak + delta * steps,
            np.broadcast_to(prof_br, (len(idx), len(prof_br))),
        ], axis=1)
        br = np.sort(np.clip(br, 0.0, top), axis=1)
        s, w = composite_gauss(br, order)
        # tail s = top / u on u in (0, 1], graded towards u = 0
        s = np.concatenate([s, top / u], axis=1)
        w = np.concatenate([w, wu * top / u**2], axis=1)
        if n == 3:
            A = ak**2 + s**2 + zk**2
            B = 2.0 * ak * s
            A_minus_B = (ak - s) ** 2 + zk**2
            ang = ring_integral(A, B, A_minus_B, beta)
            out[idx] = np.sum(w * profile(s) * s * ang, axis=1)
        else:
            k1 = ((ak - s) ** 2 + zk**2)
            k2 = ((ak + s) ** 2 + zk**2)
            with np.errstate(divide="ignore"):
                ker = np.where(k1 > 0, k1 ** (-beta), 0.0) + k2 ** (-beta)
            out[idx] = np.sum(w * profile(s) * ker, axis=1)
    return out
