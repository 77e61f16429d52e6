"""Exponent bookkeeping for the half-space extension inequality.

Every exponent used elsewhere in the package is derived here and carried
around in an immutable :class:`ExponentConfig`, so that no other module
re-derives a relation between ``p``, ``q``, ``t`` and friends.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

__all__ = [
    "ExponentError",
    "ExponentConfig",
    "omega",
    "riesz_norm",
    "derive_exponents",
    "critical_config",
    "general_config",
    "critical_p",
    "critical_q",
    "scaling_exponent",
    "is_subcritical",
    "invariant_residuals",
]


class ExponentError(ValueError):
    """Raised when an exponent tuple violates an admissibility bound."""


def omega(n: int) -> float:
    """Volume of the unit ball in ``R^n``."""
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def sphere_area(n: int) -> float:
    """Surface measure of the unit sphere in ``R^n`` (equals ``n * omega(n)``)."""
    return n * omega(n)


def riesz_norm(n: int, alpha: float) -> float:
    """Normalising constant ``pi^{n/2} 2^alpha Gamma(alpha/2) / Gamma((n-alpha)/2)``.

    For ``alpha = 2`` and ``n = 3`` this is ``4 pi``.
    """
    return (math.pi ** (n / 2) * 2.0**alpha * math.gamma(alpha / 2)
            / math.gamma((n - alpha) / 2))


def critical_p(n: int, alpha: float) -> float:
    return 2.0 * (n - 1) / (n + alpha - 2)


def critical_q(n: int, alpha: float) -> float:
    return 2.0 * n / (n - alpha)


@dataclass(frozen=True)
class ExponentConfig:
    """Immutable bundle of exponents for one ``(n, alpha, p, q)`` setting.

    Attributes
    ----------
    n : int
        Ambient dimension of the half space.
    alpha : float
        Kernel order, the kernel being ``|x - y|^(alpha - n)``.
    p, q : float
        Lebesgue exponents on the boundary and in the volume.
    t : float
        Volume exponent dual to ``q``.
    theta, kappa : float
        Powers ``1/(p-1)`` and ``q-1`` in the Euler-Lagrange system.
    tau1, tau2 : float
        Kelvin weight mismatches; both vanish exactly at the critical pair.
    """

    n: int
    alpha: float
    p: float
    q: float
    t: float
    theta: float
    kappa: float
    tau1: float
    tau2: float

    @property
    def omega_n(self) -> float:
        return omega(self.n)

    @property
    def riesz_norm(self) -> float:
        return riesz_norm(self.n, self.alpha)

    @property
    def p_dual(self) -> float:
        return self.p / (self.p - 1.0)

    @property
    def bubble_power(self) -> float:
        """Decay power ``n + alpha - 2`` of the extremal profile."""
        return self.n + self.alpha - 2.0

    @property
    def is_critical(self) -> bool:
        return (math.isclose(self.p, critical_p(self.n, self.alpha), rel_tol=1e-12)
                and math.isclose(self.q, critical_q(self.n, self.alpha), rel_tol=1e-12))

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "ExponentConfig":
        n, alpha, p = int(data["n"]), float(data["alpha"]), float(data["p"])
        if "q" in data and data["q"] is not None:
            return general_config(n, alpha, p, float(data["q"]))
        return derive_exponents(n, alpha, p)

    @classmethod
    def from_json(cls, text: str) -> "ExponentConfig":
        return cls.from_dict(json.loads(text))


def _check_alpha(n: int, alpha: float) -> None:
    if int(n) != n or n < 2:
        raise ExponentError(f"dimension n must be an integer >= 2, got {n}")
    if not (1.0 < alpha < n):
        raise ExponentError(f"alpha must satisfy 1 < alpha < n={n}, got {alpha}")


def _check_p(n: int, alpha: float, p: float) -> None:
    upper = (n - 1) / (alpha - 1)
    if not (1.0 < p < upper):
        raise ExponentError(
            f"p must satisfy 1 < p < (n-1)/(alpha-1) = {upper:.6g}, got {p}")


def _assemble(n: int, alpha: float, p: float, q: float) -> ExponentConfig:
    t = q / (q - 1.0)
    theta = 1.0 / (p - 1.0)
    kappa = q - 1.0
    tau1 = n + alpha - kappa * (n - alpha)
    tau2 = n + alpha - 2.0 - theta * (n - alpha)
    return ExponentConfig(n=int(n), alpha=float(alpha), p=float(p), q=float(q),
                          t=t, theta=theta, kappa=kappa, tau1=tau1, tau2=tau2)


def derive_exponents(n: int, alpha: float, p: float) -> ExponentConfig:
    """Derive ``q`` and the dependent exponents from ``(n, alpha, p)``.

    ``q`` is fixed by ``1/q = ((n-1)/n) (1/p - (alpha-1)/(n-1))``.

    Raises
    ------
    ExponentError
        If ``alpha`` is outside ``(1, n)`` or ``p`` outside ``(1, (n-1)/(alpha-1))``.

    Examples
    --------
    >>> cfg = derive_exponents(3, 2.0, 4 / 3)
    >>> round(cfg.q, 12), round(cfg.theta, 12), round(cfg.kappa, 12)
    (6.0, 3.0, 5.0)
    """
    _check_alpha(n, alpha)
    _check_p(n, alpha, p)
    inv_q = (n - 1) / n * (1.0 / p - (alpha - 1) / (n - 1))
    return _assemble(n, alpha, p, 1.0 / inv_q)


def critical_config(n: int, alpha: float) -> ExponentConfig:
    """Configuration at the dilation-invariant pair ``p = 2(n-1)/(n+alpha-2)``."""
    _check_alpha(n, alpha)
    p = critical_p(n, alpha)
    q = critical_q(n, alpha)
    # assemble from the closed forms so tau1 and tau2 come out as exact zeros
    # whenever the arithmetic allows it
    return _assemble(n, alpha, p, q)


def general_config(n: int, alpha: float, p: float, q: float) -> ExponentConfig:
    """Configuration with ``q`` chosen freely instead of derived from ``p``.

    Used for off-critical experiments such as the dilation sweep, where the
    pair ``(p, q)`` is not tied by the Sobolev-type relation.
    """
    _check_alpha(n, alpha)
    _check_p(n, alpha, p)
    if not q > 1.0:
        raise ExponentError(f"q must exceed 1, got {q}")
    return _assemble(n, alpha, p, q)


def scaling_exponent(cfg: ExponentConfig) -> float:
    """Power ``s`` with ``ratio(f(./lam)) = lam^s ratio(f)``.

    ``s = alpha - 1 + n/q - (n-1)/p``; it vanishes at the critical pair.
    """
    return cfg.alpha - 1.0 + cfg.n / cfg.q - (cfg.n - 1) / cfg.p


def is_subcritical(cfg: ExponentConfig) -> bool:
    """True when the dilation family makes the ratio unbounded."""
    n, alpha, p, q = cfg.n, cfg.alpha, cfg.p, cfg.q
    p_lo = critical_p(n, alpha)
    q_hi = critical_q(n, alpha)
    tol = 1e-12
    in_p = p_lo * (1 - tol) <= p < 2.0
    in_q = 2.0 < q <= q_hi * (1 + tol)
    return bool(in_p and in_q and scaling_exponent(cfg) > 0.0)


def invariant_residuals(cfg: ExponentConfig) -> dict[str, float]:
    """Absolute residuals of the six structural relations of ``cfg``.

    Keys
    ----
    pq
        ``1/q`` against its expression in ``p``.
    dual_t
        ``((n-1)/n)/p + 1/t + (n-alpha+1)/n`` against 2.
    dual_p
        ``1 - 1/p`` against ``(n/(n-1)) (1/t - alpha/n)``.
    kappa_theta
        ``1/(kappa+1)`` against its expression in ``theta``.
    tau
        Largest deviation of ``tau1`` and ``tau2`` from their definitions.
    critical
        Zero when "both taus vanish" and "p is critical" agree, else 1.
    """
    n, a, p, q, t = cfg.n, cfg.alpha, cfg.p, cfg.q, cfg.t
    theta, kappa = cfg.theta, cfg.kappa
    res = {
        "pq": abs(1 / q - (n - 1) / n * (1 / p - (a - 1) / (n - 1))),
        "dual_t": abs((n - 1) / n / p + 1 / t + (n - a + 1) / n - 2.0),
        "dual_p": abs((1 - 1 / p) - n / (n - 1) * (1 / t - a / n)),
        "kappa_theta": abs(1 / (kappa + 1)
                           - (n - 1) / n * ((n - a) / (n - 1) - 1 / (theta + 1))),
        "tau": max(abs(cfg.tau1 - (n + a - kappa * (n - a))),
                   abs(cfg.tau2 - (n + a - 2 - theta * (n - a)))),
    }
    taus_zero = abs(cfg.tau1) < 1e-9 and abs(cfg.tau2) < 1e-9
    crit = math.isclose(p, critical_p(n, a), rel_tol=1e-9)
    res["critical"] = 0.0 if taus_zero == crit else 1.0
    return res
