"""Decay-rate constants of the localization bounds and fits of measured decay."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy import integrate


class EnvelopeNotValid(ValueError):
    """The decay bound is only proven for beta below the threshold beta_c(d)."""


class BracketError(RuntimeError):
    pass


def I_beta(beta: float) -> float:
    """``sqrt(beta) * int exp(-beta (cosh t - 1)) dt / sqrt(2 pi)``, always below 1."""
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    # integrand < 1e-30 beyond T; the integrand is even
    T = math.acosh(1.0 + 70.0 / beta)
    val, err = integrate.quad(lambda t: math.exp(-beta * (math.cosh(t) - 1.0)), 0.0, T,
                              epsabs=1e-13, epsrel=1e-13, limit=400)
    if err > 1e-11:
        raise FloatingPointError(f"quadrature error estimate {err:g} too large")
    return 2.0 * val * math.sqrt(beta / (2.0 * math.pi))


def rate(d: int, beta: float) -> float:
    """Per-step factor ``I_beta * exp(beta (c_d - 1)) * c_d`` with ``c_d = 2d - 1``."""
    cd = 2 * d - 1
    return I_beta(beta) * math.exp(beta * (cd - 1)) * cd


def beta_c(d: int, *, lo: float = 1e-8, hi: float = 1.0, xtol: float = 1e-15, max_iter: int = 200) -> float:
    """Root of ``rate(d, beta) = 1``; ``math.inf`` in one dimension, where the rate is I_beta < 1."""
    if d < 1:
        raise ValueError("dimension must be >= 1")
    if d == 1:
        return math.inf
    f_lo, f_hi = rate(d, lo) - 1.0, rate(d, hi) - 1.0
    if not (f_lo < 0 < f_hi):
        raise BracketError(f"f({lo})={f_lo:g}, f({hi})={f_hi:g} do not bracket a root")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        f_mid = rate(d, mid) - 1.0
        if f_mid == 0:
            return mid
        if f_mid < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= xtol * hi:
            break
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class BoundParams:
    """``C0`` defaults to ``2 e^{1 + 2d beta} / (1 - r)``, the constant left by summing the path series.

    The ``2d`` comes from the boundary count ``|boundary| <= (2d-2)|gamma| + 2d``;
    in one dimension it is ``2 e^{1 + 2 beta} / (1 - r)``.
    """

    d: int
    beta: float
    C0: float | None = None

    def __post_init__(self):
        if self.d < 1 or not self.beta > 0:
            raise ValueError("need d >= 1 and beta > 0")
        if self.C0 is None:
            r = rate(self.d, self.beta)
            object.__setattr__(self, "C0", 2.0 * math.exp(1.0 + 2.0 * self.d * self.beta) / (1.0 - r) if r < 1 else math.inf)
        elif not self.C0 > 0:
            raise ValueError("C0 must be positive")

    @property
    def c_d(self) -> int:
        return 2 * self.d - 1

    @property
    def rate(self) -> float:
        return rate(self.d, self.beta)

    def check_localized(self) -> None:
        bc = beta_c(self.d)
        if not self.beta < bc:
            raise EnvelopeNotValid(f"beta={self.beta} is not below beta_c({self.d})={bc:.6g}")


def theorem1_envelope(bp: BoundParams, eps_x: float, eps_y: float, dist: float) -> float:
    """``C0 (1/eps_x + 1/eps_y) r^dist`` bounding <G_xy>."""
    bp.check_localized()
    if not (eps_x > 0 and eps_y > 0):
        raise ValueError("both pinning strengths must be positive")
    return bp.C0 * (1.0 / eps_x + 1.0 / eps_y) * bp.rate ** dist


def theorem2_envelope(bp: BoundParams, dist: float) -> float:
    """``C0 r^dist`` bounding <exp(t_x / 2)> under a single pinning."""
    bp.check_localized()
    return bp.C0 * bp.rate ** dist


class DecayFit(NamedTuple):
    rate: float
    intercept: float
    rate_stderr: float
    n_used: int
    n_excluded: int


def fit_decay_rate(points: Sequence[tuple[float, float, float]]) -> DecayFit:
    """Weighted least squares of ``log(value)`` on distance; returns ``-slope`` as the rate.

    Weights are ``(value / stderr)^2``. When every stderr is zero the fit is
    unweighted and the slope error comes from the residuals.
    """
    pts = [(float(r), float(v), float(s)) for r, v, s in points]
    used = [p for p in pts if p[1] > 0 and math.isfinite(p[1])]
    n_excl = len(pts) - len(used)
    if n_excl:
        warnings.warn(f"fit_decay_rate: dropped {n_excl} nonpositive value(s)", RuntimeWarning, stacklevel=2)
    if len(used) < 3:
        raise ValueError(f"need at least 3 positive points, got {len(used)}")
    x = np.array([p[0] for p in used])
    y = np.log([p[1] for p in used])
    rel = np.array([p[2] / p[1] for p in used])
    X = np.column_stack([np.ones_like(x), x])
    if np.all(rel > 0):
        w = 1.0 / rel**2
        cov = np.linalg.inv(X.T @ (w[:, None] * X))
        coef = cov @ (X.T @ (w * y))
    else:
        coef, *_ = np.linalg.lstsq(X, y, rcond=None)
        resid = y - X @ coef
        dof = len(used) - 2
        s2 = float(resid @ resid) / dof if dof > 0 else 0.0
        cov = s2 * np.linalg.inv(X.T @ X)
    return DecayFit(-float(coef[1]), float(coef[0]), float(math.sqrt(max(cov[1, 1], 0.0))), len(used), n_excl)
