"""Normal special functions and the two maximum-likelihood estimators.

The sign-full MLE maximizes sum_j log Phi(c * s_j) over rho, where
c = rho / sqrt(1 - rho^2) and s_j = sgn(x_j) * y_j.  Its score equation is
sum_j invmills(c * s_j) * s_j = 0 after dropping the positive prefactor
(1 - rho^2)^(-3/2), which preserves the roots and removes a spurious
singularity at |rho| -> 1.  The full-data MLE is the root of a cubic in rho
built from the sample second moments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfcx, log_ndtr, ndtr

from .errors import ConfigError, DegenerateInputError, DomainError, ShapeError
from .estimators import SignFullPair
from .projection import FullSketch, sum_product

_INV_SQRT_TAU = 1.0 / math.sqrt(2.0 * math.pi)
_SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)
_SQRT_2 = math.sqrt(2.0)


def norm_pdf(t):
    """Standard normal density phi(t); accepts scalars or arrays."""
    t = np.asarray(t, dtype=np.float64)
    out = _INV_SQRT_TAU * np.exp(-0.5 * t * t)
    return float(out) if out.ndim == 0 else out


def norm_cdf(t):
    """Standard normal CDF Phi(t); accepts scalars or arrays."""
    t = np.asarray(t, dtype=np.float64)
    out = ndtr(t)
    return float(out) if out.ndim == 0 else out


def inv_mills(t):
    """phi(t)/Phi(t) without underflow or overflow anywhere on the axis.

    Evaluated as sqrt(2/pi) / erfcx(-t/sqrt(2)): the scaled complementary
    error function absorbs the exp(-t^2/2) common to numerator and
    denominator, so the far left tail returns ~|t| + 1/|t| instead of 0/0.
    Beyond t = 8 the denominator Phi(t) is 1 to double precision (and erfcx
    of the large negative argument would overflow), so the density alone is
    returned there; it degrades gracefully through the subnormal range.
    """
    t = np.asarray(t, dtype=np.float64)
    with np.errstate(over="ignore"):
        left = _SQRT_2_OVER_PI / erfcx(-np.minimum(t, 8.0) / _SQRT_2)
    out = np.where(t < 8.0, left, _INV_SQRT_TAU * np.exp(-0.5 * t * t))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class SolverConfig:
    tolerance: float = 1e-10  # on rho
    max_iter: int = 200
    boundary_eps: float = 1e-9

    def __post_init__(self):
        if self.tolerance <= 0 or self.boundary_eps <= 0 or self.max_iter < 1:
            raise ConfigError("tolerance, boundary_eps and max_iter must be positive")


@dataclass(frozen=True)
class MleResult:
    rho_hat: float
    at_boundary: bool
    iterations: int
    score_residual: float


def _products(pairs: SignFullPair) -> np.ndarray:
    s = pairs.products()
    if not np.any(s != 0.0):
        raise DegenerateInputError("all query coordinates are zero")
    return s


def _score_value(rho: float, s: np.ndarray) -> float:
    c = rho / math.sqrt((1.0 - rho) * (1.0 + rho))
    return float(np.sum(inv_mills(c * s) * s))


def _score_and_slope(rho: float, s: np.ndarray) -> tuple[float, float]:
    omr2 = (1.0 - rho) * (1.0 + rho)
    c = rho / math.sqrt(omr2)
    cs = c * s
    h = inv_mills(cs)
    f = float(np.sum(h * s))
    # d/dt inv_mills(t) = -inv_mills(t) * (t + inv_mills(t)); dc/drho = omr2^{-3/2}
    slope = -float(np.sum(h * (cs + h) * s * s)) / omr2**1.5
    return f, slope


def score(rho: float, pairs: SignFullPair) -> float:
    """Likelihood score sum_j invmills(c*s_j)*s_j at a given rho in (-1, 1)."""
    if not -1.0 < rho < 1.0:
        raise DomainError("score requires |rho| < 1")
    return _score_value(rho, _products(pairs))


def _log_likelihood(rho: float, s: np.ndarray) -> float:
    c = rho / math.sqrt((1.0 - rho) * (1.0 + rho))
    return float(np.sum(log_ndtr(c * s)))


def mle_sign_full(pairs: SignFullPair, cfg: SolverConfig = SolverConfig()) -> MleResult:
    """Root of the sign-full likelihood score, by safeguarded Newton.

    If the score never changes sign on [-1+eps, 1-eps] the likelihood is
    monotone there (all nonzero s_j share a sign) and the boundary the score
    points at is returned with ``at_boundary`` set.
    """
    return solve_sign_full(_products(pairs), cfg)


def solve_sign_full(s: np.ndarray, cfg: SolverConfig = SolverConfig()) -> MleResult:
    """Solver core on precomputed products s_j = sgn(x_j) * y_j."""
    lo = -1.0 + cfg.boundary_eps
    hi = 1.0 - cfg.boundary_eps
    f_lo = _score_value(lo, s)
    f_hi = _score_value(hi, s)
    if not (f_lo > 0.0 > f_hi):
        if f_lo > 0.0 and f_hi >= 0.0:
            edge = hi
        elif f_lo <= 0.0 and f_hi < 0.0:
            edge = lo
        else:  # numerically flat or interior minimum: compare the ends
            edge = hi if _log_likelihood(hi, s) >= _log_likelihood(lo, s) else lo
        return MleResult(edge, True, 0, _score_value(edge, s))

    a, b = lo, hi  # invariant: f(a) > 0 > f(b)
    x = 0.5 * (a + b)
    iterations = 0
    while iterations < cfg.max_iter:
        f, slope = _score_and_slope(x, s)
        iterations += 1
        if f > 0.0:
            a = x
        elif f < 0.0:
            b = x
        else:
            return MleResult(x, False, iterations, 0.0)
        step_ok = False
        if slope != 0.0 and math.isfinite(slope):
            x_new = x - f / slope
            step_ok = a < x_new < b
        if not step_ok:
            x_new = 0.5 * (a + b)
        if abs(x_new - x) <= cfg.tolerance:
            x = x_new
            break
        x = x_new
    return MleResult(x, False, iterations, _score_value(x, s))


def _cubic_roots(b: float, m: float) -> np.ndarray:
    """Real roots of rho^3 - b*rho^2 + (m - 1)*rho - b."""
    roots = np.roots([1.0, -b, m - 1.0, -b])
    real = roots[np.abs(roots.imag) <= 1e-9 * np.maximum(1.0, np.abs(roots.real))]
    return np.unique(real.real)


def mle_full(x: FullSketch, y: FullSketch,
             cfg: SolverConfig = SolverConfig()) -> MleResult:
    """Full-data MLE: likelihood-maximizing real root of the moment cubic.

    With sample moments b = sum(x_j y_j)/k and m = (sum x_j^2 + sum y_j^2)/k
    the stationarity condition is rho^3 - b rho^2 + (m - 1) rho - b = 0.
    Multiple real roots occur with small probability; the exact bivariate
    normal log-likelihood picks the winner.  A root at or beyond +/-1 is
    clamped and flagged as a boundary solution.
    """
    if x.k != y.k:
        raise ShapeError(f"k mismatch: {x.k} vs {y.k}")
    if x.k < 1 or x.sumsq == 0.0 or y.sumsq == 0.0:
        raise DomainError("degenerate sketches")
    k = x.k
    b = sum_product(x.values, y.values) / k
    m = (x.sumsq + y.sumsq) / k
    return solve_full_from_moments(b, m, k, cfg)


def solve_full_from_moments(b: float, m: float, k: int,
                            cfg: SolverConfig = SolverConfig()) -> MleResult:
    """Cubic-MLE core on the sample moments b = mean(xy), m = mean(x^2+y^2)."""

    def loglik(rho: float) -> float:
        r = min(max(rho, -1.0 + cfg.boundary_eps), 1.0 - cfg.boundary_eps)
        omr2 = (1.0 - r) * (1.0 + r)
        return -0.5 * k * math.log(omr2) - k * (m - 2.0 * r * b) / (2.0 * omr2)

    roots = _cubic_roots(b, m)
    in_range = roots[(roots >= -1.0) & (roots <= 1.0)]
    if in_range.size:
        best = max(in_range, key=loglik)
        at_boundary = abs(best) >= 1.0 - cfg.boundary_eps
    else:
        nearest = roots[np.argmin(np.abs(np.abs(roots) - 1.0))]
        best = math.copysign(1.0, nearest)
        at_boundary = True
    residual = abs(best**3 - b * best**2 + (m - 1.0) * best - b)
    return MleResult(float(best), at_boundary, 0, residual)
