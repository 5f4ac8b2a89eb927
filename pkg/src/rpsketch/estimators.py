"""Closed-form cosine estimators from sketch pairs.

Three families:

* sign-sign: both sides quantized to bits, similarity recovered from the
  collision probability 1 - acos(rho)/pi;
* full: both sides kept at full precision (plain, normalized);
* sign-full: one side stored as bits, the query side kept at full precision.
  With s_j = sgn(x_j) * y_j, the moment route scales mean(s) by sqrt(pi/2)
  and the mismatch route penalizes 1 by sqrt(2*pi) times the mean positive
  part of -s (a mismatch is query mass on the wrong side of a stored sign).

Raw formula values may land outside [-1, 1]; reports carry both the raw
value and the clamped one with an explicit flag, because ranking wants
bounded scores while variance analysis wants the untouched statistic.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ContractError, DomainError, ShapeError
from .projection import (FullSketch, SignSketch, matching_bits, popcount,
                         sign_array, sign_quantize, sum_product)

SQRT_HALF_PI = math.sqrt(math.pi / 2.0)
SQRT_TAU = math.sqrt(2.0 * math.pi)


class Estimator(enum.Enum):
    SIGN_SIGN = "sign-sign"
    FULL = "full"
    FULL_NORM = "full-norm"
    G = "g"
    G_NORM = "g-norm"
    S = "s"
    S_NORM = "s-norm"
    MLE_SIGN_FULL = "mle"
    MLE_FULL = "mle-full"

    @property
    def cli_name(self) -> str:
        return self.value

    @classmethod
    def from_cli_name(cls, name: str) -> "Estimator":
        for member in cls:
            if member.value == name:
                return member
        raise KeyError(name)


#: estimators that score a bit-packed store against a full-precision query
SIGN_STORE_ESTIMATORS = frozenset({
    Estimator.SIGN_SIGN, Estimator.G, Estimator.G_NORM,
    Estimator.S, Estimator.S_NORM, Estimator.MLE_SIGN_FULL,
})


@dataclass(frozen=True)
class EstimateReport:
    """An estimate plus its provenance: estimator, k, raw value, clamp flag."""

    estimator: Estimator
    k: int
    rho_hat: float
    clamped: bool
    raw: float


@dataclass(frozen=True)
class SignFullPair:
    """Stored projection signs paired with a full-precision query sketch."""

    signs: SignSketch
    query: FullSketch

    def __post_init__(self):
        if self.signs.k != self.query.k:
            raise ShapeError(f"k mismatch: {self.signs.k} vs {self.query.k}")

    @property
    def k(self) -> int:
        return self.signs.k

    def products(self) -> np.ndarray:
        """s_j = sgn(x_j) * y_j."""
        return sign_array(self.signs) * self.query.values


def _finish(estimator: Estimator, k: int, raw: float) -> EstimateReport:
    raw = float(raw)
    if raw > 1.0:
        return EstimateReport(estimator, k, 1.0, True, raw)
    if raw < -1.0:
        return EstimateReport(estimator, k, -1.0, True, raw)
    return EstimateReport(estimator, k, raw, False, raw)


def estimate_sign_sign(a: SignSketch, b: SignSketch) -> EstimateReport:
    """cos(pi * (1 - matches/k)); in [-1, 1] by construction."""
    if a.k != b.k:
        raise ShapeError(f"k mismatch: {a.k} vs {b.k}")
    if a.k < 1:
        raise ShapeError("need k >= 1")
    m = matching_bits(a, b)
    raw = float(np.cos(np.pi * (1.0 - m / a.k)))
    return EstimateReport(Estimator.SIGN_SIGN, a.k, raw, False, raw)


def estimate_full(x: FullSketch, y: FullSketch) -> EstimateReport:
    """Mean coordinate product (1/k) sum x_j y_j."""
    if x.k != y.k:
        raise ShapeError(f"k mismatch: {x.k} vs {y.k}")
    raw = sum_product(x.values, y.values) / x.k
    return _finish(Estimator.FULL, x.k, raw)


def estimate_full_norm(x: FullSketch, y: FullSketch) -> EstimateReport:
    """Empirical cosine of the two sketches; bounded by Cauchy-Schwarz."""
    if x.k != y.k:
        raise ShapeError(f"k mismatch: {x.k} vs {y.k}")
    if x.sumsq == 0.0 or y.sumsq == 0.0:
        raise DomainError("normalized estimator needs nonzero sketches")
    raw = sum_product(x.values, y.values) / math.sqrt(x.sumsq * y.sumsq)
    return _finish(Estimator.FULL_NORM, x.k, raw)


def estimate_g(p: SignFullPair) -> EstimateReport:
    """sqrt(pi/2) * mean(s), inverting E(s) = sqrt(2/pi) * rho."""
    s = p.products()
    raw = SQRT_HALF_PI * float(s.mean())
    return _finish(Estimator.G, p.k, raw)


def estimate_g_norm(p: SignFullPair) -> EstimateReport:
    """Moment estimator with the query norm divided out."""
    if p.query.sumsq == 0.0:
        raise DomainError("normalized estimator needs a nonzero query sketch")
    s = p.products()
    raw = SQRT_HALF_PI * float(s.sum()) / (math.sqrt(p.k) * math.sqrt(p.query.sumsq))
    return _finish(Estimator.G_NORM, p.k, raw)


def estimate_s(p: SignFullPair) -> EstimateReport:
    """1 - sqrt(2*pi)/k * sum of mismatch magnitudes max(-s_j, 0).

    The summand is nonnegative, so the raw value never exceeds 1; only the
    lower end can clamp.
    """
    s = p.products()
    mis = float(np.maximum(-s, 0.0).sum())
    raw = 1.0 - SQRT_TAU / p.k * mis
    return _finish(Estimator.S, p.k, raw)


def estimate_s_norm(p: SignFullPair) -> EstimateReport:
    """Mismatch estimator with the query norm divided out; still <= 1."""
    if p.query.sumsq == 0.0:
        raise DomainError("normalized estimator needs a nonzero query sketch")
    s = p.products()
    mis = float(np.maximum(-s, 0.0).sum())
    raw = 1.0 - SQRT_TAU * mis / (math.sqrt(p.k) * math.sqrt(p.query.sumsq))
    return _finish(Estimator.S_NORM, p.k, raw)


_SCALAR_PAIR_FNS = {
    Estimator.G: estimate_g,
    Estimator.G_NORM: estimate_g_norm,
    Estimator.S: estimate_s,
    Estimator.S_NORM: estimate_s_norm,
}


def estimate_pair(estimator: Estimator, signs: SignSketch,
                  query: FullSketch) -> EstimateReport:
    """Scalar sign-store scoring for any supported estimator."""
    if estimator is Estimator.SIGN_SIGN:
        return estimate_sign_sign(signs, sign_quantize(query))
    if estimator is Estimator.MLE_SIGN_FULL:
        from . import mle

        res = mle.mle_sign_full(SignFullPair(signs, query))
        return EstimateReport(estimator, signs.k, res.rho_hat, False, res.rho_hat)
    if estimator in _SCALAR_PAIR_FNS:
        return _SCALAR_PAIR_FNS[estimator](SignFullPair(signs, query))
    raise ContractError(
        f"estimator {estimator.cli_name!r} cannot score a sign store")


def estimate_batch(signs: Sequence[SignSketch], query: FullSketch,
                   estimator: Estimator) -> list[EstimateReport]:
    """Score one query sketch against many stored sign sketches.

    Results are bitwise-identical to the scalar calls, in store order.  The
    closed-form estimators run vectorized over a single unpacked sign matrix;
    the per-bit +/-|y_j| products are formed once per stored sketch row.
    """
    signs = list(signs)
    if estimator not in SIGN_STORE_ESTIMATORS:
        raise ContractError(
            f"estimator {estimator.cli_name!r} cannot score a sign store")
    if not signs:
        return []
    k = query.k
    for i, sk in enumerate(signs):
        if sk.k != k:
            raise ShapeError(f"sketch {i}: k mismatch ({sk.k} vs {k})")
    if estimator is Estimator.MLE_SIGN_FULL:
        return [estimate_pair(estimator, sk, query) for sk in signs]

    packed = np.stack([sk.bits for sk in signs])
    if estimator is Estimator.SIGN_SIGN:
        qbits = sign_quantize(query)
        differing = popcount(np.bitwise_xor(packed, qbits.bits[None, :])).sum(axis=1)
        # scalar cos per row: keeps bitwise parity with estimate_sign_sign
        raws = [float(np.cos(np.pi * (1.0 - int(k - d) / k))) for d in differing]
        return [EstimateReport(estimator, k, r, False, r) for r in raws]

    pm1 = np.unpackbits(packed, axis=1, count=k, bitorder="little").astype(np.float64) * 2.0 - 1.0
    s = pm1 * query.values[None, :]
    if estimator is Estimator.G:
        raws = SQRT_HALF_PI * s.mean(axis=1)
    elif estimator is Estimator.G_NORM:
        if query.sumsq == 0.0:
            raise DomainError("normalized estimator needs a nonzero query sketch")
        raws = SQRT_HALF_PI * s.sum(axis=1) / (math.sqrt(k) * math.sqrt(query.sumsq))
    elif estimator is Estimator.S:
        mis = np.maximum(-s, 0.0).sum(axis=1)
        raws = 1.0 - SQRT_TAU / k * mis
    else:  # S_NORM
        if query.sumsq == 0.0:
            raise DomainError("normalized estimator needs a nonzero query sketch")
        mis = np.maximum(-s, 0.0).sum(axis=1)
        raws = 1.0 - SQRT_TAU * mis / (math.sqrt(k) * math.sqrt(query.sumsq))
    return [_finish(estimator, k, r) for r in raws]
