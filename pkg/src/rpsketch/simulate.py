"""Bivariate-normal simulation lab: empirical MSEs, ratio curves, histograms.

For a target correlation rho, each trial draws k pairs (x_j, y_j) from the
standard bivariate normal and applies the requested estimators to the raw
(pre-clamp) formula values.  Trials are indexed deterministically by
(seed, trial, j), simulated in fixed-size blocks, and reduced in trial order,
so reports are bitwise-reproducible for any worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import mle, rng, variance
from .errors import ConfigError
from .estimators import SQRT_HALF_PI, SQRT_TAU, Estimator

_BLOCK_VALUES = 4_000_000  # trials per block = _BLOCK_VALUES // k


@dataclass(frozen=True)
class SimConfig:
    rho: float
    k: int
    trials: int
    seed: int
    estimators: tuple[Estimator, ...]

    def __post_init__(self):
        if not -1.0 <= self.rho <= 1.0:
            raise ConfigError("rho must lie in [-1, 1]")
        if self.k < 1 or self.trials < 1:
            raise ConfigError("k and trials must be >= 1")
        if not self.estimators:
            raise ConfigError("need at least one estimator")
        object.__setattr__(self, "estimators", tuple(self.estimators))


@dataclass(frozen=True)
class MseReport:
    estimator: Estimator
    rho: float
    k: int
    bias: float
    variance: float
    mse: float
    clamp_rate: float


@dataclass(frozen=True)
class Histogram:
    estimator: Estimator
    rho: float
    k: int
    edges: np.ndarray
    counts: np.ndarray
    frac_above_one: float
    frac_below_neg_one: float


def sample_pair(rho: float, seed: int, trial: int, j: int) -> tuple[float, float]:
    """One correlated pair: x ~ N(0,1), y = rho*x + sqrt(1-rho^2)*z."""
    x, y = rng.bivariate_block(rho, seed, trial, 1, j + 1)
    return float(x[0, j]), float(y[0, j])


def raw_estimates(estimator: Estimator, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Raw per-trial formula values over (trials, k) sample blocks."""
    k = x.shape[1]
    if estimator is Estimator.SIGN_SIGN:
        m = ((x >= 0.0) == (y >= 0.0)).sum(axis=1)
        return np.cos(np.pi * (1.0 - m / k))
    if estimator is Estimator.FULL:
        return (x * y).mean(axis=1)
    if estimator is Estimator.FULL_NORM:
        return (x * y).sum(axis=1) / np.sqrt((x * x).sum(axis=1) * (y * y).sum(axis=1))
    if estimator is Estimator.MLE_FULL:
        b = (x * y).mean(axis=1)
        m2 = ((x * x).sum(axis=1) + (y * y).sum(axis=1)) / k
        return np.array([mle.solve_full_from_moments(bi, mi, k).rho_hat
                         for bi, mi in zip(b, m2)])

    s = np.where(x >= 0.0, 1.0, -1.0) * y
    if estimator is Estimator.G:
        return SQRT_HALF_PI * s.mean(axis=1)
    if estimator is Estimator.G_NORM:
        sy2 = (y * y).sum(axis=1)
        return SQRT_HALF_PI * s.sum(axis=1) / (math.sqrt(k) * np.sqrt(sy2))
    if estimator is Estimator.S:
        mis = np.maximum(-s, 0.0).sum(axis=1)
        return 1.0 - SQRT_TAU / k * mis
    if estimator is Estimator.S_NORM:
        sy2 = (y * y).sum(axis=1)
        mis = np.maximum(-s, 0.0).sum(axis=1)
        return 1.0 - SQRT_TAU * mis / (math.sqrt(k) * np.sqrt(sy2))
    # MLE_SIGN_FULL
    return np.array([mle.solve_sign_full(row).rho_hat for row in s])


def _block_starts(trials: int, k: int) -> list[tuple[int, int]]:
    block = max(1, _BLOCK_VALUES // k)
    return [(start, min(block, trials - start))
            for start in range(0, trials, block)]


def _simulate_raw(cfg: SimConfig, threads: int = 1) -> dict[Estimator, np.ndarray]:
    """Raw estimates for every requested estimator, trial-major order."""

    def one_block(args: tuple[int, int]) -> dict[Estimator, np.ndarray]:
        start, n = args
        x, y = rng.bivariate_block(cfg.rho, cfg.seed, start, n, cfg.k)
        return {est: raw_estimates(est, x, y) for est in cfg.estimators}

    blocks = _block_starts(cfg.trials, cfg.k)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one_block, blocks))
    else:
        results = [one_block(b) for b in blocks]
    return {est: np.concatenate([r[est] for r in results])
            for est in cfg.estimators}


def run_mse(cfg: SimConfig, threads: int = 1) -> list[MseReport]:
    """Empirical bias, variance and MSE per estimator over cfg.trials trials.

    The decomposition mse = bias^2 + variance holds exactly by construction;
    clamp_rate is the fraction of raw values outside [-1, 1].
    """
    raws = _simulate_raw(cfg, threads)
    reports = []
    for est in cfg.estimators:
        r = raws[est]
        mean = float(r.mean())
        bias = mean - cfg.rho
        var = float(np.mean((r - mean) ** 2))
        clamp = float(np.mean((r > 1.0) | (r < -1.0)))
        reports.append(MseReport(est, cfg.rho, cfg.k, bias, var,
                                 bias * bias + var, clamp))
    return reports


@dataclass(frozen=True)
class RatioPoint:
    k: int
    mse_sign_sign: float
    mse_s_norm: float
    mse_g_norm: float
    ratio_s_norm: float
    ratio_g_norm: float
    theory_ratio_s_norm: float
    theory_ratio_g_norm: float


def run_mse_ratio(rho: float, k_grid, trials: int, seed: int,
                  threads: int = 1) -> list[RatioPoint]:
    """MSE(sign-sign)/MSE(normalized estimator) per k, with theory columns.

    The theory columns are the constant variance-factor quotients
    V_sign-sign / V_s-norm and V_sign-sign / V_g-norm at this rho.
    """
    k_grid = [int(k) for k in k_grid]
    if any(k < 2 for k in k_grid):
        raise ConfigError("ratio curves need k >= 2")
    v1 = variance.v_factor(Estimator.SIGN_SIGN, rho).value
    th_s = v1 / variance.v_factor(Estimator.S_NORM, rho).value
    th_g = v1 / variance.v_factor(Estimator.G_NORM, rho).value
    wanted = (Estimator.SIGN_SIGN, Estimator.S_NORM, Estimator.G_NORM)
    points = []
    for k in k_grid:
        reports = {r.estimator: r for r in run_mse(
            SimConfig(rho, k, trials, seed, wanted), threads)}
        m1 = reports[Estimator.SIGN_SIGN].mse
        ms = reports[Estimator.S_NORM].mse
        mg = reports[Estimator.G_NORM].mse
        points.append(RatioPoint(k, m1, ms, mg, m1 / ms, m1 / mg, th_s, th_g))
    return points


def run_histogram(rho: float, k: int, trials: int, seed: int,
                  estimator: Estimator, bins: int,
                  threads: int = 1) -> Histogram:
    """Bin the raw (pre-clamp) estimates; the point is the mass outside [-1, 1]."""
    if bins < 2:
        raise ConfigError("need at least 2 bins")
    raws = _simulate_raw(SimConfig(rho, k, trials, seed, (estimator,)),
                         threads)[estimator]
    counts, edges = np.histogram(raws, bins=bins)
    return Histogram(estimator, rho, k, edges, counts,
                     float(np.mean(raws > 1.0)), float(np.mean(raws < -1.0)))
