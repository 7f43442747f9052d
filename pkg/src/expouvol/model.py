"""Physical-measure exponential Ornstein-Uhlenbeck (expOU) market model.

Two-dimensional diffusion in daily units: the price S(t) is a log-Brownian
motion whose instantaneous volatility is sigma(t) = m * exp(Y(t)), and the
log-volatility Y(t) is an Ornstein-Uhlenbeck process

    dS/S = mu dt + m e^Y dW1,    dY = -alpha Y dt + k dW2,

with Wiener correlation <dW1 dW2> = rho dt.  This module provides the OU
moments, the volatility densities and the two return-correlation
diagnostics (squared-return autocorrelation and leverage).

All quantities are in daily units: times in days, alpha in 1/day, m and k
in day^(-1/2).  Annualization happens only at the CLI boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ModelParams",
    "OUState",
    "ou_conditional_moments",
    "stationary_log_vol_variance",
    "vol_conditional_pdf",
    "vol_stationary_pdf",
    "squared_return_autocorr",
    "leverage",
]


@dataclass(frozen=True)
class ModelParams:
    """expOU model parameters (physical measure, daily units).

    Attributes
    ----------
    m : float
        Normal level of volatility, day^(-1/2).  Median of the stationary
        lognormal volatility distribution.
    alpha : float
        Mean-reversion rate of the log-volatility, day^(-1).
    k : float
        Vol-of-vol (noise amplitude of the log-volatility OU), day^(-1/2).
    rho : float
        Correlation between the price and volatility Wiener noises,
        in [-1, 1].  Negative rho produces the leverage effect.
    """

    m: float
    alpha: float
    k: float
    rho: float

    def __post_init__(self):
        if not (self.m > 0):
            raise ValueError(f"m must be positive, got {self.m}")
        if not (self.alpha > 0):
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not (self.k > 0):
            raise ValueError(f"k must be positive, got {self.k}")
        if not (-1.0 <= self.rho <= 1.0):
            raise ValueError(f"rho must lie in [-1, 1], got {self.rho}")
        if not math.isfinite(self.beta2):
            raise ValueError("k^2/(2 alpha) is not finite")

    @property
    def beta2(self) -> float:
        """Stationary variance of the log-volatility, beta^2 = k^2/(2 alpha)."""
        return self.k * self.k / (2.0 * self.alpha)


@dataclass(frozen=True)
class OUState:
    """Log-volatility state: value ``y`` after ``t`` elapsed days."""

    y: float
    t: float = 0.0

    def __post_init__(self):
        if self.t < 0:
            raise ValueError(f"elapsed time must be nonnegative, got {self.t}")


def ou_conditional_moments(p: ModelParams, y0: float, t):
    """Conditional mean and variance of Y(t) given Y(0) = y0.

    mean = y0 exp(-alpha t), variance = (k^2/2alpha)(1 - exp(-2 alpha t)).
    The variance grows monotonically from 0 to beta^2.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be nonnegative")
    mean = y0 * np.exp(-p.alpha * t)
    var = p.beta2 * (-np.expm1(-2.0 * p.alpha * t))
    if mean.ndim == 0:
        return float(mean), float(var)
    return mean, var


def stationary_log_vol_variance(p: ModelParams) -> float:
    """Stationary variance of the log-volatility, k^2/(2 alpha)."""
    return p.beta2


def vol_conditional_pdf(p: ModelParams, sigma, t: float, sigma0: float):
    """Transition density of the volatility sigma(t) = m e^{Y(t)}.

    Lognormal in sigma: the log-location relaxes from ln(sigma0) toward
    ln(m) at rate alpha, the log-variance grows toward beta^2.

    Parameters
    ----------
    sigma : float or ndarray
        Volatility at which to evaluate the density, > 0.
    t : float
        Elapsed time in days, > 0.
    sigma0 : float
        Initial volatility, > 0.
    """
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma <= 0):
        raise ValueError("sigma must be positive")
    if sigma0 <= 0:
        raise ValueError("sigma0 must be positive")
    if t <= 0:
        raise ValueError("t must be positive")
    decay = math.exp(-p.alpha * t)
    var = p.beta2 * (1.0 - decay * decay)
    z = np.log(sigma / p.m) - decay * math.log(sigma0 / p.m)
    pdf = np.exp(-z * z / (2.0 * var)) / (sigma * math.sqrt(2.0 * math.pi * var))
    return float(pdf) if pdf.ndim == 0 else pdf


def vol_stationary_pdf(p: ModelParams, sigma):
    """Stationary volatility density: lognormal with median m, log-scale beta."""
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma <= 0):
        raise ValueError("sigma must be positive")
    b2 = p.beta2
    z = np.log(sigma / p.m)
    pdf = np.exp(-z * z / (2.0 * b2)) / (sigma * math.sqrt(2.0 * math.pi * b2))
    return float(pdf) if pdf.ndim == 0 else pdf


def squared_return_autocorr(p: ModelParams, tau):
    """Autocorrelation of squared returns at lag tau >= 0 days.

    Corr[dR(t)^2, dR(t+tau)^2] = (exp(4 beta^2 e^{-alpha tau}) - 1)
                                 / (3 exp(4 beta^2) - 1).

    Decays through a cascade of exponentials exp(-n alpha tau); the lag-0
    value is below 1/3 and the large-lag tail is a single exponential.
    """
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0):
        raise ValueError("tau must be nonnegative")
    b2 = p.beta2
    num = np.expm1(4.0 * b2 * np.exp(-p.alpha * tau))
    den = 3.0 * math.exp(4.0 * b2) - 1.0
    out = num / den
    return float(out) if out.ndim == 0 else out


def leverage(p: ModelParams, tau):
    """Return-volatility correlation L(tau); zero for tau < 0.

    L(tau) = (2 rho k / m) exp(-alpha tau + 2 beta^2 (e^{-alpha tau} - 3/4))
    for tau >= 0.  The sign is the sign of rho; the decay rate is k^2 for
    alpha*tau << 1 and alpha for alpha*tau >> 1.
    """
    tau = np.asarray(tau, dtype=float)
    b2 = p.beta2
    amp = 2.0 * p.rho * p.k / p.m
    tpos = np.maximum(tau, 0.0)
    val = amp * np.exp(-p.alpha * tpos + 2.0 * b2 * (np.exp(-p.alpha * tpos) - 0.75))
    out = np.where(tau < 0, 0.0, val)
    return float(out) if out.ndim == 0 else out
