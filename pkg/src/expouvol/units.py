"""Daily/annual unit conversions (252 trading days per year)."""

import math

TRADING_DAYS_PER_YEAR = 252.0
_SQRT_DAYS = math.sqrt(TRADING_DAYS_PER_YEAR)


def annualize_vol(vol_daily: float) -> float:
    """day^(-1/2) -> year^(-1/2)."""
    return vol_daily * _SQRT_DAYS


def daily_vol(vol_annual: float) -> float:
    """year^(-1/2) -> day^(-1/2)."""
    return vol_annual / _SQRT_DAYS


def daily_rate(rate_annual: float) -> float:
    """year^(-1) -> day^(-1)."""
    return rate_annual / TRADING_DAYS_PER_YEAR
