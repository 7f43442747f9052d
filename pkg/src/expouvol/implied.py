"""Black-Scholes implied volatility inversion and smile curves.

The solver inverts ``bs_call`` for any price inside the no-arbitrage band
(max(S - K e^{-rT}, 0), S) with a bracketed Newton iteration: Newton steps
accelerated by the analytic vega, falling back to bisection whenever a
step leaves the bracket.  Volatilities are in daily units internally;
smile points report annualized values (x sqrt(252)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from .pricing import OptionSpec, bs_call, expou_call, norm_pdf
from .risk_neutral import ExpansionCoeffs, MartingaleParams
from .units import annualize_vol

__all__ = ["SmilePoint", "ImpliedVolError", "implied_vol", "smile_curve"]

VOL_LO = 1e-6    # day^(-1/2), lower bracket
VOL_HI = 10.0    # day^(-1/2), upper bracket
PRICE_TOL = 1e-12
MAX_ITER = 100


class ImpliedVolError(ValueError):
    """Price outside the invertible band; message names the violated bound."""


@dataclass(frozen=True)
class SmilePoint:
    """One smile sample: moneyness S/K, annualized implied vol, price."""

    moneyness: float
    implied_vol_annual: Optional[float]
    price: float


def _vega(spec: OptionSpec, vol: float) -> float:
    w = math.sqrt(spec.maturity)
    d1 = (math.log(spec.spot / spec.strike)
          + (spec.rate + 0.5 * vol * vol) * spec.maturity) / (vol * w)
    return spec.spot * norm_pdf(d1) * w


def implied_vol(price: float, spec: OptionSpec) -> float:
    """Daily implied volatility solving bs_call(spec, vol) = price.

    Parameters
    ----------
    price : float
        Call price, strictly inside (max(S - K e^{-rT}, 0), S).

    Raises
    ------
    ImpliedVolError
        If the price violates a no-arbitrage bound or exceeds the price at
        the solver's volatility cap (10 day^(-1/2)).
    """
    intrinsic = max(spec.spot - spec.strike * math.exp(-spec.rate * spec.maturity), 0.0)
    if price <= intrinsic:
        raise ImpliedVolError(
            f"price {price:g} at or below lower no-arbitrage bound {intrinsic:g} "
            "(discounted intrinsic value)")
    if price >= spec.spot:
        raise ImpliedVolError(
            f"price {price:g} at or above upper no-arbitrage bound {spec.spot:g} (spot)")

    lo, hi = VOL_LO, VOL_HI
    f_lo = bs_call(spec, lo) - price
    f_hi = bs_call(spec, hi) - price
    if f_lo > 0:
        raise ImpliedVolError(
            f"price {price:g} below the price at the solver floor "
            f"{VOL_LO} day^(-1/2)")
    if f_hi < 0:
        raise ImpliedVolError(
            f"price {price:g} needs volatility beyond the cap {VOL_HI} day^(-1/2)")

    vol = min(max(0.01, lo), hi)  # cheap initial guess
    tol = PRICE_TOL * max(spec.spot, 1.0)
    for _ in range(MAX_ITER):
        f = bs_call(spec, vol) - price
        if abs(f) <= tol:
            return vol
        if f > 0:
            hi = vol
        else:
            lo = vol
        v = _vega(spec, vol)
        nxt = vol - f / v if (v > 0 and math.isfinite(v)) else math.nan
        if not (lo < nxt < hi):
            nxt = 0.5 * (lo + hi)
        vol = nxt
    return vol


def smile_curve(mp: MartingaleParams,
                coeffs_fn: Callable[[MartingaleParams, float, float], ExpansionCoeffs],
                moneyness_grid: Sequence[float],
                spec_template: OptionSpec) -> list[SmilePoint]:
    """Implied-volatility smile of the expOU price over a moneyness grid.

    The spot is held at ``spec_template.spot`` and the strike set to
    spot/moneyness for each grid point (the price is homogeneous, so the
    smile depends on S/K only).  ``coeffs_fn`` maps (mp, maturity, rate)
    to expansion coefficients, letting callers pick the fixed-z0 or the
    stationary-averaged variant.  Points whose inversion fails carry
    ``implied_vol_annual=None`` instead of aborting the curve.
    """
    if any(g <= 0 for g in moneyness_grid):
        raise ValueError("moneyness grid values must be positive")
    coeffs = coeffs_fn(mp, spec_template.maturity, spec_template.rate)
    out = []
    for mon in moneyness_grid:
        spec = OptionSpec(spot=spec_template.spot,
                          strike=spec_template.spot / mon,
                          maturity=spec_template.maturity,
                          rate=spec_template.rate)
        price = expou_call(spec, mp, coeffs).total
        try:
            iv = annualize_vol(implied_vol(price, spec))
        except ImpliedVolError:
            iv = None
        out.append(SmilePoint(moneyness=mon, implied_vol_annual=iv, price=price))
    return out
