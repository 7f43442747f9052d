"""Risk-aversion calibration against an option chain.

Given fixed physical model parameters and a file of quoted call prices,
fit the two market-price-of-risk constants (lambda0, lambda1) by least
squares on mid prices with a bounded derivative-free simplex search.
The quote CSV carries a header ``strike,maturity_days,bid,ask`` (mid is
computed) or ``strike,maturity_days,mid``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .model import ModelParams
from .pricing import OptionSpec, expou_call
from .risk_neutral import RiskAversion, expansion_coeffs, to_martingale
from .units import daily_vol

__all__ = [
    "OptionQuote",
    "CalibResult",
    "QuoteError",
    "QuoteLoadResult",
    "load_quotes",
    "y0_from_vol_index",
    "calibrate_risk_aversion",
    "reprice_quotes",
]

LAMBDA_BOUND = 1.0
MAX_ITER = 500
SIMPLEX_TOL = 1e-9


@dataclass(frozen=True)
class OptionQuote:
    """One observed call quote: strike, maturity (days) and bid/ask/mid."""

    strike: float
    maturity: float
    bid: float
    ask: float
    mid: float

    def __post_init__(self):
        if not (self.maturity > 0):
            raise ValueError(f"maturity must be positive, got {self.maturity}")
        if not (0 < self.bid <= self.mid <= self.ask):
            raise ValueError(
                f"prices must satisfy 0 < bid <= mid <= ask, got "
                f"bid={self.bid} mid={self.mid} ask={self.ask}")


@dataclass(frozen=True)
class CalibResult:
    """Fitted risk-aversion pair with fit diagnostics."""

    lambda0: float
    lambda1: float
    rmse: float
    n_quotes: int
    converged: bool
    iterations: int


class QuoteError(ValueError):
    """Quote file cannot be used; carries per-row (line, reason) details."""

    def __init__(self, message, rows=()):
        super().__init__(message)
        self.rows = tuple(rows)


@dataclass(frozen=True)
class QuoteLoadResult:
    """Quotes that parsed cleanly plus (line_number, reason) rejects."""

    quotes: tuple
    rejects: tuple

    def summary(self) -> str:
        lines = [f"{len(self.quotes)} quotes loaded, {len(self.rejects)} rows rejected"]
        lines += [f"  line {ln}: {reason}" for ln, reason in self.rejects]
        return "\n".join(lines)


def load_quotes(path) -> QuoteLoadResult:
    """Read an option-chain CSV, validating row by row.

    Malformed rows (missing fields, non-numeric, non-positive prices,
    crossed markets) are rejected individually with their line numbers;
    a missing or unusable header raises QuoteError outright.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip().lower() for h in next(reader)]
        except StopIteration:
            raise QuoteError(f"{path}: empty file") from None
        if header[:2] != ["strike", "maturity_days"]:
            raise QuoteError(f"{path}: header must start with strike,maturity_days")
        if header[2:] == ["bid", "ask"]:
            mid_only = False
        elif header[2:] == ["mid"]:
            mid_only = True
        else:
            raise QuoteError(
                f"{path}: columns after maturity_days must be bid,ask or mid")

        quotes, rejects = [], []
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                vals = [float(c) for c in row]
            except ValueError:
                rejects.append((line_no, "non-numeric field"))
                continue
            if len(vals) != len(header):
                rejects.append((line_no, f"expected {len(header)} fields, got {len(vals)}"))
                continue
            strike, mat = vals[0], vals[1]
            if mid_only:
                bid = ask = mid = vals[2]
            else:
                bid, ask = vals[2], vals[3]
                mid = 0.5 * (bid + ask)
            if strike <= 0:
                rejects.append((line_no, "non-positive strike"))
                continue
            if mat <= 0:
                rejects.append((line_no, "non-positive maturity"))
                continue
            if bid <= 0:
                rejects.append((line_no, "non-positive price"))
                continue
            if bid > ask:
                rejects.append((line_no, "crossed"))
                continue
            quotes.append(OptionQuote(strike=strike, maturity=mat,
                                      bid=bid, ask=ask, mid=mid))
    return QuoteLoadResult(quotes=tuple(quotes), rejects=tuple(rejects))


def write_quotes(quotes: Sequence[OptionQuote], path) -> None:
    """Write quotes back out in the bid/ask schema (round-trips load_quotes).

    Full shortest-repr float precision, so read-back is value-identical.
    """
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["strike", "maturity_days", "bid", "ask"])
        for q in quotes:
            writer.writerow([repr(float(q.strike)), repr(float(q.maturity)),
                             repr(float(q.bid)), repr(float(q.ask))])


def y0_from_vol_index(sigma0_annual: float, m: float) -> float:
    """Initial log-volatility from an annualized vol index: ln(sigma0_daily/m)."""
    if sigma0_annual <= 0:
        raise ValueError(f"sigma0 must be positive, got {sigma0_annual}")
    if m <= 0:
        raise ValueError(f"m must be positive, got {m}")
    return math.log(daily_vol(sigma0_annual) / m)


def _chain_price(lambda0: float, lambda1: float, quotes, p: ModelParams,
                 spot: float, r: float, y0: float) -> np.ndarray:
    mp = to_martingale(p, RiskAversion(lambda0, lambda1), y0)
    out = np.empty(len(quotes))
    for i, q in enumerate(quotes):
        spec = OptionSpec(spot=spot, strike=q.strike, maturity=q.maturity, rate=r)
        coeffs = expansion_coeffs(mp, q.maturity, r)
        out[i] = expou_call(spec, mp, coeffs).total
    return out


def calibrate_risk_aversion(quotes: Sequence[OptionQuote], p: ModelParams,
                            spot: float, r: float, y0: float,
                            weight_by_spread: bool = False) -> CalibResult:
    """Least-squares fit of (lambda0, lambda1) to quoted mid prices.

    Nelder-Mead from (0, 0) with |lambda| <= 1 bounds and a penalty
    keeping alpha + k*lambda1 positive; converges when the simplex
    shrinks below 1e-9 or after 500 iterations.  With
    ``weight_by_spread`` the squared errors are divided by the quoted
    bid-ask widths (half-spread floor of one price cent).

    The reported rmse is the unweighted root-mean-square repricing error
    recomputed at the returned parameters.
    """
    if len(quotes) < 2:
        raise ValueError("underdetermined: need at least 2 quotes for 2 parameters")
    if weight_by_spread:
        w = 1.0 / np.maximum([q.ask - q.bid for q in quotes], 1e-2)
    else:
        w = np.ones(len(quotes))
    mids = np.array([q.mid for q in quotes])

    def objective(x):
        l0, l1 = x
        if p.alpha + p.k * l1 <= 0:
            return 1e12 * (1.0 + abs(p.alpha + p.k * l1))
        resid = _chain_price(l0, l1, quotes, p, spot, r, y0) - mids
        return float(np.sum(w * resid * resid))

    res = minimize(objective, x0=np.zeros(2), method="Nelder-Mead",
                   bounds=[(-LAMBDA_BOUND, LAMBDA_BOUND)] * 2,
                   options={"xatol": SIMPLEX_TOL, "fatol": 1e-18,
                            "maxiter": MAX_ITER, "maxfev": 4 * MAX_ITER})
    l0, l1 = float(res.x[0]), float(res.x[1])
    resid = _chain_price(l0, l1, quotes, p, spot, r, y0) - mids
    rmse = float(np.sqrt(np.mean(resid * resid)))
    return CalibResult(lambda0=l0, lambda1=l1, rmse=rmse, n_quotes=len(quotes),
                       converged=bool(res.success), iterations=int(res.nit))


def reprice_quotes(result: CalibResult, quotes: Sequence[OptionQuote],
                   p: ModelParams, spot: float, r: float, y0: float):
    """Per-quote model prices and residuals at the fitted parameters."""
    model = _chain_price(result.lambda0, result.lambda1, quotes, p, spot, r, y0)
    return [(q.strike, q.mid, float(mv), float(mv - q.mid))
            for q, mv in zip(quotes, model)]
