"""Seeded Monte Carlo oracle for the expOU model under both measures.

Scheme: the log-volatility is advanced by its exact OU transition
(mean-reversion factor e^{-alpha dt}, innovation variance
(k^2/2alpha)(1 - e^{-2 alpha dt})), the log-price by Euler with the
same-step correlated Gaussian pair xi2 = rho xi1 + sqrt(1-rho^2) xi_perp.

Reproducibility: paths are partitioned into fixed blocks of ``BLOCK``
paths; block ``b`` consumes an independent Philox substream keyed by
(seed, b), with one standard-normal vector per noise leg per step
(numpy's ziggurat standard_normal).  Estimates are therefore bit-exact
for identical SimConfig regardless of how blocks would be scheduled, and
accumulators merge associatively.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from scipy.stats import chi2 as _chi2

from .model import ModelParams
from .risk_neutral import MartingaleParams
from .pricing import OptionSpec

__all__ = [
    "SimConfig",
    "McEstimate",
    "PathEnsemble",
    "McHistogram",
    "simulate_paths",
    "export_paths",
    "mc_call_price",
    "mc_return_density",
    "return_panel",
    "mc_leverage",
    "mc_sq_autocorr",
    "chi_square_vs_density",
]

BLOCK = 4096
#: simulate_paths refuses ensembles beyond this many stored samples per
#: component; the streaming estimators below have no such limit.
PATH_BUDGET = 25_000_000

_PHYSICAL, _MARTINGALE = "physical", "martingale"


@dataclass(frozen=True)
class SimConfig:
    """Simulation layout: n_paths x n_steps at step dt (days), fixed seed."""

    n_paths: int
    n_steps: int
    dt: float
    seed: int
    measure: str = _MARTINGALE
    antithetic: bool = False

    def __post_init__(self):
        if self.n_paths < 1 or self.n_steps < 1:
            raise ValueError("n_paths and n_steps must be >= 1")
        if not (self.dt > 0):
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.measure not in (_PHYSICAL, _MARTINGALE):
            raise ValueError(f"measure must be 'physical' or 'martingale', got {self.measure!r}")
        if self.antithetic and self.n_paths % 2:
            raise ValueError("antithetic mode requires an even n_paths")

    @property
    def horizon(self) -> float:
        """Total simulated time in days, n_steps * dt."""
        return self.n_steps * self.dt


@dataclass(frozen=True)
class McEstimate:
    """Monte Carlo estimate with its standard error."""

    value: float
    std_error: float
    n_effective: int


@dataclass(frozen=True)
class PathEnsemble:
    """Simulated paths: log-price x and log-vol state y, (n_paths, n_steps+1)."""

    x: np.ndarray
    y: np.ndarray
    times: np.ndarray

    def __post_init__(self):
        self.x.flags.writeable = False
        self.y.flags.writeable = False
        self.times.flags.writeable = False


@dataclass(frozen=True)
class McHistogram:
    """Normalized terminal-return histogram; sum(density * widths) == 1."""

    edges: np.ndarray
    counts: np.ndarray
    density: np.ndarray
    n_samples: int


def _coerce(params, cfg: SimConfig):
    """Map either parameter set onto (vol_level, reversion, k, rho)."""
    if isinstance(params, ModelParams):
        if cfg.measure != _PHYSICAL:
            raise ValueError("ModelParams paths require measure='physical'")
        return params.m, params.alpha, params.k, params.rho
    if isinstance(params, MartingaleParams):
        if cfg.measure != _MARTINGALE:
            raise ValueError("MartingaleParams paths require measure='martingale'")
        return params.m_bar, params.alpha_bar, params.k, params.rho
    raise TypeError(f"expected ModelParams or MartingaleParams, got {type(params)!r}")


def _block_sizes(n_paths: int):
    sizes = [BLOCK] * (n_paths // BLOCK)
    if n_paths % BLOCK:
        sizes.append(n_paths % BLOCK)
    return sizes


def _block_rng(seed: int, block: int) -> np.random.Generator:
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, block], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _normals(rng, size, antithetic):
    if not antithetic:
        return rng.standard_normal(size)
    half = rng.standard_normal(size // 2)
    g = np.empty(size)
    g[0::2] = half
    g[1::2] = -half
    return g


def _iter_blocks(params, cfg: SimConfig, y0: float, rate: float,
                 stationary_start: bool = False, keep_paths: bool = False,
                 keep_returns: bool = False):
    """Advance each block and yield its terminal/trajectory data.

    Yields dicts with terminal ``x``/``y`` always, full ``xs``/``ys``
    (n_block, n_steps+1) when keep_paths, and per-step simple returns
    ``rets`` (n_block, n_steps) when keep_returns.
    """
    vol0, rev, k, rho = _coerce(params, cfg)
    dt, n_steps = cfg.dt, cfg.n_steps
    decay = math.exp(-rev * dt)
    sd_ou = math.sqrt(k * k / (2.0 * rev) * -math.expm1(-2.0 * rev * dt))
    beta = math.sqrt(k * k / (2.0 * rev))
    rho_perp = math.sqrt(max(0.0, 1.0 - rho * rho))
    sdt = math.sqrt(dt)

    for b, size in enumerate(_block_sizes(cfg.n_paths)):
        rng = _block_rng(cfg.seed, b)
        if stationary_start:
            y = beta * _normals(rng, size, cfg.antithetic)
        else:
            y = np.full(size, float(y0))
        x = np.zeros(size)
        xs = ys = rets = None
        if keep_paths:
            xs = np.empty((size, n_steps + 1))
            ys = np.empty((size, n_steps + 1))
            xs[:, 0], ys[:, 0] = x, y
        if keep_returns:
            rets = np.empty((size, n_steps))
        for step in range(n_steps):
            g1 = _normals(rng, size, cfg.antithetic)
            gp = _normals(rng, size, cfg.antithetic)
            g2 = rho * g1 + rho_perp * gp
            sig = vol0 * np.exp(y)
            dx = (rate - 0.5 * sig * sig) * dt + sig * sdt * g1
            x = x + dx
            y = y * decay + sd_ou * g2
            if keep_paths:
                xs[:, step + 1], ys[:, step + 1] = x, y
            if keep_returns:
                rets[:, step] = np.expm1(dx)
        yield {"x": x, "y": y, "xs": xs, "ys": ys, "rets": rets}


def simulate_paths(params, cfg: SimConfig, y0: float, rate: float = 0.0) -> PathEnsemble:
    """Simulate and store the full path ensemble.

    ``params`` is ModelParams (physical measure; ``y0`` is Y(0)) or
    MartingaleParams (martingale measure; ``y0`` is Z(0)).  ``rate`` is
    the log-price drift's risk-free rate (martingale pricing); physical
    diagnostics demean returns, so their drift convention is immaterial.

    Raises ValueError when n_paths*(n_steps+1) exceeds PATH_BUDGET; the
    streaming estimators (mc_call_price etc.) handle large runs instead.
    """
    if cfg.n_paths * (cfg.n_steps + 1) > PATH_BUDGET:
        raise ValueError(
            f"ensemble of {cfg.n_paths}x{cfg.n_steps + 1} samples exceeds the "
            f"storage budget ({PATH_BUDGET}); use the streaming estimators")
    xs = np.empty((cfg.n_paths, cfg.n_steps + 1))
    ys = np.empty((cfg.n_paths, cfg.n_steps + 1))
    lo = 0
    for blk in _iter_blocks(params, cfg, y0, rate, keep_paths=True):
        hi = lo + blk["xs"].shape[0]
        xs[lo:hi] = blk["xs"]
        ys[lo:hi] = blk["ys"]
        lo = hi
    times = np.arange(cfg.n_steps + 1) * cfg.dt
    return PathEnsemble(x=xs, y=ys, times=times)


def export_paths(ens: PathEnsemble, fileobj) -> None:
    """Write an ensemble as CSV rows ``path,step,t_days,x,y``."""
    fileobj.write("path,step,t_days,x,y\n")
    n_paths, n_nodes = ens.x.shape
    for p in range(n_paths):
        for s in range(n_nodes):
            fileobj.write(f"{p},{s},{ens.times[s]:.12g},"
                          f"{ens.x[p, s]:.12g},{ens.y[p, s]:.12g}\n")


def _pairwise(values: np.ndarray, antithetic: bool) -> np.ndarray:
    """Collapse antithetic pairs to their means (the iid samples)."""
    if not antithetic:
        return values
    return 0.5 * (values[0::2] + values[1::2])


def mc_call_prices(mp: MartingaleParams, cfg: SimConfig,
                   specs: Sequence[OptionSpec], z0: float) -> list[McEstimate]:
    """Discounted expected call payoffs for several contracts on one ensemble.

    All specs must share the maturity (= config horizon) and rate; strikes
    and spots may differ.  Sharing paths across strikes keeps the price
    curve internally consistent (common random numbers).
    """
    if cfg.measure != _MARTINGALE:
        raise ValueError("mc_call_prices requires measure='martingale'")
    if not specs:
        return []
    t, r = specs[0].maturity, specs[0].rate
    if any(s.maturity != t or s.rate != r for s in specs):
        raise ValueError("all specs must share one maturity and rate")
    if abs(cfg.horizon - t) > 1e-9 * max(1.0, t):
        raise ValueError(f"config horizon {cfg.horizon:g} != option maturity {t:g}")
    disc = math.exp(-r * t)
    total = np.zeros(len(specs))
    total_sq = np.zeros(len(specs))
    n = 0
    for blk in _iter_blocks(mp, cfg, z0, r):
        growth = np.exp(blk["x"])
        m = None
        for i, spec in enumerate(specs):
            pay = disc * np.maximum(spec.spot * growth - spec.strike, 0.0)
            pay = _pairwise(pay, cfg.antithetic)
            total[i] += pay.sum()
            total_sq[i] += (pay * pay).sum()
            m = pay.size
        n += m
    out = []
    for i in range(len(specs)):
        mean = total[i] / n
        var = max(0.0, (total_sq[i] - n * mean * mean) / (n - 1)) if n > 1 else 0.0
        out.append(McEstimate(value=float(mean), std_error=math.sqrt(var / n),
                              n_effective=n))
    return out


def mc_call_price(mp: MartingaleParams, cfg: SimConfig, spec: OptionSpec,
                  z0: float) -> McEstimate:
    """Discounted expected call payoff under the martingale measure.

    The config horizon must equal the option maturity.  With antithetic
    variates the mirrored pair means are the independent samples, so
    n_effective is n_paths/2.
    """
    return mc_call_prices(mp, cfg, [spec], z0)[0]


def mc_return_density(mp: MartingaleParams, cfg: SimConfig, z0: float,
                      bins: Union[int, np.ndarray], rate: float = 0.0) -> McHistogram:
    """Normalized histogram of the terminal log-return X(horizon).

    ``bins`` is either explicit edges or a count, in which case the range
    spans mu +- 6 sqrt(m_bar^2 T) around the expansion's Gaussian center.
    """
    if cfg.measure != _MARTINGALE:
        raise ValueError("mc_return_density requires measure='martingale'")
    t = cfg.horizon
    if isinstance(bins, (int, np.integer)):
        mu = rate * t - 0.5 * mp.m_bar**2 * t
        half = 6.0 * mp.m_bar * math.sqrt(t)
        edges = np.linspace(mu - half, mu + half, bins + 1)
    else:
        edges = np.asarray(bins, dtype=float)
    counts = np.zeros(edges.size - 1, dtype=np.int64)
    n = 0
    for blk in _iter_blocks(mp, cfg, z0, rate):
        counts += np.histogram(blk["x"], bins=edges)[0]
        n += blk["x"].size
    widths = np.diff(edges)
    in_range = counts.sum()
    density = counts / (in_range * widths) if in_range else np.zeros_like(widths)
    return McHistogram(edges=edges, counts=counts, density=density, n_samples=n)


def chi_square_vs_density(hist: McHistogram, pdf, n_total: Optional[int] = None,
                          min_expected: float = 5.0):
    """Pearson chi-square of histogram counts against a density callable.

    Bin probabilities come from Simpson's rule on (lo, mid, hi); bins with
    expected count below ``min_expected`` are pooled into their neighbor.
    Returns (statistic, p_value, dof).
    """
    n = hist.counts.sum() if n_total is None else n_total
    lo, hi = hist.edges[:-1], hist.edges[1:]
    mid = 0.5 * (lo + hi)
    probs = (hi - lo) / 6.0 * (pdf(lo) + 4.0 * pdf(mid) + pdf(hi))
    expected = n * probs
    # pool small-expectation bins left to right
    obs_p, exp_p = [], []
    acc_o = acc_e = 0.0
    for o, e in zip(hist.counts, expected):
        acc_o += o
        acc_e += e
        if acc_e >= min_expected:
            obs_p.append(acc_o)
            exp_p.append(acc_e)
            acc_o = acc_e = 0.0
    if not exp_p:
        raise ValueError("no bins with sufficient expected counts to test")
    if acc_e > 0:
        obs_p[-1] += acc_o
        exp_p[-1] += acc_e
    obs = np.array(obs_p)
    exp = np.array(exp_p)
    stat = float(np.sum((obs - exp) ** 2 / exp))
    dof = max(1, obs.size - 1)
    return stat, float(_chi2.sf(stat, dof)), dof


def _lag_steps(tau_grid: Sequence[float], cfg: SimConfig):
    lags = []
    for tau in tau_grid:
        steps = tau / cfg.dt
        rounded = round(steps)
        if abs(steps - rounded) > 1e-9:
            raise ValueError(f"lag {tau} is not a multiple of dt={cfg.dt}")
        if abs(rounded) >= cfg.n_steps:
            raise ValueError(f"lag {tau} reaches beyond the simulated horizon")
        lags.append(int(rounded))
    return lags


def _return_panel(p: ModelParams, cfg: SimConfig) -> np.ndarray:
    """Stationary-start per-step simple returns, demeaned, (n_paths, n_steps)."""
    if cfg.measure != _PHYSICAL:
        raise ValueError("physical-measure statistics require measure='physical'")
    panel = np.empty((cfg.n_paths, cfg.n_steps))
    lo = 0
    for blk in _iter_blocks(p, cfg, 0.0, 0.0, stationary_start=True,
                            keep_returns=True):
        hi = lo + blk["rets"].shape[0]
        panel[lo:hi] = blk["rets"]
        lo = hi
    return panel - panel.mean()


def _bootstrap_se(stat_from_sums, per_path: Sequence[np.ndarray], seed: int,
                  n_boot: int = 200) -> float:
    """Path-bootstrap SE of a statistic built from per-path sums.

    ``per_path`` holds one array of per-path partial sums per moment;
    ``stat_from_sums`` maps the resampled totals to the statistic.
    """
    rng = np.random.default_rng((seed ^ 0x5DEECE66D) & 0xFFFFFFFFFFFFFFFF)
    n = per_path[0].size
    vals = np.empty(n_boot)
    for b in range(n_boot):
        idx = rng.integers(0, n, size=n)
        vals[b] = stat_from_sums([a[idx].sum() for a in per_path])
    return float(vals.std(ddof=1))


def _leverage_sums(panel: np.ndarray, lag: int):
    """Per-path sums for the leverage ratio at a signed lag."""
    if lag >= 0:
        a, b = panel[:, : panel.shape[1] - lag], panel[:, lag:]
    else:
        a, b = panel[:, -lag:], panel[:, : panel.shape[1] + lag]
    num = (a * b * b).sum(axis=1)
    den = (panel * panel).sum(axis=1)
    return num, den, a.shape[1], panel.shape[1]


def _autocorr_sums(panel: np.ndarray, lag: int):
    """Per-path sums for the squared-return Pearson correlation at a lag."""
    sq = panel * panel
    a, b = sq[:, : sq.shape[1] - lag], sq[:, lag:]
    s_ab = (a * b).sum(axis=1)
    s_m2 = sq.sum(axis=1)
    s_m4 = (sq * sq).sum(axis=1)
    return s_ab, s_m2, s_m4, a.shape[1], sq.shape[1]


def return_panel(p: ModelParams, cfg: SimConfig) -> np.ndarray:
    """Demeaned one-step simple returns of stationary paths.

    Deterministic given (p, cfg); precompute it to share one simulation
    between mc_leverage and mc_sq_autocorr.
    """
    return _return_panel(p, cfg)


def mc_leverage(p: ModelParams, cfg: SimConfig, tau_grid: Sequence[float],
                panel: Optional[np.ndarray] = None):
    """Leverage-correlation estimates over a lag grid (days).

    Panel estimator on demeaned one-step simple returns of stationary
    paths: L_hat(tau) = mean[dR(t) dR(t+tau)^2] / mean[dR^2]^2 pooled over
    all anchors and paths, with path-bootstrap standard errors.  Negative
    lags are allowed (they estimate the anticausal side, which vanishes).
    ``panel`` accepts a precomputed return_panel(p, cfg).
    """
    lags = _lag_steps(tau_grid, cfg)
    if panel is None:
        panel = _return_panel(p, cfg)
    n_paths = panel.shape[0]
    out = []
    for lag in lags:
        num, den, n_pairs, n_all = _leverage_sums(panel, lag)

        def stat(sums, n_pairs=n_pairs, n_all=n_all):
            s_num, s_den = sums
            return float((s_num / (n_paths * n_pairs))
                         / (s_den / (n_paths * n_all)) ** 2)

        val = stat([num.sum(), den.sum()])
        se = _bootstrap_se(stat, [num, den], cfg.seed + lag)
        out.append(McEstimate(value=val, std_error=se,
                              n_effective=n_paths * n_pairs))
    return out


def mc_sq_autocorr(p: ModelParams, cfg: SimConfig, tau_grid: Sequence[float],
                   panel: Optional[np.ndarray] = None):
    """Squared-return autocorrelation estimates over a lag grid (days).

    Pooled Pearson correlation of (dR(t)^2, dR(t+tau)^2) over anchors and
    stationary paths, with path-bootstrap standard errors.  ``panel``
    accepts a precomputed return_panel(p, cfg).
    """
    if any(t < 0 for t in tau_grid):
        raise ValueError("autocorrelation lags must be nonnegative")
    lags = _lag_steps(tau_grid, cfg)
    if panel is None:
        panel = _return_panel(p, cfg)
    n_paths = panel.shape[0]
    out = []
    for lag in lags:
        s_ab, s_m2, s_m4, n_pairs, n_all = _autocorr_sums(panel, lag)

        def stat(sums, n_pairs=n_pairs, n_all=n_all):
            t_ab, t_m2, t_m4 = sums
            m2 = t_m2 / (n_paths * n_all)
            m4 = t_m4 / (n_paths * n_all)
            cov = t_ab / (n_paths * n_pairs) - m2 * m2
            return float(cov / (m4 - m2 * m2))

        val = stat([s_ab.sum(), s_m2.sum(), s_m4.sum()])
        se = _bootstrap_se(stat, [s_ab, s_m2, s_m4], cfg.seed - lag)
        out.append(McEstimate(value=val, std_error=se,
                              n_effective=n_paths * n_pairs))
    return out
