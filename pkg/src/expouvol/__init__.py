"""expOU stochastic-volatility toolkit.

Physical-measure model diagnostics, the risk-neutral Hermite expansion,
closed-form European option pricing with delta, implied-volatility smile
curves, a seeded Monte Carlo oracle and risk-aversion calibration.
"""

from .model import (
    ModelParams,
    OUState,
    leverage,
    ou_conditional_moments,
    squared_return_autocorr,
    stationary_log_vol_variance,
    vol_conditional_pdf,
    vol_stationary_pdf,
)
from .risk_neutral import (
    ExpansionCoeffs,
    MartingaleParams,
    RiskAversion,
    char_fn_expanded,
    char_fn_full,
    expansion_coeffs,
    expansion_coeffs_averaged,
    hermite_poly,
    negative_mass_fraction,
    regime_warning,
    return_density,
    to_martingale,
)
from .pricing import (
    OptionSpec,
    PriceBreakdown,
    bs_call,
    call_components,
    delta,
    expou_call,
    expou_put,
    norm_cdf,
    norm_pdf,
)
from .implied import ImpliedVolError, SmilePoint, implied_vol, smile_curve
from .mc import (
    McEstimate,
    McHistogram,
    PathEnsemble,
    SimConfig,
    chi_square_vs_density,
    export_paths,
    mc_call_price,
    mc_call_prices,
    mc_leverage,
    mc_return_density,
    mc_sq_autocorr,
    return_panel,
    simulate_paths,
)
from .calibration import (
    CalibResult,
    OptionQuote,
    QuoteError,
    QuoteLoadResult,
    calibrate_risk_aversion,
    load_quotes,
    reprice_quotes,
    write_quotes,
    y0_from_vol_index,
)
from .units import TRADING_DAYS_PER_YEAR, annualize_vol, daily_rate, daily_vol

__version__ = "0.1.0"
