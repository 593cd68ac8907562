"""Numerical laboratory for deterministic rational-bubble economies."""

from .closed_form import (
    BewleySpec,
    log_olg_rule,
    solve_bewley_growth,
    solve_bewley_money,
    solve_log_olg,
    solve_wilson,
)
from .core import (
    CES,
    BubbleVerdict,
    CobbDouglas,
    CRRAPeriodUtility,
    DomainError,
    GrowthEconomy,
    PathInfeasible,
    RegimeError,
    SolverError,
    TrendedPath,
    Verdict,
    mrs_ratio,
    utility_eval,
)
from .pricing import (
    bubble_component,
    classify_firm_bubbles,
    detect_bubble,
    firm_accounting,
    fundamental_value,
    ladder_from_prices,
    ladder_from_rates,
    sandwich,
)
from .saddle import (
    DetrendedSystem,
    Regime,
    Variant,
    classify_regime,
    continuum_witnesses,
    extend_backward,
    forward_step,
    linearize,
    stable_path,
    steady_state,
    threshold_w,
)
from .stock_land import (
    TwoSectorEconomy,
    ces_eval,
    classify_two_sector,
    decompose_bubble,
    simulate_aggregate,
)

__version__ = "0.1.0"
