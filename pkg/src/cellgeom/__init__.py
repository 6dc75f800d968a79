"""Cellular downlink performance toolkit.

Closed-form success-probability and rate expressions for rateless
transmission at constant power and fixed-rate transmission under four
power-adaptation policies, validated by a Monte Carlo stochastic-geometry
simulator on a torus.
"""

from .params import (
    AnalyticalParams,
    CcdfCurve,
    MetricsResult,
    PowerPolicy,
    SirThreshold,
)
from .specialfun import (
    QuadratureError,
    QuadratureSpec,
    exp_integral_e1,
    h_interference,
    hyp2f1_coverage,
    hyp2f1_mu_kernel,
    integrate_adaptive,
)
from .rateless import (
    ccdf_const_interference,
    ccdf_curve_ci,
    ccdf_curve_thinning_async,
    ccdf_curve_thinning_sync,
    ccdf_thinning_bound_async,
    ccdf_thinning_bound_sync,
    eta_moment_async,
    interferer_ccdf,
    mu_mean_packet_time,
    omega_async,
    omega_sync,
    ps_rate_rateless_ci,
    ps_rate_thinning_async,
    ps_rate_thinning_sync,
    ps_rateless_ci,
    rate_from_ccdf,
    ThinningModel,
    thinning_model,
)
from .fixedrate import (
    fixed_rate_metrics,
    ps_fading_tci,
    ps_fading_threshold,
    ps_fixed_rate,
    ps_fpc,
    ps_pathloss_threshold,
    transmission_probability,
)
from .simulator import (
    DegenerateCellError,
    NetworkRealization,
    SimConfig,
    TrialOutcome,
    aggregate,
    run_trials,
    sample_network,
    simulate_fixedrate,
    simulate_rateless_async,
    simulate_rateless_ci,
    simulate_rateless_tvi,
)

__version__ = "0.1.0"
