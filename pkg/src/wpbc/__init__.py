"""Simulation and max-min design toolkit for wirelessly powered backscatter
multiuser networks: channel estimation, closed-form energy/rate bounds, an
independent Monte Carlo oracle, and a figure-reproduction CLI.
"""

__version__ = "0.1.0"

from .analytics import (ce_penalty, closed_form_report, exp_integral_e1,
                        gain_retention_bounds, incident_power_bounds,
                        sinr_lower_bounds, sinr_mrc, sinr_zf)
from .channel import ChannelRealization, backscatter_matrix, draw_channels
from .estimation import (EstimateSet, PilotDesign, build_pilots, estimate_ls,
                         estimate_mmse, forward_posterior, simulate_ce_rx)
from .montecarlo import GapReport, McEstimate, gap_sweep, mc_incident_power, mc_rate
from .optimizer import (DesignVariables, OptimizationResult, SolverParams,
                        is_feasible, solve_maxmin_energy, solve_maxmin_perfect,
                        solve_maxmin_rate)
from .scenario import (SystemConfig, TagLinkStats, carrier_power, dbm_to_watts,
                       load_scenario, path_loss)
