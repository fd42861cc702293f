"""QoS-driven cell association and resource-block distribution in
multi-tier heterogeneous cellular networks.

The library covers the full pipeline: deterministic scenario generation,
channel/outage modelling, QoS translation into per-link RB minima and
association scores, the distributed dual-decomposition association
algorithm with admission control, the Max-SINR / LP / LP-rounding
baselines, second-phase RB distribution, and the evaluation metrics.
"""

__version__ = "0.1.0"

from .association import (Association, MaxSinrResult, UserRequest, associate_distributed,
                          associate_max_sinr, admission_project, build_request,
                          mu_update, qualification_index)
from .channel import (LinkTable, build_link_table, instantaneous_rate_sample,
                      long_term_sinr, mean_gain, outage_probability)
from .lp import LpSolution, round_lp, solve_lp
from .metrics import (EvalReport, RateCdf, brute_force_assignment, global_outage,
                      monte_carlo_outage, rate_cdf, rate_gain)
from .model import (BaseStation, OutageQos, PhysicalConstants, RateQos, Scenario, Tier,
                    User, ValidationError, dbm_to_watts, watts_to_dbm)
from .qos import (LOG_UTILITY, QosTable, UtilityBundle, build_qos_table, min_rbs_outage,
                  min_rbs_rate)
from .rballoc import RbAllocation, distribute_leftover, distribute_outage, distribute_rate
from .runner import RunResult, evaluate
from .scenario import DeploymentConfig, generate, load, preset, save, scenario_hash
