"""Multi-partite output regulation for heterogeneous linear multi-agent systems."""

from .errors import (CareFailure, ConditionFailed, ConfigError, DomainError, EigenFailure, Failure,
                     Infeasible, MorpError, NotApplicable, NotStabilizable)
from .graph import SignedDigraph, SpectralReport, has_spanning_tree, h_matrix, unsigned_laplacian
from .partition import PartitionSchedule, PartitionTransform, bell, is_gauge, partition_sets, stirling2
from .plant import Exosystem, FollowerModel, MasModel, validate
from .solve import (lme_rank_feasible, mu_lower_bound, observer_matrix, solve_lme, solve_regulator,
                    stabilizing_gain, transmission_zeros_ok)
from .synth import (ControllerDesign, DesignOptions, FollowerDesign, Strategy, design, retarget,
                    theorem2_pair)
from .sim import SimConfig, SimResult, simulate
from .bench import BenchReport, run_benchmark
from .scenario import Scenario, load_scenario

__version__ = "0.1.0"
