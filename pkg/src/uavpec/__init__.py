"""Joint resource allocation for a UAV that charges and serves edge tasks of IIoT devices."""

from .channel import ChannelTable, build_channel_table
from .energymodel import Allocation, LatencyBreakdown, objective, total_latency
from .errors import (ChannelDomainError, InfeasibleError, SchemaVersionError, SizeGuardError,
                     UavPecError, ValidationError)
from .gjra import Scheme, SolveReport, solve, solve_ea, solve_gjra, solve_np, solve_rs
from .model import (Device, HoverPosition, PhysicsConfig, Scenario, SolverConfig, TaskRanges, UavBudget,
                    generate_scenario, load_scenario, save_scenario)

__version__ = "0.1.0"
