"""Joint communication/control downlink analysis with Monte Carlo cross-validation."""

__version__ = "0.1.0"

from .channel import Beamformer, ChannelPair
from .config import Plant, SystemConfig
from .control import LinkQuality
from .errors import (DomainError, InfeasibleTarget, QuadratureError, SolverFailure,
                     UnstableLoop)
from .montecarlo import McEstimate
from .outage import OutageSpec
from .pareto import ParetoSolverReport, TradeoffPoint
from .scenario import Scenario, load_scenario

__all__ = [
    "Beamformer", "ChannelPair", "DomainError", "InfeasibleTarget", "LinkQuality",
    "McEstimate", "OutageSpec", "ParetoSolverReport", "Plant", "QuadratureError",
    "Scenario", "SolverFailure", "SystemConfig", "TradeoffPoint", "UnstableLoop",
    "load_scenario", "__version__",
]
