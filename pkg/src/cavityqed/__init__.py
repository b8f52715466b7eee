"""Photon statistics of a driven atom-cavity system.

Two independent routes to g2(tau): the master equation with quantum
regression (:mod:`cavityqed.liouville`) and quantum-trajectory photon
counting (:mod:`cavityqed.trajectory`). :mod:`cavityqed.analysis` classifies
the resulting series and scans for the drive or dephasing at which each
nonclassical effect disappears.
"""

from importlib.metadata import PackageNotFoundError, version

from .analysis import NonclassicalReport, classify, threshold_scan
from .estimators import ConditionedCorrelator, RegressionCorrelator, TrajectoryCorrelator
from .exceptions import (
    ConfigError,
    DegenerateSteadyStateError,
    EffectAbsentError,
    InsufficientDataError,
    NumericalError,
    TruncationCapError,
    UndefinedCorrelationError,
)
from .hilbert import BasisSpec, build_basis
from .liouville import (
    build_liouvillian,
    conditioned_photon_evolution,
    find_E_sat,
    g2_regression,
    steady_state,
)
from .params import SystemParams
from .series import CorrelationSeries, read_table, write_table
from .trajectory import DetectionRecord, TrajectoryConfig, g2_from_records, run_trajectories

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # pragma: no cover
    __version__ = "0.0.0"

__all__ = [
    "BasisSpec",
    "ConditionedCorrelator",
    "ConfigError",
    "CorrelationSeries",
    "DegenerateSteadyStateError",
    "DetectionRecord",
    "EffectAbsentError",
    "InsufficientDataError",
    "NonclassicalReport",
    "NumericalError",
    "RegressionCorrelator",
    "SystemParams",
    "TrajectoryConfig",
    "TrajectoryCorrelator",
    "TruncationCapError",
    "UndefinedCorrelationError",
    "build_basis",
    "build_liouvillian",
    "classify",
    "conditioned_photon_evolution",
    "find_E_sat",
    "g2_from_records",
    "g2_regression",
    "read_table",
    "run_trajectories",
    "steady_state",
    "threshold_scan",
    "write_table",
]
