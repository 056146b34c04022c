"""Convex-roof entanglement measures by optimization over pure-state decompositions."""
from .core import DensityMatrix, InvalidInputError, random_density
from .ensembles import PureEnsemble, default_cardinality, ensemble_from_stiefel, objective_h
from .euler_hurwitz import decompose, qn_minimize, reconstruct
from .lu import lu_equivalence_distance
from .measures import get_measure, measure_for_state, wootters_eof
from .optim import OptimizerConfig, Tolerances, run_with_restarts
from .ring import RingModel, thermal_state
from .stiefel_cg import cg_minimize

__all__ = [
    "DensityMatrix", "InvalidInputError", "random_density", "PureEnsemble", "default_cardinality",
    "ensemble_from_stiefel", "objective_h", "decompose", "qn_minimize", "reconstruct",
    "lu_equivalence_distance", "get_measure", "measure_for_state", "wootters_eof",
    "OptimizerConfig", "Tolerances", "run_with_restarts", "RingModel", "thermal_state",
    "cg_minimize",
]
