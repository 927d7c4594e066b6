"""vortexlab: a numerical laboratory for vortex equations on flat complex tori."""

from .fields import BundleSpec, ConnectionState, HiggsSection, PairState, TripleState
from .functional import EnergyReport, ParameterSet, derive_parameters, ymh_energy
from .geometry import TorusGeometry, build_torus
from .solvers import SolveOptions, VortexSolution, solve_abelian_vortex

__version__ = "0.1.0"

__all__ = [
    "BundleSpec",
    "ConnectionState",
    "EnergyReport",
    "HiggsSection",
    "PairState",
    "ParameterSet",
    "SolveOptions",
    "TorusGeometry",
    "TripleState",
    "VortexSolution",
    "build_torus",
    "derive_parameters",
    "solve_abelian_vortex",
    "ymh_energy",
]
