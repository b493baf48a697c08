"""hillgrowth: Growth Rates for Random Hill's Equations.

Computes top Lyapunov exponents of products of the random 2x2 cycle maps
generated by Hill's equation with forcing that changes every cycle: an exact
recursion, perturbative and heuristic approximations, elliptical-rotation
theory for stable cycles, and a direct matrix-product estimator that checks
all of them.
"""

from importlib.metadata import version

__version__ = version("hillgrowth")

from .approx import MomentSummary, delta_gamma_near_unity, gamma_approx1, gamma_approx2, gamma_small_phi
from .config import Experiment, ExperimentConfig
from .elliptic import (
    EllipticParams,
    FluctuationSpec,
    compose_same_L,
    elliptic_matrix,
    from_stable_cycle,
    gamma_small_eta,
    gamma_theorem4,
)
from .ensembles import DistributionKind, DistributionSpec, StreamHandle, moments, sample
from .exact import AlphaState, alpha_step, gamma_highly_unstable, gamma_lower_bound, gamma_theorem1
from .forcing import Trajectory, TriaxialHalo, extract_cycles, omega_y_squared
from .hill import (
    BarrierShape,
    HillCycleParams,
    cycle_stream,
    delta_barrier_closed_form,
    principal_solutions,
)
from .symplectic import (
    CycleMatrix,
    CycleParams,
    GrowthEstimate,
    ProductState,
    Regime,
    classify,
    decompose,
    from_principal,
    gamma_h_component,
    lyapunov_direct,
    multiply_accumulate,
)

__all__ = [
    "CycleMatrix",
    "CycleParams",
    "ProductState",
    "GrowthEstimate",
    "Regime",
    "from_principal",
    "classify",
    "decompose",
    "multiply_accumulate",
    "lyapunov_direct",
    "gamma_h_component",
    "AlphaState",
    "alpha_step",
    "gamma_theorem1",
    "gamma_highly_unstable",
    "gamma_lower_bound",
    "MomentSummary",
    "gamma_small_phi",
    "delta_gamma_near_unity",
    "gamma_approx1",
    "gamma_approx2",
    "EllipticParams",
    "FluctuationSpec",
    "elliptic_matrix",
    "compose_same_L",
    "from_stable_cycle",
    "gamma_theorem4",
    "gamma_small_eta",
    "DistributionKind",
    "DistributionSpec",
    "StreamHandle",
    "sample",
    "moments",
    "BarrierShape",
    "HillCycleParams",
    "principal_solutions",
    "delta_barrier_closed_form",
    "cycle_stream",
    "TriaxialHalo",
    "Trajectory",
    "omega_y_squared",
    "extract_cycles",
    "Experiment",
    "ExperimentConfig",
]
