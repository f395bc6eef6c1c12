"""Brownian motion on compact matrix Lie groups, its left/right Ito maps,
quasi-invariance densities, and the cylinder-function calculus used to
verify the equivalence of the Brownian-measure and energy representations.
"""

from .liegroup import (
    AlgebraVector,
    CutLocusError,
    GroupElement,
    GroupError,
    LieGroupSpec,
    make_group,
)
from .paths import (
    AlgebraPath,
    CameronMartinPath,
    GroupPath,
    PathError,
    TimeGrid,
    cm_from_steps,
    cm_scaled,
)
from .flow import (
    NoiseStream,
    develop_left,
    develop_right,
    ito_left,
    ito_right,
    rotate_path,
    sample_bm,
    sample_bm_batch,
)
from .girsanov import (
    LogDensity,
    half_density_inner_closed,
    log_density_left,
    log_density_right,
    tau,
    tau_pair,
    trace_defect,
)
from .cylinder import (
    CylinderExponential,
    HermiteTarget,
    brownian_rep_pullback,
    energy_rep,
    fw_inverse,
    fw_transform,
    gauss_regular_rep,
)
from .heatkernel import HeatKernelModel, make_heat_kernel
from .mc import EstimatorState, bias_ladder, run_estimator
from .report import VerificationReport
from .verify import run_selected, select_identities

__version__ = "0.1.0"
