"""Multivariate variance-based sensitivity analysis of PMSM efficiency maps and profiles."""

import numba as _numba

# the TBB layer shipped with some distributions is too old; prefer OpenMP
_numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

from .ecm import (  # noqa: E402
    EcmParameters,
    OperatingPoint,
    OperatingSolution,
    SolverError,
    dq_voltages,
    losses,
    solve_batch,
    solve_operating_point,
    torque,
    torque_envelope,
)
from .errors import ConfigurationError, ContractError, DomainError, ParseError  # noqa: E402
from .gsa_mc import SensitivityResult, mc_generalized, mc_sobol  # noqa: E402
from .params import (  # noqa: E402
    ParameterSpace,
    PickFreezeDesign,
    RandomParameter,
    SampleMatrix,
    destandardize,
    pick_freeze,
    sample,
    standardize,
)
from .pce import (  # noqa: E402
    PceModel,
    basis_eval,
    fit_pce,
    pce_generalized,
    pce_moments,
    pce_sobol,
    total_degree_multi_indices,
)
from .pipeline import UQSettings, run_gsa, run_mc_gsa, run_pce, run_uq  # noqa: E402
from .qoi import (  # noqa: E402
    CostReport,
    EcmModel,
    MomentField,
    OperatingSet,
    QoiMatrix,
    VehicleParameters,
    build_grid,
    evaluate,
    evaluate_qoi,
    load_cycle,
    moments,
)
from .reduction import ReductionReport, reduce_and_compare, select_noninfluential  # noqa: E402

__version__ = "0.1.0"


def nominal_space(halfwidth: float = 0.05) -> ParameterSpace:
    """The four circuit elements, uniform within +/- ``halfwidth`` of nominal."""
    e = EcmParameters()
    return ParameterSpace(
        RandomParameter.relative(name, e.get(name), halfwidth) for name in ("R_s", "lambda", "L_d", "L_q")
    )
