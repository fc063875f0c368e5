"""Low-depth quantum state preparation compiler with spacetime accounting."""

__version__ = "0.1.0"

from .amplitudes import (
    AngleSet,
    AngleTree,
    CSPAngleSet,
    PartitionNorms,
    TargetState,
    build_angle_tree,
    csp_angles,
    make_target,
    partition_norms,
    sp_angles,
    update_leaf,
)
from .circuit_ir import (
    Circuit,
    Gate,
    GateSetModel,
    QubitId,
    ResourceReport,
    approx_model,
    expand,
    gate,
    spacetime_allocation,
)
from .protocols import ProtocolConfig, choose_m, csp_circuit, reflection, sp_circuit, spcsp
from .sim import SimReport, SimState, flag_oracle, loadf_oracle, run, spf_oracle

__all__ = [
    "AngleSet", "AngleTree", "CSPAngleSet", "PartitionNorms", "TargetState",
    "build_angle_tree", "csp_angles", "make_target", "partition_norms",
    "sp_angles", "update_leaf",
    "Circuit", "Gate", "GateSetModel", "QubitId", "ResourceReport",
    "approx_model", "expand", "gate", "spacetime_allocation",
    "ProtocolConfig", "choose_m", "csp_circuit", "reflection", "sp_circuit", "spcsp",
    "SimReport", "SimState", "flag_oracle", "loadf_oracle", "run", "spf_oracle",
]
