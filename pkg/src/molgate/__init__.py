"""molgate: driving-field synthesis for quantum gates on molecular level
systems by iterative optimal control.

The package finds a real control field that steers the evolution
operator of a small level system into a prescribed unitary gate, which
may be defined only on a register subspace embedded in a larger
manifold. Hot propagation kernels run in a compiled extension when
available, with a pure-NumPy fallback selected at import.
"""
__version__ = "0.1.0"

from .analysis import (
    ConvergenceSummary,
    Spectrum,
    band_energy_fraction,
    convergence_summary,
    field_spectrum,
)
from .backend import backend_name, have_compiled
from .dynamics import (
    ControlField,
    Trajectory,
    default_n_steps,
    propagate_backward,
    propagate_forward,
)
from .errors import (
    ConfigError,
    ModelError,
    MolgateError,
    PropagationError,
    StructureError,
)
from .models import (
    GateTarget,
    ModelSystem,
    build_custom_model,
    build_hadamard_model,
    build_qft_model,
    embed_register_gate,
    guess_carrier_frequency,
    load_model_file,
    make_gate_target,
)
from .objective import (
    ObjectiveValue,
    evaluate_objective,
    leakage,
    tau_full,
    tau_restricted,
)
from .operators import expm_hermitian_step, haar_unitary, project_trace
from .optimizer import (
    IterationRecord,
    OptimizationReport,
    OptimizerConfig,
    calibrate_lambda,
    field_correction,
    field_gradient,
    guess_field,
    krotov_iteration,
    optimize,
)
from .shapes import Shape

__all__ = [
    "ConfigError",
    "ControlField",
    "ConvergenceSummary",
    "GateTarget",
    "IterationRecord",
    "ModelError",
    "ModelSystem",
    "MolgateError",
    "ObjectiveValue",
    "OptimizationReport",
    "OptimizerConfig",
    "PropagationError",
    "Shape",
    "Spectrum",
    "StructureError",
    "Trajectory",
    "backend_name",
    "band_energy_fraction",
    "build_custom_model",
    "build_hadamard_model",
    "build_qft_model",
    "calibrate_lambda",
    "convergence_summary",
    "default_n_steps",
    "embed_register_gate",
    "evaluate_objective",
    "expm_hermitian_step",
    "field_correction",
    "field_gradient",
    "field_spectrum",
    "guess_carrier_frequency",
    "guess_field",
    "haar_unitary",
    "have_compiled",
    "krotov_iteration",
    "leakage",
    "load_model_file",
    "make_gate_target",
    "optimize",
    "project_trace",
    "propagate_backward",
    "propagate_forward",
    "tau_full",
    "tau_restricted",
]
