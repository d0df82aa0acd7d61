"""Time propagation of the evolution operator and the backward multiplier.

The field is sampled at step midpoints and held constant across each
step, so every step kernel is an exact matrix exponential and forward
and backward step products are exactly mutually inverse. Trajectories
store operator checkpoints on the time grid; for very long grids the
checkpoints are thinned and intermediate values are re-propagated on
demand from the nearest stored one.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from .backend import kernels
from .errors import PropagationError
from .operators import as_operator, unitarity_defect
from .shapes import Shape

#: store every grid point up to this many steps; thin beyond it
STORE_ALL_MAX_STEPS = 20_000
#: a freshly propagated evolution operator must be unitary within this
PROPAGATION_UNITARY_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class ControlField:
    """Sampled real driving field on a uniform grid.

    ``samples[k]`` is the field value at the midpoint t_k = (k + 1/2) dt
    of step k, dt = t_final / n_steps. The shape descriptor records the
    update envelope the field was built/optimized with (may be None for
    replayed fields).
    """

    t_final: float
    n_steps: int
    samples: np.ndarray
    shape: Shape = None

    def __post_init__(self):
        if self.t_final <= 0:
            raise ValueError(f"t_final must be positive, got {self.t_final}")
        if self.n_steps < 1:
            raise ValueError(f"n_steps must be >= 1, got {self.n_steps}")
        samples = np.ascontiguousarray(self.samples, dtype=float)
        if samples.shape != (self.n_steps,):
            raise ValueError(
                f"expected {self.n_steps} samples, got shape {samples.shape}"
            )
        if not np.all(np.isfinite(samples)):
            raise PropagationError("field contains non-finite samples")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "t_final", float(self.t_final))
        object.__setattr__(self, "n_steps", int(self.n_steps))

    @property
    def dt(self):
        return self.t_final / self.n_steps

    def midpoints(self):
        """Sample times t_k = (k + 1/2) dt."""
        return (np.arange(self.n_steps) + 0.5) * self.dt

    def with_samples(self, samples):
        return ControlField(self.t_final, self.n_steps, samples, self.shape)

    def max_amplitude(self):
        return float(np.abs(self.samples).max())


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Operator checkpoints along a propagation.

    ``checkpoints[j]`` is the operator at grid time ``times[j]``. When
    ``stride == 1`` every grid point is stored; otherwise checkpoints
    sit at grid indices 0, stride, 2*stride, ..., n_steps. Backward
    trajectories may additionally carry the step-midpoint operators
    (``midpoints``), which the optimizer consumes.
    """

    times: np.ndarray
    checkpoints: np.ndarray
    direction: str
    n_steps: int
    stride: int
    midpoints: np.ndarray = None

    @property
    def final(self):
        """Operator at t = T for forward runs, at t = 0 for backward runs."""
        return self.checkpoints[-1] if self.direction == "forward" else self.checkpoints[0]

    @property
    def initial(self):
        return self.checkpoints[0] if self.direction == "forward" else self.checkpoints[-1]


def auto_stride(n_steps):
    """1 (store everything) up to the storage cap, then the smallest
    thinning factor that keeps the checkpoint count within it."""
    if n_steps <= STORE_ALL_MAX_STEPS:
        return 1
    return math.ceil(n_steps / STORE_ALL_MAX_STEPS)


def default_n_steps(model, t_final):
    """Default grid: 100 steps per period of the fastest transition.

    The fastest transition frequency is the spectral spread of the free
    Hamiltonian (largest level gap, hbar = 1).
    """
    w = np.linalg.eigvalsh(model.h0)
    spread = float(w[-1] - w[0])
    if spread <= 0:
        spread = 1.0
    return max(1, math.ceil(100.0 * t_final * spread / (2.0 * math.pi)))


def _check_field(model, field):
    if not np.all(np.isfinite(field.samples)):
        raise PropagationError("field contains non-finite samples")


def propagate_forward(model, field, stride=None):
    """Solve dU/dt = -i (h0 - mu eps(t)) U from U(0) = 1.

    Returns the checkpoint trajectory; raises
    :class:`~molgate.errors.PropagationError` if the final operator
    drifts from unitarity beyond PROPAGATION_UNITARY_TOL.
    """
    _check_field(model, field)
    if stride is None:
        stride = auto_stride(field.n_steps)
    u0 = np.eye(model.dim, dtype=np.complex128)
    chk = kernels.prop_forward(model.h0, model.mu, field.samples, field.dt,
                               u0, stride)
    defect = unitarity_defect(chk[-1])
    if defect > PROPAGATION_UNITARY_TOL:
        raise PropagationError(
            f"propagation lost unitarity: defect {defect:.3e} at t = {field.t_final}"
        )
    idx = kernels.checkpoint_indices(field.n_steps, stride)
    times = np.asarray(idx, dtype=float) * field.dt
    return Trajectory(times=times, checkpoints=chk, direction="forward",
                      n_steps=field.n_steps, stride=stride)


def propagate_backward(model, field, b_terminal, stride=None,
                       with_midpoints=False):
    """Solve dB/dt = +i B (h0 - mu eps(t)) from B(T) = b_terminal down to 0.

    Each reverse step right-multiplies by the same forward step kernel,
    so Tr{B(t) U(t)} is conserved exactly for matching fields. With
    ``with_midpoints`` the step-midpoint values (grid value at the step
    end advanced half a step) are stored as well; this is only allowed
    for unthinned trajectories.
    """
    _check_field(model, field)
    b_terminal = as_operator(b_terminal)
    if b_terminal.shape[0] != model.dim:
        raise PropagationError(
            f"terminal operator dim {b_terminal.shape[0]} != model dim {model.dim}"
        )
    if stride is None:
        stride = auto_stride(field.n_steps)
    if with_midpoints and stride != 1:
        raise ValueError("midpoint storage requires stride == 1")
    chk, mid = kernels.prop_backward(model.h0, model.mu, field.samples,
                                     field.dt, b_terminal, stride,
                                     with_midpoints)
    idx = kernels.checkpoint_indices(field.n_steps, stride)
    times = np.asarray(idx, dtype=float) * field.dt
    return Trajectory(times=times, checkpoints=chk, direction="backward",
                      n_steps=field.n_steps, stride=stride, midpoints=mid)


def forward_midpoint_states(model, field):
    """Evolution operator at every step midpoint (diagnostic helper)."""
    _check_field(model, field)
    u0 = np.eye(model.dim, dtype=np.complex128)
    mid, u_final = kernels.forward_mid(model.h0, model.mu, field.samples,
                                       field.dt, u0)
    return mid, u_final
