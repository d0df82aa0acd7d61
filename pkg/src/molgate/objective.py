"""Gate-overlap functionals, fidelity and leakage.

The complex overlap tau is the projection of the realized evolution
operator onto the target: the full-space trace Tr{O† U(T)}, or its
restriction to the register columns when the gate is defined only on a
subspace. |tau| is bounded by the dimension over which it is taken, and
the reported fidelity |tau|/N ignores the physically irrelevant global
phase. The scalar being optimized, j, does depend on the phase: it is
the real part, the imaginary part, or a linear combination of both.
"""
from dataclasses import dataclass

import numpy as np

from .errors import StructureError
from .operators import as_operator, project_trace, require_unitary


def normalize_mode(mode):
    """Canonical (a, b) weights for j = a Re[tau] + b Im[tau]."""
    if mode == "real-part":
        return (1.0, 0.0)
    if mode == "imag-part":
        return (0.0, 1.0)
    if isinstance(mode, (tuple, list)) and len(mode) == 2:
        a, b = float(mode[0]), float(mode[1])
        if a == 0.0 and b == 0.0:
            raise ValueError("combination mode weights cannot both be zero")
        return (a, b)
    raise ValueError(
        f"mode must be 'real-part', 'imag-part' or a (a, b) pair, got {mode!r}"
    )


@dataclass(frozen=True)
class ObjectiveValue:
    tau: complex
    j: float
    fidelity: float
    mode: tuple


def tau_full(o, u_final):
    """Tr{O† U(T)} over the full Hilbert space."""
    o = as_operator(o)
    u_final = as_operator(u_final)
    if o.shape != u_final.shape:
        raise StructureError(
            f"dimension mismatch: {o.shape[0]} vs {u_final.shape[0]}"
        )
    require_unitary(o, name="target")
    return project_trace(o, u_final)


def tau_restricted(target, u_final, registers):
    """Overlap restricted to the register columns.

    Sum over register basis states i of (O_R† U_R)_{ii}, with U_R the
    register block of the realized operator. Reduces to the full trace
    when the registers span the whole space.
    """
    u_final = as_operator(u_final)
    regs = list(registers)
    for r in regs:
        if not 0 <= r < u_final.shape[0]:
            raise StructureError(
                f"register index {r} out of range [0, {u_final.shape[0]})"
            )
    o_r = target.o_r
    if o_r.shape[0] != len(regs):
        raise StructureError(
            f"target is {o_r.shape[0]}x{o_r.shape[0]} but there are "
            f"{len(regs)} registers"
        )
    u_block = u_final[np.ix_(regs, regs)]
    return project_trace(o_r, u_block)


def leakage(u_final, registers):
    """Worst-case population escaping the register subspace.

    For each register column i, the in-subspace population is
    sum_{j in registers} |U_{ji}|^2; leakage is the largest deficit,
    clipped to [0, 1].
    """
    u_final = as_operator(u_final)
    require_unitary(u_final, name="evolution operator")
    regs = list(registers)
    block = u_final[np.ix_(regs, regs)]
    kept = np.sum(np.abs(block) ** 2, axis=0)
    return float(np.clip(1.0 - kept.min(), 0.0, 1.0))


def objective_from_tau(tau, n_dim, mode="real-part"):
    """Assemble the ObjectiveValue for an already-computed overlap."""
    a, b = normalize_mode(mode)
    j = a * tau.real + b * tau.imag
    fidelity = min(abs(tau) / n_dim, 1.0)
    return ObjectiveValue(tau=tau, j=float(j), fidelity=float(fidelity),
                          mode=(a, b))


def evaluate_objective(target, u_final, registers, mode="real-part"):
    """Restricted overlap, optimized scalar and fidelity in one record."""
    tau = tau_restricted(target, u_final, registers)
    return objective_from_tau(tau, len(list(registers)), mode)
