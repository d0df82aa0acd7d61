"""Level-system models and gate targets.

A :class:`ModelSystem` is a free Hamiltonian plus a transition-dipole
operator on a small set of levels, together with the list of levels used
as the computational register. A :class:`GateTarget` is the unitary to
realize on the register block, plus the full-space terminal operator for
the backward (multiplier) propagation: the conjugate gate on the
register block and the identity on the passive levels, with zero
coupling blocks.

Two ready-made systems are provided: a two-surface 20-level model with a
Hadamard target on the two lowest ground levels, and a two-mode 16-level
model with a static mode-mode coupling in the excited surface and a
4x4 quantum-Fourier-transform target on the ground product states.
Arbitrary systems come from :func:`build_custom_model` or a JSON model
file (see README for the schema).
"""
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ModelError
from .operators import (
    as_operator,
    require_hermitian,
    require_unitary,
    unitarity_defect,
)

#: unitarity defect beyond which a user-supplied target is rejected
TARGET_UNITARY_TOL = 1e-10
#: defect above which an accepted target is polished to the nearest unitary
TARGET_POLISH_TOL = 1e-12


def _frozen_array(a, dtype=np.complex128):
    a = np.ascontiguousarray(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ModelSystem:
    """Free Hamiltonian, dipole operator and register bookkeeping."""

    h0: np.ndarray
    mu: np.ndarray
    registers: tuple
    labels: tuple = ()
    name: str = "custom"

    def __post_init__(self):
        h0 = as_operator(self.h0)
        mu = as_operator(self.mu)
        if h0.shape != mu.shape:
            raise ModelError(
                f"h0 and mu dimensions differ: {h0.shape[0]} vs {mu.shape[0]}"
            )
        require_hermitian(h0, name="h0")
        require_hermitian(mu, name="mu")
        regs = tuple(int(r) for r in self.registers)
        if len(set(regs)) != len(regs):
            raise ModelError(f"duplicate register indices: {regs}")
        if not regs:
            raise ModelError("at least one register level is required")
        for r in regs:
            if not 0 <= r < h0.shape[0]:
                raise ModelError(f"register index {r} out of range [0, {h0.shape[0]})")
        labels = tuple(self.labels) if self.labels else tuple(
            f"L{i}" for i in range(h0.shape[0])
        )
        if len(labels) != h0.shape[0]:
            raise ModelError(
                f"{len(labels)} labels for {h0.shape[0]} levels"
            )
        object.__setattr__(self, "h0", _frozen_array(h0))
        object.__setattr__(self, "mu", _frozen_array(mu))
        object.__setattr__(self, "registers", regs)
        object.__setattr__(self, "labels", labels)

    @property
    def dim(self):
        return self.h0.shape[0]

    @property
    def n_registers(self):
        return len(self.registers)

    def energies(self):
        """Diagonal of h0 (the level energies, hbar = 1)."""
        return self.h0.diagonal().real.copy()


@dataclass(frozen=True, eq=False)
class GateTarget:
    """Register-block target unitary and the implied terminal multiplier."""

    o_r: np.ndarray
    b_terminal: np.ndarray

    def __post_init__(self):
        o_r = as_operator(self.o_r)
        b = as_operator(self.b_terminal)
        require_unitary(o_r, tol=1e-12, name="target gate")
        object.__setattr__(self, "o_r", _frozen_array(o_r))
        object.__setattr__(self, "b_terminal", _frozen_array(b))

    @property
    def n_registers(self):
        return self.o_r.shape[0]

    @property
    def dim(self):
        return self.b_terminal.shape[0]


def make_gate_target(o_r, registers, dim):
    """Assemble a GateTarget from a register gate.

    The terminal multiplier carries the conjugate gate on the register
    block and the identity on the passive levels; the coupling blocks
    are zero.
    """
    o_r = as_operator(o_r)
    regs = list(registers)
    if o_r.shape[0] != len(regs):
        raise ModelError(
            f"target is {o_r.shape[0]}x{o_r.shape[0]} but there are "
            f"{len(regs)} register levels"
        )
    b = np.zeros((dim, dim), dtype=np.complex128)
    passive = [i for i in range(dim) if i not in regs]
    b[passive, passive] = 1.0
    b[np.ix_(regs, regs)] = o_r.conj().T
    return GateTarget(o_r=o_r, b_terminal=b)


def embed_register_gate(o_r, registers, dim):
    """Full-space unitary acting as o_r on the registers, identity elsewhere."""
    o_r = as_operator(o_r)
    u = np.zeros((dim, dim), dtype=np.complex128)
    regs = list(registers)
    passive = [i for i in range(dim) if i not in regs]
    u[passive, passive] = 1.0
    u[np.ix_(regs, regs)] = o_r
    return u


def build_custom_model(spec, name="custom"):
    """Assemble a (ModelSystem, GateTarget) pair from a plain description.

    ``spec`` is a dict with keys:

    * ``levels``: list of ``{"label": str, "energy": float}`` (label optional)
    * ``couplings``: list of ``[i, j, strength]`` dipole couplings; the
      Hermitian conjugate is added automatically
    * ``registers``: list of level indices, in the order that defines the
      target's matrix representation
    * ``target``: N_R x N_R matrix as nested lists of ``[re, im]`` pairs
    * ``static_couplings`` (optional): list of ``[i, j, strength]`` added
      symmetrically to the free Hamiltonian (field-independent coupling)
    """
    try:
        levels = list(spec["levels"])
        couplings = list(spec.get("couplings", []))
        registers = list(spec["registers"])
        target = spec["target"]
    except (KeyError, TypeError) as exc:
        raise ModelError(f"model spec missing required field: {exc}") from exc
    if not levels:
        raise ModelError("model spec has no levels")

    n = len(levels)
    energies = np.zeros(n)
    labels = []
    for i, lev in enumerate(levels):
        if isinstance(lev, dict):
            energies[i] = float(lev["energy"])
            labels.append(str(lev.get("label", f"L{i}")))
        else:
            energies[i] = float(lev)
            labels.append(f"L{i}")
    if not np.all(np.isfinite(energies)):
        raise ModelError("level energies must be finite")

    h0 = np.zeros((n, n), dtype=np.complex128)
    np.fill_diagonal(h0, energies)
    for i, j, strength in spec.get("static_couplings", []):
        i, j = int(i), int(j)
        if not (0 <= i < n and 0 <= j < n):
            raise ModelError(f"static coupling index ({i}, {j}) out of range for {n} levels")
        h0[i, j] += strength
        h0[j, i] += np.conj(strength)

    mu = np.zeros((n, n), dtype=np.complex128)
    for entry in couplings:
        i, j, strength = entry
        i, j = int(i), int(j)
        if not (0 <= i < n and 0 <= j < n):
            raise ModelError(f"coupling index ({i}, {j}) out of range for {n} levels")
        mu[i, j] += strength
        mu[j, i] += np.conj(strength)

    o_r = np.asarray(
        [[complex(re, im) for re, im in row] for row in target],
        dtype=np.complex128,
    ) if _looks_like_pairs(target) else np.asarray(target, dtype=np.complex128)
    if o_r.ndim != 2 or o_r.shape[0] != o_r.shape[1]:
        raise ModelError(f"target must be square, got shape {o_r.shape}")
    defect = unitarity_defect(o_r)
    if defect > TARGET_UNITARY_TOL:
        raise ModelError(
            f"target is not unitary: max |O^dag O - 1| = {defect:.3e} "
            f"exceeds {TARGET_UNITARY_TOL:.1e}"
        )
    if defect > TARGET_POLISH_TOL:
        # project to the nearest unitary so downstream invariants hold exactly
        u, _, vh = np.linalg.svd(o_r)
        o_r = u @ vh

    model = ModelSystem(h0=h0, mu=mu, registers=tuple(int(r) for r in registers),
                        labels=tuple(labels), name=name)
    target_obj = make_gate_target(o_r, model.registers, model.dim)
    return model, target_obj


def _looks_like_pairs(target):
    try:
        first = target[0][0]
    except (TypeError, IndexError):
        return False
    return isinstance(first, (list, tuple)) and len(first) == 2


def _hadamard_spec():
    """Explicit level description of the two-surface 20-level system.

    15 equally spaced ground levels (spacing 1), 5 excited levels
    (spacing 0.9) offset by the electronic gap 15; every ground level
    couples to every excited level with equal strength 0.1. The computational
    register is the two lowest ground levels.
    """
    omega_g, omega_e, gap, mu0 = 1.0, 0.9, 15.0, 0.1
    levels = [{"label": f"g{i + 1}", "energy": i * omega_g} for i in range(15)]
    levels += [{"label": f"e{j + 1}", "energy": gap + j * omega_e} for j in range(5)]
    couplings = [[i, 15 + j, mu0] for i in range(15) for j in range(5)]
    inv_sqrt2 = 1.0 / np.sqrt(2.0)
    target = [
        [[inv_sqrt2, 0.0], [inv_sqrt2, 0.0]],
        [[inv_sqrt2, 0.0], [-inv_sqrt2, 0.0]],
    ]
    return {
        "levels": levels,
        "couplings": couplings,
        "registers": [0, 1],
        "target": target,
    }


def build_hadamard_model():
    """Two-surface 20-level system with a Hadamard target on the qubit."""
    return build_custom_model(_hadamard_spec(), name="hadamard")


def build_qft_model():
    """Two-mode 16-level system with a 2-qubit Fourier-transform target.

    Each vibrational mode contributes two ground and two excited levels;
    the full space is the alpha (x) beta tensor product in lexicographic
    order with per-mode basis (g0, g1, e0, e1). The dipole couples each
    mode's ground doublet to its excited doublet with uniform strength
    (0.1 for alpha, 0.08 for beta); a static coupling of 0.21 mixes
    |e0 e1> and |e1 e0| in the excited surface. The register is the four
    ground product states ordered (00, 01, 10, 11).
    """
    e_g_alpha = (0.0, 1.0)
    e_e_alpha = (15.0, 15.8)
    e_g_beta = (0.0, 0.9)
    e_e_beta = (14.5, 15.2)
    mu0_alpha, mu0_beta = 0.1, 0.08
    delta = 0.21

    mode_labels = ("g0", "g1", "e0", "e1")
    e_alpha = e_g_alpha + e_e_alpha
    e_beta = e_g_beta + e_e_beta

    def mode_dipole(mu0):
        m = np.zeros((4, 4), dtype=np.complex128)
        for e_idx in (2, 3):
            for g_idx in (0, 1):
                m[e_idx, g_idx] = mu0
                m[g_idx, e_idx] = mu0
        return m

    ident = np.eye(4, dtype=np.complex128)
    h0 = (np.kron(np.diag(e_alpha), ident).astype(np.complex128)
          + np.kron(ident, np.diag(e_beta)))
    # static mode-mode coupling between |e0>_a|e1>_b and |e1>_a|e0>_b
    i_e0e1 = 4 * 2 + 3
    i_e1e0 = 4 * 3 + 2
    h0[i_e0e1, i_e1e0] = delta
    h0[i_e1e0, i_e0e1] = delta

    mu = np.kron(mode_dipole(mu0_alpha), ident) + np.kron(ident, mode_dipole(mu0_beta))
    labels = tuple(f"{la}.{lb}" for la in mode_labels for lb in mode_labels)
    registers = (0, 1, 4, 5)  # |g_i>_a |g_j>_b ordered 00, 01, 10, 11

    model = ModelSystem(h0=h0, mu=mu, registers=registers, labels=labels,
                        name="qft")
    o_r = 0.5 * np.array(
        [
            [1, 1, 1, 1],
            [1, 1j, -1, -1j],
            [1, -1, 1, -1],
            [1, -1j, -1, 1j],
        ],
        dtype=np.complex128,
    )
    return model, make_gate_target(o_r, registers, model.dim)


BUILTIN_MODELS = {
    "hadamard": build_hadamard_model,
    "qft": build_qft_model,
}


def load_model_file(path):
    """Read a JSON model-spec file and assemble the system and target."""
    with open(path) as fh:
        try:
            spec = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelError(f"model file {path} is not valid JSON: {exc}") from exc
    return build_custom_model(spec, name=str(path))


def load_target_file(path, registers, dim):
    """Read a JSON target override: {"matrix": [[[re, im], ...], ...]}."""
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelError(f"target file {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "matrix" not in doc:
        raise ModelError(f"target file {path} must contain a 'matrix' field")
    matrix = doc["matrix"]
    o_r = np.asarray(
        [[complex(re, im) for re, im in row] for row in matrix],
        dtype=np.complex128,
    ) if _looks_like_pairs(matrix) else np.asarray(matrix, dtype=np.complex128)
    defect = unitarity_defect(o_r)
    if defect > TARGET_UNITARY_TOL:
        raise ModelError(
            f"target override is not unitary: defect {defect:.3e}"
        )
    if defect > TARGET_POLISH_TOL:
        u, _, vh = np.linalg.svd(o_r)
        o_r = u @ vh
    return make_gate_target(o_r, registers, dim)


def guess_carrier_frequency(model):
    """Frequency of the lowest dipole-allowed upward transition from the
    lowest register level (the natural carrier for the guess field).

    Uses the diagonal energies; static off-diagonal terms in h0 are
    treated as perturbations for this purpose.
    """
    energies = model.energies()
    r0 = min(model.registers, key=lambda r: energies[r])
    gaps = [
        energies[j] - energies[r0]
        for j in range(model.dim)
        if j != r0 and abs(model.mu[r0, j]) > 0 and energies[j] > energies[r0]
    ]
    if not gaps:
        raise ModelError(
            "no dipole-allowed upward transition from the lowest register level; "
            "cannot derive a guess carrier frequency"
        )
    return float(min(gaps))
