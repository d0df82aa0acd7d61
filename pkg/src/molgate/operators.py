"""Dense complex operator arithmetic for small Hilbert spaces.

Operators are plain ``numpy.ndarray`` of ``complex128``, square and
row-major. This module provides the structure checks (hermiticity,
unitarity), the Hilbert-Schmidt projection, and the exact single-step
matrix exponential used by the propagators. Everything here is a pure
function; arrays are never modified in place.
"""
import numpy as np

from .errors import StructureError

#: elementwise tolerance for accepting a matrix as Hermitian
HERMITIAN_TOL = 1e-12
#: elementwise tolerance on |A†A - 1| for accepting a matrix as unitary
UNITARY_TOL = 1e-10


def as_operator(a):
    """Return ``a`` as a square, C-contiguous complex128 array."""
    a = np.ascontiguousarray(a, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise StructureError(f"operator must be a square matrix, got shape {a.shape}")
    return a


def hermiticity_defect(a):
    """max |A - A†| over all entries."""
    return float(np.abs(a - a.conj().T).max())


def unitarity_defect(a):
    """max |A†A - 1| over all entries."""
    n = a.shape[0]
    return float(np.abs(a.conj().T @ a - np.eye(n)).max())


def is_hermitian(a, tol=HERMITIAN_TOL):
    return hermiticity_defect(a) <= tol


def is_unitary(a, tol=UNITARY_TOL):
    return unitarity_defect(a) <= tol


def require_hermitian(a, tol=HERMITIAN_TOL, name="operator"):
    d = hermiticity_defect(a)
    if d > tol:
        raise StructureError(
            f"{name} is not Hermitian: max |A - A^dag| = {d:.3e} exceeds {tol:.1e}"
        )


def require_unitary(a, tol=UNITARY_TOL, name="operator"):
    d = unitarity_defect(a)
    if d > tol:
        raise StructureError(
            f"{name} is not unitary: max |A^dag A - 1| = {d:.3e} exceeds {tol:.1e}"
        )


def expm_hermitian(h, tau):
    """exp(-1j * tau * h) for Hermitian ``h``, via eigendecomposition.

    Exact up to roundoff for any step size; ``tau`` may be negative.
    No structure check (internal fast path).
    """
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * tau * w)) @ v.conj().T


def expm_hermitian_step(h, dt, sign="forward"):
    """Single propagation step kernel exp(-i H dt) (hbar = 1).

    Args:
        h: Hermitian operator (checked within :data:`HERMITIAN_TOL`).
        dt: positive step duration.
        sign: ``"forward"`` for exp(-i H dt), ``"backward"`` for
            exp(+i H dt).

    Returns:
        The unitary step operator.
    """
    h = as_operator(h)
    require_hermitian(h, name="step generator")
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if sign == "forward":
        tau = dt
    elif sign == "backward":
        tau = -dt
    else:
        raise ValueError(f"sign must be 'forward' or 'backward', got {sign!r}")
    return expm_hermitian(h, tau)


def project_trace(a, b):
    """Hilbert-Schmidt projection Tr{A† B}."""
    a = as_operator(a)
    b = as_operator(b)
    if a.shape != b.shape:
        raise StructureError(
            f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}"
        )
    # Tr{A† B} = sum_ij conj(A_ij) B_ij
    return complex(np.vdot(a, b))


def haar_unitary(n, rng):
    """Haar-random n x n unitary (QR of a complex Ginibre matrix)."""
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    # fix the phase convention so the distribution is Haar
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))
