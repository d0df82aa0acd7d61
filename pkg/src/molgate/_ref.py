"""Pure-NumPy propagation kernels.

Reference implementation of the kernel contract shared with the
compiled core (``molgate._core``). Semantics:

* the field is piecewise constant: step k (from grid point k to k+1)
  uses the sample ``eps[k]`` taken at the interval midpoint;
* each step applies the exact unitary exp(-i (h0 - eps[k] mu) dt),
  evaluated by Hermitian eigendecomposition;
* checkpoints are stored at grid indices 0, stride, 2*stride, ... and
  always at the final grid index;
* midpoint operators use the half-step kernel exp(-i H_k dt/2): the
  backward multiplier at the midpoint of step k is the grid-(k+1) value
  advanced half a step, and the full step is two half steps so grid and
  midpoint sequences are mutually consistent.

The eigendecompositions for a known field are batched in chunks; the
update sweep is inherently sequential (each new sample feeds the next
step) and runs one step at a time.
"""
import numpy as np

_CHUNK = 256


def checkpoint_indices(m, stride):
    """Grid indices at which checkpoints are stored (always includes 0 and m)."""
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    idx = list(range(0, m + 1, stride))
    if idx[-1] != m:
        idx.append(m)
    return idx


def _kernels_batch(h0, mu, eps_chunk, tau):
    """exp(-1j * tau * (h0 - eps*mu)) for every sample in the chunk."""
    h = h0[None, :, :] - eps_chunk[:, None, None] * mu[None, :, :]
    w, v = np.linalg.eigh(h)
    phase = np.exp(-1j * tau * w)
    return (v * phase[:, None, :]) @ v.conj().swapaxes(-1, -2)


def prop_forward(h0, mu, eps, dt, u0, stride):
    """Propagate forward through all steps; return checkpoints."""
    m = eps.shape[0]
    idx = checkpoint_indices(m, stride)
    n = h0.shape[0]
    chk = np.empty((len(idx), n, n), dtype=np.complex128)
    pos = {g: j for j, g in enumerate(idx)}
    u = u0.copy()
    if 0 in pos:
        chk[pos[0]] = u
    for lo in range(0, m, _CHUNK):
        hi = min(lo + _CHUNK, m)
        kerns = _kernels_batch(h0, mu, eps[lo:hi], dt)
        for k in range(lo, hi):
            u = kerns[k - lo] @ u
            j = pos.get(k + 1)
            if j is not None:
                chk[j] = u
    return chk


def prop_backward(h0, mu, eps, dt, b_terminal, stride, want_mid=False):
    """Propagate the multiplier backward from t = T; return checkpoints.

    ``chk[j]`` is B at the j-th checkpoint grid index; ``mid[k]`` (when
    requested) is B at the midpoint of step k.
    """
    m = eps.shape[0]
    idx = checkpoint_indices(m, stride)
    n = h0.shape[0]
    chk = np.empty((len(idx), n, n), dtype=np.complex128)
    pos = {g: j for j, g in enumerate(idx)}
    mid = np.empty((m, n, n), dtype=np.complex128) if want_mid else None
    b = b_terminal.copy()
    if m in pos:
        chk[pos[m]] = b
    tau = 0.5 * dt if want_mid else dt
    for hi in range(m, 0, -_CHUNK):
        lo = max(hi - _CHUNK, 0)
        kerns = _kernels_batch(h0, mu, eps[lo:hi], tau)
        for k in range(hi - 1, lo - 1, -1):
            kern = kerns[k - lo]
            if want_mid:
                b = b @ kern
                mid[k] = b
                b = b @ kern
            else:
                b = b @ kern
            j = pos.get(k)
            if j is not None:
                chk[j] = b
    return chk, mid


def forward_mid(h0, mu, eps, dt, u_left):
    """Forward midpoint states: mid[k] = U at the midpoint of step k."""
    m = eps.shape[0]
    n = h0.shape[0]
    mid = np.empty((m, n, n), dtype=np.complex128)
    u = u_left.copy()
    for lo in range(0, m, _CHUNK):
        hi = min(lo + _CHUNK, m)
        kerns = _kernels_batch(h0, mu, eps[lo:hi], 0.5 * dt)
        for k in range(lo, hi):
            kern = kerns[k - lo]
            u = kern @ u
            mid[k] = u
            u = kern @ u
    return mid, u


def krotov_sweep(h0, mu, eps_prev, b_mid, s_mid, dt, lam, u0, incremental,
                 stride, registers):
    """Forward sweep with the concurrent field update.

    At each step the correction -(s/2 lambda) Im sum_i <i|B mu U|i> is
    evaluated over the register basis from the previous iteration's
    multiplier at the step midpoint and the state at the step's start,
    the new sample is fixed (added to the previous sample in incremental
    mode), and the state advances one step under the new sample. With
    ``registers`` covering the whole space the projection is the plain
    trace.
    """
    m = eps_prev.shape[0]
    idx = checkpoint_indices(m, stride)
    n = h0.shape[0]
    regs = np.asarray(registers, dtype=np.int64)
    chk = np.empty((len(idx), n, n), dtype=np.complex128)
    pos = {g: j for j, g in enumerate(idx)}
    eps_new = np.empty(m)
    u = u0.copy()
    if 0 in pos:
        chk[pos[0]] = u
    scale = -0.5 / lam
    for k in range(m):
        rows = b_mid[k][regs] @ mu  # register rows of B mu
        trace = np.einsum("ib,bi->", rows, u[:, regs])
        delta = scale * s_mid[k] * trace.imag
        e = eps_prev[k] + delta if incremental else delta
        eps_new[k] = e
        h = h0 - e * mu
        w, v = np.linalg.eigh(h)
        u = (v * np.exp(-1j * dt * w)) @ (v.conj().T @ u)
        j = pos.get(k + 1)
        if j is not None:
            chk[j] = u
    return eps_new, chk
