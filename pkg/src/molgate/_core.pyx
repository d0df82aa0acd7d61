# cython: boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled propagation kernels.

Same contract as ``molgate._ref`` (see its module docstring): exact
per-step exponentials via Hermitian eigendecomposition, midpoint-sampled
piecewise-constant fields, strided checkpoints. The per-step work
(eigensolve + a few GEMMs on NxN matrices) runs without the GIL.

When the free Hamiltonian and the dipole are purely real (true for all
level-system models built by this package) the step generator is real
symmetric and the eigensolve drops to dsyev with the kernel assembled
from two real GEMMs, roughly halving the per-step cost; complex
Hermitian inputs take the zheev path.

Layout note: buffers are C-contiguous row-major. LAPACK sees a
row-major Hermitian H as its transpose H* and returns eigenvectors W of
H*; the buffer read back row-major is R = W^T, and V = R^H is an
eigenbasis of H, so exp(-i tau H) = R^H diag(exp(-i tau w)) R (for real
symmetric H this reduces to R^T D R). Products are mapped onto
column-major GEMM by operand swapping.
"""
import numpy as np

from libc.math cimport cos, sin
from libc.string cimport memcpy
from scipy.linalg.cython_blas cimport dgemm, zgemm
from scipy.linalg.cython_lapack cimport dsyev, zheev

ctypedef double complex zc

cdef zc Z_ONE = 1.0
cdef zc Z_ZERO = 0.0
cdef zc Z_I = 1j
cdef double D_ONE = 1.0
cdef double D_ZERO = 0.0
cdef char C_V = b'V'
cdef char C_L = b'L'
cdef char C_N = b'N'
cdef char C_C = b'C'
cdef char C_T = b'T'

_DUMMY_D2 = np.zeros((1, 1), dtype=np.float64)


def checkpoint_indices(m, stride):
    """Grid indices at which checkpoints are stored (always includes 0 and m)."""
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    idx = list(range(0, m + 1, stride))
    if idx[len(idx) - 1] != m:
        idx.append(m)
    return idx


cdef inline void _mm(int n, zc* a, zc* b, zc* c) noexcept nogil:
    # row-major c = a @ b
    zgemm(&C_N, &C_N, &n, &n, &n, &Z_ONE, b, &n, a, &n, &Z_ZERO, c, &n)


cdef inline void _mm_ahb(int n, zc* a, zc* b, zc* c) noexcept nogil:
    # row-major c = a^H @ b
    zgemm(&C_N, &C_C, &n, &n, &n, &Z_ONE, b, &n, a, &n, &Z_ZERO, c, &n)


cdef inline void _mm_atb_d(int n, double* a, double* b, double* c) noexcept nogil:
    # row-major c = a^T @ b, real
    dgemm(&C_N, &C_T, &n, &n, &n, &D_ONE, b, &n, a, &n, &D_ZERO, c, &n)


cdef class _Work:
    """Per-call scratch buffers for both eigensolve paths."""
    cdef zc[::1] hbuf, work, scr, kern, ua, ub, t1
    cdef double[::1] w, rwork
    cdef double[::1] hr, workr, sre, sim, ore, oim
    cdef int n, lwork, lworkr

    def __cinit__(self, int n):
        self.n = n
        self.lwork = 64 * n
        self.lworkr = 64 * n
        self.hbuf = np.empty(n * n, dtype=np.complex128)
        self.work = np.empty(self.lwork, dtype=np.complex128)
        self.scr = np.empty(n * n, dtype=np.complex128)
        self.kern = np.empty(n * n, dtype=np.complex128)
        self.ua = np.empty(n * n, dtype=np.complex128)
        self.ub = np.empty(n * n, dtype=np.complex128)
        self.t1 = np.empty(n * n, dtype=np.complex128)
        self.w = np.empty(n, dtype=np.float64)
        self.rwork = np.empty(max(1, 3 * n - 2), dtype=np.float64)
        self.hr = np.empty(n * n, dtype=np.float64)
        self.workr = np.empty(self.lworkr, dtype=np.float64)
        self.sre = np.empty(n * n, dtype=np.float64)
        self.sim = np.empty(n * n, dtype=np.float64)
        self.ore = np.empty(n * n, dtype=np.float64)
        self.oim = np.empty(n * n, dtype=np.float64)


cdef int _step_kernel_z(int n, zc* h0, zc* mu, double eps, double tau,
                        _Work wk) noexcept nogil:
    """wk.kern = exp(-i tau (h0 - eps mu)), complex Hermitian path."""
    cdef int i, j, info = 0
    cdef double c, s
    cdef zc ph
    cdef zc* hbuf = &wk.hbuf[0]
    cdef zc* scr = &wk.scr[0]
    for i in range(n * n):
        hbuf[i] = h0[i] - eps * mu[i]
    zheev(&C_V, &C_L, &n, hbuf, &n, &wk.w[0], &wk.work[0], &wk.lwork,
          &wk.rwork[0], &info)
    if info != 0:
        return info
    for i in range(n):
        c = cos(tau * wk.w[i])
        s = sin(tau * wk.w[i])
        ph = c - s * Z_I
        for j in range(n):
            scr[i * n + j] = ph * hbuf[i * n + j]
    _mm_ahb(n, hbuf, scr, &wk.kern[0])
    return 0


cdef int _step_kernel_d(int n, double* h0r, double* mur, double eps,
                        double tau, _Work wk) noexcept nogil:
    """wk.kern = exp(-i tau (h0 - eps mu)), real symmetric path."""
    cdef int i, j, info = 0
    cdef double c, s
    cdef double* hr = &wk.hr[0]
    cdef double* sre = &wk.sre[0]
    cdef double* sim = &wk.sim[0]
    cdef double* ore = &wk.ore[0]
    cdef double* oim = &wk.oim[0]
    cdef zc* kern = &wk.kern[0]
    for i in range(n * n):
        hr[i] = h0r[i] - eps * mur[i]
    dsyev(&C_V, &C_L, &n, hr, &n, &wk.w[0], &wk.workr[0], &wk.lworkr, &info)
    if info != 0:
        return info
    for i in range(n):
        c = cos(tau * wk.w[i])
        s = sin(tau * wk.w[i])
        for j in range(n):
            sre[i * n + j] = c * hr[i * n + j]
            sim[i * n + j] = -s * hr[i * n + j]
    _mm_atb_d(n, hr, sre, ore)
    _mm_atb_d(n, hr, sim, oim)
    for i in range(n * n):
        kern[i] = ore[i] + oim[i] * Z_I
    return 0


cdef inline int _step_kernel(bint real_mode, int n, zc* h0, zc* mu,
                             double* h0r, double* mur, double eps,
                             double tau, _Work wk) noexcept nogil:
    if real_mode:
        return _step_kernel_d(n, h0r, mur, eps, tau, wk)
    return _step_kernel_z(n, h0, mu, eps, tau, wk)


cdef inline double _im_trace_reg(int n, int nr, long* regs, zc* b, zc* mu,
                                 zc* u, zc* vrow) noexcept nogil:
    # Im of sum over register states i of <i| b mu u |i>
    cdef int r, a, c
    cdef long i
    cdef double acc = 0.0
    cdef zc s, z
    for r in range(nr):
        i = regs[r]
        for c in range(n):
            s = 0
            for a in range(n):
                s = s + b[i * n + a] * mu[a * n + c]
            vrow[c] = s
        for c in range(n):
            z = vrow[c] * u[c * n + i]
            acc += z.imag
    return acc


def _as_c(a):
    a = np.ascontiguousarray(a, dtype=np.complex128)
    return a if a.flags.writeable else a.copy()


def _as_f(a):
    a = np.ascontiguousarray(a, dtype=np.float64)
    return a if a.flags.writeable else a.copy()


cdef bint _is_real(a):
    return bool(np.all(a.imag == 0.0))


def prop_forward(h0, mu, eps, dt, u0, stride):
    """Propagate forward through all steps; return checkpoints."""
    h0 = _as_c(h0)
    mu = _as_c(mu)
    u0 = _as_c(u0)
    cdef double[::1] eps_v = _as_f(eps)
    cdef int m = eps_v.shape[0]
    cdef int n = h0.shape[0]
    cdef bint real_mode = _is_real(h0) and _is_real(mu)
    h0r = np.ascontiguousarray(h0.real) if real_mode else _DUMMY_D2
    mur = np.ascontiguousarray(mu.real) if real_mode else _DUMMY_D2
    idx = checkpoint_indices(m, int(stride))
    cdef long[::1] idx_v = np.asarray(idx, dtype=np.int64)
    cdef int nk = idx_v.shape[0]
    chk = np.empty((nk, n, n), dtype=np.complex128)
    cdef zc[:, :, ::1] chk_v = chk
    cdef zc[:, ::1] h0_v = h0, mu_v = mu, u0_v = u0
    cdef double[:, ::1] h0r_v = h0r, mur_v = mur
    cdef _Work wk = _Work(n)
    cdef zc* ucur = &wk.ua[0]
    cdef zc* unxt = &wk.ub[0]
    cdef zc* tmp
    cdef double ddt = float(dt)
    cdef int k, ci = 0, info = 0
    memcpy(ucur, &u0_v[0, 0], n * n * sizeof(zc))
    with nogil:
        if idx_v[0] == 0:
            memcpy(&chk_v[0, 0, 0], ucur, n * n * sizeof(zc))
            ci = 1
        for k in range(m):
            info = _step_kernel(real_mode, n, &h0_v[0, 0], &mu_v[0, 0],
                                &h0r_v[0, 0], &mur_v[0, 0], eps_v[k], ddt, wk)
            if info != 0:
                break
            _mm(n, &wk.kern[0], ucur, unxt)
            tmp = ucur
            ucur = unxt
            unxt = tmp
            if ci < nk and idx_v[ci] == k + 1:
                memcpy(&chk_v[ci, 0, 0], ucur, n * n * sizeof(zc))
                ci += 1
    if info != 0:
        raise RuntimeError(f"eigensolver failed with info={info}")
    return chk


def prop_backward(h0, mu, eps, dt, b_terminal, stride, want_mid=False):
    """Propagate the multiplier backward from t = T; return (chk, mid)."""
    h0 = _as_c(h0)
    mu = _as_c(mu)
    b_terminal = _as_c(b_terminal)
    cdef double[::1] eps_v = _as_f(eps)
    cdef int m = eps_v.shape[0]
    cdef int n = h0.shape[0]
    cdef bint real_mode = _is_real(h0) and _is_real(mu)
    h0r = np.ascontiguousarray(h0.real) if real_mode else _DUMMY_D2
    mur = np.ascontiguousarray(mu.real) if real_mode else _DUMMY_D2
    idx = checkpoint_indices(m, int(stride))
    cdef long[::1] idx_v = np.asarray(idx, dtype=np.int64)
    cdef int nk = idx_v.shape[0]
    chk = np.empty((nk, n, n), dtype=np.complex128)
    mid = np.empty((m, n, n), dtype=np.complex128) if want_mid else None
    cdef zc[:, :, ::1] chk_v = chk
    cdef zc[:, :, ::1] mid_v = mid if want_mid else chk  # placeholder view
    cdef bint wm = bool(want_mid)
    cdef zc[:, ::1] h0_v = h0, mu_v = mu, bt_v = b_terminal
    cdef double[:, ::1] h0r_v = h0r, mur_v = mur
    cdef _Work wk = _Work(n)
    cdef zc* bcur = &wk.ua[0]
    cdef zc* bnxt = &wk.ub[0]
    cdef zc* tmp
    cdef double ddt = float(dt)
    cdef double tau = 0.5 * ddt if want_mid else ddt
    cdef int k, ci = nk - 1, info = 0
    memcpy(bcur, &bt_v[0, 0], n * n * sizeof(zc))
    with nogil:
        if idx_v[ci] == m:
            memcpy(&chk_v[ci, 0, 0], bcur, n * n * sizeof(zc))
            ci -= 1
        for k in range(m - 1, -1, -1):
            info = _step_kernel(real_mode, n, &h0_v[0, 0], &mu_v[0, 0],
                                &h0r_v[0, 0], &mur_v[0, 0], eps_v[k], tau, wk)
            if info != 0:
                break
            if wm:
                _mm(n, bcur, &wk.kern[0], bnxt)      # midpoint value
                memcpy(&mid_v[k, 0, 0], bnxt, n * n * sizeof(zc))
                _mm(n, bnxt, &wk.kern[0], bcur)      # grid value at k
            else:
                _mm(n, bcur, &wk.kern[0], bnxt)
                tmp = bcur
                bcur = bnxt
                bnxt = tmp
            if ci >= 0 and idx_v[ci] == k:
                memcpy(&chk_v[ci, 0, 0], bcur, n * n * sizeof(zc))
                ci -= 1
    if info != 0:
        raise RuntimeError(f"eigensolver failed with info={info}")
    return chk, mid


def forward_mid(h0, mu, eps, dt, u_left):
    """Forward midpoint states: mid[k] = U at the midpoint of step k."""
    h0 = _as_c(h0)
    mu = _as_c(mu)
    u_left = _as_c(u_left)
    cdef double[::1] eps_v = _as_f(eps)
    cdef int m = eps_v.shape[0]
    cdef int n = h0.shape[0]
    cdef bint real_mode = _is_real(h0) and _is_real(mu)
    h0r = np.ascontiguousarray(h0.real) if real_mode else _DUMMY_D2
    mur = np.ascontiguousarray(mu.real) if real_mode else _DUMMY_D2
    mid = np.empty((m, n, n), dtype=np.complex128)
    u_out = np.empty((n, n), dtype=np.complex128)
    cdef zc[:, :, ::1] mid_v = mid
    cdef zc[:, ::1] h0_v = h0, mu_v = mu, ul_v = u_left, uo_v = u_out
    cdef double[:, ::1] h0r_v = h0r, mur_v = mur
    cdef _Work wk = _Work(n)
    cdef zc* ucur = &wk.ua[0]
    cdef double half = 0.5 * float(dt)
    cdef int k, info = 0
    memcpy(ucur, &ul_v[0, 0], n * n * sizeof(zc))
    with nogil:
        for k in range(m):
            info = _step_kernel(real_mode, n, &h0_v[0, 0], &mu_v[0, 0],
                                &h0r_v[0, 0], &mur_v[0, 0], eps_v[k], half, wk)
            if info != 0:
                break
            _mm(n, &wk.kern[0], ucur, &wk.ub[0])     # midpoint
            memcpy(&mid_v[k, 0, 0], &wk.ub[0], n * n * sizeof(zc))
            _mm(n, &wk.kern[0], &wk.ub[0], ucur)     # grid point k + 1
    if info != 0:
        raise RuntimeError(f"eigensolver failed with info={info}")
    memcpy(&uo_v[0, 0], ucur, n * n * sizeof(zc))
    return mid, u_out


def krotov_sweep(h0, mu, eps_prev, b_mid, s_mid, dt, lam, u0, incremental,
                 stride, registers):
    """Forward sweep with the concurrent field update (see _ref)."""
    h0 = _as_c(h0)
    mu = _as_c(mu)
    u0 = _as_c(u0)
    b_mid = _as_c(b_mid)
    cdef double[::1] eps_v = _as_f(eps_prev)
    cdef double[::1] s_v = _as_f(s_mid)
    cdef long[::1] regs_v = np.ascontiguousarray(registers, dtype=np.int64)
    cdef int n_regs = regs_v.shape[0]
    cdef int m = eps_v.shape[0]
    cdef int n = h0.shape[0]
    cdef bint real_mode = _is_real(h0) and _is_real(mu)
    h0r = np.ascontiguousarray(h0.real) if real_mode else _DUMMY_D2
    mur = np.ascontiguousarray(mu.real) if real_mode else _DUMMY_D2
    idx = checkpoint_indices(m, int(stride))
    cdef long[::1] idx_v = np.asarray(idx, dtype=np.int64)
    cdef int nk = idx_v.shape[0]
    chk = np.empty((nk, n, n), dtype=np.complex128)
    eps_new = np.empty(m, dtype=np.float64)
    cdef double[::1] en_v = eps_new
    cdef zc[:, :, ::1] chk_v = chk
    cdef zc[:, :, ::1] bm_v = b_mid
    cdef zc[:, ::1] h0_v = h0, mu_v = mu, u0_v = u0
    cdef double[:, ::1] h0r_v = h0r, mur_v = mur
    cdef _Work wk = _Work(n)
    cdef zc* ucur = &wk.ua[0]
    cdef zc* unxt = &wk.ub[0]
    cdef zc* tmp
    cdef double ddt = float(dt)
    cdef double scale = -0.5 / float(lam)
    cdef bint incr = bool(incremental)
    cdef double e, tr_im
    cdef int k, ci = 0, info = 0
    memcpy(ucur, &u0_v[0, 0], n * n * sizeof(zc))
    with nogil:
        if idx_v[0] == 0:
            memcpy(&chk_v[0, 0, 0], ucur, n * n * sizeof(zc))
            ci = 1
        for k in range(m):
            tr_im = _im_trace_reg(n, n_regs, &regs_v[0], &bm_v[k, 0, 0],
                                  &mu_v[0, 0], ucur, &wk.t1[0])
            e = scale * s_v[k] * tr_im
            if incr:
                e = eps_v[k] + e
            en_v[k] = e
            info = _step_kernel(real_mode, n, &h0_v[0, 0], &mu_v[0, 0],
                                &h0r_v[0, 0], &mur_v[0, 0], e, ddt, wk)
            if info != 0:
                break
            _mm(n, &wk.kern[0], ucur, unxt)
            tmp = ucur
            ucur = unxt
            unxt = tmp
            if ci < nk and idx_v[ci] == k + 1:
                memcpy(&chk_v[ci, 0, 0], ucur, n * n * sizeof(zc))
                ci += 1
    if info != 0:
        raise RuntimeError(f"eigensolver failed with info={info}")
    return eps_new, chk
