# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: the hot inner loops of the solver and the transforms.

Semantically identical to entromin._kernels_py (same stopping rules,
tie-breaks, and tolerance constants); the test suite cross-checks the two
backends on shared inputs.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, log, pow, sqrt
from scipy.linalg.cython_blas cimport dgemv

cnp.import_array()

BACKEND_NAME = "cython"

KIND_L1 = 0
KIND_LPP = 1
KIND_SEF = 2
KIND_REF = 3

cdef int C_L1 = 0
cdef int C_LPP = 1
cdef int C_SEF = 2
cdef int C_REF = 3

cdef double TINY = 1e-30


cdef void _gemv(double[:, ::1] G, double[:] x, double[:] out) noexcept nogil:
    # G is symmetric, so the row-major buffer doubles as its own transpose
    cdef int n = G.shape[0]
    cdef int inc = 1
    cdef double one = 1.0
    cdef double zero = 0.0
    dgemv("N", &n, &n, &one, &G[0, 0], &n, &x[0], &inc, &zero, &out[0], &inc)


cdef double _dot(double[:] a, double[:] b) noexcept nogil:
    cdef Py_ssize_t i
    cdef double acc = 0.0
    for i in range(a.shape[0]):
        acc += a[i] * b[i]
    return acc


cdef double _norm(double[:] a) noexcept nogil:
    cdef Py_ssize_t i
    cdef double acc = 0.0
    for i in range(a.shape[0]):
        acc += a[i] * a[i]
    return sqrt(acc)


cdef double _penalty(double[:] x, int kind, double p, double alpha) noexcept nogil:
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double a, q, sp = 0.0, acc = 0.0
    cdef bint any_nz = 0
    if kind == C_L1:
        for i in range(n):
            acc += fabs(x[i])
        return acc
    if kind == C_LPP:
        for i in range(n):
            a = fabs(x[i])
            if a > 0.0:
                acc += pow(a, p)
        return acc
    for i in range(n):
        a = fabs(x[i])
        if a > 0.0:
            sp += pow(a, p)
            any_nz = 1
    if not any_nz:
        return log(<double> n)
    if kind == C_SEF:
        for i in range(n):
            a = fabs(x[i])
            if a > 0.0:
                q = pow(a, p) / sp
                if q > 0.0:
                    acc -= q * log(q)
        return acc
    # Renyi
    for i in range(n):
        a = fabs(x[i])
        if a > 0.0:
            q = pow(a, p) / sp
            acc += pow(q, alpha)
    return log(acc) / (1.0 - alpha)


cdef void _weights(double[:] x, int kind, double p, double alpha, double eps,
                   double[:] out) noexcept nogil:
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double a, ap, sp = 0.0, spa = 0.0, t = 0.0, coef, pa
    if kind == C_L1:
        for i in range(n):
            out[i] = 1.0
        return
    if kind == C_LPP:
        for i in range(n):
            out[i] = p * pow(fabs(x[i]) + eps, p - 1.0)
        return
    if kind == C_SEF:
        for i in range(n):
            a = fabs(x[i])
            if a == 0.0:
                a = eps
            ap = pow(a, p)
            sp += ap
            t += ap * log(ap)
        for i in range(n):
            a = fabs(x[i])
            if a == 0.0:
                a = eps
            out[i] = (p / sp) * pow(a, p - 1.0) * (t / sp - log(pow(a, p)))
        return
    # Renyi
    pa = p * alpha
    for i in range(n):
        a = fabs(x[i])
        if a == 0.0:
            a = eps
        sp += pow(a, p)
        spa += pow(a, pa)
    coef = pa / (1.0 - alpha)
    for i in range(n):
        a = fabs(x[i])
        if a == 0.0:
            a = eps
        out[i] = coef * (pow(a, pa - 1.0) * sp - pow(a, p - 1.0) * spa) / (spa * sp)


cdef void _shrink(double[:] xt, double lam_over_kappa, double[:] w,
                  double[:] out) noexcept nogil:
    cdef Py_ssize_t i
    cdef double tau, v, mag
    for i in range(xt.shape[0]):
        tau = lam_over_kappa * w[i]
        v = xt[i]
        if tau < 0.0:
            out[i] = v - tau if v >= 0.0 else v + tau
        else:
            mag = fabs(v) - tau
            if mag <= 0.0:
                out[i] = 0.0
            else:
                out[i] = mag if v > 0.0 else -mag


def soft_threshold_vec(xt, tau):
    """Elementwise minimizer of 0.5*(u - xt)**2 + tau*|u|; tau may be
    negative (inflation), with the nonnegative branch at xt == 0."""
    cdef cnp.ndarray[double, ndim=1] xt_ = np.ascontiguousarray(xt, dtype=np.float64).ravel()
    cdef cnp.ndarray[double, ndim=1] tau_ = np.broadcast_to(
        np.asarray(tau, dtype=np.float64), np.shape(xt)).astype(np.float64).ravel()
    cdef cnp.ndarray[double, ndim=1] out = np.empty_like(xt_)
    _shrink(xt_, 1.0, tau_, out)
    return out.reshape(np.shape(xt))


def penalty_value(x, int kind, double p, double alpha):
    """g(x); entropy kinds use exact magnitudes with 0*log(0) = 0 and
    evaluate to log(N) at the origin (the eps-shifted point is uniform)."""
    cdef cnp.ndarray[double, ndim=1] x_ = np.ascontiguousarray(x, dtype=np.float64).ravel()
    if not (0 <= kind <= 3):
        raise ValueError(f"unknown penalty kind {kind}")
    return float(_penalty(x_, kind, p, alpha))


def weight_vec(x, int kind, double p, double alpha, double eps):
    """Linearization weights (magnitude gradient, eps-shifted at zeros)."""
    cdef cnp.ndarray[double, ndim=1] x_ = np.ascontiguousarray(x, dtype=np.float64).ravel()
    cdef cnp.ndarray[double, ndim=1] out = np.empty_like(x_)
    if not (0 <= kind <= 3):
        raise ValueError(f"unknown penalty kind {kind}")
    _weights(x_, kind, p, alpha, eps, out)
    return out


def solve_phase_dense(G, b, double ynorm2, x0, double lam, double kappa,
                      int kind, double p, double alpha, double eps,
                      int outer_max, int inner_max, double outer_tol,
                      double inner_tol, bint fista):
    """One fixed-lambda phase on a dense Gram system; see the NumPy twin
    for the algorithm description."""
    cdef double[:, ::1] Gv = np.ascontiguousarray(G, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] b_ = np.ascontiguousarray(b, dtype=np.float64)
    cdef Py_ssize_t N = b_.shape[0]

    cdef cnp.ndarray[double, ndim=1] x = np.array(x0, dtype=np.float64, copy=True)
    cdef cnp.ndarray[double, ndim=1] x_prev = x.copy()
    cdef cnp.ndarray[double, ndim=1] Gx = np.empty(N)
    cdef cnp.ndarray[double, ndim=1] Gx_prev = np.empty(N)
    cdef cnp.ndarray[double, ndim=1] z = np.empty(N)
    cdef cnp.ndarray[double, ndim=1] Gz = np.empty(N)
    cdef cnp.ndarray[double, ndim=1] x_prox = np.empty(N)
    cdef cnp.ndarray[double, ndim=1] xi = np.empty(N)
    cdef cnp.ndarray[double, ndim=1] cand = np.empty(N)
    cdef cnp.ndarray[double, ndim=1] w = np.empty(N)
    cdef cnp.ndarray[double, ndim=1] x_new = np.empty(N)
    cdef cnp.ndarray[double, ndim=1] Gx_new = np.empty(N)
    cdef cnp.ndarray[double, ndim=1] tmp

    cdef cnp.ndarray[double, ndim=2] trace = np.empty((outer_max, 5))
    cdef int n_rec = 0

    cdef double[:] bv = b_
    cdef double step_scale = 2.0 / kappa
    cdef double lok = lam / kappa
    cdef double f, pen, obj, f_new, pen_new, obj_new
    cdef double tk = 1.0, tk_next, beta
    cdef double qi, qc, relchg, step, xnorm, dnorm, xin
    cdef bint momentum
    cdef int t, r, inner_count
    cdef Py_ssize_t i

    _gemv(Gv, x, Gx)
    f = _dot(x, Gx) - 2.0 * _dot(b_, x) + ynorm2
    pen = lam * _penalty(x, kind, p, alpha) if lam > 0.0 else 0.0
    obj = f + pen
    Gx_prev[:] = Gx

    for t in range(outer_max):
        if fista and t > 0:
            tk_next = 0.5 * (1.0 + sqrt(1.0 + 4.0 * tk * tk))
            beta = (tk - 1.0) / tk_next
            for i in range(N):
                z[i] = x[i] + beta * (x[i] - x_prev[i])
                Gz[i] = Gx[i] + beta * (Gx[i] - Gx_prev[i])
            tk = tk_next
            momentum = 1
        else:
            z[:] = x
            Gz[:] = Gx
            momentum = 0
        while True:
            for i in range(N):
                x_prox[i] = z[i] - step_scale * (Gz[i] - bv[i])
            if lam > 0.0:
                xi[:] = x
                dnorm = 0.0
                for i in range(N):
                    dnorm += (xi[i] - x_prox[i]) * (xi[i] - x_prox[i])
                qi = 0.5 * kappa * dnorm + lam * _penalty(xi, kind, p, alpha)
                inner_count = 0
                for r in range(inner_max):
                    _weights(xi, kind, p, alpha, eps, w)
                    _shrink(x_prox, lok, w, cand)
                    dnorm = 0.0
                    for i in range(N):
                        dnorm += (cand[i] - x_prox[i]) * (cand[i] - x_prox[i])
                    qc = 0.5 * kappa * dnorm + lam * _penalty(cand, kind, p, alpha)
                    if qc > qi + 1e-12 * fabs(qi):
                        break
                    dnorm = 0.0
                    xin = 0.0
                    for i in range(N):
                        dnorm += (cand[i] - xi[i]) * (cand[i] - xi[i])
                        xin += xi[i] * xi[i]
                    relchg = sqrt(dnorm) / max(sqrt(xin), TINY)
                    tmp = xi
                    xi = cand
                    cand = tmp
                    qi = qc
                    inner_count += 1
                    if relchg < inner_tol:
                        break
                x_new[:] = xi
            else:
                x_new[:] = x_prox
                inner_count = 1
            _gemv(Gv, x_new, Gx_new)
            f_new = _dot(x_new, Gx_new) - 2.0 * _dot(b_, x_new) + ynorm2
            pen_new = lam * _penalty(x_new, kind, p, alpha) if lam > 0.0 else 0.0
            obj_new = f_new + pen_new
            if not momentum or obj_new <= obj + 1e-12 * fabs(obj):
                break
            z[:] = x
            Gz[:] = Gx
            momentum = 0
            tk = 1.0
        step = 0.0
        xnorm = 0.0
        for i in range(N):
            step += (x_new[i] - x[i]) * (x_new[i] - x[i])
            xnorm += x[i] * x[i]
        step = sqrt(step)
        xnorm = sqrt(xnorm)
        tmp = x_prev
        x_prev = x
        x = x_new
        x_new = tmp
        tmp = Gx_prev
        Gx_prev = Gx
        Gx = Gx_new
        Gx_new = tmp
        obj = obj_new
        trace[n_rec, 0] = obj_new
        trace[n_rec, 1] = f_new
        trace[n_rec, 2] = pen_new
        trace[n_rec, 3] = inner_count
        trace[n_rec, 4] = step
        n_rec += 1
        if step < outer_tol * max(xnorm, TINY):
            break

    return x.copy(), trace[:n_rec].copy()


def dwt_cols(mat, h, g):
    """Single-level periodized analysis along axis 0 (n even)."""
    cdef double[:, ::1] m_ = np.ascontiguousarray(mat, dtype=np.float64)
    cdef double[:] h_ = np.ascontiguousarray(h, dtype=np.float64)
    cdef double[:] g_ = np.ascontiguousarray(g, dtype=np.float64)
    cdef Py_ssize_t n = m_.shape[0], cols = m_.shape[1]
    cdef Py_ssize_t half = n // 2, L = h_.shape[0]
    cdef cnp.ndarray[double, ndim=2] a = np.zeros((half, cols))
    cdef cnp.ndarray[double, ndim=2] d = np.zeros((half, cols))
    cdef double[:, ::1] av = a, dv = d
    cdef Py_ssize_t i, j, k, row
    cdef double hk, gk
    with nogil:
        for k in range(L):
            hk = h_[k]
            gk = g_[k]
            for i in range(half):
                row = (2 * i + k) % n
                for j in range(cols):
                    av[i, j] += hk * m_[row, j]
                    dv[i, j] += gk * m_[row, j]
    return a, d


def idwt_cols(a, d, h, g):
    """Exact adjoint of dwt_cols (synthesis along axis 0)."""
    cdef double[:, ::1] a_ = np.ascontiguousarray(a, dtype=np.float64)
    cdef double[:, ::1] d_ = np.ascontiguousarray(d, dtype=np.float64)
    cdef double[:] h_ = np.ascontiguousarray(h, dtype=np.float64)
    cdef double[:] g_ = np.ascontiguousarray(g, dtype=np.float64)
    cdef Py_ssize_t half = a_.shape[0], cols = a_.shape[1]
    cdef Py_ssize_t n = 2 * half, L = h_.shape[0]
    cdef cnp.ndarray[double, ndim=2] out = np.zeros((n, cols))
    cdef double[:, ::1] ov = out
    cdef Py_ssize_t i, j, k, row
    cdef double hk, gk
    with nogil:
        for k in range(L):
            hk = h_[k]
            gk = g_[k]
            for i in range(half):
                row = (2 * i + k) % n
                for j in range(cols):
                    ov[row, j] += hk * a_[i, j] + gk * d_[i, j]
    return out
