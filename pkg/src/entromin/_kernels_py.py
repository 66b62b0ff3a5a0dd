"""Pure NumPy kernels: the reference backend.

Mirrors the C extension (`entromin._kernels`) function for function; the
solver and transform layers call whichever module the backend selector
exposes.  Keep the two implementations semantically identical: same
stopping rules, same tie-breaks, same tolerance constants.
"""

import numpy as np

BACKEND_NAME = "python"

# penalty kind codes shared with the C extension
KIND_L1 = 0
KIND_LPP = 1
KIND_SEF = 2
KIND_REF = 3

_TINY = 1e-30


def soft_threshold_vec(xt, tau):
    """Elementwise minimizer of 0.5*(u - xt)**2 + tau*|u|.

    tau may be negative (magnitude inflation); at xt == 0 with tau < 0 the
    two symmetric minimizers tie and the nonnegative one is returned.
    """
    xt = np.asarray(xt, dtype=np.float64)
    tau = np.asarray(tau, dtype=np.float64)
    shrunk = np.sign(xt) * np.maximum(np.abs(xt) - tau, 0.0)
    inflated = np.where(xt >= 0.0, xt - tau, xt + tau)
    return np.where(tau < 0.0, inflated, shrunk)


def _shifted_mag(x, eps):
    # zero entries are lifted to eps so the magnitude gradients stay finite
    a = np.abs(x)
    return np.where(a > 0.0, a, eps)


def penalty_value(x, kind, p, alpha):
    """g(x) for the four penalties; entropy values use exact magnitudes
    with the 0*log(0) = 0 convention.  An all-zero x evaluates to log(N)
    for the entropy kinds (the eps-shifted point is uniform)."""
    x = np.asarray(x, dtype=np.float64)
    a = np.abs(x)
    if kind == KIND_L1:
        return float(a.sum())
    if kind == KIND_LPP:
        return float((a ** p).sum())
    nz = a[a > 0.0]
    if nz.size == 0:
        return float(np.log(x.size))
    ap = nz ** p
    sp = ap.sum()
    q = ap / sp
    if kind == KIND_SEF:
        ql = np.zeros_like(q)
        pos = q > 0.0
        ql[pos] = q[pos] * np.log(q[pos])
        return float(-ql.sum())
    if kind == KIND_REF:
        return float(np.log((q ** alpha).sum()) / (1.0 - alpha))
    raise ValueError(f"unknown penalty kind {kind}")


def weight_vec(x, kind, p, alpha, eps):
    """Linearization weights: the magnitude gradient of g at x (eps-shifted
    where x is exactly zero).  Entropy weights may be negative."""
    x = np.asarray(x, dtype=np.float64)
    if kind == KIND_L1:
        return np.ones_like(x)
    if kind == KIND_LPP:
        return p * (np.abs(x) + eps) ** (p - 1.0)
    a = _shifted_mag(x, eps)
    if kind == KIND_SEF:
        ap = a ** p
        sp = ap.sum()
        lap = np.log(ap)
        t = np.dot(ap, lap)
        return (p / sp) * a ** (p - 1.0) * (t / sp - lap)
    if kind == KIND_REF:
        pa = p * alpha
        sp = (a ** p).sum()
        spa = (a ** pa).sum()
        coef = pa / (1.0 - alpha)
        return coef * (a ** (pa - 1.0) * sp - a ** (p - 1.0) * spa) / (spa * sp)
    raise ValueError(f"unknown penalty kind {kind}")


def solve_phase_dense(G, b, ynorm2, x0, lam, kappa, kind, p, alpha, eps,
                      outer_max, inner_max, outer_tol, inner_tol, fista):
    """One fixed-lambda phase of the proximal/reweighted solver on a dense
    Gram system: f(x) = x'Gx - 2b'x + ||y||^2 with G = A'A, b = A'y.

    Returns (x, trace) where trace rows are
    (objective, data_term, penalty_term, inner_iters, step_norm) per
    accepted outer iterate.  Momentum steps that would raise the objective
    are redone as plain proximal steps, so the objective is nonincreasing.
    """
    G = np.asarray(G, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    x = np.array(x0, dtype=np.float64, copy=True)
    step_scale = 2.0 / kappa
    lam_over_kappa = lam / kappa

    Gx = G @ x
    f = float(x @ Gx) - 2.0 * float(b @ x) + ynorm2
    pen = lam * penalty_value(x, kind, p, alpha) if lam > 0.0 else 0.0
    obj = f + pen

    x_prev = x
    Gx_prev = Gx
    tk = 1.0
    trace = np.empty((outer_max, 5), dtype=np.float64)
    n_rec = 0

    for t in range(outer_max):
        if fista and t > 0:
            tk_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * tk * tk))
            beta = (tk - 1.0) / tk_next
            z = x + beta * (x - x_prev)
            Gz = Gx + beta * (Gx - Gx_prev)
            tk = tk_next
            momentum = True
        else:
            z, Gz, momentum = x, Gx, False

        while True:
            x_prox = z - step_scale * (Gz - b)
            if lam > 0.0:
                xi = x
                diff = xi - x_prox
                qi = 0.5 * kappa * float(diff @ diff) \
                    + lam * penalty_value(xi, kind, p, alpha)
                inner_count = 0
                for _ in range(inner_max):
                    w = weight_vec(xi, kind, p, alpha, eps)
                    cand = soft_threshold_vec(x_prox, lam_over_kappa * w)
                    diff = cand - x_prox
                    qc = 0.5 * kappa * float(diff @ diff) \
                        + lam * penalty_value(cand, kind, p, alpha)
                    if qc > qi + 1e-12 * abs(qi):
                        break
                    relchg = np.linalg.norm(cand - xi) \
                        / max(np.linalg.norm(xi), _TINY)
                    xi = cand
                    qi = qc
                    inner_count += 1
                    if relchg < inner_tol:
                        break
                x_new = xi
            else:
                x_new = x_prox
                inner_count = 1
            Gx_new = G @ x_new
            f_new = float(x_new @ Gx_new) - 2.0 * float(b @ x_new) + ynorm2
            pen_new = lam * penalty_value(x_new, kind, p, alpha) if lam > 0.0 else 0.0
            obj_new = f_new + pen_new
            if not momentum or obj_new <= obj + 1e-12 * abs(obj):
                break
            # momentum overshoot: redo as a plain step and reset it
            z, Gz, momentum, tk = x, Gx, False, 1.0

        step = float(np.linalg.norm(x_new - x))
        xnorm = float(np.linalg.norm(x))
        x_prev, Gx_prev = x, Gx
        x, Gx, obj = x_new, Gx_new, obj_new
        trace[n_rec] = (obj_new, f_new, pen_new, inner_count, step)
        n_rec += 1
        if step < outer_tol * max(xnorm, _TINY):
            break

    return x, trace[:n_rec].copy()


def dwt_cols(mat, h, g):
    """Single-level periodized analysis along axis 0: mat is (n, m) with n
    even; returns approximation and detail, each (n//2, m)."""
    mat = np.asarray(mat, dtype=np.float64)
    n = mat.shape[0]
    half = n // 2
    a = np.zeros((half,) + mat.shape[1:], dtype=np.float64)
    d = np.zeros_like(a)
    base = 2 * np.arange(half)
    for k in range(len(h)):
        rows = mat[(base + k) % n]
        a += h[k] * rows
        d += g[k] * rows
    return a, d


def idwt_cols(a, d, h, g):
    """Exact adjoint of dwt_cols (synthesis by scatter-add along axis 0)."""
    a = np.asarray(a, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    half = a.shape[0]
    n = 2 * half
    out = np.zeros((n,) + a.shape[1:], dtype=np.float64)
    base = 2 * np.arange(half)
    for k in range(len(h)):
        # for fixed k the target rows are distinct, so += is collision-free
        out[(base + k) % n] += h[k] * a + g[k] * d
    return out
