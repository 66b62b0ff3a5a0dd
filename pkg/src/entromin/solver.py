"""Proximal solver for min ||y - Ax||^2 + lambda*g(x).

Outer iterations take a curvature-majorized gradient step on the data term;
inner iterations minimize the linearized penalty through reweighted-l1
shrinkage.  A geometric lambda continuation drives the penalty weight
toward zero for noiseless recovery, and optional momentum accelerates the
outer sequence with a restart whenever the objective would rise, so the
objective is nonincreasing within every fixed-lambda phase.

Also hosts the l1 initializer (same machinery, unit weights) and the
analysis-form image solver that regularizes frame coefficients of the
unknown image via variable splitting.
"""

import csv
from dataclasses import dataclass, field, replace

import numpy as np

from .backend import kernels
from .errors import ConfigError, DimensionError, NumericError
from .operators import DenseOperator, LinearOperator
from .regularizers import RegularizerSpec

_TINY = 1e-30


@dataclass(frozen=True)
class SolverConfig:
    """All solver knobs.

    lam0/lam_min/kappa accept "auto": lam0 = 0.1*||2A'y||_inf, lam_min =
    1e-8*lam0, kappa from power iteration.  rho_cont is the geometric
    continuation ratio in [0.9, 1), or "fixed" for a single phase at lam0
    (the tuned-lambda noisy regime).
    """

    regularizer: RegularizerSpec = field(
        default_factory=lambda: RegularizerSpec("l1"))
    lam0: float | str = "auto"
    rho_cont: float | str = 0.9
    lam_min: float | str = "auto"
    kappa: float | str = "auto"
    outer_max: int = 50
    inner_max: int = 10
    outer_tol: float = 1e-6
    inner_tol: float = 1e-4
    acceleration: str = "fista"
    initializer: str = "l1"
    bregman_mu: float = 1.0
    bregman_max: int = 50

    def __post_init__(self):
        if self.rho_cont != "fixed" and not 0.9 <= float(self.rho_cont) < 1.0:
            raise ConfigError(
                f"continuation ratio must be in [0.9, 1) or 'fixed', got {self.rho_cont}")
        for name in ("outer_tol", "inner_tol"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        for name in ("outer_max", "inner_max", "bregman_max"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be at least 1")
        if self.acceleration not in ("fista", "none"):
            raise ConfigError(f"acceleration must be 'fista' or 'none', "
                              f"got {self.acceleration!r}")
        if self.initializer not in ("l1", "zero", "provided"):
            raise ConfigError(f"initializer must be 'l1', 'zero', or 'provided', "
                              f"got {self.initializer!r}")
        if self.lam0 != "auto" and float(self.lam0) < 0:
            raise ConfigError("lam0 must be nonnegative")
        if self.bregman_mu <= 0:
            raise ConfigError("bregman_mu must be positive")

    def to_manifest(self):
        return {"regularizer": self.regularizer.to_manifest(),
                "lam0": self.lam0, "rho_cont": self.rho_cont,
                "lam_min": self.lam_min, "kappa": self.kappa,
                "outer_max": self.outer_max, "inner_max": self.inner_max,
                "outer_tol": self.outer_tol, "inner_tol": self.inner_tol,
                "acceleration": self.acceleration, "initializer": self.initializer,
                "bregman_mu": self.bregman_mu, "bregman_max": self.bregman_max}

    @classmethod
    def from_manifest(cls, d):
        d = dict(d)
        if "regularizer" in d:
            d["regularizer"] = RegularizerSpec.from_manifest(d["regularizer"])
        return cls(**d)


class SolverTrace:
    """Per-outer-iteration record across all continuation phases."""

    COLUMNS = ("phase", "outer_iter", "lambda", "objective",
               "data_term", "penalty_term", "inner_iters")

    def __init__(self):
        self.phase = []
        self.outer_iter = []
        self.lam = []
        self.objective = []
        self.data_term = []
        self.penalty_term = []
        self.inner_iters = []
        self.step_norm = []
        self.note = ""

    def append(self, phase, outer_iter, lam, objective, data_term,
               penalty_term, inner_iters, step_norm):
        self.phase.append(int(phase))
        self.outer_iter.append(int(outer_iter))
        self.lam.append(float(lam))
        self.objective.append(float(objective))
        self.data_term.append(float(data_term))
        self.penalty_term.append(float(penalty_term))
        self.inner_iters.append(int(inner_iters))
        self.step_norm.append(float(step_norm))

    def extend_phase(self, phase, lam, rows):
        for i, (obj, data, pen, inner, step) in enumerate(rows):
            self.append(phase, i, lam, obj, data, pen, inner, step)

    def __len__(self):
        return len(self.objective)

    def rows(self):
        for i in range(len(self)):
            yield (self.phase[i], self.outer_iter[i], self.lam[i],
                   self.objective[i], self.data_term[i],
                   self.penalty_term[i], self.inner_iters[i])

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.COLUMNS)
            for row in self.rows():
                writer.writerow([repr(v) if isinstance(v, float) else v
                                 for v in row])


def estimate_kappa(op: LinearOperator, tol: float = 1e-10,
                   max_iter: int = 20000) -> float:
    """Twice the top eigenvalue of A'A (plus a 1% safety margin), by power
    iteration on the Gram operator."""
    if tol <= 0:
        raise ConfigError("tolerance must be positive")
    rng = np.random.default_rng(180451)
    v = rng.normal(size=op.cols)
    v /= np.linalg.norm(v)
    lam_prev = 0.0
    for _ in range(max_iter):
        w = op.adjoint(op.apply(v))
        lam = float(v @ w)
        norm_w = np.linalg.norm(w)
        if norm_w <= _TINY:
            return 2.0 * 1.01 * max(lam, 0.0)  # zero operator
        v = w / norm_w
        if abs(lam - lam_prev) <= tol * max(abs(lam), _TINY):
            return 2.0 * 1.01 * lam
        lam_prev = lam
    raise NumericError(
        "power iteration for the curvature bound did not converge; "
        "pass an explicit kappa in SolverConfig")


def gradient_step(x, op: LinearOperator, y, kappa: float):
    """x - (1/kappa) * grad ||y - Ax||^2."""
    if kappa <= 0:
        raise ConfigError("kappa must be positive")
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (op.cols,):
        raise DimensionError(f"expected signal of length {op.cols}, got {x.shape}")
    residual = op.apply(x) - np.asarray(y, dtype=np.float64)
    return x - (2.0 / kappa) * op.adjoint(residual)


def _inner_loop(x_prox, x_init, spec, lam, kappa, inner_max, inner_tol):
    """Reweighted-l1 descent on 0.5*kappa*||x - x_prox||^2 + lam*g(x),
    starting at x_init; returns the last non-increasing iterate."""
    if lam == 0.0:
        return x_prox.copy(), 1
    xi = np.asarray(x_init, dtype=np.float64)
    diff = xi - x_prox
    qi = 0.5 * kappa * float(diff @ diff) \
        + lam * kernels.penalty_value(xi, spec.code, spec.p, spec.alpha)
    count = 0
    for _ in range(inner_max):
        w = kernels.weight_vec(xi, spec.code, spec.p, spec.alpha, spec.epsilon)
        cand = kernels.soft_threshold_vec(x_prox, (lam / kappa) * w)
        diff = cand - x_prox
        qc = 0.5 * kappa * float(diff @ diff) \
            + lam * kernels.penalty_value(cand, spec.code, spec.p, spec.alpha)
        if qc > qi + 1e-12 * abs(qi):
            break
        relchg = np.linalg.norm(cand - xi) / max(np.linalg.norm(xi), _TINY)
        xi, qi = cand, qc
        count += 1
        if relchg < inner_tol:
            break
    return xi, count


def inner_reweighted_solve(x_prox, x_init, cfg: SolverConfig, lam: float,
                           kappa: float):
    """Inner loop entry point for the entropy penalties (the baselines go
    through the same machinery inside solve)."""
    spec = cfg.regularizer
    if spec.kind not in ("sef", "ref"):
        raise ConfigError(
            f"inner reweighted solve expects an entropy regularizer, got {spec.kind}")
    x_prox = np.asarray(x_prox, dtype=np.float64)
    x_init = np.asarray(x_init, dtype=np.float64)
    if x_prox.shape != x_init.shape:
        raise DimensionError("x_prox and x_init differ in length")
    x, _ = _inner_loop(x_prox, x_init, spec, lam, kappa,
                       cfg.inner_max, cfg.inner_tol)
    return x


def _phase_generic(op, y, x, Ax, lam, kappa, cfg):
    """One fixed-lambda phase against an abstract operator; mirrors the
    dense kernel (same stopping rules and tolerances)."""
    spec = cfg.regularizer
    fista = cfg.acceleration == "fista"
    r = y - Ax
    f = float(r @ r)
    pen = lam * kernels.penalty_value(x, spec.code, spec.p, spec.alpha) \
        if lam > 0.0 else 0.0
    obj = f + pen
    x_prev, Ax_prev = x, Ax
    tk = 1.0
    rows = []
    for t in range(cfg.outer_max):
        if fista and t > 0:
            tk_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * tk * tk))
            beta = (tk - 1.0) / tk_next
            z = x + beta * (x - x_prev)
            Az = Ax + beta * (Ax - Ax_prev)
            tk = tk_next
            momentum = True
        else:
            z, Az, momentum = x, Ax, False
        while True:
            x_prox = z - (2.0 / kappa) * op.adjoint(Az - y)
            x_new, inner_count = _inner_loop(
                x_prox, x, spec, lam, kappa, cfg.inner_max, cfg.inner_tol)
            Ax_new = op.apply(x_new)
            r = y - Ax_new
            f_new = float(r @ r)
            pen_new = lam * kernels.penalty_value(
                x_new, spec.code, spec.p, spec.alpha) if lam > 0.0 else 0.0
            obj_new = f_new + pen_new
            if not momentum or obj_new <= obj + 1e-12 * abs(obj):
                break
            z, Az, momentum, tk = x, Ax, False, 1.0
        step = float(np.linalg.norm(x_new - x))
        xnorm = float(np.linalg.norm(x))
        x_prev, Ax_prev = x, Ax
        x, Ax, obj = x_new, Ax_new, obj_new
        rows.append((obj_new, f_new, pen_new, inner_count, step))
        if step < cfg.outer_tol * max(xnorm, _TINY):
            break
    return x, Ax, rows


def _lambda_schedule(lam0, cfg):
    if cfg.rho_cont == "fixed" or lam0 == 0.0:
        yield 0, lam0
        return
    lam_min = 1e-8 * lam0 if cfg.lam_min == "auto" else float(cfg.lam_min)
    if lam_min <= 0:
        raise ConfigError("lam_min must be positive under continuation")
    rho = float(cfg.rho_cont)
    lam, phase = lam0, 0
    while lam >= lam_min:
        yield phase, lam
        lam *= rho
        phase += 1


def _resolve_init(y, op, cfg, x0):
    if cfg.initializer == "provided":
        if x0 is None:
            raise ConfigError("initializer 'provided' needs an explicit x0")
        x0 = np.asarray(x0, dtype=np.float64)
        if x0.shape != (op.cols,):
            raise DimensionError(
                f"x0 expected length {op.cols}, got {x0.shape}")
        return x0.copy()
    if cfg.initializer == "l1" and cfg.regularizer.kind != "l1":
        l1_cfg = replace(cfg, regularizer=RegularizerSpec("l1"),
                         initializer="zero")
        x_init, _ = solve(y, op, l1_cfg)
        return x_init
    return np.zeros(op.cols)


def solve(y, op: LinearOperator, cfg: SolverConfig | None = None, x0=None):
    """Full solve with continuation; returns (x_hat, trace)."""
    if cfg is None:
        cfg = SolverConfig()
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (op.rows,):
        raise DimensionError(f"y expected length {op.rows}, got {y.shape}")
    trace = SolverTrace()
    if not np.any(y) and cfg.initializer != "provided":
        trace.note = "zero measurement vector; origin returned by convention"
        return np.zeros(op.cols), trace

    kappa = estimate_kappa(op) if cfg.kappa == "auto" else float(cfg.kappa)
    if kappa <= 0:
        raise ConfigError("kappa must be positive")
    Aty = op.adjoint(y)
    lam0 = 0.1 * float(np.max(np.abs(2.0 * Aty))) if cfg.lam0 == "auto" \
        else float(cfg.lam0)

    x = _resolve_init(y, op, cfg, x0)
    spec = cfg.regularizer
    dense = isinstance(op, DenseOperator)
    if dense:
        A = op.matrix
        G = A.T @ A
        b = A.T @ y
        ynorm2 = float(y @ y)
    else:
        Ax = op.apply(x)

    for phase, lam in _lambda_schedule(lam0, cfg):
        if dense:
            x, rows = kernels.solve_phase_dense(
                G, b, ynorm2, x, lam, kappa, spec.code, spec.p, spec.alpha,
                spec.epsilon, cfg.outer_max, cfg.inner_max, cfg.outer_tol,
                cfg.inner_tol, cfg.acceleration == "fista")
        else:
            x, Ax, rows = _phase_generic(op, y, x, Ax, lam, kappa, cfg)
        trace.extend_phase(phase, lam, rows)
    return x, trace


def solve_l1(y, op: LinearOperator, cfg: SolverConfig | None = None, x0=None):
    """The l1 baseline and default initializer: same machinery, unit weights."""
    if cfg is None:
        cfg = SolverConfig(regularizer=RegularizerSpec("l1"), initializer="zero")
    elif cfg.regularizer.kind != "l1":
        cfg = replace(cfg, regularizer=RegularizerSpec("l1"))
    if cfg.initializer == "l1":
        cfg = replace(cfg, initializer="zero")
    return solve(y, op, cfg, x0=x0)


def solve_analysis_image(y, U: LinearOperator, V: LinearOperator,
                         cfg: SolverConfig | None = None, x0=None):
    """Analysis-form recovery: min_s ||y - Us||^2 + lam * g(V's).

    U must have orthonormal rows (curvature exactly 2, so the gradient step
    is s - U'(Us - y)); V must be a tight frame (V V' = I), which gives the
    splitting update its closed form.  Weights on the frame coefficients
    are refreshed once per outer iteration; each outer candidate comes from
    an alternating shrinkage/averaging loop on the split variable, and a
    candidate that would raise the objective ends the phase.
    """
    if cfg is None:
        cfg = SolverConfig(rho_cont="fixed")
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (U.rows,):
        raise DimensionError(f"y expected length {U.rows}, got {y.shape}")
    if U.cols != V.rows:
        raise DimensionError(
            f"image dims disagree: U acts on {U.cols}, V synthesizes {V.rows}")
    spec = cfg.regularizer
    mu = cfg.bregman_mu

    if x0 is not None:
        s = np.asarray(x0, dtype=np.float64).copy()
        if s.shape != (U.cols,):
            raise DimensionError(f"x0 expected length {U.cols}, got {s.shape}")
    else:
        s = U.adjoint(y)

    lam0 = cfg.lam0
    if lam0 == "auto":
        lam0 = 0.1 * float(np.max(np.abs(2.0 * V.adjoint(U.adjoint(y)))))
    else:
        lam0 = float(lam0)

    trace = SolverTrace()

    for phase, lam in _lambda_schedule(lam0, cfg):
        r = y - U.apply(s)
        f = float(r @ r)
        pen = lam * kernels.penalty_value(V.adjoint(s), spec.code, spec.p,
                                          spec.alpha) if lam > 0.0 else 0.0
        obj = f + pen
        for t in range(cfg.outer_max):
            s_prox = s - U.adjoint(U.apply(s) - y)
            if lam > 0.0:
                coef = V.adjoint(s)
                Q = kernels.weight_vec(coef, spec.code, spec.p, spec.alpha,
                                       spec.epsilon)
                tau = (lam / (2.0 * mu)) * Q
                b = np.zeros(V.cols)
                s_new = s
                inner_count = 0
                for _ in range(cfg.bregman_max):
                    d = kernels.soft_threshold_vec(coef + b, tau)
                    s_next = (s_prox + mu * V.apply(d - b)) / (1.0 + mu)
                    coef = V.adjoint(s_next)
                    b = b + coef - d
                    relchg = np.linalg.norm(s_next - s_new) \
                        / max(np.linalg.norm(s_new), _TINY)
                    s_new = s_next
                    inner_count += 1
                    if relchg < cfg.inner_tol:
                        break
            else:
                s_new, inner_count = s_prox, 1
            r = y - U.apply(s_new)
            f_new = float(r @ r)
            pen_new = lam * kernels.penalty_value(
                V.adjoint(s_new), spec.code, spec.p, spec.alpha) if lam > 0.0 else 0.0
            obj_new = f_new + pen_new
            if obj_new > obj + 1e-12 * abs(obj):
                break  # splitting overshoot: keep the last good iterate
            step = float(np.linalg.norm(s_new - s))
            snorm = float(np.linalg.norm(s))
            s, obj = s_new, obj_new
            trace.append(phase, t, lam, obj_new, f_new, pen_new,
                         inner_count, step)
            if step < cfg.outer_tol * max(snorm, _TINY):
                break
    return s, trace
