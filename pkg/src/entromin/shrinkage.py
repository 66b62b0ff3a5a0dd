"""Soft thresholding, including the negative-threshold extension.

For tau >= 0 this is the usual shrinkage toward zero; for tau < 0 the
minimizer of 0.5*(u - xt)^2 + tau*|u| inflates the magnitude by |tau|
instead.  At xt == 0 with tau < 0 both signs attain the minimum; the
nonnegative branch is returned so the operator is deterministic.
"""

import numpy as np

from .backend import kernels
from .errors import DimensionError


def soft_threshold(xt: float, tau: float) -> float:
    """Scalar form; the exact global minimizer of q(u) = 0.5*(u-xt)^2 + tau*|u|."""
    if tau < 0.0:
        return xt - tau if xt >= 0.0 else xt + tau
    if abs(xt) <= tau:
        return 0.0
    return float(np.sign(xt) * (abs(xt) - tau))


def soft_threshold_vec(xt, tau):
    """Elementwise soft threshold; tau may be a scalar or a vector."""
    xt = np.asarray(xt, dtype=np.float64)
    tau = np.broadcast_to(np.asarray(tau, dtype=np.float64), xt.shape)
    return kernels.soft_threshold_vec(np.ascontiguousarray(xt),
                                      np.ascontiguousarray(tau))


def reweighted_prox_step(xt, weights, lam: float, kappa: float):
    """One weighted-l1 proximal step: thresholds (lam/kappa) * weights."""
    xt = np.asarray(xt, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    if xt.shape != weights.shape:
        raise DimensionError(
            f"signal and weights differ in length: {xt.shape} vs {weights.shape}")
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    return soft_threshold_vec(xt, (lam / kappa) * weights)
