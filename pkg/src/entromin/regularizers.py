"""Sparsity penalties: l1, lp^p, and the Shannon/Renyi entropy functions of
the normalized magnitude-power distribution, with their magnitude gradients
and the concentration thresholds that split shrinkage from inflation.
"""

from dataclasses import dataclass, field

import numpy as np

from .backend import kernels
from .errors import ConfigError

KINDS = ("l1", "lpp", "sef", "ref")
_KIND_CODES = {"l1": kernels.KIND_L1, "lpp": kernels.KIND_LPP,
               "sef": kernels.KIND_SEF, "ref": kernels.KIND_REF}


@dataclass(frozen=True)
class RegularizerSpec:
    """Which penalty g(x) to use and its parameters.

    kind: "l1" | "lpp" | "sef" | "ref" (case-insensitive aliases accepted).
    p: exponent of the magnitude powers; lpp requires 0 < p < 1, the
       entropy kinds require p > 0.
    alpha: Renyi order, > 0 and != 1 (ref only).
    epsilon: shift applied to zero magnitudes before gradient evaluation,
       and the lp^p weight smoothing; must be positive.
    """

    kind: str
    p: float = 1.0
    alpha: float = field(default=1.1)
    epsilon: float = 1e-12

    def __post_init__(self):
        kind = str(self.kind).lower()
        aliases = {"l1": "l1", "lp": "lpp", "lpp": "lpp", "sef": "sef", "ref": "ref"}
        if kind not in aliases:
            raise ConfigError(f"unknown regularizer kind {self.kind!r}; "
                              f"expected one of {KINDS}")
        object.__setattr__(self, "kind", aliases[kind])
        if self.epsilon <= 0:
            raise ConfigError("epsilon must be positive")
        if self.kind == "lpp" and not 0 < self.p < 1:
            raise ConfigError(f"lpp requires 0 < p < 1, got p={self.p}")
        if self.kind in ("sef", "ref") and self.p <= 0:
            raise ConfigError(f"{self.kind} requires p > 0, got p={self.p}")
        if self.kind == "ref" and (self.alpha <= 0 or self.alpha == 1.0):
            raise ConfigError(f"ref requires alpha > 0 and alpha != 1, "
                              f"got alpha={self.alpha}")

    @property
    def code(self) -> int:
        return _KIND_CODES[self.kind]

    def to_manifest(self):
        out = {"kind": self.kind, "p": self.p, "epsilon": self.epsilon}
        if self.kind == "ref":
            out["alpha"] = self.alpha
        return out

    @classmethod
    def from_manifest(cls, d):
        return cls(kind=d["kind"], p=d.get("p", 1.0), alpha=d.get("alpha", 1.1),
                   epsilon=d.get("epsilon", 1e-12))


def _require_nonzero(x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ConfigError("expected a 1-D signal vector")
    if not np.any(x):
        raise ValueError("entropy undefined at origin")
    return x


def prob_map(x, p: float):
    """Normalized magnitude powers |x_i|^p / sum |x_j|^p; a probability
    vector for any nonzero x."""
    if p <= 0:
        raise ConfigError(f"p must be positive, got {p}")
    x = _require_nonzero(x)
    ap = np.abs(x) ** p
    return ap / ap.sum()


def mapped_simplex(x, p: float):
    """Sign-carrying version of prob_map; absolute entries sum to one."""
    return np.sign(x) * prob_map(x, p)


def sef_value(x, spec: RegularizerSpec) -> float:
    if spec.kind != "sef":
        raise ConfigError(f"sef_value needs a sef spec, got {spec.kind}")
    x = _require_nonzero(x)
    return kernels.penalty_value(x, kernels.KIND_SEF, spec.p, spec.alpha)


def ref_value(x, spec: RegularizerSpec) -> float:
    if spec.kind != "ref":
        raise ConfigError(f"ref_value needs a ref spec, got {spec.kind}")
    x = _require_nonzero(x)
    return kernels.penalty_value(x, kernels.KIND_REF, spec.p, spec.alpha)


def penalty_value(x, spec: RegularizerSpec) -> float:
    """g(x) for any of the four kinds (dispatcher used by the solver)."""
    x = np.asarray(x, dtype=np.float64)
    if spec.kind in ("sef", "ref") and not np.any(x):
        raise ValueError("entropy undefined at origin")
    return kernels.penalty_value(x, spec.code, spec.p, spec.alpha)


def sef_grad_mag(x, spec: RegularizerSpec):
    """Gradient of the Shannon entropy function with respect to magnitudes;
    zero entries are shifted by epsilon first.  Entries are positive below
    the concentration threshold and negative above it."""
    if spec.kind != "sef":
        raise ConfigError(f"sef_grad_mag needs a sef spec, got {spec.kind}")
    x = _require_nonzero(x)
    return kernels.weight_vec(x, kernels.KIND_SEF, spec.p, spec.alpha, spec.epsilon)


def ref_grad_mag(x, spec: RegularizerSpec):
    """Gradient of the Renyi entropy function with respect to magnitudes."""
    if spec.kind != "ref":
        raise ConfigError(f"ref_grad_mag needs a ref spec, got {spec.kind}")
    x = _require_nonzero(x)
    return kernels.weight_vec(x, kernels.KIND_REF, spec.p, spec.alpha, spec.epsilon)


def weight_vector(x, spec: RegularizerSpec):
    """Reweighting vector for the linearized penalty at x (all kinds)."""
    return kernels.weight_vec(np.asarray(x, dtype=np.float64), spec.code,
                              spec.p, spec.alpha, spec.epsilon)


def nu_threshold(x, spec: RegularizerSpec) -> float:
    """Magnitude level where the entropy gradient changes sign: entries
    below it shrink, entries above it grow (energy concentration)."""
    x = _require_nonzero(x)
    a = np.abs(x)
    a = np.where(a > 0.0, a, spec.epsilon)
    ap = a ** spec.p
    sp = ap.sum()
    if spec.kind == "sef":
        return float(np.exp(np.dot(ap, np.log(ap)) / (spec.p * sp)))
    if spec.kind == "ref":
        spa = (a ** (spec.p * spec.alpha)).sum()
        return float(np.exp(np.log(spa / sp) / (spec.p * spec.alpha - spec.p)))
    raise ConfigError(f"nu_threshold needs an entropy spec, got {spec.kind}")


def baseline_value_and_weight(x, spec: RegularizerSpec):
    """Value and reweighting vector for the l1 / lp^p baselines."""
    if spec.kind not in ("l1", "lpp"):
        raise ConfigError(f"baseline kinds are l1 and lpp, got {spec.kind}")
    x = np.asarray(x, dtype=np.float64)
    value = kernels.penalty_value(x, spec.code, spec.p, spec.alpha)
    weight = kernels.weight_vec(x, spec.code, spec.p, spec.alpha, spec.epsilon)
    return value, weight
