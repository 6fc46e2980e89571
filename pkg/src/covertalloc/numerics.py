"""Shared numerical machinery for the two penalty solvers.

Scalar bisection with bracket expansion, alternating projections onto the
two feasible sets (per-block caps + total-budget / total-floor), the linear
penalty-growth schedule, and a finite-difference gradient checker.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, NumericalError
from . import kernels

BRACKET_CAP = 1e12


@dataclass(frozen=True)
class PenaltyParams:
    """Penalty-method hyperparameters (defaults match the simulation setup)."""
    c: float = 20.0            # initial-penalty multiplier, >> 1
    alpha1: float = 1e-6       # allocation step size
    alpha2: float = 1e-6       # auxiliary-variable step size
    n_per_update: int = 10     # iterations between penalty growth steps
    gamma_growth: float = 0.2  # penalty growth rate
    delta_stop: float = 1e-6   # convergence threshold on iterate movement
    max_iters: int = 200_000   # iteration cap per gradient run

    def __post_init__(self):
        if self.c < 1:
            raise ConfigurationError("penalty multiplier must be >= 1")
        if self.alpha1 <= 0 or self.alpha2 <= 0:
            raise ConfigurationError("step sizes must be positive")
        if self.n_per_update < 1:
            raise ConfigurationError("n_per_update must be >= 1")
        if self.gamma_growth <= 0:
            raise ConfigurationError("gamma_growth must be positive")
        if self.delta_stop <= 0:
            raise ConfigurationError("delta_stop must be positive")
        if self.max_iters < 1:
            raise ConfigurationError("max_iters must be >= 1")


@dataclass(frozen=True)
class BisectionSpec:
    lo: float = 1e-12
    hi: float = 1.0
    rel_tol: float = 1e-12

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ConfigurationError("bisection bracket requires lo < hi")
        if self.rel_tol <= 0:
            raise ConfigurationError("rel_tol must be positive")


def bisect_monotone(f, target: float, spec: BisectionSpec = BisectionSpec()) -> float:
    """Solve f(x) = target for monotone f, expanding the upper bracket as needed.

    Returns x with |f(x) - target| <= rel_tol * max(|target|, 1).  The upper
    end doubles from `spec.hi` until the target is bracketed (cap 1e12);
    failure to bracket raises NumericalError.
    """
    lo, hi = spec.lo, spec.hi
    f_lo, f_hi = f(lo), f(hi)
    increasing = f_hi >= f_lo
    tol = spec.rel_tol * max(abs(target), 1.0)

    def below(v):
        return v < target if increasing else v > target

    if below(f_hi):
        while below(f_hi):
            hi *= 2.0
            if hi > BRACKET_CAP:
                raise NumericalError(
                    f"bisection bracket expansion exhausted at hi={hi:g}; "
                    f"target {target:g} unreachable")
            f_hi = f(hi)
    elif below(f_lo) is False and not below(f_hi):
        # target below f(lo) for increasing f: not bracketed downward
        if (increasing and f_lo > target + tol) or (not increasing and f_lo < target - tol):
            raise NumericalError(f"target {target:g} below bracket at lo={lo:g}")
    x = 0.5 * (lo + hi)
    for _ in range(200):
        x = 0.5 * (lo + hi)
        v = f(x)
        if abs(v - target) <= tol:
            break
        if below(v):
            lo = x
        else:
            hi = x
    return x


def project_power_set(p: np.ndarray, caps: np.ndarray, total: float,
                      cycles: int = 100) -> np.ndarray:
    """Project onto {0 <= p_i <= caps_i} intersected with {sum p <= total}.

    Alternates the per-block clip with the radial rescale by total/sum
    (applied only when the budget is exceeded) until movement falls below
    1e-12 or the cycle cap.
    """
    out = np.array(p, dtype=np.float64).copy()
    kernels.pocs_power(out, np.asarray(caps, dtype=np.float64), float(total), cycles)
    return out


def project_rate_set(r: np.ndarray, caps: np.ndarray, floor_total: float,
                     cycles: int = 100) -> np.ndarray:
    """Project onto {0 <= r_i <= caps_i} intersected with {sum r >= floor_total}.

    Mirror of the power projector; the radial step scales up by
    floor_total/sum when the sum is short of the floor.
    """
    out = np.array(r, dtype=np.float64).copy()
    kernels.pocs_rate(out, np.asarray(caps, dtype=np.float64), float(floor_total), cycles)
    return out


def penalty_schedule(eta0: float, n: int, params: PenaltyParams) -> float:
    """Linearly grown penalty factor, stepped every n_per_update iterations."""
    if eta0 <= 0:
        raise ConfigurationError("eta0 must be positive")
    if n < 0:
        raise ConfigurationError("iteration index must be nonnegative")
    return eta0 * (1.0 + params.gamma_growth * (n // params.n_per_update))


def check_gradient(f, grad, x: np.ndarray, step: float = 1e-6) -> float:
    """Max relative error between analytic gradient and central differences."""
    x = np.asarray(x, dtype=np.float64)
    analytic = np.asarray(grad(x), dtype=np.float64)
    worst = 0.0
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = step
        fd = (f(x + e) - f(x - e)) / (2.0 * step)
        denom = max(abs(analytic[i]), abs(fd), 1.0)
        worst = max(worst, abs(fd - analytic[i]) / denom)
    return worst
