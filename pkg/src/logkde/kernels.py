"""Unit-variance kernels and the log-kernels they induce on (0, inf).

All six kernels are symmetric densities with zero mean and unit variance, so
a bandwidth ``h`` means the same amount of smoothing whichever kernel is
picked.  A kernel ``K`` on the real line induces the log-kernel

    L(x; z, h) = K((log x - log z) / h) / (x h),    x, z, h > 0,

which is a probability density on the positive half-line.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError

SQRT2 = math.sqrt(2.0)
SQRT3 = math.sqrt(3.0)
SQRT5 = math.sqrt(5.0)
SQRT6 = math.sqrt(6.0)
SQRT_2PI = math.sqrt(2.0 * math.pi)
SQRT_PI = math.sqrt(math.pi)

# logistic scale giving unit variance: s^2 pi^2 / 3 = 1
_LOGISTIC_SCALE = SQRT3 / math.pi


class KernelKind(str, enum.Enum):
    EPANECHNIKOV = "epanechnikov"
    GAUSSIAN = "gaussian"
    LAPLACE = "laplace"
    LOGISTIC = "logistic"
    TRIANGULAR = "triangular"
    UNIFORM = "uniform"

    def __str__(self):
        return self.value

    @property
    def compact(self) -> bool:
        return math.isfinite(kernel_constants(self).support_halfwidth)


KERNEL_NAMES = tuple(k.value for k in KernelKind)
_ALIASES = {"rectangular": KernelKind.UNIFORM}


def parse_kernel(name) -> KernelKind:
    """Resolve a kernel name (or an existing :class:`KernelKind`)."""
    if isinstance(name, KernelKind):
        return name
    key = str(name).strip().lower()
    if key in _ALIASES:
        return _ALIASES[key]
    try:
        return KernelKind(key)
    except ValueError:
        raise ConfigError(
            f"unknown kernel {name!r}; valid kernels are {', '.join(KERNEL_NAMES)}",
            field="kernel",
        ) from None


@dataclass(frozen=True)
class KernelConstants:
    l2_norm: float
    support_halfwidth: float  # math.inf for unbounded support


_CONSTANTS = {
    KernelKind.EPANECHNIKOV: KernelConstants(3.0 / (5.0 * SQRT5), SQRT5),
    KernelKind.GAUSSIAN: KernelConstants(1.0 / (2.0 * SQRT_PI), math.inf),
    KernelKind.LAPLACE: KernelConstants(1.0 / (2.0 * SQRT2), math.inf),
    KernelKind.LOGISTIC: KernelConstants(math.pi / (6.0 * SQRT3), math.inf),
    KernelKind.TRIANGULAR: KernelConstants(2.0 / (3.0 * SQRT6), SQRT6),
    KernelKind.UNIFORM: KernelConstants(1.0 / (2.0 * SQRT3), SQRT3),
}


def kernel_constants(kind) -> KernelConstants:
    """Roughness ``R(K) = int K^2`` and support half-width of a kernel."""
    return _CONSTANTS[parse_kernel(kind)]


def _epanechnikov(y):
    out = 3.0 * (5.0 - y * y) / (20.0 * SQRT5)
    return np.where(np.abs(y) < SQRT5, out, 0.0)


def _gaussian(y):
    return np.exp(-0.5 * y * y) / SQRT_2PI


def _laplace(y):
    return (SQRT2 / 2.0) * np.exp(-SQRT2 * np.abs(y))


def _logistic(y):
    # sech^2(t) = 4 e^{-2|t|} / (1 + e^{-2|t|})^2, stable for large |t|
    t = np.abs(y) / (2.0 * _LOGISTIC_SCALE)
    e = np.exp(-2.0 * t)
    return (math.pi / (4.0 * SQRT3)) * 4.0 * e / (1.0 + e) ** 2


def _triangular(y):
    a = np.abs(y)
    return np.where(a < SQRT6, (SQRT6 - a) / 6.0, 0.0)


def _uniform(y):
    return np.where(np.abs(y) < SQRT3, 1.0 / (2.0 * SQRT3), 0.0)


_KERNELS = {
    KernelKind.EPANECHNIKOV: _epanechnikov,
    KernelKind.GAUSSIAN: _gaussian,
    KernelKind.LAPLACE: _laplace,
    KernelKind.LOGISTIC: _logistic,
    KernelKind.TRIANGULAR: _triangular,
    KernelKind.UNIFORM: _uniform,
}


def kernel_function(kind):
    """Return the vectorized kernel ``K`` for ``kind``."""
    return _KERNELS[parse_kernel(kind)]


def kernel_eval(kind, y):
    """Evaluate ``K(y)``; accepts scalars or arrays.

    Compact kernels are exactly zero on and beyond the support edge.
    """
    out = _KERNELS[parse_kernel(kind)](np.asarray(y, dtype=float))
    return float(out) if out.ndim == 0 else out


def log_kernel_eval(kind, x, z, h):
    """Evaluate the log-kernel ``L(x; z, h) = K(log(x / z) / h) / (x h)``.

    Parameters
    ----------
    kind : KernelKind or str
    x : float or array_like
        Evaluation points, strictly positive.
    z : float or array_like
        Location (a data value), strictly positive.
    h : float
        Bandwidth on the log scale, strictly positive.
    """
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    if not (np.all(x > 0) and np.all(z > 0)):
        raise DomainError("log-kernel requires x > 0 and z > 0")
    if not (np.isfinite(h) and h > 0):
        raise DomainError(f"bandwidth must be positive and finite, got {h!r}")
    out = _KERNELS[parse_kernel(kind)]((np.log(x) - np.log(z)) / h) / (x * h)
    return float(out) if out.ndim == 0 else out


# Self-convolutions (K * K)(u) = int K(t) K(u - t) dt, used by the
# cross-validation criteria for the integrated squared estimate.

def _conv_epanechnikov(u):
    a = np.abs(u) / SQRT5
    out = (3.0 / 160.0) * (2.0 - a) ** 3 * (a * a + 6.0 * a + 4.0) / SQRT5
    return np.where(a < 2.0, out, 0.0)


def _conv_gaussian(u):
    return np.exp(-0.25 * u * u) / (2.0 * SQRT_PI)


def _conv_laplace(u):
    a = np.abs(u)
    return (SQRT2 / 4.0) * (1.0 + SQRT2 * a) * np.exp(-SQRT2 * a)


def _conv_logistic(u):
    t = np.abs(np.asarray(u, dtype=float)) / _LOGISTIC_SCALE
    small = t < 1e-2
    ts = np.where(small, 1.0, t)
    # e^{-t}-form of e^t((t-2)e^t + t + 2)/(e^t - 1)^3, safe for large t
    e = np.exp(-ts)
    big = ((ts - 2.0) + (ts + 2.0) * e) * e / (-np.expm1(-ts)) ** 3
    t2 = t * t
    series = 1.0 / 6.0 - t2 / 60.0 + t2 * t2 / 1008.0 - t2 ** 3 / 21600.0
    return np.where(small, series, big) / _LOGISTIC_SCALE


def _conv_triangular(u):
    a = np.abs(u) / SQRT6
    inner = 2.0 / 3.0 - a * a + 0.5 * a ** 3
    outer = (2.0 - a) ** 3 / 6.0
    out = np.where(a <= 1.0, inner, np.where(a < 2.0, outer, 0.0))
    return out / SQRT6


def _conv_uniform(u):
    a = np.abs(u)
    return np.where(a < 2.0 * SQRT3, (2.0 * SQRT3 - a) / 12.0, 0.0)


_CONVOLUTIONS = {
    KernelKind.EPANECHNIKOV: _conv_epanechnikov,
    KernelKind.GAUSSIAN: _conv_gaussian,
    KernelKind.LAPLACE: _conv_laplace,
    KernelKind.LOGISTIC: _conv_logistic,
    KernelKind.TRIANGULAR: _conv_triangular,
    KernelKind.UNIFORM: _conv_uniform,
}


def kernel_self_convolution(kind, u):
    """Evaluate ``(K * K)(u)``; equals ``R(K)`` at ``u = 0``."""
    return _CONVOLUTIONS[parse_kernel(kind)](np.asarray(u, dtype=float))
