"""Bandwidth selectors for the log-transformed estimator.

Every selector returns a bandwidth on the log scale.  Apart from ``logcv``
they work entirely on ``Y = log X``, so they are invariant under rescaling
the data (a shift on the log scale).  ``logcv`` cross-validates the
back-transformed estimate against the raw observations instead.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .errors import (
    BoundaryMinimumWarning,
    ConfigError,
    DegenerateSampleError,
    FallbackWarning,
    OptimizationError,
    UnsupportedError,
)
from .estimator import _kernel_sum, as_sample
from .kernels import (
    SQRT_2PI,
    SQRT_PI,
    KernelKind,
    kernel_constants,
    kernel_function,
    kernel_self_convolution,
    parse_kernel,
)
from .theory import lognormal_h_star

SELECTORS = ("nrd0", "nrd", "ucv", "bcv", "sj", "logg", "logcv")
SIGMA_METHODS = ("sample_sd", "robust_iqr", "min_of_both")

# IQR of the standard normal, 2 * Phi^{-1}(3/4)
NORMAL_IQR = 1.349

# pairs are computed exactly below this size, from binned data above it
EXACT_PAIR_LIMIT = 3000
PAIR_BINS = 1 << 15

CV_BRACKET = (0.05, 3.0)
AUDIT_POINTS = 100
LOGCV_QUAD_POINTS = 4096


def _sd(y):
    return float(np.std(y, ddof=1))


def _iqr(y):
    q1, q3 = np.percentile(y, [25.0, 75.0])
    return float(q3 - q1)


def _require(y, n_min=2):
    if y.size < n_min:
        raise DegenerateSampleError(f"need at least {n_min} observations, got {y.size}")
    if np.all(y == y[0]):
        raise DegenerateSampleError("all observations are identical")


def _rule_of_thumb(y, factor):
    _require(y)
    s = _sd(y)
    lo = min(s, _iqr(y) / 1.34)
    if lo <= 0:
        lo = s
    return factor * lo * y.size ** -0.2


def nrd0(y):
    """Silverman's rule ``0.9 min(sd, IQR/1.34) n^(-1/5)`` on a raw array."""
    return _rule_of_thumb(np.asarray(y, dtype=float), 0.9)


def nrd(y):
    """Scott's variant with leading constant 1.06, on a raw array."""
    return _rule_of_thumb(np.asarray(y, dtype=float), 1.06)


def bw_nrd0(sample) -> float:
    return nrd0(as_sample(sample).log_values)


def bw_nrd(sample) -> float:
    return nrd(as_sample(sample).log_values)


@dataclass(frozen=True)
class SigmaEstimate:
    value: float
    method: str = "sample_sd"

    def __post_init__(self):
        if not (self.value > 0 and math.isfinite(self.value)):
            raise DegenerateSampleError(f"sigma estimate must be positive, got {self.value!r}")


def estimate_sigma(sample, method: str = "sample_sd") -> SigmaEstimate:
    """Estimate the log-scale standard deviation.

    ``robust_iqr`` divides the interquartile range of the log data by 1.349,
    which is consistent for normal log data.
    """
    y = as_sample(sample).log_values
    _require(y)
    if method == "sample_sd":
        value = _sd(y)
    elif method == "robust_iqr":
        value = _iqr(y) / NORMAL_IQR
    elif method == "min_of_both":
        value = min(_sd(y), _iqr(y) / NORMAL_IQR)
    else:
        raise ConfigError(f"unknown sigma method {method!r}; expected one of {SIGMA_METHODS}",
                          field="sigma")
    return SigmaEstimate(value, method)


def bw_logG(sample, sigma=None) -> float:
    """Log-normal reference plug-in bandwidth (see :func:`lognormal_h_star`)."""
    sample = as_sample(sample)
    _require(sample.log_values)
    if sigma is None:
        sigma = estimate_sigma(sample)
    elif not isinstance(sigma, SigmaEstimate):
        sigma = SigmaEstimate(float(sigma), "given")
    return lognormal_h_star(sigma.value, sample.n)


# -- pairwise differences -------------------------------------------------


@dataclass(frozen=True, eq=False)
class _Pairs:
    """Distinct unordered pairs of log data, possibly binned.

    ``dist`` holds |Y_i - Y_j|, ``count`` the number of pairs at that
    distance and ``inv`` the summed 1/X_i + 1/X_j over those pairs.
    """

    n: int
    dist: np.ndarray
    count: np.ndarray
    inv: np.ndarray


def _xcorr(a, b):
    """``out[k] = sum_j a[j] * b[j + k]`` for ``k >= 0``."""
    m = a.size
    fa = np.fft.rfft(a, 2 * m)
    fb = np.fft.rfft(b, 2 * m)
    return np.fft.irfft(np.conj(fa) * fb, 2 * m)[:m]


def _pairs(sample, exact_limit=EXACT_PAIR_LIMIT):
    y = sample.log_values
    r = 1.0 / sample.values
    n = y.size
    if n <= exact_limit:
        i, j = np.triu_indices(n, k=1)
        return _Pairs(n, np.abs(y[i] - y[j]), np.ones(i.size), r[i] + r[j])
    lo, hi = y.min(), y.max()
    m = PAIR_BINS
    delta = (hi - lo) / (m - 1)
    idx = np.rint((y - lo) / delta).astype(np.int64)
    c = np.bincount(idx, minlength=m).astype(float)
    s = np.bincount(idx, weights=r, minlength=m)
    count = np.rint(_xcorr(c, c))
    inv = _xcorr(s, c) + _xcorr(c, s)
    count[0] = (np.sum(c * c) - n) / 2.0
    inv[0] = np.sum(s * (c - 1.0))
    keep = count > 0
    return _Pairs(n, np.arange(m)[keep] * delta, count[keep], inv[keep])


# -- cross-validation criteria ---------------------------------------------


def _ucv(pairs, kind, h):
    n = pairs.n
    R = kernel_constants(kind).l2_norm
    u = pairs.dist / h
    s1 = np.dot(pairs.count, kernel_self_convolution(kind, u))
    s2 = np.dot(pairs.count, kernel_function(kind)(u))
    return (n * R + 2.0 * s1) / (n * n * h) - 4.0 * s2 / (n * (n - 1) * h)


def _bcv(pairs, kind, h):
    # R(f'') is estimated with gaussian pairwise terms whatever the kernel;
    # all kernels share unit variance so the bias constant is 1.
    n = pairs.n
    R = kernel_constants(kind).l2_norm
    u2 = (pairs.dist / h) ** 2
    s = np.dot(pairs.count, np.exp(-u2 / 4.0) * (u2 * u2 - 12.0 * u2 + 12.0))
    return R / (n * h) + s / (64.0 * SQRT_PI * n * (n - 1) * h)


def _logcv_tail(kind):
    halfwidth = kernel_constants(kind).support_halfwidth
    if math.isfinite(halfwidth):
        return halfwidth
    return {KernelKind.GAUSSIAN: 8.5, KernelKind.LOGISTIC: 16.0, KernelKind.LAPLACE: 20.0}[kind]


def _logcv(sample, pairs, kind, h):
    n = sample.n
    y = sample.log_values
    K = kernel_function(kind)
    pad = _logcv_tail(kind) * h
    nodes = np.linspace(y.min() - pad, y.max() + pad, LOGCV_QUAD_POINTS)
    fy = _kernel_sum(K, nodes, y, h) / (n * h)
    # int f_log(x)^2 dx = int f_Y(y)^2 exp(-y) dy
    integral = np.trapezoid(fy * fy * np.exp(-nodes), nodes)
    loo = np.dot(pairs.inv, K(pairs.dist / h)) / (n * (n - 1) * h)
    return integral - 2.0 * loo


def cv_criterion(sample, selector: str, kernel="gaussian"):
    """Return the criterion ``h -> CV(h)`` minimized by a CV-type selector."""
    sample = as_sample(sample)
    _require(sample.log_values)
    kind = parse_kernel(kernel)
    pairs = _pairs(sample)
    if selector == "ucv":
        return lambda h: float(_ucv(pairs, kind, h))
    if selector == "bcv":
        return lambda h: float(_bcv(pairs, kind, h))
    if selector == "logcv":
        return lambda h: float(_logcv(sample, pairs, kind, h))
    raise ConfigError(f"{selector!r} is not a cross-validation selector", field="bw")


def cv_bracket(sample):
    ref = bw_nrd0(sample)
    return CV_BRACKET[0] * ref, CV_BRACKET[1] * ref


def audit_grid(lo, hi, points=AUDIT_POINTS):
    return np.exp(np.linspace(math.log(lo), math.log(hi), points))


@dataclass(frozen=True)
class CVResult:
    h: float
    value: float
    at_boundary: bool


def minimize_criterion(crit, lo, hi) -> CVResult:
    """Minimize ``crit`` over ``[lo, hi]``.

    The 100-point log-spaced audit grid is scanned first and the best cell is
    refined with bounded Brent search in log h; the result is never worse
    than any audit point.
    """
    grid = audit_grid(lo, hi)
    values = np.array([crit(h) for h in grid])
    if not np.any(np.isfinite(values)):
        raise OptimizationError("criterion is not finite anywhere in the bracket")
    values[~np.isfinite(values)] = np.inf
    k = int(np.argmin(values))
    best_h, best_v = grid[k], values[k]
    a = math.log(grid[max(k - 1, 0)])
    b = math.log(grid[min(k + 1, grid.size - 1)])
    res = optimize.minimize_scalar(lambda t: crit(math.exp(t)), bounds=(a, b),
                                   method="bounded", options={"xatol": 1e-10})
    if res.success and np.isfinite(res.fun) and res.fun < best_v:
        best_h, best_v = math.exp(res.x), float(res.fun)
    at_boundary = k in (0, grid.size - 1)
    return CVResult(float(best_h), float(best_v), at_boundary)


def _cv_select(sample, selector, kernel):
    sample = as_sample(sample)
    crit = cv_criterion(sample, selector, kernel)
    res = minimize_criterion(crit, *cv_bracket(sample))
    if res.at_boundary:
        warnings.warn(f"{selector} criterion minimized at the search boundary (h={res.h:.6g})",
                      BoundaryMinimumWarning, stacklevel=3)
    return res.h


def bw_ucv(sample, kernel="gaussian") -> float:
    """Unbiased (least-squares) cross-validation on the log data."""
    return _cv_select(sample, "ucv", kernel)


def bw_bcv(sample, kernel="gaussian") -> float:
    """Biased cross-validation on the log data."""
    return _cv_select(sample, "bcv", kernel)


def bw_logcv(sample, kernel="gaussian") -> float:
    """Unbiased cross-validation of the back-transformed estimate.

    Minimizes ``int f_log^2 dx - (2/n) sum_i f_log,-i(X_i)``, the integral
    taken by trapezoid quadrature on the log scale.
    """
    return _cv_select(sample, "logcv", kernel)


# -- Sheather-Jones --------------------------------------------------------


def _psi4(pairs, a):
    u2 = (pairs.dist / a) ** 2
    s = np.dot(pairs.count, np.exp(-u2 / 2.0) * (u2 * u2 - 6.0 * u2 + 3.0))
    n = pairs.n
    return (2.0 * s + 3.0 * n) / (n * (n - 1) * a ** 5 * SQRT_2PI)


def _psi6(pairs, b):
    u2 = (pairs.dist / b) ** 2
    s = np.dot(pairs.count, np.exp(-u2 / 2.0) * (u2 ** 3 - 15.0 * u2 * u2 + 45.0 * u2 - 15.0))
    n = pairs.n
    return (2.0 * s - 15.0 * n) / (n * (n - 1) * b ** 7 * SQRT_2PI)


@dataclass(frozen=True)
class SJResult:
    h: float
    residual: float
    fallback: bool


def sj_equation(sample):
    """Return ``h -> rhs(h) - h`` for the solve-the-equation rule."""
    sample = as_sample(sample)
    y = sample.log_values
    _require(y, 3)
    pairs = _pairs(sample)
    n = pairs.n
    scale = min(_sd(y), _iqr(y) / NORMAL_IQR) or _sd(y)
    a = 1.24 * scale * n ** (-1.0 / 7.0)
    b = 1.23 * scale * n ** (-1.0 / 9.0)
    c1 = 1.0 / (2.0 * SQRT_PI * n)
    td = -_psi6(pairs, b)
    alpha2 = 1.357 * (_psi4(pairs, a) / td) ** (1.0 / 7.0)

    def residual(h):
        return (c1 / _psi4(pairs, alpha2 * h ** (5.0 / 7.0))) ** 0.2 - h

    def direct_plugin():
        return (c1 / _psi4(pairs, (2.394 / (n * td)) ** (1.0 / 7.0))) ** 0.2

    return residual, scale, direct_plugin


def sheather_jones(sample) -> SJResult:
    residual, scale, direct_plugin = sj_equation(sample)
    n = as_sample(sample).n
    hmax = 1.144 * scale * n ** -0.2
    lo, hi = 0.1 * hmax, hmax
    with np.errstate(all="ignore"):
        for attempt in range(100):
            flo, fhi = residual(lo), residual(hi)
            if np.isfinite(flo) and np.isfinite(fhi) and flo * fhi <= 0:
                h = optimize.brentq(residual, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps,
                                    maxiter=500)
                return SJResult(h, abs(residual(h)), False)
            if attempt % 2:
                lo /= 1.2
            else:
                hi *= 1.2
        h = direct_plugin()
    if not (np.isfinite(h) and h > 0):
        raise OptimizationError("Sheather-Jones equation has no root and the plug-in failed")
    warnings.warn("Sheather-Jones root not bracketed; using the direct plug-in value",
                  FallbackWarning, stacklevel=3)
    return SJResult(float(h), float("nan"), True)


def bw_sj(sample) -> float:
    """Sheather-Jones solve-the-equation bandwidth (gaussian kernel) on log data."""
    return sheather_jones(sample).h


# -- bandwidth specifications ----------------------------------------------


@dataclass(frozen=True)
class BandwidthSpec:
    """Either a fixed bandwidth or the name of a selector."""

    selector: str = "nrd0"
    value: float | None = None

    def __post_init__(self):
        if self.selector == "fixed":
            if self.value is None or not (self.value > 0 and math.isfinite(self.value)):
                raise ConfigError(f"fixed bandwidth must be positive, got {self.value!r}",
                                  field="bw")
        elif self.selector not in SELECTORS:
            raise ConfigError(
                f"unknown bandwidth selector {self.selector!r}; valid selectors are "
                f"{', '.join(SELECTORS)} or fixed:<value>", field="bw")

    @classmethod
    def parse(cls, text) -> "BandwidthSpec":
        if isinstance(text, BandwidthSpec):
            return text
        if isinstance(text, (int, float)):
            return cls("fixed", float(text))
        key = str(text).strip()
        if key.lower().startswith("fixed:"):
            try:
                return cls("fixed", float(key.split(":", 1)[1]))
            except ValueError:
                raise ConfigError(f"cannot parse fixed bandwidth {key!r}", field="bw") from None
        key = key.lower()
        if key.startswith("bw."):
            key = key[3:]
        return cls(key)

    def __str__(self):
        return f"fixed:{self.value:g}" if self.selector == "fixed" else self.selector

    def resolve(self, sample, kernel="gaussian") -> float:
        """Compute the log-scale bandwidth for ``sample``."""
        if self.selector == "fixed":
            return float(self.value)
        kind = parse_kernel(kernel)
        if self.selector == "sj" and kind is not KernelKind.GAUSSIAN:
            raise UnsupportedError(f"sj bandwidth is only defined for the gaussian kernel, "
                                   f"not {kind.value}")
        return _DISPATCH[self.selector](as_sample(sample), kind)


_DISPATCH = {
    "nrd0": lambda s, k: bw_nrd0(s),
    "nrd": lambda s, k: bw_nrd(s),
    "ucv": bw_ucv,
    "bcv": bw_bcv,
    "sj": lambda s, k: bw_sj(s),
    "logg": lambda s, k: bw_logG(s),
    "logcv": bw_logcv,
}


def select_bandwidth(sample, spec="nrd0", kernel="gaussian") -> float:
    return BandwidthSpec.parse(spec).resolve(sample, kernel)
