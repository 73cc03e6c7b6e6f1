"""Leading-order error theory for the log-transformed estimator.

Writing ``B(x) = f(x) + 3x f'(x) + x^2 f''(x)`` for a target density ``f``
on (0, inf), the pointwise leading terms are

    bias(x)     = h^2 B(x) / 2
    variance(x) = f(x) R(K) / (n h x)

and integrating gives

    AMISE(h) = R(K) E[1/X] / (n h) + h^4 / 4 * int_0^inf B(x)^2 dx.

All remainders are dropped; reports carry ``order="leading"``.  Note that
``B(x) = f_Y''(log x) / x`` where ``f_Y`` is the density of ``log X``.
"""

from __future__ import annotations

import math
import re
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, special, stats

from .errors import ConfigError, DivergentFunctionalError, DomainError, UnsupportedError
from .kernels import kernel_constants

_FD_STEP = 1e-5
_CUSTOM_EPSREL = 1e-6


@dataclass(frozen=True, eq=False)
class TargetDensity:
    """A reference density on (0, inf) with first and second derivatives.

    Use :meth:`lognormal`, :meth:`chi_squared` or :meth:`custom` rather than
    the raw constructor.
    """

    family: str
    params: tuple
    f: Callable
    f1: Callable
    f2: Callable
    lower: float = 0.0
    upper: float = math.inf
    dist: object = field(default=None, repr=False)

    @property
    def name(self) -> str:
        if self.family == "custom":
            return self.params[0] if self.params else "custom"
        return f"{self.family}({','.join(f'{p:g}' for p in self.params)})"

    def __str__(self):
        return self.name

    # -- constructors ------------------------------------------------------

    @classmethod
    def lognormal(cls, mu: float = 0.0, sigma: float = 1.0) -> "TargetDensity":
        if not (sigma > 0 and math.isfinite(sigma) and math.isfinite(mu)):
            raise DomainError(f"lognormal needs finite mu and sigma > 0, got ({mu!r}, {sigma!r})")

        def f(x):
            x = np.asarray(x, dtype=float)
            t = (np.log(x) - mu) / sigma
            return np.exp(-0.5 * t * t) / (x * sigma * math.sqrt(2.0 * math.pi))

        def f1(x):
            x = np.asarray(x, dtype=float)
            t = (np.log(x) - mu) / sigma
            return -f(x) * (1.0 + t / sigma) / x

        def f2(x):
            x = np.asarray(x, dtype=float)
            t = (np.log(x) - mu) / sigma
            g = 1.0 + t / sigma
            return f(x) * (g * g + g - 1.0 / sigma ** 2) / (x * x)

        return cls("lognormal", (float(mu), float(sigma)), f, f1, f2,
                   dist=stats.lognorm(s=sigma, scale=math.exp(mu)))

    @classmethod
    def chi_squared(cls, k: int) -> "TargetDensity":
        if int(k) != k or k < 1:
            raise DomainError(f"chi-squared degrees of freedom must be a positive integer, got {k!r}")
        k = int(k)
        a = k / 2.0 - 1.0
        log_norm = (k / 2.0) * math.log(2.0) + special.gammaln(k / 2.0)

        def f(x):
            x = np.asarray(x, dtype=float)
            return np.exp(a * np.log(x) - x / 2.0 - log_norm)

        def f1(x):
            x = np.asarray(x, dtype=float)
            return f(x) * (a / x - 0.5)

        def f2(x):
            x = np.asarray(x, dtype=float)
            g = a / x - 0.5
            return f(x) * (g * g - a / (x * x))

        return cls("chi_squared", (k,), f, f1, f2, dist=stats.chi2(k))

    @classmethod
    def custom(cls, f, f1=None, f2=None, name="custom", lower=0.0, upper=math.inf):
        """Wrap a user density; missing derivatives use central differences."""
        if f1 is None:
            def f1(x):
                x = np.asarray(x, dtype=float)
                d = _FD_STEP * x
                return (f(x + d) - f(x - d)) / (2.0 * d)
        if f2 is None:
            def f2(x):
                x = np.asarray(x, dtype=float)
                d = _FD_STEP * x
                return (f(x + d) - 2.0 * f(x) + f(x - d)) / (d * d)
        return cls("custom", (name,), f, f1, f2, float(lower), float(upper))

    # -- distribution helpers ------------------------------------------------

    def cdf(self, x):
        if self.dist is not None:
            return self.dist.cdf(x)
        return integrate.quad(lambda t: float(self.f(t)), self.lower, x, limit=200)[0]

    def ppf(self, q):
        if self.dist is None:
            raise UnsupportedError("quantiles are only available for named families")
        return self.dist.ppf(q)

    def draw(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if self.family == "lognormal":
            mu, sigma = self.params
            return np.exp(mu + sigma * rng.standard_normal(n))
        if self.family == "chi_squared":
            return rng.chisquare(self.params[0], n)
        raise UnsupportedError(f"cannot sample from custom target {self.name!r}")


_TARGET_RE = re.compile(r"^\s*([a-z_]+)\s*\(([^)]*)\)\s*$", re.IGNORECASE)


def parse_target(text) -> TargetDensity:
    """Parse ``lognormal(mu,sigma)`` or ``chisq(k)`` (also ``chi_squared(k)``)."""
    if isinstance(text, TargetDensity):
        return text
    m = _TARGET_RE.match(str(text))
    if not m:
        raise ConfigError(f"cannot parse target {text!r}; expected e.g. lognormal(0,1) or chisq(10)",
                          field="target")
    family = m.group(1).lower()
    try:
        args = [float(a) for a in m.group(2).split(",") if a.strip()]
    except ValueError:
        raise ConfigError(f"non-numeric parameter in {text!r}", field="target") from None
    if family in ("lognormal", "lnorm") and len(args) == 2:
        return TargetDensity.lognormal(*args)
    if family in ("chisq", "chi_squared", "chi2") and len(args) == 1:
        return TargetDensity.chi_squared(args[0])
    raise ConfigError(f"unknown target {text!r}; expected lognormal(mu,sigma) or chisq(k)",
                      field="target")


# -- pointwise leading terms -------------------------------------------------


def bias_bracket(target: TargetDensity, x):
    """``f(x) + 3x f'(x) + x^2 f''(x)``."""
    x = np.asarray(x, dtype=float)
    out = target.f(x) + 3.0 * x * target.f1(x) + x * x * target.f2(x)
    if not np.all(np.isfinite(out)):
        raise DomainError(f"derivatives of {target.name} are not finite at the requested points")
    return out


def _check_x(x):
    if not np.all(np.asarray(x) > 0):
        raise DomainError("evaluation point must be > 0")


def bias_approx(target, x, h):
    """Leading bias term ``h^2 B(x) / 2``."""
    _check_x(x)
    if h < 0:
        raise DomainError("bandwidth must be >= 0")
    out = 0.5 * h * h * bias_bracket(target, x)
    return float(out) if np.ndim(out) == 0 else out


def variance_approx(target, x, h, n, kernel="gaussian"):
    """Leading variance term ``f(x) R(K) / (n h x)``."""
    _check_x(x)
    if h <= 0 or n < 1:
        raise DomainError("need h > 0 and n >= 1")
    x = np.asarray(x, dtype=float)
    out = target.f(x) * kernel_constants(kernel).l2_norm / (n * h * x)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class AsymptoticReport:
    point: float
    h: float
    n: int
    bias: float
    variance: float
    mse: float
    order: str = "leading"


def mse_approx(target, x, h, n, kernel="gaussian") -> AsymptoticReport:
    b = bias_approx(target, x, h)
    v = variance_approx(target, x, h, n, kernel)
    return AsymptoticReport(float(x), float(h), int(n), b, v, v + b * b)


# -- integrated functionals ----------------------------------------------------


def _quad(fun, a, b, what, epsabs=1e-10, epsrel=1e-12):
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, _ = integrate.quad(fun, a, b, epsabs=epsabs, epsrel=epsrel, limit=500)
        except integrate.IntegrationWarning as exc:
            raise DivergentFunctionalError(f"{what} did not converge: {exc}") from None
    if not math.isfinite(val):
        raise DivergentFunctionalError(f"{what} is not finite")
    return val


def _log_range(target):
    lo = math.log(target.lower) if target.lower > 0 else -math.inf
    hi = math.log(target.upper) if math.isfinite(target.upper) else math.inf
    return lo, hi


def _at_log(target, y, fn):
    """``fn(exp(y))``, taken as 0 where the density underflows or x overflows."""
    try:
        x = math.exp(y)
    except OverflowError:
        return 0.0
    if x == 0.0 or float(target.f(x)) == 0.0:
        return 0.0
    with np.errstate(over="ignore", invalid="ignore"):
        return fn(x)


def inverse_mean(target: TargetDensity) -> float:
    """``E[1/X]``."""
    if target.family == "lognormal":
        mu, sigma = target.params
        return math.exp(0.5 * sigma * sigma - mu)
    if target.family == "chi_squared":
        k = target.params[0]
        if k <= 2:
            raise DivergentFunctionalError(f"E[1/X] is infinite for chi-squared({k})")
        return 1.0 / (k - 2)
    # int f(x)/x dx = int f(e^y) dy
    lo, hi = _log_range(target)
    return _quad(lambda y: _at_log(target, y, lambda x: float(target.f(x))), lo, hi, "E[1/X]")


def roughness(target: TargetDensity) -> float:
    """``int_0^inf B(x)^2 dx``, integrated on the log scale."""

    def integrand(y):
        x = math.exp(y)
        return float(bias_bracket(target, x)) ** 2 * x

    if target.family == "lognormal":
        mu, sigma = target.params
        return _quad(integrand, mu - 8.0 * sigma, mu + 8.0 * sigma, "roughness functional")
    if target.family == "chi_squared":
        k = target.params[0]
        if k < 3:
            raise DivergentFunctionalError(f"roughness functional is infinite for chi-squared({k})")
        mid = math.log(k)
        hi = math.log(k + 80.0 * math.sqrt(2.0 * k))
        # integrand ~ x^(k-1) near the origin
        return (_quad(integrand, -40.0, mid, "roughness functional")
                + _quad(integrand, mid, hi, "roughness functional"))
    lo, hi = _log_range(target)
    # finite-difference derivatives carry ~1e-6 relative noise
    return _quad(lambda y: _at_log(target, y, lambda x: integrand(math.log(x))), lo, hi,
                 "roughness functional", epsrel=_CUSTOM_EPSREL)


def amise(target, h, n, kernel="gaussian") -> float:
    if h <= 0 or n < 1:
        raise DomainError("need h > 0 and n >= 1")
    R = kernel_constants(kernel).l2_norm
    return R * inverse_mean(target) / (n * h) + 0.25 * h ** 4 * roughness(target)


def h_star(target, n, kernel="gaussian") -> float:
    """AMISE-optimal bandwidth ``[R(K) E[1/X] / int B^2]^(1/5) n^(-1/5)``."""
    R = kernel_constants(kernel).l2_norm
    return (R * inverse_mean(target) / roughness(target)) ** 0.2 * n ** -0.2


def j_functional(target) -> float:
    """``(E[1/X]^4 int B^2)^(1/5)``."""
    return (inverse_mean(target) ** 4 * roughness(target)) ** 0.2


def amise_min(target, n, kernel="gaussian") -> float:
    """Minimum AMISE ``(5/4) R(K)^(4/5) J n^(-4/5)``."""
    R = kernel_constants(kernel).l2_norm
    return 1.25 * R ** 0.8 * j_functional(target) * n ** -0.8


def lognormal_h_star(sigma: float, n: int) -> float:
    """AMISE-optimal log-scale bandwidth for a log-normal target, gaussian kernel.

    ``h* = [16 exp(sigma^2/4) / (sigma^4 + 4 sigma^2 + 12)]^(1/5) sigma n^(-1/5)``;
    it tends to Silverman's ``(4/3)^(1/5) sigma n^(-1/5)`` as sigma -> 0.
    """
    if not (sigma > 0 and math.isfinite(sigma)):
        raise DomainError(f"sigma must be positive, got {sigma!r}")
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n!r}")
    s2 = sigma * sigma
    return (16.0 * math.exp(s2 / 4.0) / (s2 * s2 + 4.0 * s2 + 12.0)) ** 0.2 * sigma * n ** -0.2


def lognormal_j(sigma: float, mu: float = 0.0) -> float:
    """Closed-form J functional of a log-normal target."""
    s2 = sigma * sigma
    return 0.5 * math.exp(9.0 * s2 / 20.0 - mu) * (s2 * s2 + 4.0 * s2 + 12.0) ** 0.2 / (
        math.pi ** 0.1 * sigma)


def lognormal_amise_min(sigma: float, n: int, mu: float = 0.0) -> float:
    """Closed-form minimum AMISE for a log-normal target, gaussian kernel."""
    R = 1.0 / (2.0 * math.sqrt(math.pi))
    return 1.25 * R ** 0.8 * lognormal_j(sigma, mu) * n ** -0.8
