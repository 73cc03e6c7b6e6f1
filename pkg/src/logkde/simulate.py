"""Monte Carlo comparison of density estimators by MISE and MIAE.

Each (target, n, replicate) cell draws one sample from its own random stream,
seeded from ``(seed, target index, n, replicate)``; every estimator in the
study is fitted to that same sample.  Results therefore do not depend on the
order of the estimator list or on how cells are scheduled.
"""

from __future__ import annotations

import csv
import io
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from .bandwidth import BandwidthSpec, nrd, nrd0
from .errors import ConfigError, DomainError, LogKDEError
from .estimator import EvaluationGrid, FftConfig, Sample, log_kde, naive_kde_direct
from .kernels import parse_kernel
from .theory import TargetDensity, parse_target

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

GENERATOR = "numpy.random.PCG64 via SeedSequence(seed, spawn_key=(target_index, n, replicate))"
MIN_COVERAGE = 0.999
MAX_FAILURE_RATE = 0.10
CSV_COLUMNS = ("target", "n", "estimator", "kernel", "bandwidth_rule",
               "mise_mean", "mise_se", "miae_mean", "miae_se", "replicates")

_NAIVE_RULES = {"nrd0": nrd0, "nrd": nrd}


def cell_rng(seed: int, target_index: int, n: int, replicate: int) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=(target_index, n, replicate))
    return np.random.Generator(np.random.PCG64(ss))


def sample_target(target, n: int, seed) -> Sample:
    """Draw ``n`` observations; ``seed`` is an int or a ``Generator``."""
    target = parse_target(target)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return Sample(target.draw(n, rng))


def integration_grid(target, points=2048, q_lo=1e-4, q_hi=1.0 - 1e-4) -> EvaluationGrid:
    """Geometric grid between two quantiles of ``target``."""
    target = parse_target(target)
    return EvaluationGrid.span(float(target.ppf(q_lo)), float(target.ppf(q_hi)), points)


def _check_coverage(grid, target):
    x = grid.points
    mass = float(target.cdf(x[-1]) - target.cdf(x[0]))
    if mass < MIN_COVERAGE:
        raise DomainError(f"integration grid covers {mass:.5f} of {target.name}, "
                          f"need at least {MIN_COVERAGE}")


def estimate_ise(estimate, target) -> float:
    """Trapezoidal integrated squared error over the estimate's grid."""
    target = parse_target(target)
    _check_coverage(estimate.grid, target)
    x = estimate.grid.points
    return float(np.trapezoid((estimate.density - target.f(x)) ** 2, x))


def estimate_iae(estimate, target) -> float:
    """Trapezoidal integrated absolute error over the estimate's grid."""
    target = parse_target(target)
    _check_coverage(estimate.grid, target)
    x = estimate.grid.points
    return float(np.trapezoid(np.abs(estimate.density - target.f(x)), x))


@dataclass(frozen=True)
class EstimatorSpec:
    estimator: str = "log_kde"
    kernel: str = "gaussian"
    bw: BandwidthSpec = field(default_factory=BandwidthSpec)
    method: str = "direct"

    def __post_init__(self):
        object.__setattr__(self, "kernel", parse_kernel(self.kernel).value)
        object.__setattr__(self, "bw", BandwidthSpec.parse(self.bw))
        if self.estimator not in ("log_kde", "naive_kde"):
            raise ConfigError(f"unknown estimator {self.estimator!r}; expected log_kde or naive_kde",
                              field="estimator")
        if self.method not in ("direct", "fft"):
            raise ConfigError(f"unknown method {self.method!r}", field="method")
        if self.estimator == "naive_kde":
            if self.bw.selector != "fixed" and self.bw.selector not in _NAIVE_RULES:
                raise ConfigError(f"naive_kde supports bw nrd0, nrd or fixed:<h>, not {self.bw}",
                                  field="bw")
            if self.method != "direct":
                raise ConfigError("naive_kde has only the direct method", field="method")

    @property
    def label(self):
        return f"{self.estimator}/{self.kernel}/{self.bw}"

    def fit(self, sample: Sample, grid: EvaluationGrid, fft: FftConfig | None = None):
        if self.estimator == "naive_kde":
            rule = _NAIVE_RULES.get(self.bw.selector)
            h = self.bw.value if rule is None else rule(sample.values)
            return naive_kde_direct(sample, grid, self.kernel, h)
        h = self.bw.resolve(sample, self.kernel)
        return log_kde(sample, grid, self.kernel, h, self.method, fft)


DEFAULT_ESTIMATORS = (
    EstimatorSpec("log_kde", "gaussian", "nrd0"),
    EstimatorSpec("log_kde", "gaussian", "logg"),
    EstimatorSpec("naive_kde", "gaussian", "nrd0"),
)


@dataclass(frozen=True)
class SimulationConfig:
    targets: tuple = ("lognormal(0,1)", "chisq(10)", "chisq(1)")
    sample_sizes: tuple = (50, 200, 800)
    replicates: int = 200
    estimators: tuple = DEFAULT_ESTIMATORS
    seed: int = 20181015
    grid_points: int = 2048
    quantiles: tuple = (1e-4, 1.0 - 1e-4)

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(parse_target(t) for t in self.targets))
        object.__setattr__(self, "estimators", tuple(
            e if isinstance(e, EstimatorSpec) else EstimatorSpec(**e) for e in self.estimators))
        object.__setattr__(self, "sample_sizes", tuple(int(n) for n in self.sample_sizes))
        if not self.targets:
            raise ConfigError("at least one target is required", field="targets")
        if not self.estimators:
            raise ConfigError("at least one estimator is required", field="estimators")
        if not self.sample_sizes or min(self.sample_sizes) < 2:
            raise ConfigError("sample sizes must all be >= 2", field="sample_sizes")
        if int(self.replicates) != self.replicates or self.replicates < 2:
            raise ConfigError(f"must be an integer >= 2, got {self.replicates!r}", field="replicates")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2 ** 64:
            raise ConfigError(f"must be a 64-bit unsigned integer, got {self.seed!r}", field="seed")
        if self.grid_points < 2:
            raise ConfigError("must be >= 2", field="grid_points")
        for t in self.targets:
            if t.dist is None:
                raise ConfigError(f"cannot simulate from custom target {t.name}", field="targets")

    def grid_for(self, target) -> EvaluationGrid:
        return integration_grid(target, self.grid_points, *self.quantiles)

    def describe(self):
        """``(key, value)`` lines echoed at the top of result files."""
        return [
            ("generator", GENERATOR),
            ("seed", str(self.seed)),
            ("replicates", str(self.replicates)),
            ("sample_sizes", " ".join(str(n) for n in self.sample_sizes)),
            ("targets", " ".join(t.name for t in self.targets)),
            ("estimators", " ".join(e.label + ("" if e.method == "direct" else ":fft")
                                    for e in self.estimators)),
            ("integration_grid", f"{self.grid_points} geometric points, quantiles "
                                 f"{self.quantiles[0]:g}-{self.quantiles[1]:g}"),
        ]


def load_config(path) -> SimulationConfig:
    """Read a TOML study description."""
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return config_from_mapping(raw)


_CONFIG_KEYS = {"seed", "replicates", "sample_sizes", "targets", "estimators",
                "grid_points", "quantiles"}


def config_from_mapping(raw) -> SimulationConfig:
    if "seed" not in raw:
        raise ConfigError("required field is missing", field="seed")
    unknown = set(raw) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown field(s) {', '.join(sorted(unknown))}", field="config")
    kwargs = dict(raw)
    if "estimators" in kwargs:
        specs = []
        for i, e in enumerate(kwargs["estimators"]):
            if not isinstance(e, dict):
                raise ConfigError("each estimator must be a table", field=f"estimators[{i}]")
            extra = set(e) - {"estimator", "kernel", "bw", "method"}
            if extra:
                raise ConfigError(f"unknown key(s) {', '.join(sorted(extra))}",
                                  field=f"estimators[{i}]")
            specs.append(EstimatorSpec(**e))
        kwargs["estimators"] = specs
    try:
        return SimulationConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc), field="config") from None


@dataclass(frozen=True)
class CellResult:
    target: str
    n: int
    estimator: str
    kernel: str
    bandwidth_rule: str
    mise_mean: float
    mise_se: float
    miae_mean: float
    miae_se: float
    replicates: int
    failures: int = 0

    @property
    def valid(self):
        return self.failures <= MAX_FAILURE_RATE * (self.replicates + self.failures)


@dataclass(frozen=True)
class SimulationResult:
    config: SimulationConfig
    cells: tuple

    def cell(self, target, n, estimator_label):
        for c in self.cells:
            if c.target == str(target) and c.n == n and \
                    f"{c.estimator}/{c.kernel}/{c.bandwidth_rule}" == estimator_label:
                return c
        raise KeyError((target, n, estimator_label))

    def to_csv(self) -> str:
        out = io.StringIO()
        for key, value in self.config.describe():
            out.write(f"# {key}={value}\n")
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for c in self.cells:
            row = [c.target, str(c.n), c.estimator, c.kernel, c.bandwidth_rule]
            if c.valid:
                row += [repr(c.mise_mean), repr(c.mise_se), repr(c.miae_mean), repr(c.miae_se)]
            else:
                row += ["nan"] * 4
            row.append(str(c.replicates))
            writer.writerow(row)
        return out.getvalue()


def _summary(values):
    v = np.asarray(values)
    if v.size == 0:
        return math.nan, math.nan
    se = float(np.std(v, ddof=1) / math.sqrt(v.size)) if v.size > 1 else math.nan
    return float(v.mean()), se


def run_study(config: SimulationConfig, progress=None) -> SimulationResult:
    """Run every (target, n, estimator) cell of ``config``.

    Replicates whose fit raises are counted as failures; a cell with more
    than 10% failures is reported as invalid (NaN summaries).
    """
    cells = []
    for ti, target in enumerate(config.targets):
        grid = config.grid_for(target)
        _check_coverage(grid, target)
        f_true = target.f(grid.points)
        x = grid.points
        for n in config.sample_sizes:
            ise = {e: [] for e in config.estimators}
            iae = {e: [] for e in config.estimators}
            failed = {e: 0 for e in config.estimators}
            for r in range(config.replicates):
                sample = Sample(target.draw(n, cell_rng(config.seed, ti, n, r)))
                for e in config.estimators:
                    try:
                        est = e.fit(sample, grid)
                    except (LogKDEError, FloatingPointError, ArithmeticError):
                        failed[e] += 1
                        continue
                    diff = est.density - f_true
                    ise[e].append(float(np.trapezoid(diff * diff, x)))
                    iae[e].append(float(np.trapezoid(np.abs(diff), x)))
            if progress is not None:
                progress(target, n)
            for e in config.estimators:
                mise, mise_se = _summary(ise[e])
                miae, miae_se = _summary(iae[e])
                cells.append(CellResult(target.name, n, e.estimator, e.kernel, str(e.bw),
                                        mise, mise_se, miae, miae_se, len(ise[e]), failed[e]))
    return SimulationResult(config, tuple(cells))
