"""Fitting the workload and model-size curves from profiling samples.

The workload curve is fit by ordinary least squares on ``(l_c, gflops)``
pairs; the model-size curve by least squares on ``(l_c, log mparams)``
(log-linear method), with its RMSE reported back in the original Mparams
space.  Samples arrive programmatically or from a CSV with header
``l_c,gflops,mparams`` where an empty cell means the measurement is
absent.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateFit, InsufficientData, NonPositiveSample
from .model import CutCostModel


@dataclass(frozen=True)
class ProfileSample:
    """One profiling measurement at a cut layer; either field may be absent."""

    l_c: float
    gflops: float | None = None
    mparams: float | None = None

    def __post_init__(self):
        if self.l_c < 1:
            raise ValueError("l_c must be at least 1")
        if self.gflops is None and self.mparams is None:
            raise ValueError("a sample needs at least one measurement")


@dataclass(frozen=True)
class FitReport:
    """Fitted coefficients for whichever curves had data."""

    flops_slope: float | None
    flops_intercept: float | None
    rmse_flops: float | None
    params_scale: float | None
    params_rate: float | None
    rmse_params: float | None
    n_samples: int

    def cost_model(self) -> CutCostModel:
        """Materialize a full cost model; fails if either curve is missing."""
        if self.flops_slope is None or self.params_scale is None:
            raise InsufficientData("both curves must be fitted to build a cost model")
        return CutCostModel(
            flops_slope=self.flops_slope,
            flops_intercept=self.flops_intercept,
            params_scale=self.params_scale,
            params_rate=self.params_rate,
        )


def _extract(samples, attr):
    xs, ys = [], []
    for sample in samples:
        value = getattr(sample, attr)
        if value is not None:
            xs.append(float(sample.l_c))
            ys.append(float(value))
    return np.array(xs), np.array(ys)


def fit_flops_linear(samples) -> tuple[float, float, float]:
    """Least-squares line through the workload samples: ``(slope, intercept, rmse)``."""
    xs, ys = _extract(samples, "gflops")
    if len(xs) < 2:
        raise InsufficientData(f"need at least 2 workload samples, got {len(xs)}")
    if np.unique(xs).size < 2:
        raise DegenerateFit("all workload samples share one cut layer")
    slope, intercept = np.polyfit(xs, ys, 1)
    residuals = ys - (slope * xs + intercept)
    rmse = math.sqrt(float(np.mean(residuals ** 2)))
    return float(slope), float(intercept), rmse


def fit_params_exponential(samples) -> tuple[float, float, float]:
    """Log-linear fit of the model-size samples: ``(scale, rate, rmse)``.

    The RMSE is computed in the original Mparams space, not log space.
    """
    xs, ys = _extract(samples, "mparams")
    if len(xs) < 2:
        raise InsufficientData(f"need at least 2 model-size samples, got {len(xs)}")
    if np.any(ys <= 0):
        raise NonPositiveSample("model-size samples must be positive for the log-space fit")
    if np.unique(xs).size < 2:
        raise DegenerateFit("all model-size samples share one cut layer")
    rate, log_scale = np.polyfit(xs, np.log(ys), 1)
    scale = math.exp(float(log_scale))
    residuals = ys - scale * np.exp(rate * xs)
    rmse = math.sqrt(float(np.mean(residuals ** 2)))
    return scale, float(rate), rmse


def fit_report(samples) -> FitReport:
    """Fit whichever curves have at least two usable samples."""
    samples = list(samples)
    flops = params = (None, None, None)
    if sum(s.gflops is not None for s in samples) >= 2:
        flops = fit_flops_linear(samples)
    if sum(s.mparams is not None for s in samples) >= 2:
        params = fit_params_exponential(samples)
    return FitReport(
        flops_slope=flops[0],
        flops_intercept=flops[1],
        rmse_flops=flops[2],
        params_scale=params[0],
        params_rate=params[1],
        rmse_params=params[2],
        n_samples=len(samples),
    )


def read_samples_csv(path) -> list[ProfileSample]:
    """Load profiling samples from a ``l_c,gflops,mparams`` CSV."""
    samples = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        expected = {"l_c", "gflops", "mparams"}
        if reader.fieldnames is None or not expected.issubset(reader.fieldnames):
            raise InsufficientData(
                f"samples CSV must have header l_c,gflops,mparams, got {reader.fieldnames}")
        for row in reader:
            def parse(cell):
                cell = (cell or "").strip()
                return float(cell) if cell else None
            samples.append(ProfileSample(
                l_c=float(row["l_c"]),
                gflops=parse(row["gflops"]),
                mparams=parse(row["mparams"]),
            ))
    return samples
