"""Law-invariant risk functionals evaluated on empirical CDFs.

Supported families:

* distortion risks  rho(F) = integral of g(1 - F(r)) dr  for a
  non-decreasing g on [0,1] with g(0)=0, g(1)=1 (mean, CVaR, tabulated
  custom distortions);
* spectral (rank-weighted) risks with a non-decreasing spectrum h that
  integrates to 1;
* optimized certainty equivalents (OCE) and their risk-seeking inversion;
* moment composites (mean + c * variance).

On a step CDF the distortion integral collapses to the sorted-loss
telescoping sum

    sum_i g(1 - (i-1)/n) * (x_(i) - x_(i-1)),   x_(0) = 0,

which is evaluated exactly (no quadrature).  Every evaluator reports the
value together with sup-norm Holder constants (L, p) so that a CDF error
budget epsilon translates to a risk error budget L * epsilon^p.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import quad

from .cdf import EmpiricalCDF, moment
from .errors import (
    FormatError,
    InvalidAlpha,
    InvalidDistortion,
    InvalidLoss,
    InvalidSpectrum,
    NumericError,
    SupportViolation,
)

__all__ = [
    "DistortionSpec",
    "SpectrumSpec",
    "OceSpec",
    "HolderConstants",
    "RiskValue",
    "identity_distortion",
    "cvar_distortion",
    "cvar_spectrum",
    "uniform_spectrum",
    "oce_cvar_spec",
    "oce_entropic_spec",
    "oce_mean_spec",
    "spectrum_to_distortion",
    "distortion_risk",
    "telescoped_distortion_value",
    "cvar",
    "spectral_risk",
    "oce_risk",
    "inverted_oce_risk",
    "mean_variance",
    "oce_lipschitz_constant",
    "holder_risk_error",
    "load_distortion_csv",
    "load_spectrum_csv",
    "risk_record",
]

VALIDATION_GRID_POINTS = 10_001
DISTORTION_TOL = 1e-9
SPECTRUM_INTEGRAL_TOL = 1e-6
OCE_COARSE_GRID = 1_000
SUP_NORM = "sup_norm"

_INV_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _eval_fn(fn: Callable, x: np.ndarray) -> np.ndarray:
    """Evaluate a user-supplied scalar-or-vector function on an array."""
    x = np.asarray(x, dtype=np.float64)
    try:
        out = np.asarray(fn(x), dtype=np.float64)
        if out.shape == x.shape:
            return out
    except (TypeError, ValueError):
        pass
    return np.asarray([fn(float(t)) for t in x.ravel()], dtype=np.float64).reshape(x.shape)


@dataclass(frozen=True)
class HolderConstants:
    """Holder modulus (L, p) of a risk with respect to a CDF quasi-metric."""

    L: float | None
    p: float = 1.0
    metric: str = SUP_NORM
    estimated: bool = False


@dataclass(frozen=True)
class RiskValue:
    value: float
    risk_name: str
    holder: HolderConstants

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise NumericError(f"risk {self.risk_name!r} evaluated to {self.value}")


@dataclass(frozen=True)
class DistortionSpec:
    """A distortion function g: [0,1] -> [0,1] plus its Lipschitz constant.

    Validity (g(0)=0, g(1)=1, non-decreasing) is checked numerically on a
    uniform grid of 10,001 points at construction; tolerance 1e-9.
    ``lipschitz_constant`` is the constant of g itself (the induced risk
    constant on losses supported in [0, D] is this times D); ``None`` means
    unknown.
    """

    g: Callable = field(repr=False)
    name: str = "custom"
    lipschitz_constant: float | None = None
    lipschitz_estimated: bool = False

    def __post_init__(self):
        grid = np.linspace(0.0, 1.0, VALIDATION_GRID_POINTS)
        vals = _eval_fn(self.g, grid)
        if not np.all(np.isfinite(vals)):
            raise InvalidDistortion(f"{self.name}: distortion produced non-finite values")
        if abs(vals[0]) > DISTORTION_TOL:
            raise InvalidDistortion(f"{self.name}: g(0) = {vals[0]!r}, expected 0")
        if abs(vals[-1] - 1.0) > DISTORTION_TOL:
            raise InvalidDistortion(f"{self.name}: g(1) = {vals[-1]!r}, expected 1")
        if np.min(np.diff(vals)) < -DISTORTION_TOL:
            raise InvalidDistortion(f"{self.name}: distortion is not non-decreasing")

    def __call__(self, t) -> np.ndarray:
        return _eval_fn(self.g, np.asarray(t, dtype=np.float64))

    def risk_constant(self, support_bound: float) -> HolderConstants:
        L = None if self.lipschitz_constant is None else self.lipschitz_constant * support_bound
        return HolderConstants(L=L, p=1.0, metric=SUP_NORM, estimated=self.lipschitz_estimated)


@dataclass(frozen=True)
class SpectrumSpec:
    """A non-decreasing spectrum h >= 0 on [0,1] integrating to 1.

    The unit-integral check uses the composite midpoint rule over the
    10,000 cells of the validation grid (midpoint handles step spectra with
    on-grid jumps exactly, which the trapezoid rule does not).
    ``cumulative`` is an optional exact antiderivative H(t) = int_0^t h;
    when present, rank-weight block integrals are computed from it exactly,
    otherwise by adaptive quadrature per block.
    """

    h: Callable = field(repr=False)
    name: str = "custom"
    cumulative: Callable | None = field(default=None, repr=False)

    def __post_init__(self):
        grid = np.linspace(0.0, 1.0, VALIDATION_GRID_POINTS)
        vals = _eval_fn(self.h, grid)
        if not np.all(np.isfinite(vals)):
            raise InvalidSpectrum(f"{self.name}: spectrum produced non-finite values")
        if np.min(vals) < -DISTORTION_TOL:
            raise InvalidSpectrum(f"{self.name}: spectrum is negative")
        if np.min(np.diff(vals)) < -DISTORTION_TOL:
            raise InvalidSpectrum(f"{self.name}: spectrum is not non-decreasing")
        mids = 0.5 * (grid[:-1] + grid[1:])
        integral = float(np.mean(_eval_fn(self.h, mids)))
        if abs(integral - 1.0) > SPECTRUM_INTEGRAL_TOL:
            raise InvalidSpectrum(
                f"{self.name}: spectrum integrates to {integral!r}, expected 1"
            )
        if self.cumulative is not None:
            h0 = float(_eval_fn(self.cumulative, np.array([0.0]))[0])
            h1 = float(_eval_fn(self.cumulative, np.array([1.0]))[0])
            if abs(h0) > DISTORTION_TOL or abs(h1 - 1.0) > DISTORTION_TOL:
                raise InvalidSpectrum(
                    f"{self.name}: cumulative spectrum must run from 0 to 1"
                )

    def block_weights(self, n: int) -> np.ndarray:
        """Rank weights w_i = int_{(i-1)/n}^{i/n} h(u) du for i = 1..n."""
        edges = np.arange(n + 1) / n
        if self.cumulative is not None:
            cum = _eval_fn(self.cumulative, edges)
            return np.diff(cum)
        return np.asarray(
            [quad(lambda u: float(_eval_fn(self.h, np.array([u]))[0]), edges[i], edges[i + 1])[0]
             for i in range(n)],
            dtype=np.float64,
        )

    def max_value(self) -> float:
        """Largest spectrum value on the validation grid (= h(1) when monotone)."""
        grid = np.linspace(0.0, 1.0, VALIDATION_GRID_POINTS)
        return float(np.max(_eval_fn(self.h, grid)))


@dataclass(frozen=True)
class OceSpec:
    """Disutility phi for an optimized certainty equivalent.

    phi must satisfy phi(0) = 0 and be non-decreasing; both are checked on
    a uniform grid over [-support_bound, support_bound].  ``tolerance`` is
    the target bracket width of the lambda search.
    """

    phi: Callable = field(repr=False)
    support_bound: float
    name: str = "oce"
    tolerance: float = 1e-7

    def __post_init__(self):
        if self.support_bound < 0:
            raise SupportViolation(f"{self.name}: support bound must be nonnegative")
        if self.tolerance <= 0:
            raise InvalidSpectrum(f"{self.name}: tolerance must be positive")
        d = self.support_bound
        grid = np.linspace(-d, d, VALIDATION_GRID_POINTS) if d > 0 else np.zeros(1)
        vals = _eval_fn(self.phi, grid)
        if not np.all(np.isfinite(vals)):
            raise InvalidSpectrum(f"{self.name}: phi produced non-finite values")
        at_zero = float(_eval_fn(self.phi, np.array([0.0]))[0])
        if abs(at_zero) > DISTORTION_TOL:
            raise InvalidSpectrum(f"{self.name}: phi(0) = {at_zero!r}, expected 0")
        if vals.size > 1 and np.min(np.diff(vals)) < -DISTORTION_TOL:
            raise InvalidSpectrum(f"{self.name}: phi is not non-decreasing on the test grid")


def identity_distortion() -> DistortionSpec:
    """g(t) = t: the distorted risk is the plain mean."""
    return DistortionSpec(g=lambda t: np.asarray(t, dtype=np.float64),
                          name="mean", lipschitz_constant=1.0)


def cvar_distortion(alpha: float) -> DistortionSpec:
    """g(t) = min(t/alpha, 1): expected value of the top 100*alpha% losses."""
    if not (0.0 < alpha <= 1.0):
        raise InvalidAlpha(f"alpha must be in (0, 1], got {alpha}")
    return DistortionSpec(
        g=lambda t, a=float(alpha): np.minimum(np.asarray(t, dtype=np.float64) / a, 1.0),
        name=f"cvar:{alpha:g}",
        lipschitz_constant=1.0 / alpha,
    )


def uniform_spectrum() -> SpectrumSpec:
    return SpectrumSpec(h=lambda u: np.ones_like(np.asarray(u, dtype=np.float64)),
                        name="uniform", cumulative=lambda t: np.asarray(t, dtype=np.float64))


def cvar_spectrum(alpha: float) -> SpectrumSpec:
    """h(u) = (1/alpha) * 1{u >= 1-alpha}; exact cumulative attached."""
    if not (0.0 < alpha <= 1.0):
        raise InvalidAlpha(f"alpha must be in (0, 1], got {alpha}")
    a = float(alpha)
    return SpectrumSpec(
        h=lambda u: np.where(np.asarray(u, dtype=np.float64) >= 1.0 - a, 1.0 / a, 0.0),
        name=f"cvar_spectrum:{alpha:g}",
        cumulative=lambda t: np.maximum(np.asarray(t, dtype=np.float64) - (1.0 - a), 0.0) / a,
    )


def oce_mean_spec(support_bound: float, tolerance: float = 1e-7) -> OceSpec:
    """phi(x) = x: lambda cancels and the OCE reduces to the mean."""
    return OceSpec(phi=lambda x: np.asarray(x, dtype=np.float64),
                   support_bound=support_bound, name="oce:mean", tolerance=tolerance)


def oce_cvar_spec(alpha: float, support_bound: float, tolerance: float = 1e-7) -> OceSpec:
    """phi(x) = max(x, 0)/alpha: the certainty-equivalent form of CVaR."""
    if not (0.0 < alpha <= 1.0):
        raise InvalidAlpha(f"alpha must be in (0, 1], got {alpha}")
    a = float(alpha)
    return OceSpec(phi=lambda x: np.maximum(np.asarray(x, dtype=np.float64), 0.0) / a,
                   support_bound=support_bound, name=f"oce:cvar:{alpha:g}", tolerance=tolerance)


def oce_entropic_spec(support_bound: float, tolerance: float = 1e-7) -> OceSpec:
    """phi(x) = exp(x) - 1: the entropic risk."""
    return OceSpec(phi=lambda x: np.expm1(np.asarray(x, dtype=np.float64)),
                   support_bound=support_bound, name="oce:entropic", tolerance=tolerance)


def spectrum_to_distortion(spec: SpectrumSpec) -> DistortionSpec:
    """Distortion equivalent of a spectrum: g(t) = int_0^t h(1-s) ds.

    This orientation puts the spectrum's heavy upper-quantile mass on the
    largest losses, so the CVaR spectrum maps to the CVaR distortion.
    Requires an exact cumulative; g(t) = H(1) - H(1-t).
    """
    if spec.cumulative is None:
        raise InvalidSpectrum(f"{spec.name}: exact cumulative required for conversion")
    cum = spec.cumulative
    return DistortionSpec(
        g=lambda t: 1.0 - np.asarray(_eval_fn(cum, 1.0 - np.asarray(t, dtype=np.float64))),
        name=f"distortion({spec.name})",
        lipschitz_constant=spec.max_value(),
        lipschitz_estimated=True,
    )


def telescoped_distortion_value(sorted_losses: np.ndarray, spec: DistortionSpec) -> float:
    """Exact distortion risk of a sorted nonnegative loss sample.

    Evaluates sum_i g(1 - (i-1)/n) * (x_(i) - x_(i-1)) with x_(0) = 0.
    """
    v = np.asarray(sorted_losses, dtype=np.float64)
    n = v.shape[0]
    coeff = spec(1.0 - np.arange(n) / n)
    return float(coeff @ np.diff(v, prepend=0.0))


def distortion_risk(cdf: EmpiricalCDF, spec: DistortionSpec,
                    support_bound: float | None = None) -> RiskValue:
    """Distortion risk of an empirical CDF via the telescoping sum."""
    if cdf.min < 0.0:
        raise InvalidLoss("distortion risk requires nonnegative losses")
    d = cdf.max if support_bound is None else float(support_bound)
    return RiskValue(
        value=telescoped_distortion_value(cdf.values, spec),
        risk_name=spec.name,
        holder=spec.risk_constant(d),
    )


def cvar(cdf: EmpiricalCDF, alpha: float, support_bound: float | None = None) -> RiskValue:
    """Conditional value at risk at level alpha (top 100*alpha% mean)."""
    return distortion_risk(cdf, cvar_distortion(alpha), support_bound=support_bound)


def spectral_risk(cdf: EmpiricalCDF, spec: SpectrumSpec,
                  support_bound: float | None = None) -> RiskValue:
    """Rank-weighted risk: sum_i w_i * x_(i), w_i = int over the i-th quantile block."""
    if cdf.min < 0.0:
        raise InvalidLoss("spectral risk requires nonnegative losses")
    w = spec.block_weights(cdf.n)
    d = cdf.max if support_bound is None else float(support_bound)
    return RiskValue(
        value=float(w @ cdf.values),
        risk_name=spec.name,
        holder=HolderConstants(L=spec.max_value() * d, p=1.0, metric=SUP_NORM, estimated=True),
    )


def _golden_section(fn: Callable[[float], float], lo: float, hi: float, tol: float) -> tuple[float, float]:
    """Minimize fn on [lo, hi] by golden-section search to bracket width tol."""
    a, b = float(lo), float(hi)
    x1 = b - _INV_GOLDEN * (b - a)
    x2 = a + _INV_GOLDEN * (b - a)
    f1, f2 = fn(x1), fn(x2)
    while (b - a) > tol:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _INV_GOLDEN * (b - a)
            f1 = fn(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _INV_GOLDEN * (b - a)
            f2 = fn(x2)
    return (x1, f1) if f1 <= f2 else (x2, f2)


def _oce_optimize(losses: np.ndarray, spec: OceSpec, sign: float) -> float:
    """Coarse grid then golden-section search of the certainty-equivalent objective.

    ``sign=+1`` minimizes lambda + mean(phi(x - lambda)); ``sign=-1``
    minimizes the negation of lambda - mean(phi(lambda - x)).  The grid
    pass guards against non-convex user phi; golden-section refines the
    bracket around the best grid point down to ``spec.tolerance``.
    """
    d = spec.support_bound

    def objective(lam: float) -> float:
        shifted = sign * (losses - lam)
        return sign * lam + float(np.mean(_eval_fn(spec.phi, shifted)))

    if d == 0.0:
        return sign * objective(0.0)
    grid = np.linspace(0.0, d, OCE_COARSE_GRID)
    shifted = sign * (losses[None, :] - grid[:, None])
    vals = sign * grid + np.mean(_eval_fn(spec.phi, shifted), axis=1)
    j = int(np.argmin(vals))
    lo = grid[max(j - 1, 0)]
    hi = grid[min(j + 1, grid.size - 1)]
    _, best = _golden_section(objective, lo, hi, spec.tolerance)
    best = min(best, float(vals[j]))
    return sign * best


def _check_oce_support(cdf: EmpiricalCDF, spec: OceSpec) -> None:
    if cdf.min < 0.0 or cdf.max > spec.support_bound:
        raise SupportViolation(
            f"losses must lie in [0, {spec.support_bound}]; got range "
            f"[{cdf.min}, {cdf.max}]"
        )


def oce_risk(cdf: EmpiricalCDF, spec: OceSpec, grid_size: int = VALIDATION_GRID_POINTS) -> RiskValue:
    """Optimized certainty equivalent: min over lambda in [0, D] of lambda + E[phi(X - lambda)]."""
    _check_oce_support(cdf, spec)
    return RiskValue(
        value=_oce_optimize(cdf.values, spec, sign=+1.0),
        risk_name=spec.name,
        holder=HolderConstants(L=oce_lipschitz_constant(spec, grid_size), p=1.0,
                               metric=SUP_NORM, estimated=True),
    )


def inverted_oce_risk(cdf: EmpiricalCDF, spec: OceSpec,
                      grid_size: int = VALIDATION_GRID_POINTS) -> RiskValue:
    """Risk-seeking inversion: max over lambda in [0, D] of lambda - E[phi(lambda - X)]."""
    _check_oce_support(cdf, spec)
    return RiskValue(
        value=_oce_optimize(cdf.values, spec, sign=-1.0),
        risk_name=f"inverted_{spec.name}",
        holder=HolderConstants(L=oce_lipschitz_constant(spec, grid_size, inverted=True),
                               p=1.0, metric=SUP_NORM, estimated=True),
    )


def mean_variance(cdf: EmpiricalCDF, c: float, support_bound: float | None = None) -> RiskValue:
    """mean + c * variance, from the first two raw moments.

    The sup-norm constant on losses in [0, D] combines the mean (D), the
    second raw moment (D^2), and the squared mean (2 D^2): D + 3 c D^2.
    """
    m1 = moment(cdf, 1)
    m2 = moment(cdf, 2)
    d = cdf.max if support_bound is None else float(support_bound)
    return RiskValue(
        value=m1 + c * (m2 - m1 * m1),
        risk_name=f"mean_var:{c:g}",
        holder=HolderConstants(L=d + 3.0 * c * d * d, p=1.0, metric=SUP_NORM),
    )


def oce_lipschitz_constant(spec: OceSpec, grid_size: int = VALIDATION_GRID_POINTS,
                           inverted: bool = False) -> float:
    """Sup-norm Lipschitz constant of an OCE risk on losses in [0, D].

    Standard direction: max over x in [0, D] of phi(D - x) - phi(-x).
    Inverted direction: max over x in [0, D] of phi(x) - phi(x - D).
    """
    d = spec.support_bound
    if d == 0.0:
        return 0.0
    x = np.linspace(0.0, d, int(grid_size))
    if inverted:
        vals = _eval_fn(spec.phi, x) - _eval_fn(spec.phi, x - d)
    else:
        vals = _eval_fn(spec.phi, d - x) - _eval_fn(spec.phi, -x)
    return float(np.max(vals))


def holder_risk_error(L: float, p: float, epsilon: float) -> float:
    """Risk estimation error budget L * epsilon**p from a CDF error budget."""
    return float(L) * float(epsilon) ** float(p)


def _load_table_csv(path) -> tuple[np.ndarray, np.ndarray]:
    xs, ys = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for i, row in enumerate(reader):
            if not row or (len(row) == 1 and row[0].strip() == ""):
                continue
            if len(row) != 2:
                raise FormatError(f"{path}: row {i + 1}: expected two columns, got {len(row)}")
            try:
                xs.append(float(row[0]))
                ys.append(float(row[1]))
            except ValueError:
                if i == 0:
                    continue  # header row
                raise FormatError(f"{path}: row {i + 1}: not numeric: {row!r}") from None
    if len(xs) < 2:
        raise FormatError(f"{path}: need at least two numeric rows")
    x = np.asarray(xs)
    y = np.asarray(ys)
    if np.any(np.diff(x) <= 0):
        raise FormatError(f"{path}: first column must be strictly increasing")
    return x, y


def load_distortion_csv(path, name: str | None = None) -> DistortionSpec:
    """Load a tabulated distortion (t, g(t)) with linear interpolation.

    The Lipschitz constant is estimated as the maximum finite-difference
    slope over the validation grid and flagged as estimated.
    """
    t, g = _load_table_csv(path)
    grid = np.linspace(0.0, 1.0, VALIDATION_GRID_POINTS)
    interp = np.interp(grid, t, g)
    slope = float(np.max(np.abs(np.diff(interp)))) * (VALIDATION_GRID_POINTS - 1)
    return DistortionSpec(
        g=lambda u: np.interp(np.asarray(u, dtype=np.float64), t, g),
        name=name or f"distortion_file:{path}",
        lipschitz_constant=slope,
        lipschitz_estimated=True,
    )


def load_spectrum_csv(path, name: str | None = None) -> SpectrumSpec:
    """Load a tabulated spectrum (u, h(u)) with linear interpolation.

    The cumulative is the exact trapezoid antiderivative of the
    piecewise-linear interpolant, so rank weights are exact for the table.
    """
    u, h = _load_table_csv(path)
    knots = np.concatenate([[0.0], u, [1.0]])
    hv = np.concatenate([[h[0]], h, [h[-1]]])
    cum_knots = np.concatenate([[0.0], np.cumsum(0.5 * (hv[1:] + hv[:-1]) * np.diff(knots))])
    return SpectrumSpec(
        h=lambda x: np.interp(np.asarray(x, dtype=np.float64), u, h),
        name=name or f"spectrum_file:{path}",
        cumulative=lambda t: np.interp(np.asarray(t, dtype=np.float64), knots, cum_knots),
    )


def risk_record(model: str, rv: RiskValue, error_bound: float | None) -> dict:
    """JSON-ready record for one (model, risk) evaluation."""
    return {
        "model": model,
        "risk_name": rv.risk_name,
        "value": rv.value,
        "L": rv.holder.L,
        "p": rv.holder.p,
        "error_bound": error_bound,
    }
