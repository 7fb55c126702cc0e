"""Uniform-convergence certificates for loss-CDF estimation.

The certified quantity is the worst-case sup-norm CDF estimation error over
a hypothesis class: with probability at least 1 - delta,

    e_n  <=  2 * R(n) + sqrt(log(1/delta) / (2n)),

where R(n) is any upper bound on the class's Rademacher complexity for
threshold-composed losses.  Available R(n) bounds:

* finite class of size |F|:        sqrt(log(4|F|) / (2n))
* permutation complexity N:        sqrt(log(4N) / (2n))
* growth number G (labelings):     2 * sqrt(log(G) / n), with presets
  G = (n+1)|F| for a finite class and G = (n+1)**nu for VC dimension nu.

Natural logarithms throughout.  A certificate propagates to risk errors via
L * epsilon (sup-norm Holder risks) or L * D**p * epsilon**p (Wasserstein
Holder risks on [0, D]), and to excess risk via doubling.
"""

from __future__ import annotations

import csv
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .cdf import EmpiricalCDF, build_cdf, sup_norm_distance
from .errors import ConfigError, InvalidDelta, InvalidGrowth, WeakReference
from .seeds import rng_from

__all__ = [
    "BoundCertificate",
    "mcdiarmid_term",
    "rademacher_finite_class",
    "rademacher_permutation",
    "rademacher_growth",
    "growth_finite_class",
    "growth_vc_dimension",
    "rademacher_vc_sauer",
    "cdf_uniform_bound",
    "certificate_finite_class",
    "certificate_permutation",
    "certificate_growth",
    "certificate_vc_sauer",
    "risk_error_bound",
    "wasserstein_risk_error_bound",
    "excess_risk_bound",
    "MonteCarloEnResult",
    "monte_carlo_en",
]


def _check_n(n: int) -> int:
    if int(n) != n or n < 1:
        raise ConfigError(f"sample size must be a positive integer, got {n!r}")
    return int(n)


def _check_delta(delta: float) -> float:
    if not (0.0 < delta <= 1.0):
        raise InvalidDelta(f"delta must be in (0, 1], got {delta!r}")
    return float(delta)


def mcdiarmid_term(n: int, delta: float) -> float:
    """Concentration term sqrt(log(1/delta) / (2n))."""
    n = _check_n(n)
    delta = _check_delta(delta)
    return math.sqrt(math.log(1.0 / delta) / (2.0 * n))


def rademacher_finite_class(n: int, class_size: int) -> float:
    """Rademacher bound sqrt(log(4|F|) / (2n)) for a finite class."""
    n = _check_n(n)
    if class_size < 1:
        raise ConfigError(f"class size must be >= 1, got {class_size}")
    return math.sqrt(math.log(4.0 * class_size) / (2.0 * n))


def rademacher_permutation(n: int, n_pi: float) -> float:
    """Rademacher bound sqrt(log(4N) / (2n)) from permutation complexity N."""
    n = _check_n(n)
    if n_pi < 1:
        raise ConfigError(f"permutation complexity must be >= 1, got {n_pi}")
    return math.sqrt(math.log(4.0 * n_pi) / (2.0 * n))


def rademacher_growth(n: int, growth: float) -> float:
    """Rademacher bound 2 * sqrt(log(G) / n) from a growth number G."""
    n = _check_n(n)
    if growth < 1:
        raise InvalidGrowth(f"growth must be >= 1, got {growth}")
    return 2.0 * math.sqrt(math.log(growth) / n)


def growth_finite_class(n: int, class_size: int) -> float:
    """Labeling count (n+1)|F| of threshold-composed losses for a finite class."""
    return (_check_n(n) + 1) * float(class_size)


def growth_vc_dimension(n: int, nu: int) -> float:
    """Labeling count (n+1)**nu under VC dimension nu (may overflow to inf)."""
    try:
        return math.exp(nu * math.log(_check_n(n) + 1))
    except OverflowError:
        return math.inf


def rademacher_vc_sauer(n: int, nu: int) -> float:
    """Growth bound with the VC preset, computed in log space: 2*sqrt(nu*log(n+1)/n)."""
    n = _check_n(n)
    if nu < 0:
        raise ConfigError(f"VC dimension must be nonnegative, got {nu}")
    return 2.0 * math.sqrt(nu * math.log(n + 1.0) / n)


@dataclass(frozen=True)
class BoundCertificate:
    """A computed CDF uniform-convergence bound with its inputs.

    ``epsilon = 2 * rademacher_bound + sqrt(log(1/delta)/(2n))`` holds by
    construction for every method except ``user_supplied``.
    """

    n: int
    delta: float
    rademacher_bound: float
    method: str
    epsilon: float
    inputs: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "n": self.n,
            "delta": self.delta,
            "inputs": self.inputs,
            "rademacher_bound": self.rademacher_bound,
            "epsilon": self.epsilon,
        }


def cdf_uniform_bound(rademacher_bound: float, n: int, delta: float,
                      method: str = "user_supplied", inputs: dict | None = None) -> BoundCertificate:
    """Assemble a certificate: epsilon = 2 * R + sqrt(log(1/delta)/(2n))."""
    n = _check_n(n)
    delta = _check_delta(delta)
    if rademacher_bound < 0:
        raise ConfigError(f"rademacher bound must be nonnegative, got {rademacher_bound}")
    eps = 2.0 * rademacher_bound + mcdiarmid_term(n, delta)
    return BoundCertificate(n=n, delta=delta, rademacher_bound=float(rademacher_bound),
                            method=method, epsilon=eps, inputs=dict(inputs or {}))


def certificate_finite_class(n: int, class_size: int, delta: float) -> BoundCertificate:
    return cdf_uniform_bound(rademacher_finite_class(n, class_size), n, delta,
                             method="finite_class", inputs={"class_size": int(class_size)})


def certificate_permutation(n: int, n_pi: float, delta: float) -> BoundCertificate:
    return cdf_uniform_bound(rademacher_permutation(n, n_pi), n, delta,
                             method="permutation", inputs={"n_pi": n_pi})


def certificate_growth(n: int, growth: float, delta: float) -> BoundCertificate:
    return cdf_uniform_bound(rademacher_growth(n, growth), n, delta,
                             method="growth", inputs={"growth": growth})


def certificate_vc_sauer(n: int, nu: int, delta: float) -> BoundCertificate:
    return cdf_uniform_bound(rademacher_vc_sauer(n, nu), n, delta,
                             method="vc_sauer", inputs={"nu": int(nu)})


def risk_error_bound(cert: BoundCertificate, L: float) -> float:
    """Simultaneous estimation-error bound L * epsilon for every sup-norm
    Holder risk with constant at most L and every hypothesis in the class."""
    return float(L) * cert.epsilon


def wasserstein_risk_error_bound(cert: BoundCertificate, L: float, D: float, p: float) -> float:
    """Error bound L * D**p * epsilon**p for Wasserstein Holder risks on [0, D]."""
    return float(L) * float(D) ** p * cert.epsilon ** p


def excess_risk_bound(risk_error: float) -> float:
    """Excess risk of the empirical risk minimizer: twice the uniform risk error."""
    if risk_error < 0:
        raise ConfigError(f"risk error must be nonnegative, got {risk_error}")
    return 2.0 * float(risk_error)


@dataclass(frozen=True)
class MonteCarloEnResult:
    """Empirical distribution of the worst-case CDF estimation error.

    ``values[r]`` is, for repetition r, the maximum over models of the
    sup-norm distance between the model's n-sample CDF and its reference
    CDF.  The reference is itself empirical (built once from
    ``reference_sample_size`` draws), so each value carries an
    approximation bias of that reference's own estimation error.
    """

    values: np.ndarray
    n: int
    reference_sample_size: int
    seed: int

    def quantile(self, q: float) -> float:
        return float(np.quantile(self.values, q))

    def violation_fraction(self, epsilon: float) -> float:
        return float(np.mean(self.values > epsilon))

    @property
    def median(self) -> float:
        return float(np.median(self.values))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["rep", "e_n"])
            for r, v in enumerate(self.values):
                writer.writerow([r, f"{v:.17g}"])


def monte_carlo_en(
    loss_fns: Sequence[Callable[[np.ndarray, np.ndarray], np.ndarray]],
    sample_data: Callable[[np.random.Generator, int], tuple[np.ndarray, np.ndarray]],
    n: int,
    reps: int,
    seed: int,
    reference_sample_size: int,
    threads: int = 1,
) -> MonteCarloEnResult:
    """Estimate the distribution of the worst-case CDF error by simulation.

    Parameters
    ----------
    loss_fns : sequence of callables
        One per fixed model; each maps a dataset ``(X, y)`` to a 1-D array
        of nonnegative per-example losses.
    sample_data : callable
        ``(rng, size) -> (X, y)`` drawing fresh i.i.d. data.
    n, reps, seed : int
        Evaluation sample size, repetition count, and root seed.  Each
        repetition derives its own seed from ``(seed, "rep", r)``, so the
        result is identical for any ``threads`` value.
    reference_sample_size : int
        Size of the stand-in for the true CDF; should be at least 10 * n
        (a :class:`WeakReference` warning is emitted otherwise).
    """
    if reference_sample_size < 10 * n:
        warnings.warn(
            f"reference sample ({reference_sample_size}) is below 10x the "
            f"evaluation sample ({n}); reference bias may dominate",
            WeakReference,
            stacklevel=2,
        )
    ref_rng = rng_from(seed, "reference")
    x_ref, y_ref = sample_data(ref_rng, reference_sample_size)
    references = [build_cdf(fn(x_ref, y_ref)) for fn in loss_fns]

    def one_rep(r: int) -> float:
        rng = rng_from(seed, "rep", r)
        x, y = sample_data(rng, n)
        worst = 0.0
        for fn, ref in zip(loss_fns, references):
            worst = max(worst, sup_norm_distance(build_cdf(fn(x, y)), ref))
        return worst

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            values = list(pool.map(one_rep, range(reps)))
    else:
        values = [one_rep(r) for r in range(reps)]
    return MonteCarloEnResult(
        values=np.asarray(values),
        n=int(n),
        reference_sample_size=int(reference_sample_size),
        seed=int(seed),
    )
