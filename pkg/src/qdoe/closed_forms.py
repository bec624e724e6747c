"""Closed-form information quantities for the worked channel examples.

These are the analytic companions to the numeric machinery: exact variances
and optimal allocations for the axis-scaling family, the random-Pauli family,
and the two-parameter transverse-asymmetry family.  Tests use them as oracles
against the generic Fisher/optimizer routines, and the asymmetry simulator
builds directly on them.

Design-size conventions for the asymmetry family: the "m1" quantities refer
to a single probe setting whose two transverse Bloch components are read out
together; the "m2" quantities refer to two probe settings, one per transverse
axis, time-shared with frequencies ``nu1`` and ``nu2 = 1 - nu1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np

from .errors import (
    DegenerateModelError,
    SingularDesignError,
    ValidationError,
)
from .qubit import pauli_scale_factors

DOMAIN_TOL = 1e-12


@dataclass(frozen=True)
class AsymmetryPoint:
    """A parameter point of the transverse-asymmetry channel family.

    ``eps1`` is the asymmetry between the two transverse axes, ``eps2`` is
    one minus the noise strength; together they must satisfy
    ``|eps1| + eps2 <= 1`` with ``eps2 >= 0``.
    """

    eps1: float
    eps2: float

    def __post_init__(self) -> None:
        e1 = float(self.eps1)
        e2 = float(self.eps2)
        if not (math.isfinite(e1) and math.isfinite(e2)):
            raise ValidationError("asymmetry parameters must be finite")
        if abs(e1) > 1.0 + DOMAIN_TOL or not -DOMAIN_TOL <= e2 <= 1.0 + DOMAIN_TOL:
            raise ValidationError(
                f"asymmetry point ({e1}, {e2}) outside the parameter ranges"
            )
        if abs(e1) + e2 > 1.0 + DOMAIN_TOL:
            raise ValidationError(
                f"asymmetry point ({e1}, {e2}) violates |eps1| + eps2 <= 1"
            )
        object.__setattr__(self, "eps1", e1)
        object.__setattr__(self, "eps2", e2)


def as_asymmetry_point(value) -> AsymmetryPoint:
    if isinstance(value, AsymmetryPoint):
        return value
    e1, e2 = value
    return AsymmetryPoint(float(e1), float(e2))


class FTriple(NamedTuple):
    """Binomial spreads of the three axis probes of the asymmetry family.

    ``f1`` and ``f2`` are the per-use standard deviations of the two
    transverse probes, ``f0`` that of the longitudinal probe.
    """

    f1: float
    f2: float
    f0: float


def f_values(eps) -> FTriple:
    """The per-use outcome spreads at an asymmetry point."""
    point = as_asymmetry_point(eps)
    e1, e2 = point.eps1, point.eps2
    f1 = 0.5 * math.sqrt(max(1.0 - (e1 + e2) ** 2, 0.0))
    f2 = 0.5 * math.sqrt(max(1.0 - (e1 - e2) ** 2, 0.0))
    f0 = math.sqrt(max((1.0 - e2) * e2, 0.0))
    return FTriple(f1, f2, f0)


def asymm_m1_cr_value(eps, s1: float, s2: float) -> float:
    """Estimator variance bound for the single-setting design.

    One probe with transverse Bloch components ``(s1, s2)`` is used for
    every channel invocation; the bound on the asymmetry-parameter variance
    is ``(1/s1^2 + 1/s2^2)/4 - eps1^2``.  At the best admissible probe,
    ``s1^2 = s2^2 = 1/2``, this is ``1 - eps1^2``.
    """
    point = as_asymmetry_point(eps)
    if s1 * s2 == 0.0:
        raise SingularDesignError(
            "a vanishing probe component needs the singular-design treatment"
        )
    if s1**2 + s2**2 > 1.0 + DOMAIN_TOL:
        raise ValidationError("probe components must satisfy s1^2 + s2^2 <= 1")
    return 0.25 * (1.0 / s1**2 + 1.0 / s2**2) - point.eps1**2


def asymm_singular_value(eps) -> tuple[float, int]:
    """Variance bound and probe axis when only one axis is usable.

    Returns ``(min(f1^2, f2^2), axis)``; the better axis is 1 exactly when
    the asymmetry is positive, and ties resolve to axis 1.
    """
    spreads = f_values(eps)
    axis = 1 if as_asymmetry_point(eps).eps1 >= 0.0 else 2
    return min(spreads.f1**2, spreads.f2**2), axis


def asymm_m2_cr_value(eps, nu1: float) -> float:
    """Variance bound for the two-setting design at split ``nu1``.

    Equals ``f1^2/nu1 + f2^2/nu2``.  A split of zero on an arm whose spread
    is exactly zero contributes nothing (the arm is not needed); a zero
    split against a positive spread is an infinite-variance sentinel.
    """
    if not -DOMAIN_TOL <= nu1 <= 1.0 + DOMAIN_TOL:
        raise ValidationError(f"nu1 must be a probability, got {nu1}")
    spreads = f_values(eps)
    total = 0.0
    for spread, nu in ((spreads.f1, nu1), (spreads.f2, 1.0 - nu1)):
        if nu <= 0.0:
            if spread**2 <= 1e-30:
                continue
            return float("inf")
        total += spread**2 / nu
    return total


def delta_m1_m2(eps, lam: float) -> float:
    """Gap between the best single-setting and a two-setting design.

    The single-setting design is held at its optimal probe (value
    ``1 - eps1^2``); the two-setting design runs at split
    ``nu_{1,2} = (1 +/- lam)/2``.  The closed form is
    ``[eps2^2 - 2 lam eps1 eps2 - lam^2 (1 - eps1^2)] / (4 nu1 nu2)``.
    At ``lam = 0`` this is ``eps2^2 >= 0``: the two-setting design never
    loses when split evenly.
    """
    point = as_asymmetry_point(eps)
    if not -1.0 < lam < 1.0:
        raise ValidationError(f"lam must lie in (-1, 1), got {lam}")
    e1, e2 = point.eps1, point.eps2
    nu1 = 0.5 * (1.0 + lam)
    nu2 = 0.5 * (1.0 - lam)
    bracket = e2**2 - 2.0 * lam * e1 * e2 - lam**2 * (1.0 - e1**2)
    return bracket / (4.0 * nu1 * nu2)


def pauli_qpt_partial_inverse(eps) -> float:
    """Asymmetry-parameter variance of uniform three-axis tomography.

    The (1,1) entry of the inverse information matrix when all three axis
    probes are used with equal frequency and the common-decay parameter is
    an unknown nuisance:
    ``3 (4 f1^2 f2^2 + f0^2 (f1^2 + f2^2)) / (f1^2 + f2^2 + f0^2)``.
    """
    spreads = f_values(eps)
    a, b, c = spreads.f1**2, spreads.f2**2, spreads.f0**2
    denominator = a + b + c
    if denominator <= 1e-30:
        raise DegenerateModelError(
            "all probe spreads vanish; the tomography design is uninformative"
        )
    return 3.0 * (4.0 * a * b + c * (a + b)) / denominator


def asymm_lambda_star(eps) -> float:
    """Optimal two-setting split coordinate ``(f1 - f2)/(f1 + f2)``."""
    spreads = f_values(eps)
    total = spreads.f1 + spreads.f2
    if total <= 0.0:
        raise DegenerateModelError(
            "both transverse spreads vanish; no split is preferable"
        )
    return (spreads.f1 - spreads.f2) / total


def asymmetry_qfi(eps, s1: float = 1.0, s2: float = 1.0) -> np.ndarray:
    """Quantum information matrix of the asymmetry family, in closed form.

    For a probe with transverse Bloch components ``(s1, s2)`` (longitudinal
    component zero) the output Bloch vector stays transverse, and the matrix
    is the Euclidean Gram matrix of the output derivatives plus the radial
    correction of the scaling-channel bound.  Rank deficient whenever one
    probe component vanishes.
    """
    point = as_asymmetry_point(eps)
    if s1 * s1 + s2 * s2 > 1.0 + DOMAIN_TOL:
        raise ValidationError("probe components exceed the Bloch ball")
    e1, e2 = point.eps1, point.eps2
    out = np.array([(e1 + e2) * s1, (-e1 + e2) * s2])
    gap = 1.0 - out @ out
    if gap <= 1e-12:
        raise DegenerateModelError("output state is pure; the bound diverges")
    jac = np.array([[s1, s1], [-s2, s2]])
    radial = out @ jac
    return jac.T @ jac + np.outer(radial, radial) / gap


def scaling_optimal_nu(theta, gamma: float = 1.0) -> np.ndarray:
    """Optimal axis frequencies for the scaling family.

    For the power-mean criterion of order ``gamma`` the weights are
    proportional to ``(1 - theta_i^2)^(gamma/(1+gamma))``; ``gamma = 1``
    gives the square-root weights of the trace criterion.
    """
    vec = np.asarray(theta, dtype=float).reshape(3)
    if float(vec @ vec) > 1.0 + DOMAIN_TOL:
        raise ValidationError("scaling parameters must lie in the unit ball")
    if not (gamma > 0.0 and math.isfinite(gamma)):
        raise ValidationError(f"gamma must be positive, got {gamma}")
    base = 1.0 - vec**2
    weights = base ** (gamma / (1.0 + gamma))
    total = weights.sum()
    if total <= 0.0:
        raise DegenerateModelError("all axis weights vanish")
    return weights / total


def pauli_optimal_nu_A(theta) -> np.ndarray:
    """Trace-optimal axis frequencies for the random-Pauli family."""
    xi = pauli_scale_factors(theta)
    if np.any(xi <= -1.0) or np.any(xi >= 1.0):
        raise ValidationError("Pauli weights must keep all scale factors in (-1, 1)")
    weights = np.sqrt(1.0 - xi**2)
    return weights / weights.sum()


def pauli_optimal_a_value(theta) -> float:
    """Optimal trace of the inverse information for the random-Pauli family.

    Equals ``(3/16) (sum_i sqrt(1 - xi_i^2))^2``.
    """
    xi = pauli_scale_factors(theta)
    if np.any(xi <= -1.0) or np.any(xi >= 1.0):
        raise ValidationError("Pauli weights must keep all scale factors in (-1, 1)")
    return 3.0 / 16.0 * float(np.sqrt(1.0 - xi**2).sum()) ** 2


class SchemeGapRow(NamedTuple):
    """One grid point comparing tomography against the two-setting design."""

    eps1: float
    eps2: float
    value_pt: float
    value_m2: float
    difference: float


def scheme_gap_rows(step: float = 0.01) -> Iterator[SchemeGapRow]:
    """Grid of tomography-vs-two-setting variance gaps over the domain.

    For each in-domain asymmetry point on a uniform grid, emits the
    tomography variance, the even-split two-setting variance, and their
    difference.  The difference is nonnegative except in two narrow regions
    near the upper domain edges.
    """
    if not 0.0 < step < 1.0:
        raise ValidationError(f"step must lie in (0, 1), got {step}")
    counts = int(round(1.0 / step))
    for j in range(0, counts + 1):
        e2 = j * step
        for i in range(-counts, counts + 1):
            e1 = i * step
            if abs(e1) + e2 > 1.0 + DOMAIN_TOL:
                continue
            point = AsymmetryPoint(e1, e2)
            spreads = f_values(point)
            if spreads.f1**2 + spreads.f2**2 + spreads.f0**2 <= 1e-30:
                continue
            value_pt = pauli_qpt_partial_inverse(point)
            value_m2 = asymm_m2_cr_value(point, 0.5)
            yield SchemeGapRow(e1, e2, value_pt, value_m2, value_pt - value_m2)
