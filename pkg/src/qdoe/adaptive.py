"""Monte Carlo comparison of static and adaptive asymmetry estimation.

The experiment estimates the transverse asymmetry from two binomial probe
arms.  A static run splits the channel-use budget up front; an adaptive run
re-estimates the arm spreads after each step and steers the remaining budget
toward the allocation a clairvoyant designer would have chosen, optionally
after a non-adaptive runway.  Everything is driven by explicit generators,
and grid sweeps derive one sub-stream per (grid point, scheme) so results
are reproducible bit for bit regardless of worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence, TextIO

import numpy as np

from .closed_forms import AsymmetryPoint, as_asymmetry_point, f_values
from .errors import (
    DegenerateModelError,
    EstimatorError,
    ValidationError,
)

F_INIT_DEFAULT = (math.sqrt(3.0) / 4.0, math.sqrt(3.0) / 4.0)


def theta_to_eps(theta1: float, theta2: float) -> AsymmetryPoint:
    """Map the two arm error rates to asymmetry coordinates.

    Arm 1 succeeds with probability ``1 - theta2`` and arm 2 with
    ``1 - theta1``; the asymmetry parameters are ``eps1 = theta1 - theta2``
    and ``eps2 = 1 - theta1 - theta2``.
    """
    t1, t2 = float(theta1), float(theta2)
    if t1 < -1e-12 or t2 < -1e-12 or t1 + t2 > 1.0 + 1e-12:
        raise ValidationError(
            f"rates ({t1}, {t2}) must be nonnegative with sum at most 1"
        )
    return AsymmetryPoint(t1 - t2, 1.0 - t1 - t2)


def eps_to_theta(eps) -> tuple[float, float]:
    """Inverse of :func:`theta_to_eps`."""
    point = as_asymmetry_point(eps)
    return (
        0.5 * (point.eps1 + 1.0 - point.eps2),
        0.5 * (1.0 - point.eps2 - point.eps1),
    )


def arm_probabilities(eps) -> tuple[float, float]:
    """Success probabilities of the two transverse probe arms."""
    point = as_asymmetry_point(eps)
    p1 = 0.5 * (1.0 + point.eps1 + point.eps2)
    p2 = 0.5 * (1.0 - point.eps1 + point.eps2)
    for p in (p1, p2):
        if p < -1e-12 or p > 1.0 + 1e-12:
            raise ValidationError(f"arm probability {p} outside [0, 1]")
    return min(max(p1, 0.0), 1.0), min(max(p2, 0.0), 1.0)


def sample_counts(eps, axis: int, uses: int, rng: np.random.Generator) -> int:
    """Draw the success count of one probe arm over ``uses`` channel uses."""
    if axis not in (1, 2):
        raise ValidationError(f"axis must be 1 or 2, got {axis}")
    uses = int(uses)
    if uses < 0:
        raise ValidationError(f"uses must be nonnegative, got {uses}")
    p1, p2 = arm_probabilities(eps)
    return int(rng.binomial(uses, p1 if axis == 1 else p2))


def estimator(n1: int, uses1: int, n2: int, uses2: int) -> float:
    """Plug-in asymmetry estimate ``n1/uses1 - n2/uses2`` (unbiased)."""
    if uses1 < 1 or uses2 < 1:
        raise EstimatorError(
            f"estimator undefined with arm uses ({uses1}, {uses2})"
        )
    if not (0 <= n1 <= uses1 and 0 <= n2 <= uses2):
        raise ValidationError("counts must lie between 0 and the arm uses")
    return n1 / uses1 - n2 / uses2


def f_hat(n: int, uses: int) -> float:
    """Plug-in spread estimate ``sqrt(q (1 - q))`` with ``q = n / uses``."""
    if uses < 1:
        raise EstimatorError(f"spread estimate needs at least one use, got {uses}")
    q = n / uses
    return math.sqrt(max(q * (1.0 - q), 0.0))


def next_lambda(fh1, fh2, uses1, uses2, m_next):
    """Allocation coordinate for the next adaptive step.

    Steers the cumulative split toward ``fh1 / (fh1 + fh2)`` on arm 1: the
    next step's arm-1 share is the shortfall between that target applied to
    all uses through the coming step and what arm 1 already received,
    clamped to an achievable per-step value in ``[-1, 1]``.  When both
    spread estimates vanish there is no signal either way and the step
    falls back to an even split.

    Accepts scalars or equally shaped arrays.
    """
    fh1 = np.asarray(fh1, dtype=float)
    fh2 = np.asarray(fh2, dtype=float)
    uses1 = np.asarray(uses1, dtype=float)
    uses2 = np.asarray(uses2, dtype=float)
    m = np.asarray(m_next, dtype=float)
    if np.any(m < 1):
        raise ValidationError("the next step must contain at least one use")
    if np.any(fh1 < 0) or np.any(fh2 < 0):
        raise ValidationError("spread estimates must be nonnegative")
    den = fh1 + fh2
    safe = np.where(den > 0.0, den, 1.0)
    inner = (fh1 + (fh1 * uses2 - fh2 * uses1) / m) / safe
    lam = np.minimum(2.0 * np.maximum(inner, 0.0) - 1.0, 1.0)
    lam = np.where(den > 0.0, lam, 0.0)
    return float(lam) if lam.ndim == 0 else lam


def static_mse_analytic(eps, total_uses: float, lam: float = 0.0) -> float:
    """Exact estimator variance of a static split.

    ``f1^2/N1 + f2^2/N2`` with ``N_{1,2} = (1 +/- lam) total / 2``.  An
    empty arm makes the estimator undefined, returned as an infinite
    sentinel.
    """
    spreads = f_values(eps)
    n1 = 0.5 * (1.0 + lam) * total_uses
    n2 = 0.5 * (1.0 - lam) * total_uses
    if n1 <= 0.0 or n2 <= 0.0:
        return float("inf")
    return spreads.f1**2 / n1 + spreads.f2**2 / n2


def vratio_analytic(eps, lambda_eff: float) -> float:
    """Static-to-adaptive variance ratio at an achieved allocation.

    ``(1 - lambda_eff^2) / (1 - lambda_eff (f1^2 - f2^2)/(f1^2 + f2^2))``;
    one at ``lambda_eff = 0`` and at most one better than the even split can
    explain.
    """
    if not -1.0 <= lambda_eff <= 1.0:
        raise ValidationError(f"lambda_eff must lie in [-1, 1], got {lambda_eff}")
    spreads = f_values(eps)
    total = spreads.f1**2 + spreads.f2**2
    if total <= 0.0:
        raise DegenerateModelError("both arm spreads vanish; the ratio is undefined")
    denom = 1.0 - lambda_eff * (spreads.f1**2 - spreads.f2**2) / total
    numer = 1.0 - lambda_eff**2
    if denom <= 1e-300:
        return 0.0
    return numer / denom


@dataclass(frozen=True)
class AdaptiveConfig:
    """Budget layout of an adaptive run.

    ``total_uses`` are divided into a non-adaptive runway followed by
    ``steps`` adaptive steps whose sizes default to an equal split of the
    remainder (earlier steps absorb any remainder).  ``f_init`` seeds the
    spread estimates before an arm has data.
    """

    total_uses: int
    steps: int
    runway: int = 0
    step_sizes: tuple = None
    f_init: tuple = F_INIT_DEFAULT
    seed: int = 0

    def __post_init__(self) -> None:
        n = int(self.total_uses)
        k = int(self.steps)
        runway = int(self.runway)
        if k < 1 or n < k:
            raise ValidationError(
                f"need total_uses >= steps >= 1, got ({n}, {k})"
            )
        if not 0 <= runway < n:
            raise ValidationError(f"runway must lie in [0, {n}), got {runway}")
        if self.step_sizes is None:
            budget = n - runway
            if budget < k:
                raise ValidationError(
                    f"budget after the runway ({budget}) cannot fill {k} steps"
                )
            base, remainder = divmod(budget, k)
            sizes = tuple(base + (1 if i < remainder else 0) for i in range(k))
        else:
            sizes = tuple(int(m) for m in self.step_sizes)
            if len(sizes) != k:
                raise ValidationError(
                    f"step_sizes has {len(sizes)} entries for {k} steps"
                )
            if any(m < 1 for m in sizes):
                raise ValidationError("every step needs at least one use")
            if runway + sum(sizes) != n:
                raise ValidationError(
                    "runway plus step sizes must add up to total_uses"
                )
        f1, f2 = (float(v) for v in self.f_init)
        if not (0.0 <= f1 <= 0.5 + 1e-12 and 0.0 <= f2 <= 0.5 + 1e-12):
            raise ValidationError("initial spreads must lie in [0, 1/2]")
        object.__setattr__(self, "total_uses", n)
        object.__setattr__(self, "steps", k)
        object.__setattr__(self, "runway", runway)
        object.__setattr__(self, "step_sizes", sizes)
        object.__setattr__(self, "f_init", (f1, f2))
        object.__setattr__(self, "seed", int(self.seed))


class TrialRecord(NamedTuple):
    """Cumulative outcome of one simulated run."""

    n1: int
    n2: int
    uses1: int
    uses2: int
    estimate: float
    lambda_eff: float
    lambda_trace: tuple


def _split_evenly(total: int) -> tuple[int, int]:
    first = int(np.rint(total / 2.0))
    return first, total - first


def run_static(eps, total_uses: int, lam: float = 0.0, rng=None) -> TrialRecord:
    """One static replica at a fixed allocation coordinate."""
    if rng is None:
        rng = np.random.default_rng()
    total_uses = int(total_uses)
    if total_uses < 2:
        raise ValidationError("a static run needs at least two uses")
    if not -1.0 <= lam <= 1.0:
        raise ValidationError(f"lam must lie in [-1, 1], got {lam}")
    uses1 = int(np.clip(np.rint(0.5 * (1.0 + lam) * total_uses), 0, total_uses))
    uses2 = total_uses - uses1
    n1 = sample_counts(eps, 1, uses1, rng)
    n2 = sample_counts(eps, 2, uses2, rng)
    return TrialRecord(
        n1=n1,
        n2=n2,
        uses1=uses1,
        uses2=uses2,
        estimate=estimator(n1, uses1, n2, uses2),
        lambda_eff=2.0 * uses1 / total_uses - 1.0,
        lambda_trace=(float(lam),),
    )


def run_adaptive(eps, config: AdaptiveConfig, rng=None) -> TrialRecord:
    """One adaptive replica.

    The runway samples both arms evenly without adaptation but its counts do
    feed the first spread estimates.  Each adaptive step recomputes the
    spreads from all data so far (falling back to ``config.f_init`` for an
    arm without data), picks the step allocation via :func:`next_lambda`,
    rounds half-to-even, and samples.
    """
    if rng is None:
        rng = np.random.default_rng()
    point = as_asymmetry_point(eps)
    n1 = n2 = uses1 = uses2 = 0
    if config.runway > 0:
        a, b = _split_evenly(config.runway)
        n1 += sample_counts(point, 1, a, rng)
        n2 += sample_counts(point, 2, b, rng)
        uses1 += a
        uses2 += b
    trace = []
    for size in config.step_sizes:
        fh1 = f_hat(n1, uses1) if uses1 > 0 else config.f_init[0]
        fh2 = f_hat(n2, uses2) if uses2 > 0 else config.f_init[1]
        lam = next_lambda(fh1, fh2, uses1, uses2, size)
        trace.append(float(lam))
        alloc1 = int(np.clip(np.rint(0.5 * (1.0 + lam) * size), 0, size))
        alloc2 = size - alloc1
        n1 += sample_counts(point, 1, alloc1, rng)
        n2 += sample_counts(point, 2, alloc2, rng)
        uses1 += alloc1
        uses2 += alloc2
    return TrialRecord(
        n1=n1,
        n2=n2,
        uses1=uses1,
        uses2=uses2,
        estimate=estimator(n1, uses1, n2, uses2),
        lambda_eff=2.0 * uses1 / config.total_uses - 1.0,
        lambda_trace=tuple(trace),
    )


def _static_batch(eps, total_uses: int, replicas: int, rng) -> np.ndarray:
    p1, p2 = arm_probabilities(eps)
    uses1, uses2 = _split_evenly(int(total_uses))
    if uses1 < 1 or uses2 < 1:
        raise EstimatorError("static split leaves an arm empty")
    n1 = rng.binomial(uses1, p1, size=replicas)
    n2 = rng.binomial(uses2, p2, size=replicas)
    return n1 / uses1 - n2 / uses2


def _adaptive_batch(eps, config: AdaptiveConfig, replicas: int, rng):
    """Vectorized adaptive replicas (identical math to :func:`run_adaptive`)."""
    p1, p2 = arm_probabilities(eps)
    n1 = np.zeros(replicas, dtype=np.int64)
    n2 = np.zeros(replicas, dtype=np.int64)
    uses1 = np.zeros(replicas, dtype=np.int64)
    uses2 = np.zeros(replicas, dtype=np.int64)
    if config.runway > 0:
        a, b = _split_evenly(config.runway)
        n1 += rng.binomial(a, p1, size=replicas)
        n2 += rng.binomial(b, p2, size=replicas)
        uses1 += a
        uses2 += b
    for size in config.step_sizes:
        q1 = n1 / np.maximum(uses1, 1)
        q2 = n2 / np.maximum(uses2, 1)
        fh1 = np.where(
            uses1 > 0, np.sqrt(np.clip(q1 * (1.0 - q1), 0.0, None)), config.f_init[0]
        )
        fh2 = np.where(
            uses2 > 0, np.sqrt(np.clip(q2 * (1.0 - q2), 0.0, None)), config.f_init[1]
        )
        lam = next_lambda(fh1, fh2, uses1, uses2, size)
        alloc1 = np.clip(np.rint(0.5 * (1.0 + lam) * size), 0, size).astype(np.int64)
        alloc2 = size - alloc1
        n1 += rng.binomial(alloc1, p1)
        n2 += rng.binomial(alloc2, p2)
        uses1 += alloc1
        uses2 += alloc2
    if np.any(uses1 == 0) or np.any(uses2 == 0):
        raise EstimatorError(
            "an adaptive replica finished with an unused arm; increase the "
            "first step size or add a runway"
        )
    estimates = n1 / uses1 - n2 / uses2
    lambda_eff = 2.0 * uses1 / config.total_uses - 1.0
    return estimates, lambda_eff


class MseRatioResult(NamedTuple):
    """Monte Carlo comparison of the static and adaptive schemes."""

    ratio: float
    standard_error: float
    mse_static: float
    mse_adapt: float
    mean_lambda_eff: float
    analytic_ratio: float


def _mse_with_se(estimates: np.ndarray, truth: float) -> tuple[float, float]:
    squared = (estimates - truth) ** 2
    mse = float(squared.mean())
    se = float(squared.std(ddof=1) / math.sqrt(len(squared)))
    return mse, se


def _safe_ratio(numerator: float, denominator: float) -> float:
    if denominator > 0.0:
        return numerator / denominator
    return float("nan") if numerator == 0.0 else float("inf")


def mse_ratio(eps, config: AdaptiveConfig, replicas: int, seed=None) -> MseRatioResult:
    """Monte Carlo mean-squared-error ratio static / adaptive.

    Static runs use the even split.  The two schemes consume independent
    RNG sub-streams derived from the seed; replicas within a scheme advance
    in lockstep on that stream.  Also reports the closed-form ratio
    evaluated at the mean achieved allocation.
    """
    replicas = int(replicas)
    if replicas < 100:
        raise ValidationError(f"need at least 100 replicas, got {replicas}")
    point = as_asymmetry_point(eps)
    if seed is None:
        seed = config.seed
    # Same sub-stream layout as a grid sweep at point index (0, 0), so a
    # one-point sweep reduces to this function exactly.
    rng_static = np.random.default_rng(np.random.SeedSequence((int(seed), 0, 0, 0)))
    rng_adapt = np.random.default_rng(np.random.SeedSequence((int(seed), 0, 0, 1)))
    est_static = _static_batch(point, config.total_uses, replicas, rng_static)
    est_adapt, lambda_eff = _adaptive_batch(point, config, replicas, rng_adapt)
    mse_static, se_static = _mse_with_se(est_static, point.eps1)
    mse_adapt, se_adapt = _mse_with_se(est_adapt, point.eps1)
    ratio = _safe_ratio(mse_static, mse_adapt)
    if math.isfinite(ratio) and mse_static > 0.0:
        se_ratio = ratio * math.sqrt(
            (se_static / mse_static) ** 2 + (se_adapt / mse_adapt) ** 2
        )
    else:
        se_ratio = float("nan")
    mean_lambda = float(lambda_eff.mean())
    return MseRatioResult(
        ratio=ratio,
        standard_error=se_ratio,
        mse_static=mse_static,
        mse_adapt=mse_adapt,
        mean_lambda_eff=mean_lambda,
        analytic_ratio=vratio_analytic(point, mean_lambda),
    )


@dataclass(frozen=True)
class ThetaGrid:
    """Uniform grid over the two arm error rates.

    Axis values are the positive multiples of ``step`` below one, optionally
    augmented with ``extra_values``; pairs whose rates sum to more than one
    fall outside the model and are reported as skipped.  ``low_noise_only``
    keeps pairs with total noise ``theta1 + theta2 <= 1/2``.
    """

    step: float = 0.05
    low_noise_only: bool = False
    extra_values: tuple = ()

    def __post_init__(self) -> None:
        if not 0.0 < self.step < 1.0:
            raise ValidationError(f"step must lie in (0, 1), got {self.step}")
        extras = tuple(float(v) for v in self.extra_values)
        if any(not 0.0 < v < 1.0 for v in extras):
            raise ValidationError("extra grid values must lie in (0, 1)")
        object.__setattr__(self, "step", float(self.step))
        object.__setattr__(self, "extra_values", extras)

    def axis_values(self) -> tuple:
        values = []
        k = 1
        while k * self.step < 1.0 - 1e-12:
            values.append(k * self.step)
            k += 1
        for extra in self.extra_values:
            if not any(abs(extra - v) <= 1e-12 for v in values):
                values.append(extra)
        return tuple(sorted(values))

    def indexed_points(self):
        """All (i, j, theta1, theta2) pairs, split into (valid, skipped)."""
        values = self.axis_values()
        valid = []
        skipped = []
        for i, t1 in enumerate(values):
            for j, t2 in enumerate(values):
                if t1 + t2 > 1.0 + 1e-12:
                    skipped.append((t1, t2))
                    continue
                if self.low_noise_only and t1 + t2 > 0.5 + 1e-12:
                    continue
                valid.append((i, j, t1, t2))
        return valid, skipped


class SweepRow(NamedTuple):
    """One grid point of a static-vs-adaptive sweep (CSV column order)."""

    theta1: float
    theta2: float
    eps1: float
    eps2: float
    log10_ratio_theta: float
    noise_bin: float
    mse_static: float
    mse_adapt: float
    ratio: float
    se_ratio: float


@dataclass(frozen=True)
class SweepResult:
    """All rows of a grid sweep plus the grid points that were skipped."""

    rows: tuple
    skipped: tuple

    def to_csv(self, destination) -> None:
        """Write rows as CSV to a path or text file object."""
        if hasattr(destination, "write"):
            self._write(destination)
        else:
            with open(destination, "w", encoding="utf-8") as handle:
                self._write(handle)

    def _write(self, handle: TextIO) -> None:
        handle.write(",".join(SweepRow._fields) + "\n")
        for row in self.rows:
            handle.write(",".join(f"{value:.12g}" for value in row) + "\n")


def _sweep_point(args) -> SweepRow:
    i, j, theta1, theta2, config, replicas, seed = args
    point = theta_to_eps(theta1, theta2)
    rng_static = np.random.default_rng(np.random.SeedSequence((seed, i, j, 0)))
    rng_adapt = np.random.default_rng(np.random.SeedSequence((seed, i, j, 1)))
    est_static = _static_batch(point, config.total_uses, replicas, rng_static)
    est_adapt, _ = _adaptive_batch(point, config, replicas, rng_adapt)
    mse_static, se_static = _mse_with_se(est_static, point.eps1)
    mse_adapt, se_adapt = _mse_with_se(est_adapt, point.eps1)
    ratio = _safe_ratio(mse_static, mse_adapt)
    if math.isfinite(ratio) and mse_static > 0.0:
        se_ratio = ratio * math.sqrt(
            (se_static / mse_static) ** 2 + (se_adapt / mse_adapt) ** 2
        )
    else:
        se_ratio = float("nan")
    return SweepRow(
        theta1=theta1,
        theta2=theta2,
        eps1=point.eps1,
        eps2=point.eps2,
        log10_ratio_theta=math.log10(theta1 / theta2),
        noise_bin=1.0 - point.eps2,
        mse_static=mse_static,
        mse_adapt=mse_adapt,
        ratio=ratio,
        se_ratio=se_ratio,
    )


def grid_sweep(
    grid: ThetaGrid,
    config: AdaptiveConfig,
    replicas: int,
    seed=None,
    jobs: int = 1,
) -> SweepResult:
    """Static-vs-adaptive MSE ratios over a rate grid.

    Each grid point draws from its own RNG sub-stream keyed on the seed and
    the point's axis indices, so the result is identical however the work is
    distributed.  ``jobs > 1`` fans points out over a process pool.
    """
    replicas = int(replicas)
    if replicas < 100:
        raise ValidationError(f"need at least 100 replicas, got {replicas}")
    if seed is None:
        seed = config.seed
    valid, skipped = grid.indexed_points()
    if not valid:
        raise ValidationError("every grid point fell outside the model domain")
    tasks = [
        (i, j, t1, t2, config, replicas, int(seed)) for (i, j, t1, t2) in valid
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=int(jobs)) as pool:
            rows = list(pool.map(_sweep_point, tasks, chunksize=8))
    else:
        rows = [_sweep_point(task) for task in tasks]
    return SweepResult(rows=tuple(rows), skipped=tuple(skipped))
