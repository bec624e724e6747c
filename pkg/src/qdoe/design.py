"""Optimality criteria and design optimization over sampling frequencies.

A design problem is a finite set of information matrices ``J_1 .. J_m`` and
a convex criterion on their mixture ``M(nu) = sum_i nu_i J_i``.  This module
evaluates criteria, optimizes ``nu`` over the probability simplex, and
provides exact solvers for mixtures of two designs, where the simplex is the
segment ``nu = ((1 + lam) / 2, (1 - lam) / 2)`` with ``lam`` in ``[-1, 1]``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import (
    DegenerateModelError,
    EfficiencyError,
    ValidationError,
)
from .fisher import PINV_TOL, _as_matrix, pseudo_inverse

RANGE_TOL = 1e-8
SUPPORT_PRUNE = 1e-10


@dataclass(frozen=True)
class Criterion:
    """A convex scalarization of the inverse information matrix.

    Use the constructors: :meth:`a` (weighted trace of the inverse),
    :meth:`d` (log determinant of the inverse), :meth:`e` (largest eigenvalue
    of the inverse), :meth:`c` (variance along one direction), :meth:`gamma`
    (power mean of inverse eigenvalues), and :meth:`compound` (convex
    combination of two criteria).
    """

    kind: str
    weight: np.ndarray | None = None
    direction: np.ndarray | None = None
    order: float | None = None
    mix: float | None = None
    parts: tuple | None = None

    @staticmethod
    def a(weight=None) -> "Criterion":
        if weight is not None:
            mat = np.asarray(weight, dtype=float)
            if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
                raise ValidationError("weight must be a square matrix")
            if np.max(np.abs(mat - mat.T)) > 1e-10 * max(1.0, np.max(np.abs(mat))):
                raise ValidationError("weight matrix must be symmetric")
            if np.linalg.eigvalsh(0.5 * (mat + mat.T)).min() < -1e-10:
                raise ValidationError("weight matrix must be positive semidefinite")
            mat = 0.5 * (mat + mat.T)
            mat.setflags(write=False)
            return Criterion(kind="A", weight=mat)
        return Criterion(kind="A")

    @staticmethod
    def d() -> "Criterion":
        return Criterion(kind="D")

    @staticmethod
    def e() -> "Criterion":
        return Criterion(kind="E")

    @staticmethod
    def c(direction) -> "Criterion":
        vec = np.asarray(direction, dtype=float).reshape(-1)
        if np.linalg.norm(vec) == 0.0:
            raise ValidationError("direction must be nonzero")
        vec = vec.copy()
        vec.setflags(write=False)
        return Criterion(kind="c", direction=vec)

    @staticmethod
    def gamma(order: float) -> "Criterion":
        if not (order > 0.0 and math.isfinite(order)):
            raise ValidationError(f"gamma order must be positive, got {order}")
        return Criterion(kind="gamma", order=float(order))

    @staticmethod
    def compound(mix: float, first: "Criterion", second: "Criterion") -> "Criterion":
        if not 0.0 <= mix <= 1.0:
            raise ValidationError(f"compound mix must be in [0, 1], got {mix}")
        return Criterion(kind="compound", mix=float(mix), parts=(first, second))

    def smooth(self) -> bool:
        """Whether the criterion admits a Newton polish (E does not)."""
        if self.kind == "compound":
            return all(p.smooth() for p in self.parts)
        return self.kind != "E"


def evaluate_criterion(criterion: Criterion, matrix) -> float:
    """Value of a criterion at an information matrix.

    Returns ``inf`` when the matrix carries no information along a direction
    the criterion cares about.  The D criterion evaluates to
    ``-log det``; :func:`optimize_frequencies` converts back to the
    determinant scale for reporting.
    """
    mat = _as_matrix(matrix)
    n = mat.shape[0]
    w, v = np.linalg.eigh(0.5 * (mat + mat.T))
    cutoff = PINV_TOL * max(w.max(initial=0.0), 0.0)
    keep = w > cutoff
    kind = criterion.kind

    if kind == "A":
        wt = criterion.weight if criterion.weight is not None else np.eye(n)
        if wt.shape != (n, n):
            raise ValidationError(
                f"weight matrix shape {wt.shape} does not match n={n}"
            )
        rotated = v.T @ wt @ v
        diag = np.diag(rotated)
        null_mass = diag[~keep].sum()
        if null_mass > RANGE_TOL * max(np.trace(wt), 1e-300):
            return float("inf")
        return float((diag[keep] / w[keep]).sum())

    if kind == "c":
        vec = criterion.direction
        if vec.shape != (n,):
            raise ValidationError(f"direction length {vec.size} does not match n={n}")
        coef = v.T @ vec
        if np.linalg.norm(coef[~keep]) > RANGE_TOL * np.linalg.norm(vec):
            return float("inf")
        return float((coef[keep] ** 2 / w[keep]).sum())

    if kind == "D":
        if not np.all(keep):
            return float("inf")
        return float(-np.log(w).sum())

    if kind == "E":
        if not np.all(keep):
            return float("inf")
        return float(1.0 / w.min())

    if kind == "gamma":
        if not np.any(keep):
            return float("inf")
        if not np.all(keep):
            warnings.warn(
                "rank-deficient matrix under the gamma criterion; scoring "
                "the pseudo-inverse eigenvalues only",
                RuntimeWarning,
                stacklevel=2,
            )
        order = criterion.order
        logs = -order * np.log(w[keep])
        peak = logs.max()
        log_sum = peak + np.log(np.exp(logs - peak).sum())
        return float(np.exp((log_sum - np.log(n)) / order))

    if kind == "compound":
        p = criterion.mix
        first, second = criterion.parts
        total = 0.0
        if p > 0.0:
            total += p * evaluate_criterion(first, mat)
        if p < 1.0:
            total += (1.0 - p) * evaluate_criterion(second, mat)
        return float(total)

    raise ValidationError(f"unknown criterion kind {kind!r}")


def _criterion_gradient(criterion: Criterion, mats: np.ndarray, nu: np.ndarray):
    """Gradient of ``nu -> evaluate_criterion(criterion, sum nu_i J_i)``.

    Uses the pseudo-inverse where the mixture is singular, which matches the
    directional derivative along range-preserving directions; for the E
    criterion this is a subgradient built from the smallest eigenvector.
    """
    total = np.einsum("i,ijk->jk", nu, mats)
    total = 0.5 * (total + total.T)
    n = total.shape[0]
    w, v = np.linalg.eigh(total)
    cutoff = PINV_TOL * max(w.max(initial=0.0), 0.0)
    keep = w > cutoff
    inv_w = np.where(keep, 1.0 / np.where(keep, w, 1.0), 0.0)
    pinv = (v * inv_w) @ v.T
    kind = criterion.kind

    if kind in ("A", "c"):
        if kind == "A":
            wt = criterion.weight if criterion.weight is not None else np.eye(n)
        else:
            wt = np.outer(criterion.direction, criterion.direction)
        inner = pinv @ wt @ pinv
        return -np.einsum("jk,ikj->i", inner, mats)

    if kind == "D":
        return -np.einsum("jk,ikj->i", pinv, mats)

    if kind == "E":
        u = v[:, 0]
        lam = w[0]
        if lam <= cutoff:
            lam = max(lam, cutoff, 1e-300)
        return -np.einsum("j,ijk,k->i", u, mats, u) / lam**2

    if kind == "gamma":
        order = criterion.order
        if not np.any(keep):
            return np.zeros(len(nu))
        wk = w[keep]
        vk = v[:, keep]
        trace_pow = np.sum(wk**-order)
        value = (trace_pow / n) ** (1.0 / order)
        # d tr(M^-g) / d nu_i = -g * tr(M^(-g-1) J_i) on the range
        inner = (vk * wk ** (-order - 1.0)) @ vk.T
        dtrace = -order * np.einsum("jk,ikj->i", inner, mats)
        return value / (order * trace_pow) * dtrace

    if kind == "compound":
        p = criterion.mix
        first, second = criterion.parts
        grad = np.zeros(len(nu))
        if p > 0.0:
            grad += p * _criterion_gradient(first, mats, nu)
        if p < 1.0:
            grad += (1.0 - p) * _criterion_gradient(second, mats, nu)
        return grad

    raise ValidationError(f"unknown criterion kind {kind!r}")


def _criterion_hessian(criterion: Criterion, mats: np.ndarray, nu: np.ndarray):
    """Hessian of the mixture objective; analytic for A, c, and D."""
    kind = criterion.kind
    if kind in ("A", "c", "D"):
        total = np.einsum("i,ijk->jk", nu, mats)
        pinv = pseudo_inverse(total)
        folded = np.einsum("ijk,kl->ijl", mats, pinv)  # J_i M^-1
        if kind == "D":
            # H_ij = tr(M^-1 J_i M^-1 J_j)
            left = np.einsum("jk,ikl->ijl", pinv, mats)
            return np.einsum("iab,jba->ij", left, left)
        if kind == "A":
            wt = criterion.weight if criterion.weight is not None else np.eye(
                total.shape[0]
            )
        else:
            wt = np.outer(criterion.direction, criterion.direction)
        core = pinv @ wt @ pinv
        # H_ij = tr(W M^-1 J_i M^-1 J_j M^-1) + (i <-> j), written with the
        # cyclic shift M^-1 W M^-1 J_i M^-1 J_j so one factor stays raw.
        h = np.einsum("ab,ibc,jca->ij", core, folded, mats)
        return h + h.T
    # Fall back to differentiating the gradient.
    m = len(nu)
    step = 1e-6
    hess = np.empty((m, m))
    for i in range(m):
        probe = np.zeros(m)
        probe[i] = step
        g_hi = _criterion_gradient(criterion, mats, nu + probe)
        g_lo = _criterion_gradient(criterion, mats, nu - probe)
        hess[i] = (g_hi - g_lo) / (2.0 * step)
    return 0.5 * (hess + hess.T)


def project_to_simplex(vec) -> np.ndarray:
    """Euclidean projection onto the probability simplex."""
    v = np.asarray(vec, dtype=float).reshape(-1)
    n = v.size
    u = np.sort(v)[::-1]
    cumulative = np.cumsum(u)
    positions = np.arange(1, n + 1)
    rho = np.nonzero(u * positions > (cumulative - 1.0))[0][-1]
    tau = (cumulative[rho] - 1.0) / (rho + 1.0)
    return np.maximum(v - tau, 0.0)


@dataclass(frozen=True)
class OptimalDesignResult:
    """Optimized sampling frequencies for a finite design menu."""

    criterion: Criterion
    weights: np.ndarray
    value: float
    support_size: int
    theta: np.ndarray | None = None


def _display_value(criterion: Criterion, internal: float) -> float:
    # The D criterion optimizes -log det; report det of the inverse instead.
    if criterion.kind == "D" and math.isfinite(internal):
        return math.exp(internal)
    return internal


def _pgd(objective, gradient, start, max_iter=2000, tol=1e-12):
    nu = start.copy()
    value = objective(nu)
    step = 1.0
    for _ in range(max_iter):
        grad = gradient(nu)
        accepted = False
        trial = step
        for _ in range(60):
            cand = project_to_simplex(nu - trial * grad)
            move = cand - nu
            if np.max(np.abs(move)) < 1e-16:
                break
            cand_value = objective(cand)
            if cand_value <= value - 1e-4 / trial * float(move @ move):
                accepted = True
                break
            trial *= 0.5
        if not accepted:
            break
        improvement = value - cand_value
        nu, value = cand, cand_value
        step = trial * 2.0
        if improvement <= tol * max(1.0, abs(value)):
            break
    return nu, value


def _tangent_basis(k: int) -> np.ndarray:
    _, _, vt = np.linalg.svd(np.ones((1, k)))
    return vt[1:].T


def _newton_polish(criterion, mats, nu, objective, max_iter=40):
    nu = nu.copy()
    value = objective(nu)
    for _ in range(max_iter):
        support = np.nonzero(nu > SUPPORT_PRUNE)[0]
        if len(support) <= 1:
            break
        sub = mats[support]
        local = nu[support] / nu[support].sum()
        grad = _criterion_gradient(criterion, sub, local)
        hess = _criterion_hessian(criterion, sub, local)
        basis = _tangent_basis(len(support))
        reduced_h = basis.T @ hess @ basis
        reduced_g = basis.T @ grad
        try:
            alpha = np.linalg.solve(
                reduced_h + 1e-14 * np.eye(len(reduced_g)), -reduced_g
            )
        except np.linalg.LinAlgError:
            break
        direction = basis @ alpha
        if not np.all(np.isfinite(direction)):
            break
        # Largest step keeping the face nonnegative.
        negative = direction < 0
        limit = 1.0
        if np.any(negative):
            limit = min(1.0, float(np.min(-local[negative] / direction[negative])))
        scale = limit
        improved = False
        for _ in range(30):
            trial = nu.copy()
            trial[support] = np.clip(local + scale * direction, 0.0, None)
            total = trial.sum()
            if total <= 0:
                break
            trial /= total
            trial_value = objective(trial)
            # Accept ties, and near-ties once the step itself is tiny.
            # Close to the optimum a productive Newton step moves the value
            # by less than float64 resolution, so demanding strict descent
            # would freeze the weights at sqrt(eps) accuracy.
            step_norm = float(np.linalg.norm(scale * direction))
            tie_slack = 8.0 * np.finfo(float).eps * max(1.0, abs(value))
            if trial_value <= value or (
                step_norm < 1e-6 and trial_value <= value + tie_slack
            ):
                nu, value = trial, trial_value
                improved = True
                break
            scale *= 0.5
        if not improved or float(np.linalg.norm(scale * direction)) < 1e-13:
            break
    return nu, value


def _wants_full_rank(criterion: Criterion) -> bool:
    if criterion.kind == "gamma":
        return True
    if criterion.kind == "compound":
        return any(_wants_full_rank(part) for part in criterion.parts)
    return False


def _optimization_value(criterion: Criterion, total: np.ndarray) -> float:
    """Criterion value as seen by the simplex optimizer.

    The gamma criterion scores rank-deficient matrices with their
    pseudo-inverse eigenvalues, which would make uninformative vertices
    look attractive; inside the optimizer the value from the interior
    limit (infinite) is the right one.
    """
    if _wants_full_rank(criterion):
        w = np.linalg.eigvalsh(0.5 * (total + total.T))
        if w.min() <= PINV_TOL * max(w.max(), 0.0):
            return float("inf")
    return evaluate_criterion(criterion, total)


def optimize_frequencies(
    criterion: Criterion,
    fims: Sequence,
    *,
    starts: int = 20,
    max_iter: int = 2000,
    tol: float = 1e-12,
    seed: int = 1905,
    theta=None,
) -> OptimalDesignResult:
    """Minimize a criterion over mixing frequencies on the simplex.

    Runs projected gradient descent from several starting points (uniform,
    each vertex, and Dirichlet draws from a fixed internal seed), polishes
    smooth criteria with a Newton step on the active face, prunes weights
    below ``1e-10``, and greedily removes redundant support atoms so the
    returned support is no larger than the Caratheodory bound
    ``n (n + 1) / 2 + 1``.
    """
    mats = np.array([_as_matrix(f) for f in fims], dtype=float)
    if mats.ndim != 3 or mats.shape[0] == 0:
        raise ValidationError("at least one information matrix is required")
    m, n = mats.shape[0], mats.shape[1]
    if mats.shape[2] != n:
        raise ValidationError("information matrices must be square")
    if np.max(np.abs(mats)) == 0.0:
        raise DegenerateModelError("every candidate design is uninformative")

    def objective(nu):
        total = np.einsum("i,ijk->jk", nu, mats)
        return _optimization_value(criterion, total)

    def gradient(nu):
        return _criterion_gradient(criterion, mats, nu)

    uniform = np.full(m, 1.0 / m)
    if not math.isfinite(objective(uniform)):
        raise DegenerateModelError(
            "criterion is infinite for every mixture of the given designs"
        )

    rng = np.random.default_rng(seed)
    start_points = [uniform]
    start_points += [np.eye(m)[i] for i in range(min(m, 12))]
    while len(start_points) < max(starts, 1):
        start_points.append(rng.dirichlet(np.ones(m)))

    best_nu, best_value = None, float("inf")

    def consider(nu, value):
        nonlocal best_nu, best_value
        if not math.isfinite(value):
            return
        margin = 1e-12 * (1.0 + abs(best_value)) if best_nu is not None else 0.0
        if value < best_value - margin:
            best_nu, best_value = nu.copy(), value
        elif best_nu is not None and abs(value - best_value) <= margin:
            if np.count_nonzero(nu > SUPPORT_PRUNE) < np.count_nonzero(
                best_nu > SUPPORT_PRUNE
            ):
                best_nu, best_value = nu.copy(), value

    # Vertices are candidate solutions in their own right.
    for i in range(m):
        vertex = np.eye(m)[i]
        consider(vertex, objective(vertex))

    for start in start_points:
        point = start
        if not math.isfinite(objective(point)):
            point = 0.5 * point + 0.5 * uniform
            if not math.isfinite(objective(point)):
                continue
        nu, value = _pgd(objective, gradient, point, max_iter=max_iter, tol=tol)
        if criterion.smooth():
            nu, value = _newton_polish(criterion, mats, nu, objective)
        consider(nu, value)

    nu = best_nu
    nu = np.where(nu > SUPPORT_PRUNE, nu, 0.0)
    nu /= nu.sum()
    value = objective(nu)

    bound = n * (n + 1) // 2 + 1
    while np.count_nonzero(nu) > bound:
        support = np.nonzero(nu)[0]
        order = support[np.argsort(nu[support])]
        removed = False
        for idx in order:
            trial = nu.copy()
            trial[idx] = 0.0
            trial /= trial.sum()
            if criterion.smooth():
                trial, trial_value = _newton_polish(
                    criterion, mats, trial, objective
                )
            else:
                trial, trial_value = _pgd(
                    objective, gradient, trial, max_iter=200, tol=tol
                )
            if trial_value <= value + 1e-9 * (1.0 + abs(value)):
                nu = np.where(trial > SUPPORT_PRUNE, trial, 0.0)
                nu /= nu.sum()
                value = objective(nu)
                removed = True
                break
        if not removed:
            break

    theta_arr = None if theta is None else np.asarray(theta, dtype=float)
    return OptimalDesignResult(
        criterion=criterion,
        weights=nu,
        value=_display_value(criterion, value),
        support_size=int(np.count_nonzero(nu)),
        theta=theta_arr,
    )


class GammaLimitsReport(NamedTuple):
    """Consistency check of the power-mean criterion against its limits."""

    det_root_value: float
    small_order_value: float
    max_inverse_eigenvalue: float
    large_order_value: float
    chain_ok: bool
    ok: bool


def gamma_limits_consistency(matrix) -> GammaLimitsReport:
    """Check that the power-mean criterion interpolates its named limits.

    At order ``1e-6`` the value must recover the geometric mean of the
    inverse eigenvalues to 1e-4 relative; at order ``1e3`` it must land
    within 1% of the largest inverse eigenvalue; and the geometric mean,
    arithmetic mean, and maximum must be ordered.
    """
    mat = _as_matrix(matrix)
    w = np.linalg.eigvalsh(0.5 * (mat + mat.T))
    if w.min() <= 0.0:
        raise ValidationError("consistency check needs a positive definite matrix")
    inv = 1.0 / w
    det_root = float(np.exp(np.mean(np.log(inv))))
    small = evaluate_criterion(Criterion.gamma(1e-6), mat)
    large = evaluate_criterion(Criterion.gamma(1e3), mat)
    peak = float(inv.max())
    mean = float(inv.mean())
    chain_ok = det_root <= mean * (1.0 + 1e-9) and mean <= peak * (1.0 + 1e-9)
    ok = (
        abs(small - det_root) <= 1e-4 * det_root
        and abs(large - peak) <= 1e-2 * peak
        and chain_ok
    )
    return GammaLimitsReport(det_root, small, peak, large, chain_ok, ok)


def gamma_optimal_diagonal(variances, order: float) -> np.ndarray:
    """Optimal frequencies for independent scalar subproblems.

    ``variances[i]`` is the single-use variance of arm ``i``; the power-mean
    objective ``(sum_i (variances_i / nu_i)^order)^(1/order)`` is minimized by
    ``nu_i`` proportional to ``variances_i^(order / (1 + order))``.
    """
    a = np.asarray(variances, dtype=float).reshape(-1)
    if not (order > 0.0 and math.isfinite(order)):
        raise ValidationError(f"order must be positive, got {order}")
    if np.min(a) < 0.0 or not np.all(np.isfinite(a)):
        raise ValidationError("variances must be finite and nonnegative")
    if np.max(a) == 0.0:
        raise ValidationError("at least one variance must be positive")
    weights = a ** (order / (1.0 + order))
    return weights / weights.sum()


def gamma_optimal_value(variances, order: float) -> float:
    """Optimal value of the diagonal power-mean allocation problem.

    Equals ``(sum_i a_i^(order/(1+order)))^((1+order)/order)``.  Note the
    power-mean criterion itself carries an extra ``n^(-1/order)`` factor from
    averaging instead of summing over eigenvalues.
    """
    a = np.asarray(variances, dtype=float).reshape(-1)
    nu = gamma_optimal_diagonal(a, order)
    return float(np.sum(a ** (order / (1.0 + order))) ** ((1.0 + order) / order))


def _adjugate_2x2(mat: np.ndarray) -> np.ndarray:
    return np.array([[mat[1, 1], -mat[0, 1]], [-mat[1, 0], mat[0, 0]]])


@dataclass(frozen=True)
class BinaryDesignSummary:
    """Invariants of a two-design problem with 2x2 information matrices.

    ``d_plus`` and ``d_minus`` are the coefficients of the mixture
    determinant ``4 det M(lam) = d_minus lam^2 + 2 (d1 - d2) lam + d_plus``;
    ``d_minus`` also equals ``det(J1 - J2)``, whose sign decides whether the
    two matrices are ordered in the positive-semidefinite sense
    (``lowner_exists``).
    """

    j1: np.ndarray
    j2: np.ndarray
    t1: float
    t2: float
    d1: float
    d2: float
    d_plus: float
    d_minus: float
    lowner_exists: bool

    @classmethod
    def from_matrices(cls, j1, j2) -> "BinaryDesignSummary":
        a = _as_matrix(j1)
        b = _as_matrix(j2)
        if a.shape != (2, 2) or b.shape != (2, 2):
            raise ValidationError("binary design summaries need 2x2 matrices")
        for name, mat in (("j1", a), ("j2", b)):
            if np.max(np.abs(mat - mat.T)) > 1e-9 * max(1.0, np.max(np.abs(mat))):
                raise ValidationError(f"{name} is not symmetric")
            if np.linalg.eigvalsh(0.5 * (mat + mat.T)).min() < -1e-9:
                raise ValidationError(f"{name} is not positive semidefinite")
        a = 0.5 * (a + a.T)
        b = 0.5 * (b + b.T)
        d1 = float(np.linalg.det(a))
        d2 = float(np.linalg.det(b))
        cross = float(np.trace(a @ _adjugate_2x2(b)))
        scale = max(np.max(np.abs(a)), np.max(np.abs(b)), 1.0)
        d_minus = d1 + d2 - cross
        a.setflags(write=False)
        b.setflags(write=False)
        return cls(
            j1=a,
            j2=b,
            t1=float(np.trace(a)),
            t2=float(np.trace(b)),
            d1=d1,
            d2=d2,
            d_plus=d1 + d2 + cross,
            d_minus=d_minus,
            lowner_exists=bool(d_minus >= -1e-12 * scale**2),
        )

    def mixture(self, lam: float) -> np.ndarray:
        return 0.5 * (1.0 + lam) * self.j1 + 0.5 * (1.0 - lam) * self.j2

    def det_quadratic(self, lam: float) -> float:
        """``4 det M(lam)`` as a quadratic in the segment coordinate."""
        return (
            self.d_minus * lam**2 + 2.0 * (self.d1 - self.d2) * lam + self.d_plus
        )


class BinaryDResult(NamedTuple):
    lambda_star: float
    value: float


def binary_d_optimal(summary: BinaryDesignSummary) -> BinaryDResult:
    """Determinant-optimal point on a two-design segment.

    Maximizes ``det M(lam)``.  Equal matrices return the midpoint by
    convention; a vertex tie prefers ``lam = +1``.
    """
    scale = max(np.max(np.abs(summary.j1)), np.max(np.abs(summary.j2)), 1.0)
    if np.max(np.abs(summary.j1 - summary.j2)) <= 1e-12 * scale:
        return BinaryDResult(0.0, summary.d1)
    gap = summary.d1 - summary.d2
    if summary.d_minus < 0.0 and abs(gap) < -summary.d_minus:
        lam = -gap / summary.d_minus
        return BinaryDResult(float(lam), summary.det_quadratic(lam) / 4.0)
    lam = 1.0 if summary.d1 >= summary.d2 else -1.0
    return BinaryDResult(lam, max(summary.d1, summary.d2))


class BinaryAResult(NamedTuple):
    lambda_star: float
    value: float
    branch: str


def _vertex_trace_value(mat: np.ndarray, weight: np.ndarray) -> float:
    w, v = np.linalg.eigh(mat)
    keep = w > PINV_TOL * max(w.max(initial=0.0), 0.0)
    rotated = np.diag(v.T @ weight @ v)
    if rotated[~keep].sum() > RANGE_TOL * max(np.trace(weight), 1e-300):
        return float("inf")
    return float((rotated[keep] / w[keep]).sum())


def _binary_a_core(summary: BinaryDesignSummary, weight: np.ndarray):
    w1 = float(np.trace(weight @ _adjugate_2x2(summary.j1)))
    w2 = float(np.trace(weight @ _adjugate_2x2(summary.j2)))
    u = w1 - w2
    v = w1 + w2

    def value_at(lam: float) -> float:
        quad = summary.det_quadratic(lam)
        if quad <= 0.0:
            return float("inf")
        return 2.0 * (u * lam + v) / quad

    # Stationary points of 2 (u lam + v) / det_quadratic(lam).
    coeffs = np.array(
        [
            u * summary.d_minus,
            2.0 * v * summary.d_minus,
            2.0 * v * (summary.d1 - summary.d2) - u * summary.d_plus,
        ]
    )
    candidates = []
    if np.max(np.abs(coeffs)) > 0.0:
        if abs(coeffs[0]) > 1e-14 * np.max(np.abs(coeffs)):
            roots = np.roots(coeffs)
        elif abs(coeffs[1]) > 0.0:
            roots = np.array([-coeffs[2] / coeffs[1]])
        else:
            roots = np.array([])
        for root in roots:
            if abs(root.imag) < 1e-9 and abs(root.real) < 1.0 - 1e-12:
                lam = float(root.real)
                candidates.append((lam, value_at(lam), "interior"))
    candidates.append((1.0, _vertex_trace_value(summary.j1, weight), "vertex"))
    candidates.append((-1.0, _vertex_trace_value(summary.j2, weight), "vertex"))

    finite = [c for c in candidates if math.isfinite(c[1])]
    if not finite:
        return BinaryAResult(0.0, float("inf"), "degenerate")
    lam, value, winner_kind = min(finite, key=lambda c: c[1])

    rel = abs(u) <= 1e-9 * (abs(w1) + abs(w2) + 1e-300)
    if rel:
        if abs(summary.d1 - summary.d2) > abs(summary.d_minus):
            branch = "special-extremal"
        else:
            branch = "special-interior"
    else:
        branch = winner_kind
    return BinaryAResult(float(lam), float(value), branch)


def binary_a_optimal(summary: BinaryDesignSummary, weight=None) -> BinaryAResult:
    """Trace-optimal point on a two-design segment.

    Minimizes ``tr(W M(lam)^-1)`` exactly via the stationarity quadratic
    plus vertex comparison.  A rank-deficient ``W`` is handled by
    regularizing its null space at three shrinking strengths and
    extrapolating the solution linearly to zero regularization.  The branch
    label records how the optimum arose: "interior" or "vertex" for generic
    weights, "special-interior" or "special-extremal" when both vertices
    yield the same weighted adjugate trace, "constant" when the two matrices
    coincide, and "degenerate" when no mixture supports the weight.
    """
    if weight is None:
        wt = np.eye(2)
    else:
        wt = np.asarray(weight, dtype=float)
        if wt.shape != (2, 2):
            raise ValidationError("weight must be a 2x2 matrix")
        if np.max(np.abs(wt - wt.T)) > 1e-10 * max(1.0, np.max(np.abs(wt))):
            raise ValidationError("weight must be symmetric")
        wt = 0.5 * (wt + wt.T)

    eigs, vecs = np.linalg.eigh(wt)
    if eigs.min() < -1e-12:
        raise ValidationError("weight must be positive semidefinite")

    scale = max(np.max(np.abs(summary.j1)), np.max(np.abs(summary.j2)), 1.0)
    if np.max(np.abs(summary.j1 - summary.j2)) <= 1e-12 * scale:
        return BinaryAResult(0.0, _vertex_trace_value(summary.j1, wt), "constant")

    deficient = eigs.min() <= 1e-12 * max(eigs.max(), 0.0)
    if not deficient:
        return _binary_a_core(summary, wt)

    null_mask = eigs <= 1e-12 * max(eigs.max(), 0.0)
    null_proj = vecs[:, null_mask] @ vecs[:, null_mask].T
    strengths = (1e-4, 1e-6, 1e-8)
    solved = [
        _binary_a_core(summary, wt + eps * max(eigs.max(), 1.0) * null_proj)
        for eps in strengths
    ]
    if not all(math.isfinite(r.value) for r in solved):
        return BinaryAResult(0.0, float("inf"), "degenerate")
    mid, last = solved[1], solved[2]
    ratio = strengths[2] / (strengths[1] - strengths[2])
    lam = last.lambda_star + (last.lambda_star - mid.lambda_star) * ratio
    value = last.value + (last.value - mid.value) * ratio
    return BinaryAResult(float(lam), float(value), last.branch)


class LownerReport(NamedTuple):
    """Outcome of a dominance scan over candidate information matrices."""

    dominant_index: int | None
    weight_sweep_agrees: bool | None


def lowner_check(fims: Sequence, *, sweep: int = 20, seed: int = 1734) -> LownerReport:
    """Look for a design whose information dominates all others.

    A dominant matrix beats every other in the positive-semidefinite order
    (eigenvalue tolerance ``-1e-9`` relative to the overall scale).  When one
    exists, random positive weight matrices are swept to confirm it also wins
    every weighted-trace comparison; the sweep result is ``None`` when there
    is no dominant design.
    """
    mats = [(_as_matrix(f)) for f in fims]
    if len(mats) < 2:
        raise ValidationError("dominance check needs at least two matrices")
    n = mats[0].shape[0]
    scale = max(max(np.max(np.abs(m)) for m in mats), 1.0)
    dominant = None
    for i, a in enumerate(mats):
        if all(
            i == j or np.linalg.eigvalsh(a - b).min() >= -1e-9 * scale
            for j, b in enumerate(mats)
        ):
            dominant = i
            break
    if dominant is None:
        return LownerReport(None, None)
    rng = np.random.default_rng(seed)
    agrees = True
    for _ in range(sweep):
        g = rng.standard_normal((n, n))
        wt = g.T @ g
        values = [_vertex_trace_value(m, wt) for m in mats]
        best = min(values)
        winners = {
            j for j, val in enumerate(values) if val <= best + 1e-9 * (1.0 + abs(best))
        }
        if dominant not in winners:
            agrees = False
            break
    return LownerReport(dominant, agrees)


def efficiency(optimal_value: float, value: float) -> float:
    """Relative efficiency ``optimal / value`` of a design, clipped to [0, 1].

    Both numbers must be on a positive scale (for the determinant criterion
    use the determinant of the inverse, not its logarithm).  An infinite
    ``value`` gives efficiency 0.
    """
    if not math.isfinite(optimal_value) or optimal_value < 0.0:
        raise EfficiencyError(f"invalid reference value {optimal_value}")
    if math.isnan(value) or value <= 0.0:
        raise EfficiencyError(f"efficiency undefined for criterion value {value}")
    if math.isinf(value):
        return 0.0
    return float(min(max(optimal_value / value, 0.0), 1.0))


class DominantDesignReport(NamedTuple):
    """Concentration check: a dominant design should take all the weight."""

    dominant_index: int
    weights: np.ndarray
    value: float
    concentrated: bool


def iid_vs_mixed_under_lowner(
    fims: Sequence, criterion: Criterion
) -> DominantDesignReport:
    """Verify that optimization concentrates on a dominating design.

    Requires one matrix to dominate the rest; mixing can then never beat
    repeating the dominant design, so the optimizer must put weight
    ``>= 1 - 1e-8`` on it.
    """
    report = lowner_check(fims)
    if report.dominant_index is None:
        raise ValidationError("no design dominates the others")
    result = optimize_frequencies(criterion, fims)
    dom = report.dominant_index
    return DominantDesignReport(
        dominant_index=dom,
        weights=result.weights,
        value=result.value,
        concentrated=bool(result.weights[dom] >= 1.0 - 1e-8),
    )
