"""Classical and quantum Fisher information for qubit channel families.

The classical side scores a concrete experiment (probe state, channel,
measurement); the quantum side computes the measurement-optimized bound via
symmetric logarithmic derivatives.  Both return a :class:`FisherMatrix`, a
validated symmetric positive semidefinite matrix tagged with its kind.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import (
    DegenerateModelError,
    NuisanceSingularError,
    SingularStateError,
    ValidationError,
)
from .qubit import (
    ChannelFamily,
    Povm,
    QubitState,
    PAULIS,
    bloch_to_density,
    born_probabilities,
)

P_FLOOR = 1e-12
EIG_FLOOR = 1e-12
PINV_TOL = 1e-10
RESIDUAL_TOL = 1e-9
PSD_TOL = 1e-9


def _as_matrix(value) -> np.ndarray:
    if isinstance(value, FisherMatrix):
        return value.matrix
    mat = np.asarray(value, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {mat.shape}")
    return mat


@dataclass(frozen=True)
class FisherMatrix:
    """A symmetric positive semidefinite information matrix.

    ``kind`` records how it was produced ("classical" or "sld-quantum").
    The stored matrix is symmetrized and read only.
    """

    matrix: np.ndarray
    kind: str = "classical"

    def __post_init__(self) -> None:
        mat = np.asarray(self.matrix, dtype=float)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValidationError(f"information matrix must be square, got {mat.shape}")
        if not np.all(np.isfinite(mat)):
            raise ValidationError("information matrix must be finite")
        if np.max(np.abs(mat - mat.T)) > 1e-9 * max(1.0, np.max(np.abs(mat))):
            raise ValidationError("information matrix is not symmetric")
        sym = 0.5 * (mat + mat.T)
        if np.linalg.eigvalsh(sym).min() < -PSD_TOL:
            raise ValidationError("information matrix has a negative eigenvalue")
        sym.setflags(write=False)
        object.__setattr__(self, "matrix", sym)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.matrix
        return self.matrix.astype(dtype)


@dataclass(frozen=True)
class Design:
    """One experimental arm: a probe state and a measurement."""

    state: QubitState
    povm: Povm


@dataclass(frozen=True)
class MixedDesign:
    """A convex combination of designs with sampling frequencies."""

    weights: np.ndarray
    designs: tuple

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=float)
        designs = tuple(self.designs)
        if w.ndim != 1 or len(w) != len(designs):
            raise ValidationError("one weight per design is required")
        if len(designs) == 0:
            raise ValidationError("mixed design needs at least one design")
        if np.min(w) < -1e-12:
            raise ValidationError("design weights must be nonnegative")
        if abs(w.sum() - 1.0) > 1e-10:
            raise ValidationError(f"design weights sum to {w.sum():.12g}, not 1")
        w = np.clip(w, 0.0, None)
        w = w / w.sum()
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "designs", designs)


def classical_fisher(
    family: ChannelFamily, design: Design, theta
) -> FisherMatrix:
    """Fisher information of one design's outcome distribution.

    Outcomes with probability at or below ``1e-12`` are skipped; their
    score contributions are treated as zero.
    """
    channel = family.channel_at(theta)
    partials = family.partials_at(theta)
    probs = born_probabilities(design.state, channel, design.povm)
    _, m = design.povm.bloch_components()
    s_in = design.state.bloch
    # dp_x/dtheta_i = m_x . (dA_i s + db_i)
    dout = np.array([p.apply_bloch(s_in) for p in partials])  # (n_params, 3)
    dp = m @ dout.T  # (n_outcomes, n_params)
    keep = probs > P_FLOOR
    if not np.any(keep):
        raise DegenerateModelError("all outcome probabilities are at the floor")
    contrib = dp[keep] / np.sqrt(probs[keep])[:, None]
    return FisherMatrix(contrib.T @ contrib, kind="classical")


def mixed_fisher(family: ChannelFamily, mixed: MixedDesign, theta) -> FisherMatrix:
    """Information matrix of a frequency-weighted mixture of designs."""
    total = None
    for w, design in zip(mixed.weights, mixed.designs):
        if w == 0.0:
            continue
        j = classical_fisher(family, design, theta).matrix
        total = w * j if total is None else total + w * j
    if total is None:
        raise DegenerateModelError("mixed design has no design with positive weight")
    return FisherMatrix(total, kind="classical")


class ScoreSet(NamedTuple):
    """Symmetric logarithmic derivatives at a channel output state."""

    operators: tuple
    output_density: np.ndarray


def sld_operators(family: ChannelFamily, state: QubitState, theta) -> ScoreSet:
    """Solve the symmetric-logarithmic-derivative equations at the output.

    Works in the output state's eigenbasis, where the defining equation
    ``d(rho) = (L rho + rho L) / 2`` becomes entrywise division by eigenvalue
    sums.  Entries whose eigenvalue sum is at most ``1e-12`` are set to zero;
    if such an entry carries derivative weight above ``1e-9`` the derivative
    points outside the state's support and the problem has no finite answer.
    """
    channel = family.channel_at(theta)
    partials = family.partials_at(theta)
    s_out = channel.apply_bloch(state.bloch)
    rho = bloch_to_density(QubitState(s_out))
    w, v = np.linalg.eigh(rho)
    denom = w[:, None] + w[None, :]
    ops = []
    for k, part in enumerate(partials):
        ds = part.apply_bloch(state.bloch)
        drho = 0.5 * (ds[0] * PAULIS[0] + ds[1] * PAULIS[1] + ds[2] * PAULIS[2])
        d_eig = v.conj().T @ drho @ v
        dead = denom <= EIG_FLOOR
        if np.any(dead & (np.abs(d_eig) > RESIDUAL_TOL)):
            raise SingularStateError(
                f"derivative {k} has weight outside the output state's support"
            )
        l_eig = np.where(dead, 0.0, 2.0 * d_eig / np.where(dead, 1.0, denom))
        l_op = v @ l_eig @ v.conj().T
        l_op = 0.5 * (l_op + l_op.conj().T)
        residual = drho - 0.5 * (l_op @ rho + rho @ l_op)
        # Off-support residual was already checked above; on the support the
        # reconstruction must close to numerical precision.
        if np.max(np.abs(np.where(dead, 0.0, v.conj().T @ residual @ v))) > RESIDUAL_TOL:
            raise SingularStateError(
                f"score equation residual too large for derivative {k}"
            )
        ops.append(l_op)
    return ScoreSet(tuple(ops), rho)


def sld_qfi(family: ChannelFamily, state: QubitState, theta) -> FisherMatrix:
    """Quantum Fisher information via symmetric logarithmic derivatives."""
    scores = sld_operators(family, state, theta)
    rho = scores.output_density
    n = len(scores.operators)
    mat = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            li, lj = scores.operators[i], scores.operators[j]
            val = 0.5 * np.trace(rho @ (li @ lj + lj @ li)).real
            mat[i, j] = val
            mat[j, i] = val
    return FisherMatrix(mat, kind="sld-quantum")


def scaling_qfi_closed_form(theta, state: QubitState) -> FisherMatrix:
    """Quantum Fisher information of the axis-scaling family, in closed form.

    For output Bloch vector ``r`` with components ``theta_i * s_i`` the matrix
    is ``diag(s) (I + r r^T / (1 - |r|^2)) diag(s)``.  The diagonal factor
    uses the probe components ``s_i`` with their signs; replacing them by
    absolute values changes the result for mixed-sign probes and no longer
    matches the operator-level computation.
    """
    vec = np.asarray(theta, dtype=float).reshape(3)
    if float(vec @ vec) > 1.0 + 1e-12:
        raise ValidationError("scaling parameters must lie in the unit ball")
    s = state.bloch
    r = vec * s
    gap = 1.0 - float(r @ r)
    if gap <= 1e-12:
        raise SingularStateError(
            "output state is pure; the closed form diverges at the ball boundary"
        )
    core = np.eye(3) + np.outer(r, r) / gap
    mat = np.diag(s) @ core @ np.diag(s)
    return FisherMatrix(mat, kind="sld-quantum")


def pseudo_inverse(matrix, tol: float = PINV_TOL) -> np.ndarray:
    """Moore-Penrose inverse of a symmetric PSD matrix via its eigensystem.

    Eigenvalues at or below ``tol`` times the largest are treated as zero.
    """
    mat = _as_matrix(matrix)
    w, v = np.linalg.eigh(0.5 * (mat + mat.T))
    cutoff = tol * max(w.max(), 0.0)
    inv_w = np.where(w > cutoff, 1.0 / np.where(w > cutoff, w, 1.0), 0.0)
    return (v * inv_w) @ v.T


def _range_decomposition(matrix, tol: float = PINV_TOL):
    mat = _as_matrix(matrix)
    w, v = np.linalg.eigh(0.5 * (mat + mat.T))
    keep = w > tol * max(w.max(), 0.0)
    return w, v, keep


class PartialFisherResult(NamedTuple):
    """Information bounds for a subset of parameters of interest.

    ``partial_inverse`` bounds the covariance when the remaining parameters
    are unknown nuisances; ``known_nuisance_inverse`` is the tighter bound
    when they are known exactly.  ``nuisance_singular`` flags a singular
    nuisance block that was handled by pseudo-inversion.
    """

    interest: tuple
    partial_inverse: np.ndarray
    known_nuisance_inverse: np.ndarray
    nuisance_singular: bool


def partial_fisher(matrix, interest: Sequence[int]) -> PartialFisherResult:
    """Schur-complement bound for a parameter subset of interest."""
    mat = _as_matrix(matrix)
    n = mat.shape[0]
    idx = tuple(int(i) for i in interest)
    if len(idx) == 0:
        raise ValidationError("at least one parameter of interest is required")
    if len(set(idx)) != len(idx) or not all(0 <= i < n for i in idx):
        raise ValidationError(f"interest indices must be distinct and in [0, {n})")
    rest = tuple(i for i in range(n) if i not in idx)
    j_ii = mat[np.ix_(idx, idx)]
    known = pseudo_inverse(j_ii)
    if not rest:
        return PartialFisherResult(idx, known, known, False)
    j_in = mat[np.ix_(idx, rest)]
    j_nn = mat[np.ix_(rest, rest)]
    w, v, keep = _range_decomposition(j_nn)
    singular = not np.all(keep)
    if singular:
        null_vecs = v[:, ~keep]
        leak = np.max(np.abs(j_in @ null_vecs)) if null_vecs.size else 0.0
        scale = max(np.max(np.abs(mat)), 1.0)
        if leak > 1e-8 * scale:
            raise NuisanceSingularError(
                "interest-nuisance coupling meets a null direction of the "
                "nuisance block; the partial information is undefined"
            )
    nn_pinv = (v * np.where(keep, 1.0 / np.where(keep, w, 1.0), 0.0)) @ v.T
    schur = j_ii - j_in @ nn_pinv @ j_in.T
    schur = 0.5 * (schur + schur.T)
    return PartialFisherResult(idx, pseudo_inverse(schur), known, singular)


def optimal_pvm_single_param(
    family: ChannelFamily, state: QubitState, theta
) -> Povm:
    """Projective measurement saturating the one-parameter quantum bound.

    Measures in the eigenbasis of the symmetric logarithmic derivative.
    Eigenvector phases are fixed by making the first component of magnitude
    above ``1e-12`` real and positive, so the result is deterministic.
    """
    if family.n_params != 1:
        raise ValidationError(
            f"family has {family.n_params} parameters; exactly one is required"
        )
    scores = sld_operators(family, state, theta)
    _, v = np.linalg.eigh(scores.operators[0])
    elems = []
    for col in range(2):
        vec = v[:, col].copy()
        anchor = np.argmax(np.abs(vec) > 1e-12)
        phase = vec[anchor] / abs(vec[anchor])
        vec = vec / phase
        elems.append(np.outer(vec, vec.conj()))
    return Povm(tuple(elems))
