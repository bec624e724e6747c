"""Qubit states, measurements, and Bloch-picture channel models.

Everything downstream works in the Bloch parametrization: a state is the
real vector ``s`` with ``rho = (I + s . sigma) / 2``, and a channel acts on
Bloch vectors affinely, ``s -> scale @ s + offset``.  Channel families bundle
a parametrized channel with its domain and its derivatives with respect to
the parameters, which is all the Fisher-information layer needs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import DomainError, ValidationError

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
PAULIS = (SIGMA_X, SIGMA_Y, SIGMA_Z)
IDENTITY = np.eye(2, dtype=complex)

for _m in (*PAULIS, IDENTITY):
    _m.setflags(write=False)

BLOCH_TOL = 1e-12
HERMITIAN_TOL = 1e-12
POVM_TOL = 1e-10
BALL_TOL = 1e-10
PROB_CLIP = 1e-12

# The 26 normalized direction vectors with components in {-1, 0, 1}, used to
# spot-check that an affine map keeps the Bloch ball inside itself.
_LATTICE_DIRECTIONS = np.array(
    [
        (i, j, k)
        for i in (-1, 0, 1)
        for j in (-1, 0, 1)
        for k in (-1, 0, 1)
        if (i, j, k) != (0, 0, 0)
    ],
    dtype=float,
)
_LATTICE_DIRECTIONS /= np.linalg.norm(_LATTICE_DIRECTIONS, axis=1)[:, None]
_LATTICE_DIRECTIONS.setflags(write=False)


def _readonly(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=arr.dtype, copy=True)
    out.setflags(write=False)
    return out


def _as_float_vector(value, length: int, what: str) -> np.ndarray:
    vec = np.asarray(value, dtype=float)
    if vec.shape != (length,):
        raise ValidationError(f"{what} must have shape ({length},), got {vec.shape}")
    if not np.all(np.isfinite(vec)):
        raise ValidationError(f"{what} must be finite")
    return vec


@dataclass(frozen=True)
class QubitState:
    """A qubit state given by its Bloch vector."""

    bloch: np.ndarray

    def __post_init__(self) -> None:
        vec = _as_float_vector(self.bloch, 3, "Bloch vector")
        if np.linalg.norm(vec) > 1.0 + BLOCH_TOL:
            raise ValidationError(
                f"Bloch vector has norm {np.linalg.norm(vec):.6g} > 1"
            )
        object.__setattr__(self, "bloch", _readonly(vec))

    def is_pure(self, tol: float = 1e-9) -> bool:
        return abs(np.linalg.norm(self.bloch) - 1.0) <= tol

    @property
    def density(self) -> np.ndarray:
        return bloch_to_density(self)


@dataclass(frozen=True)
class Povm:
    """A positive operator-valued measure on a qubit.

    Elements must be Hermitian, positive semidefinite up to ``-1e-10`` on
    eigenvalues, and sum to the identity within ``1e-10``.
    """

    elements: tuple

    def __post_init__(self) -> None:
        elems = []
        for idx, raw in enumerate(self.elements):
            mat = np.asarray(raw, dtype=complex)
            if mat.shape != (2, 2):
                raise ValidationError(f"POVM element {idx} must be 2x2")
            if np.max(np.abs(mat - mat.conj().T)) > HERMITIAN_TOL:
                raise ValidationError(f"POVM element {idx} is not Hermitian")
            if np.linalg.eigvalsh(mat).min() < -POVM_TOL:
                raise ValidationError(f"POVM element {idx} is not positive")
            elems.append(_readonly(mat))
        if not elems:
            raise ValidationError("POVM needs at least one element")
        total = sum(elems)
        if np.max(np.abs(total - IDENTITY)) > POVM_TOL:
            raise ValidationError("POVM elements do not sum to the identity")
        object.__setattr__(self, "elements", tuple(elems))

    def __len__(self) -> int:
        return len(self.elements)

    def bloch_components(self) -> tuple[np.ndarray, np.ndarray]:
        """Expand each element as ``E = t*I + m . sigma``.

        Returns the array of scalars ``t`` and the array of vectors ``m``,
        so that outcome probabilities are ``t + m . s`` for output Bloch
        vector ``s``.
        """
        t = np.array([0.5 * np.trace(e).real for e in self.elements])
        m = np.array(
            [[0.5 * np.trace(e @ sig).real for sig in PAULIS] for e in self.elements]
        )
        return t, m


@dataclass(frozen=True)
class KrausChannel:
    """A completely positive trace-preserving map given by Kraus operators."""

    operators: tuple

    def __post_init__(self) -> None:
        ops = []
        for idx, raw in enumerate(self.operators):
            mat = np.asarray(raw, dtype=complex)
            if mat.shape != (2, 2):
                raise ValidationError(f"Kraus operator {idx} must be 2x2")
            ops.append(_readonly(mat))
        if not ops:
            raise ValidationError("channel needs at least one Kraus operator")
        total = sum(k.conj().T @ k for k in ops)
        if np.max(np.abs(total - IDENTITY)) > POVM_TOL:
            raise ValidationError("Kraus operators are not trace preserving")
        object.__setattr__(self, "operators", tuple(ops))

    def apply(self, rho: np.ndarray) -> np.ndarray:
        rho = np.asarray(rho, dtype=complex)
        return sum(k @ rho @ k.conj().T for k in self.operators)


@dataclass(frozen=True)
class AffineBlochChannel:
    """A qubit channel as an affine map on Bloch vectors."""

    scale: np.ndarray
    offset: np.ndarray

    def __post_init__(self) -> None:
        mat = np.asarray(self.scale, dtype=float)
        if mat.shape != (3, 3):
            raise ValidationError("scale must be a 3x3 real matrix")
        off = _as_float_vector(self.offset, 3, "offset")
        images = mat @ _LATTICE_DIRECTIONS.T + off[:, None]
        worst = np.max(np.linalg.norm(images, axis=0))
        if worst > 1.0 + BALL_TOL:
            raise ValidationError(
                f"affine map sends the Bloch ball outside itself "
                f"(image norm {worst:.6g} on a probe direction)"
            )
        object.__setattr__(self, "scale", _readonly(mat))
        object.__setattr__(self, "offset", _readonly(off))

    def apply_bloch(self, s: np.ndarray) -> np.ndarray:
        s = _as_float_vector(s, 3, "Bloch vector")
        return self.scale @ s + self.offset

    def apply(self, state: QubitState) -> QubitState:
        return QubitState(self.apply_bloch(state.bloch))


class AffineDerivative(NamedTuple):
    """Derivative of an affine Bloch map with respect to one parameter."""

    scale: np.ndarray
    offset: np.ndarray

    def apply_bloch(self, s: np.ndarray) -> np.ndarray:
        return self.scale @ np.asarray(s, dtype=float) + self.offset


def bloch_to_density(state: QubitState) -> np.ndarray:
    s = state.bloch
    return 0.5 * (IDENTITY + s[0] * SIGMA_X + s[1] * SIGMA_Y + s[2] * SIGMA_Z)


def density_to_bloch(rho: np.ndarray) -> QubitState:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise ValidationError("density matrix must be 2x2")
    if np.max(np.abs(rho - rho.conj().T)) > HERMITIAN_TOL:
        raise ValidationError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > 1e-10:
        raise ValidationError("density matrix trace differs from 1")
    vec = np.array([np.trace(rho @ sig).real for sig in PAULIS])
    return QubitState(vec)


def kraus_to_affine(channel: KrausChannel) -> AffineBlochChannel:
    """Convert Kraus form to the affine Bloch representation."""
    scale = np.empty((3, 3))
    for j, sig in enumerate(PAULIS):
        image = channel.apply(sig)
        for i, tau in enumerate(PAULIS):
            entry = 0.5 * np.trace(tau @ image)
            scale[i, j] = entry.real
    image_id = channel.apply(IDENTITY)
    offset = np.array([0.5 * np.trace(tau @ image_id).real for tau in PAULIS])
    return AffineBlochChannel(scale, offset)


def born_probabilities(
    state: QubitState, channel: AffineBlochChannel, povm: Povm
) -> np.ndarray:
    """Outcome probabilities for measuring ``povm`` on the channel output.

    Tiny negative values (above ``-1e-12``) from floating point are clipped
    to zero and the vector is renormalized; anything more negative raises.
    """
    out = channel.apply_bloch(state.bloch)
    t, m = povm.bloch_components()
    p = t + m @ out
    if np.min(p) < -PROB_CLIP:
        raise ValidationError(
            f"negative outcome probability {np.min(p):.3g} beyond clip tolerance"
        )
    p = np.where(p < 0.0, 0.0, p)
    total = p.sum()
    if abs(total - 1.0) > 1e-10:
        raise ValidationError(f"outcome probabilities sum to {total:.12g}")
    return p / total


@dataclass(frozen=True)
class ChannelFamily:
    """A parametrized family of affine Bloch channels.

    ``contains`` decides domain membership for a parameter vector,
    ``channel_fn`` builds the channel, and ``partials_fn`` (optional)
    returns one :class:`AffineDerivative` per parameter.  Families without
    analytic partials fall back to finite differences.
    """

    name: str
    n_params: int
    contains_fn: Callable[[np.ndarray], bool] = field(repr=False)
    channel_fn: Callable[[np.ndarray], AffineBlochChannel] = field(repr=False)
    partials_fn: Callable[[np.ndarray], tuple] | None = field(
        default=None, repr=False
    )

    def _check(self, theta) -> np.ndarray:
        vec = _as_float_vector(theta, self.n_params, f"{self.name} parameters")
        if not self.contains_fn(vec):
            raise DomainError(
                f"parameters {np.array2string(vec, precision=6)} lie outside "
                f"the {self.name} family's domain"
            )
        return vec

    def contains(self, theta) -> bool:
        try:
            vec = _as_float_vector(theta, self.n_params, "parameters")
        except ValidationError:
            return False
        return bool(self.contains_fn(vec))

    def channel_at(self, theta) -> AffineBlochChannel:
        return self.channel_fn(self._check(theta))

    def partials_at(self, theta) -> tuple:
        vec = self._check(theta)
        if self.partials_fn is not None:
            return tuple(self.partials_fn(vec))
        return finite_difference_partials(self, vec)


def finite_difference_partials(
    family: ChannelFamily, theta, step: float = 1e-6
) -> tuple:
    """Numerical parameter derivatives of a family's affine map.

    Uses central differences, falling back to one-sided differences when a
    stencil point leaves the domain.
    """
    vec = family._check(theta)
    here = family.channel_fn(vec)
    out = []
    for i in range(family.n_params):
        probe = np.zeros_like(vec)
        probe[i] = step
        has_plus = family.contains_fn(vec + probe)
        has_minus = family.contains_fn(vec - probe)
        if has_plus and has_minus:
            hi = family.channel_fn(vec + probe)
            lo = family.channel_fn(vec - probe)
            denom = 2.0 * step
        elif has_plus:
            hi = family.channel_fn(vec + probe)
            lo = here
            denom = step
        elif has_minus:
            hi = here
            lo = family.channel_fn(vec - probe)
            denom = step
        else:
            raise DomainError(
                f"cannot differentiate {family.name} at parameter {i}: both "
                "finite-difference stencil points leave the domain"
            )
        out.append(
            AffineDerivative(
                (hi.scale - lo.scale) / denom, (hi.offset - lo.offset) / denom
            )
        )
    return tuple(out)


def _diag_channel(diag: np.ndarray) -> AffineBlochChannel:
    return AffineBlochChannel(np.diag(diag), np.zeros(3))


def linear_scaling_family() -> ChannelFamily:
    """Channels that scale each Bloch axis independently.

    The parameter is the diagonal ``theta`` itself, constrained to the closed
    unit ball so the map is a contraction.
    """

    def contains(theta: np.ndarray) -> bool:
        return float(theta @ theta) <= 1.0 + 1e-12

    def channel(theta: np.ndarray) -> AffineBlochChannel:
        return _diag_channel(theta)

    def partials(theta: np.ndarray) -> tuple:
        out = []
        for i in range(3):
            mat = np.zeros((3, 3))
            mat[i, i] = 1.0
            out.append(AffineDerivative(mat, np.zeros(3)))
        return tuple(out)

    return ChannelFamily("scaling", 3, contains, channel, partials)


def pauli_scale_factors(theta) -> np.ndarray:
    """Axis scale factors of a Pauli channel with flip weights ``theta``."""
    vec = _as_float_vector(theta, 3, "Pauli weights")
    return 1.0 + 2.0 * vec - 2.0 * vec.sum()


def pauli_channel_family() -> ChannelFamily:
    """Random Pauli-flip channels, parametrized by the three flip weights.

    The domain is the open probability simplex interior: every weight is
    positive and their sum stays below one, which keeps all axis scale
    factors strictly inside (-1, 1).
    """

    def contains(theta: np.ndarray) -> bool:
        return bool(np.all(theta > 0.0) and theta.sum() < 1.0)

    def channel(theta: np.ndarray) -> AffineBlochChannel:
        return _diag_channel(pauli_scale_factors(theta))

    def partials(theta: np.ndarray) -> tuple:
        # d(xi_i)/d(theta_j) = 2*delta_ij - 2
        out = []
        for j in range(3):
            diag = np.full(3, -2.0)
            diag[j] = 0.0
            out.append(AffineDerivative(np.diag(diag), np.zeros(3)))
        return tuple(out)

    return ChannelFamily("pauli", 3, contains, channel, partials)


def asymmetry_scale_factors(eps) -> np.ndarray:
    """Diagonal of the two-parameter transverse-asymmetry channel."""
    vec = _as_float_vector(eps, 2, "asymmetry parameters")
    e1, e2 = vec
    return np.array([e1 + e2, -e1 + e2, 2.0 * e2 - 1.0])


def asymmetry_family() -> ChannelFamily:
    """Two-parameter channels with unequal transverse decay.

    Parameter 1 measures the difference between the two transverse axes,
    parameter 2 their common part; the longitudinal axis is slaved to the
    second parameter.  The domain is the closed triangle
    ``|eps1| + eps2 <= 1``, ``eps2 >= 0``.
    """

    def contains(eps: np.ndarray) -> bool:
        e1, e2 = eps
        return bool(e2 >= -1e-12 and abs(e1) + e2 <= 1.0 + 1e-12)

    def channel(eps: np.ndarray) -> AffineBlochChannel:
        return _diag_channel(asymmetry_scale_factors(eps))

    def partials(eps: np.ndarray) -> tuple:
        return (
            AffineDerivative(np.diag([1.0, -1.0, 0.0]), np.zeros(3)),
            AffineDerivative(np.diag([1.0, 1.0, 2.0]), np.zeros(3)),
        )

    return ChannelFamily("asymmetry", 2, contains, channel, partials)


_FAMILY_BUILDERS = {
    "scaling": linear_scaling_family,
    "pauli": pauli_channel_family,
    "asymmetry": asymmetry_family,
}


def channel_family(name: str) -> ChannelFamily:
    """Look up one of the built-in channel families by name."""
    try:
        return _FAMILY_BUILDERS[name]()
    except KeyError:
        known = ", ".join(sorted(_FAMILY_BUILDERS))
        raise ValidationError(f"unknown family {name!r} (known: {known})") from None


def restrict_family(
    family: ChannelFamily, base_theta, direction, name: str | None = None
) -> ChannelFamily:
    """One-parameter slice ``t -> base_theta + t * direction`` of a family."""
    base = _as_float_vector(base_theta, family.n_params, "base parameters")
    direc = _as_float_vector(direction, family.n_params, "direction")
    if np.linalg.norm(direc) == 0.0:
        raise ValidationError("slice direction must be nonzero")

    def embed(t: np.ndarray) -> np.ndarray:
        return base + t[0] * direc

    def contains(t: np.ndarray) -> bool:
        return bool(family.contains_fn(embed(t)))

    def channel(t: np.ndarray) -> AffineBlochChannel:
        return family.channel_fn(embed(t))

    def partials(t: np.ndarray) -> tuple:
        full = family.partials_at(embed(t))
        scale = sum(d * p.scale for d, p in zip(direc, full))
        offset = sum(d * p.offset for d, p in zip(direc, full))
        return (AffineDerivative(scale, offset),)

    return ChannelFamily(
        name or f"{family.name}-slice", 1, contains, channel, partials
    )


def pauli_axis_state(axis: int) -> QubitState:
    """The pure probe state polarized along Bloch axis 1, 2, or 3."""
    if axis not in (1, 2, 3):
        raise ValidationError(f"axis must be 1, 2, or 3, got {axis}")
    vec = np.zeros(3)
    vec[axis - 1] = 1.0
    return QubitState(vec)


def pauli_axis_povm(axis: int) -> Povm:
    """The two-outcome projective measurement along Bloch axis 1, 2, or 3."""
    if axis not in (1, 2, 3):
        raise ValidationError(f"axis must be 1, 2, or 3, got {axis}")
    sig = PAULIS[axis - 1]
    return Povm((0.5 * (IDENTITY + sig), 0.5 * (IDENTITY - sig)))


def mix_states(first: QubitState, second: QubitState, p: float) -> QubitState:
    """Convex combination ``p * first + (1 - p) * second`` of two states."""
    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"mixing weight must be in [0, 1], got {p}")
    return QubitState(p * first.bloch + (1.0 - p) * second.bloch)


def mix_povms(first: Povm, second: Povm, p: float) -> Povm:
    """Randomized measurement: perform ``first`` with probability ``p``.

    The elements of both inputs are kept as separate outcomes, scaled by the
    mixing weights, so outcome probabilities concatenate accordingly.
    """
    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"mixing weight must be in [0, 1], got {p}")
    scaled = tuple(p * e for e in first.elements) + tuple(
        (1.0 - p) * e for e in second.elements
    )
    return Povm(scaled)
