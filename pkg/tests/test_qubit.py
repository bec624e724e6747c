import numpy as np
import pytest
from numpy.testing import assert_allclose

from qdoe.errors import DomainError, ValidationError
from qdoe.qubit import (
    AffineBlochChannel,
    KrausChannel,
    Povm,
    QubitState,
    bloch_to_density,
    born_probabilities,
    channel_family,
    density_to_bloch,
    finite_difference_partials,
    kraus_to_affine,
    mix_povms,
    mix_states,
    pauli_axis_povm,
    pauli_axis_state,
    pauli_scale_factors,
    restrict_family,
)


def test_qubit_state_density_roundtrip():
    rng = np.random.default_rng(11)
    for _ in range(20):
        bloch = rng.uniform(-1.0, 1.0, 3)
        bloch *= rng.uniform(0.0, 1.0) / max(np.linalg.norm(bloch), 1e-9)
        state = QubitState(bloch)
        rho = state.density
        assert_allclose(np.trace(rho), 1.0, atol=1e-14)
        assert_allclose(rho, rho.conj().T, atol=1e-14)
        back = density_to_bloch(rho)
        assert_allclose(back.bloch, bloch, atol=1e-12)


def test_qubit_state_rejects_outside_ball():
    with pytest.raises(ValidationError):
        QubitState([1.0, 1.0, 0.0])


def test_purity_flag():
    assert QubitState([0.0, 0.0, 1.0]).is_pure()
    assert not QubitState([0.0, 0.0, 0.5]).is_pure()


def test_axis_povm_bloch_components():
    povm = pauli_axis_povm(3)
    t, m = povm.bloch_components()
    assert_allclose(t, [0.5, 0.5], atol=1e-14)
    assert_allclose(m, [[0.0, 0.0, 0.5], [0.0, 0.0, -0.5]], atol=1e-14)


def test_povm_rejects_bad_sum():
    eye = np.eye(2, dtype=complex)
    with pytest.raises(ValidationError):
        Povm((0.6 * eye, 0.6 * eye))


def test_povm_rejects_negative_element():
    eye = np.eye(2, dtype=complex)
    neg = np.diag([1.5, -0.5]).astype(complex)
    with pytest.raises(ValidationError):
        Povm((neg, eye - neg))


def test_born_probabilities_deterministic_case():
    state = pauli_axis_state(3)
    identity = AffineBlochChannel(np.eye(3), np.zeros(3))
    p = born_probabilities(state, identity, pauli_axis_povm(3))
    assert_allclose(p, [1.0, 0.0], atol=1e-14)


def test_born_probabilities_sum_to_one():
    rng = np.random.default_rng(5)
    fam = channel_family("scaling")
    for _ in range(10):
        theta = rng.uniform(-0.5, 0.5, 3)
        s = rng.uniform(-0.5, 0.5, 3)
        p = born_probabilities(
            QubitState(s), fam.channel_at(theta), pauli_axis_povm(2)
        )
        assert_allclose(p.sum(), 1.0, atol=1e-12)
        assert np.all(p >= 0.0)


def test_amplitude_damping_affine_form():
    gamma = 0.3
    k0 = np.array([[1.0, 0.0], [0.0, np.sqrt(1.0 - gamma)]], dtype=complex)
    k1 = np.array([[0.0, np.sqrt(gamma)], [0.0, 0.0]], dtype=complex)
    affine = kraus_to_affine(KrausChannel((k0, k1)))
    root = np.sqrt(1.0 - gamma)
    assert_allclose(affine.scale, np.diag([root, root, 1.0 - gamma]), atol=1e-12)
    assert_allclose(affine.offset, [0.0, 0.0, gamma], atol=1e-12)


def test_kraus_to_affine_matches_direct_action():
    gamma = 0.25
    k0 = np.array([[1.0, 0.0], [0.0, np.sqrt(1.0 - gamma)]], dtype=complex)
    k1 = np.array([[0.0, np.sqrt(gamma)], [0.0, 0.0]], dtype=complex)
    kraus = KrausChannel((k0, k1))
    affine = kraus_to_affine(kraus)
    rng = np.random.default_rng(7)
    for _ in range(10):
        s = rng.uniform(-0.5, 0.5, 3)
        rho_out = kraus.apply(bloch_to_density(QubitState(s)))
        assert_allclose(
            density_to_bloch(rho_out).bloch, affine.apply_bloch(s), atol=1e-12
        )


def test_kraus_channel_requires_trace_preservation():
    with pytest.raises(ValidationError):
        KrausChannel((np.diag([0.5, 0.5]).astype(complex),))


def test_affine_channel_rejects_expanding_map():
    with pytest.raises(ValidationError):
        AffineBlochChannel(np.diag([1.2, 0.0, 0.0]), np.zeros(3))


def test_affine_channel_rejects_shifted_ball_escape():
    with pytest.raises(ValidationError):
        AffineBlochChannel(np.diag([0.5, 0.5, 0.5]), np.array([0.0, 0.0, 0.8]))


@pytest.mark.parametrize(
    "name,seed", [("scaling", 101), ("pauli", 102), ("asymmetry", 103)]
)
def test_analytic_partials_match_finite_differences(name, seed):
    fam = channel_family(name)
    rng = np.random.default_rng(seed)
    for _ in range(15):
        if name == "scaling":
            theta = rng.uniform(-0.5, 0.5, 3)
        elif name == "pauli":
            theta = rng.dirichlet(np.ones(4))[:3] * 0.9 + 0.01
        else:
            eps2 = rng.uniform(0.05, 0.6)
            span = 0.9 * (1.0 - eps2)
            theta = np.array([rng.uniform(-span, span), eps2])
        analytic = fam.partials_at(theta)
        numeric = finite_difference_partials(fam, theta)
        for a, n in zip(analytic, numeric):
            assert_allclose(a.scale, n.scale, atol=2e-6)
            assert_allclose(a.offset, n.offset, atol=2e-6)


def test_scaling_family_domain():
    fam = channel_family("scaling")
    assert fam.contains([0.5, 0.5, 0.5])
    assert not fam.contains([0.8, 0.8, 0.2])
    with pytest.raises(DomainError):
        fam.channel_at([0.8, 0.8, 0.2])


def test_pauli_family_scale_factors_and_domain():
    theta = np.array([0.1, 0.05, 0.2])
    assert_allclose(
        pauli_scale_factors(theta),
        1.0 + 2.0 * theta - 2.0 * theta.sum(),
        atol=1e-14,
    )
    fam = channel_family("pauli")
    assert fam.contains(theta)
    assert not fam.contains([0.5, 0.5, 0.1])
    assert not fam.contains([-0.01, 0.2, 0.2])


def test_pauli_partials_structure():
    fam = channel_family("pauli")
    parts = fam.partials_at(np.array([0.1, 0.05, 0.2]))
    for i, part in enumerate(parts):
        expected = np.full(3, -2.0)
        expected[i] = 0.0
        assert_allclose(np.diag(part.scale), expected, atol=1e-14)
        assert_allclose(part.offset, np.zeros(3), atol=1e-14)


def test_asymmetry_family_channel_diagonal():
    fam = channel_family("asymmetry")
    eps = np.array([0.2, 0.3])
    chan = fam.channel_at(eps)
    assert_allclose(np.diag(chan.scale), [0.5, 0.1, -0.4], atol=1e-14)
    assert not fam.contains([0.8, 0.3])
    assert not fam.contains([0.1, -0.05])


def test_restricted_family_partials_chain_rule():
    fam = channel_family("scaling")
    base = np.array([0.2, -0.1, 0.3])
    direction = np.array([0.5, 1.0, -0.25])
    sliced = restrict_family(fam, base, direction)
    assert sliced.n_params == 1
    analytic = sliced.partials_at([0.1])
    numeric = finite_difference_partials(sliced, [0.1])
    assert_allclose(analytic[0].scale, numeric[0].scale, atol=2e-6)


def test_finite_difference_partials_outside_domain():
    fam = channel_family("pauli")
    with pytest.raises(DomainError):
        finite_difference_partials(fam, [0.5, 0.5, 0.1])


def test_mix_states_and_povms():
    mixed = mix_states(pauli_axis_state(1), pauli_axis_state(2), 0.25)
    assert_allclose(mixed.bloch, [0.25, 0.75, 0.0], atol=1e-14)
    blended = mix_povms(pauli_axis_povm(1), pauli_axis_povm(3), 0.5)
    total = sum(np.asarray(e) for e in blended.elements)
    assert_allclose(total, np.eye(2), atol=1e-12)


def test_axis_helpers_validate_axis():
    with pytest.raises(ValidationError):
        pauli_axis_state(0)
    with pytest.raises(ValidationError):
        pauli_axis_povm(4)
