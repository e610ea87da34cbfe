import numpy as np
import pytest
from hypothesis import given, strategies as st

from povmlab.errors import DimensionError, PreconditionError
from povmlab.experiments import make_phi_lambda, random_spectrum_density, singlet
from povmlab.qstate import (
    PureState,
    SpaceShape,
    apply_local,
    basis_state,
    environment_unitary,
    fidelity,
    purify,
    random_pure,
    random_unitary,
    reduced_density,
    schmidt_decompose,
    tensor,
)

AB = SpaceShape.of(("A", 2), ("B", 2))


def ket(*amps):
    return PureState(AB, np.array(amps, dtype=complex))


def test_tensor_of_basis_states():
    s = tensor(basis_state(SpaceShape.of(("A", 2))), basis_state(SpaceShape.of(("B", 2))))
    assert s.shape.labels == ("A", "B")
    np.testing.assert_allclose(s.amplitudes, [1, 0, 0, 0])


def test_tensor_four_particles_matches_kron():
    psi0 = random_pure(AB, 1)
    phi = make_phi_lambda(0.3)
    s = tensor(psi0, phi)
    assert s.shape.labels == ("A", "B", "alpha", "beta")
    np.testing.assert_allclose(s.amplitudes, np.kron(psi0.amplitudes, phi.amplitudes), atol=1e-15)


def test_tensor_norm_multiplicative():
    s = tensor(random_pure(SpaceShape.of(("A", 2)), 3), random_pure(SpaceShape.of(("B", 3)), 4))
    assert abs(np.linalg.norm(s.amplitudes) - 1) <= 1e-12


def test_tensor_label_collision():
    with pytest.raises(DimensionError):
        tensor(random_pure(AB, 0), random_pure(AB, 1))


def test_unnormalized_state_rejected():
    with pytest.raises(ValueError):
        PureState(AB, np.array([1, 1, 0, 0], dtype=complex))


def test_reduced_density_product():
    rho = reduced_density(ket(0, 1, 0, 0), "A").matrix
    np.testing.assert_allclose(rho, [[1, 0], [0, 0]], atol=1e-15)


@pytest.mark.parametrize("lam", [0.0, 0.2, 0.5, 0.9, 1.0])
def test_reduced_density_phi_lambda(lam):
    rho = reduced_density(make_phi_lambda(lam), "alpha").matrix
    np.testing.assert_allclose(rho, np.diag([1 - lam, lam]), atol=1e-15)


def test_reduced_density_singlet_is_maximally_mixed():
    np.testing.assert_allclose(reduced_density(singlet(), "A").matrix, np.eye(2) / 2, atol=1e-15)


def test_reduced_density_unknown_label():
    with pytest.raises(DimensionError):
        reduced_density(random_pure(AB, 0), "Z")


def test_reduced_density_against_einsum_oracle():
    shape = SpaceShape.of(("A", 2), ("B", 3), ("C", 2))
    s = random_pure(shape, 5)
    t = s.amplitudes.reshape(2, 3, 2)
    oracle = np.einsum("abc,dbc->ad", t, t.conj())
    np.testing.assert_allclose(reduced_density(s, "A").matrix, oracle, atol=1e-14)
    oracle_ac = np.einsum("abc,dbe->acde", t, t.conj()).reshape(4, 4)
    np.testing.assert_allclose(reduced_density(s, ["A", "C"]).matrix, oracle_ac, atol=1e-14)


def test_schmidt_product_state():
    f = schmidt_decompose(ket(1, 0, 0, 0), "A")
    np.testing.assert_allclose(f.coefficients, [1, 0], atol=1e-15)
    np.testing.assert_allclose(f.left[:, 0], [1, 0], atol=1e-15)
    np.testing.assert_allclose(f.right[:, 0], [1, 0], atol=1e-15)


@pytest.mark.parametrize("lam", [0.0, 0.1, 0.3, 0.5])
def test_schmidt_phi_lambda(lam):
    f = schmidt_decompose(make_phi_lambda(lam), "alpha")
    np.testing.assert_allclose(f.coefficients, [np.sqrt(1 - lam), np.sqrt(lam)], atol=1e-12)


def test_schmidt_matches_independent_svd():
    s = random_pure(SpaceShape.of(("A", 3), ("B", 4)), 9)
    sv = np.linalg.svd(s.amplitudes.reshape(3, 4), compute_uv=False)
    np.testing.assert_allclose(schmidt_decompose(s, "A").coefficients, sv, atol=1e-10)


def test_schmidt_round_trip_1000_states():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(1000):
        da, db = rng.integers(2, 6, size=2)
        s = random_pure(SpaceShape.of(("A", int(da)), ("B", int(db))), rng)
        f = schmidt_decompose(s, "A")
        worst = max(worst, np.max(np.abs(f.state().amplitudes - s.amplitudes)))
        assert np.all(np.diff(f.coefficients) <= 1e-15)
    assert worst <= 1e-10


@given(st.integers(0, 2**32 - 1), st.integers(2, 4), st.integers(2, 4))
def test_schmidt_phase_convention(seed, da, db):
    f = schmidt_decompose(random_pure(SpaceShape.of(("A", da), ("B", db)), seed), "A")
    for k in range(f.left.shape[1]):
        v = f.left[:, k]
        first = v[np.flatnonzero(np.abs(v) > 1e-12)[0]]
        assert abs(first.imag) <= 1e-12 and first.real > 0


@given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.integers(1, 4))
def test_reduced_density_is_a_density_matrix(seed, da, db):
    rho = reduced_density(random_pure(SpaceShape.of(("A", da), ("B", db)), seed), "A").matrix
    assert np.max(np.abs(rho - rho.conj().T)) <= 1e-10
    assert abs(np.trace(rho) - 1) <= 1e-10
    assert np.linalg.eigvalsh(rho).min() >= -1e-9


def test_random_pure_deterministic():
    a = random_pure(SpaceShape.of(("A", 3)), 17)
    b = random_pure(SpaceShape.of(("A", 3)), 17)
    assert np.array_equal(a.amplitudes, b.amplitudes)
    assert np.array_equal(random_unitary(4, 3), random_unitary(4, 3))


def test_random_unitary_is_unitary():
    u = random_unitary(4, 11)
    assert np.max(np.abs(u.conj().T @ u - np.eye(4))) <= 1e-10


def test_haar_mean_overlap():
    rng = np.random.default_rng(7)
    shape = SpaceShape.of(("A", 2))
    vals = [abs(random_pure(shape, rng).amplitudes[0]) ** 2 for _ in range(100_000)]
    assert abs(np.mean(vals) - 0.5) <= 0.01


def test_environment_unitary_identity_case():
    s = random_pure(SpaceShape.of(("A", 3), ("B", 3)), 4)
    np.testing.assert_allclose(environment_unitary(s, s, "A"), np.eye(3), atol=1e-10)


def test_environment_unitary_bit_flip():
    u = environment_unitary(PureState.normalized(AB, [1, 0, 0, 1]), PureState.normalized(AB, [0, 1, 1, 0]), "A")
    np.testing.assert_allclose(u, [[0, 1], [1, 0]], atol=1e-10)


def test_environment_unitary_undoes_known_rotation():
    shape = SpaceShape.of(("A", 3), ("B", 4))
    psi = random_pure(shape, 21)
    v = random_unitary(4, 22)
    psi_prime = apply_local(psi, v.conj().T, "B")
    u = environment_unitary(psi, psi_prime, "A")
    np.testing.assert_allclose(apply_local(psi_prime, u, "B").amplitudes, psi.amplitudes, atol=1e-9)


def test_environment_unitary_rejects_different_rho():
    with pytest.raises(PreconditionError):
        environment_unitary(random_pure(AB, 1), random_pure(AB, 2), "A")


@pytest.mark.parametrize("seed,kind", list(enumerate(["generic", "degenerate", "deficient", "pure", "maximally_mixed"])))
def test_environment_unitary_all_spectra(seed, kind):
    rng = np.random.default_rng(seed)
    for _ in range(10):
        rho = random_spectrum_density(3, rng, kind)
        env = SpaceShape.of(("B", 3))
        a = purify(rho, env, seed=int(rng.integers(2**63)))
        b = purify(rho, env, seed=int(rng.integers(2**63)))
        u = environment_unitary(a, b, "A")
        assert np.max(np.abs(u.conj().T @ u - np.eye(3))) <= 1e-10
        assert fidelity(apply_local(b, u, "B"), a) >= 1 - 1e-9


@given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.integers(1, 3))
def test_purify_reproduces_rho(seed, n, extra):
    rho = random_spectrum_density(n, seed)
    psi = purify(rho, SpaceShape.of(("E", n + extra - 1)), seed=seed)
    np.testing.assert_allclose(reduced_density(psi, "A").matrix, rho, atol=1e-12)
