import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spinwitness.spin_models import (
    DimensionLimitError,
    OperatorMatrix,
    PhysicalConstants,
    SpinChainModel,
    build_hamiltonian,
    diagonalize,
    ground_state_crossings,
    sector_levels,
    site_operator,
    total_sz,
)

UP_UP = np.array([1, 0, 0, 0], dtype=complex)


def test_site_operator_single_spin_sz():
    np.testing.assert_array_equal(site_operator(1, 0, "z").matrix, np.diag([0.5, -0.5]))


def test_site_operator_embeds_on_second_site():
    np.testing.assert_array_equal(site_operator(2, 1, "z").matrix, np.diag([0.5, -0.5, 0.5, -0.5]))


def test_site_operator_x_flips_first_spin():
    out = site_operator(2, 0, "x").matrix @ UP_UP
    np.testing.assert_array_equal(out, 0.5 * np.array([0, 0, 1, 0]))


@pytest.mark.parametrize("site", [-1, 2])
def test_site_operator_rejects_bad_site(site):
    with pytest.raises(IndexError):
        site_operator(2, site, "z")


def test_dimension_limit():
    with pytest.raises(DimensionLimitError):
        site_operator(13, 0, "z")
    with pytest.raises(DimensionLimitError):
        SpinChainModel(13, (1.0,) * 12)


def test_model_validation():
    with pytest.raises(ValueError):
        SpinChainModel(3, (1.0,))
    with pytest.raises(ValueError):
        SpinChainModel.dimer(4.0, g=0.0)
    with pytest.raises(ValueError):
        PhysicalConstants(-1.0)
    assert SpinChainModel.alternating_dimer(4, 1, n_spins=6).couplings == (4, 1, 4, 1, 4)


def test_operator_matrix_checks_hermitian_flag():
    with pytest.raises(ValueError):
        OperatorMatrix(np.array([[0, 1], [0, 0]]), hermitian=True)
    with pytest.raises(ValueError):
        OperatorMatrix(np.zeros((2, 3)))


def test_dimer_spectrum_zero_field(dimer):
    ev = diagonalize(build_hamiltonian(dimer, 0.0)).eigenvalues
    np.testing.assert_allclose(ev, [-3, 1, 1, 1], atol=1e-12)


def test_dimer_spectrum_with_one_kelvin_zeeman(dimer):
    B = float(dimer.field_from_zeeman(1.0))
    ev = diagonalize(build_hamiltonian(dimer, B)).eigenvalues
    np.testing.assert_allclose(ev, [-3, 0, 1, 2], atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(J=st.floats(-20, 20), h=st.floats(0, 20))
def test_dimer_spectrum_matches_closed_forms(J, h):
    model = SpinChainModel.dimer(J)
    B = float(model.field_from_zeeman(h))
    ev = diagonalize(build_hamiltonian(model, B)).eigenvalues
    expected = np.sort([J / 4 + h, J / 4 - h, J / 4, -3 * J / 4])
    np.testing.assert_allclose(ev, expected, atol=1e-12)


def test_four_spin_ground_energy_matches_dense_oracle(altdimer):
    # oracle: Kronecker-built Hamiltonian and numpy's dense eigensolver
    H = sum(
        J * site_operator(4, i, a).matrix @ site_operator(4, i + 1, a).matrix
        for i, J in enumerate([4.0, 1.0, 4.0])
        for a in "xyz"
    )
    oracle = np.linalg.eigvalsh(H)[0]
    assert diagonalize(build_hamiltonian(altdimer, 0.0)).ground_energy == pytest.approx(oracle, abs=1e-12)
    assert oracle == pytest.approx(-6.02491721764, abs=1e-10)


def test_diagonalize_diagonal_matrix():
    result = diagonalize(np.diag([3.0, 1.0, 2.0]))
    np.testing.assert_allclose(result.eigenvalues, [1, 2, 3])


def test_dimer_ground_state_is_singlet_up_to_phase(dimer):
    v = diagonalize(build_hamiltonian(dimer)).eigenvectors[:, 0]
    singlet = np.array([0, 1, -1, 0]) / np.sqrt(2)
    assert abs(abs(np.vdot(singlet, v)) - 1) < 1e-12
    np.testing.assert_allclose(v, singlet, atol=1e-12)  # canonical phase: first nonzero entry positive


def test_diagonalize_reconstructs_random_hermitian(rng):
    a = rng.standard_normal((16, 16)) + 1j * rng.standard_normal((16, 16))
    H = a + a.conj().T
    result = diagonalize(H)
    V = result.eigenvectors
    assert np.max(np.abs(V.conj().T @ V - np.eye(16))) < 1e-10
    assert np.max(np.abs(result.reconstruct() - H)) < 1e-10
    assert np.all(np.diff(result.eigenvalues) >= 0)


def test_diagonalize_rejects_non_hermitian():
    with pytest.raises(ValueError):
        diagonalize(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_degenerate_ordering_is_reproducible(dimer):
    a = diagonalize(build_hamiltonian(dimer)).eigenvectors
    b = diagonalize(build_hamiltonian(dimer)).eigenvectors
    np.testing.assert_array_equal(a, b)


@pytest.mark.parametrize("B", [0.0, 1.3, 5.0])
def test_hamiltonian_invariants(altdimer, B):
    H = build_hamiltonian(altdimer, B).matrix
    assert np.max(np.abs(H - H.conj().T)) < 1e-12
    ev = diagonalize(H).eigenvalues
    assert np.trace(H).real == pytest.approx(ev.sum(), abs=1e-10)


def test_zero_field_hamiltonian_commutes_with_total_sz(altdimer):
    H = build_hamiltonian(altdimer, 0.0).matrix
    Sz = np.diag(total_sz(4))
    assert np.linalg.norm(H @ Sz - Sz @ H) < 1e-10


def test_sector_levels_match_full_spectrum(altdimer, rng):
    levels, sz = sector_levels(altdimer)
    for B in rng.uniform(0, 7, 5):
        full = diagonalize(build_hamiltonian(altdimer, B)).eigenvalues
        np.testing.assert_allclose(np.sort(levels + float(altdimer.zeeman(B)) * sz), full, atol=1e-12)


def test_eigenvalues_continuous_in_field(altdimer):
    B = np.linspace(0, 7, 701)
    E = np.array([diagonalize(build_hamiltonian(altdimer, b)).eigenvalues for b in B])
    # each level moves at most |S_z|max * dh per step
    bound = 2 * float(altdimer.zeeman(B[1] - B[0]))
    assert np.max(np.abs(np.diff(E, axis=0))) <= bound + 1e-12


def test_dimer_crossing_at_exchange_field(dimer):
    fields = ground_state_crossings(dimer, np.linspace(0, 7, 71))
    assert len(fields) == 1
    expected = 4.0 / (2.0 * 0.6717)  # h = J
    assert fields[0] == pytest.approx(expected, abs=1e-9)
    assert fields[0] == pytest.approx(2.98, abs=0.01)


def test_dimer_no_crossing_below_critical_field(dimer):
    assert ground_state_crossings(dimer, np.linspace(0, 1, 11)) == []


def ground_magnetization_jumps(model, B):
    """Oracle: ground-vector <sum S_z> from full diagonalization on a fine grid."""
    Sz = total_sz(model.n_spins)
    mags = []
    for b in B:
        v = np.linalg.eigh(build_hamiltonian(model, b).matrix)[1][:, 0]
        mags.append(np.real(np.vdot(v, Sz * v)))
    mags = np.round(mags, 6)
    return [0.5 * (B[k] + B[k + 1]) for k in range(len(B) - 1) if mags[k] != mags[k + 1]]


def test_alternating_dimer_has_two_crossings(altdimer):
    fields = ground_state_crossings(altdimer, np.linspace(0, 7, 36))
    assert len(fields) == 2 and fields[0] < fields[1]
    oracle = ground_magnetization_jumps(altdimer, np.linspace(2.5, 3.6, 11001))
    np.testing.assert_allclose(fields, oracle, atol=1e-4)
    np.testing.assert_allclose(fields, [2.76415394142, 3.39552837035], atol=1e-9)


def test_coarse_grid_still_finds_skipped_phase(altdimer):
    # both crossings fall between the two grid points
    fields = ground_state_crossings(altdimer, np.array([2.0, 4.0]))
    np.testing.assert_allclose(fields, [2.76415394142, 3.39552837035], atol=1e-9)


def test_crossings_reject_bad_range(dimer):
    with pytest.raises(ValueError):
        ground_state_crossings(dimer, [1.0])
    with pytest.raises(ValueError):
        ground_state_crossings(dimer, [2.0, 1.0])
