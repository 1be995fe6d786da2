import numpy as np
import pytest

from twostate import (
    DensityMatrix,
    FiducialSearchReport,
    InvalidSicError,
    SicCoefficients,
    SicPovm,
    StateVector,
    TwoStatePairMixed,
    TwoStatePairPure,
    builtin_fiducial,
    builtin_sic,
    frame_potential,
    projector_of,
    search_fiducial,
    sic_distinguish,
    sic_expand,
    sic_from_fiducial,
    sic_reconstruct,
    sic_rule_check,
    trace_product,
    validate_sic,
    welch_bound,
    wh_displacements,
)
from twostate.sampling import RngStream, haar_states

from helpers import random_density, random_hermitian, random_state, random_unitary

E0 = StateVector.basis_state(2, 0)
PLUS = StateVector(np.array([1, 1]) / np.sqrt(2))


def orbit_states(d: int, fiducial: StateVector) -> np.ndarray:
    return np.array([u.entries @ fiducial.entries for u in wh_displacements(d)])


class TestDisplacements:
    def test_qubit_set_is_pauli_like(self):
        ops = [u.entries for u in wh_displacements(2)]
        eye = np.eye(2)
        x = np.array([[0, 1], [1, 0]], dtype=complex)
        z = np.diag([1.0, -1.0]).astype(complex)
        assert np.allclose(ops[0], eye)
        assert np.allclose(ops[1], z)
        assert np.allclose(ops[2], x)
        assert np.allclose(ops[3], x @ z)

    @pytest.mark.parametrize("d", [2, 3, 5])
    def test_unitarity(self, d):
        for u in wh_displacements(d):
            assert np.max(np.abs(u.entries.conj().T @ u.entries - np.eye(d))) < 1e-12

    @pytest.mark.parametrize("d", [2, 3, 4, 5])
    def test_traceless_except_identity(self, d):
        # oracle: tr(X^j Z^k) is a root-of-unity sum, zero unless j = k = 0
        ops = wh_displacements(d)
        assert abs(np.trace(ops[0].entries) - d) < 1e-12
        for u in ops[1:]:
            assert abs(np.trace(u.entries)) < 1e-12

    def test_count(self):
        assert len(wh_displacements(4)) == 16

    def test_rejects_dim_one(self):
        with pytest.raises(ValueError, match="dimension"):
            wh_displacements(1)


class TestConstruction:
    def test_qubit_tetrahedron_overlaps(self):
        # Bloch geometry oracle: (1 + m.n)/2 with m.n = -1/3 gives 1/3
        povm = builtin_sic(2)
        report = validate_sic(povm, 1e-10)
        assert report.passed
        assert report.max_pair_deviation < 1e-15

    def test_qutrit_orbit_overlaps(self):
        povm = builtin_sic(3)
        assert validate_sic(povm, 1e-10).passed

    def test_orbit_has_d_squared_members(self):
        rng = np.random.default_rng(40)
        for d in (2, 3, 4):
            povm = sic_from_fiducial(random_state(rng, d))
            assert povm.projectors.shape == (d * d, d, d)

    def test_degenerate_set_fails_validation(self):
        proj = projector_of(E0).entries
        fake = SicPovm(2, np.broadcast_to(proj, (4, 2, 2)).copy(), E0)
        report = validate_sic(fake, 1e-10)
        assert not report.passed
        assert report.max_pair_deviation == pytest.approx(1 - 1 / 3)

    def test_builtin_fiducial_unknown_dim(self):
        with pytest.raises(ValueError, match="no built-in"):
            builtin_fiducial(5)


class TestExpansion:
    def test_maximally_mixed_coefficients(self):
        for d in (2, 3):
            povm = builtin_sic(d)
            coeffs = sic_expand(np.eye(d, dtype=complex) / d, povm)
            assert np.allclose(coeffs.lambdas, 1.0 / d**2, atol=1e-14)
            assert coeffs.trace_of_rho == pytest.approx(1.0)

    def test_projector_of_set_member(self):
        povm = builtin_sic(2)
        coeffs = sic_expand(povm.projectors[0], povm)
        assert coeffs.lambdas[0] == pytest.approx(1.0, abs=1e-12)
        assert np.allclose(coeffs.lambdas[1:], 0.0, atol=1e-12)

    def test_trace_two_sum(self):
        rng = np.random.default_rng(41)
        povm = builtin_sic(3)
        pair_sum = random_density(rng, 3).entries + random_density(rng, 3).entries
        coeffs = sic_expand(pair_sum, povm)
        assert coeffs.lambdas.sum() == pytest.approx(2.0, abs=1e-10)

    @pytest.mark.parametrize("d", [2, 3])
    def test_reconstruction_round_trip(self, d):
        rng = np.random.default_rng(42)
        povm = builtin_sic(d)
        for _ in range(100):
            mat = random_hermitian(rng, d)
            coeffs = sic_expand(mat, povm)
            assert np.linalg.norm(sic_reconstruct(coeffs, povm) - mat) <= 1e-9

    @pytest.mark.parametrize("d", [2, 3])
    def test_density_matrix_coefficient_bounds(self, d):
        rng = np.random.default_rng(43)
        povm = builtin_sic(d)
        for _ in range(1000):
            coeffs = sic_expand(random_density(rng, d).entries, povm)
            assert np.all(coeffs.lambdas >= -1.0 / d - 1e-10)
            assert np.all(coeffs.lambdas <= 1.0 + 1e-10)

    def test_rejects_invalid_set(self):
        proj = projector_of(E0).entries
        fake = SicPovm(2, np.broadcast_to(proj, (4, 2, 2)).copy(), E0)
        with pytest.raises(InvalidSicError):
            sic_expand(np.eye(2, dtype=complex) / 2, fake)

    def test_coefficient_sum_invariant(self):
        with pytest.raises(ValueError, match="sum"):
            SicCoefficients(np.array([0.5, 0.5, 0.5, 0.5]), 1.0)


class TestRuleCheck:
    def test_two_passing_indices(self):
        coeffs = SicCoefficients(np.array([0.75, 0.75, 0.25, 0.25]), 2.0)
        results = [sic_rule_check(coeffs, k, 2) for k in range(4)]
        assert results == [True, True, False, False]

    def test_identity_sum_is_all_boundary(self):
        coeffs = SicCoefficients(np.full(4, 0.5), 2.0)
        assert not any(sic_rule_check(coeffs, k, 2) for k in range(4))

    def test_requires_trace_two(self):
        coeffs = SicCoefficients(np.full(4, 0.25), 1.0)
        with pytest.raises(ValueError, match="trace-2"):
            sic_rule_check(coeffs, 0, 2)

    @pytest.mark.parametrize("d", [2, 3])
    def test_equivalent_to_trace_form(self, d):
        # lambda_k > 1 - 1/d must agree with Tr[rho P_k] > 1 on trace-2 input
        rng = np.random.default_rng(44)
        povm = builtin_sic(d)
        for _ in range(1000):
            total = random_density(rng, d).entries + random_density(rng, d).entries
            coeffs = sic_expand(total, povm)
            for k in range(d * d):
                direct = trace_product(total, povm.projectors[k]) > 1.0
                assert sic_rule_check(coeffs, k, d) == direct


class TestDistinguish:
    def test_z_vs_x_pairs(self):
        povm = builtin_sic(2)
        pair0 = TwoStatePairMixed.from_pure(TwoStatePairPure(E0, E0))
        pair1 = TwoStatePairMixed.from_pure(TwoStatePairPure(PLUS, PLUS))
        k = sic_distinguish(pair0, pair1, povm)
        assert k is not None
        lam0 = sic_expand(2 * projector_of(E0).entries, povm)
        lam1 = sic_expand(2 * projector_of(PLUS).entries, povm)
        assert sic_rule_check(lam0, k, 2) != sic_rule_check(lam1, k, 2)

    def test_identical_pairs_are_inseparable(self):
        povm = builtin_sic(2)
        pair = TwoStatePairMixed.from_pure(TwoStatePairPure(E0, PLUS))
        assert sic_distinguish(pair, pair, povm) is None

    def test_identity_sums_are_inseparable(self):
        povm = builtin_sic(2)
        mixed = DensityMatrix.maximally_mixed(2)
        pair0 = TwoStatePairMixed(mixed, mixed)
        pair1 = TwoStatePairMixed(
            DensityMatrix.pure(E0), DensityMatrix.pure(StateVector.basis_state(2, 1))
        )
        assert sic_distinguish(pair0, pair1, povm) is None


class TestFramePotential:
    def test_repeated_state_maximum(self):
        states = np.tile(E0.entries, (4, 1))
        assert frame_potential(states) == pytest.approx(16.0)  # d^4 at d=2

    def test_tetrahedron_value(self):
        # 4 diagonal ones plus 12 off-diagonal (1/3)^2 terms
        states = orbit_states(2, builtin_fiducial(2))
        assert frame_potential(states) == pytest.approx(16.0 / 3.0, abs=1e-12)

    def test_welch_bound_is_never_undercut(self):
        rng = np.random.default_rng(45)
        for d in (2, 3):
            stream = RngStream(46 + d, 0)
            for trial in range(500):
                states = haar_states(d, stream, trial * d * d, d * d)
                assert frame_potential(states) >= welch_bound(d) - 1e-12

    def test_global_unitary_invariance(self):
        rng = np.random.default_rng(47)
        states = orbit_states(3, builtin_fiducial(3))
        u = random_unitary(rng, 3)
        rotated = states @ u.T
        assert frame_potential(rotated) == pytest.approx(frame_potential(states), abs=1e-10)

    def test_rejects_unnormalized(self):
        with pytest.raises(ValueError, match="normalized"):
            frame_potential(np.array([[1.0, 1.0], [1.0, 0.0]], dtype=complex))


class TestSearch:
    def test_qubit_search_converges(self):
        report = search_fiducial(2, restarts=5, max_iters=500, seed=11)
        assert report.converged
        assert report.frame_potential == pytest.approx(welch_bound(2), abs=1e-6)
        assert validate_sic(sic_from_fiducial(report.fiducial), 1e-5).passed
        assert report.restarts == 5
        assert report.iterations > 0

    def test_deterministic_given_seed(self):
        a = search_fiducial(2, restarts=3, max_iters=300, seed=4)
        b = search_fiducial(2, restarts=3, max_iters=300, seed=4)
        assert a.frame_potential == b.frame_potential
        assert np.array_equal(a.fiducial.entries, b.fiducial.entries)

    def test_rejects_unsupported_dim(self):
        with pytest.raises(ValueError, match="supported"):
            search_fiducial(9, restarts=1, max_iters=10, seed=0)

    def test_report_rejects_sub_welch_potential(self):
        with pytest.raises(ValueError, match="undercuts"):
            FiducialSearchReport(E0, 5.0, welch_bound(2), 1, 1, True)
