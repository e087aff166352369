import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pingpong import codec, qstate
from pingpong.qstate import (
    BELL_LABELS, HOME, TRAVEL, X, Z, apply_on_travel, bell_measure, bell_state, fidelity_pure,
    gamma_of, holevo, measure_qubit, partial_trace, von_neumann_entropy,
)

from conftest import random_density, random_pure, random_unitary, seeds

R = 1 / np.sqrt(2)


def travel_operator_by_index(u):
    """4x4 matrix of I (x) U written out entry by entry."""
    m = np.zeros((4, 4), dtype=complex)
    for h, t, h2, t2 in itertools.product(range(2), repeat=4):
        if h == h2:
            m[2 * h + t, 2 * h2 + t2] = u[t, t2]
    return m


def reduce_by_index(rho, keep):
    out = np.zeros((2, 2), dtype=complex)
    for a, b, j in itertools.product(range(2), repeat=3):
        if keep == HOME:
            out[a, b] += rho[2 * a + j, 2 * b + j]
        else:
            out[a, b] += rho[2 * j + a, 2 * j + b]
    return out


class TestBellStates:
    def test_phi_plus(self):
        assert np.allclose(bell_state("phi_plus"), [R, 0, 0, R], atol=1e-15)

    def test_psi_minus_is_singlet(self):
        assert np.allclose(bell_state("psi_minus"), [0, R, -R, 0], atol=1e-15)

    def test_x_basis_decompositions(self):
        pp = np.kron(qstate.KET_PLUS, qstate.KET_PLUS)
        mm = np.kron(qstate.KET_MINUS, qstate.KET_MINUS)
        pm = np.kron(qstate.KET_PLUS, qstate.KET_MINUS)
        mp = np.kron(qstate.KET_MINUS, qstate.KET_PLUS)
        assert np.allclose(bell_state("phi_plus"), R * (pp + mm))
        assert np.allclose(bell_state("phi_minus"), R * (pm + mp))
        assert np.allclose(bell_state("psi_plus"), R * (pp - mm))
        # the X-basis expansion of the singlet carries an overall minus sign
        assert np.allclose(bell_state("psi_minus"), -R * (pm - mp))
        assert qstate.same_up_to_phase(bell_state("psi_minus"), R * (pm - mp))

    def test_orthonormal(self):
        g = np.array([[np.vdot(bell_state(a), bell_state(b)) for b in BELL_LABELS] for a in BELL_LABELS])
        assert np.allclose(g, np.eye(4), atol=1e-12)

    def test_projectors_complete(self):
        total = sum(qstate.bell_projector(k) for k in BELL_LABELS)
        assert np.max(np.abs(total - np.eye(4))) < 1e-12

    def test_phase_convention(self):
        for k in BELL_LABELS:
            v = bell_state(k)
            assert np.allclose(qstate.canonical_phase(v), v)

    def test_unknown_label(self):
        with pytest.raises(ValueError):
            bell_state("psi_zero")


class TestApplyOnTravel:
    def test_identity(self):
        s = bell_state("psi_minus")
        assert np.allclose(apply_on_travel(np.eye(2), s), s)

    @pytest.mark.parametrize("bits,label", [((0, 1), "psi_plus"), ((1, 0), "phi_minus"), ((1, 1), "phi_plus")])
    def test_matches_index_oracle(self, bits, label):
        u = codec.ENCODING_OPS[bits].matrix
        s = bell_state("psi_minus")
        expected = travel_operator_by_index(u) @ s
        got = apply_on_travel(u, s)
        assert np.allclose(got, expected, atol=1e-15)
        assert qstate.same_up_to_phase(got, bell_state(label))

    def test_density_matrix_form(self, rng):
        u = random_unitary(rng)
        rho = random_density(rng)
        m = travel_operator_by_index(u)
        assert np.allclose(apply_on_travel(u, rho), m @ rho @ m.conj().T, atol=1e-13)

    def test_non_unitary_rejected(self):
        with pytest.raises(qstate.NonUnitary):
            apply_on_travel(np.array([[1, 0], [0, 2]]), bell_state("psi_minus"))

    @given(seeds)
    def test_norm_preserved(self, seed):
        rng = np.random.default_rng(seed)
        s = random_pure(rng)
        for op in codec.ENCODING_OPS.values():
            out = apply_on_travel(op.matrix, s)
            assert abs(np.vdot(out, out).real - 1) < 1e-12


class TestMeasureQubit:
    def test_singlet_travel_is_uniform(self):
        p = qstate.measurement_probabilities(bell_state("psi_minus"), TRAVEL, Z)
        assert np.allclose(p, [0.5, 0.5], atol=1e-15)
        assert measure_qubit(bell_state("psi_minus"), TRAVEL, Z, 0.49)[0] == 0
        assert measure_qubit(bell_state("psi_minus"), TRAVEL, Z, 0.51)[0] == 1

    def test_eigenstate(self):
        s = qstate.ket(0, 0)
        out, post = measure_qubit(s, HOME, Z, 0.3)
        assert out == 0
        assert np.allclose(post, s)

    @pytest.mark.parametrize("r1", [0.01, 0.3, 0.49, 0.51, 0.9])
    @pytest.mark.parametrize("r2", [0.0, 0.5, 0.99])
    def test_phi_plus_x_coincide(self, r1, r2):
        a, post = measure_qubit(bell_state("phi_plus"), TRAVEL, X, r1)
        b, _ = measure_qubit(post, HOME, X, r2)
        assert a == b

    def test_density_matches_vector(self, rng):
        v = random_pure(rng)
        for which in (HOME, TRAVEL):
            for b in (Z, X):
                pv = qstate.measurement_probabilities(v, which, b)
                pr = qstate.measurement_probabilities(qstate.density(v), which, b)
                assert np.allclose(pv, pr)
                _, post_v = measure_qubit(v, which, b, 0.4)
                _, post_r = measure_qubit(qstate.density(v), which, b, 0.4)
                assert np.allclose(qstate.density(post_v), post_r)

    def test_forced_impossible_branch(self):
        with pytest.raises(qstate.DegenerateState):
            measure_qubit(qstate.ket(0, 0), HOME, Z, 0.0, outcome=1)

    @given(seeds)
    def test_probabilities_sum_to_one(self, seed):
        rho = random_density(np.random.default_rng(seed))
        for which in (HOME, TRAVEL):
            for b in (Z, X):
                assert abs(qstate.measurement_probabilities(rho, which, b).sum() - 1) < 1e-12


class TestBellMeasure:
    def test_singlet(self):
        for r in (0.0, 0.5, 0.999):
            assert bell_measure(bell_state("psi_minus"), r)[0] == "psi_minus"

    def test_u11_gives_phi_plus(self):
        s = apply_on_travel(codec.ENCODING_OPS[(1, 1)].matrix, bell_state("psi_minus"))
        assert np.allclose(qstate.bell_probabilities(s), [1, 0, 0, 0], atol=1e-15)
        assert bell_measure(s, 0.7)[0] == "phi_plus"

    def test_maximally_mixed(self):
        p = qstate.bell_probabilities(np.eye(4) / 4)
        assert np.allclose(p, 0.25)
        labels = [bell_measure(np.eye(4) / 4, r)[0] for r in (0.1, 0.3, 0.6, 0.9)]
        assert labels == list(BELL_LABELS)

    @given(seeds)
    def test_probabilities_sum_to_one(self, seed):
        rho = random_density(np.random.default_rng(seed))
        assert abs(qstate.bell_probabilities(rho).sum() - 1) < 1e-12


class TestPartialTrace:
    def test_singlet_reduced_is_mixed(self):
        assert np.allclose(partial_trace(qstate.density(bell_state("psi_minus")), HOME), np.eye(2) / 2)

    def test_product(self):
        assert np.allclose(partial_trace(qstate.density(qstate.ket(0, 0)), HOME), np.diag([1, 0]))

    def test_phi_plus_keep_travel(self):
        rho = qstate.density(bell_state("phi_plus"))
        assert np.allclose(partial_trace(rho, TRAVEL), reduce_by_index(rho, TRAVEL))
        assert np.allclose(partial_trace(rho, TRAVEL), np.eye(2) / 2)

    @given(seeds)
    def test_matches_index_oracle(self, seed):
        rho = random_density(np.random.default_rng(seed))
        for keep in (HOME, TRAVEL):
            red = partial_trace(rho, keep)
            assert np.allclose(red, reduce_by_index(rho, keep), atol=1e-13)
            assert abs(np.trace(red) - 1) < 1e-12

    def test_ancilla_traced(self, rng):
        pair = random_pure(rng)
        anc = random_pure(rng, 4)
        joint = np.kron(pair, anc)
        assert np.allclose(partial_trace(joint, HOME), partial_trace(qstate.density(pair), HOME))
        assert np.allclose(qstate.trace_ancilla(joint), qstate.density(pair))


class TestEntropy:
    def test_pure(self):
        assert von_neumann_entropy(bell_state("phi_minus")) == pytest.approx(0.0, abs=1e-12)

    def test_maximally_mixed(self):
        assert abs(von_neumann_entropy(np.eye(4) / 4) - 2.0) < 1e-12

    def test_entangled_marginal_one_bit(self):
        for k in BELL_LABELS:
            red = partial_trace(qstate.density(bell_state(k)), HOME)
            assert abs(von_neumann_entropy(red) - 1.0) < 1e-12

    @given(seeds)
    def test_bounds_and_unitary_invariance(self, seed):
        rng = np.random.default_rng(seed)
        rho = random_density(rng, rank=int(rng.integers(1, 5)))
        s = von_neumann_entropy(rho)
        assert -1e-12 <= s <= 2 + 1e-12
        u = random_unitary(rng, 4)
        assert abs(von_neumann_entropy(u @ rho @ u.conj().T) - s) < 1e-10


class TestFidelity:
    def test_examples(self):
        psi = bell_state("psi_minus")
        assert fidelity_pure(psi, qstate.density(psi)) == pytest.approx(1.0, abs=1e-12)
        assert fidelity_pure(psi, qstate.density(bell_state("phi_plus"))) == pytest.approx(0.0, abs=1e-12)

    def test_mixed(self):
        rho = np.eye(4) / 4
        psi = bell_state("psi_minus")
        # direct quadratic form
        q = sum(np.conj(psi[i]) * rho[i, j] * psi[j] for i in range(4) for j in range(4)).real
        assert fidelity_pure(psi, rho) == pytest.approx(np.sqrt(q), abs=1e-15)
        assert fidelity_pure(psi, rho) == pytest.approx(0.5, abs=1e-15)
        assert gamma_of(rho) == pytest.approx(0.75, abs=1e-15)


class TestHolevo:
    def test_bell_ensemble(self):
        ens = [(0.25, qstate.density(bell_state(k))) for k in BELL_LABELS]
        assert holevo(ens) == pytest.approx(2.0, abs=1e-12)

    def test_degenerate(self):
        rho = random_density(np.random.default_rng(3))
        assert holevo([(1.0, rho)]) == pytest.approx(0.0, abs=1e-12)
        assert holevo([(0.5, rho), (0.5, rho)]) == pytest.approx(0.0, abs=1e-12)

    def test_bad_probabilities(self):
        with pytest.raises(qstate.InvalidState):
            holevo([(0.5, np.eye(4) / 4)])

    @given(seeds, st.integers(min_value=1, max_value=6))
    def test_nonnegative(self, seed, n):
        rng = np.random.default_rng(seed)
        p = rng.dirichlet(np.ones(n))
        p = p / p.sum()
        ens = [(float(pi), random_density(rng, rank=int(rng.integers(1, 5)))) for pi in p]
        ens[-1] = (1.0 - sum(q for q, _ in ens[:-1]), ens[-1][1])
        chi = holevo(ens)
        assert chi >= -1e-12
        assert chi <= 2 + 1e-12


class TestValidation:
    def test_check_state(self, rng):
        qstate.check_state(random_density(rng))
        qstate.check_state(random_pure(rng))
        with pytest.raises(qstate.InvalidState):
            qstate.check_state(np.diag([1.5, -0.5, 0, 0]))
        with pytest.raises(qstate.InvalidState):
            qstate.check_state(np.array([1, 1, 0, 0], dtype=complex))

    def test_basis_projectors(self):
        for b in (Z, X):
            p0, p1 = b.projectors
            assert np.max(np.abs(p0 @ p0 - p0)) < 1e-12
            assert np.max(np.abs(p0 @ p1)) < 1e-12
            assert np.max(np.abs(p0 + p1 - np.eye(2))) < 1e-12
