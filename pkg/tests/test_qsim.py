import numpy as np
import pytest
from conftest import random_state

from reldeleg.pauli import DimensionCapError, PauliString
from reldeleg.qsim import (BELL, QubitPool, StateVector, TeleportRecord, apply_unitary, basis_state,
                           bell_branches, bell_measure, epr_register, expectation, frame_correct,
                           measure_observable, outcome_branches, teleport, teleport_branches,
                           tensor_states)

X = np.array([[0, 1], [1, 0]])
Z = np.diag([1, -1])
H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
SQ = 1 / np.sqrt(2)


def three_sigma(p, n):
    return 3 * np.sqrt(p * (1 - p) / n)


def pauli_power(x, z, phi):
    """X^x Z^z phi on one qubit, by hand."""
    return np.linalg.matrix_power(X, x) @ np.linalg.matrix_power(Z, z) @ phi


class TestStateVector:
    def test_basis(self):
        assert np.array_equal(basis_state(1).amplitudes, [1, 0])
        assert np.array_equal(basis_state(2).amplitudes, [1, 0, 0, 0])

    def test_basis_cap(self):
        with pytest.raises(DimensionCapError):
            basis_state(15)
        with pytest.raises(DimensionCapError):
            basis_state(5, cap=4)

    def test_norm_invariant(self):
        with pytest.raises(ValueError):
            StateVector(np.array([1.0, 1.0]))

    def test_registers_partition(self):
        with pytest.raises(ValueError):
            StateVector(np.array([1.0, 0, 0, 0]), {"a": (0,), "b": (0,)})

    def test_power_of_two(self):
        with pytest.raises(ValueError):
            StateVector(np.ones(3) / np.sqrt(3))


class TestEPR:
    def test_single_pair(self):
        assert np.allclose(epr_register(1).amplitudes, [SQ, 0, 0, SQ])

    def test_two_pairs_zz(self):
        s = epr_register(2)
        a0, b0 = s.register("epr_A")[0], s.register("epr_B")[0]
        assert expectation(s, PauliString("ZZ"), [a0, b0]) == pytest.approx(1.0)
        assert expectation(s, PauliString("XX"), [a0, b0]) == pytest.approx(1.0)

    def test_empty(self):
        with pytest.raises(ValueError):
            epr_register(0)

    def test_cap(self):
        with pytest.raises(DimensionCapError):
            epr_register(8)


class TestExpectation:
    def test_basis(self):
        s = basis_state(1)
        assert expectation(s, PauliString("Z")) == 1.0
        assert expectation(s, PauliString("X")) == pytest.approx(0.0)

    @pytest.mark.parametrize("word", ["XYZ", "ZZI", "IXY", "YYY"])
    def test_against_dense_quadratic_form(self, rng, word):
        psi = random_state(rng, 3)
        mat = np.ones((1, 1))
        for ch in word:
            mat = np.kron(mat, {"I": np.eye(2), "X": X, "Y": np.array([[0, -1j], [1j, 0]]), "Z": Z}[ch])
        expected = np.vdot(psi, 0.7 * mat @ psi).real
        assert expectation(StateVector(psi), PauliString(word, 0.7)) == pytest.approx(expected, abs=1e-10)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            expectation(basis_state(2), PauliString("Z"))


class TestMeasure:
    def test_z_on_zero(self, rng):
        for _ in range(20):
            out, post = measure_observable(basis_state(1), PauliString("Z"), rng)
            assert out == 1

    def test_x_on_zero_is_fair(self, rng):
        n = 10_000
        ups = sum(measure_observable(basis_state(1), PauliString("X"), rng)[0] == 1 for _ in range(n))
        assert abs(ups / n - 0.5) <= three_sigma(0.5, n)

    def test_epr_zz(self, rng):
        for _ in range(20):
            assert measure_observable(epr_register(1), PauliString("ZZ"), rng)[0] == 1

    def test_post_state_is_eigenvector(self, rng):
        psi = StateVector(random_state(rng, 2))
        out, post = measure_observable(psi, PauliString("XZ"), rng)
        assert expectation(post, PauliString("XZ")) == pytest.approx(out)

    def test_non_binary(self, rng):
        with pytest.raises(ValueError):
            measure_observable(basis_state(1), PauliString("Z", 0.5), rng)

    def test_negative_coefficient_flips(self, rng):
        out, _ = measure_observable(basis_state(1), PauliString("Z", -1.0), rng)
        assert out == -1

    def test_outcome_branches_sum(self, rng):
        psi = StateVector(random_state(rng, 2))
        br = outcome_branches(psi, [(PauliString("Z"), [0]), (PauliString("X"), [1])])
        assert sum(p for _, p, _ in br) == pytest.approx(1.0)


class TestBell:
    def test_bell_vectors_match_definition(self):
        phi00 = np.array([1, 0, 0, 1]) / np.sqrt(2)
        for (a, b), v in BELL.items():
            op = np.kron(np.linalg.matrix_power(X, a) @ np.linalg.matrix_power(Z, b), np.eye(2))
            assert np.allclose(v, op @ phi00)

    def test_product_input_uniform(self, rng):
        s = tensor_states(basis_state(1), epr_register(1))
        n = 10_000
        counts = np.zeros((2, 2))
        for _ in range(n):
            a, b, _ = bell_measure(s, 0, 1, rng)
            counts[a, b] += 1
        assert np.all(np.abs(counts / n - 0.25) <= three_sigma(0.25, n))

    def test_remote_state_per_outcome(self):
        s = tensor_states(basis_state(1), epr_register(1))
        for a, b, prob, post in bell_branches(s, 0, 1):
            assert prob == pytest.approx(0.25)
            expected = pauli_power(a, b, np.array([1, 0]))
            assert post.fidelity(expected) == pytest.approx(1.0)

    def test_epr_halves_give_00(self):
        br = {(a, b): p for a, b, p, _ in bell_branches(epr_register(1), 0, 1)}
        assert br[(0, 0)] == pytest.approx(1.0)

    def test_collision(self, rng):
        with pytest.raises(ValueError):
            bell_measure(epr_register(1), 0, 0, rng)

    def test_keep_measured(self):
        s = tensor_states(basis_state(1), epr_register(1))
        for _, _, _, post in bell_branches(s, 0, 1, remove=False):
            assert post.num_qubits == 3


class TestTeleport:
    def test_one_onto_z(self, rng):
        src = StateVector(np.array([0, 1.0]), {"src": (0,)})
        for _ in range(40):
            rec, post = teleport(tensor_states(src, epr_register(1)), "src", [0], rng)
            out, _ = measure_observable(post, PauliString("Z"), rng, [post.register("epr_B")[0]])
            assert out == -(-1) ** rec.x_frame[0]

    def test_frame_identity_exhaustive(self, rng):
        for _ in range(20):
            phi = random_state(rng, 1)
            ez = np.vdot(phi, Z @ phi).real
            ex = np.vdot(phi, X @ phi).real
            for prob, rec, remote in teleport_branches(phi):
                assert prob == pytest.approx(0.25)
                rz = np.vdot(remote, Z @ remote).real
                rx = np.vdot(remote, X @ remote).real
                assert rz == pytest.approx((-1) ** rec.x_frame[0] * ez)
                assert rx == pytest.approx((-1) ** rec.z_frame[0] * ex)

    def test_entanglement_swapping(self, rng):
        # reference qubit R entangled with source S; teleport S, check <Z_R Z_remote> after correction
        pair = StateVector(BELL[(0, 0)], {"ref": (0,), "src": (1,)})
        for _ in range(10):
            state = tensor_states(pair, epr_register(1))
            rec, post = teleport(state, "src", [0], rng)
            remote = post.register("epr_B")[0]
            fixed = frame_correct(post, rec, [remote])
            ref = fixed.register("ref")[0]
            assert expectation(fixed, PauliString("ZZ"), [ref, remote]) == pytest.approx(1.0)
            assert expectation(fixed, PauliString("XX"), [ref, remote]) == pytest.approx(1.0)

    def test_two_qubits_corrected_fidelity(self, rng):
        psi = random_state(rng, 2)
        src = StateVector(psi, {"src": (0, 1)})
        rec, post = teleport(tensor_states(src, epr_register(3)), "src", [2, 0], rng)
        b = post.register("epr_B")
        fixed = frame_correct(post, rec, [b[2], b[0]])
        # reduced state on (B2, B0) must be psi; B1 is an untouched EPR half, so trace it out
        q = fixed.num_qubits
        tensor = np.moveaxis(fixed.amplitudes.reshape((2,) * q), [b[2], b[0]], [0, 1]).reshape(4, -1)
        rho = tensor @ tensor.conj().T
        assert np.vdot(psi, rho @ psi).real == pytest.approx(1.0)

    def test_zero_state_corrected(self, rng):
        src = StateVector(np.array([1.0, 0, 0, 0]), {"src": (0, 1)})
        rec, post = teleport(tensor_states(src, epr_register(2)), "src", [0, 1], rng)
        fixed = frame_correct(post, rec, list(post.register("epr_B")))
        assert fixed.fidelity(np.array([1.0, 0, 0, 0])) == pytest.approx(1.0, abs=1e-10)

    def test_bad_positions(self, rng):
        src = StateVector(np.array([1.0, 0, 0, 0]), {"src": (0, 1)})
        state = tensor_states(src, epr_register(2))
        with pytest.raises(ValueError):
            teleport(state, "src", [1, 1], rng)
        with pytest.raises(IndexError):
            teleport(state, "src", [0, 5], rng)

    def test_record_invariants(self):
        with pytest.raises(ValueError):
            TeleportRecord((0,), (0, 1), (0,))
        with pytest.raises(ValueError):
            TeleportRecord((0, 0), (0, 1), (1, 1))

    def test_branches_probabilities(self, rng):
        br = teleport_branches(random_state(rng, 2))
        assert len(br) == 16
        assert sum(p for p, _, _ in br) == pytest.approx(1.0)


class TestUnitary:
    def test_norm_preserved(self, rng):
        s = StateVector(random_state(rng, 3))
        for q in range(3):
            s = apply_unitary(s, H, [q])
        assert np.linalg.norm(s.amplitudes) == pytest.approx(1.0, abs=1e-10)


class TestPool:
    def test_consistency_honest_equal(self, rng):
        t = 4
        for _ in range(50):
            pool = QubitPool()
            for j in range(t):
                pool.declare_epr(f"A{j}", f"B{j}")
            word = "".join(rng.choice(list("XZ"), size=t))
            a = [pool.measure({f"A{j}": ch}, rng) for j, ch in enumerate(word)]
            b = [pool.measure({f"B{j}": ch}, rng) for j, ch in enumerate(word)]
            assert a == b

    def test_view_blocks_foreign_labels(self, rng):
        pool = QubitPool()
        pool.declare_epr("A0", "B0")
        view = pool.view("A", "S")
        with pytest.raises(PermissionError):
            view.measure({"B0": "Z"}, rng)

    def test_lazy_blocks_stay_small(self, rng):
        pool = QubitPool()
        for j in range(30):
            pool.declare_epr(f"A{j}", f"B{j}")
        assert pool.measure({"A7": "X"}, rng) in (1, -1)
        assert pool.state_of(["A7", "B7"]).num_qubits == 2
