import math

import numpy as np
import pytest

from plaqsim.circuits import (
    Circuit,
    Gate,
    NonCommutingTerms,
    ancilla_restricted_unitary,
    circuit_unitary,
    dump_circuit,
    entangler,
    evolution_circuit,
    load_circuit,
    metrics,
    model_circuit,
    term_evolution,
)
from plaqsim.models import GaugeModel, Geometry, build_hamiltonian, initial_state
from plaqsim.paulis import PauliSum, PauliTerm, exact_evolve, sum_to_matrix

SQUARE = Geometry("square-1")
TRIANGLE = Geometry("triangle-1")
TWO_SQUARE = Geometry("two-square-pbc")


def up_to_global_phase(a, b, tol=1e-10):
    i, j = np.unravel_index(np.abs(b).argmax(), b.shape)
    phase = a[i, j] / b[i, j]
    assert abs(abs(phase) - 1) < tol
    return np.abs(a - phase * b).max() < tol


class TestGate:
    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            Gate("FOO", (0,))

    def test_two_qubit_distinct(self):
        with pytest.raises(ValueError):
            Gate("CNOT", (1, 1))

    def test_angle_requirements(self):
        with pytest.raises(ValueError):
            Gate("RZ", (0,))
        with pytest.raises(ValueError):
            Gate("H", (0,), 0.5)

    def test_cnot_matrix(self):
        m = Gate("CNOT", (0, 1)).matrix()
        assert np.array_equal(
            m, [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]]
        )


class TestCircuit:
    def test_index_bounds(self):
        with pytest.raises(ValueError):
            Circuit(1, (Gate("H", (1,)),))

    def test_gate_after_measurement_rejected(self):
        with pytest.raises(ValueError):
            Circuit(1, (Gate("MEASURE", (0,)), Gate("H", (0,))))

    def test_empty_unitary_is_identity(self):
        assert np.array_equal(circuit_unitary(Circuit(2, ())), np.eye(4))

    def test_measured_circuit_has_no_unitary(self):
        with pytest.raises(ValueError):
            circuit_unitary(Circuit(1, (Gate("MEASURE", (0,)),)))


class TestMetrics:
    def test_empty(self):
        m = metrics(Circuit(3, ()))
        assert (m["cnot_count"], m["two_qubit_depth"], m["qubit_count"]) == (0, 0, 3)

    def test_single_qubit_gates_free(self):
        c = Circuit(2, (Gate("H", (0,)), Gate("CNOT", (0, 1)), Gate("H", (1,))))
        assert metrics(c)["two_qubit_depth"] == 1

    def test_parallel_layers(self):
        c = Circuit(4, (Gate("CNOT", (0, 1)), Gate("CNOT", (2, 3)), Gate("CNOT", (1, 2))))
        m = metrics(c)
        assert m["cnot_count"] == 3
        assert m["two_qubit_depth"] == 2


class TestEntangler:
    def test_overlap_rejected(self):
        with pytest.raises(ValueError):
            entangler(1, (0, 1), 0.5)

    def test_phi_zero_identity(self):
        u = circuit_unitary(entangler(2, (0, 1), 0.0))
        assert up_to_global_phase(u, np.eye(8), 1e-12)

    def test_inverse_pair(self):
        a = circuit_unitary(entangler(2, (0, 1), 0.7))
        b = circuit_unitary(entangler(2, (0, 1), -0.7))
        assert np.abs(a @ b - np.eye(8)).max() < 1e-12

    def test_matches_zz_exponential(self):
        phi = 0.9
        u = circuit_unitary(entangler(1, (0,), phi))
        zz = np.kron(np.diag([1, -1]), np.diag([1, -1]))
        expected = np.diag(np.exp(-1j * (phi / 2) * np.diag(zz)))
        assert np.abs(u - expected).max() < 1e-12

    def test_cp_style_matches_up_to_phase(self):
        a = circuit_unitary(entangler(2, (0, 1), 1.1, style="cnot"))
        b = circuit_unitary(entangler(2, (0, 1), 1.1, style="cp"))
        assert up_to_global_phase(a, b, 1e-12)


class TestTermEvolution:
    @pytest.mark.parametrize(
        "term",
        [
            PauliTerm(-1.0, "ZZZZ"),
            PauliTerm(-1 / math.sqrt(2), "XXX"),
            PauliTerm(0.5, "XXYY"),
            PauliTerm(0.7, "Y"),
            PauliTerm(-0.3, "XY"),
            PauliTerm(1.2, "XYZ"),
        ],
        ids=lambda t: t.letters,
    )
    def test_matches_exact_exponential(self, term):
        t = 0.83
        anc = term.n_qubits
        c = term_evolution(term, t, anc)
        u = ancilla_restricted_unitary(c, anc)
        h = sum_to_matrix(PauliSum.from_terms([term]))
        eigvals, eigvecs = np.linalg.eigh(h)
        expected = eigvecs @ np.diag(np.exp(-1j * eigvals * t)) @ eigvecs.conj().T
        assert np.abs(u - expected).max() < 1e-10

    def test_t_zero_identity(self):
        c = term_evolution(PauliTerm(-1.0, "ZZZZ"), 0.0, 4)
        u = ancilla_restricted_unitary(c, 4)
        assert up_to_global_phase(u, np.eye(16))

    def test_identity_term_rejected(self):
        with pytest.raises(ValueError):
            term_evolution(PauliTerm(1.0, "II"), 1.0, 2)

    def test_two_cnots_per_support_qubit(self):
        c = term_evolution(PauliTerm(-1.0, "ZZZZ"), 1.0, 4)
        assert c.cnot_count() == 8


class TestModelCircuit:
    def test_z2_square_evolution_core_cnots(self):
        core = evolution_circuit(GaugeModel("Z2"), SQUARE, 1.0)
        assert core.cnot_count() == 8
        assert metrics(core)["two_qubit_depth"] == 8

    def test_z2_two_square_core_cnots(self):
        core = evolution_circuit(GaugeModel("Z2"), TWO_SQUARE, 1.0)
        assert core.cnot_count() == 16

    def test_u1_two_square_rejected(self):
        with pytest.raises(NonCommutingTerms):
            evolution_circuit(GaugeModel("U1"), TWO_SQUARE, 1.0)

    def test_gamma_rejected(self):
        with pytest.raises(ValueError):
            evolution_circuit(GaugeModel("Z2", gamma=0.5), SQUARE, 1.0)

    def test_ancilla_disentangles(self):
        from plaqsim.simulator import run_ideal

        c = model_circuit(GaugeModel("Z2"), SQUARE, 0.9, "1111", "z",
                          include_measurements=False)
        psi = run_ideal(c).reshape(2, 16)  # ancilla is the top bit
        assert np.linalg.norm(psi[1]) < 1e-9

    def test_measurements_cover_system(self):
        c = model_circuit(GaugeModel("U1"), SQUARE, 0.5, "0011")
        assert sorted(c.measured_qubits) == [0, 1, 2, 3]

    @pytest.mark.parametrize(
        "group,geom",
        [
            ("Z2", SQUARE),
            ("Z2", TRIANGLE),
            ("Z2", TWO_SQUARE),
            ("U1", SQUARE),
            ("U1", TRIANGLE),
        ],
        ids=lambda v: v if isinstance(v, str) else v.kind,
    )
    def test_state_evolution_matches_oracle(self, group, geom):
        model = GaugeModel(group, 1.1)
        h = build_hamiltonian(model, geom)
        basis = "x" if group == "Z2" else "z"
        label = "1" * geom.n_links if group == "Z2" else "0" * geom.n_links
        psi0 = initial_state(geom, label, basis)
        for t in (0.4, 1.7):
            c = model_circuit(model, geom, t, label, "z",
                              include_measurements=False)
            from plaqsim.simulator import run_ideal

            full = run_ideal(c)
            system = full.reshape(2, 2**geom.n_links)[0]
            expected = exact_evolve(h, psi0, t)
            assert np.abs(system - expected).max() < 1e-10


class TestSerialization:
    def test_round_trip(self):
        c = model_circuit(GaugeModel("Z2"), SQUARE, 0.7, "1111")
        c2 = load_circuit(dump_circuit(c))
        assert c2 == c

    def test_missing_header(self):
        with pytest.raises(ValueError):
            load_circuit("H 0\n")
