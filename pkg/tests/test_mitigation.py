import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from plaqsim.circuits import Circuit, Gate, circuit_unitary
from plaqsim.mitigation import (
    ResponseMatrix,
    ZnePoint,
    calibrate,
    fold,
    mitigate_readout,
    zne,
)
from plaqsim.simulator import NoiseModel, child_seed


def cnot_chain(n_cnots, n_qubits=3):
    gates = tuple(
        Gate("CNOT", (i % n_qubits, (i + 1) % n_qubits)) for i in range(n_cnots)
    )
    return Circuit(n_qubits, gates)


class TestResponseMatrix:
    def test_column_sums_enforced(self):
        bad = np.eye(4)
        bad[0, 0] = 0.5
        with pytest.raises(ValueError):
            ResponseMatrix(2, bad)

    def test_entry_bounds(self):
        bad = np.eye(2) * 1.5 - np.fliplr(np.eye(2)) * 0.5
        with pytest.raises(ValueError):
            ResponseMatrix(1, bad)

    def test_json_round_trip(self):
        p = ResponseMatrix(1, np.array([[0.9, 0.2], [0.1, 0.8]]))
        p2 = ResponseMatrix.from_json(p.to_json())
        assert p2.n_qubits == 1
        assert np.allclose(p2.matrix, p.matrix)


class TestFold:
    def test_paper_example(self):
        folded, achieved = fold(cnot_chain(10), 1.6)
        assert folded.cnot_count() == 16
        assert achieved == pytest.approx(1.6)

    def test_lambda_one_unchanged(self):
        folded, achieved = fold(cnot_chain(10), 1.0)
        assert folded.cnot_count() == 10
        assert achieved == 1.0

    def test_lambda_three_triples(self):
        folded, achieved = fold(cnot_chain(10), 3.0)
        assert folded.cnot_count() == 30
        assert achieved == 3.0

    def test_no_cnots_rejected(self):
        with pytest.raises(ValueError):
            fold(Circuit(1, (Gate("H", (0,)),)), 2.0)

    def test_lambda_below_one_rejected(self):
        with pytest.raises(ValueError):
            fold(cnot_chain(4), 0.5)

    def test_unitary_preserved_random_circuits(self):
        rng = np.random.default_rng(0)
        kinds = ["H", "S", "RZ", "RX", "CNOT", "CNOT"]
        for _ in range(50):
            gates = []
            for _ in range(rng.integers(3, 12)):
                kind = kinds[rng.integers(len(kinds))]
                if kind == "CNOT":
                    a, b = rng.choice(3, size=2, replace=False)
                    gates.append(Gate("CNOT", (int(a), int(b))))
                elif kind in ("RZ", "RX"):
                    gates.append(
                        Gate(kind, (int(rng.integers(3)),), float(rng.normal()))
                    )
                else:
                    gates.append(Gate(kind, (int(rng.integers(3)),)))
            c = Circuit(3, tuple(gates))
            if c.cnot_count() == 0:
                continue
            folded, _ = fold(c, float(rng.uniform(1, 4)))
            assert np.abs(
                circuit_unitary(folded) - circuit_unitary(c)
            ).max() < 1e-12

    @settings(max_examples=60, deadline=None)
    @given(st.integers(1, 40), st.floats(1.0, 8.0))
    def test_achieved_within_resolution(self, n_cnots, lam):
        _, achieved = fold(cnot_chain(n_cnots), lam)
        assert achieved >= 1.0
        assert abs(achieved - lam) <= 1.0 / n_cnots + 1e-12


class TestCalibrate:
    def test_cap(self):
        with pytest.raises(ValueError):
            calibrate(7, NoiseModel(), 10, 0)

    def test_no_noise_is_identity(self):
        p = calibrate(2, NoiseModel(), 5000, child_seed(0, 0))
        assert np.allclose(p.matrix, np.eye(4))

    def test_single_qubit_analytic(self):
        p = calibrate(1, NoiseModel(0, 0.1, 0.1), 100_000, child_seed(1, 0))
        sigma = 3 * math.sqrt(0.1 * 0.9 / 100_000)
        assert abs(p.matrix[1, 0] - 0.1) < sigma
        assert abs(p.matrix[0, 1] - 0.1) < sigma

    def test_two_qubit_kronecker_structure(self):
        noise = NoiseModel(0, 0.05, 0.08)
        p = calibrate(2, noise, 200_000, child_seed(2, 0))
        q1 = np.array([[0.95, 0.08], [0.05, 0.92]])
        expected = np.kron(q1, q1)
        assert np.abs(p.matrix - expected).max() < 0.01


class TestMitigateReadout:
    def test_identity_response(self):
        m = np.array([0.5, 0.25, 0.25, 0.0])
        out = mitigate_readout(m, ResponseMatrix(2, np.eye(4)))
        assert np.allclose(out, m, atol=1e-9)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            mitigate_readout(np.ones(2) / 2, ResponseMatrix(2, np.eye(4)))

    def test_synthetic_recovery(self):
        rng = np.random.default_rng(3)
        p = calibrate(3, NoiseModel(0, 0.04, 0.06), 10**6, child_seed(3, 0))
        t_true = rng.random(8)
        t_true /= t_true.sum()
        out = mitigate_readout(p.matrix @ t_true, p)
        assert np.abs(out - t_true).max() < 1e-6

    def test_output_on_simplex_ill_conditioned(self):
        p = calibrate(2, NoiseModel(0, 0.3, 0.3), 100_000, child_seed(4, 0))
        m = np.array([0.9, 0.1, 0.0, 0.0])
        naive = np.linalg.solve(p.matrix, m)
        assert naive.min() < 0  # the unconstrained inverse leaves the simplex
        out = mitigate_readout(m, p)
        assert out.min() >= -1e-12
        assert out.sum() == pytest.approx(1.0, abs=1e-9)

    def test_residual_no_worse_than_input(self):
        p = calibrate(2, NoiseModel(0, 0.15, 0.1), 50_000, child_seed(5, 0))
        m = np.array([0.7, 0.1, 0.1, 0.1])
        out = mitigate_readout(m, p)
        assert np.linalg.norm(m - p.matrix @ out) <= np.linalg.norm(
            m - p.matrix @ m
        ) + 1e-12


class TestZne:
    def test_constant_data(self):
        pts = [ZnePoint(l, l, 0.7) for l in (1, 2, 3)]
        assert zne(pts, "quadratic").intercept == pytest.approx(0.7, abs=1e-9)
        assert zne(pts, "richardson").intercept == pytest.approx(0.7, abs=1e-9)

    def test_quadratic_exact_on_quadratic(self):
        f = lambda l: 1 - 0.1 * l + 0.01 * l**2
        pts = [ZnePoint(l, l, f(l)) for l in (1, 1.6, 2.2, 3)]
        assert zne(pts, "quadratic").intercept == pytest.approx(1.0, abs=1e-9)

    def test_richardson_interpolates(self):
        rng = np.random.default_rng(6)
        lams = [1.0, 1.5, 2.5, 4.0]
        ys = rng.normal(size=4)
        pts = [ZnePoint(l, l, float(y)) for l, y in zip(lams, ys)]
        w = zne(pts, "richardson").coefficients
        # Lagrange weights reproduce each input when evaluated at its node
        for i, l in enumerate(lams):
            basis = [
                np.prod([(l - lj) / (li - lj) for lj in lams if lj != li])
                for li in lams
            ]
            assert sum(b * y for b, y in zip(basis, ys)) == pytest.approx(
                ys[i], abs=1e-9
            )

    def test_decay_extrapolation_improves(self):
        f = lambda l: 0.5 + 0.5 * math.exp(-0.1 * l)
        pts = [ZnePoint(l, l, f(l)) for l in range(1, 9)]
        intercept = zne(pts, "quadratic").intercept
        assert abs(intercept - 1.0) < abs(f(1) - 1.0)

    def test_insufficient_points(self):
        with pytest.raises(ValueError):
            zne([ZnePoint(1, 1, 0.5), ZnePoint(2, 2, 0.4)], "quadratic")
        with pytest.raises(ValueError):
            zne([ZnePoint(1, 1, 0.5)], "richardson")

    def test_duplicate_lambda_richardson(self):
        pts = [ZnePoint(1, 1, 0.5), ZnePoint(1, 1, 0.4), ZnePoint(2, 2, 0.3)]
        with pytest.raises(ValueError):
            zne(pts, "richardson")

    def test_probability_clamp_flagged(self):
        pts = [ZnePoint(l, l, -0.01 + 0.001 * l) for l in (1, 2, 3, 4)]
        r = zne(pts, "quadratic", probability=True)
        assert r.clamped
        assert r.intercept == 0.0
        r2 = zne(pts, "quadratic", probability=False)
        assert not r2.clamped
        assert r2.intercept < 0
