"""Readout unfolding and zero-noise extrapolation.

Readout: a column-stochastic response matrix P links the measured
distribution m to the true one t via m = P t; t is recovered by minimizing
||m - P t||^2 over the probability simplex.  ZNE: CNOT identity pairs are
inserted to scale the noise by lambda, and the observable is extrapolated
to lambda = 0 with a quadratic fit or Richardson (exact polynomial)
extrapolation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .circuits import Circuit, Gate
from .simulator import Counts, NoiseModel, child_seed, run_noisy


@dataclass
class ResponseMatrix:
    n_qubits: int
    matrix: np.ndarray  # column j = measured distribution for true state j

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=float)
        d = 2**self.n_qubits
        if self.matrix.shape != (d, d):
            raise ValueError("response matrix has wrong shape")
        if self.matrix.min() < 0 or self.matrix.max() > 1:
            raise ValueError("entries must lie in [0, 1]")
        if np.abs(self.matrix.sum(axis=0) - 1).max() > 1e-9:
            raise ValueError("columns must sum to 1")

    def to_json(self) -> str:
        return json.dumps(
            {"n": self.n_qubits, "values": self.matrix.reshape(-1).tolist()}
        )

    @staticmethod
    def from_json(text: str) -> "ResponseMatrix":
        d = json.loads(text)
        dim = 2 ** d["n"]
        return ResponseMatrix(d["n"], np.array(d["values"]).reshape(dim, dim))


@dataclass(frozen=True)
class ZnePoint:
    requested: float
    achieved: float
    value: float
    stderr: float = 0.0


@dataclass(frozen=True)
class ZneResult:
    method: str
    intercept: float
    coefficients: tuple[float, ...]
    stderr: float
    clamped: bool = False


def fold(c: Circuit, lam: float) -> tuple[Circuit, float]:
    """Insert CNOT-CNOT identity pairs to reach roughly lam times the
    original CNOT count.

    Pairs are distributed round-robin over the existing CNOTs, each placed
    immediately after its CNOT, so the unitary is unchanged.  Returns the
    folded circuit and the achieved scale factor.
    """
    if lam < 1:
        raise ValueError("scale factor must be >= 1")
    original = c.cnot_count()
    if original == 0:
        raise ValueError("no CNOTs to fold")
    pairs = round((lam - 1) * original / 2)
    extra = [0] * original
    for i in range(pairs):
        extra[i % original] += 1
    gates: list[Gate] = []
    k = 0
    for g in c.gates:
        gates.append(g)
        if g.kind == "CNOT":
            gates.extend([g] * (2 * extra[k]))
            k += 1
    folded = Circuit(c.n_qubits, tuple(gates), c.ancillas)
    return folded, folded.cnot_count() / original


def calibrate(n: int, noise: NoiseModel, shots: int, seed) -> ResponseMatrix:
    """Measure the 2^n x 2^n response matrix from basis-state preparations.

    One preparation circuit per basis state, run with readout noise only
    (the preparation layer contains no CNOTs).
    """
    if n > 6:
        raise ValueError("calibration capped at 6 qubits (2^n experiments)")
    dim = 2**n
    mat = np.zeros((dim, dim))
    base = np.random.SeedSequence(seed) if not isinstance(
        seed, np.random.SeedSequence
    ) else seed
    kids = base.spawn(dim)
    for j in range(dim):
        gates = [Gate("X", (q,)) for q in range(n) if (j >> q) & 1]
        gates += [Gate("MEASURE", (q,)) for q in range(n)]
        circ = Circuit(n, tuple(gates))
        counts = run_noisy(circ, noise, shots, kids[j])
        mat[:, j] = counts.to_distribution(n)
    return ResponseMatrix(n, mat)


def _project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1
    rho = np.flatnonzero(u - css / np.arange(1, v.size + 1) > 0)[-1]
    theta = css[rho] / (rho + 1)
    return np.maximum(v - theta, 0.0)


def mitigate_readout(
    m: np.ndarray | Counts,
    p: ResponseMatrix,
    max_iters: int = 10_000,
    tol: float = 1e-12,
) -> np.ndarray:
    """Minimize ||m - P t||^2 over the probability simplex.

    Projected-gradient iteration with a fixed 1/L step; raises if the
    objective has not stabilized within the iteration cap.
    """
    if isinstance(m, Counts):
        m = m.to_distribution(p.n_qubits)
    m = np.asarray(m, dtype=float)
    if m.shape != (2**p.n_qubits,):
        raise ValueError("distribution dimension mismatch")
    mat = p.matrix
    gram = mat.T @ mat
    lipschitz = np.linalg.eigvalsh(gram)[-1]
    step = 1.0 / max(lipschitz, 1e-30)
    t = _project_simplex(m.copy())
    prev_obj = np.inf
    for _ in range(max_iters):
        resid = mat @ t - m
        obj = float(resid @ resid)
        if prev_obj - obj < tol:
            return t
        prev_obj = obj
        t = _project_simplex(t - step * (mat.T @ resid))
    raise RuntimeError(
        f"readout mitigation did not converge in {max_iters} iterations"
    )


def zne(
    points: list[ZnePoint], method: str = "quadratic", probability: bool = False
) -> ZneResult:
    """Extrapolate observable values to zero noise scale.

    ``quadratic``: ordinary least squares y = a + b*lam + c*lam^2, returns
    a.  ``richardson``: Lagrange polynomial through all points evaluated at
    lam = 0.  Probability observables are clamped to [0, 1] with the clamp
    flagged.
    """
    lams = np.array([pt.achieved for pt in points])
    ys = np.array([pt.value for pt in points])
    sigmas = np.array([pt.stderr for pt in points])
    order = np.argsort(lams)
    lams, ys, sigmas = lams[order], ys[order], sigmas[order]

    if method == "quadratic":
        if len(points) < 3:
            raise ValueError("quadratic extrapolation needs >= 3 points")
        v = np.vander(lams, 3, increasing=True)
        coef, res, rank, _ = np.linalg.lstsq(v, ys, rcond=None)
        intercept = float(coef[0])
        dof = len(points) - 3
        if dof > 0 and rank == 3:
            resid = ys - v @ coef
            s2 = float(resid @ resid) / dof
            cov = s2 * np.linalg.inv(v.T @ v)
            stderr = float(np.sqrt(max(cov[0, 0], 0.0)))
        else:
            stderr = 0.0
        coefficients = tuple(float(x) for x in coef)
    elif method == "richardson":
        if len(points) < 2:
            raise ValueError("richardson extrapolation needs >= 2 points")
        if len(set(lams.tolist())) != len(lams):
            raise ValueError("richardson needs distinct scale factors")
        weights = np.ones(len(lams))
        for i in range(len(lams)):
            for j in range(len(lams)):
                if j != i:
                    weights[i] *= lams[j] / (lams[j] - lams[i])
        intercept = float(weights @ ys)
        stderr = float(np.sqrt(np.sum((weights * sigmas) ** 2)))
        coefficients = tuple(float(w) for w in weights)
    else:
        raise ValueError(f"unknown extrapolation method {method!r}")

    clamped = False
    if probability and not 0.0 <= intercept <= 1.0:
        intercept = min(max(intercept, 0.0), 1.0)
        clamped = True
    return ZneResult(method, intercept, coefficients, stderr, clamped)
