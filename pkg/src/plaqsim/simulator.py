"""Statevector execution with stochastic CNOT noise and readout flips.

Noise model: after each CNOT a depolarizing event occurs with probability
p2, applying one of the 15 non-identity two-qubit Paulis uniformly; at
measurement each bit flips with probability eps01 / eps10.  Single-qubit
gates are noiseless.  Trajectories sharing an error pattern are simulated
once and sampled in batch, so the cost scales with the number of distinct
patterns rather than with shots.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .circuits import Circuit, Gate, apply_gate, apply_matrix
from .paulis import PAULI_1Q, PauliSum

MAX_STATE_QUBITS = 20


@dataclass(frozen=True)
class NoiseModel:
    p2: float = 0.0
    eps01: float = 0.0  # P(read 1 | true 0)
    eps10: float = 0.0  # P(read 0 | true 1)

    def __post_init__(self):
        for p in (self.p2, self.eps01, self.eps10):
            if not 0.0 <= p <= 1.0:
                raise ValueError("probabilities must lie in [0, 1]")

    @property
    def noiseless(self) -> bool:
        return self.p2 == 0.0 and self.eps01 == 0.0 and self.eps10 == 0.0


@dataclass
class Counts:
    """Histogram of measured bitstrings (most significant qubit leftmost)."""

    counts: dict[str, int]
    shots: int

    def __post_init__(self):
        if sum(self.counts.values()) != self.shots:
            raise ValueError("counts must sum to shots")

    @property
    def n_bits(self) -> int:
        return len(next(iter(self.counts)))

    def to_distribution(self, n_bits: int | None = None) -> np.ndarray:
        n = n_bits if n_bits is not None else self.n_bits
        dist = np.zeros(2**n)
        for key, c in self.counts.items():
            dist[int(key, 2)] = c / self.shots
        return dist

    @staticmethod
    def from_outcomes(outcomes: np.ndarray, n_bits: int) -> "Counts":
        vals, reps = np.unique(outcomes, return_counts=True)
        return Counts(
            {format(int(v), f"0{n_bits}b"): int(r) for v, r in zip(vals, reps)},
            int(outcomes.size),
        )


def child_seed(master: int, *key: int) -> np.random.SeedSequence:
    """Derived seed so grid order cannot change results."""
    return np.random.SeedSequence(master, spawn_key=tuple(key))


def _as_seedseq(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def run_ideal(c: Circuit) -> np.ndarray:
    """Noiseless statevector of the circuit from |0...0>; measurements
    are ignored."""
    if c.n_qubits > MAX_STATE_QUBITS:
        raise ValueError(f"statevector capped at {MAX_STATE_QUBITS} qubits")
    psi = np.zeros(2**c.n_qubits, dtype=complex)
    psi[0] = 1.0
    for g in c.gates:
        if g.kind != "MEASURE":
            psi = apply_gate(psi, g, c.n_qubits)
    return psi


def _outcome_map(measured: tuple[int, ...], n: int) -> np.ndarray:
    """Map from full basis index to measured outcome index (clbit j reads
    qubit measured[j], clbit 0 least significant)."""
    idx = np.arange(2**n)
    out = np.zeros(2**n, dtype=np.int64)
    for j, q in enumerate(measured):
        out |= ((idx >> q) & 1) << j
    return out


def _marginal_probs(psi: np.ndarray, measured: tuple[int, ...], n: int) -> np.ndarray:
    p = np.abs(np.asarray(psi)) ** 2
    return np.bincount(_outcome_map(measured, n), weights=p, minlength=2 ** len(measured))


def sample(state: np.ndarray, shots: int, seed, measured=None) -> Counts:
    """Multinomial shot sampling from |amplitude|^2; deterministic per seed."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    n = int(np.log2(state.size))
    if measured is None:
        measured = tuple(range(n))
    probs = _marginal_probs(np.asarray(state), tuple(measured), n)
    probs = probs / probs.sum()
    rng = np.random.default_rng(seed)
    draws = rng.multinomial(shots, probs)
    nb = len(measured)
    return Counts(
        {format(i, f"0{nb}b"): int(k) for i, k in enumerate(draws) if k},
        shots,
    )


_TWO_QUBIT_PAULIS = [
    (a, b) for a, b in itertools.product("IXYZ", repeat=2) if (a, b) != ("I", "I")
]


def _pauli_perm_phase(pair: tuple[str, str], qubits, n):
    """2-qubit Pauli as an index permutation plus per-index phase."""
    perm = np.arange(2**n)
    phase = np.ones(2**n, dtype=complex)
    for letter, q in zip(pair, qubits):
        bit = (perm >> q) & 1
        if letter in ("X", "Y"):
            perm = perm ^ (1 << q)
        if letter == "Y":
            phase = phase * np.where(bit, -1j, 1j)
        elif letter == "Z":
            phase = phase * np.where(bit, -1, 1)
    return perm, phase


def _apply_readout_flips(outcomes, measured_bits, noise, rng):
    flipped = outcomes.copy()
    for b in range(measured_bits):
        bits = (flipped >> b) & 1
        p = np.where(bits, noise.eps10, noise.eps01)
        flip = rng.random(outcomes.size) < p
        flipped = flipped ^ (flip.astype(np.int64) << b)
    return flipped


def _compiled_op(g: Gate, n: int):
    """Fast batched form of a gate: permutation and diagonal gates act by
    index gather / elementwise multiply, anything else by dense application."""
    if g.kind in ("CNOT", "X"):
        perm = np.arange(2**n)
        if g.kind == "X":
            perm = perm ^ (1 << g.qubits[0])
        else:
            ctrl, tgt = g.qubits
            on = (perm >> ctrl) & 1
            perm = perm ^ (on << tgt)
        return ("perm", perm)
    if g.kind in ("Z", "S", "SDG", "RZ", "CP"):
        idx = np.arange(2**n)
        if g.kind == "CP":
            both = ((idx >> g.qubits[0]) & 1) & ((idx >> g.qubits[1]) & 1)
            diag = np.where(both, np.exp(1j * g.angle), 1.0)
        else:
            bit = (idx >> g.qubits[0]) & 1
            hi = {
                "Z": -1.0,
                "S": 1j,
                "SDG": -1j,
                "RZ": np.exp(1j * g.angle / 2),
            }[g.kind]
            lo = np.exp(-1j * g.angle / 2) if g.kind == "RZ" else 1.0
            diag = np.where(bit, hi, lo)
        return ("diag", diag.astype(complex))
    return ("dense", g)


def run_noisy(c: Circuit, noise: NoiseModel, shots: int, seed) -> Counts:
    """Shot-sampled execution under the stochastic Pauli noise model.

    With a noiseless model this reduces exactly (same seed, same draws) to
    ``sample(run_ideal(c), ...)``.
    """
    measured = c.measured_qubits
    if not measured:
        measured = tuple(q for q in range(c.n_qubits) if q not in c.ancillas)
    if noise.noiseless:
        return sample(run_ideal(c), shots, seed, measured)

    n = c.n_qubits
    if n > MAX_STATE_QUBITS:
        raise ValueError(f"statevector capped at {MAX_STATE_QUBITS} qubits")
    gates = [g for g in c.gates if g.kind != "MEASURE"]
    cnot_ids = [i for i, g in enumerate(gates) if g.kind == "CNOT"]

    ss = _as_seedseq(seed).spawn(2)
    rng_noise = np.random.default_rng(ss[0])
    rng_meas = np.random.default_rng(ss[1])

    # draw error patterns per shot, group identical patterns
    n_cnots = len(cnot_ids)
    patterns: dict[tuple, int] = {(): 0}
    pattern_of_shot = np.zeros(shots, dtype=np.int64)
    if n_cnots and noise.p2 > 0:
        hits = rng_noise.random((shots, n_cnots)) < noise.p2
        paulis = rng_noise.integers(0, 15, size=int(hits.sum()))
        flat = np.flatnonzero(hits.reshape(-1))
        per_shot = hits.sum(axis=1)
        pos = 0
        for s in np.flatnonzero(per_shot):
            k = int(per_shot[s])
            events = tuple(
                (int(flat[pos + j] % n_cnots), int(paulis[pos + j]))
                for j in range(k)
            )
            pos += k
            idx = patterns.setdefault(events, len(patterns))
            pattern_of_shot[s] = idx

    n_pat = len(patterns)
    psi = np.zeros((n_pat, 2**n), dtype=complex)
    psi[:, 0] = 1.0

    # per-CNOT error injections: rows by pauli code
    events_at: dict[int, list[tuple[int, int]]] = {}
    for events, row in patterns.items():
        for cnot_idx, code in events:
            events_at.setdefault(cnot_idx, []).append((row, code))

    perm_cache: dict[tuple, tuple[np.ndarray, np.ndarray]] = {}
    op_cache: dict[Gate, tuple] = {}
    cnot_counter = 0
    for i, g in enumerate(gates):
        if g not in op_cache:
            op_cache[g] = _compiled_op(g, n)
        kind, payload = op_cache[g]
        if kind == "perm":
            psi = psi[:, payload]
        elif kind == "diag":
            psi = psi * payload
        else:
            psi = apply_gate(psi, payload, n)
        if g.kind == "CNOT":
            here = events_at.get(cnot_counter)
            if here:
                by_code: dict[int, list[int]] = {}
                for row, code in here:
                    by_code.setdefault(code, []).append(row)
                for code, rows in by_code.items():
                    key = (code, g.qubits)
                    if key not in perm_cache:
                        perm_cache[key] = _pauli_perm_phase(
                            _TWO_QUBIT_PAULIS[code], g.qubits, n
                        )
                    perm, phase = perm_cache[key]
                    psi[rows] = psi[rows][:, perm] * phase
            cnot_counter += 1

    # sample measurement outcomes per shot via inverse CDF of its pattern
    nb = len(measured)
    omap = _outcome_map(measured, n)
    probs = np.zeros((n_pat, 2**nb))
    for j in range(2**nb):
        probs[:, j] = (np.abs(psi[:, omap == j]) ** 2).sum(axis=1)
    probs /= probs.sum(axis=1, keepdims=True)
    cum = np.cumsum(probs, axis=1)
    u = rng_meas.random(shots)
    outcome_of_shot = (cum[pattern_of_shot] < u[:, None]).sum(axis=1)

    outcome_of_shot = _apply_readout_flips(outcome_of_shot, nb, noise, rng_meas)
    return Counts.from_outcomes(outcome_of_shot, nb)


def expectation_diagonal(counts: Counts, obs: PauliSum, basis: str = "z") -> float:
    """Mean of an observable diagonal in the measurement basis.

    ``basis='z'`` admits I/Z strings (U(1) measurements); ``basis='x'``
    admits I/X strings evaluated on x-basis bitstrings (Z2 measurements,
    where the pre-measurement Hadamard layer makes bitstrings x labels).
    """
    letter = {"z": "Z", "x": "X"}.get(basis)
    if letter is None:
        raise ValueError("basis must be 'x' or 'z'")
    for t in obs.terms:
        if set(t.letters) - {"I", letter}:
            raise ValueError(
                f"observable {t.letters} is not diagonal in the {basis} basis"
            )
    total = 0.0
    for key, c in counts.counts.items():
        index = int(key, 2)
        val = 0.0
        for t in obs.terms:
            sign = 1
            for q in t.support:
                if (index >> q) & 1:
                    sign = -sign
            val += t.coefficient * sign
        total += val * c
    return total / counts.shots
