"""Gate-level circuit IR and the ancilla-mediated evolution compiler.

The compiler turns a commuting Pauli-sum Hamiltonian into an exact (no
Trotter error) evolution circuit: each term is conjugated into a Z string,
entangled with a shared ancilla through ZZ rotations at angle pi/2, and the
actual time evolution is a single-qubit rotation on the ancilla.  With the
ancilla prepared in the designated eigenstate the induced system unitary is
exp(-i * coefficient * t * P) exactly, including global phase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .models import GaugeModel, Geometry, build_hamiltonian
from .paulis import PauliSum, PauliTerm, commutes

ONE_QUBIT_KINDS = {"H", "S", "SDG", "X", "Z", "RX", "RZ"}
TWO_QUBIT_KINDS = {"CNOT", "CP"}
ANGLED_KINDS = {"RX", "RZ", "CP"}

_SQ = 1 / math.sqrt(2)
_FIXED_1Q = {
    "H": np.array([[_SQ, _SQ], [_SQ, -_SQ]], dtype=complex),
    "S": np.diag([1, 1j]).astype(complex),
    "SDG": np.diag([1, -1j]).astype(complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Z": np.diag([1, -1]).astype(complex),
}


class NonCommutingTerms(ValueError):
    """The Hamiltonian terms do not all commute; Trotterization would be
    required, which is out of scope."""


@dataclass(frozen=True)
class Gate:
    kind: str
    qubits: tuple[int, ...]
    angle: float | None = None

    def __post_init__(self):
        if self.kind in ONE_QUBIT_KINDS or self.kind == "MEASURE":
            if len(self.qubits) != 1:
                raise ValueError(f"{self.kind} takes one qubit")
        elif self.kind in TWO_QUBIT_KINDS:
            if len(self.qubits) != 2 or self.qubits[0] == self.qubits[1]:
                raise ValueError(f"{self.kind} takes two distinct qubits")
        else:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if self.kind in ANGLED_KINDS:
            if self.angle is None or not np.isfinite(self.angle):
                raise ValueError(f"{self.kind} needs a finite angle")
        elif self.angle is not None:
            raise ValueError(f"{self.kind} takes no angle")

    def matrix(self) -> np.ndarray:
        """Unitary in the basis |q_first q_second> (first qubit is the
        most significant index)."""
        if self.kind in _FIXED_1Q:
            return _FIXED_1Q[self.kind]
        if self.kind == "RX":
            c, s = math.cos(self.angle / 2), math.sin(self.angle / 2)
            return np.array([[c, -1j * s], [-1j * s, c]])
        if self.kind == "RZ":
            return np.diag(
                [np.exp(-1j * self.angle / 2), np.exp(1j * self.angle / 2)]
            )
        if self.kind == "CNOT":
            return np.array(
                [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]],
                dtype=complex,
            )
        if self.kind == "CP":
            return np.diag([1, 1, 1, np.exp(1j * self.angle)]).astype(complex)
        raise ValueError(f"no matrix for {self.kind}")


@dataclass(frozen=True)
class Circuit:
    """Ordered gate list over ``n_qubits`` indexed qubits.

    Measurements, if present, must come last; classical bit ``j`` is the
    ``j``-th MEASURE gate.
    """

    n_qubits: int
    gates: tuple[Gate, ...]
    ancillas: frozenset[int] = frozenset()

    def __post_init__(self):
        seen_measure = set()
        for g in self.gates:
            if max(g.qubits) >= self.n_qubits:
                raise ValueError("gate qubit index out of range")
            if g.kind == "MEASURE":
                if g.qubits[0] in seen_measure:
                    raise ValueError("qubit measured twice")
                seen_measure.add(g.qubits[0])
            elif seen_measure & set(g.qubits):
                raise ValueError("gate after measurement")

    @property
    def measured_qubits(self) -> tuple[int, ...]:
        return tuple(g.qubits[0] for g in self.gates if g.kind == "MEASURE")

    def without_measurements(self) -> "Circuit":
        return Circuit(
            self.n_qubits,
            tuple(g for g in self.gates if g.kind != "MEASURE"),
            self.ancillas,
        )

    def cnot_count(self) -> int:
        return sum(1 for g in self.gates if g.kind == "CNOT")


# --- statevector application helpers ----------------------------------------


def apply_gate(psi: np.ndarray, gate: Gate, n_qubits: int) -> np.ndarray:
    """Apply a gate to a batch of states; last axis has length 2**n."""
    return apply_matrix(psi, gate.matrix(), gate.qubits, n_qubits)


def apply_matrix(psi, matrix, qubits, n_qubits) -> np.ndarray:
    k = len(qubits)
    batch = psi.shape[:-1]
    v = psi.reshape(batch + (2,) * n_qubits)
    bnd = len(batch)
    axes = [bnd + (n_qubits - 1 - q) for q in qubits]
    u = matrix.reshape((2,) * (2 * k))
    out = np.tensordot(u, v, axes=(list(range(k, 2 * k)), axes))
    out = np.moveaxis(out, list(range(k)), axes)
    return np.ascontiguousarray(out).reshape(batch + (2**n_qubits,))


def circuit_unitary(c: Circuit) -> np.ndarray:
    """Dense unitary of a measurement-free circuit."""
    if c.measured_qubits:
        raise ValueError("circuit contains measurements")
    if c.n_qubits > 12:
        raise ValueError("unitary construction capped at 12 qubits")
    u = np.eye(2**c.n_qubits, dtype=complex)
    # columns evolve as states: U_total[:, j] = circuit applied to e_j
    cols = u.T
    for g in c.gates:
        cols = apply_gate(cols, g, c.n_qubits)
    return cols.T


def ancilla_restricted_unitary(c: Circuit, ancilla: int) -> np.ndarray:
    """System-side unitary with the ancilla held in |0>."""
    u = circuit_unitary(c)
    n = c.n_qubits
    keep = [i for i in range(2**n) if not (i >> ancilla) & 1]
    return u[np.ix_(keep, keep)]


def metrics(c: Circuit) -> dict:
    """CNOT count, two-qubit depth, and qubit count.

    Depth counts only two-qubit gate layers; single-qubit gates are free.
    """
    level = [0] * c.n_qubits
    cnots = 0
    for g in c.gates:
        if g.kind in TWO_QUBIT_KINDS:
            if g.kind == "CNOT":
                cnots += 1
            a, b = g.qubits
            d = max(level[a], level[b]) + 1
            level[a] = level[b] = d
    return {
        "cnot_count": cnots,
        "two_qubit_depth": max(level) if level else 0,
        "qubit_count": c.n_qubits,
    }


# --- compiler ---------------------------------------------------------------


def entangler(ancilla, system_qubits, phi, style="cnot") -> Circuit:
    """Circuit for prod_j exp[-i (phi/2) Z_ancilla Z_j].

    ``style="cnot"`` decomposes each ZZ rotation as CNOT(j->A) RZ(phi on A)
    CNOT(j->A) and is exact including global phase.  ``style="cp"`` uses the
    RZ/RZ/controlled-phase form, exact up to a global phase exp(i N phi / 2).
    """
    system_qubits = tuple(system_qubits)
    if ancilla in system_qubits:
        raise ValueError("ancilla overlaps system qubits")
    gates = []
    for j in system_qubits:
        if style == "cnot":
            gates.append(Gate("CNOT", (j, ancilla)))
            gates.append(Gate("RZ", (ancilla,), phi))
            gates.append(Gate("CNOT", (j, ancilla)))
        elif style == "cp":
            gates.append(Gate("RZ", (j,), phi))
            gates.append(Gate("RZ", (ancilla,), phi))
            gates.append(Gate("CP", (j, ancilla), -2 * phi))
        else:
            raise ValueError(f"unknown style {style!r}")
    n = max((ancilla, *system_qubits)) + 1
    return Circuit(n, tuple(gates), frozenset({ancilla}))


def _merged_half_pi_entangler(ancilla, system_qubits, sign) -> list[Gate]:
    """Gate list for the phi = sign * pi/2 entangler with one CNOT per
    system qubit.

    Each ZZ rotation at +-pi/2 is a controlled-Z up to single-qubit RZs and
    the phase exp(i sign pi/4); since all factors are diagonal they merge
    into one CNOT run conjugated by Hadamards on the ancilla.  The global
    phase exp(i sign N pi/4) cancels between the two entanglers of a term
    block.
    """
    phi = sign * math.pi / 2
    gates = [Gate("RZ", (j,), phi) for j in system_qubits]
    gates.append(Gate("RZ", (ancilla,), phi * len(system_qubits)))
    gates.append(Gate("H", (ancilla,)))
    gates.extend(Gate("CNOT", (j, ancilla)) for j in system_qubits)
    gates.append(Gate("H", (ancilla,)))
    return gates


# Sign of the induced Z-string rotation per weight mod 4: with the middle
# ancilla rotation exp(+i theta sigma^x_A) and the ancilla in its designated
# +1 eigenstate, the system picks up exp(+i eps theta Z...Z).  Validated
# against the exact-diagonalization oracle in the tests.
_EPS_BY_WEIGHT = {0: -1, 1: +1, 2: +1, 3: -1}


def term_evolution(term: PauliTerm, t: float, ancilla: int) -> Circuit:
    """Evolution block exp(-i * coefficient * t * P) for one Pauli term.

    The block prepares the ancilla from |0> into the eigenstate matching
    the term weight (|+> for even, |+i> for odd), runs the entangled
    rotation, and returns the ancilla to |0>, so blocks chain on a shared
    ancilla without resets.
    """
    support = term.support
    if not support:
        raise ValueError("all-identity term has no evolution block")
    if ancilla in range(term.n_qubits):
        raise ValueError("ancilla must lie outside the system register")
    odd = len(support) % 2 == 1
    eps = _EPS_BY_WEIGHT[len(support) % 4]
    theta = eps * term.coefficient * t

    basis, basis_inv = [], []
    for q in support:
        letter = term.letters[q]
        if letter == "X":
            basis.append(Gate("H", (q,)))
            basis_inv.append(Gate("H", (q,)))
        elif letter == "Y":
            # B = H S-dagger maps Y to Z; inverse is S H.
            basis.extend([Gate("SDG", (q,)), Gate("H", (q,))])
            basis_inv.extend([Gate("H", (q,)), Gate("S", (q,))])

    gates = [Gate("H", (ancilla,))]
    if odd:
        gates.append(Gate("S", (ancilla,)))
    gates.extend(basis)
    gates.extend(_merged_half_pi_entangler(ancilla, support, +1))
    gates.append(Gate("RX", (ancilla,), -2 * theta))
    gates.extend(_merged_half_pi_entangler(ancilla, support, -1))
    gates.extend(basis_inv)
    if odd:
        gates.append(Gate("SDG", (ancilla,)))
    gates.append(Gate("H", (ancilla,)))

    n = max(ancilla + 1, term.n_qubits)
    return Circuit(n, tuple(gates), frozenset({ancilla}))


def evolution_circuit(model: GaugeModel, geom: Geometry, t: float) -> Circuit:
    """Exact evolution core: sequential term blocks sharing one ancilla."""
    if model.group == "Z2" and model.gamma != 0.0:
        raise ValueError("evolution circuits require gamma = 0")
    h = build_hamiltonian(model, geom)
    for i, a in enumerate(h.terms):
        for b in h.terms[i + 1 :]:
            if not commutes(a, b):
                raise NonCommutingTerms(
                    f"{model.group} on {geom.kind}: terms {a.letters} and "
                    f"{b.letters} do not commute"
                )
    ancilla = geom.n_links
    gates: list[Gate] = []
    for term in h.terms:
        gates.extend(term_evolution(term, t, ancilla).gates)
    return Circuit(ancilla + 1, tuple(gates), frozenset({ancilla}))


def model_circuit(
    model: GaugeModel,
    geom: Geometry,
    t: float,
    initial_label: str,
    measure_basis: str | None = None,
    include_measurements: bool = True,
) -> Circuit:
    """Full experiment circuit: state prep, evolution, basis rotation,
    measurement of the system qubits.

    Z2 runs in the x basis (labels are x-basis strings and a Hadamard layer
    precedes measurement); U(1) prepares and measures directly in z.
    """
    n = geom.n_links
    if len(initial_label) != n or set(initial_label) - {"0", "1"}:
        raise ValueError(f"initial label must be {n} characters of 0/1")
    if measure_basis is None:
        measure_basis = "x" if model.group == "Z2" else "z"
    prep_basis = "x" if model.group == "Z2" else "z"

    gates: list[Gate] = []
    for q in range(n):
        bit = initial_label[n - 1 - q]
        if bit == "1":
            gates.append(Gate("X", (q,)))
        if prep_basis == "x":
            gates.append(Gate("H", (q,)))

    core = evolution_circuit(model, geom, t)
    gates.extend(core.gates)

    if measure_basis == "x":
        gates.extend(Gate("H", (q,)) for q in range(n))
    elif measure_basis != "z":
        raise ValueError("measure_basis must be 'x' or 'z'")
    if include_measurements:
        gates.extend(Gate("MEASURE", (q,)) for q in range(n))
    return Circuit(core.n_qubits, tuple(gates), core.ancillas)


# --- serialization ----------------------------------------------------------


def dump_circuit(c: Circuit) -> str:
    """Line-oriented text format: KIND qubits [angle], one gate per line."""
    lines = [f"QUBITS {c.n_qubits} ANCILLA {' '.join(map(str, sorted(c.ancillas)))}".rstrip()]
    for g in c.gates:
        parts = [g.kind, *map(str, g.qubits)]
        if g.angle is not None:
            parts.append(repr(float(g.angle)))
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def load_circuit(text: str) -> Circuit:
    lines = [l for l in text.splitlines() if l.strip()]
    if not lines or not lines[0].startswith("QUBITS"):
        raise ValueError("missing QUBITS header")
    head = lines[0].split()
    n = int(head[1])
    ancillas = frozenset(int(x) for x in head[3:]) if len(head) > 2 else frozenset()
    gates = []
    for line in lines[1:]:
        parts = line.split()
        kind = parts[0]
        if kind in ANGLED_KINDS:
            qubits = tuple(int(x) for x in parts[1:-1])
            angle = float(parts[-1])
        else:
            qubits = tuple(int(x) for x in parts[1:])
            angle = None
        gates.append(Gate(kind, qubits, angle))
    return Circuit(n, tuple(gates), ancillas)
