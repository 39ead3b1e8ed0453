"""Pauli-string algebra and dense-matrix construction.

Conventions used throughout the package:

* Qubit ``q`` (0-based) is the ``q``-th tensor factor counted from the
  *right*: basis index ``i`` has bit ``(i >> q) & 1`` for qubit ``q``, and
  ``kron`` products are built with qubit ``n-1`` as the leftmost factor.
* ``PauliTerm.letters[q]`` is the letter acting on qubit ``q``, so for the
  lattice models qubit ``q`` carries link ``q + 1``.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np

MAX_DENSE_QUBITS = 14

PAULI_1Q = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class DimensionCapError(ValueError):
    """Dense construction requested beyond the supported qubit count."""


@dataclass(frozen=True)
class PauliTerm:
    """A real coefficient times a Pauli string, one letter per qubit."""

    coefficient: float
    letters: str

    def __post_init__(self):
        if not np.isfinite(self.coefficient):
            raise ValueError("coefficient must be finite")
        bad = set(self.letters) - set("IXYZ")
        if bad:
            raise ValueError(f"invalid Pauli letters: {sorted(bad)}")

    @property
    def n_qubits(self) -> int:
        return len(self.letters)

    @property
    def support(self) -> tuple[int, ...]:
        """Qubits carrying a non-identity letter."""
        return tuple(q for q, l in enumerate(self.letters) if l != "I")

    @property
    def weight(self) -> int:
        return len(self.support)


@dataclass(frozen=True)
class PauliSum:
    """Sum of Pauli terms on a fixed qubit count, kept in canonical form."""

    terms: tuple[PauliTerm, ...]
    n_qubits: int

    @staticmethod
    def from_terms(terms, n_qubits=None) -> "PauliSum":
        """Merge duplicate letter strings and drop exact zeros."""
        terms = list(terms)
        if n_qubits is None:
            if not terms:
                raise ValueError("n_qubits required for an empty sum")
            n_qubits = terms[0].n_qubits
        merged: dict[str, float] = {}
        for t in terms:
            if t.n_qubits != n_qubits:
                raise ValueError("all terms must share n_qubits")
            merged[t.letters] = merged.get(t.letters, 0.0) + t.coefficient
        canon = tuple(
            PauliTerm(c, s) for s, c in sorted(merged.items()) if c != 0.0
        )
        return PauliSum(canon, n_qubits)


def term_to_matrix(term: PauliTerm) -> np.ndarray:
    """Dense matrix of a Pauli term; qubit 0 is the rightmost kron factor."""
    if term.n_qubits > MAX_DENSE_QUBITS:
        raise DimensionCapError(
            f"{term.n_qubits} qubits exceeds dense cap {MAX_DENSE_QUBITS}"
        )
    m = np.array([[term.coefficient]], dtype=complex)
    for letter in reversed(term.letters):
        m = np.kron(m, PAULI_1Q[letter])
    return m


def sum_to_matrix(h: PauliSum) -> np.ndarray:
    if h.n_qubits > MAX_DENSE_QUBITS:
        raise DimensionCapError(
            f"{h.n_qubits} qubits exceeds dense cap {MAX_DENSE_QUBITS}"
        )
    m = np.zeros((2**h.n_qubits, 2**h.n_qubits), dtype=complex)
    for t in h.terms:
        m += term_to_matrix(t)
    return m


def commutes(a: PauliTerm, b: PauliTerm) -> bool:
    """True iff the strings commute.

    Two Pauli strings commute exactly when the number of positions where
    they differ with both letters non-identity is even.
    """
    if a.n_qubits != b.n_qubits:
        raise ValueError("length mismatch")
    clashes = sum(
        1
        for la, lb in zip(a.letters, b.letters)
        if la != "I" and lb != "I" and la != lb
    )
    return clashes % 2 == 0


# --- exact-diagonalization oracle -------------------------------------------

_eig_cache: dict[tuple, tuple[np.ndarray, np.ndarray]] = {}
_eig_lock = threading.Lock()


def _diagonalize(h: PauliSum) -> tuple[np.ndarray, np.ndarray]:
    key = (h.n_qubits, tuple((t.letters, t.coefficient) for t in h.terms))
    got = _eig_cache.get(key)
    if got is not None:
        return got
    m = sum_to_matrix(h)
    if np.abs(m - m.conj().T).max() > 1e-12:
        raise ValueError("Hamiltonian is not Hermitian")
    evals, evecs = np.linalg.eigh(m)
    with _eig_lock:
        _eig_cache[key] = (evals, evecs)
    return evals, evecs


def exact_evolve(h: PauliSum, psi0: np.ndarray, t: float) -> np.ndarray:
    """exp(-i H t) |psi0> via cached dense diagonalization."""
    evals, evecs = _diagonalize(h)
    psi0 = np.asarray(psi0, dtype=complex)
    if psi0.shape != (2**h.n_qubits,):
        raise ValueError("state dimension does not match Hamiltonian")
    c = evecs.conj().T @ psi0
    return evecs @ (np.exp(-1j * evals * t) * c)


def loschmidt(psi0: np.ndarray, psit: np.ndarray) -> float:
    """Return probability |<psi0|psit>|^2."""
    psi0 = np.asarray(psi0)
    psit = np.asarray(psit)
    if psi0.shape != psit.shape:
        raise ValueError("dimension mismatch")
    return float(np.abs(np.vdot(psi0, psit)) ** 2)
