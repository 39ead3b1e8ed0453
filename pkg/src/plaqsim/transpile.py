"""Routing onto hardware coupling graphs and circuit-volume accounting."""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass

from .circuits import TWO_QUBIT_KINDS, Circuit, Gate, metrics


@dataclass(frozen=True)
class Topology:
    """Undirected coupling graph of a device."""

    name: str
    n_qubits: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        for a, b in self.edges:
            if a == b or a >= self.n_qubits or b >= self.n_qubits:
                raise ValueError(f"bad edge ({a}, {b})")
        if self.n_qubits > 1 and len(self._components()) != 1:
            raise ValueError("coupling graph must be connected")

    def _components(self):
        seen, comps = set(), []
        for start in range(self.n_qubits):
            if start in seen:
                continue
            comp, todo = set(), [start]
            while todo:
                v = todo.pop()
                if v in comp:
                    continue
                comp.add(v)
                todo.extend(self.neighbors(v))
            seen |= comp
            comps.append(comp)
        return comps

    def neighbors(self, q: int) -> list[int]:
        out = set()
        for a, b in self.edges:
            if a == q:
                out.add(b)
            elif b == q:
                out.add(a)
        return sorted(out)

    def adjacent(self, a: int, b: int) -> bool:
        return b in self.neighbors(a)

    def shortest_path(self, a: int, b: int) -> list[int]:
        """BFS path a -> b with deterministic lowest-index tie-breaking."""
        prev = {a: None}
        queue = deque([a])
        while queue:
            v = queue.popleft()
            if v == b:
                break
            for w in self.neighbors(v):
                if w not in prev:
                    prev[w] = v
                    queue.append(w)
        path = [b]
        while prev[path[-1]] is not None:
            path.append(prev[path[-1]])
        return path[::-1]

    def degree(self, q: int) -> int:
        return len(self.neighbors(q))

    @staticmethod
    def from_json(text: str) -> "Topology":
        d = json.loads(text)
        return Topology(d["name"], d["n"], tuple(tuple(e) for e in d["edges"]))

    def to_json(self) -> str:
        return json.dumps(
            {"name": self.name, "n": self.n_qubits, "edges": [list(e) for e in self.edges]}
        )


# Built-in device graphs.  linear-5 and t-5 follow the published 5-qubit
# layouts (path, and a T with the junction at qubit 1); the 7-qubit H graph
# is our reading of the device picture, kept in one constant so it is easy
# to correct.
BUILTIN_TOPOLOGIES = {
    "linear-5": Topology("linear-5", 5, ((0, 1), (1, 2), (2, 3), (3, 4))),
    "t-5": Topology("t-5", 5, ((0, 1), (1, 2), (1, 3), (3, 4))),
    "h-7": Topology("h-7", 7, ((0, 1), (1, 2), (1, 3), (3, 5), (4, 5), (5, 6))),
}


# Published quantum-volume benchmarks for the devices the built-in graphs
# model (5-qubit T/line devices: 16; 7-qubit H device: 32).  Used to compare
# a routed circuit's volume against what the device can faithfully run.
DEVICE_QUANTUM_VOLUME = {"linear-5": 16, "t-5": 16, "h-7": 32}


def get_topology(name: str) -> Topology:
    try:
        return BUILTIN_TOPOLOGIES[name]
    except KeyError:
        raise ValueError(
            f"unknown topology {name!r}; built-ins: {sorted(BUILTIN_TOPOLOGIES)}"
        ) from None


def _interaction_counts(c: Circuit) -> dict[int, int]:
    counts = {q: 0 for q in range(c.n_qubits)}
    for g in c.gates:
        if g.kind in TWO_QUBIT_KINDS:
            for q in g.qubits:
                counts[q] += 1
    return counts


def default_layout(c: Circuit, topo: Topology) -> dict[int, int]:
    """Heuristic initial placement: ancilla on a maximum-degree physical
    qubit, remaining logical qubits by descending interaction count onto
    BFS-closest free neighbors."""
    if c.n_qubits > topo.n_qubits:
        raise ValueError("circuit needs more qubits than the topology has")
    counts = _interaction_counts(c)
    anchor = max(range(topo.n_qubits), key=lambda q: (topo.degree(q), -q))
    ancillas = sorted(c.ancillas)
    order = ancillas + sorted(
        (q for q in range(c.n_qubits) if q not in c.ancillas),
        key=lambda q: (-counts[q], q),
    )
    # physical qubits in BFS order from the anchor
    bfs, queue = [], deque([anchor])
    while queue:
        v = queue.popleft()
        if v in bfs:
            continue
        bfs.append(v)
        queue.extend(w for w in topo.neighbors(v) if w not in bfs)
    return {logical: bfs[i] for i, logical in enumerate(order)}


def transpile(
    c: Circuit, topo: Topology, initial_layout: dict[int, int] | None = None
) -> tuple[Circuit, dict[int, int]]:
    """Route a circuit onto the coupling graph.

    Greedy shortest-path routing: before a non-adjacent two-qubit gate the
    first operand is swapped along the BFS path until adjacent; each SWAP is
    emitted as 3 CNOTs.  Returns the routed circuit (on physical qubits)
    and the final logical -> physical layout.
    """
    if c.n_qubits > topo.n_qubits:
        raise ValueError("circuit needs more qubits than the topology has")
    layout = dict(initial_layout) if initial_layout else default_layout(c, topo)
    if len(set(layout.values())) != len(layout):
        raise ValueError("layout must be injective")
    phys_of = dict(layout)
    logical_of = {p: l for l, p in phys_of.items()}

    gates: list[Gate] = []
    for g in c.gates:
        if g.kind == "MEASURE":
            gates.append(Gate("MEASURE", (phys_of[g.qubits[0]],)))
        elif len(g.qubits) == 1:
            gates.append(Gate(g.kind, (phys_of[g.qubits[0]],), g.angle))
        else:
            a, b = (phys_of[q] for q in g.qubits)
            if not topo.adjacent(a, b):
                path = topo.shortest_path(a, b)
                for step in path[1:-1]:
                    gates.extend(
                        [
                            Gate("CNOT", (a, step)),
                            Gate("CNOT", (step, a)),
                            Gate("CNOT", (a, step)),
                        ]
                    )
                    la, ls = logical_of.get(a), logical_of.get(step)
                    if la is not None:
                        phys_of[la] = step
                    if ls is not None:
                        phys_of[ls] = a
                    logical_of[step], logical_of[a] = la, ls
                    a = step
            gates.append(Gate(g.kind, (a, b), g.angle))
    routed = Circuit(
        topo.n_qubits, tuple(gates), frozenset(phys_of[q] for q in c.ancillas)
    )
    return routed, dict(phys_of)


def volume_report(c: Circuit) -> dict:
    """Circuit volume m*d and the quantum-volume formula 2^min(d, m)."""
    m = metrics(c)
    d, nq = m["two_qubit_depth"], m["qubit_count"]
    return {
        "m": nq,
        "d": d,
        "circuit_volume": nq * d,
        "qv_exponent": min(d, nq),
        "quantum_volume": 2 ** min(d, nq),
    }
