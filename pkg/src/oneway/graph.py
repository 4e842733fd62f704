"""Graphs with input/middle/output sections and graph-state preparation."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .pauli import PauliString, stabilizer_K
from .statevector import StateVector, apply_cz, apply_pauli, kron_states

__all__ = [
    "Graph",
    "StabilizerCheck",
    "neighbors",
    "prepare_initial",
    "entangle",
    "graph_state",
    "verify_stabilizers",
]


@dataclass(frozen=True)
class Graph:
    """Undirected graph on vertices ``1..n`` split into input, middle and output sections."""

    n: int
    edges: frozenset[frozenset[int]]
    inputs: tuple[int, ...]
    middle: tuple[int, ...]
    outputs: tuple[int, ...]
    _adjacency: dict[int, frozenset[int]] = field(init=False, repr=False, compare=False)

    def __init__(
        self,
        n: int,
        edges: Iterable[Iterable[int]],
        inputs: Iterable[int] = (),
        outputs: Iterable[int] = (),
        middle: Iterable[int] | None = None,
    ) -> None:
        inputs = tuple(sorted(inputs))
        outputs = tuple(sorted(outputs))
        if middle is None:
            taken = set(inputs) | set(outputs)
            middle = [v for v in range(1, n + 1) if v not in taken]
        middle = tuple(sorted(middle))

        edge_set = set()
        for e in edges:
            e = tuple(e)
            if len(e) != 2:
                raise ValueError(f"edge {e} must join two vertices")
            i, j = e
            if i == j:
                raise ValueError(f"self-loop on vertex {i}")
            for v in e:
                if not 1 <= v <= n:
                    raise ValueError(f"edge {e} uses unknown vertex {v}")
            key = frozenset(e)
            if key in edge_set:
                raise ValueError(f"duplicate edge {sorted(e)}")
            edge_set.add(key)

        sections = inputs + middle + outputs
        if len(set(sections)) != len(sections):
            raise ValueError("input, middle and output sections overlap")
        if set(sections) != set(range(1, n + 1)):
            raise ValueError("sections must cover exactly the vertices 1..n")
        if len(inputs) != len(outputs):
            raise ValueError(f"{len(inputs)} input vertices but {len(outputs)} output vertices")

        adjacency: dict[int, set[int]] = {v: set() for v in range(1, n + 1)}
        for e in edge_set:
            i, j = tuple(e)
            adjacency[i].add(j)
            adjacency[j].add(i)

        object.__setattr__(self, "n", n)
        object.__setattr__(self, "edges", frozenset(edge_set))
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "middle", middle)
        object.__setattr__(self, "outputs", outputs)
        object.__setattr__(self, "_adjacency", {v: frozenset(a) for v, a in adjacency.items()})

    @property
    def vertices(self) -> range:
        return range(1, self.n + 1)

    def neighbors(self, i: int) -> frozenset[int]:
        try:
            return self._adjacency[i]
        except KeyError:
            raise KeyError(f"unknown vertex {i}") from None

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(tuple(sorted(e)) for e in self.edges)

    def stabilizer(self, i: int) -> PauliString:
        return stabilizer_K(self, i)

    def to_json(self) -> dict:
        return {
            "vertices": self.n,
            "edges": [list(e) for e in self.sorted_edges()],
            "input": list(self.inputs),
            "middle": list(self.middle),
            "output": list(self.outputs),
        }

    @classmethod
    def from_json(cls, data: dict | str) -> Graph:
        if isinstance(data, str):
            data = json.loads(data)
        return cls(
            int(data["vertices"]),
            data.get("edges", []),
            data.get("input", []),
            data.get("output", []),
            data.get("middle"),
        )


def neighbors(g: Graph, i: int) -> frozenset[int]:
    return g.neighbors(i)


def prepare_initial(g: Graph, psi_in: StateVector) -> StateVector:
    """``psi_in`` on the input vertices (ascending), ``|+>`` everywhere else."""
    k = len(g.inputs)
    if psi_in.n != k:
        raise ValueError(f"input state has {psi_in.n} qubits, graph has {k} input vertices")
    # Build with inputs on qubits 1..k, then permute axes into place.
    others = [v for v in g.vertices if v not in g.inputs]
    staged = kron_states([psi_in, StateVector.plus(len(others))])
    if g.n == 0:
        return staged
    placement = list(g.inputs) + others  # staged qubit j+1 -> vertex placement[j]
    t = staged.tensor()
    # staged axis n - (j + 1) holds placement[j]; we want axis n - v to hold v
    order = [0] * g.n
    for j, v in enumerate(placement):
        order[g.n - v] = g.n - (j + 1)
    return StateVector(g.n, np.ascontiguousarray(np.transpose(t, order)).reshape(-1))


def entangle(g: Graph, s: StateVector, edges: Iterable[tuple[int, int]] | None = None) -> StateVector:
    """Apply a controlled-phase for every edge (or for ``edges`` if given)."""
    if s.n != g.n:
        raise ValueError(f"state has {s.n} qubits, graph has {g.n}")
    for i, j in g.sorted_edges() if edges is None else edges:
        s = apply_cz(i, j, s)
    return s


def graph_state(g: Graph, psi_in: StateVector) -> StateVector:
    return entangle(g, prepare_initial(g, psi_in))


@dataclass(frozen=True)
class StabilizerCheck:
    vertex: int
    deviation: float
    passed: bool


def verify_stabilizers(
    g: Graph, state: StateVector, tol: float = 1e-10, vertices: Iterable[int] | None = None
) -> list[StabilizerCheck]:
    """Check ``K_i |G> = |G>`` for every non-input vertex (or the given ones)."""
    if vertices is None:
        vertices = [v for v in g.vertices if v not in g.inputs]
    report = []
    for v in vertices:
        diff = apply_pauli(stabilizer_K(g, v), state).amps - state.amps
        dev = float(np.linalg.norm(diff))
        report.append(StabilizerCheck(v, dev, dev <= tol))
    return report
