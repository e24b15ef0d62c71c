"""Sampling of Omega-distributed random circuits.

One-qubit layers draw an independent gate per qubit, either Haar-random on
SU(2) or uniform over the 24 single-qubit Cliffords. Two-qubit layers use an
edge-grab sampler with expected two-qubit gate density ``xi``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .core import (
    ONE_QUBIT,
    TWO_QUBIT,
    Circuit,
    ConnectivityGraph,
    Gate,
    Layer,
    canonical_angle,
    equal_up_to_phase,
    u3_params,
)
from .errors import ConfigurationError

HAAR = "haar"
CLIFFORD24 = "clifford24"


def circuit_rng(seed: int, *path: int) -> np.random.Generator:
    """Independent generator for the stream addressed by ``path`` under ``seed``."""
    ss = np.random.SeedSequence(int(seed) % 2**64, spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.PCG64(ss))


@lru_cache(maxsize=None)
def clifford24() -> tuple[tuple[float, float, float], ...]:
    """The 24 single-qubit Cliffords (mod phase) as U3 parameter triples."""
    h = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
    s = np.diag([1, 1j])
    elems = [np.eye(2, dtype=complex)]
    frontier = list(elems)
    while frontier:
        nxt = []
        for m in frontier:
            for g in (h, s):
                cand = g @ m
                if not any(equal_up_to_phase(cand, e) for e in elems):
                    elems.append(cand)
                    nxt.append(cand)
        frontier = nxt
    assert len(elems) == 24
    return tuple(u3_params(e) for e in elems)


def haar_u3(rng: np.random.Generator) -> tuple[float, float, float]:
    """Haar-random SU(2) element as U3 angles (Euler angles with sin-weighted tilt)."""
    a, c = rng.uniform(0, 2 * math.pi, 2)
    b = math.acos(1 - 2 * rng.random())
    return b / 2, -a - math.pi / 2, -c - math.pi / 2


@dataclass(frozen=True)
class GateSetSpec:
    one_qubit: str
    two_qubit: tuple[tuple[str, float], ...]

    def __post_init__(self):
        if self.one_qubit not in (HAAR, CLIFFORD24):
            raise ConfigurationError(f"unknown one-qubit gate set {self.one_qubit!r}")
        protos = tuple((str(a).upper(), canonical_angle(float(t))) for a, t in self.two_qubit)
        object.__setattr__(self, "two_qubit", protos)
        if not protos:
            raise ConfigurationError("two-qubit gate set is empty")
        for axis, theta in protos:
            if axis not in ("X", "Y", "Z"):
                raise ConfigurationError(f"bad CPRot axis {axis!r}")
            inv = canonical_angle(-theta)
            if not any(a == axis and math.isclose(t, inv, abs_tol=1e-12) for a, t in protos):
                raise ConfigurationError(f"two-qubit gate set not closed under inverses: ({axis}, {theta})")

    @classmethod
    def named(cls, one_qubit: str, *names: str) -> "GateSetSpec":
        table = {
            "cs": ("Z", math.pi / 2),
            "csdg": ("Z", -math.pi / 2),
            "cz": ("Z", math.pi),
            "cnot": ("X", math.pi),
        }
        return cls(one_qubit, tuple(table[n] for n in names))

    def to_json(self) -> dict:
        return {
            "one_qubit": self.one_qubit,
            "two_qubit": [{"axis": a.lower(), "theta": t} for a, t in self.two_qubit],
        }


@dataclass(frozen=True)
class SamplerSpec:
    gate_set: GateSetSpec
    graph: ConnectivityGraph
    xi: float
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.xi < 1:
            raise ConfigurationError(f"xi={self.xi} outside [0, 1)")
        if self.xi > 0 and self.xi * self.graph.n / 2 > self.graph.max_matching_size() + 1e-12:
            raise ConfigurationError(
                f"density xi={self.xi} unreachable: needs {self.xi * self.graph.n / 2:g} gates "
                f"per layer, maximum matching has {self.graph.max_matching_size()}"
            )

    @property
    def n(self) -> int:
        return self.graph.n

    def to_json(self) -> dict:
        return {**self.gate_set.to_json(), "graph": self.graph.to_json(), "xi": self.xi, "seed": self.seed}

    @classmethod
    def from_json(cls, obj) -> "SamplerSpec":
        try:
            gs = GateSetSpec(obj["one_qubit"], tuple((g["axis"], g["theta"]) for g in obj["two_qubit"]))
            return cls(gs, ConnectivityGraph.from_json(obj["graph"]), float(obj["xi"]), int(obj.get("seed", 0)))
        except (KeyError, TypeError) as exc:
            raise ConfigurationError(f"malformed sampler spec: {exc}") from exc


@dataclass(frozen=True)
class OmegaCircuit:
    """``L0`` followed by ``benchmark_depth_half`` composite layers (2q then 1q)."""

    circuit: Circuit
    benchmark_depth_half: int

    def __post_init__(self):
        if self.circuit.depth != 1 + 2 * self.benchmark_depth_half:
            raise ConfigurationError("layer count does not match half depth")
        if not self.circuit.is_alternating():
            raise ConfigurationError("Omega circuit must alternate 1q/2q layers")

    @property
    def n(self) -> int:
        return self.circuit.n

    def one_qubit_layers(self) -> list[Layer]:
        return list(self.circuit.layers[0::2])

    def two_qubit_layers(self) -> list[Layer]:
        return list(self.circuit.layers[1::2])


def sample_one_qubit_layer(spec: SamplerSpec, rng: np.random.Generator, one_qubit: str | None = None) -> Layer:
    kind = one_qubit or spec.gate_set.one_qubit
    gates = []
    table = clifford24()
    for q in range(spec.n):
        params = haar_u3(rng) if kind == HAAR else table[int(rng.integers(24))]
        gates.append(Gate.u3(q, *params))
    return Layer(spec.n, tuple(gates), ONE_QUBIT)


def _greedy_matching(edges: Sequence[tuple[int, int]]) -> list[tuple[int, int]]:
    used: set[int] = set()
    m = []
    for i, j in edges:
        if i not in used and j not in used:
            m.append((i, j))
            used.update((i, j))
    return m


def _keep_probability(xi: float, n: int, msize: int) -> float:
    return min(1.0, xi * n / (2 * msize)) if msize else 0.0


def sample_two_qubit_layer(spec: SamplerSpec, rng: np.random.Generator) -> Layer:
    """Edge grab: random greedy matching, then keep each edge to hit density ``xi``."""
    edges = spec.graph.sorted_edges()
    order = rng.permutation(len(edges)) if edges else []
    matching = _greedy_matching([edges[k] for k in order])
    keep = _keep_probability(spec.xi, spec.n, len(matching))
    draws = rng.random(len(matching))
    protos = spec.gate_set.two_qubit
    gates = []
    for (i, j), u in zip(matching, draws):
        if u < keep:
            axis, theta = protos[int(rng.integers(len(protos)))]
            gates.append(Gate.cprot(axis, theta, i, j))
    return Layer(spec.n, tuple(gates), TWO_QUBIT)


def two_qubit_layer_distribution(spec: SamplerSpec) -> dict[frozenset, float]:
    """Exact distribution of :func:`sample_two_qubit_layer` by enumeration.

    Keys are frozensets of ``(axis, theta, control, target)``. Only practical
    for small graphs (it enumerates all edge orderings).
    """
    edges = spec.graph.sorted_edges()
    protos = spec.gate_set.two_qubit
    dist: dict[frozenset, float] = {}
    perms = list(itertools.permutations(edges)) or [()]
    w_perm = 1.0 / len(perms)
    for perm in perms:
        matching = _greedy_matching(perm)
        keep = _keep_probability(spec.xi, spec.n, len(matching))
        for mask in itertools.product((0, 1), repeat=len(matching)):
            kept = [e for e, b in zip(matching, mask) if b]
            w_mask = np.prod([keep if b else 1 - keep for b in mask]) if mask else 1.0
            if w_mask == 0:
                continue
            for choice in itertools.product(range(len(protos)), repeat=len(kept)):
                key = frozenset((*protos[c], i, j) for (i, j), c in zip(kept, choice))
                w = w_perm * w_mask / len(protos) ** len(kept)
                dist[key] = dist.get(key, 0.0) + w
    return dist


def sample_omega_circuit(spec: SamplerSpec, half_depth: int, rng: np.random.Generator) -> OmegaCircuit:
    if half_depth < 0:
        raise ConfigurationError("half_depth must be >= 0")
    layers = [sample_one_qubit_layer(spec, rng)]
    for _ in range(half_depth):
        layers.append(sample_two_qubit_layer(spec, rng))
        layers.append(sample_one_qubit_layer(spec, rng))
    return OmegaCircuit(Circuit(spec.n, tuple(layers)), half_depth)


def sample_composite_circuit(spec: SamplerSpec, depth: int, rng: np.random.Generator) -> Circuit:
    """``depth`` composite layers, each a one-qubit layer followed by a two-qubit layer."""
    layers = []
    for _ in range(depth):
        layers.append(sample_one_qubit_layer(spec, rng))
        layers.append(sample_two_qubit_layer(spec, rng))
    return Circuit(spec.n, tuple(layers))


def sample_correlated_designs(
    base: OmegaCircuit,
    variants: Sequence[GateSetSpec],
    rng: np.random.Generator,
    graph: ConnectivityGraph | None = None,
) -> list[OmegaCircuit]:
    """Re-dress ``base`` with each variant gate set, keeping the 2q gate locations."""
    if graph is not None:
        if graph.n != base.n:
            raise ConfigurationError("graph size differs from circuit size")
        for layer in base.two_qubit_layers():
            for g in layer.two_qubit_gates():
                if tuple(sorted(g.qubits)) not in graph.edges:
                    raise ConfigurationError(f"gate on {g.qubits} is not an edge of the graph")
    out = []
    for variant in variants:
        layers = []
        for layer in base.circuit.layers:
            if layer.arity == ONE_QUBIT:
                table = clifford24()
                gates = tuple(
                    Gate.u3(q, *(haar_u3(rng) if variant.one_qubit == HAAR else table[int(rng.integers(24))]))
                    for q in range(base.n)
                )
                layers.append(Layer(base.n, gates, ONE_QUBIT))
            else:
                gates = []
                for g in layer.two_qubit_gates():
                    axis, theta = variant.two_qubit[int(rng.integers(len(variant.two_qubit)))]
                    gates.append(Gate.cprot(axis, theta, *g.qubits))
                layers.append(Layer(base.n, tuple(gates), TWO_QUBIT))
        out.append(OmegaCircuit(Circuit(base.n, tuple(layers)), base.benchmark_depth_half))
    return out
