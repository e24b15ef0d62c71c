"""Gate, layer, circuit and Pauli-algebra primitives.

Conventions used throughout the package:

* qubit 0 is the least-significant bit of a computational-basis index;
* a Pauli label string has one letter per qubit, ``label[q]`` acts on qubit ``q``
  (so ``"XZ"`` is X on qubit 0 and Z on qubit 1);
* gate-local matrices use the same ordering over ``gate.qubits``;
* circuit and unitary equality is up to global phase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import networkx as nx
import numpy as np

from .errors import CapacityError, DimensionError, StructuralError

DENSE_CAP = 6

LETTERS = "IXYZ"
I2 = np.eye(2, dtype=complex)
PAULI_MATRICES = {
    "I": I2,
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
_PROJ0 = np.diag([1.0, 0.0]).astype(complex)
_PROJ1 = np.diag([0.0, 1.0]).astype(complex)


# --------------------------------------------------------------------------- Paulis


def _letter_product(a: str, b: str) -> tuple[int, str]:
    """Return (k, c) with a*b = i**k * c for single-qubit letters."""
    ia, ib = LETTERS.index(a), LETTERS.index(b)
    c = LETTERS[ia ^ ib]
    if ia == 0 or ib == 0 or ia == ib:
        return 0, c
    # X->Y->Z cyclic order gives +i
    return (1, c) if (ib - ia) % 3 == 1 else (3, c)


def letters_anticommute(a: str, b: str) -> bool:
    return a != "I" and b != "I" and a != b


@dataclass(frozen=True)
class PauliString:
    """Signed n-qubit Pauli operator ``i**k * letters``."""

    letters: str
    k: int = 0

    def __post_init__(self):
        if any(ch not in LETTERS for ch in self.letters):
            raise ValueError(f"invalid Pauli letters {self.letters!r}")
        object.__setattr__(self, "k", self.k % 4)

    @property
    def n(self) -> int:
        return len(self.letters)

    @property
    def phase(self) -> complex:
        return 1j**self.k

    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls("I" * n)

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "PauliString":
        return cls("".join(LETTERS[i] for i in rng.integers(0, 4, n)))

    @classmethod
    def from_index(cls, index: int, n: int) -> "PauliString":
        """Letter on qubit q is digit q of ``index`` in base 4."""
        return cls("".join(LETTERS[(index >> (2 * q)) & 3] for q in range(n)))

    def index(self) -> int:
        return sum(LETTERS.index(ch) << (2 * q) for q, ch in enumerate(self.letters))

    def __mul__(self, other: "PauliString") -> "PauliString":
        if not isinstance(other, PauliString):
            return NotImplemented
        if self.n != other.n:
            raise DimensionError(f"Pauli size mismatch: {self.n} vs {other.n}")
        k = self.k + other.k
        out = []
        for a, b in zip(self.letters, other.letters):
            dk, c = _letter_product(a, b)
            k += dk
            out.append(c)
        return PauliString("".join(out), k)

    def commutes(self, other: "PauliString") -> bool:
        if self.n != other.n:
            raise DimensionError(f"Pauli size mismatch: {self.n} vs {other.n}")
        parity = sum(letters_anticommute(a, b) for a, b in zip(self.letters, other.letters))
        return parity % 2 == 0

    def is_hermitian(self) -> bool:
        return self.k in (0, 2)

    def without_phase(self) -> "PauliString":
        return PauliString(self.letters)

    def matrix(self) -> np.ndarray:
        m = np.array([[1.0 + 0j]])
        for ch in self.letters:  # later qubits are more significant
            m = np.kron(PAULI_MATRICES[ch], m)
        return self.phase * m

    def bit_flips(self) -> tuple[int, ...]:
        """Bits flipped when this Pauli acts on a computational basis state."""
        return tuple(int(ch in "XY") for ch in self.letters)

    def __str__(self) -> str:
        sign = {0: "+", 1: "+i", 2: "-", 3: "-i"}[self.k]
        return sign + self.letters


def pauli_mul(a: PauliString, b: PauliString) -> PauliString:
    return a * b


def anticommutes(a: PauliString | str, axis: str) -> bool:
    """True iff the single-qubit Pauli ``a`` anticommutes with ``axis``."""
    letter = a.letters if isinstance(a, PauliString) else a
    if len(letter) != 1 or len(axis) != 1:
        raise DimensionError("anticommutes() takes single-qubit Paulis")
    return letters_anticommute(letter, axis)


# --------------------------------------------------------------------------- gates


def rotation(axis: str, theta: float) -> np.ndarray:
    """exp(-i theta/2 P) for P in {X, Y, Z}."""
    return math.cos(theta / 2) * I2 - 1j * math.sin(theta / 2) * PAULI_MATRICES[axis]


def canonical_angle(theta: float) -> float:
    """Map an angle into (-pi, pi]."""
    t = math.remainder(theta, 2 * math.pi)
    if math.isclose(t, -math.pi, abs_tol=1e-12):
        t = math.pi
    return 0.0 if abs(t) < 1e-15 else t


def u3_matrix(theta: float, phi: float, lam: float) -> np.ndarray:
    """Closed form of z(-phi-pi/2) x(pi/2) z(pi-2 theta) x(pi/2) z(-lam+pi/2)."""
    return (
        rotation("Z", -phi - math.pi / 2)
        @ rotation("Y", 2 * theta)
        @ rotation("Z", -lam - math.pi / 2)
    )


def u3_five_gate_sequence(theta: float, phi: float, lam: float) -> list[tuple[str, float]]:
    """Native decomposition in time order, as (gate, angle) pairs.

    ``("x", pi/2)`` entries are the physical pulses; ``("z", a)`` are virtual.
    """
    return [
        ("z", -lam + math.pi / 2),
        ("x", math.pi / 2),
        ("z", math.pi - 2 * theta),
        ("x", math.pi / 2),
        ("z", -phi - math.pi / 2),
    ]


def u3_params(u: np.ndarray) -> tuple[float, float, float]:
    """Inverse of :func:`u3_matrix` up to global phase."""
    u = np.asarray(u, dtype=complex)
    u = u / np.sqrt(np.linalg.det(u))
    c, s = abs(u[0, 0]), abs(u[1, 0])
    b = 2 * math.atan2(s, c)
    sum_half = math.atan2(u[1, 1].imag, u[1, 1].real) if c > 1e-12 else 0.0
    diff_half = math.atan2(u[1, 0].imag, u[1, 0].real) if s > 1e-12 else 0.0
    a = sum_half + diff_half
    cc = sum_half - diff_half
    return b / 2, -a - math.pi / 2, -cc - math.pi / 2


def cprot_matrix(axis: str, theta: float) -> np.ndarray:
    """Controlled Pauli-axis rotation on (control, target), local LSB order.

    The controlled block is exp(-i theta/2 (P - I)), i.e. the textbook
    ``|1><1| (x) exp(-i theta P / 2)`` times a Z phase on the control. This makes
    cs = diag(1, 1, 1, i) and the theta = pi gates (cz, cnot) self-inverse.
    """
    block = np.exp(1j * theta / 2) * rotation(axis, theta)
    # kron(target_op, control_op) because the control is the low bit
    return np.kron(I2, _PROJ0) + np.kron(block, _PROJ1)


def cprot_textbook_matrix(axis: str, theta: float) -> np.ndarray:
    """``|0><0| (x) I + |1><1| (x) exp(-i theta P/2)`` with no phase fix."""
    return np.kron(I2, _PROJ0) + np.kron(rotation(axis, theta), _PROJ1)


NAMED_2Q = {
    ("Z", canonical_angle(math.pi / 2)): "cs",
    ("Z", canonical_angle(-math.pi / 2)): "csdg",
    ("Z", canonical_angle(math.pi)): "cz",
    ("X", canonical_angle(math.pi)): "cnot",
}


@dataclass(frozen=True)
class Gate:
    """A one- or two-qubit gate instruction.

    ``kind`` is one of ``xhalfpi``, ``zrot``, ``u3``, ``prot``, ``cprot``, ``idle``.
    For ``cprot`` the first qubit is the control.
    """

    kind: str
    qubits: tuple[int, ...]
    params: tuple[float, ...] = ()
    axis: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        arity = {"xhalfpi": 1, "zrot": 1, "u3": 1, "prot": 1, "idle": 1, "cprot": 2}
        nparams = {"xhalfpi": 0, "zrot": 1, "u3": 3, "prot": 1, "idle": 0, "cprot": 1}
        if self.kind not in arity:
            raise StructuralError(f"unknown gate kind {self.kind!r}")
        if len(self.qubits) != arity[self.kind]:
            raise StructuralError(f"{self.kind} acts on {arity[self.kind]} qubit(s)")
        if len(set(self.qubits)) != len(self.qubits):
            raise StructuralError("repeated qubit in gate")
        if len(self.params) != nparams[self.kind]:
            raise StructuralError(f"{self.kind} takes {nparams[self.kind]} parameter(s)")
        if self.kind in ("prot", "cprot"):
            if self.axis not in ("X", "Y", "Z"):
                raise StructuralError(f"{self.kind} needs axis X, Y or Z")
        elif self.axis is not None:
            raise StructuralError(f"{self.kind} takes no axis")
        if self.kind == "cprot":
            object.__setattr__(self, "params", (canonical_angle(self.params[0]),))

    # constructors
    @classmethod
    def u3(cls, q: int, theta: float, phi: float, lam: float) -> "Gate":
        return cls("u3", (q,), (theta, phi, lam))

    @classmethod
    def u3_from_matrix(cls, q: int, u: np.ndarray) -> "Gate":
        return cls("u3", (q,), u3_params(u))

    @classmethod
    def cprot(cls, axis: str, theta: float, control: int, target: int) -> "Gate":
        return cls("cprot", (control, target), (theta,), axis)

    @classmethod
    def idle(cls, q: int) -> "Gate":
        return cls("idle", (q,))

    @property
    def arity(self) -> int:
        return len(self.qubits)

    @property
    def theta(self) -> float:
        return self.params[0]

    @property
    def name(self) -> str:
        """Qubit-free label, used as the gate part of error-model keys."""
        if self.kind == "cprot":
            named = NAMED_2Q.get((self.axis, self.theta))
            return named or f"cprot_{self.axis.lower()}({self.theta:.12g})"
        if self.kind == "prot":
            return f"prot_{self.axis.lower()}"
        return self.kind

    @property
    def key(self) -> str:
        return f"{self.name}@{','.join(map(str, self.qubits))}"

    def matrix(self) -> np.ndarray:
        if self.kind == "idle":
            return I2.copy()
        if self.kind == "xhalfpi":
            return rotation("X", math.pi / 2)
        if self.kind == "zrot":
            return rotation("Z", self.params[0])
        if self.kind == "prot":
            return rotation(self.axis, self.params[0])
        if self.kind == "u3":
            return u3_matrix(*self.params)
        return cprot_matrix(self.axis, self.params[0])

    def inverse(self) -> "Gate":
        if self.kind in ("idle",):
            return self
        if self.kind in ("zrot", "prot", "cprot"):
            return Gate(self.kind, self.qubits, (-self.params[0],), self.axis)
        return Gate.u3_from_matrix(self.qubits[0], self.matrix().conj().T)

    def is_clifford_2q(self) -> bool:
        return self.kind == "cprot" and math.isclose(abs(self.theta), math.pi, abs_tol=1e-12)


# --------------------------------------------------------------------------- layers

ONE_QUBIT = "one"
TWO_QUBIT = "two"


@dataclass(frozen=True)
class Layer:
    """Parallel gates on disjoint qubits. Uncovered qubits idle implicitly."""

    n: int
    gates: tuple[Gate, ...]
    arity: str

    def __post_init__(self):
        gates = tuple(sorted(self.gates, key=lambda g: g.qubits))
        object.__setattr__(self, "gates", gates)
        if self.arity not in (ONE_QUBIT, TWO_QUBIT):
            raise StructuralError(f"unknown layer arity {self.arity!r}")
        seen: set[int] = set()
        for g in gates:
            for q in g.qubits:
                if not 0 <= q < self.n:
                    raise StructuralError(f"qubit {q} out of range for n={self.n}")
                if q in seen:
                    raise StructuralError(f"qubit {q} used twice in a layer")
                seen.add(q)
            if self.arity == ONE_QUBIT and g.arity != 1:
                raise StructuralError("one-qubit layer holds a two-qubit gate")
            if self.arity == TWO_QUBIT and g.kind not in ("cprot", "idle"):
                raise StructuralError(f"two-qubit layer holds a {g.kind} gate")

    @classmethod
    def empty(cls, n: int, arity: str = TWO_QUBIT) -> "Layer":
        return cls(n, (), arity)

    def covered(self) -> set[int]:
        return {q for g in self.gates for q in g.qubits}

    def idle_qubits(self) -> list[int]:
        cov = self.covered()
        return [q for q in range(self.n) if q not in cov]

    def two_qubit_gates(self) -> list[Gate]:
        return [g for g in self.gates if g.arity == 2]

    def inverse(self) -> "Layer":
        return Layer(self.n, tuple(g.inverse() for g in self.gates), self.arity)

    def single_qubit_matrices(self) -> list[np.ndarray]:
        """Per-qubit 2x2 unitaries of a one-qubit layer (identity where idle)."""
        if self.arity != ONE_QUBIT:
            raise StructuralError("not a one-qubit layer")
        mats = [I2.copy() for _ in range(self.n)]
        for g in self.gates:
            mats[g.qubits[0]] = g.matrix()
        return mats

    @classmethod
    def from_single_qubit_matrices(cls, mats: Sequence[np.ndarray]) -> "Layer":
        return cls(len(mats), tuple(Gate.u3_from_matrix(q, m) for q, m in enumerate(mats)), ONE_QUBIT)

    @classmethod
    def from_pauli(cls, pauli: PauliString) -> "Layer":
        """One-qubit layer of pi rotations implementing ``pauli`` up to phase."""
        gates = tuple(
            Gate("prot", (q,), (math.pi,), ch) for q, ch in enumerate(pauli.letters) if ch != "I"
        )
        return cls(pauli.n, gates, ONE_QUBIT)

    def matrix(self) -> np.ndarray:
        return unitary_of(Circuit(self.n, (self,)), cap=max(self.n, DENSE_CAP))


# --------------------------------------------------------------------------- circuits


@dataclass(frozen=True)
class Circuit:
    n: int
    layers: tuple[Layer, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        for layer in self.layers:
            if layer.n != self.n:
                raise DimensionError(f"layer on {layer.n} qubits in {self.n}-qubit circuit")

    @property
    def depth(self) -> int:
        return len(self.layers)

    def is_alternating(self) -> bool:
        """True iff layers alternate one-/two-qubit starting with a one-qubit layer."""
        return all(
            layer.arity == (ONE_QUBIT if i % 2 == 0 else TWO_QUBIT)
            for i, layer in enumerate(self.layers)
        )

    def inverse(self) -> "Circuit":
        return Circuit(self.n, tuple(layer.inverse() for layer in reversed(self.layers)))

    def __add__(self, other: "Circuit") -> "Circuit":
        """``a + b`` runs ``a`` first."""
        if self.n != other.n:
            raise DimensionError("circuit size mismatch")
        return Circuit(self.n, self.layers + other.layers)

    def to_json(self) -> dict:
        """``{"n", "layers"}``. One-qubit layers list every qubit (idles
        explicit) and two-qubit layers list only their two-qubit gates, so the
        layer arity is recoverable."""
        layers = []
        for layer in self.layers:
            if layer.arity == ONE_QUBIT:
                gates = sorted(list(layer.gates) + [Gate.idle(q) for q in layer.idle_qubits()], key=lambda g: g.qubits)
            else:
                gates = layer.two_qubit_gates()
            layers.append([gate_to_json(g) for g in gates])
        return {"n": self.n, "layers": layers}

    @classmethod
    def from_json(cls, obj) -> "Circuit":
        n = int(obj["n"])
        layers = []
        for raw in obj["layers"]:
            gates = [gate_from_json(g) for g in raw]
            arity = TWO_QUBIT if not gates or any(g.arity == 2 for g in gates) else ONE_QUBIT
            layers.append(Layer(n, tuple(g for g in gates if g.kind != "idle"), arity))
        return cls(n, tuple(layers))


def gate_to_json(g: Gate) -> dict:
    kind = f"{g.kind}_{g.axis.lower()}" if g.axis else g.kind
    return {"kind": kind, "qubits": list(g.qubits), "params": list(g.params)}


def gate_from_json(obj) -> Gate:
    kind, _, axis = obj["kind"].partition("_")
    return Gate(kind, tuple(obj["qubits"]), tuple(obj.get("params", ())), axis.upper() or None)


def apply_local(tensor: np.ndarray, op: np.ndarray, qubits: Sequence[int], n: int, dim: int) -> np.ndarray:
    """Contract a k-site operator into a tensor of shape ``(dim,)*n + extra``.

    Tensor axis ``a`` carries site ``n-1-a`` (site 0 is least significant), and
    ``op`` is indexed in the same little-endian order over ``qubits``.
    """
    k = len(qubits)
    op_t = np.asarray(op).reshape((dim,) * (2 * k))
    axes = [n - 1 - q for q in reversed(qubits)]
    out = np.tensordot(op_t, tensor, axes=(list(range(k, 2 * k)), axes))
    return np.moveaxis(out, list(range(k)), axes)


def unitary_of(c: Circuit, cap: int = DENSE_CAP) -> np.ndarray:
    """Dense unitary of ``c``; the last layer is the leftmost factor."""
    if c.n > cap:
        raise CapacityError(f"n={c.n} exceeds dense cap {cap}")
    dim = 2**c.n
    u = np.eye(dim, dtype=complex).reshape((2,) * c.n + (dim,))
    for layer in c.layers:
        for g in layer.gates:
            if g.kind != "idle":
                u = apply_local(u, g.matrix(), g.qubits, c.n, 2)
    return u.reshape(dim, dim)


def equal_up_to_phase(a: np.ndarray, b: np.ndarray, atol: float = 1e-10) -> bool:
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        return False
    overlap = np.vdot(a.ravel(), b.ravel())
    if abs(overlap) < 1e-15:
        return bool(np.allclose(a, b, atol=atol))
    phase = overlap / abs(overlap)
    return bool(np.allclose(a * phase, b, atol=atol))


def is_pauli_unitary(u: np.ndarray, atol: float = 1e-9) -> PauliString | None:
    """Return the Pauli that ``u`` equals up to phase, or None."""
    n = int(round(math.log2(u.shape[0])))
    for idx in range(4**n):
        p = PauliString.from_index(idx, n)
        if equal_up_to_phase(u, p.matrix(), atol):
            return p
    return None


# --------------------------------------------------------------------------- connectivity


@dataclass(frozen=True)
class ConnectivityGraph:
    n: int
    edges: frozenset[tuple[int, int]]

    def __post_init__(self):
        norm = set()
        for e in self.edges:
            i, j = (int(x) for x in e)
            if i == j:
                raise StructuralError(f"self-loop on qubit {i}")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise StructuralError(f"edge {e} outside n={self.n}")
            norm.add((min(i, j), max(i, j)))
        object.__setattr__(self, "edges", frozenset(norm))

    @classmethod
    def complete(cls, n: int) -> "ConnectivityGraph":
        return cls(n, frozenset((i, j) for i in range(n) for j in range(i + 1, n)))

    @classmethod
    def line(cls, n: int) -> "ConnectivityGraph":
        return cls(n, frozenset((i, i + 1) for i in range(n - 1)))

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def to_json(self) -> dict:
        return {"n": self.n, "edges": [list(e) for e in self.sorted_edges()]}

    @classmethod
    def from_json(cls, obj) -> "ConnectivityGraph":
        return cls(int(obj["n"]), frozenset(tuple(e) for e in obj["edges"]))

    def _nx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.n))
        g.add_edges_from(self.edges)
        return g

    def is_connected(self) -> bool:
        return self.n <= 1 or nx.is_connected(self._nx())

    def max_matching_size(self) -> int:
        return len(nx.max_weight_matching(self._nx(), maxcardinality=True))

    def induced(self, qubits: Iterable[int]) -> "ConnectivityGraph":
        """Subgraph on ``qubits``, relabelled to 0..k-1 in sorted order."""
        qs = sorted(qubits)
        pos = {q: i for i, q in enumerate(qs)}
        return ConnectivityGraph(
            len(qs), frozenset((pos[i], pos[j]) for i, j in self.edges if i in pos and j in pos)
        )

    def connected_subsets(self, size: int) -> list[tuple[int, ...]]:
        from itertools import combinations

        return [s for s in combinations(range(self.n), size) if self.induced(s).is_connected()]
