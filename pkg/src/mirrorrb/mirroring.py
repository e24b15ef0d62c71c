"""Randomized mirror circuits for controlled-Pauli-rotation gate sets.

Construction: take an Omega circuit ``C1 = L_h Lt_h ... L_1 Lt_1 L_0``, append
its layerwise inverse (with an empty two-qubit layer at the reflection point),
then randomly compile. A uniformly random Pauli layer ``P_i`` is inserted
after every one-qubit layer ``A_i``. Each two-qubit layer ``B_i`` is replaced
by ``T(B_i, P_{i-1})``, which flips the sign of some rotation angles. A
single-qubit correction ``C_i`` with ``C_i T(B_i, P_{i-1}) P_{i-1} = B_i`` is
folded into the following one-qubit layer, so ``A_i`` becomes ``P_i A_i C_i``.
The compiled circuit implements ``P_{d+1}``, which fixes the target bitstring.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import (
    DENSE_CAP,
    ONE_QUBIT,
    PAULI_MATRICES,
    TWO_QUBIT,
    Circuit,
    Gate,
    Layer,
    PauliString,
    equal_up_to_phase,
    letters_anticommute,
    unitary_of,
)
from .errors import DimensionError, StructuralError
from .sampling import OmegaCircuit


@dataclass(frozen=True)
class MirrorCircuit:
    circuit: Circuit
    target: tuple[int, ...]
    benchmark_depth: int
    paulis: tuple[PauliString, ...] = ()
    seed_path: tuple[int, ...] = ()

    def __post_init__(self):
        if self.circuit.depth != 2 * self.benchmark_depth + 2:
            raise StructuralError(
                f"mirror circuit of benchmark depth {self.benchmark_depth} must have "
                f"{2 * self.benchmark_depth + 2} layers, got {self.circuit.depth}"
            )

    @property
    def n(self) -> int:
        return self.circuit.n

    @property
    def target_string(self) -> str:
        return "".join(map(str, self.target))

    def to_json(self) -> dict:
        return {
            **self.circuit.to_json(),
            "target": self.target_string,
            "benchmark_depth": self.benchmark_depth,
            "seed_path": list(self.seed_path),
        }

    @classmethod
    def from_json(cls, obj) -> "MirrorCircuit":
        target = tuple(int(ch) for ch in obj["target"])
        return cls(Circuit.from_json(obj), target, int(obj["benchmark_depth"]), (), tuple(obj.get("seed_path", ())))


def _flips(gate: Gate, pauli: PauliString) -> bool:
    a = pauli.letters[gate.qubits[0]]
    b = pauli.letters[gate.qubits[1]]
    # the control's projector is diagonal, so its letter is tested against Z
    return letters_anticommute(a, "Z") != letters_anticommute(b, gate.axis)


def two_qubit_transform(layer: Layer, pauli: PauliString) -> Layer:
    """Flip ``CP_theta -> CP_-theta`` where exactly one frame letter anticommutes."""
    if layer.arity != TWO_QUBIT:
        raise StructuralError("two_qubit_transform needs a two-qubit layer")
    if pauli.n != layer.n:
        raise DimensionError("Pauli and layer sizes differ")
    gates = []
    for g in layer.gates:
        if g.kind == "cprot" and _flips(g, pauli):
            gates.append(Gate.cprot(g.axis, -g.theta, *g.qubits))
        else:
            gates.append(g)
    return Layer(layer.n, tuple(gates), TWO_QUBIT)


def _kron_factor(m: np.ndarray, atol: float = 1e-9) -> tuple[np.ndarray, np.ndarray]:
    """Split a 4x4 ``m = kron(B, A)`` (A on the low qubit) into unitary factors."""
    r = m.reshape(2, 2, 2, 2).transpose(0, 2, 1, 3).reshape(4, 4)
    u, s, vh = np.linalg.svd(r)
    if s[1] > atol:
        raise StructuralError("correction does not factor into single-qubit gates")
    b = u[:, 0].reshape(2, 2) * math.sqrt(s[0])
    a = vh[0].reshape(2, 2) * math.sqrt(s[0])
    # rescale each factor to unit determinant modulus
    return a / math.sqrt(abs(np.linalg.det(a))), b / math.sqrt(abs(np.linalg.det(b)))


def correction_matrices(prev_pauli: PauliString, layer: Layer) -> list[np.ndarray]:
    """Per-qubit 2x2 unitaries of the correction layer ``C`` for ``(P_{i-1}, B_i)``."""
    if layer.arity != TWO_QUBIT:
        raise StructuralError("correction needs a two-qubit layer")
    if prev_pauli.n != layer.n:
        raise DimensionError("Pauli and layer sizes differ")
    mats = [PAULI_MATRICES[ch].copy() for ch in prev_pauli.letters]
    for g in layer.gates:
        if g.kind == "idle":
            continue
        if g.kind != "cprot":
            raise StructuralError(f"{g.kind} gate in a two-qubit layer")
        c, t = g.qubits
        frame = np.kron(PAULI_MATRICES[prev_pauli.letters[t]], PAULI_MATRICES[prev_pauli.letters[c]])
        flipped = Gate.cprot(g.axis, -g.theta, c, t) if _flips(g, prev_pauli) else g
        m = g.matrix() @ frame @ flipped.matrix().conj().T
        mats[c], mats[t] = _kron_factor(m)
    return mats


def correction_layer(prev_pauli: PauliString, two_qubit_layer: Layer) -> Layer:
    return Layer.from_single_qubit_matrices(correction_matrices(prev_pauli, two_qubit_layer))


def pauli_axis_rotations(prev_pauli: PauliString, two_qubit_layer: Layer) -> Layer:
    """Closed-form axis-rotation layer ``R`` with correction = ``P_{i-1} R``.

    Target qubit: ``P_{+-theta}`` when the control letter is X or Y. Control qubit:
    a Z rotation when the target letter anticommutes with the axis (this one
    comes from the control-phase convention of :func:`core.cprot_matrix`).
    """
    gates = []
    for g in two_qubit_layer.gates:
        if g.kind != "cprot":
            continue
        c, t = g.qubits
        a, b = prev_pauli.letters[c], prev_pauli.letters[t]
        a_flips = letters_anticommute(a, "Z")
        b_anti = letters_anticommute(b, g.axis)
        if a_flips:
            gates.append(Gate("prot", (t,), (-g.theta if b_anti else g.theta,), g.axis))
        if b_anti:
            gates.append(Gate("prot", (c,), (-g.theta if a_flips else g.theta,), "Z"))
    return Layer(two_qubit_layer.n, tuple(gates), ONE_QUBIT)


def mirror_skeleton(omega: OmegaCircuit) -> tuple[list[Layer], list[Layer]]:
    """One-qubit layers ``A_0..A_{d+1}`` and two-qubit layers ``B_1..B_{d+1}``.

    ``B_{h+1}`` (h = d/2) is the empty layer at the reflection point.
    """
    h = omega.benchmark_depth_half
    ones = omega.one_qubit_layers()
    twos = omega.two_qubit_layers()
    a = list(ones) + [ones[h - j].inverse() for j in range(h + 1)]
    b = list(twos) + [Layer.empty(omega.n)] + [twos[h - j].inverse() for j in range(1, h + 1)]
    return a, b


def compile_step(
    a_layer: Layer, b_layer: Layer | None, prev_pauli: PauliString | None, pauli: PauliString
) -> tuple[Layer | None, Layer]:
    """Compile one (two-qubit layer, one-qubit layer) pair for fixed frame Paulis.

    Returns ``(T(B, P_prev), P A C)``; for the first layer pass ``b_layer=None``.
    """
    mats = a_layer.single_qubit_matrices()
    pmats = [PAULI_MATRICES[ch] for ch in pauli.letters]
    if b_layer is None:
        return None, Layer.from_single_qubit_matrices([p @ m for p, m in zip(pmats, mats)])
    corr = correction_matrices(prev_pauli, b_layer)
    t_layer = two_qubit_transform(b_layer, prev_pauli)
    new = Layer.from_single_qubit_matrices([p @ m @ cm for p, m, cm in zip(pmats, mats, corr)])
    return t_layer, new


def compile_mirror(omega: OmegaCircuit, paulis: Sequence[PauliString], seed_path=()) -> MirrorCircuit:
    """Deterministic randomized-compiling pass for given frame Paulis ``P_0..P_{d+1}``."""
    h = omega.benchmark_depth_half
    d = 2 * h
    if len(paulis) != d + 2:
        raise StructuralError(f"need {d + 2} Pauli layers, got {len(paulis)}")
    a, b = mirror_skeleton(omega)
    _, first = compile_step(a[0], None, None, paulis[0])
    layers = [first]
    for i in range(1, d + 2):
        t_layer, one = compile_step(a[i], b[i - 1], paulis[i - 1], paulis[i])
        if i != h + 1:
            layers.append(t_layer)
        layers.append(one)
    target = paulis[-1].bit_flips()
    return MirrorCircuit(Circuit(omega.n, tuple(layers)), target, d, tuple(paulis), tuple(seed_path))


def build_mirror(omega: OmegaCircuit, rng: np.random.Generator, seed_path=(), check: bool = False) -> MirrorCircuit:
    """Sample frame Paulis and compile; ``check`` asserts the Pauli action densely."""
    d = 2 * omega.benchmark_depth_half
    paulis = [PauliString.random(omega.n, rng) for _ in range(d + 2)]
    mc = compile_mirror(omega, paulis, seed_path)
    if check and omega.n <= DENSE_CAP:
        u = unitary_of(mc.circuit)
        if not equal_up_to_phase(u, paulis[-1].matrix(), atol=1e-8):
            raise StructuralError("compiled mirror circuit does not implement its frame Pauli")
    return mc


def _same_layer(x: Layer, y: Layer) -> bool:
    if x.n != y.n:
        return False
    gx = [g for g in x.gates if g.kind != "idle"]
    gy = [g for g in y.gates if g.kind != "idle"]
    if len(gx) != len(gy):
        return False
    for p, q in zip(gx, gy):
        if (p.kind, p.qubits, p.axis) != (q.kind, q.qubits, q.axis):
            return False
        if not all(math.isclose(u, v, abs_tol=1e-12) for u, v in zip(p.params, q.params)):
            return False
    return True


def transform_properties_check(layer: Layer, p1: PauliString, p2: PauliString) -> bool:
    """Involution, inverse-compatibility and composition laws of ``T``."""
    t = lambda lay, p: two_qubit_transform(lay, p)  # noqa: E731
    return (
        _same_layer(t(t(layer, p1), p1), layer)
        and _same_layer(t(layer.inverse(), p1), t(layer, p1).inverse())
        and _same_layer(t(t(layer, p1), p2), t(layer, p2 * p1))
        and _same_layer(t(t(layer, p1).inverse(), p1), layer.inverse())
    )
