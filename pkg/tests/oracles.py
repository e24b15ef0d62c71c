"""Independent reference implementations used to derive frozen test values.

Nothing here imports the package. Circuits and error models are consumed in
their JSON forms and simulated as dense density matrices in the
computational basis (qubit 0 is the least-significant bit), with error maps
built as matrix exponentials of Lindblad-form superoperators.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.linalg import expm

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def pauli_string_matrix(letters: str) -> np.ndarray:
    """``letters[q]`` acts on qubit ``q``; qubit 0 is the rightmost Kronecker factor."""
    m = np.eye(1, dtype=complex)
    for ch in letters:
        m = np.kron(PAULI[ch], m)
    return m


def embed(op: np.ndarray, qubits, n: int) -> np.ndarray:
    """Full ``2**n`` matrix of ``op`` acting on ``qubits`` (op's local bit k is qubits[k])."""
    k = len(qubits)
    dim = 2**n
    full = np.zeros((dim, dim), dtype=complex)
    for col in range(dim):
        local_in = sum(((col >> q) & 1) << j for j, q in enumerate(qubits))
        rest = col
        for q in qubits:
            rest &= ~(1 << q)
        for local_out in range(2**k):
            amp = op[local_out, local_in]
            if amp == 0:
                continue
            row = rest
            for j, q in enumerate(qubits):
                row |= ((local_out >> j) & 1) << q
            full[row, col] += amp
    return full


def rot(axis: str, angle: float) -> np.ndarray:
    return expm(-0.5j * angle * PAULI[axis])


def u3_pulses(theta, phi, lam):
    """Time-ordered five-gate form: z(-lam+pi/2) x(pi/2) z(pi-2theta) x(pi/2) z(-phi-pi/2)."""
    return [
        ("z", -lam + math.pi / 2),
        ("x", math.pi / 2),
        ("z", math.pi - 2 * theta),
        ("x", math.pi / 2),
        ("z", -phi - math.pi / 2),
    ]


def u3_unitary(theta, phi, lam):
    u = np.eye(2, dtype=complex)
    for kind, a in u3_pulses(theta, phi, lam):
        u = rot(kind.upper(), a) @ u
    return u


def cprot_unitary(axis: str, theta: float) -> np.ndarray:
    """Controlled block ``exp(i theta/2) R_P(theta)``; control is local bit 0."""
    p1 = np.diag([0, 1]).astype(complex)
    p0 = np.diag([1, 0]).astype(complex)
    block = np.exp(0.5j * theta) * rot(axis, theta)
    # local order: bit 0 = control, bit 1 = target, so kron(target, control)
    return np.kron(np.eye(2), p0) + np.kron(block, p1)


NAMES = {("Z", 0.5): "cs", ("Z", -0.5): "csdg", ("Z", 1.0): "cz", ("X", 1.0): "cnot"}


def _canon(theta):
    t = math.remainder(theta, 2 * math.pi)
    if math.isclose(t, -math.pi, abs_tol=1e-12):
        t = math.pi
    return t


def gate_key(g: dict) -> str:
    kind = g["kind"]
    qs = ",".join(map(str, g["qubits"]))
    if kind.startswith("cprot_"):
        axis = kind[-1].upper()
        t = _canon(g["params"][0])
        for (a, frac), name in NAMES.items():
            if a == axis and math.isclose(t, frac * math.pi, abs_tol=1e-12):
                return f"{name}@{qs}"
        return f"cprot_{axis.lower()}({t:.12g})@{qs}"
    if kind.startswith("prot_"):
        return f"{kind}@{qs}"
    return f"{kind}@{qs}"


def gate_unitary(g: dict) -> np.ndarray:
    kind, p = g["kind"], g.get("params", [])
    if kind == "u3":
        return u3_unitary(*p)
    if kind == "xhalfpi":
        return rot("X", math.pi / 2)
    if kind == "zrot":
        return rot("Z", p[0])
    if kind == "idle":
        return np.eye(2, dtype=complex)
    if kind.startswith("prot_"):
        return rot(kind[-1].upper(), p[0])
    if kind.startswith("cprot_"):
        return cprot_unitary(kind[-1].upper(), p[0])
    raise ValueError(kind)


def circuit_unitary(cj: dict) -> np.ndarray:
    n = cj["n"]
    u = np.eye(2**n, dtype=complex)
    for layer in cj["layers"]:
        for g in layer:
            u = embed(gate_unitary(g), g["qubits"], n) @ u
    return u


# --------------------------------------------------------------------------- noise


def _superop(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-major vectorization: vec(a rho b) = kron(a, b.T) vec(rho)."""
    return np.kron(a, b.T)


def lindblad(errors: dict, qubits, n: int) -> np.ndarray:
    dim = 2**n
    eye = np.eye(dim)
    gen = np.zeros((dim * dim, dim * dim), dtype=complex)
    for label, rate in errors.get("H", {}).items():
        p = embed(pauli_string_matrix(label), qubits, n)
        gen += rate * (-1j) * (_superop(p, eye) - _superop(eye, p))
    for label, rate in errors.get("S", {}).items():
        p = embed(pauli_string_matrix(label), qubits, n)
        gen += rate * (_superop(p, p) - np.eye(dim * dim))
    return gen


def error_superop(errors: dict | None, qubits, n: int) -> np.ndarray | None:
    if not errors or not (errors.get("H") or errors.get("S")):
        return None
    return expm(lindblad(errors, qubits, n))


def unitary_superop(u: np.ndarray) -> np.ndarray:
    return _superop(u, u.conj().T)


def layer_superops(layer: list, model: dict, n: int) -> list[np.ndarray]:
    gates = model.get("gates", {})
    ops = []
    covered = set()
    keys = set()
    for g in layer:
        qs = g["qubits"]
        covered.update(qs)
        key = gate_key(g)
        keys.add(key)
        if g["kind"] == "u3":
            q = qs[0]
            for kind, a in u3_pulses(*g["params"]):
                ops.append(unitary_superop(embed(rot(kind.upper(), a), qs, n)))
                if kind == "x":
                    e = error_superop(gates.get(f"xhalfpi@{q}"), qs, n)
                    if e is not None:
                        ops.append(e)
        else:
            ops.append(unitary_superop(embed(gate_unitary(g), qs, n)))
        e = error_superop(gates.get(key), qs, n)
        if e is not None:
            ops.append(e)
    for q in range(n):
        if q not in covered:
            e = error_superop(gates.get(f"idle@{q}"), [q], n)
            if e is not None:
                ops.append(e)
    for term in model.get("crosstalk", []):
        if term["trigger"] in keys:
            ops.append(error_superop(term, term["qubits"], n))
    return ops


def circuit_superop(cj: dict, model: dict) -> np.ndarray:
    n = cj["n"]
    s = np.eye(4**n, dtype=complex)
    for layer in cj["layers"]:
        for op in layer_superops(layer, model, n):
            s = op @ s
    return s


def output_distribution(cj: dict, model: dict) -> np.ndarray:
    n = cj["n"]
    dim = 2**n
    rho = np.zeros((dim, dim), dtype=complex)
    rho[0, 0] = 1
    rho = (circuit_superop(cj, model) @ rho.reshape(-1)).reshape(dim, dim)
    spam = model.get("spam", {})
    gamma = spam.get("gamma", 1.0)
    rho = gamma * rho + (1 - gamma) * np.eye(dim) / dim
    p = np.real(np.diag(rho)).copy()
    for q, f in enumerate(spam.get("flips", [])):
        if f:
            flipped = p[np.arange(dim) ^ (1 << q)]
            p = (1 - f) * p + f * flipped
    return p


def choi_fidelity(cj: dict, model: dict) -> float:
    """Entanglement fidelity of the noisy circuit to its ideal unitary via the Choi state."""
    n = cj["n"]
    dim = 2**n
    s = circuit_superop(cj, model)
    u = circuit_unitary(cj)
    phi = np.zeros(dim * dim, dtype=complex)
    for i in range(dim):
        phi[i * dim + i] = 1 / math.sqrt(dim)
    # choi[(i,a),(j,b)] = <a| Phi(|i><j|) |b> / dim
    choi = np.zeros((dim * dim, dim * dim), dtype=complex)
    for i in range(dim):
        for j in range(dim):
            e = np.zeros((dim, dim), dtype=complex)
            e[i, j] = 1
            out = (s @ e.reshape(-1)).reshape(dim, dim)
            choi[i * dim : (i + 1) * dim, j * dim : (j + 1) * dim] = out / dim
    vu = np.kron(np.eye(dim), u) @ phi
    return float(np.real(vu.conj() @ choi @ vu))


# --------------------------------------------------------------------------- Pauli-frame randomizer


def clifford_frame_mirror(first_half: list, n: int, paulis: list[str]) -> tuple[np.ndarray, str]:
    """Plain Pauli-frame randomization of ``C C^-1`` for Clifford 2q layers.

    ``first_half`` is a list of alternating (1q unitaries list, 2q gate list)
    starting with 1q layer ``L0``. A random Pauli is inserted after every
    one-qubit layer and tracked through the Clifford layers by conjugation;
    the frame change is absorbed into the next one-qubit layer. Returns the
    net unitary and the predicted target bitstring.
    """
    ones = [first_half[i] for i in range(0, len(first_half), 2)]
    twos = [first_half[i] for i in range(1, len(first_half), 2)]
    h = len(twos)
    # simple mirror circuit layers, as full unitaries
    def one_u(mats):
        u = np.eye(1, dtype=complex)
        for m in mats:
            u = np.kron(m, u)
        return u

    def two_u(gates):
        u = np.eye(2**n, dtype=complex)
        for axis, theta, c, t in gates:
            u = embed(cprot_unitary(axis, theta), [c, t], n) @ u
        return u

    a = [one_u(m) for m in ones] + [one_u(ones[h - j]).conj().T for j in range(h + 1)]
    b = [two_u(g) for g in twos] + [np.eye(2**n)] + [two_u(twos[h - j]).conj().T for j in range(1, h + 1)]
    frame = np.eye(2**n, dtype=complex)
    total = np.eye(2**n, dtype=complex)
    for i, ai in enumerate(a):
        if i > 0:
            # the 2q Clifford layer maps the frame Pauli to B P B^dag
            total = b[i - 1] @ total
            frame = b[i - 1] @ frame @ b[i - 1].conj().T
        p = pauli_string_matrix(paulis[i])
        # recompiled layer: new Pauli, ideal layer, undo the incoming frame
        total = p @ ai @ frame.conj().T @ total
        frame = p
    bits = "".join("1" if ch in "XY" else "0" for ch in paulis[-1])
    return total, bits
