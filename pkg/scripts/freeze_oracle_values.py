"""Compute reference values with the independent oracle in tests/oracles.py.

The output, tests/data/frozen.json, is committed; tests compare the package
against it. Rerun only when a fixture is deliberately changed.
"""

import json
import math
import sys
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "tests"))
import oracles  # noqa: E402

LETTERS = "IXYZ"


def pauli_product(a: str, b: str):
    m = oracles.pauli_string_matrix(a) @ oracles.pauli_string_matrix(b)
    for idx in range(4 ** len(a)):
        lab = "".join(LETTERS[(idx >> (2 * q)) & 3] for q in range(len(a)))
        p = oracles.pauli_string_matrix(lab)
        c = np.trace(p.conj().T @ m) / m.shape[0]
        if abs(abs(c) - 1) < 1e-12:
            return lab, [float(c.real), float(c.imag)]
    raise AssertionError


CIRCUIT_2Q = {
    "n": 2,
    "layers": [
        [{"kind": "u3", "qubits": [0], "params": [0.3, 1.1, -0.4]}, {"kind": "u3", "qubits": [1], "params": [1.2, -0.7, 2.5]}],
        [{"kind": "cprot_z", "qubits": [0, 1], "params": [math.pi / 2]}],
        [{"kind": "u3", "qubits": [0], "params": [2.0, 0.2, 0.9]}, {"kind": "idle", "qubits": [1], "params": []}],
        [],
        [{"kind": "u3", "qubits": [0], "params": [0.8, -2.1, 0.3]}, {"kind": "u3", "qubits": [1], "params": [0.5, 0.6, 0.7]}],
        [{"kind": "cprot_x", "qubits": [1, 0], "params": [math.pi]}],
        [{"kind": "u3", "qubits": [0], "params": [1.4, 0.0, -1.0]}, {"kind": "u3", "qubits": [1], "params": [0.1, 3.0, -2.0]}],
        [{"kind": "cprot_z", "qubits": [0, 1], "params": [-math.pi / 2]}],
        [{"kind": "u3", "qubits": [0], "params": [0.6, 1.9, 2.2]}, {"kind": "u3", "qubits": [1], "params": [2.7, -1.3, 0.4]}],
    ],
}

MODEL_2Q = {
    "gates": {
        "cs@0,1": {"H": {"ZZ": 0.03, "XI": -0.01}, "S": {"ZI": 0.004, "XY": 0.002}},
        "csdg@0,1": {"H": {"IZ": 0.02}, "S": {"YY": 0.003}},
        "cnot@1,0": {"S": {"XX": 0.005}, "H": {"IY": 0.015}},
        "xhalfpi@0": {"H": {"X": 0.01}, "S": {"Z": 0.002}},
        "xhalfpi@1": {"S": {"X": 0.001, "Y": 0.001}},
        "u3@1": {"H": {"Z": 0.02}},
        "idle@1": {"H": {"Z": 0.05}, "S": {"X": 0.003}},
        "idle@0": {"S": {"Z": 0.004}},
    },
    "spam": {"gamma": 0.97, "flips": [0.01, 0.02]},
    "crosstalk": [],
}

CIRCUIT_3Q = {
    "n": 3,
    "layers": [
        [{"kind": "u3", "qubits": [q], "params": [0.4 + q, 0.3 * q, -0.2]} for q in range(3)],
        [{"kind": "cprot_z", "qubits": [0, 1], "params": [math.pi / 2]}],
        [{"kind": "u3", "qubits": [q], "params": [1.0, -0.5 * q, 0.7]} for q in range(3)],
        [{"kind": "cprot_y", "qubits": [2, 1], "params": [0.9]}],
        [{"kind": "u3", "qubits": [q], "params": [2.2 - q, 0.1, 1.3 * q]} for q in range(3)],
    ],
}

MODEL_3Q = {
    "gates": {
        "cs@0,1": {"S": {"ZZ": 0.01}},
        "cprot_y(0.9)@2,1": {"H": {"YI": 0.02}, "S": {"IX": 0.004}},
        "idle@2": {"H": {"Z": 0.02}},
        "xhalfpi@1": {"S": {"Y": 0.003}},
    },
    "spam": {"gamma": 1.0, "flips": [0.0, 0.03, 0.0]},
    "crosstalk": [{"trigger": "cs@0,1", "qubits": [1, 2], "H": {"ZZ": 0.04}, "S": {"IZ": 0.01}}],
}


def main():
    lab, phase = pauli_product("XY", "ZZ")
    out = {
        "pauli_product_XY_ZZ": {"letters": lab, "phase": phase},
        "circuit_2q": CIRCUIT_2Q,
        "model_2q": MODEL_2Q,
        "distribution_2q": oracles.output_distribution(CIRCUIT_2Q, MODEL_2Q).tolist(),
        "fidelity_2q": oracles.choi_fidelity(CIRCUIT_2Q, {**MODEL_2Q, "spam": {}}),
        "circuit_3q": CIRCUIT_3Q,
        "model_3q": MODEL_3Q,
        "distribution_3q": oracles.output_distribution(CIRCUIT_3Q, MODEL_3Q).tolist(),
        "fidelity_3q": oracles.choi_fidelity(CIRCUIT_3Q, {**MODEL_3Q, "spam": {}}),
    }
    path = ROOT / "tests" / "data" / "frozen.json"
    path.write_text(json.dumps(out, indent=1) + "\n")
    print(f"wrote {path}")


if __name__ == "__main__":
    main()
