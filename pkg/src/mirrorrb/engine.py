"""Noisy circuit simulation.

Two engines share one noise semantics (see :mod:`noise`):

* dense Pauli-transfer evolution of a ``4**n`` expectation vector, exact,
  for ``n <= DENSE_CAP``;
* batched statevector trajectories with sampled Pauli errors, for models
  whose errors are all stochastic.

Within a layer, each gate's noisy PTM is applied, then idle errors on
uncovered qubits, then any crosstalk terms triggered by gates in the layer.
Bitstrings are written with character ``q`` holding the bit of qubit ``q``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import (
    DENSE_CAP,
    Circuit,
    Layer,
    PauliString,
    apply_local,
    rotation,
    u3_five_gate_sequence,
    u3_matrix,
)
from .errors import CapacityError, DataError, DomainError, UnsupportedModelError
from .noise import ErrorGeneratorSet, ErrorModel, gate_ptm, unitary_ptm
from .sampling import clifford24

TRAJECTORY_CAP = 14
_H2 = np.array([[1.0, 1.0], [1.0, -1.0]]) / 2


def index_to_bitstring(idx: int, n: int) -> str:
    return "".join(str((idx >> q) & 1) for q in range(n))


def bitstring_to_index(bits: str) -> int:
    return sum(int(b) << q for q, b in enumerate(bits))


@dataclass(frozen=True)
class OutcomeHistogram:
    counts: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        counts = {str(k): int(v) for k, v in dict(self.counts).items() if int(v) != 0}
        for k, v in counts.items():
            if v < 0:
                raise DataError(f"negative count for {k}")
        if len({len(k) for k in counts}) > 1:
            raise DataError("bitstrings of different lengths")
        object.__setattr__(self, "counts", dict(sorted(counts.items())))

    @property
    def shots(self) -> int:
        return sum(self.counts.values())

    @property
    def n(self) -> int | None:
        for k in self.counts:
            return len(k)
        return None

    def probabilities(self, n: int) -> np.ndarray:
        p = np.zeros(2**n)
        for k, v in self.counts.items():
            p[bitstring_to_index(k)] += v
        return p / max(self.shots, 1)

    @classmethod
    def from_indices(cls, idx: np.ndarray, n: int) -> "OutcomeHistogram":
        vals, cnts = np.unique(np.asarray(idx), return_counts=True)
        return cls({index_to_bitstring(int(v), n): int(c) for v, c in zip(vals, cnts)})


def sample_counts(probs: np.ndarray, shots: int, rng: np.random.Generator) -> OutcomeHistogram:
    probs = np.clip(np.asarray(probs, dtype=float), 0, None)
    counts = rng.multinomial(shots, probs / probs.sum())
    n = int(round(math.log2(len(probs))))
    return OutcomeHistogram({index_to_bitstring(i, n): int(c) for i, c in enumerate(counts) if c})


def write_histograms_csv(path, rows: Iterable[tuple[str, int, OutcomeHistogram]]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["circuit_id", "depth", "bitstring", "count"])
        for cid, depth, hist in rows:
            for bits, c in hist.counts.items():
                w.writerow([cid, depth, bits, c])


def read_histograms_csv(path) -> dict[str, tuple[int, OutcomeHistogram]]:
    acc: dict[str, tuple[int, dict[str, int]]] = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            cid = row["circuit_id"]
            depth, counts = acc.setdefault(cid, (int(row["depth"]), {}))
            counts[row["bitstring"]] = counts.get(row["bitstring"], 0) + int(row["count"])
    return {cid: (d, OutcomeHistogram(c)) for cid, (d, c) in acc.items()}


# --------------------------------------------------------------------------- dense PTM engine


def layer_operations(layer: Layer, model: ErrorModel, cache: dict | None = None) -> list[tuple[np.ndarray, tuple[int, ...]]]:
    """Noisy PTMs of one layer, in application order, with their qubits."""
    cache = {} if cache is None else cache
    ops = []
    keys = set()
    for g in layer.gates:
        keys.add(g.key)
        if g.kind == "cprot" or g.kind == "idle":
            r = cache.get(g.key)
            if r is None:
                r = cache[g.key] = gate_ptm(model, g)
        else:
            r = gate_ptm(model, g)
        ops.append((r, g.qubits))
    for q in layer.idle_qubits():
        e = model.error_ptm(f"idle@{q}")
        if e is not None:
            ops.append((e, (q,)))
    for term in model.crosstalk_for(keys):
        ops.append((term.errors.ptm(), term.qubits))
    return ops


def _check_cap(n: int, cap: int) -> None:
    if n > cap:
        raise CapacityError(f"n={n} exceeds dense cap {cap}; use trajectory mode for stochastic models")


def initial_vector(n: int) -> np.ndarray:
    """Pauli expectation tensor of ``|0...0>``: 1 on strings of I and Z only."""
    v1 = np.array([1.0, 0.0, 0.0, 1.0])
    v = np.ones(())
    for _ in range(n):
        v = np.multiply.outer(v, v1)
    return v


def evolve(vec: np.ndarray, c: Circuit, model: ErrorModel) -> np.ndarray:
    """Apply ``c`` to a tensor of shape ``(4,)*n + extra``."""
    cache: dict = {}
    for layer in c.layers:
        for r, qs in layer_operations(layer, model, cache):
            vec = apply_local(vec, r, qs, c.n, 4)
    return vec


def measurement_distribution(vec: np.ndarray, n: int, gamma: float = 1.0, flips: Sequence[float] | None = None) -> np.ndarray:
    """Computational-basis probabilities after global depolarizing and readout flips."""
    z = vec[(slice(0, 4, 3),) * n].copy()
    if gamma != 1.0:
        z *= gamma
        z[(0,) * n] = vec[(0,) * n]
    p = z
    for a in range(n):
        p = np.moveaxis(np.tensordot(_H2, p, axes=([1], [a])), 0, a)
    if flips is not None:
        for q, f in enumerate(flips):
            if f:
                m = np.array([[1 - f, f], [f, 1 - f]])
                a = n - 1 - q
                p = np.moveaxis(np.tensordot(m, p, axes=([1], [a])), 0, a)
    p = np.clip(p.reshape(-1), 0.0, None)
    return p / p.sum()


def simulate_distribution(c: Circuit, model: ErrorModel | None = None, cap: int = DENSE_CAP) -> np.ndarray:
    """Exact output distribution, indexed with qubit 0 as the least-significant bit."""
    _check_cap(c.n, cap)
    model = model or ErrorModel()
    vec = evolve(initial_vector(c.n), c, model)
    return measurement_distribution(vec, c.n, model.spam_gamma, model.flips(c.n))


def circuit_ptm(c: Circuit, model: ErrorModel | None = None, cap: int = DENSE_CAP) -> np.ndarray:
    """Full ``4**n x 4**n`` PTM of the noisy circuit (no SPAM)."""
    _check_cap(c.n, cap)
    model = model or ErrorModel()
    dim = 4**c.n
    vec = np.eye(dim).reshape((4,) * c.n + (dim,))
    return evolve(vec, c, model).reshape(dim, dim)


def polarization(fidelity: float, n: int) -> float:
    d2 = 4**n
    return (d2 * fidelity - 1) / (d2 - 1)


def fidelity_from_polarization(gamma: float, n: int) -> float:
    d2 = 4**n
    return gamma + (1 - gamma) / d2


def entanglement_fidelity(c: Circuit, model: ErrorModel | None = None, cap: int = DENSE_CAP) -> float:
    """Entanglement fidelity of the noisy circuit to its ideal unitary."""
    noisy = circuit_ptm(c, model, cap)
    ideal = circuit_ptm(c, ErrorModel(), cap)
    return float(np.sum(ideal * noisy)) / noisy.shape[0]


def clifford_twirl(ptm: np.ndarray, n: int) -> np.ndarray:
    """Exact average of ``R_L^T E R_L`` over tensor products of single-qubit Cliffords."""
    cl = [unitary_ptm(u3_matrix(*t)) for t in clifford24()]
    dim = 4**n
    shape = (4,) * n + (dim,)

    def left(m, r, q):
        return apply_local(m.reshape(shape), r, (q,), n, 4).reshape(dim, dim)

    out = np.asarray(ptm, dtype=float)
    for q in range(n):
        acc = np.zeros((dim, dim))
        for r in cl:
            er = left(out.T, r.T, q).T
            acc += left(er, r.T, q)
        out = acc / len(cl)
    return out


def twirled_polarization(ptm: np.ndarray, n: int) -> float:
    """Polarization from outcome statistics of the locally twirled channel.

    ``4**n/(4**n-1) * sum_z (-1/2)**|z| <<z|E_bar|0>> - 1/(4**n-1)``.
    """
    ebar = clifford_twirl(ptm, n)
    vec = (ebar @ initial_vector(n).reshape(-1)).reshape((4,) * n)
    probs = measurement_distribution(vec, n)
    weights = np.array([(-0.5) ** bin(z).count("1") for z in range(2**n)])
    d2 = 4**n
    return d2 / (d2 - 1) * float(weights @ probs) - 1 / (d2 - 1)


# --------------------------------------------------------------------------- trajectories


def _apply_flips(psi: np.ndarray, es: ErrorGeneratorSet | None, qubits, n: int, rng: np.random.Generator) -> np.ndarray:
    if es is None:
        return psi
    shots = psi.shape[-1]
    for lab, f in es.flip_probabilities().items():
        mask = rng.random(shots) < f
        if mask.any():
            psi[..., mask] = apply_local(psi[..., mask], PauliString(lab).matrix(), qubits, n, 2)
    return psi


def _run_chunk(c: Circuit, model: ErrorModel, shots: int, rng: np.random.Generator) -> np.ndarray:
    n = c.n
    psi = np.zeros((2,) * n + (shots,), dtype=complex)
    psi[(0,) * n] = 1.0
    for layer in c.layers:
        keys = set()
        for g in layer.gates:
            keys.add(g.key)
            q = g.qubits
            if g.kind == "u3":
                xerr = model.errors_for(f"xhalfpi@{q[0]}")
                for op, ang in u3_five_gate_sequence(*g.params):
                    if op == "x":
                        psi = apply_local(psi, rotation("X", math.pi / 2), q, n, 2)
                        psi = _apply_flips(psi, xerr, q, n, rng)
                    else:
                        psi = apply_local(psi, rotation("Z", ang), q, n, 2)
            elif g.kind != "idle":
                psi = apply_local(psi, g.matrix(), q, n, 2)
            if g.kind != "zrot":
                psi = _apply_flips(psi, model.errors_for(g.key), q, n, rng)
        for q in layer.idle_qubits():
            psi = _apply_flips(psi, model.errors_for(f"idle@{q}"), (q,), n, rng)
        for term in model.crosstalk_for(keys):
            psi = _apply_flips(psi, term.errors, term.qubits, n, rng)
    probs = np.abs(psi.reshape(2**n, shots)) ** 2
    cum = np.cumsum(probs, axis=0)
    u = rng.random(shots) * cum[-1]
    idx = np.minimum((cum < u).sum(axis=0), 2**n - 1)
    if model.spam_gamma < 1:
        dep = rng.random(shots) >= model.spam_gamma
        idx[dep] = rng.integers(0, 2**n, int(dep.sum()))
    for q, f in enumerate(model.flips(n)):
        if f:
            idx ^= (rng.random(shots) < f).astype(idx.dtype) << q
    return idx


def simulate_trajectories(
    c: Circuit,
    model: ErrorModel | None,
    shots: int,
    rng: np.random.Generator,
    cap: int = TRAJECTORY_CAP,
    max_amplitudes: int = 2**22,
) -> OutcomeHistogram:
    """Monte-Carlo outcomes for Pauli-stochastic models."""
    model = model or ErrorModel()
    if c.n > cap:
        raise CapacityError(f"n={c.n} exceeds trajectory cap {cap}")
    if not model.is_stochastic():
        raise UnsupportedModelError("trajectory mode needs stochastic-only error models")
    if shots < 1:
        raise DomainError("shots must be >= 1")
    chunk = max(1, min(shots, max_amplitudes // 2**c.n))
    parts = []
    done = 0
    while done < shots:
        m = min(chunk, shots - done)
        parts.append(_run_chunk(c, model, m, rng))
        done += m
    return OutcomeHistogram.from_indices(np.concatenate(parts), c.n)


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())
