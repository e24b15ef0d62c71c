"""Error-generator noise models, Pauli transfer matrices and SPAM.

PTMs act on unnormalized Pauli expectation vectors ``v_P = Tr(P rho)``. The
Pauli index of a label is ``sum_q LETTERS.index(label[q]) * 4**q``, so label
position ``q`` is the least-significant base-4 digit, matching the bit order
of :mod:`core`. The matrix itself is the same in the normalized basis.

Generators follow the usual taxonomy: ``H_P: rho -> -i[P, rho]`` and
``S_P: rho -> P rho P - rho``. A gate's error map is ``exp(sum rate * G)``
applied after the ideal gate.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np
from scipy.linalg import expm

from .core import LETTERS, ConnectivityGraph, Gate, PauliString, u3_five_gate_sequence
from .errors import DomainError, ModelError

CPTP_TOL = 1e-10
HAMILTONIAN = "hamiltonian"
STOCHASTIC = "stochastic"
BOTH = "both"


# --------------------------------------------------------------------------- PTM utilities


@lru_cache(maxsize=None)
def pauli_labels(k: int) -> tuple[str, ...]:
    """Labels in PTM index order for ``k`` qubits."""
    return tuple(PauliString.from_index(i, k).letters for i in range(4**k))


@lru_cache(maxsize=None)
def _basis(k: int) -> np.ndarray:
    return np.stack([PauliString(lab).matrix() for lab in pauli_labels(k)])


def superop_ptm(fn, k: int) -> np.ndarray:
    """PTM of a linear map ``fn`` on ``k``-qubit operators."""
    b = _basis(k)
    images = np.stack([fn(p) for p in b])
    return np.real(np.einsum("iab,jba->ij", b, images)) / 2**k


def unitary_ptm(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    k = int(round(math.log2(u.shape[0])))
    b = _basis(k)
    conj = np.einsum("ab,jbc,dc->jad", u, b, u.conj())
    return np.real(np.einsum("iab,jba->ij", b, conj)) / 2**k


def _check_letters(letters: str) -> str:
    letters = str(letters).upper()
    if not letters or any(ch not in LETTERS for ch in letters):
        raise DomainError(f"bad Pauli label {letters!r}")
    if set(letters) == {"I"}:
        raise DomainError("identity Pauli has no error generator")
    return letters


@lru_cache(maxsize=None)
def generator_matrix(kind: str, letters: str) -> np.ndarray:
    """PTM-basis matrix of the Hamiltonian or stochastic generator for ``letters``."""
    letters = _check_letters(letters)
    p = PauliString(letters).matrix()
    if kind in ("H", HAMILTONIAN):
        fn = lambda r: -1j * (p @ r - r @ p)  # noqa: E731
    elif kind in ("S", STOCHASTIC):
        fn = lambda r: p @ r @ p - r  # noqa: E731
    else:
        raise DomainError(f"unknown generator kind {kind!r}")
    m = superop_ptm(fn, len(letters))
    m.flags.writeable = False
    return m


def ptm_to_choi(ptm: np.ndarray) -> np.ndarray:
    """Unit-trace Choi matrix ``sum_ij R_ij P_j^T (x) P_i / d^2``."""
    k = int(round(math.log(ptm.shape[0], 4)))
    b = _basis(k)
    d = 2**k
    choi = np.einsum("ij,jab,icd->acbd", ptm, b.transpose(0, 2, 1), b).reshape(d * d, d * d)
    return choi / d**2


def min_choi_eigenvalue(ptm: np.ndarray) -> float:
    choi = ptm_to_choi(ptm)
    return float(np.linalg.eigvalsh((choi + choi.conj().T) / 2).min())


def is_cptp(ptm: np.ndarray, tol: float = CPTP_TOL) -> bool:
    first = np.zeros(ptm.shape[0])
    first[0] = 1.0
    return bool(np.allclose(ptm[0], first, atol=1e-12)) and min_choi_eigenvalue(ptm) >= -tol


def pauli_channel_ptm(probs: Mapping[str, float]) -> np.ndarray:
    """Diagonal PTM of ``rho -> sum_P p_P P rho P`` (missing mass on identity)."""
    k = len(next(iter(probs)))
    labels = pauli_labels(k)
    p_id = 1.0 - sum(probs.values())
    diag = np.full(len(labels), p_id)
    for lab, pr in probs.items():
        q = PauliString(lab)
        diag += np.array([pr if q.commutes(PauliString(l2)) else -pr for l2 in labels])
    return np.diag(diag)


def kron_ptm(ptms: Sequence[np.ndarray]) -> np.ndarray:
    """PTM of a tensor product; ``ptms[0]`` acts on the lowest qubit."""
    out = np.ones((1, 1))
    for r in ptms:
        out = np.kron(r, out)
    return out


# --------------------------------------------------------------------------- error sets


@dataclass(frozen=True)
class ErrorGeneratorSet:
    """Rates of Hamiltonian and stochastic generators, keyed by Pauli label.

    Label position ``k`` acts on the ``k``-th qubit of the gate it decorates.
    """

    hamiltonian: Mapping[str, float] = field(default_factory=dict)
    stochastic: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        h = {_check_letters(k): float(v) for k, v in dict(self.hamiltonian).items() if v != 0}
        s = {_check_letters(k): float(v) for k, v in dict(self.stochastic).items() if v != 0}
        for lab, v in s.items():
            if v < 0:
                raise ModelError(f"negative stochastic rate {v} on {lab}")
        sizes = {len(k) for k in (*h, *s)}
        if len(sizes) > 1:
            raise ModelError("labels of different lengths in one generator set")
        object.__setattr__(self, "hamiltonian", h)
        object.__setattr__(self, "stochastic", s)

    @property
    def arity(self) -> int | None:
        for k in (*self.hamiltonian, *self.stochastic):
            return len(k)
        return None

    def is_empty(self) -> bool:
        return not self.hamiltonian and not self.stochastic

    def is_stochastic(self) -> bool:
        return not self.hamiltonian

    def _cache_key(self):
        return (tuple(sorted(self.hamiltonian.items())), tuple(sorted(self.stochastic.items())))

    def generator(self) -> np.ndarray:
        k = self.arity or 1
        g = np.zeros((4**k, 4**k))
        for lab, v in self.hamiltonian.items():
            g = g + v * generator_matrix("H", lab)
        for lab, v in self.stochastic.items():
            g = g + v * generator_matrix("S", lab)
        return g

    def ptm(self) -> np.ndarray:
        return _error_ptm(self._cache_key())

    def flip_probabilities(self) -> dict[str, float]:
        """Independent flip probability per Pauli; exact because the S_P commute."""
        if self.hamiltonian:
            raise ModelError("Hamiltonian terms have no Pauli-flip representation")
        return {lab: (1 - math.exp(-2 * v)) / 2 for lab, v in self.stochastic.items()}

    def to_json(self) -> dict:
        return {"H": dict(self.hamiltonian), "S": dict(self.stochastic)}

    @classmethod
    def from_json(cls, obj: Mapping) -> "ErrorGeneratorSet":
        return cls(dict(obj.get("H", {})), dict(obj.get("S", {})))


@lru_cache(maxsize=4096)
def _error_ptm(key) -> np.ndarray:
    es = ErrorGeneratorSet(dict(key[0]), dict(key[1]))
    if es.is_empty():
        return np.eye(4)
    m = expm(es.generator())
    m.flags.writeable = False
    return m


@dataclass(frozen=True)
class Channel:
    """Real PTM of a channel on ``n_g`` qubits."""

    ptm: np.ndarray

    @property
    def n(self) -> int:
        return int(round(math.log(self.ptm.shape[0], 4)))

    def entanglement_fidelity(self) -> float:
        return float(np.trace(self.ptm)) / self.ptm.shape[0]

    def is_trace_preserving(self, atol: float = 1e-12) -> bool:
        e0 = np.zeros(self.ptm.shape[0])
        e0[0] = 1
        return bool(np.allclose(self.ptm[0], e0, atol=atol))

    def min_choi_eigenvalue(self) -> float:
        return min_choi_eigenvalue(self.ptm)

    def is_cptp(self, tol: float = CPTP_TOL) -> bool:
        return is_cptp(self.ptm, tol)

    def is_pauli(self, atol: float = 1e-12) -> bool:
        off = self.ptm - np.diag(np.diag(self.ptm))
        return bool(np.abs(off).max() <= atol)


# --------------------------------------------------------------------------- models


@dataclass(frozen=True)
class CrosstalkTerm:
    """Extra error on ``qubits`` whenever the gate ``trigger`` (a gate key) fires."""

    trigger: str
    qubits: tuple[int, ...]
    errors: ErrorGeneratorSet

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if self.errors.arity not in (None, len(self.qubits)):
            raise ModelError("crosstalk labels do not match its qubit count")


@dataclass(frozen=True)
class ErrorModel:
    """Per-gate error generators, SPAM and crosstalk.

    ``gates`` maps gate keys such as ``"xhalfpi@0"``, ``"idle@2"`` or
    ``"cs@0,1"`` to generator sets. ``"u3@q"`` adds a gate-independent error
    after every U3 on ``q``. Gates without an entry are error free, as are
    all z rotations.
    """

    gates: Mapping[str, ErrorGeneratorSet] = field(default_factory=dict)
    spam_gamma: float = 1.0
    readout_flips: tuple[float, ...] = ()
    crosstalk: tuple[CrosstalkTerm, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "gates", {k: v for k, v in dict(self.gates).items() if not v.is_empty()})
        object.__setattr__(self, "readout_flips", tuple(float(f) for f in self.readout_flips))
        object.__setattr__(self, "crosstalk", tuple(self.crosstalk))
        if not 0 <= self.spam_gamma <= 1:
            raise DomainError(f"spam gamma {self.spam_gamma} outside [0, 1]")
        for f in self.readout_flips:
            if not 0 <= f <= 1:
                raise DomainError(f"readout flip probability {f} outside [0, 1]")
        for key, es in self.gates.items():
            nq = len(key.split("@", 1)[1].split(",")) if "@" in key else None
            if nq is None:
                raise ModelError(f"gate key {key!r} lacks '@qubits'")
            if es.arity != nq:
                raise ModelError(f"{key}: {es.arity}-qubit labels on a {nq}-qubit gate")
        for es in [*self.gates.values(), *(t.errors for t in self.crosstalk)]:
            if not es.is_empty() and not is_cptp(es.ptm()):
                raise ModelError("error map is not CPTP")

    @classmethod
    def noiseless(cls) -> "ErrorModel":
        return cls()

    def errors_for(self, key: str) -> ErrorGeneratorSet | None:
        return self.gates.get(key)

    def error_ptm(self, key: str) -> np.ndarray | None:
        es = self.gates.get(key)
        return None if es is None else es.ptm()

    def is_stochastic(self) -> bool:
        return all(es.is_stochastic() for es in self.gates.values()) and all(
            t.errors.is_stochastic() for t in self.crosstalk
        )

    def flips(self, n: int) -> tuple[float, ...]:
        if not self.readout_flips:
            return (0.0,) * n
        if len(self.readout_flips) < n:
            raise DomainError(f"readout flips given for {len(self.readout_flips)} qubits, need {n}")
        return self.readout_flips[:n]

    def crosstalk_for(self, keys: set[str]) -> list[CrosstalkTerm]:
        return [t for t in self.crosstalk if t.trigger in keys]

    def to_json(self) -> dict:
        return {
            "gates": {k: v.to_json() for k, v in sorted(self.gates.items())},
            "spam": {"gamma": self.spam_gamma, "flips": list(self.readout_flips)},
            "crosstalk": [
                {"trigger": t.trigger, "qubits": list(t.qubits), **t.errors.to_json()} for t in self.crosstalk
            ],
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "ErrorModel":
        spam = obj.get("spam", {})
        return cls(
            {k: ErrorGeneratorSet.from_json(v) for k, v in obj.get("gates", {}).items()},
            float(spam.get("gamma", 1.0)),
            tuple(spam.get("flips", ())),
            tuple(
                CrosstalkTerm(t["trigger"], tuple(t["qubits"]), ErrorGeneratorSet.from_json(t))
                for t in obj.get("crosstalk", [])
            ),
        )


def _rz_ptm(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[1, 0, 0, 0], [0, c, -s, 0], [0, s, c, 0], [0, 0, 0, 1.0]])


_RX_HALF_PI = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, -1], [0, 0, 1, 0.0]])


def gate_ptm(model: ErrorModel, gate: Gate) -> np.ndarray:
    """Noisy PTM of ``gate`` under ``model`` (local order over ``gate.qubits``)."""
    if gate.kind == "u3":
        x = _RX_HALF_PI
        ex = model.error_ptm(f"xhalfpi@{gate.qubits[0]}")
        if ex is not None:
            x = ex @ x
        r = np.eye(4)
        for op, ang in u3_five_gate_sequence(*gate.params):
            r = (x if op == "x" else _rz_ptm(ang)) @ r
    elif gate.kind == "zrot":
        return _rz_ptm(gate.params[0])
    elif gate.kind == "idle":
        r = np.eye(4)
    elif gate.kind == "xhalfpi":
        r = _RX_HALF_PI
    else:
        r = unitary_ptm(gate.matrix())
    e = model.error_ptm(gate.key)
    return r if e is None else e @ r


def channel_of_gate(model: ErrorModel, gate: Gate) -> Channel:
    ch = Channel(gate_ptm(model, gate))
    if not ch.is_cptp():
        raise ModelError(f"channel of {gate.key} is not CPTP")
    return ch


@dataclass(frozen=True)
class SpamChannel:
    """Global depolarizing with polarization ``gamma``, then classical readout flips."""

    n: int
    gamma: float
    flips: tuple[float, ...]

    def ptm(self) -> np.ndarray:
        d = np.full(4**self.n, self.gamma)
        d[0] = 1.0
        return np.diag(d)

    def readout_matrix(self, q: int) -> np.ndarray:
        f = self.flips[q]
        return np.array([[1 - f, f], [f, 1 - f]])

    def channel(self) -> Channel:
        return Channel(self.ptm())


def spam_channel(model: ErrorModel, n: int) -> SpamChannel:
    return SpamChannel(n, model.spam_gamma, model.flips(n))


def depolarizing_ptm(gamma: float, k: int) -> np.ndarray:
    d = np.full(4**k, float(gamma))
    d[0] = 1.0
    return np.diag(d)


# --------------------------------------------------------------------------- random models


def _split(total: float, labels: Sequence[str], rng: np.random.Generator, squared: bool) -> dict[str, float]:
    w = rng.dirichlet(np.ones(len(labels)))
    vals = total * np.sqrt(w) if squared else total * w
    return dict(zip(labels, vals))


def sample_random_model(
    family: str,
    p: float,
    gate_set,
    graph: ConnectivityGraph,
    rng: np.random.Generator,
    one_qubit_scale: float = 0.1,
) -> ErrorModel:
    """Random gate-dependent, qubit-dependent model with overall strength ``p``.

    ``s + h**2 = p``. Two-qubit gates get stochastic rates summing to ``s`` and
    non-negative Hamiltonian rates of Euclidean norm ``h``, so their
    infidelity is about ``p``. ``xhalfpi`` and idle gates get both scales
    multiplied by ``one_qubit_scale``. Totals are split across Paulis by a
    flat Dirichlet draw.
    """
    if p < 0:
        raise DomainError("p must be non-negative")
    if family == STOCHASTIC:
        s, h = p, 0.0
    elif family == HAMILTONIAN:
        s, h = 0.0, math.sqrt(p)
    elif family == BOTH:
        s = float(rng.uniform(0, p))
        h = math.sqrt(max(p - s, 0.0))
    else:
        raise DomainError(f"unknown model family {family!r}")
    one = [lab for lab in pauli_labels(1) if lab != "I"]
    two = [lab for lab in pauli_labels(2) if lab != "II"]

    def draw(labels, scale):
        hs = _split(h * scale, labels, rng, squared=True) if h > 0 else {}
        ss = _split(s * scale, labels, rng, squared=False) if s > 0 else {}
        return ErrorGeneratorSet(hs, ss)

    gates: dict[str, ErrorGeneratorSet] = {}
    for q in range(graph.n):
        gates[f"xhalfpi@{q}"] = draw(one, one_qubit_scale)
        gates[f"idle@{q}"] = draw(one, one_qubit_scale)
    for i, j in graph.sorted_edges():
        for axis, theta in gate_set.two_qubit:
            gates[Gate.cprot(axis, theta, i, j).key] = draw(two, 1.0)
    return ErrorModel(gates)


def all_pauli_labels(k: int, include_identity: bool = False) -> list[str]:
    labs = ["".join(t) for t in itertools.product(LETTERS, repeat=k)]
    return labs if include_identity else [lab for lab in labs if set(lab) != {"I"}]
