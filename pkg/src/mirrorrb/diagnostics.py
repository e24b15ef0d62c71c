"""Crosstalk-free prediction, two-densities heuristic and gate-error fits."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import least_squares, minimize

from .analysis import DecayFit, OracleCircuit
from .core import ONE_QUBIT, TWO_QUBIT, Circuit, Gate, Layer, apply_local
from .engine import OutcomeHistogram, evolve, fidelity_from_polarization, initial_vector, measurement_distribution
from .errors import CoverageError, DomainError, FitError
from .noise import CrosstalkTerm, ErrorGeneratorSet, ErrorModel, all_pauli_labels
from .sampling import SamplerSpec, haar_u3, sample_two_qubit_layer

# --------------------------------------------------------------------------- dressed rates


@dataclass(frozen=True)
class DressedRates:
    """Dressed idle infidelity per qubit and dressed gate infidelity per edge."""

    idle_rates: Mapping[int, float]
    pair_rates: Mapping[tuple[int, int], float]

    def __post_init__(self):
        idle = {int(q): float(v) for q, v in dict(self.idle_rates).items()}
        pair = {tuple(sorted(map(int, e))): float(v) for e, v in dict(self.pair_rates).items()}
        for v in (*idle.values(), *pair.values()):
            if not 0 <= v <= 1:
                raise DomainError(f"rate {v} outside [0, 1]")
        object.__setattr__(self, "idle_rates", idle)
        object.__setattr__(self, "pair_rates", pair)

    def to_json(self) -> dict:
        return {
            "idle": {str(q): v for q, v in sorted(self.idle_rates.items())},
            "pair": {f"{i},{j}": v for (i, j), v in sorted(self.pair_rates.items())},
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "DressedRates":
        return cls(
            {int(q): v for q, v in obj["idle"].items()},
            {tuple(int(x) for x in k.split(",")): v for k, v in obj["pair"].items()},
        )


def layer_infidelity(layer: Layer, rates: DressedRates) -> float:
    """``1 - prod(1 - eps_g)`` over the dressed gates and idles of a two-qubit layer."""
    keep = 1.0
    for g in layer.two_qubit_gates():
        e = tuple(sorted(g.qubits))
        if e not in rates.pair_rates:
            raise CoverageError(f"no dressed rate for edge {e}")
        keep *= 1 - rates.pair_rates[e]
    for q in layer.idle_qubits():
        if q not in rates.idle_rates:
            raise CoverageError(f"no dressed idle rate for qubit {q}")
        keep *= 1 - rates.idle_rates[q]
    return 1 - keep


def _subset_spec(spec: SamplerSpec, qubits: Sequence[int] | None) -> tuple[SamplerSpec, list[int]]:
    if qubits is None:
        return spec, list(range(spec.n))
    qubits = list(qubits)
    graph = spec.graph.induced(qubits)
    # an edgeless subset has only idle layers
    xi = spec.xi if graph.edges else 0.0
    return SamplerSpec(spec.gate_set, graph, xi, spec.seed), qubits


def predict_crosstalk_free(
    rates: DressedRates,
    spec: SamplerSpec,
    qubits: Sequence[int] | None = None,
    M: int = 10000,
    rng: np.random.Generator | None = None,
) -> float:
    """Average layer infidelity over ``M`` sampled layers, assuming no crosstalk."""
    sub, qmap = _subset_spec(spec, qubits)
    local = DressedRates(
        {i: rates.idle_rates[q] for i, q in enumerate(qmap) if q in rates.idle_rates},
        {
            (i, j): rates.pair_rates[tuple(sorted((qmap[i], qmap[j])))]
            for i, j in sub.graph.sorted_edges()
            if tuple(sorted((qmap[i], qmap[j]))) in rates.pair_rates
        },
    )
    missing = [qmap[i] for i in range(sub.n) if i not in local.idle_rates]
    missing += [(qmap[i], qmap[j]) for i, j in sub.graph.sorted_edges() if (i, j) not in local.pair_rates]
    if missing:
        raise CoverageError(f"rates missing for {missing}")
    rng = rng or np.random.default_rng(spec.seed)
    return float(np.mean([layer_infidelity(sample_two_qubit_layer(sub, rng), local) for _ in range(M)]))


def pair_rate_prediction(xi: float, eps_gate: float, eps_i: float, eps_j: float) -> float:
    """Two-qubit closed form ``xi eps_g + (1 - xi)(1 - (1 - eps_i)(1 - eps_j))``."""
    return xi * eps_gate + (1 - xi) * (1 - (1 - eps_i) * (1 - eps_j))


def crosstalk_gap(observed: DecayFit, predicted: float) -> tuple[float, float]:
    """``(r_obs - r_pred, r_obs_perQ / r_pred_perQ)``."""
    n = observed.n
    pred_q = 1 - (1 - predicted) ** (1 / n)
    ratio = observed.r_per_qubit / pred_q if pred_q > 0 else float("inf")
    return observed.r_omega - predicted, ratio


def _random_u3_layer(qubits: Sequence[int], n: int, rng: np.random.Generator) -> Layer:
    return Layer(n, tuple(Gate.u3(q, *haar_u3(rng)) for q in qubits), ONE_QUBIT)


def dressed_rates_from_model(
    model: ErrorModel, spec: SamplerSpec, samples: int = 200, rng: np.random.Generator | None = None
) -> DressedRates:
    """Mean infidelities of dressed idles and dressed gates, by direct simulation.

    A dressed idle is an idle step followed by a Haar U3; a dressed gate is a
    uniformly drawn two-qubit prototype followed by Haar U3s on both qubits.
    Crosstalk terms are included when their trigger fires inside the dressed gate.
    """
    rng = rng or np.random.default_rng(spec.seed)
    n = spec.n
    idle: dict[int, float] = {}
    for q in range(n):
        vals = []
        for _ in range(samples):
            c = Circuit(1, (Layer.empty(1), _random_u3_layer([0], 1, rng)))
            vals.append(1 - _fid_sub(c, model, [q]))
        idle[q] = float(np.mean(vals))
    pair: dict[tuple[int, int], float] = {}
    protos = spec.gate_set.two_qubit
    for i, j in spec.graph.sorted_edges():
        vals = []
        for _ in range(samples):
            axis, theta = protos[int(rng.integers(len(protos)))]
            c = Circuit(2, (Layer(2, (Gate.cprot(axis, theta, 0, 1),), TWO_QUBIT), _random_u3_layer([0, 1], 2, rng)))
            vals.append(1 - _fid_sub(c, model, [i, j]))
        pair[(i, j)] = float(np.mean(vals))
    return DressedRates(idle, pair)


def restrict_model(model: ErrorModel, qubits: Sequence[int]) -> ErrorModel:
    """Relabel ``model`` onto the sub-register ``qubits`` (qubit ``qubits[k]`` becomes ``k``)."""
    index = {q: k for k, q in enumerate(qubits)}

    def relabel(key: str) -> str | None:
        name, qs = key.split("@", 1)
        qq = [int(x) for x in qs.split(",")]
        if not all(q in index for q in qq):
            return None
        return f"{name}@{','.join(str(index[q]) for q in qq)}"

    gates = {}
    for k, v in model.gates.items():
        nk = relabel(k)
        if nk is not None:
            gates[nk] = v
    xt = []
    for t in model.crosstalk:
        nk = relabel(t.trigger)
        if nk is not None and all(q in index for q in t.qubits):
            xt.append(CrosstalkTerm(nk, tuple(index[q] for q in t.qubits), t.errors))
    flips = tuple(model.readout_flips[q] for q in qubits) if model.readout_flips else ()
    return ErrorModel(gates, model.spam_gamma, flips, tuple(xt))


def _fid_sub(c: Circuit, model: ErrorModel, qubits: Sequence[int]) -> float:
    sub = restrict_model(model, qubits)
    return fidelity_from_polarization(OracleCircuit.of(0, c).polarization(sub), c.n)


# --------------------------------------------------------------------------- two densities


_TWO_DENSITIES = np.array([[0.5, 0.5], [7 / 8, 1 / 8]])


def two_densities_forward(eps1: float, eps2: float) -> tuple[float, float]:
    """``(r_1/2, r_1/8)`` for idle-layer infidelity ``eps1`` and dressed gate infidelity ``eps2``."""
    r = _TWO_DENSITIES @ np.array([eps1, eps2])
    return float(r[0]), float(r[1])


def two_densities_heuristic(r_half: float, r_eighth: float) -> tuple[float, float]:
    """Solve for ``(eps1, eps2)`` from rates at densities 1/2 and 1/8."""
    eps1, eps2 = np.linalg.solve(_TWO_DENSITIES, np.array([r_half, r_eighth], dtype=float))
    if min(eps1, eps2) < -1e-12:
        warnings.warn(f"two-densities solution has a negative rate: ({eps1:.3g}, {eps2:.3g})", RuntimeWarning)
    return float(eps1), float(eps2)


# --------------------------------------------------------------------------- depolarizing fit


@dataclass(frozen=True)
class DepolarizingRecord:
    """One circuit's observed polarization with its dressed-layer inventory.

    ``layers`` holds one tuple of dressed-gate labels per dressed layer, e.g.
    ``("cs@0,1",)`` or ``("idle@0", "idle@1")``. ``qubits`` is the benchmarked
    register (readout labels are ``readout@q``).
    """

    qubits: tuple[int, ...]
    layers: tuple[tuple[str, ...], ...]
    S: float


def dressed_layer_labels(circuit: Circuit, qubits: Sequence[int] | None = None) -> tuple[tuple[str, ...], ...]:
    """Dressed-layer inventory of an alternating circuit.

    A two-qubit layer and the one-qubit layer after it form one dressed
    layer; a one-qubit layer with no two-qubit layer before it is a dressed
    idle layer on every qubit.
    """
    qubits = list(range(circuit.n)) if qubits is None else list(qubits)
    out = []
    prev_two: Layer | None = None
    for layer in circuit.layers:
        if layer.arity == TWO_QUBIT:
            prev_two = layer
            continue
        if prev_two is None:
            out.append(tuple(f"idle@{qubits[q]}" for q in range(circuit.n)))
        else:
            labels = [f"{g.name}@{','.join(str(qubits[q]) for q in g.qubits)}" for g in prev_two.two_qubit_gates()]
            labels += [f"idle@{qubits[q]}" for q in prev_two.idle_qubits()]
            out.append(tuple(labels))
        prev_two = None
    return tuple(out)


@dataclass(frozen=True)
class DepolarizingModel:
    gate_rates: Mapping[str, float]
    readout_rates: Mapping[int, float]
    std: Mapping[str, float] = field(default_factory=dict)
    residual: float = 0.0
    unidentifiable: tuple[str, ...] = ()

    def layer_polarization(self, labels: Sequence[str], n: int) -> float:
        keep = np.prod([1 - self.gate_rates[lab] for lab in labels])
        return _pol_from_keep(keep, n)

    def predict(self, record: DepolarizingRecord) -> float:
        n = len(record.qubits)
        s = np.prod([self.layer_polarization(lay, n) for lay in record.layers])
        keep_r = np.prod([1 - self.readout_rates[q] for q in record.qubits])
        return float(s * _pol_from_keep(keep_r, n))

    def to_json(self) -> dict:
        return {
            "gate_rates": dict(self.gate_rates),
            "readout_rates": {str(q): v for q, v in self.readout_rates.items()},
            "std": dict(self.std),
            "residual": self.residual,
            "unidentifiable": list(self.unidentifiable),
        }


def _pol_from_keep(keep: float, n: int) -> float:
    d2 = 4**n
    return (d2 * keep - 1) / (d2 - 1)


def _param_names(records: Sequence[DepolarizingRecord]) -> tuple[list[str], list[int]]:
    gates = sorted({lab for r in records for lay in r.layers for lab in lay})
    readout = sorted({q for r in records for q in r.qubits})
    return gates, readout


def _fit_depol_once(records, gates, readout, x0=None):
    gi = {g: k for k, g in enumerate(gates)}
    ri = {q: len(gates) + k for k, q in enumerate(readout)}
    use_log = all(r.S > 0 for r in records)
    S = np.array([r.S for r in records])

    def model(x):
        out = np.empty(len(records))
        for c, r in enumerate(records):
            n = len(r.qubits)
            val = 1.0
            for lay in r.layers:
                val *= _pol_from_keep(np.prod([1 - x[gi[lab]] for lab in lay]), n)
            val *= _pol_from_keep(np.prod([1 - x[ri[q]] for q in r.qubits]), n)
            out[c] = val
        return out

    def resid(x):
        m = model(x)
        if use_log:
            return np.log(np.clip(m, 1e-300, None)) - np.log(S)
        return m - S

    nparam = len(gates) + len(readout)
    x0 = np.full(nparam, 1e-3) if x0 is None else x0
    # the layer polarization stays positive while each rate is below 1 - 4**-n
    res = least_squares(resid, x0, bounds=(np.zeros(nparam), np.full(nparam, 0.5)), xtol=1e-14, ftol=1e-14, gtol=1e-14)
    return res, model


def fit_depolarizing(
    records: Sequence[DepolarizingRecord], resamples: int = 0, seed: int = 0
) -> DepolarizingModel:
    """Least-squares fit of per-dressed-gate and readout rates to observed polarizations."""
    records = list(records)
    if not records:
        raise FitError("no records to fit")
    gates, readout = _param_names(records)
    res, model = _fit_depol_once(records, gates, readout)
    names = gates + [f"readout@{q}" for q in readout]
    # rank check on the Jacobian
    sv = np.linalg.svd(res.jac, compute_uv=False) if res.jac.size else np.array([])
    unident: list[str] = []
    if len(sv) and sv.min() < 1e-8 * max(sv.max(), 1e-300):
        _, _, vh = np.linalg.svd(res.jac)
        null = vh[np.abs(np.linalg.svd(res.jac, compute_uv=False)) < 1e-8 * sv.max()]
        unident = [names[k] for k in range(len(names)) if np.abs(null[:, k]).max() > 1e-6]
        warnings.warn(f"rank-deficient depolarizing fit; unidentifiable: {unident}", RuntimeWarning)
    x = res.x
    std: dict[str, float] = {}
    if resamples:
        rng = np.random.default_rng(seed)
        draws = []
        for _ in range(resamples):
            pick = [records[i] for i in rng.integers(0, len(records), len(records))]
            g2, r2 = _param_names(pick)
            if g2 != gates or r2 != readout:
                continue
            rb, _ = _fit_depol_once(pick, gates, readout, x0=x.copy())
            draws.append(rb.x)
        if len(draws) > 1:
            sd = np.std(np.array(draws), axis=0, ddof=1)
            std = {nm: float(s) for nm, s in zip(names, sd)}
    resid = model(x) - np.array([r.S for r in records])
    return DepolarizingModel(
        {g: float(x[k]) for k, g in enumerate(gates)},
        {q: float(x[len(gates) + k]) for k, q in enumerate(readout)},
        std,
        float(np.mean(resid**2)),
        tuple(unident),
    )


# --------------------------------------------------------------------------- Pauli-stochastic MLE


@dataclass(frozen=True)
class PauliFit:
    """Stochastic generator rates per gate key and one SPAM bit-flip rate per qubit."""

    rates: Mapping[str, Mapping[str, float]]
    spam_flips: tuple[float, ...]
    log_likelihood: float
    std: Mapping[str, float] = field(default_factory=dict)
    names: tuple[str, ...] = ()
    fisher: np.ndarray | None = None
    unidentifiable: tuple[str, ...] = ()

    def model(self) -> ErrorModel:
        return ErrorModel({k: ErrorGeneratorSet({}, v) for k, v in self.rates.items()}, 1.0, self.spam_flips)

    def vector(self) -> np.ndarray:
        """Parameters in the order of ``names``."""
        out = []
        for nm in self.names:
            if nm.startswith("spam@"):
                out.append(self.spam_flips[int(nm[5:])])
            else:
                key, lab = nm.split(":")
                out.append(self.rates[key][lab])
        return np.array(out)

    def to_json(self) -> dict:
        return {
            "rates": {k: dict(v) for k, v in self.rates.items()},
            "spam_flips": list(self.spam_flips),
            "log_likelihood": self.log_likelihood,
            "std": dict(self.std),
            "unidentifiable": list(self.unidentifiable),
        }


def _pauli_keys(circuits: Sequence[Circuit]) -> list[str]:
    keys = set()
    for c in circuits:
        for layer in c.layers:
            for g in layer.gates:
                if g.kind in ("u3", "xhalfpi"):
                    keys.add(f"xhalfpi@{g.qubits[0]}")
                elif g.kind == "cprot":
                    keys.add(g.key)
            keys.update(f"idle@{q}" for q in layer.idle_qubits())
    return sorted(keys)


def fit_pauli_stochastic(
    histograms: Sequence[OutcomeHistogram],
    circuits: Sequence[Circuit],
    starts: int = 3,
    seed: int = 0,
    max_rate: float = 0.25,
) -> PauliFit:
    """Maximum-likelihood per-gate stochastic Pauli rates for ``n <= 3``.

    Free parameters: stochastic generator rates on every ``xhalfpi``, idle
    and two-qubit gate appearing in the circuits, plus one bit-flip rate per
    qubit for state preparation and readout together (the two are not
    separately identifiable from Pauli-frame circuits). Z rotations are error
    free. Standard errors come from the pseudo-inverse of the multinomial
    Fisher information; parameters touching its null space are reported in
    ``unidentifiable`` (mirror circuits fix the number of idles and pulses per
    depth, so for example idle and pulse depolarizing rates trade off).
    """
    if len(histograms) != len(circuits) or not circuits:
        raise FitError("need one histogram per circuit")
    n = circuits[0].n
    if n > 3:
        raise DomainError("Pauli-stochastic MLE is limited to n <= 3")
    keys = _pauli_keys(circuits)
    slots = [(k, lab) for k in keys for lab in all_pauli_labels(len(k.split("@")[1].split(",")))]
    nparam = len(slots) + n
    counts = [h.probabilities(n) * h.shots for h in histograms]

    def unpack(x):
        rates: dict[str, dict[str, float]] = {}
        for (k, lab), v in zip(slots, x[: len(slots)]):
            rates.setdefault(k, {})[lab] = float(v)
        return rates, tuple(float(v) for v in x[len(slots) :])

    def probs(x):
        rates, flips = unpack(x)
        model = ErrorModel({k: ErrorGeneratorSet({}, v) for k, v in rates.items()})
        return [measurement_distribution(evolve(initial_vector(n), c, model), n, 1.0, flips) for c in circuits]

    def nll(x):
        return -sum(float(np.sum(cnt * np.log(np.clip(p, 1e-300, None)))) for cnt, p in zip(counts, probs(x)))

    rng = np.random.default_rng(seed)
    bounds = [(0.0, max_rate)] * len(slots) + [(0.0, 0.5)] * n
    best = None
    for s in range(starts):
        x0 = np.full(nparam, 1e-3) if s == 0 else rng.uniform(0, 0.02, nparam)
        res = minimize(nll, x0, method="L-BFGS-B", bounds=bounds, options={"ftol": 1e-14, "gtol": 1e-9, "maxiter": 1000})
        if best is None or res.fun < best.fun:
            best = res
    x = best.x
    lo, hi = np.array(bounds).T
    pg = np.where((x <= lo) & (best.jac > 0) | (x >= hi) & (best.jac < 0), 0.0, best.jac)
    gnorm = float(np.linalg.norm(pg)) / max(sum(h.shots for h in histograms), 1)
    if not best.success or gnorm > 1e-6:
        warnings.warn(f"MLE did not converge ({best.message}); projected gradient norm per shot {gnorm:.3g}", RuntimeWarning)
    names = [f"{k}:{lab}" for k, lab in slots] + [f"spam@{q}" for q in range(n)]
    info = fisher_information(probs, x, [h.shots for h in histograms], bounds)
    w, v = np.linalg.eigh(info)
    null = v[:, w < 1e-9 * max(w.max(), 1e-300)]
    unident = tuple(nm for k, nm in enumerate(names) if null.size and np.abs(null[k]).max() > 1e-3)
    if unident:
        warnings.warn(f"Pauli-stochastic fit has unidentifiable parameters: {list(unident)}", RuntimeWarning)
    std = np.sqrt(np.clip(np.diag(np.linalg.pinv(info, rcond=1e-9, hermitian=True)), 0, None))
    rates, flips = unpack(x)
    return PauliFit(
        rates, flips, -float(best.fun), {nm: float(v) for nm, v in zip(names, std)}, tuple(names), info, unident
    )


def fisher_information(probs, x, shots, bounds, h: float = 1e-6) -> np.ndarray:
    """Multinomial Fisher information from central (one-sided at bounds) differences."""
    k = len(x)
    p0 = probs(x)
    grads = []
    for i in range(k):
        up, down = x.copy(), x.copy()
        up[i] = min(x[i] + h, bounds[i][1])
        down[i] = max(x[i] - h, bounds[i][0])
        grads.append([(a - b) / (up[i] - down[i]) for a, b in zip(probs(up), probs(down))])
    info = np.zeros((k, k))
    for c, (p, N) in enumerate(zip(p0, shots)):
        g = np.array([grads[i][c] for i in range(k)])
        info += N * (g / np.clip(p, 1e-300, None)) @ g.T
    return info
