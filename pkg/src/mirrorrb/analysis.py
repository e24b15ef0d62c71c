"""Observed polarizations, decay fits, bootstrap and the fidelity-decay oracle."""

from __future__ import annotations

import csv
import json
import math
import warnings
from collections import defaultdict
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
from scipy.optimize import least_squares

from .core import Circuit
from .engine import OutcomeHistogram, bitstring_to_index, circuit_ptm, polarization, sample_counts, simulate_distribution
from .errors import DataError, DomainError, FitError
from .mirroring import MirrorCircuit, build_mirror
from .noise import ErrorModel
from .sampling import SamplerSpec, sample_composite_circuit, sample_omega_circuit

DEFAULT_DEPTHS = (0, 2, 4, 8, 16, 32, 64)


def polarization_from_hamming(h: Sequence[float]) -> float:
    """``4**n/(4**n-1) sum_k (-1/2)**k h_k - 1/(4**n-1)``."""
    n = len(h) - 1
    d2 = 4**n
    s = sum((-0.5) ** k * hk for k, hk in enumerate(h))
    return d2 / (d2 - 1) * s - 1 / (d2 - 1)


def hamming_distribution(probs: np.ndarray, target: str) -> np.ndarray:
    n = len(target)
    t = bitstring_to_index(target)
    h = np.zeros(n + 1)
    for idx, p in enumerate(np.asarray(probs, dtype=float)):
        h[bin(idx ^ t).count("1")] += p
    return h


@dataclass(frozen=True)
class PolarizationSample:
    circuit_id: str
    benchmark_depth: int
    S: float
    hamming: tuple[float, ...]

    @property
    def n(self) -> int:
        return len(self.hamming) - 1


def observed_polarization(hist: OutcomeHistogram, target: str, circuit_id: str = "", depth: int = 0) -> PolarizationSample:
    n = len(target)
    if hist.shots == 0:
        raise DataError(f"empty histogram for circuit {circuit_id!r}")
    if hist.n != n:
        raise DataError(f"bitstrings have length {hist.n}, target has {n}")
    return polarization_sample(hist.probabilities(n), target, circuit_id, depth)


def polarization_sample(probs: np.ndarray, target: str, circuit_id: str = "", depth: int = 0) -> PolarizationSample:
    """Sample built from an exact (or empirical) output distribution."""
    h = hamming_distribution(probs, target)
    return PolarizationSample(circuit_id, int(depth), polarization_from_hamming(h), tuple(float(x) for x in h))


def rates_from_p(p: float, n: int) -> tuple[float, float]:
    """``(r, r_per_qubit)`` from a decay parameter."""
    d2 = 4**n
    r = (d2 - 1) * (1 - p) / d2
    return r, 1 - (1 - r) ** (1 / n)


def depth_means(samples: Iterable[PolarizationSample]) -> tuple[np.ndarray, np.ndarray, dict[int, list[float]]]:
    groups: dict[int, list[float]] = defaultdict(list)
    for s in samples:
        groups[s.benchmark_depth].append(s.S)
    depths = np.array(sorted(groups), dtype=float)
    means = np.array([np.mean(groups[int(d)]) for d in depths])
    return depths, means, dict(groups)


def sample_mirror_circuits(
    spec: SamplerSpec, depths: Sequence[int], K: int, rng: np.random.Generator
) -> list[MirrorCircuit]:
    """``K`` randomized mirror circuits per benchmark depth."""
    out = []
    for d in depths:
        if d % 2 or d < 0:
            raise DomainError(f"benchmark depth {d} must be even and non-negative")
        out.extend(build_mirror(sample_omega_circuit(spec, d // 2, rng), rng) for _ in range(K))
    return out


def mirror_samples(
    circuits: Sequence[MirrorCircuit],
    model: ErrorModel,
    shots: int | None = None,
    rng: np.random.Generator | None = None,
) -> list[PolarizationSample]:
    """Observed polarizations from exact distributions, or from ``shots`` samples of them."""
    out = []
    for i, mc in enumerate(circuits):
        probs = simulate_distribution(mc.circuit, model)
        if shots is not None:
            hist = sample_counts(probs, shots, rng or np.random.default_rng(i))
            probs = hist.probabilities(mc.n)
        out.append(polarization_sample(probs, mc.target_string, str(i), mc.benchmark_depth))
    return out


@dataclass(frozen=True)
class DecayFit:
    n: int
    A: float
    p: float
    r_omega: float
    r_per_qubit: float
    depths: tuple[int, ...]
    K: Mapping[int, int]
    std: Mapping[str, float] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "A": self.A,
            "p": self.p,
            "r_omega": self.r_omega,
            "r_per_qubit": self.r_per_qubit,
            "std": dict(self.std),
            "depths": list(self.depths),
            "K": {str(k): v for k, v in self.K.items()},
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "DecayFit":
        return cls(
            int(obj["n"]),
            float(obj["A"]),
            float(obj["p"]),
            float(obj["r_omega"]),
            float(obj["r_per_qubit"]),
            tuple(int(d) for d in obj["depths"]),
            {int(k): int(v) for k, v in obj["K"].items()},
            {k: float(v) for k, v in obj.get("std", {}).items()},
        )


def fit_exponential(depths: np.ndarray, means: np.ndarray, fix_amplitude: bool = False) -> tuple[float, float]:
    """Least-squares fit of ``A p**d`` with ``A, p`` in [0, 1]; returns ``(A, p)``."""
    depths = np.asarray(depths, dtype=float)
    means = np.asarray(means, dtype=float)
    if len(np.unique(depths)) < (1 if fix_amplitude else 2):
        raise FitError("need at least two distinct depths")
    if not np.all(np.isfinite(means)) or np.all(np.abs(means) < 1e-15):
        raise FitError(f"degenerate means {means.tolist()}")
    pos = means > 0
    a0, p0 = 1.0, 0.5
    if pos.sum() >= 2 and len(np.unique(depths[pos])) >= 2:
        slope, icpt = np.polyfit(depths[pos], np.log(means[pos]), 1)
        a0, p0 = math.exp(icpt), math.exp(slope)
    a0 = 1.0 if fix_amplitude else min(max(a0, 1e-6), 1.0)
    p0 = min(max(p0, 1e-6), 1.0)
    if fix_amplitude:
        res = least_squares(lambda x: x[0] ** depths - means, [p0], bounds=([0.0], [1.0]), xtol=1e-15, ftol=1e-15, gtol=1e-15)
        a, p = 1.0, float(res.x[0])
    else:
        res = least_squares(
            lambda x: x[0] * x[1] ** depths - means,
            [a0, p0],
            bounds=([0.0, 0.0], [1.0, 1.0]),
            xtol=1e-15,
            ftol=1e-15,
            gtol=1e-15,
        )
        if not res.success:
            raise FitError(f"decay fit failed: {res.message}")
        a, p = float(res.x[0]), float(res.x[1])
    # the solver keeps iterates strictly inside the box; p = 1 sits on its edge
    a1 = 1.0 if fix_amplitude else min(max(float(means.mean()), 0.0), 1.0)
    if np.sum((a1 - means) ** 2) <= np.sum((a * p**depths - means) ** 2):
        return a1, 1.0
    return a, p


def fit_decay(samples: Sequence[PolarizationSample]) -> DecayFit:
    """Fit per-depth mean observed polarizations to ``A p**d``."""
    samples = list(samples)
    if not samples:
        raise DataError("no samples to fit")
    n = samples[0].n
    if any(s.n != n for s in samples):
        raise DataError("samples from different qubit counts")
    depths, means, groups = depth_means(samples)
    a, p = fit_exponential(depths, means)
    r, rq = rates_from_p(p, n)
    return DecayFit(n, a, p, r, rq, tuple(int(d) for d in depths), {int(d): len(v) for d, v in groups.items()})


def bootstrap(
    samples: Sequence[PolarizationSample],
    resamples: int = 200,
    rng: np.random.Generator | None = None,
    fitter: Callable[[Sequence[PolarizationSample]], DecayFit] = fit_decay,
) -> dict[str, float]:
    """Non-parametric bootstrap over circuits within each depth."""
    if resamples < 50:
        raise DomainError("use at least 50 bootstrap resamples")
    rng = rng or np.random.default_rng(0)
    by_depth: dict[int, list[PolarizationSample]] = defaultdict(list)
    for s in samples:
        by_depth[s.benchmark_depth].append(s)
    keys = ("A", "p", "r_omega", "r_per_qubit")
    vals: dict[str, list[float]] = {k: [] for k in keys}
    failures = 0
    for _ in range(resamples):
        draw = []
        for d in sorted(by_depth):
            group = by_depth[d]
            draw.extend(group[i] for i in rng.integers(0, len(group), len(group)))
        try:
            f = fitter(draw)
        except FitError:
            failures += 1
            continue
        for k in keys:
            vals[k].append(getattr(f, k))
    if failures > 0.2 * resamples:
        warnings.warn(f"unstable bootstrap: {failures}/{resamples} refits failed", RuntimeWarning)
    return {k: float(np.std(v, ddof=1)) if len(v) > 1 else float("nan") for k, v in vals.items()}


def fit_with_bootstrap(samples: Sequence[PolarizationSample], resamples: int = 200, seed: int = 0) -> DecayFit:
    fit = fit_decay(samples)
    return replace(fit, std=bootstrap(samples, resamples, np.random.default_rng(seed)))


# --------------------------------------------------------------------------- fidelity-decay oracle


@dataclass(frozen=True)
class EpsilonEstimate:
    n: int
    p_rc: float
    epsilon_omega: float
    epsilon_per_qubit: float
    depths: tuple[int, ...]
    mean_polarizations: tuple[float, ...]

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "p_rc": self.p_rc,
            "epsilon_omega": self.epsilon_omega,
            "epsilon_per_qubit": self.epsilon_per_qubit,
            "depths": list(self.depths),
            "mean_polarizations": list(self.mean_polarizations),
        }


@dataclass(frozen=True)
class OracleCircuit:
    """An Omega-distributed circuit of ``depth`` composite layers with its ideal PTM."""

    depth: int
    circuit: Circuit
    ideal_ptm: np.ndarray

    @classmethod
    def of(cls, depth: int, circuit: Circuit) -> "OracleCircuit":
        return cls(int(depth), circuit, circuit_ptm(circuit, ErrorModel()))

    def polarization(self, model: ErrorModel) -> float:
        noisy = circuit_ptm(self.circuit, model)
        fid = float(np.sum(self.ideal_ptm * noisy)) / noisy.shape[0]
        return polarization(fid, self.circuit.n)


def circuit_polarization(c: Circuit, model: ErrorModel) -> float:
    """Polarization of the error map of ``c`` (noisy PTM against ideal)."""
    return OracleCircuit.of(0, c).polarization(model)


def sample_oracle_circuits(
    spec: SamplerSpec, depths: Sequence[int], K: int, rng: np.random.Generator
) -> list[OracleCircuit]:
    return [OracleCircuit.of(d, sample_composite_circuit(spec, int(d), rng)) for d in depths for _ in range(K)]


def epsilon_from_polarizations(n: int, depths: Sequence[int], means: Sequence[float]) -> EpsilonEstimate:
    _, p = fit_exponential(np.asarray(depths), np.asarray(means), fix_amplitude=True)
    eps, eps_q = rates_from_p(p, n)
    return EpsilonEstimate(n, p, eps, eps_q, tuple(int(d) for d in depths), tuple(float(m) for m in means))


def epsilon_omega_oracle(
    spec: SamplerSpec,
    model: ErrorModel,
    depths: Sequence[int] = DEFAULT_DEPTHS,
    K: int = 30,
    rng: np.random.Generator | None = None,
    circuits: Sequence[OracleCircuit] | None = None,
) -> EpsilonEstimate:
    """Fidelity decay of circuits of ``d`` composite layers, fitted to ``p_rc**d``.

    Pass ``circuits`` to reuse one sample (and its ideal PTMs) across models.
    """
    if circuits is None:
        rng = rng or np.random.default_rng(spec.seed)
        circuits = sample_oracle_circuits(spec, depths, K, rng)
    groups: dict[int, list[float]] = defaultdict(list)
    for oc in circuits:
        groups[oc.depth].append(oc.polarization(model))
    ds = sorted(groups)
    return epsilon_from_polarizations(spec.n, ds, [float(np.mean(groups[d])) for d in ds])


def relative_error(r: DecayFit, eps: EpsilonEstimate) -> tuple[float, float]:
    """``(r_perQ - eps_perQ) / eps_perQ`` and its bootstrap standard error."""
    if r.n != eps.n:
        raise DataError("fit and oracle have different qubit counts")
    if abs(eps.epsilon_per_qubit) < 1e-12:
        raise DomainError("relative error undefined for zero reference rate")
    delta = (r.r_per_qubit - eps.epsilon_per_qubit) / eps.epsilon_per_qubit
    sigma = r.std.get("r_per_qubit", float("nan")) / eps.epsilon_per_qubit
    return float(delta), float(sigma)


def write_depth_table(path, samples: Sequence[PolarizationSample]) -> None:
    _, _, groups = depth_means(samples)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["depth", "mean_S", "std_S", "K", "q05", "q25", "q50", "q75", "q95"])
        for d in sorted(groups):
            v = np.array(groups[d])
            qs = np.quantile(v, [0.05, 0.25, 0.5, 0.75, 0.95])
            std = float(np.std(v, ddof=1)) if len(v) > 1 else 0.0
            w.writerow([d, repr(float(v.mean())), repr(std), len(v), *(repr(float(q)) for q in qs)])


def write_fit_report(path, fit: DecayFit) -> None:
    with open(path, "w") as fh:
        json.dump(fit.to_json(), fh, indent=2, sort_keys=True)
