"""Acceptance criteria 1-10, one test per criterion.

Each test records a verdict through the ``criterion`` fixture; the terminal
summary prints one PASS/FAIL line per criterion.
"""

import itertools
import time
from functools import lru_cache

import numpy as np
import pytest
from scipy.stats import binomtest

from depol_data import TRUE_DEPOL, depolarizing_records
from mirrorrb.analysis import (
    DEFAULT_DEPTHS,
    PolarizationSample,
    epsilon_omega_oracle,
    fit_decay,
    fit_with_bootstrap,
    mirror_samples,
    relative_error,
    sample_mirror_circuits,
)
from mirrorrb.core import Circuit, ConnectivityGraph, PauliString
from mirrorrb.diagnostics import (
    dressed_rates_from_model,
    fit_depolarizing,
    predict_crosstalk_free,
    two_densities_forward,
    two_densities_heuristic,
)
from mirrorrb.engine import bitstring_to_index, circuit_ptm, polarization, simulate_distribution, twirled_polarization
from mirrorrb.mirroring import build_mirror, compile_mirror
from mirrorrb.noise import BOTH, STOCHASTIC, CrosstalkTerm, ErrorGeneratorSet, ErrorModel, sample_random_model
from mirrorrb.sampling import CLIFFORD24, HAAR, GateSetSpec, SamplerSpec, sample_omega_circuit
from test_engine import random_channel_ptm

CS_SET = GateSetSpec.named(HAAR, "cs", "csdg")
K = 100
ORACLE_K = 100
MODELS = 30
# overall strengths used for the random-model batches, per register size
P_RANGE = {1: (0.001, 0.2475), 2: (0.0001, 0.075), 4: (0.0001, 0.075)}


def register(n, gate_set=CS_SET, xi=0.5, graph=None, seed=0):
    if n == 1:
        return SamplerSpec(gate_set, ConnectivityGraph(1, frozenset()), 0.0, seed)
    return SamplerSpec(gate_set, graph or ConnectivityGraph.complete(n), xi, seed)


def model_delta(spec, model, rng, k=K, oracle_k=ORACLE_K):
    circuits = sample_mirror_circuits(spec, DEFAULT_DEPTHS, k, rng)
    fit = fit_decay(mirror_samples(circuits, model))
    eps = epsilon_omega_oracle(spec, model, K=oracle_k, rng=rng)
    return relative_error(fit, eps)[0]


@lru_cache(maxsize=None)
def batch(n, family):
    """Relative errors of r_omega against the oracle over a sweep of random models."""
    rng = np.random.default_rng(1000 * n + (family == BOTH))
    spec = register(n)
    out = []
    for p in np.linspace(*P_RANGE[n], MODELS):
        model = sample_random_model(family, float(p), CS_SET, spec.graph, rng)
        out.append(model_delta(spec, model, rng))
    return np.array(out)


@pytest.mark.criterion(1)
def test_criterion_1_noiseless_mirrors_hit_target(criterion):
    rng = np.random.default_rng(1)
    gate_sets = [CS_SET, GateSetSpec.named(HAAR, "cz"), GateSetSpec.named(CLIFFORD24, "cz"), GateSetSpec.named(HAAR, "cnot")]
    cases = list(itertools.product(gate_sets, range(1, 5)))
    start = time.perf_counter()
    worst = 0.0
    for i in range(500):
        gs, n = cases[i % len(cases)]
        half = int(rng.integers(0, 9))
        mc = build_mirror(sample_omega_circuit(register(n, gs), half, rng), rng)
        probs = simulate_distribution(mc.circuit)
        worst = max(worst, abs(1 - probs[bitstring_to_index(mc.target_string)]))
    elapsed = time.perf_counter() - start
    ok = worst < 1e-10 and elapsed < 60
    criterion(1, ok, f"500 circuits, max |1 - P(target)| = {worst:.1e}, {elapsed:.1f} s")
    assert ok


def _batch_summary(deltas):
    a = np.abs(deltas)
    return a.mean(), a.max()


@pytest.mark.criterion(2)
@pytest.mark.parametrize("n", [1, 2])
def test_criterion_2_stochastic_models(criterion, n):
    mean, worst = _batch_summary(batch(n, STOCHASTIC))
    ok = mean < 0.02 and worst < 0.06
    criterion(2, ok, f"n={n}: mean |d| = {mean:.4f}, max |d| = {worst:.4f}")
    assert ok


@pytest.mark.criterion(3)
@pytest.mark.parametrize("n", [1, 2])
def test_criterion_3_stochastic_and_hamiltonian_models(criterion, n):
    mean, worst = _batch_summary(batch(n, BOTH))
    ok = mean < 0.05 and worst < 0.15
    criterion(3, ok, f"n={n}: mean |d| = {mean:.4f}, max |d| = {worst:.4f}")
    assert ok


@pytest.mark.criterion(3)
def test_criterion_3_four_qubit_spot_check(criterion):
    rng = np.random.default_rng(4)
    spec = register(4)
    deltas = []
    for p in np.linspace(*P_RANGE[4], 5):
        model = sample_random_model(BOTH, float(p), CS_SET, spec.graph, rng)
        deltas.append(model_delta(spec, model, rng, k=50, oracle_k=30))
    worst = float(np.max(np.abs(deltas)))
    ok = worst < 0.15
    criterion(3, ok, f"n=4 spot check: max |d| = {worst:.4f}")
    assert ok


@pytest.mark.criterion(4)
def test_criterion_4_underestimation_bias(criterion):
    deltas = batch(2, STOCHASTIC)
    positive = int((deltas > 0).sum())
    # a significant excess of overestimates would contradict the bias direction
    p_over = binomtest(positive, len(deltas), 0.5, alternative="greater").pvalue
    p_under = binomtest(positive, len(deltas), 0.5, alternative="less").pvalue
    ok = deltas.mean() <= 0 and p_over > 0.05
    criterion(
        4,
        ok,
        f"mean d = {deltas.mean():+.4f}, {positive}/{len(deltas)} positive, "
        f"p(over) = {p_over:.3f}, p(under) = {p_under:.3f}",
    )
    assert ok


@pytest.mark.criterion(5)
def test_criterion_5_clifford_twirl_is_diagonal(criterion):
    rng = np.random.default_rng(5)
    spec = register(2, GateSetSpec.named(CLIFFORD24, "cz"))
    half = 1
    omega = sample_omega_circuit(spec, half, rng)
    while not omega.two_qubit_layers()[0].gates:
        omega = sample_omega_circuit(spec, half, rng)
    err = ErrorGeneratorSet(dict(zip("XYZ", rng.normal(0, 0.05, 3))), dict(zip("XYZ", rng.uniform(0, 0.01, 3))))
    model = ErrorModel({f"u3@{q}": err for q in range(2)})
    paulis = [PauliString("".join(t)) for t in itertools.product("IXYZ", repeat=2)]
    total = np.zeros((16, 16))
    count = 0
    for ps in itertools.product(paulis, repeat=2 * half + 2):
        c = compile_mirror(omega, list(ps)).circuit
        # the last layer's error is not twirled; it is part of SPAM
        body, last = Circuit(2, c.layers[:-1]), Circuit(2, c.layers[-1:])
        total += circuit_ptm(c).T @ circuit_ptm(last) @ circuit_ptm(body, model)
        count += 1
    avg = total / count
    off = float(np.abs(avg - np.diag(np.diag(avg))).max())
    ok = off < 1e-10
    criterion(5, ok, f"{count} Pauli assignments, max off-diagonal = {off:.1e}")
    assert ok


def _zz_model(cs_rate, csdg_rate):
    gates = {"cs@0,1": ErrorGeneratorSet({"ZZ": cs_rate})}
    if csdg_rate:
        gates["csdg@0,1"] = ErrorGeneratorSet({"ZZ": csdg_rate})
    return ErrorModel(gates)


@pytest.mark.criterion(6)
def test_criterion_6_insensitivity_to_equal_zz_rates(criterion):
    alpha = 0.02
    circuits = sample_mirror_circuits(register(2), DEFAULT_DEPTHS, 50, np.random.default_rng(6))
    equal = fit_decay(mirror_samples(circuits, _zz_model(alpha, alpha))).r_omega
    sensitive = fit_decay(mirror_samples(circuits, _zz_model(2 * alpha, 0.0))).r_omega
    ratio = equal / sensitive
    ok = ratio < 0.2
    criterion(6, ok, f"r(equal) / r(cs only) = {ratio:.3f}")
    assert ok


@pytest.mark.criterion(7)
@pytest.mark.parametrize("seed", [0, 1])
def test_criterion_7_two_design_identity(criterion, seed):
    ptm = random_channel_ptm(2, np.random.default_rng(seed))
    exact = polarization(np.trace(ptm) / 16, 2)
    diff = abs(twirled_polarization(ptm, 2) - exact)
    ok = diff < 1e-10
    criterion(7, ok, f"seed {seed}: |twirled - exact| = {diff:.1e}")
    assert ok


def _spectator_zz(graph, n, rate):
    """ZZ coupling between each gate qubit and its outside neighbour, fired by every 2q gate."""
    terms = []
    for i, j in graph.sorted_edges():
        for name in ("cs", "csdg"):
            for q, s in ((i, i - 1), (j, j + 1)):
                if 0 <= s < n:
                    terms.append(CrosstalkTerm(f"{name}@{i},{j}", tuple(sorted((q, s))), ErrorGeneratorSet({"ZZ": rate})))
    return tuple(terms)


@pytest.mark.criterion(8)
def test_criterion_8_crosstalk_prediction(criterion):
    rng = np.random.default_rng(8)
    spec = register(4, graph=ConnectivityGraph.line(4))
    model = sample_random_model(STOCHASTIC, 0.01, CS_SET, spec.graph, rng)
    circuits = sample_mirror_circuits(spec, DEFAULT_DEPTHS, 30, rng)

    pred = predict_crosstalk_free(dressed_rates_from_model(model, spec, rng=rng), spec, M=20000, rng=rng)
    fit = fit_with_bootstrap(mirror_samples(circuits, model), 100)
    sigmas = abs(fit.r_omega - pred) / fit.std["r_omega"]
    ok_a = sigmas < 3
    criterion(8, ok_a, f"(a) r_obs = {fit.r_omega:.4f}, r_pred = {pred:.4f}, {sigmas:.2f} sigma")

    noisy = ErrorModel(model.gates, crosstalk=_spectator_zz(spec.graph, 4, 0.1))
    pred_x = predict_crosstalk_free(dressed_rates_from_model(noisy, spec, rng=rng), spec, M=20000, rng=rng)
    ratio = fit_decay(mirror_samples(circuits, noisy)).r_omega / pred_x
    ok_b = ratio > 1.2
    criterion(8, ok_b, f"(b) observed/predicted = {ratio:.2f}")
    assert ok_a and ok_b


@pytest.mark.criterion(9)
def test_criterion_9_two_densities(criterion):
    grid = np.linspace(0, 0.2, 21)
    worst = max(
        max(abs(a - e1), abs(b - e2))
        for e1, e2 in itertools.product(grid, grid)
        for a, b in [two_densities_heuristic(*two_densities_forward(e1, e2))]
    )
    ok_trip = worst < 1e-12
    criterion(9, ok_trip, f"round trip max error {worst:.1e}")

    rng = np.random.default_rng(9)
    graph = ConnectivityGraph.complete(2)
    model = sample_random_model(STOCHASTIC, 0.02, CS_SET, graph, rng)
    r = []
    for xi in (0.5, 0.125):
        spec = SamplerSpec(CS_SET, graph, xi, 0)
        r.append(fit_decay(mirror_samples(sample_mirror_circuits(spec, DEFAULT_DEPTHS, 150, rng), model)).r_omega)
    _, eps2 = two_densities_heuristic(*r)
    direct = dressed_rates_from_model(model, SamplerSpec(CS_SET, graph, 0.5, 0), samples=2000, rng=rng).pair_rates[(0, 1)]
    rel = abs(eps2 / direct - 1)
    ok_model = rel < 0.1
    criterion(9, ok_model, f"eps2 = {eps2:.4f} vs dressed {direct:.4f} ({100 * rel:.1f}%)")
    assert ok_trip and ok_model


@pytest.mark.criterion(10)
def test_criterion_10_depolarizing_fit(criterion):
    recs = depolarizing_records(TRUE_DEPOL, np.random.default_rng(100))
    fit = fit_depolarizing(recs, resamples=100, seed=1)
    z = {k: abs(fit.gate_rates[k] - v) / fit.std[k] for k, v in TRUE_DEPOL.gate_rates.items()}
    z.update({f"readout@{q}": abs(fit.readout_rates[q] - v) / fit.std[f"readout@{q}"] for q, v in TRUE_DEPOL.readout_rates.items()})
    ok_fit = max(z.values()) < 2
    criterion(10, ok_fit, f"worst rate at {max(z.values()):.2f} sigma")

    depths = np.arange(0, 66, 2)
    a, p = 0.93, 0.964
    samples = [PolarizationSample(f"d{d}", int(d), a * p**d, (0.0,) * 3) for d in depths]
    f = fit_decay(samples)
    err = max(abs(f.A - a), abs(f.p - p))
    ok_exact = err < 1e-6
    criterion(10, ok_exact, f"decay fit error {err:.1e}")
    assert ok_fit and ok_exact
