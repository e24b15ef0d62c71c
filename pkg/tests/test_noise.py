import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from mirrorrb.core import Circuit, ConnectivityGraph, Gate, Layer, ONE_QUBIT, TWO_QUBIT, rotation
from mirrorrb.engine import initial_vector, measurement_distribution
from mirrorrb.errors import DomainError, ModelError
from mirrorrb.noise import (
    BOTH,
    HAMILTONIAN,
    STOCHASTIC,
    Channel,
    CrosstalkTerm,
    ErrorGeneratorSet,
    ErrorModel,
    all_pauli_labels,
    channel_of_gate,
    gate_ptm,
    generator_matrix,
    sample_random_model,
    unitary_ptm,
)
from mirrorrb.sampling import HAAR, GateSetSpec

CS_SET = GateSetSpec.named(HAAR, "cs", "csdg")


def test_stochastic_x_generator():
    np.testing.assert_allclose(generator_matrix("S", "X"), np.diag([0, 0, -2, -2]), atol=1e-14)


@pytest.mark.parametrize("theta", [0.3, -1.1, math.pi])
def test_hamiltonian_z_exponentiates_to_rotation(theta):
    ptm = ErrorGeneratorSet({"Z": theta / 2}).ptm()
    np.testing.assert_allclose(ptm, unitary_ptm(rotation("Z", theta)), atol=1e-12)


@pytest.mark.parametrize("kind", ["H", "S"])
@pytest.mark.parametrize("label", all_pauli_labels(2))
def test_generators_have_zero_top_row(kind, label):
    assert np.all(generator_matrix(kind, label)[0] == 0)


def test_identity_label_rejected():
    with pytest.raises(DomainError):
        generator_matrix("S", "II")
    with pytest.raises(DomainError):
        ErrorGeneratorSet({}, {"I": 0.1})


def test_negative_stochastic_rate_rejected():
    with pytest.raises(ModelError):
        ErrorGeneratorSet({}, {"X": -0.01})


def test_empty_set_gives_ideal_gate():
    g = Gate.cprot("Z", math.pi / 2, 0, 1)
    np.testing.assert_allclose(gate_ptm(ErrorModel(), g), unitary_ptm(g.matrix()), atol=1e-14)


@pytest.mark.parametrize("eps", [0.001, 0.05, 0.4])
def test_stochastic_idle_closed_form(eps):
    model = ErrorModel({"idle@0": ErrorGeneratorSet({}, {"X": eps})})
    delta = (1 - math.exp(-2 * eps)) / 2
    ch = channel_of_gate(model, Gate.idle(0))
    np.testing.assert_allclose(ch.ptm, np.diag([1, 1, 1 - 2 * delta, 1 - 2 * delta]), atol=1e-14)
    assert 1 - ch.entanglement_fidelity() == pytest.approx(delta, abs=1e-14)


def test_zz_hamiltonian_on_cs():
    alpha = 0.07
    g = Gate.cprot("Z", math.pi / 2, 0, 1)
    model = ErrorModel({"cs@0,1": ErrorGeneratorSet({"ZZ": alpha})})
    zz = np.diag([1, -1, -1, 1])
    direct = np.diag(np.exp(-1j * alpha * np.diag(zz))) @ g.matrix()
    np.testing.assert_allclose(gate_ptm(model, g), unitary_ptm(direct), atol=1e-12)


def test_model_rejects_mismatched_labels():
    with pytest.raises(ModelError):
        ErrorModel({"cs@0,1": ErrorGeneratorSet({}, {"X": 0.01})})
    with pytest.raises(ModelError):
        ErrorModel({"idle": ErrorGeneratorSet({}, {"X": 0.01})})
    with pytest.raises(ModelError):
        CrosstalkTerm("cs@0,1", (2, 3), ErrorGeneratorSet({"Z": 0.1}))


def test_spam_domain():
    with pytest.raises(DomainError):
        ErrorModel(spam_gamma=1.2)
    with pytest.raises(DomainError):
        ErrorModel(readout_flips=(0.1, -0.1))


def test_spam_examples():
    vec = initial_vector(1)
    np.testing.assert_allclose(measurement_distribution(vec, 1, 1.0, [0.0]), [1, 0], atol=1e-14)
    np.testing.assert_allclose(measurement_distribution(vec, 1, 0.0, [0.0]), [0.5, 0.5], atol=1e-14)
    np.testing.assert_allclose(measurement_distribution(initial_vector(2), 2, 1.0, [0.02, 0.0]), [0.98, 0.02, 0, 0], atol=1e-14)


@pytest.mark.parametrize("family", [STOCHASTIC, HAMILTONIAN, BOTH])
def test_random_model_families(family):
    rng = np.random.default_rng(1)
    graph = ConnectivityGraph.line(3)
    for _ in range(200):
        p = rng.uniform(0, 0.02)
        model = sample_random_model(family, p, CS_SET, graph, rng)
        es = model.gates["cs@0,1"]
        if family == STOCHASTIC:
            assert not es.hamiltonian
        if family == HAMILTONIAN:
            assert not es.stochastic
        s = sum(es.stochastic.values())
        h2 = sum(v * v for v in es.hamiltonian.values())
        assert s + h2 == pytest.approx(p, abs=1e-12)
        x = model.gates["xhalfpi@1"]
        s1 = sum(x.stochastic.values())
        h1 = sum(v * v for v in x.hamiltonian.values())
        # one-qubit totals scale by 0.1 before squaring the Hamiltonian part
        assert s1 == pytest.approx(0.1 * s, abs=1e-12)
        assert h1 == pytest.approx(0.01 * h2, abs=1e-12)


def test_stochastic_calibration():
    rng = np.random.default_rng(2)
    graph = ConnectivityGraph.line(2)
    p = 0.01
    two, one = [], []
    for _ in range(100):
        model = sample_random_model(STOCHASTIC, p, CS_SET, graph, rng)
        two.append(1 - Channel(model.gates["cs@0,1"].ptm()).entanglement_fidelity())
        one.append(1 - Channel(model.gates["xhalfpi@0"].ptm()).entanglement_fidelity())
    assert abs(np.mean(two) / p - 1) < 0.25
    assert abs(np.mean(one) / (0.1 * p) - 1) < 0.25


def test_stochastic_models_give_pauli_channels():
    rng = np.random.default_rng(3)
    model = sample_random_model(STOCHASTIC, 0.02, CS_SET, ConnectivityGraph.line(3), rng)
    for es in model.gates.values():
        ptm = es.ptm()
        assert np.allclose(ptm, np.diag(np.diag(ptm)), atol=1e-14)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.sampled_from([STOCHASTIC, HAMILTONIAN, BOTH]))
def test_channels_are_cptp_and_match_choi_fidelity(seed, family):
    rng = np.random.default_rng(seed)
    model = sample_random_model(family, 0.03, CS_SET, ConnectivityGraph.line(2), rng)
    mj = model.to_json()
    cases = [
        (2, Gate.cprot("Z", math.pi / 2, 0, 1), TWO_QUBIT, {"cs@0,1": mj["gates"]["cs@0,1"]}),
        (1, Gate.u3(0, *rng.uniform(-3, 3, 3)), ONE_QUBIT, {"xhalfpi@0": mj["gates"]["xhalfpi@0"]}),
        (1, Gate.idle(0), ONE_QUBIT, {"idle@0": mj["gates"]["idle@0"]}),
    ]
    for n, g, arity, gates in cases:
        ch = channel_of_gate(model, g)
        assert ch.is_cptp() and ch.is_trace_preserving()
        ideal = unitary_ptm(g.matrix())
        fid = float(np.trace(ideal.T @ ch.ptm)) / 4**n
        cj = Circuit(n, (Layer(n, (g,), arity),)).to_json()
        if g.kind == "idle":
            cj["layers"] = [[]]
        assert fid == pytest.approx(oracles.choi_fidelity(cj, {"gates": gates}), abs=1e-12)


def test_model_json_round_trip():
    rng = np.random.default_rng(4)
    model = sample_random_model(BOTH, 0.02, CS_SET, ConnectivityGraph.line(3), rng)
    model = ErrorModel(
        model.gates,
        0.97,
        (0.01, 0.02, 0.0),
        (CrosstalkTerm("cs@0,1", (2,), ErrorGeneratorSet({"Z": 0.01})),),
    )
    back = ErrorModel.from_json(json.loads(json.dumps(model.to_json())))
    assert back.to_json() == model.to_json()
    assert not back.is_stochastic()
