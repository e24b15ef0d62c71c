"""Command-line pipeline: design, run, analyze, oracle, predict and fits.

Every stage reads and writes files, so runs can be resumed or inspected:

    mirrorrb design design.json --out bundle
    mirrorrb run bundle --model model.json --shots 1000 --out bundle/counts.csv
    mirrorrb analyze bundle --hist bundle/counts.csv --out bundle/fit
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .analysis import (
    DEFAULT_DEPTHS,
    DecayFit,
    epsilon_omega_oracle,
    fit_with_bootstrap,
    observed_polarization,
    write_depth_table,
    write_fit_report,
)
from .diagnostics import (
    DepolarizingRecord,
    DressedRates,
    crosstalk_gap,
    dressed_layer_labels,
    fit_depolarizing,
    fit_pauli_stochastic,
    predict_crosstalk_free,
    two_densities_heuristic,
)
from .engine import (
    read_histograms_csv,
    sample_counts,
    simulate_distribution,
    simulate_trajectories,
    write_histograms_csv,
)
from .errors import CapacityError, ConfigurationError, FitError, MirrorRBError, UnsupportedModelError
from .mirroring import MirrorCircuit, build_mirror
from .noise import ErrorModel
from .sampling import SamplerSpec, circuit_rng, sample_omega_circuit

log = logging.getLogger("mirrorrb")

EXIT_OK, EXIT_USER, EXIT_CAPACITY, EXIT_NUMERICAL = 0, 2, 3, 4


@dataclass(frozen=True)
class ExperimentDesign:
    sampler: SamplerSpec
    depths: tuple[int, ...] = DEFAULT_DEPTHS
    K: int = 30
    shots: int = 1000
    seed: int = 0
    out: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "depths", tuple(int(d) for d in self.depths))
        if not self.depths:
            raise ConfigurationError("no benchmark depths")
        for d in self.depths:
            if d < 0 or d % 2:
                raise ConfigurationError(f"benchmark depth {d} must be even and >= 0")
        if self.K < 1:
            raise ConfigurationError("K must be >= 1")
        if self.shots < 1:
            raise ConfigurationError("shots must be >= 1")

    def to_json(self) -> dict:
        obj = {"sampler": self.sampler.to_json(), "depths": list(self.depths), "K": self.K, "shots": self.shots, "seed": self.seed}
        if self.out is not None:
            obj["out"] = self.out
        return obj

    @classmethod
    def from_json(cls, obj) -> "ExperimentDesign":
        try:
            return cls(
                SamplerSpec.from_json(obj["sampler"]),
                tuple(obj.get("depths", DEFAULT_DEPTHS)),
                int(obj.get("K", 30)),
                int(obj.get("shots", 1000)),
                int(obj.get("seed", 0)),
                obj.get("out"),
            )
        except (KeyError, TypeError) as exc:
            raise ConfigurationError(f"malformed design: {exc}") from exc


def circuit_id(depth: int, k: int) -> str:
    return f"d{depth:04d}_k{k:04d}"


# --------------------------------------------------------------------------- file helpers


def _read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigurationError(f"no such file: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path} is not valid JSON: {exc}") from exc


def _write_json(path, obj) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_bundle(bundle) -> tuple[ExperimentDesign, list[tuple[str, MirrorCircuit]]]:
    """Design and ``(circuit_id, circuit)`` pairs in manifest order."""
    bundle = Path(bundle)
    manifest = _read_json(bundle / "manifest.json")
    design = ExperimentDesign.from_json(manifest["design"])
    circuits = [(e["id"], MirrorCircuit.from_json(_read_json(bundle / e["file"]))) for e in manifest["circuits"]]
    return design, circuits


def _parse_qubits(text: str | None) -> list[int] | None:
    if not text:
        return None
    try:
        return [int(x) for x in text.split(",")]
    except ValueError as exc:
        raise ConfigurationError(f"bad qubit list {text!r}") from exc


# --------------------------------------------------------------------------- commands


def cmd_design(args) -> int:
    design = ExperimentDesign.from_json(_read_json(args.design))
    if args.seed is not None:
        design = ExperimentDesign(design.sampler, design.depths, design.K, design.shots, args.seed, design.out)
    out = Path(args.out or design.out or "bundle")
    entries = []
    for d in design.depths:
        for k in range(design.K):
            rng = circuit_rng(design.seed, d, k)
            omega = sample_omega_circuit(design.sampler, d // 2, rng)
            mc = build_mirror(omega, rng, seed_path=(design.seed, d, k))
            cid = circuit_id(d, k)
            fname = f"circuits/{cid}.json"
            _write_json(out / fname, mc.to_json())
            entries.append({"id": cid, "depth": d, "file": fname, "target": mc.target_string})
    _write_json(out / "manifest.json", {"design": design.to_json(), "circuits": entries})
    log.info("wrote %d circuits to %s", len(entries), out)
    return EXIT_OK


def _run_one(task):
    cid, mc_json, model_json, mode, shots, seed, index = task
    mc = MirrorCircuit.from_json(mc_json)
    model = ErrorModel.from_json(model_json)
    rng = circuit_rng(seed, index)
    if mode == "dense":
        hist = sample_counts(simulate_distribution(mc.circuit, model), shots, rng)
    else:
        hist = simulate_trajectories(mc.circuit, model, shots, rng)
    return cid, mc.benchmark_depth, hist


def cmd_run(args) -> int:
    design, circuits = load_bundle(args.bundle)
    model_json = _read_json(args.model) if args.model else {}
    ErrorModel.from_json(model_json)  # validate before spawning workers
    shots = args.shots or design.shots
    seed = design.seed if args.seed is None else args.seed
    if args.mode == "trajectory" and not ErrorModel.from_json(model_json).is_stochastic():
        raise UnsupportedModelError("trajectory mode needs a stochastic-only error model")
    tasks = [(cid, mc.to_json(), model_json, args.mode, shots, seed, i) for i, (cid, mc) in enumerate(circuits)]
    if args.workers > 1:
        with ProcessPoolExecutor(args.workers) as pool:
            results = list(pool.map(_run_one, tasks))
    else:
        results = []
        for i, t in enumerate(tasks):
            results.append(_run_one(t))
            if (i + 1) % max(1, len(tasks) // 10) == 0:
                log.info("simulated %d/%d circuits", i + 1, len(tasks))
    results.sort(key=lambda r: r[0])
    out = Path(args.out or Path(args.bundle) / "counts.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    write_histograms_csv(out, results)
    log.info("wrote %s", out)
    return EXIT_OK


def _samples_from(bundle, hist_path):
    design, circuits = load_bundle(bundle)
    hists = read_histograms_csv(hist_path)
    if not hists:
        raise ConfigurationError(f"{hist_path} holds no data")
    samples = []
    missing = 0
    for cid, mc in circuits:
        if cid not in hists:
            missing += 1
            continue
        samples.append(observed_polarization(hists[cid][1], mc.target_string, cid, mc.benchmark_depth))
    if missing:
        warnings.warn(f"{missing} circuits have no data; partial analysis", RuntimeWarning)
    depths = {s.benchmark_depth for s in samples}
    if len(depths) < 2:
        raise ConfigurationError("need data at two or more benchmark depths")
    absent = sorted(set(design.depths) - depths)
    if absent:
        warnings.warn(f"no data at depths {absent}; partial analysis", RuntimeWarning)
    return design, circuits, hists, samples


def cmd_analyze(args) -> int:
    _, _, _, samples = _samples_from(args.bundle, args.hist or Path(args.bundle) / "counts.csv")
    fit = fit_with_bootstrap(samples, args.resamples, args.seed or 0)
    out = Path(args.out or Path(args.bundle) / "analysis")
    out.mkdir(parents=True, exist_ok=True)
    write_fit_report(out / "fit.json", fit)
    write_depth_table(out / "depths.csv", samples)
    print(json.dumps({"r_omega": fit.r_omega, "r_per_qubit": fit.r_per_qubit, "std": fit.std}, sort_keys=True))
    return EXIT_OK


def cmd_oracle(args) -> int:
    spec = SamplerSpec.from_json(_read_json(args.spec))
    model = ErrorModel.from_json(_read_json(args.model))
    seed = spec.seed if args.seed is None else args.seed
    est = epsilon_omega_oracle(spec, model, args.depths, args.K, np.random.default_rng(seed))
    _emit(args.out, est.to_json())
    return EXIT_OK


def cmd_predict(args) -> int:
    spec = SamplerSpec.from_json(_read_json(args.spec))
    rates = DressedRates.from_json(_read_json(args.rates))
    seed = spec.seed if args.seed is None else args.seed
    if args.sweep:
        rows = []
        for size in range(1, spec.n + 1):
            for subset in spec.graph.connected_subsets(size):
                r = predict_crosstalk_free(rates, spec, subset, args.M, np.random.default_rng(seed))
                rows.append({"qubits": list(subset), "r_pred": r})
        _emit(args.out, {"M": args.M, "subsets": rows})
        return EXIT_OK
    qubits = _parse_qubits(args.qubits)
    r_pred = predict_crosstalk_free(rates, spec, qubits, args.M, np.random.default_rng(seed))
    report = {"r_pred": r_pred, "M": args.M, "r_obs": None, "gap": None, "ratio": None}
    if args.fit:
        fit = DecayFit.from_json(_read_json(args.fit))
        gap, ratio = crosstalk_gap(fit, r_pred)
        report.update(r_obs=fit.r_omega, gap=gap, ratio=ratio)
    _emit(args.out, report)
    return EXIT_OK


def cmd_two_densities(args) -> int:
    eps1, eps2 = two_densities_heuristic(args.r_half, args.r_eighth)
    _emit(args.out, {"eps_idle_layer": eps1, "eps_gate": eps2})
    return EXIT_OK


def cmd_fit_depol(args) -> int:
    records = []
    for bundle, hist, qubits in args.data:
        _, circuits, hists, _ = _samples_from(bundle, hist)
        qs = _parse_qubits(qubits) if qubits != "-" else None
        for cid, mc in circuits:
            if cid not in hists:
                continue
            s = observed_polarization(hists[cid][1], mc.target_string, cid, mc.benchmark_depth)
            q = tuple(qs) if qs else tuple(range(mc.n))
            records.append(DepolarizingRecord(q, dressed_layer_labels(mc.circuit, q), s.S))
    model = fit_depolarizing(records, args.resamples, args.seed or 0)
    _emit(args.out, model.to_json())
    return EXIT_OK


def cmd_fit_pauli(args) -> int:
    _, circuits = load_bundle(args.bundle)
    hists = read_histograms_csv(args.hist or Path(args.bundle) / "counts.csv")
    pairs = [(mc.circuit, hists[cid][1]) for cid, mc in circuits if cid in hists]
    if not pairs:
        raise ConfigurationError("no circuits with data")
    fit = fit_pauli_stochastic([h for _, h in pairs], [c for c, _ in pairs], seed=args.seed or 0)
    _emit(args.out, fit.to_json())
    return EXIT_OK


def _emit(out, obj) -> None:
    if out:
        _write_json(out, obj)
    print(json.dumps(obj, sort_keys=True, indent=None if out else 2))


# --------------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mirrorrb", description="Mirror randomized benchmarking pipeline")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_help="output path"):
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--out", default=None, help=out_help)

    sp = sub.add_parser("design", help="sample mirror circuits into a bundle")
    sp.add_argument("design")
    common(sp, "bundle directory")
    sp.set_defaults(func=cmd_design)

    sp = sub.add_parser("run", help="simulate a bundle under an error model")
    sp.add_argument("bundle")
    sp.add_argument("--model", default=None, help="ErrorModel JSON (noiseless if omitted)")
    sp.add_argument("--shots", type=int, default=None)
    sp.add_argument("--mode", choices=("dense", "trajectory"), default="dense")
    sp.add_argument("--workers", type=int, default=1)
    common(sp, "histogram CSV")
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("analyze", help="fit the polarization decay")
    sp.add_argument("bundle")
    sp.add_argument("--hist", default=None)
    sp.add_argument("--resamples", type=int, default=200)
    common(sp, "output directory")
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("oracle", help="fidelity-decay reference rate for a model")
    sp.add_argument("spec")
    sp.add_argument("--model", required=True)
    sp.add_argument("--depths", type=int, nargs="+", default=list(DEFAULT_DEPTHS))
    sp.add_argument("--K", type=int, default=30)
    common(sp)
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("predict", help="crosstalk-free prediction from dressed rates")
    sp.add_argument("spec")
    sp.add_argument("--rates", required=True)
    sp.add_argument("--qubits", default=None, help="comma-separated subset")
    sp.add_argument("--fit", default=None, help="observed fit JSON for the gap report")
    sp.add_argument("--M", type=int, default=10000)
    sp.add_argument("--sweep", action="store_true", help="all connected subsets")
    common(sp)
    sp.set_defaults(func=cmd_predict)

    sp = sub.add_parser("two-densities", help="solve for idle and gate infidelities")
    sp.add_argument("r_half", type=float)
    sp.add_argument("r_eighth", type=float)
    common(sp)
    sp.set_defaults(func=cmd_two_densities)

    sp = sub.add_parser("fit-depol", help="depolarizing-model fit over one or more bundles")
    sp.add_argument(
        "--data", nargs=3, action="append", required=True, metavar=("BUNDLE", "HIST", "QUBITS"),
        help="bundle, histogram CSV and device qubits (e.g. 0,1 or - for 0..n-1)",
    )
    sp.add_argument("--resamples", type=int, default=100)
    common(sp)
    sp.set_defaults(func=cmd_fit_depol)

    sp = sub.add_parser("fit-pauli", help="Pauli-stochastic maximum likelihood (n <= 3)")
    sp.add_argument("bundle")
    sp.add_argument("--hist", default=None)
    common(sp)
    sp.set_defaults(func=cmd_fit_pauli)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except CapacityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (FitError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (MirrorRBError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USER


if __name__ == "__main__":
    sys.exit(main())
