"""End-to-end acceptance checks, one test per criterion.

Each test records one ``ACCEPTANCE <n> PASS|FAIL`` line; conftest prints
them all in the terminal summary.
"""

import itertools
import math
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import brute_distribution, brute_energy
from isingdeploy.cli import main
from isingdeploy.cost import CostConstants, WeightingMode, expected_cost, per_state_cost
from isingdeploy.deployment import MachineDescription, SnnDescription, build_config
from isingdeploy.evaluation import (
    DESK_SAMPLER,
    AblationMode,
    desk_scale_network,
    format_samples,
    format_summary,
    reference_setup,
    run_sweep,
)
from isingdeploy.fitting import fit_model
from isingdeploy.ising import (
    IsingModel,
    SamplerParams,
    delta_energy,
    exact_distribution,
    partition_function_exact,
    sample,
    total_variation,
)
from isingdeploy.profiler import synth_raster_bernoulli

pytestmark = pytest.mark.acceptance

RESULTS: dict[int, str] = {}


def report(number: int, ok: bool, detail: str) -> None:
    line = f"ACCEPTANCE {number} {'PASS' if ok else 'FAIL'}: {detail}"
    RESULTS[number] = line
    print(line)
    assert ok, line


def acceptance_model(i: int) -> IsingModel:
    return IsingModel.random(8, np.random.default_rng(1000 + i))


def test_1_sampler_fidelity():
    start = time.perf_counter()
    distances = []
    for i in range(5):
        samples = sample(acceptance_model(i), SamplerParams(10_000, 10, 50_000, seed=i))
        distances.append(total_variation(acceptance_model(i), samples))
    elapsed = time.perf_counter() - start
    ok = max(distances) <= 0.05 and elapsed < 30
    report(1, ok, f"max TV {max(distances):.4f} <= 0.05 over 5 models, {elapsed:.1f}s < 30s")


def test_2_delta_energy_consistency():
    worst = 0.0
    for n in (2, 10, 100):
        rng = np.random.default_rng(n)
        for _ in range(1000):
            model = IsingModel.random(n, rng)
            s = rng.choice(np.array([-1, 1], dtype=np.int8), size=n)
            i = int(rng.integers(n))
            flipped = s.copy()
            flipped[i] = -flipped[i]
            full = brute_energy(model.H, model.J, flipped) - brute_energy(model.H, model.J, s)
            worst = max(worst, abs(delta_energy(model, s, i) - full))
    report(2, worst <= 1e-9, f"max |dE - recomputed| = {worst:.2e} <= 1e-9 over 3000 triples")


def test_3_exact_oracle():
    worst_sum, worst_z = 0.0, 0.0
    for n in range(1, 13):
        model = IsingModel.random(n, np.random.default_rng(300 + n))
        dist = exact_distribution(model)
        worst_sum = max(worst_sum, abs(math.fsum(dist.values()) - 1.0))
        assert min(dist.values()) > 0
        z = math.fsum(
            math.exp(-brute_energy(model.H, model.J, s)) for s in itertools.product((-1, 1), repeat=n)
        )
        worst_z = max(worst_z, abs(partition_function_exact(model) - z) / z)
    ok = worst_sum <= 1e-12 and worst_z <= 1e-9
    report(3, ok, f"|sum P - 1| = {worst_sum:.1e} <= 1e-12, Z rel err {worst_z:.1e} <= 1e-9 for n <= 12")


def test_4_fitting_recovery():
    model = fit_model(synth_raster_bernoulli(50, 10_000.0, 1.0, 0.3, seed=0))
    h_err = float(np.max(np.abs(model.H - 0.3)))
    off = ~np.eye(50, dtype=bool)
    j_err = float(np.max(np.abs(model.J[off] - 0.09)))
    ok = h_err <= 0.02 and j_err <= 0.01
    report(4, ok, f"max |H - 0.3| = {h_err:.4f} <= 0.02, max |J - 0.09| = {j_err:.4f} <= 0.01")


FIXTURE_SNN = SnnDescription((("a", 2), ("b", 1), ("c", 1)), 0.02)
FIXTURE_MACHINE = MachineDescription(2, cores_per_chip=2, core_capacity=2)


def test_5_worked_example():
    config = build_config(FIXTURE_SNN, FIXTURE_MACHINE, 2)
    cost = per_state_cost([1, -1, -1, -1], FIXTURE_MACHINE, config, FIXTURE_SNN, CostConstants(0.1, 0.2, 1.0))
    report(5, abs(cost - 1.202) <= 1e-15, f"per-state cost {cost!r} == 1.202")


def test_6_expectation_convergence():
    snn = SnnDescription((("a", 5), ("b", 3)), 0.02)
    machine = MachineDescription(3, cores_per_chip=2)
    config = build_config(snn, machine, 2)
    constants = CostConstants()
    model = acceptance_model(0)
    exact = math.fsum(
        p * per_state_cost(s, machine, config, snn, constants) for s, p in brute_distribution(model.H, model.J).items()
    )
    samples = sample(model, SamplerParams(10_000, 10, 50_000, seed=0))
    got = expected_cost(config, samples, model, machine, snn, constants, WeightingMode.MONTECARLO)
    rel = abs(got - exact) / exact
    report(6, rel <= 0.02, f"montecarlo {got:.5f} vs exact {exact:.5f}, rel err {rel:.4f} <= 0.02")


@pytest.fixture(scope="module")
def desk():
    snn, machine = desk_scale_network()
    return reference_setup(snn, machine, seed=0)


def desk_sweep(setup, mode):
    return run_sweep(
        setup.snn, setup.machine, setup.model, DESK_SAMPLER, CostConstants(), mode, setup.raster, setup.synapses, seed=0
    )


def test_7_desk_scale_sweep(desk):
    start = time.perf_counter()
    result = desk_sweep(desk, AblationMode.FULL)
    elapsed = time.perf_counter() - start
    r = result.correlations["energy_packets"]
    ok = elapsed < 300 and len(result.rows) == 120 and r is not None and r >= 0.7
    report(7, ok, f"{len(result.rows)} rows in {elapsed:.1f}s < 300s, pearson(energy_packets) = {r:.4f} >= 0.7")


def test_8_ablation_modes(desk):
    results = {mode: desk_sweep(desk, mode) for mode in AblationMode}
    summaries = {mode: format_summary(res, {"seed": 0}) for mode, res in results.items()}
    complete = all(len(res.rows) == 120 and summaries[m].startswith("metric,pearson\n") for m, res in results.items())
    shared = format_samples(results[AblationMode.FULL].samples) == format_samples(results[AblationMode.UNIFORM_PM].samples)
    values = ", ".join(f"{m.value}={res.correlations['energy_packets']:.3f}" for m, res in results.items())
    report(8, complete and shared, f"4 modes complete, full/uniform_pm samples identical={shared}; {values}")


def snapshot(root: Path) -> dict[str, bytes]:
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_9_cli_replay(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    Path("net.cfg").write_text(
        "population.exc.size = 12\npopulation.inh.size = 4\nconnection_probability = 0.1\n"
        "machine.chips = 8\nmachine.cores_per_chip = 2\n"
    )
    Path("s.txt").write_text("+---+-----------\n")
    sampler = ["--steps-eq", "300", "--interval", "20", "--count", "10"]
    commands = [
        ["synth", "--n", "16", "--horizon", "200", "--rate", "0.1", "-o", "bern.txt"],
        ["fit", "bern.txt", "--n", "16", "--horizon", "200", "-o", "m.txt"],
        ["sample", "m.txt", *sampler, "-o", "st.txt"],
        ["synth", "--model", "m.txt", "--bins", "200", "-o", "r.txt"],
        ["cost", "--config", "net.cfg", "--states", "s.txt", "--k", "3", "--out", "c1"],
        ["cost", "--config", "net.cfg", "--model", "m.txt", "--k", "3", *sampler, "--out", "c2"],
        ["profile", "--config", "net.cfg", "--raster", "r.txt", "--horizon", "200", "--k", "4", "--out", "p"],
        ["sweep", "--config", "net.cfg", "--model", "m.txt", "--raster", "r.txt", "--horizon", "200", *sampler,
         "--mode", "random_model", "--out", "sw"],
        ["eval", "--modes", "full,uniform_pm", "--bins", "200", *sampler, "--out", "ev"],
    ]
    for argv in commands:
        assert main(argv) == 0, argv
    before = snapshot(tmp_path)
    manifests = sorted(p for p in before if p.endswith("manifest.json"))
    mismatched = []
    for manifest in manifests:
        main(["replay", manifest])
        if snapshot(tmp_path) != before:
            mismatched.append(manifest)
            before = snapshot(tmp_path)
    ok = len(manifests) == len(commands) and not mismatched
    report(9, ok, f"{len(manifests)} manifests replayed byte-identically (mismatches: {mismatched or 'none'})")
