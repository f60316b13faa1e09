"""Fixed-size deployment sweeps: predicted cost vs reference profile, with ablations."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from isingdeploy.cost import CostConstants, WeightingMode, expected_cost
from isingdeploy.deployment import (
    MachineDescription,
    SnnDescription,
    generate_all_configs,
    occupancy,
    slice_count,
)
from isingdeploy.fitting import DEFAULT_DT, SpikeRaster, fit_model
from isingdeploy.ising import IsingModel, SamplerParams, format_state, random_states, sample
from isingdeploy.profiler import (
    DEFAULT_WEIGHTS,
    SynapseList,
    instantiate_synapses,
    profile,
    synth_raster_from_model,
)

METRICS = ("energy_chips", "energy_packets", "time_packets")
CSV_HEADER = "k,slices,chips_in_use,predicted_cost,energy_chips,energy_packets,time_packets,status"

DESK_POPULATIONS = (("excitatory", 120), ("inhibitory", 30))
DESK_CONNECTION_PROBABILITY = 0.02
DESK_CHIPS = 20
DESK_SAMPLER = SamplerParams(steps_eq=100_000, sample_interval=1_000, sample_count=200)

# Seed-derivation purposes, kept distinct so streams never collide.
_SAMPLES, _RANDOM_MODEL, _SYNAPSES, _GENERATOR, _RASTER = range(5)


class UndefinedCorrelationError(ValueError):
    """Pearson correlation is undefined because an input has zero variance."""


class AblationMode(str, enum.Enum):
    FULL = "full"
    RANDOM_SAMPLES = "random_samples"
    UNIFORM_PM = "uniform_pm"
    RANDOM_MODEL = "random_model"

    @classmethod
    def parse(cls, name: str) -> AblationMode:
        try:
            return cls(name)
        except ValueError:
            valid = ", ".join(m.value for m in cls)
            raise ValueError(f"unknown ablation mode {name!r}; valid modes: {valid}") from None

    @property
    def weighting(self) -> WeightingMode:
        return _WEIGHTING[self]


_WEIGHTING = {
    AblationMode.FULL: WeightingMode.MONTECARLO,
    AblationMode.UNIFORM_PM: WeightingMode.UNIFORM_ONE,
    AblationMode.RANDOM_SAMPLES: WeightingMode.BOLTZMANN_REWEIGHT,
    AblationMode.RANDOM_MODEL: WeightingMode.BOLTZMANN_REWEIGHT,
}


def pearson(xs, ys) -> float:
    """Sample Pearson correlation, computed in two passes with exact summation."""
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"pearson needs two equal-length vectors, got shapes {x.shape} and {y.shape}")
    if x.shape[0] < 2:
        raise ValueError("pearson needs at least two points")
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise UndefinedCorrelationError("correlation undefined: an input has zero variance")
    dx = x - math.fsum(x) / x.shape[0]
    dy = y - math.fsum(y) / y.shape[0]
    r = math.fsum(dx * dy) / math.sqrt(math.fsum(dx * dx) * math.fsum(dy * dy))
    return max(-1.0, min(1.0, r))


def derive_seed(master_seed: int, *key: int) -> int:
    """Stable 64-bit seed for ``key`` under ``master_seed``; independent of other keys."""
    seq = np.random.SeedSequence(master_seed, spawn_key=tuple(key))
    return int(seq.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class SweepRow:
    k: int
    slices: int
    chips_in_use: int | None = None
    predicted_cost: float | None = None
    energy_chips: float | None = None
    energy_packets: float | None = None
    time_packets: float | None = None
    status: str = "ok"

    def csv(self) -> str:
        cells = [self.k, self.slices, self.chips_in_use, self.predicted_cost, *[getattr(self, m) for m in METRICS]]
        text = ["" if v is None else f"{v:.17g}" if isinstance(v, float) else str(v) for v in cells]
        return ",".join(text + [_csv_cell(self.status)])


def _csv_cell(text: str) -> str:
    if any(c in text for c in ',"\n'):
        return '"' + text.replace('"', '""') + '"'
    return text


@dataclass
class SweepResult:
    mode: AblationMode
    rows: list[SweepRow]
    correlations: dict[str, float | None]
    samples: dict[int, np.ndarray] = field(repr=False, default_factory=dict)
    params: dict[str, object] = field(default_factory=dict)


def draw_samples(
    mode: AblationMode, model: IsingModel, sampler_params: SamplerParams, master_seed: int, k: int
) -> tuple[np.ndarray, IsingModel]:
    """Samples for fixed size ``k`` and the model used to weight them."""
    seed = derive_seed(master_seed, _SAMPLES, k)
    if mode in (AblationMode.FULL, AblationMode.UNIFORM_PM):
        params = SamplerParams(sampler_params.steps_eq, sampler_params.sample_interval, sampler_params.sample_count, seed)
        return sample(model, params), model
    states = random_states(model.n, sampler_params.sample_count, np.random.default_rng(seed))
    if mode is AblationMode.RANDOM_MODEL:
        model = IsingModel.random(model.n, np.random.default_rng(derive_seed(master_seed, _RANDOM_MODEL, k)))
    return states, model


def run_sweep(
    snn: SnnDescription,
    machine: MachineDescription,
    model: IsingModel,
    sampler_params: SamplerParams,
    constants: CostConstants,
    mode: AblationMode,
    raster: SpikeRaster,
    synapses: SynapseList,
    weights: tuple[float, float, float] = DEFAULT_WEIGHTS,
    dt: float = DEFAULT_DT,
    seed: int = 0,
    keep_samples: bool = True,
    on_row=None,
) -> SweepResult:
    """Predict and profile every fixed-size configuration of ``snn`` on ``machine``.

    Sizes that do not fit are kept as rows with a ``skipped`` status.
    ``sampler_params.seed`` is ignored: each ``k`` samples with a seed derived
    from ``seed`` and ``k``. ``on_row`` is called with each row as it completes.
    """
    mode = AblationMode(mode)
    if model.n != snn.n:
        raise ValueError(f"model has {model.n} neurons, network has {snn.n}")
    rows, samples = [], {}
    for entry in generate_all_configs(snn, machine):
        k = entry.k
        if not entry.feasible:
            rows.append(SweepRow(k, slice_count(snn, k), status=f"skipped: {entry.reason}"))
            if on_row is not None:
                on_row(rows[-1])
            continue
        config = entry.config
        states, weight_model = draw_samples(mode, model, sampler_params, seed, k)
        if keep_samples:
            samples[k] = states
        predicted = expected_cost(config, states, weight_model, machine, snn, constants, mode.weighting)
        ref = profile(raster, synapses, config, machine, weights, dt)
        rows.append(
            SweepRow(
                k,
                len(config.slices),
                occupancy(config).chips_in_use,
                predicted,
                ref.energy_chips,
                ref.energy_packets,
                ref.time_packets,
            )
        )
        if on_row is not None:
            on_row(rows[-1])
    return SweepResult(mode, rows, correlations(rows), samples)


def correlations(rows: list[SweepRow]) -> dict[str, float | None]:
    ok = [r for r in rows if r.status == "ok"]
    out: dict[str, float | None] = {}
    for metric in METRICS:
        try:
            out[metric] = pearson([r.predicted_cost for r in ok], [getattr(r, metric) for r in ok])
        except ValueError:
            out[metric] = None
    return out


def format_sweep_csv(rows: list[SweepRow]) -> str:
    return "\n".join([CSV_HEADER] + [r.csv() for r in sorted(rows, key=lambda r: r.k)]) + "\n"


def format_summary(result: SweepResult, provenance: dict[str, object] | None = None) -> str:
    lines = ["metric,pearson"]
    for metric in METRICS:
        value = result.correlations[metric]
        lines.append(f"{metric},{'undefined' if value is None else f'{value:.17g}'}")
    lines.append(f"# mode={result.mode.value}")
    lines.append(f"# weighting={result.mode.weighting.value}")
    for key, value in sorted({**result.params, **(provenance or {})}.items()):
        lines.append(f"# {key}={value}")
    return "\n".join(lines) + "\n"


def format_samples(samples: dict[int, np.ndarray]) -> str:
    out = []
    for k in sorted(samples):
        out.append(f"k={k}")
        out.extend(format_state(row) for row in samples[k])
    return "\n".join(out) + "\n" if out else ""


@dataclass(frozen=True)
class ReferenceSetup:
    """Reference raster (from a generator model), the model fitted to it, and synapses."""

    snn: SnnDescription
    machine: MachineDescription
    generator: IsingModel
    raster: SpikeRaster
    model: IsingModel
    synapses: SynapseList


def generator_model(n: int, seed: int) -> IsingModel:
    """Sparse-firing generator: roughly 3-8% of bins per neuron, weak mixed-sign couplings.

    Low rates keep the fitted ratio couplings small (summed coupling per
    neuron below 1); otherwise the fitted model is bistable and chains stay
    in whichever all-on/all-off basin they start nearest.
    """
    rng = np.random.default_rng(seed)
    return IsingModel.from_couplings(rng.uniform(-1.8, -1.2, n), rng.uniform(-0.02, 0.02, (n, n)))


def reference_setup(
    snn: SnnDescription,
    machine: MachineDescription,
    seed: int = 0,
    bins: int = 2000,
    dt: float = DEFAULT_DT,
) -> ReferenceSetup:
    n = snn.n
    generator = generator_model(n, derive_seed(seed, _GENERATOR))
    params = SamplerParams(steps_eq=100 * n, sample_interval=n, sample_count=bins, seed=derive_seed(seed, _RASTER))
    raster = synth_raster_from_model(generator, bins, params, dt)
    model = fit_model(raster, dt)
    synapses = instantiate_synapses(snn, derive_seed(seed, _SYNAPSES))
    return ReferenceSetup(snn, machine, generator, raster, model, synapses)


def desk_scale_network() -> tuple[SnnDescription, MachineDescription]:
    return SnnDescription(DESK_POPULATIONS, DESK_CONNECTION_PROBABILITY), MachineDescription(DESK_CHIPS)
