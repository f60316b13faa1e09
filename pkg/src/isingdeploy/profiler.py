"""Synthetic reference profiler standing in for on-hardware energy/time measurements.

Packets are unicast: every spike sends one packet along every outgoing
synapse, classed as intra-core, same-chip (different core) or inter-chip.
Real SpiNNaker routers multicast, so the numbers here are unitless proxies
meant for correlation studies only.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from isingdeploy.deployment import DeploymentConfiguration, MachineDescription, SnnDescription, occupancy
from isingdeploy.fitting import DEFAULT_DT, SpikeRaster, bin_count, bin_raster
from isingdeploy.ising import IsingModel, SamplerParams, sample

DEFAULT_WEIGHTS = (0.1, 0.2, 1.0)


@dataclass(frozen=True, eq=False)
class SynapseList:
    pre: np.ndarray
    post: np.ndarray
    n: int
    seed: int | None = None

    def __post_init__(self):
        pre = np.asarray(self.pre, dtype=np.int64)
        post = np.asarray(self.post, dtype=np.int64)
        if pre.shape != post.shape:
            raise ValueError("pre and post must have the same length")
        if np.any(pre == post):
            raise ValueError("self-connections are not allowed")
        if pre.size and (min(pre.min(), post.min()) < 0 or max(pre.max(), post.max()) >= self.n):
            raise ValueError(f"synapse endpoint out of range for n={self.n}")
        if np.unique(pre * max(self.n, 1) + post).size != pre.size:
            raise ValueError("duplicate synapses")
        object.__setattr__(self, "pre", pre)
        object.__setattr__(self, "post", post)

    def __len__(self):
        return self.pre.shape[0]


@dataclass(frozen=True)
class CostBreakdown:
    energy_chips: float
    energy_packets: float
    time_packets: float


def synth_raster_bernoulli(n: int, horizon: float, dt: float, rate: float, seed: int) -> SpikeRaster:
    """Every (neuron, bin) fires independently with probability ``rate``, at the bin start."""
    if not 0.0 <= rate <= 1.0:
        raise ValueError(f"rate must be in [0, 1], got {rate}")
    if not dt > 0:
        raise ValueError(f"bin width must be > 0, got {dt}")
    rng = np.random.default_rng(seed)
    fired = rng.random((bin_count(horizon, dt), n)) < rate
    return _raster_from_bins(fired, dt, horizon)


def _raster_from_bins(fired: np.ndarray, dt: float, horizon: float) -> SpikeRaster:
    t, i = np.nonzero(fired)
    return SpikeRaster(i, t * dt, fired.shape[1], horizon)


def synth_raster_from_model(
    model: IsingModel, bins: int, sampler_params: SamplerParams, dt: float = DEFAULT_DT
) -> SpikeRaster:
    """One Metropolis sample per bin; neurons in the +1 state spike at the bin start."""
    if bins < 1:
        raise ValueError(f"bins must be >= 1, got {bins}")
    states = sample(model, dataclasses.replace(sampler_params, sample_count=bins))
    return _raster_from_bins(states > 0, dt, bins * dt)


def instantiate_synapses(snn: SnnDescription, seed: int) -> SynapseList:
    """Bernoulli(connection_probability) edge for every ordered pair of distinct neurons."""
    n = snn.n
    rng = np.random.default_rng(seed)
    mask = rng.random((n, n)) < snn.connection_probability
    np.fill_diagonal(mask, False)
    pre, post = np.nonzero(mask)
    return SynapseList(pre, post, n, seed)


def packet_classes(synapses: SynapseList, config: DeploymentConfiguration) -> np.ndarray:
    """``(n, 3)`` outgoing synapse counts per neuron: intra-core, same-chip, inter-chip."""
    same_core = config.neuron_core[synapses.pre] == config.neuron_core[synapses.post]
    same_chip = config.neuron_chip[synapses.pre] == config.neuron_chip[synapses.post]
    cls = np.where(same_core, 0, np.where(same_chip, 1, 2))
    counts = np.zeros((synapses.n, 3), dtype=np.int64)
    np.add.at(counts, (synapses.pre, cls), 1)
    return counts


def profile(
    raster: SpikeRaster,
    synapses: SynapseList,
    config: DeploymentConfiguration,
    machine: MachineDescription,
    weights: tuple[float, float, float] = DEFAULT_WEIGHTS,
    dt: float = DEFAULT_DT,
) -> CostBreakdown:
    """Packet and chip proxies for running ``raster`` under ``config``.

    A spike is a (bin, neuron) cell of the binned raster, so duplicate events
    within one bin send packets once.
    """
    if config.machine != machine:
        raise ValueError("configuration was built for a different machine")
    if not (raster.n == synapses.n == config.n):
        raise ValueError(f"neuron counts disagree: raster {raster.n}, synapses {synapses.n}, config {config.n}")
    fired = bin_raster(raster, dt).bins
    n_bins = fired.shape[0]
    classes = packet_classes(synapses, config)
    spikes_per_neuron = fired.sum(axis=0, dtype=np.int64)
    packets = spikes_per_neuron @ classes
    energy_packets = float(np.dot(np.asarray(weights, dtype=np.float64), packets.astype(np.float64)))

    chip_onehot = np.zeros((config.n, machine.chip_count), dtype=np.int64)
    chip_onehot[np.arange(config.n), config.neuron_chip] = classes[:, 2]
    per_bin_chip = fired.astype(np.int64) @ chip_onehot
    time_packets = float(per_bin_chip.max(axis=1, initial=0).sum())

    energy_chips = float(occupancy(config).chips_in_use * n_bins)
    return CostBreakdown(energy_chips, energy_packets, time_packets)
