"""Per-state communication cost of a deployment and its expectation over model samples."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from isingdeploy.deployment import DeploymentConfiguration, MachineDescription, SnnDescription, neighbour_counts
from isingdeploy.ising import IsingModel, as_state


@dataclass(frozen=True)
class CostConstants:
    ic: float = 0.1
    scdc: float = 0.2
    dc: float = 1.0

    def __post_init__(self):
        for name in ("ic", "scdc", "dc"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ValueError(f"cost constant {name} must be finite and >= 0, got {value}")

    def scaled(self, factor: float) -> CostConstants:
        return CostConstants(self.ic * factor, self.scdc * factor, self.dc * factor)


class WeightingMode(str, enum.Enum):
    MONTECARLO = "montecarlo"
    BOLTZMANN_REWEIGHT = "boltzmann_reweight"
    UNIFORM_ONE = "uniform_one"

    @classmethod
    def parse(cls, name: str) -> WeightingMode:
        try:
            return cls(name)
        except ValueError:
            valid = ", ".join(m.value for m in cls)
            raise ValueError(f"unknown weighting mode {name!r}; valid modes: {valid}") from None


def neuron_costs(
    config: DeploymentConfiguration, snn: SnnDescription, constants: CostConstants
) -> np.ndarray:
    """Cost each neuron adds to a state when it spikes.

    Intra-core neighbours (excluding itself) weighted by the connection
    probability, other in-use cores on its chip, and other in-use chips.
    """
    same_core, cores_on_chip, chips = neighbour_counts(config)
    return (
        constants.ic * snn.connection_probability * (same_core - 1)
        + constants.scdc * (cores_on_chip - 1)
        + constants.dc * (chips - 1)
    )


def per_state_cost(
    state,
    machine: MachineDescription,
    config: DeploymentConfiguration,
    snn: SnnDescription,
    constants: CostConstants,
) -> float:
    if config.machine != machine:
        raise ValueError("configuration was built for a different machine")
    s = as_state(state, snn.n)
    if config.n != snn.n:
        raise ValueError(f"configuration covers {config.n} neurons, network has {snn.n}")
    return math.fsum(neuron_costs(config, snn, constants)[s > 0])


def state_costs(samples, config: DeploymentConfiguration, snn: SnnDescription, constants: CostConstants) -> np.ndarray:
    samples = np.asarray(samples)
    if samples.ndim != 2 or samples.shape[1] != snn.n:
        raise ValueError(f"samples must have shape (m, {snn.n}), got {samples.shape}")
    per_neuron = neuron_costs(config, snn, constants)
    return np.array([math.fsum(per_neuron[row > 0]) for row in samples])


def sample_weights(samples, model: IsingModel | None, mode: WeightingMode) -> np.ndarray:
    """Weight applied to each sample's cost under ``mode``."""
    samples = np.asarray(samples)
    m = samples.shape[0]
    if m == 0:
        raise ValueError("expected cost needs at least one sample")
    mode = WeightingMode(mode)
    if mode is WeightingMode.MONTECARLO:
        return np.full(m, 1.0 / m)
    if mode is WeightingMode.UNIFORM_ONE:
        return np.ones(m)
    if model is None:
        raise ValueError("boltzmann_reweight needs a model")
    s = samples.astype(np.float64)
    energies = -0.5 * np.einsum("ki,ij,kj->k", s, model.J, s) - s @ model.H
    if not np.all(np.isfinite(energies)):
        raise ValueError("non-finite sample energy")
    w = np.exp(-(energies - energies.min()))
    return w / math.fsum(w)


def expected_cost(
    config: DeploymentConfiguration,
    samples,
    model: IsingModel | None,
    machine: MachineDescription,
    snn: SnnDescription,
    constants: CostConstants,
    mode: WeightingMode = WeightingMode.MONTECARLO,
) -> float:
    """Weighted sum of per-state costs over ``samples``."""
    if config.machine != machine:
        raise ValueError("configuration was built for a different machine")
    weights = sample_weights(samples, model, mode)
    costs = state_costs(samples, config, snn, constants)
    return math.fsum(weights * costs)
