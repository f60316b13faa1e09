"""Ising-type spike models for costing SNN deployment configurations."""

from isingdeploy.cost import CostConstants, WeightingMode, expected_cost, per_state_cost
from isingdeploy.deployment import (
    DeploymentConfiguration,
    MachineDescription,
    SnnDescription,
    enumerate_fixed_sizes,
    map_sequential,
    partition_fixed_size,
)
from isingdeploy.fitting import SpikeRaster, bin_raster, fit_model, load_raster
from isingdeploy.ising import (
    IsingModel,
    SamplerParams,
    delta_energy,
    energy,
    exact_distribution,
    metropolis_move,
    partition_function_exact,
    sample,
)

__version__ = "0.1.0"

__all__ = [
    "CostConstants",
    "DeploymentConfiguration",
    "IsingModel",
    "MachineDescription",
    "SamplerParams",
    "SnnDescription",
    "SpikeRaster",
    "WeightingMode",
    "bin_raster",
    "delta_energy",
    "energy",
    "enumerate_fixed_sizes",
    "exact_distribution",
    "expected_cost",
    "fit_model",
    "load_raster",
    "map_sequential",
    "metropolis_move",
    "partition_fixed_size",
    "partition_function_exact",
    "per_state_cost",
    "sample",
]
