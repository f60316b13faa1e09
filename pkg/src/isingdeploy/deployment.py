"""SNN and machine descriptions, fixed-size slice partitioning, sequential core mapping."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

DEFAULT_CORES_PER_CHIP = 18
DEFAULT_CORE_CAPACITY = 256


@dataclass(frozen=True)
class SnnDescription:
    """Populations in declaration order; global neuron ids run population by population."""

    populations: tuple[tuple[str, int], ...]
    connection_probability: float = 0.02

    def __post_init__(self):
        pops = tuple((str(name), int(size)) for name, size in self.populations)
        names = [name for name, _ in pops]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate population names in {names}")
        for name, size in pops:
            if size < 1:
                raise ValueError(f"population {name!r} must have at least one neuron, got {size}")
        if not 0.0 <= self.connection_probability <= 1.0:
            raise ValueError(f"connection probability must be in [0, 1], got {self.connection_probability}")
        object.__setattr__(self, "populations", pops)

    @property
    def n(self) -> int:
        return sum(size for _, size in self.populations)

    def offsets(self) -> list[int]:
        """First global id of each population."""
        out, start = [], 0
        for _, size in self.populations:
            out.append(start)
            start += size
        return out


@dataclass(frozen=True)
class MachineDescription:
    chip_count: int
    cores_per_chip: int = DEFAULT_CORES_PER_CHIP
    core_capacity: int = DEFAULT_CORE_CAPACITY

    def __post_init__(self):
        for name in ("chip_count", "cores_per_chip", "core_capacity"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")

    @property
    def total_cores(self) -> int:
        return self.chip_count * self.cores_per_chip


@dataclass(frozen=True)
class Slice:
    """Neurons ``start .. stop-1`` (global ids) of one population."""

    population: str
    start: int
    stop: int

    @property
    def size(self) -> int:
        return self.stop - self.start


class CapacityError(ValueError):
    """A partition does not fit on the machine."""


@dataclass(frozen=True, eq=False)
class DeploymentConfiguration:
    slices: tuple[Slice, ...]
    core_of_slice: tuple[tuple[int, int], ...]
    machine: MachineDescription
    neuron_chip: np.ndarray = field(init=False, repr=False)
    neuron_core: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        slices = tuple(self.slices)
        cores = tuple((int(c), int(k)) for c, k in self.core_of_slice)
        if len(slices) != len(cores):
            raise ValueError("every slice needs exactly one core")
        if len(set(cores)) != len(cores):
            raise ValueError("at most one slice may be mapped to a core")
        for sl, (chip, core) in zip(slices, cores):
            if not (0 <= chip < self.machine.chip_count and 0 <= core < self.machine.cores_per_chip):
                raise ValueError(f"slice {sl} mapped to nonexistent chip {chip} core {core}")
            if sl.size > self.machine.core_capacity:
                raise CapacityError(
                    f"slice {sl.population}[{sl.start}:{sl.stop}] has {sl.size} neurons, "
                    f"core capacity is {self.machine.core_capacity}"
                )
        n = max((sl.stop for sl in slices), default=0)
        chip_of = np.full(n, -1, dtype=np.int64)
        core_of = np.full(n, -1, dtype=np.int64)
        for sl, (chip, core) in zip(slices, cores):
            if sl.size < 1 or sl.start < 0:
                raise ValueError(f"empty or negative slice {sl}")
            if np.any(chip_of[sl.start : sl.stop] >= 0):
                raise ValueError(f"slice {sl} overlaps another slice")
            chip_of[sl.start : sl.stop] = chip
            core_of[sl.start : sl.stop] = chip * self.machine.cores_per_chip + core
        if np.any(chip_of < 0):
            raise ValueError(f"slices leave neuron {int(np.argmax(chip_of < 0))} unassigned")
        chip_of.setflags(write=False)
        core_of.setflags(write=False)
        object.__setattr__(self, "slices", slices)
        object.__setattr__(self, "core_of_slice", cores)
        object.__setattr__(self, "neuron_chip", chip_of)
        object.__setattr__(self, "neuron_core", core_of)

    @property
    def n(self) -> int:
        return self.neuron_chip.shape[0]

    def _check(self, neuron_id: int) -> None:
        if not 0 <= neuron_id < self.n:
            raise KeyError(f"neuron {neuron_id} is not assigned in this configuration")

    def loc_core(self, neuron_id: int) -> tuple[int, int]:
        self._check(neuron_id)
        return divmod(int(self.neuron_core[neuron_id]), self.machine.cores_per_chip)

    def loc_chip(self, neuron_id: int) -> int:
        self._check(neuron_id)
        return int(self.neuron_chip[neuron_id])


def partition_fixed_size(snn: SnnDescription, k: int) -> list[Slice]:
    """Split each population into contiguous slices of ``k`` neurons (last one may be short)."""
    if k < 1:
        raise ValueError(f"slice size must be >= 1, got {k}")
    slices = []
    for (name, size), offset in zip(snn.populations, snn.offsets()):
        for start in range(0, size, k):
            slices.append(Slice(name, offset + start, offset + min(start + k, size)))
    return slices


def slice_count(snn: SnnDescription, k: int) -> int:
    return sum(math.ceil(size / k) for _, size in snn.populations)


def map_sequential(slices, machine: MachineDescription) -> DeploymentConfiguration:
    """Slice ``m`` goes to chip ``m // cores_per_chip``, core ``m % cores_per_chip``."""
    slices = list(slices)
    if len(slices) > machine.total_cores:
        raise CapacityError(
            f"need {len(slices)} cores but machine has {machine.total_cores} "
            f"({machine.chip_count} chips x {machine.cores_per_chip} cores)"
        )
    cores = [divmod(m, machine.cores_per_chip) for m in range(len(slices))]
    return DeploymentConfiguration(tuple(slices), tuple(cores), machine)


def enumerate_fixed_sizes(snn: SnnDescription) -> list[int]:
    return list(range(1, max(size for _, size in snn.populations) + 1))


@dataclass(frozen=True)
class Occupancy:
    neurons_per_core: dict[tuple[int, int], int]
    cores_in_use: dict[int, int]
    chips_in_use: int


def occupancy(config: DeploymentConfiguration) -> Occupancy:
    per_core = {core: sl.size for sl, core in zip(config.slices, config.core_of_slice)}
    per_chip = Counter(chip for chip, _ in per_core)
    return Occupancy(dict(sorted(per_core.items())), dict(sorted(per_chip.items())), len(per_chip))


def neighbour_counts(config: DeploymentConfiguration) -> tuple[np.ndarray, np.ndarray, int]:
    """Per neuron: neurons sharing its core, cores in use on its chip; plus chips in use.

    Both per-neuron counts include the neuron's own core/chip.
    """
    core_sizes = np.bincount(config.neuron_core)
    chips_of_used_cores = np.unique(config.neuron_core) // config.machine.cores_per_chip
    cores_per_chip = np.bincount(chips_of_used_cores, minlength=config.machine.chip_count)
    chips = int(np.count_nonzero(cores_per_chip))
    return core_sizes[config.neuron_core], cores_per_chip[config.neuron_chip], chips


@dataclass(frozen=True)
class ConfigEntry:
    """A fixed size ``k`` with its configuration, or the reason it does not fit."""

    k: int
    config: DeploymentConfiguration | None
    reason: str = ""

    @property
    def feasible(self) -> bool:
        return self.config is not None


def build_config(snn: SnnDescription, machine: MachineDescription, k: int) -> DeploymentConfiguration:
    return map_sequential(partition_fixed_size(snn, k), machine)


def generate_all_configs(snn: SnnDescription, machine: MachineDescription) -> list[ConfigEntry]:
    entries = []
    for k in enumerate_fixed_sizes(snn):
        try:
            entries.append(ConfigEntry(k, build_config(snn, machine, k)))
        except CapacityError as exc:
            entries.append(ConfigEntry(k, None, str(exc)))
    return entries


@dataclass(frozen=True)
class NetworkConfig:
    snn: SnnDescription
    machine: MachineDescription
    cost: dict[str, float]


def parse_network_config(text: str, source: str = "<config>") -> NetworkConfig:
    """Parse ``key = value`` lines; a ``[section]`` header prefixes following keys with ``section.``."""
    section = ""
    pops: list[tuple[str, int]] = []
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            continue
        if "=" not in line:
            raise ValueError(f"{source}:{lineno}: expected key=value, got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if section:
            key = f"{section}.{key}"
        if key.startswith("population.") and key.endswith(".size"):
            try:
                pops.append((key[len("population.") : -len(".size")], int(value)))
            except ValueError:
                raise ValueError(f"{source}:{lineno}: population size must be an integer") from None
        elif key in _KNOWN_KEYS:
            values[key] = value
        else:
            raise ValueError(f"{source}:{lineno}: unknown key {key!r}")
    if not pops:
        raise ValueError(f"{source}: no population.<name>.size entries")
    try:
        snn = SnnDescription(tuple(pops), float(values.get("connection_probability", 0.02)))
        machine = MachineDescription(
            int(values.get("machine.chips", 1)),
            int(values.get("machine.cores_per_chip", DEFAULT_CORES_PER_CHIP)),
            int(values.get("machine.core_capacity", DEFAULT_CORE_CAPACITY)),
        )
        cost = {key[len("cost.") :]: float(v) for key, v in values.items() if key.startswith("cost.")}
    except ValueError as exc:
        raise ValueError(f"{source}: {exc}") from None
    return NetworkConfig(snn, machine, cost)


_KNOWN_KEYS = {
    "connection_probability",
    "machine.chips",
    "machine.cores_per_chip",
    "machine.core_capacity",
    "cost.ic",
    "cost.scdc",
    "cost.dc",
}


def load_network_config(path) -> NetworkConfig:
    with open(path) as fh:
        return parse_network_config(fh.read(), str(path))


def format_network_config(snn: SnnDescription, machine: MachineDescription, cost: dict[str, float] | None = None) -> str:
    lines = [f"population.{name}.size = {size}" for name, size in snn.populations]
    lines.append(f"connection_probability = {snn.connection_probability!r}")
    lines.append(f"machine.chips = {machine.chip_count}")
    lines.append(f"machine.cores_per_chip = {machine.cores_per_chip}")
    lines.append(f"machine.core_capacity = {machine.core_capacity}")
    for key, value in (cost or {}).items():
        lines.append(f"cost.{key} = {value!r}")
    return "\n".join(lines) + "\n"
