"""Spike rasters, time binning, observed emission moments and moment-set model fitting."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from isingdeploy.ising import IsingModel

DEFAULT_DT = 1.0


@dataclass(frozen=True, eq=False)
class SpikeRaster:
    """Spike events ``(neuron_ids[k], times[k])`` in milliseconds over ``[0, horizon)``."""

    neuron_ids: np.ndarray
    times: np.ndarray
    n: int
    horizon: float

    def __post_init__(self):
        ids = np.asarray(self.neuron_ids, dtype=np.int64).reshape(-1)
        times = np.asarray(self.times, dtype=np.float64).reshape(-1)
        if ids.shape != times.shape:
            raise ValueError("neuron_ids and times must have the same length")
        if self.n < 0:
            raise ValueError(f"neuron count must be >= 0, got {self.n}")
        if not self.horizon > 0:
            raise ValueError(f"horizon must be > 0, got {self.horizon}")
        for k in np.flatnonzero((ids < 0) | (ids >= self.n)):
            raise ValueError(f"event ({ids[k]}, {times[k]}): neuron {ids[k]} out of range for n={self.n}")
        for k in np.flatnonzero(~((times >= 0) & (times < self.horizon))):
            raise ValueError(f"event ({ids[k]}, {times[k]}): time outside [0, {self.horizon})")
        object.__setattr__(self, "neuron_ids", ids)
        object.__setattr__(self, "times", times)

    def __len__(self):
        return self.neuron_ids.shape[0]

    @property
    def events(self) -> list[tuple[int, float]]:
        return list(zip(self.neuron_ids.tolist(), self.times.tolist()))


@dataclass(frozen=True, eq=False)
class BinnedRaster:
    """``bins[t, i]`` is true iff neuron ``i`` fires at least once in ``[t*dt, (t+1)*dt)``."""

    bins: np.ndarray
    dt: float

    @property
    def n(self) -> int:
        return self.bins.shape[1]

    @property
    def n_bins(self) -> int:
        return self.bins.shape[0]


@dataclass(frozen=True, eq=False)
class ObservedMoments:
    rate: np.ndarray
    coincidence: np.ndarray


def load_raster(path, n: int, horizon: float) -> SpikeRaster:
    """Read ``<neuron_id> <time_ms>`` lines; blank lines and ``#`` comments are skipped."""
    ids, times = [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            try:
                if len(parts) != 2:
                    raise ValueError
                nid, t = int(parts[0]), float(parts[1])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: malformed spike line {line!r}") from None
            if not 0 <= nid < n:
                raise ValueError(f"{path}:{lineno}: event ({nid}, {t}): neuron {nid} out of range for n={n}")
            if not 0 <= t < horizon:
                raise ValueError(f"{path}:{lineno}: event ({nid}, {t}): time outside [0, {horizon})")
            ids.append(nid)
            times.append(t)
    return SpikeRaster(np.array(ids, dtype=np.int64), np.array(times), n, horizon)


def write_raster(path, raster: SpikeRaster) -> None:
    order = np.lexsort((raster.neuron_ids, raster.times))
    with open(path, "w", newline="\n") as fh:
        for k in order:
            fh.write(f"{raster.neuron_ids[k]} {raster.times[k]:.17g}\n")


def bin_count(horizon: float, dt: float) -> int:
    return math.ceil(horizon / dt)


def bin_raster(raster: SpikeRaster, dt: float = DEFAULT_DT) -> BinnedRaster:
    if not dt > 0:
        raise ValueError(f"bin width must be > 0, got {dt}")
    n_bins = bin_count(raster.horizon, dt)
    idx = np.floor(raster.times / dt).astype(np.int64)
    # Division can round across a boundary; settle on the interval test t*dt <= time < (t+1)*dt.
    idx -= raster.times < idx * dt
    idx += raster.times >= (idx + 1) * dt
    np.clip(idx, 0, n_bins - 1, out=idx)
    bins = np.zeros((n_bins, raster.n), dtype=bool)
    bins[idx, raster.neuron_ids] = True
    return BinnedRaster(bins, dt)


def _check_index(binned: BinnedRaster, i: int) -> None:
    if not 0 <= i < binned.n:
        raise IndexError(f"neuron index {i} out of range for n={binned.n}")


def observed_rate(binned: BinnedRaster, i: int) -> float:
    """Fraction of bins in which neuron ``i`` fires."""
    _check_index(binned, i)
    return int(binned.bins[:, i].sum()) / binned.n_bins


def observed_coincidence(binned: BinnedRaster, i: int, j: int) -> float:
    """Fraction of bins in which neurons ``i`` and ``j`` both fire."""
    _check_index(binned, i)
    _check_index(binned, j)
    return int((binned.bins[:, i] & binned.bins[:, j]).sum()) / binned.n_bins


def observed_moments(binned: BinnedRaster) -> ObservedMoments:
    b = binned.bins.astype(np.float64)
    # Counts stay far below 2**53, so the float matmul is exact.
    counts = b.T @ b
    return ObservedMoments(rate=np.diag(counts) / binned.n_bins, coincidence=counts / binned.n_bins)


def fit_model(raster: SpikeRaster, dt: float = DEFAULT_DT) -> IsingModel:
    """Set ``H`` to per-neuron emission ratios and ``J`` to pairwise joint-emission ratios."""
    moments = observed_moments(bin_raster(raster, dt))
    J = moments.coincidence.copy()
    np.fill_diagonal(J, 0.0)
    return IsingModel(moments.rate, J)
