"""Pairwise Ising-type model: energy, exact small-n distribution, Metropolis sampling.

Spin states are 1-D ``int8`` arrays with entries in {-1, +1}. The energy of a
state is ``-sum_{i<j} J_ij s_i s_j - sum_i h_i s_i`` and sampling runs at unit
temperature.

Every sampling run owns one ``numpy.random.Generator``. Each Metropolis move
consumes exactly two doubles from it, index first and acceptance second, so a
run can be replayed move by move with :func:`metropolis_move`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numba
import numpy as np

MAX_EXACT_N = 20

# Moves per batch of uniforms handed to the compiled kernel.
_CHUNK_MOVES = 1 << 18


@dataclass(frozen=True, eq=False)
class IsingModel:
    """Biases ``H`` (length n) and symmetric zero-diagonal couplings ``J`` (n x n)."""

    H: np.ndarray
    J: np.ndarray

    def __post_init__(self):
        H = np.array(self.H, dtype=np.float64)
        J = np.array(self.J, dtype=np.float64)
        if H.ndim != 1:
            raise ValueError(f"H must be a vector, got shape {H.shape}")
        n = H.shape[0]
        if J.shape != (n, n):
            raise ValueError(f"J must have shape ({n}, {n}), got {J.shape}")
        if not (np.all(np.isfinite(H)) and np.all(np.isfinite(J))):
            raise ValueError("H and J must be finite")
        if np.any(np.diag(J) != 0.0):
            raise ValueError("J must have a zero diagonal")
        if not np.array_equal(J, J.T):
            raise ValueError("J must be symmetric")
        H.setflags(write=False)
        J.setflags(write=False)
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "J", J)

    @property
    def n(self) -> int:
        return self.H.shape[0]

    @classmethod
    def from_couplings(cls, H, J) -> IsingModel:
        """Build a model from an arbitrary square ``J``.

        The upper triangle wins: ``J_ij`` for ``i < j`` is mirrored into the
        lower triangle and the diagonal is dropped.
        """
        J = np.array(J, dtype=np.float64)
        upper = np.triu(J, k=1)
        return cls(H, upper + upper.T)

    @classmethod
    def zeros(cls, n: int) -> IsingModel:
        return cls(np.zeros(n), np.zeros((n, n)))

    @classmethod
    def random(cls, n: int, rng: np.random.Generator, scale: float = 1.0) -> IsingModel:
        """Model with ``h_i`` and ``J_ij`` drawn uniformly from ``[-scale, scale]``."""
        H = rng.uniform(-scale, scale, size=n)
        J = rng.uniform(-scale, scale, size=(n, n))
        return cls.from_couplings(H, J)

    def __eq__(self, other):
        if not isinstance(other, IsingModel):
            return NotImplemented
        return np.array_equal(self.H, other.H) and np.array_equal(self.J, other.J)

    __hash__ = None


@dataclass(frozen=True)
class SamplerParams:
    steps_eq: int = 10_000
    sample_interval: int = 10
    sample_count: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.steps_eq < 0:
            raise ValueError(f"steps_eq must be >= 0, got {self.steps_eq}")
        if self.sample_interval < 1:
            raise ValueError(f"sample_interval must be >= 1, got {self.sample_interval}")
        if self.sample_count < 1:
            raise ValueError(f"sample_count must be >= 1, got {self.sample_count}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")


def as_state(state, n: int | None = None) -> np.ndarray:
    """Validate a ±1 vector and return it as an ``int8`` array."""
    s = np.asarray(state)
    if s.ndim != 1:
        raise ValueError(f"state must be a vector, got shape {s.shape}")
    if n is not None and s.shape[0] != n:
        raise ValueError(f"state length mismatch: expected {n}, got {s.shape[0]}")
    if not np.all((s == 1) | (s == -1)):
        raise ValueError("state entries must be -1 or +1")
    return s.astype(np.int8)


def energy(model: IsingModel, state) -> float:
    s = as_state(state, model.n).astype(np.float64)
    # J is symmetric with zero diagonal, so the full quadratic form counts each pair twice.
    pair = 0.5 * float(s @ model.J @ s)
    return -pair - float(model.H @ s)


def unnormalized_prob(model: IsingModel, state) -> float:
    return math.exp(-energy(model, state))


def delta_energy(model: IsingModel, state, i: int) -> float:
    """Energy change caused by flipping spin ``i``."""
    s = as_state(state, model.n)
    if not 0 <= i < model.n:
        raise IndexError(f"spin index {i} out of range for n={model.n}")
    local = model.H[i] + float(model.J[i] @ s)
    return 2.0 * float(s[i]) * local


def all_states(n: int) -> np.ndarray:
    """All ``2**n`` states as rows; row ``k`` has spin ``i`` up iff bit ``n-1-i`` of ``k`` is set."""
    if n > MAX_EXACT_N:
        raise ValueError(f"exact enumeration refused: n={n} exceeds limit {MAX_EXACT_N}")
    codes = np.arange(2**n, dtype=np.int64)[:, None]
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)[None, :]
    bits = (codes >> shifts) & 1
    return (2 * bits - 1).astype(np.int8)


def _all_energies(model: IsingModel) -> tuple[np.ndarray, np.ndarray]:
    states = all_states(model.n)
    energies = np.empty(states.shape[0])
    step = 1 << 16
    for lo in range(0, states.shape[0], step):
        s = states[lo : lo + step].astype(np.float64)
        energies[lo : lo + step] = -0.5 * np.einsum("ki,ij,kj->k", s, model.J, s) - s @ model.H
    return states, energies


def partition_function_exact(model: IsingModel) -> float:
    if model.n > MAX_EXACT_N:
        raise ValueError(f"exact partition function refused: n={model.n} exceeds limit {MAX_EXACT_N}")
    _, energies = _all_energies(model)
    return math.fsum(np.exp(-energies))


def exact_probabilities(model: IsingModel) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(states, probs)`` over all ``2**n`` states, in :func:`all_states` order."""
    if model.n > MAX_EXACT_N:
        raise ValueError(f"exact distribution refused: n={model.n} exceeds limit {MAX_EXACT_N}")
    states, energies = _all_energies(model)
    # Shifting by the minimum energy keeps exp() in range; it cancels on normalization.
    weights = np.exp(-(energies - energies.min()))
    return states, weights / math.fsum(weights)


def exact_distribution(model: IsingModel) -> dict[tuple[int, ...], float]:
    states, probs = exact_probabilities(model)
    return {tuple(int(v) for v in row): float(p) for row, p in zip(states, probs)}


def state_codes(states: np.ndarray) -> np.ndarray:
    """Map rows of ±1 states to their index in :func:`all_states` order."""
    states = np.asarray(states)
    n = states.shape[1]
    weights = 1 << np.arange(n - 1, -1, -1, dtype=np.int64)
    return ((states > 0).astype(np.int64) * weights).sum(axis=1)


def total_variation(model: IsingModel, samples) -> float:
    """Total-variation distance between the empirical sample distribution and the exact one."""
    samples = np.asarray(samples)
    _, probs = exact_probabilities(model)
    counts = np.bincount(state_codes(samples), minlength=probs.shape[0])
    return 0.5 * float(np.abs(counts / samples.shape[0] - probs).sum())


@numba.njit(cache=True)
def _run_moves(H, J, s, uniforms):
    n = s.shape[0]
    for m in range(uniforms.shape[0] // 2):
        i = int(uniforms[2 * m] * n)
        if i >= n:
            i = n - 1
        local = H[i]
        for j in range(n):
            local += J[i, j] * s[j]
        dE = 2.0 * s[i] * local
        if dE < 0.0 or uniforms[2 * m + 1] < np.exp(-dE):
            s[i] = -s[i]


def _advance(model: IsingModel, s: np.ndarray, rng: np.random.Generator, moves: int) -> None:
    while moves > 0:
        batch = min(moves, _CHUNK_MOVES)
        _run_moves(model.H, model.J, s, rng.random(2 * batch))
        moves -= batch


def metropolis_move(model: IsingModel, state, rng: np.random.Generator) -> np.ndarray:
    """One single-spin-flip Metropolis move; returns a new state array."""
    s = as_state(state, model.n).astype(np.float64)
    _run_moves(model.H, model.J, s, rng.random(2))
    return s.astype(np.int8)


def random_states(n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` independent uniformly random states."""
    return np.where(rng.random((count, n)) < 0.5, 1, -1).astype(np.int8)


def sample(model: IsingModel, params: SamplerParams) -> np.ndarray:
    """Burn in for ``steps_eq`` moves, then record a state every ``sample_interval`` moves.

    Returns an ``(sample_count, n)`` ``int8`` array.
    """
    rng = np.random.default_rng(params.seed)
    s = random_states(model.n, 1, rng)[0].astype(np.float64)
    _advance(model, s, rng, params.steps_eq)
    out = np.empty((params.sample_count, model.n), dtype=np.int8)
    for k in range(params.sample_count):
        _advance(model, s, rng, params.sample_interval)
        out[k] = s
    return out


def format_state(state) -> str:
    return "".join("+" if v > 0 else "-" for v in state)


def parse_state(text: str) -> np.ndarray:
    text = text.strip()
    if not text or set(text) - {"+", "-"}:
        raise ValueError(f"state line must contain only '+' and '-': {text!r}")
    return np.array([1 if c == "+" else -1 for c in text], dtype=np.int8)


def write_states(path, states) -> None:
    with open(path, "w", newline="\n") as fh:
        for row in states:
            fh.write(format_state(row) + "\n")


def read_states(path) -> np.ndarray:
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rows.append(parse_state(line))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    if rows and len({len(r) for r in rows}) != 1:
        raise ValueError(f"{path}: state lines have differing lengths")
    return np.array(rows, dtype=np.int8).reshape(len(rows), -1 if rows else 0)


def write_model(path, model: IsingModel) -> None:
    lines = [f"n={model.n}"]
    lines += [f"h {i} {v:.17g}" for i, v in enumerate(model.H)]
    rows, cols = np.nonzero(np.triu(model.J, k=1))
    lines += [f"j {i} {j} {model.J[i, j]:.17g}" for i, j in zip(rows, cols)]
    Path(path).write_text("\n".join(lines) + "\n", newline="\n")


def read_model(path) -> IsingModel:
    """Parse the text model format; couplings are symmetrized and the diagonal dropped."""
    with open(path) as fh:
        lines = [(k, ln.strip()) for k, ln in enumerate(fh, 1)]
    lines = [(k, ln) for k, ln in lines if ln and not ln.startswith("#")]
    if not lines or not lines[0][1].startswith("n="):
        raise ValueError(f"{path}: first line must be 'n=<int>'")
    try:
        n = int(lines[0][1][2:])
    except ValueError:
        raise ValueError(f"{path}:{lines[0][0]}: bad neuron count {lines[0][1]!r}") from None
    H = np.zeros(n)
    J = np.zeros((n, n))
    for lineno, line in lines[1:]:
        parts = line.split()
        try:
            if parts[0] == "h" and len(parts) == 3:
                H[_index(parts[1], n)] = float(parts[2])
            elif parts[0] == "j" and len(parts) == 4:
                i, j = _index(parts[1], n), _index(parts[2], n)
                if i != j:
                    J[i, j] = J[j, i] = float(parts[3])
            else:
                raise ValueError(f"unrecognized line {line!r}")
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from None
    return IsingModel(H, J)


def _index(text: str, n: int) -> int:
    i = int(text)
    if not 0 <= i < n:
        raise ValueError(f"neuron index {i} out of range for n={n}")
    return i
