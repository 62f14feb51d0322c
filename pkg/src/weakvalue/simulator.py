"""Seeded Monte-Carlo runs of the weak-then-strong measurement sequence.

Every run prepares the same tilted state, draws a weak outcome ``k`` from
its Born weights, applies the back-action and then draws the strong
outcome ``l``. Runs are generated in fixed-size chunks; chunk ``i`` owns
the random stream ``SeedSequence(seed, spawn_key=(i,))`` so the record
stream depends only on ``(seed, runs, chunk_size)`` and never on how many
worker threads produced it.
"""

from __future__ import annotations

import math
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, NamedTuple, Optional

import numpy as np

from .measurement import DomainError, RotatedDetector, WeakModel, gaussian_model, weak_operators
from .qubit import PureState, make_tilted_state

CHUNK_SIZE = 1 << 16
MAX_SEED = 2**64 - 1


class RunRecord(NamedTuple):
    run: int
    k: int
    l: int


class RecordBatch(NamedTuple):
    """Column view of a contiguous block of runs."""

    run: np.ndarray
    k: np.ndarray
    l: np.ndarray

    def __len__(self) -> int:
        return len(self.run)

    def records(self) -> Iterator[RunRecord]:
        for r, k, l in zip(self.run.tolist(), self.k.tolist(), self.l.tolist()):
            yield RunRecord(r, k, l)

    @classmethod
    def concat(cls, batches) -> "RecordBatch":
        batches = list(batches)
        if not batches:
            empty = np.empty(0, dtype=np.int64)
            return cls(empty, empty.copy(), empty.copy())
        return cls(*(np.concatenate([b[i] for b in batches]) for i in range(3)))

    @classmethod
    def from_records(cls, records) -> "RecordBatch":
        rows = np.array([tuple(r) for r in records], dtype=np.int64).reshape(-1, 3)
        return cls(rows[:, 0].copy(), rows[:, 1].copy(), rows[:, 2].copy())


@dataclass(frozen=True)
class SimConfig:
    """Parameters of one simulated experiment.

    ``model`` overrides the Gaussian model built from ``f_avg``/``k_rms``;
    it exists for custom outcome families.
    """

    f_avg: float = 0.05
    k_rms: float = 200.0
    alpha: float = 0.0
    runs: int = 1
    seed: int = 0
    model: Optional[WeakModel] = None

    def __post_init__(self):
        if isinstance(self.runs, bool) or int(self.runs) != self.runs or self.runs < 1:
            raise DomainError(f"runs must be a positive integer, got {self.runs!r}")
        if isinstance(self.seed, bool) or int(self.seed) != self.seed or not 0 <= self.seed <= MAX_SEED:
            raise DomainError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        if not math.isfinite(self.alpha):
            raise DomainError("alpha must be finite")
        if self.model is None:
            object.__setattr__(self, "model", gaussian_model(self.f_avg, self.k_rms))

    @property
    def initial_state(self) -> PureState:
        return make_tilted_state(self.alpha)


class _StateTable(NamedTuple):
    cdf: np.ndarray  # cumulative Born weights of the weak outcomes
    post: np.ndarray  # (n, 2) normalized post-measurement amplitudes
    p_down: np.ndarray  # probability of l = 2 after each weak outcome


@lru_cache(maxsize=16)
def _state_table(model: WeakModel, state: PureState) -> _StateTable:
    amps = weak_operators(model) @ state.vector
    prob = np.sum(np.abs(amps) ** 2, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        post = amps / np.sqrt(prob)[:, None]
    post[prob <= 0] = 0.0
    p_down = np.abs(post[:, 1]) ** 2
    cdf = np.cumsum(prob)
    for a in (cdf, post, p_down):
        a.flags.writeable = False
    return _StateTable(cdf, post, p_down)


def _draw_index(cdf: np.ndarray, u) -> np.ndarray:
    idx = np.searchsorted(cdf, np.asarray(u) * cdf[-1], side="right")
    return np.minimum(idx, len(cdf) - 1)


def sample_weak_outcome(state: PureState, model: WeakModel, rng: np.random.Generator) -> tuple[int, PureState]:
    """Draw one weak outcome ``k`` and return it with the post-measurement state."""
    table = _state_table(model, state)
    i = int(_draw_index(table.cdf, rng.random()))
    return int(model.k[i]), PureState.from_vector(table.post[i])


def chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(chunk,)))


def _simulate_chunk(config: SimConfig, table: _StateTable, chunk: int, chunk_size: int) -> RecordBatch:
    start = chunk * chunk_size
    n = min(chunk_size, config.runs - start)
    rng = chunk_rng(config.seed, chunk)
    idx = _draw_index(table.cdf, rng.random(n))
    l = np.where(rng.random(n) < table.p_down[idx], 2, 1).astype(np.int64)
    return RecordBatch(np.arange(start, start + n, dtype=np.int64), config.model.k[idx], l)


def simulate_batches(config: SimConfig, workers: int = 1, chunk_size: int = CHUNK_SIZE) -> Iterator[RecordBatch]:
    """Yield the record stream as column batches, one per chunk, in run order."""
    table = _state_table(config.model, config.initial_state)
    n_chunks = -(-config.runs // chunk_size)
    if workers <= 1:
        for c in range(n_chunks):
            yield _simulate_chunk(config, table, c, chunk_size)
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        pending: deque = deque()
        for c in range(n_chunks):
            pending.append(pool.submit(_simulate_chunk, config, table, c, chunk_size))
            if len(pending) >= 2 * workers:
                yield pending.popleft().result()
        while pending:
            yield pending.popleft().result()


def run_experiment(config: SimConfig, workers: int = 1, chunk_size: int = CHUNK_SIZE) -> Iterator[RunRecord]:
    """Stream one ``RunRecord`` per simulated run."""
    for batch in simulate_batches(config, workers, chunk_size):
        yield from batch.records()


def collect(config: SimConfig, workers: int = 1, chunk_size: int = CHUNK_SIZE) -> RecordBatch:
    return RecordBatch.concat(simulate_batches(config, workers, chunk_size))


@dataclass(frozen=True)
class CalibrationReport:
    n_runs: int
    count_one: int
    prob_one: float
    stderr: float


# Born weights this close to 0 or 1 are rounding residue of an exact 0 or 1
_SNAP = 1e-12


def calibrate_detector(detector: RotatedDetector, state: PureState, n: int, rng: np.random.Generator) -> CalibrationReport:
    """Measure ``n`` copies of ``state`` one at a time and tally reading 1."""
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n!r}")
    p = detector.prob_one(state)
    if p > 1 - _SNAP:
        p = 1.0
    elif p < _SNAP:
        p = 0.0
    count = 0
    remaining = int(n)
    while remaining:
        m = min(remaining, CHUNK_SIZE * 16)
        count += int(np.count_nonzero(rng.random(m) < p))
        remaining -= m
    prob = count / n
    return CalibrationReport(int(n), count, prob, math.sqrt(prob * (1 - prob) / n))
