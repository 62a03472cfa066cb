"""Discrete-event Monte Carlo of repeat-until-success cluster building.

Photon sources are cavities that hold an atom while it transits the mode. An
edge of the linear chain needs two loaded cavities. Each attempt occupies one
photon slot:

* fresh attempt: both first photons must be stored (``eta_store`` each), then
  the second photons are measured;
* measurement: both must reach the detectors (``eta_detect`` each), then the
  Bell measurement succeeds with ``p_bsm``; otherwise the failure is insured and
  the stored qubits are kept for a measurement-only retry;
* a missing photon discards the stored qubits and costs ``reset_time``;
* so does the departure of either atom whose photon sits in a memory, since
  its half of the entangled pair is gone.

Internally the clock runs in μs; reported times are in ms.
"""

from __future__ import annotations

import heapq
import json
import logging
import math
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.cavity.params import repetition_rate
from src.utils.output import round_floats, table_text

logger = logging.getLogger(__name__)

US_PER_MS = 1000.0

EventKind = Literal[
    "atom_arrival",
    "atom_departure",
    "attempt",
    "stored",
    "success",
    "insured_failure",
    "photon_loss",
    "qubit_lost",
    "reset",
]


class RusError(RuntimeError):
    """Raised when a configuration can never complete the chain."""


def _default_photon_slot() -> float:
    # 1 μs photons with a 4 μs repump between them.
    return 1.0 / repetition_rate(photon_duration=1.0, repump_time=4.0)


class RusConfig(BaseModel):
    """Parameters of one cluster-building run."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    n_cavities: int = Field(default=2, ge=2, description="Photon sources running")
    atom_arrival_rate: float = Field(
        default=1.0, ge=0, description="Atom arrivals per cavity (1/ms)"
    )
    interaction_time: float = Field(
        default=1.0, gt=0, description="Atom dwell time in the cavity mode (ms)"
    )
    photon_slot: float = Field(
        default_factory=_default_photon_slot, gt=0, description="Attempt period (μs)"
    )
    eta_store: float = Field(default=0.8, ge=0, le=1, description="Storage efficiency")
    eta_detect: float = Field(default=0.5, ge=0, le=1, description="Detection efficiency")
    p_bsm: float = Field(
        default=0.5, ge=0, le=1, description="Bell measurement success given two photons"
    )
    gamma_s_memory: float = Field(
        default=0.0, ge=0, description="Memory spin-wave decay (rad/μs)"
    )
    reset_time: float = Field(default=10.0, ge=0, description="Memory reset cost (μs)")
    target_chain_length: int = Field(default=3, ge=2, description="Nodes in the chain")
    rng_seed: int = Field(default=0, ge=0, description="Seed of the first run")
    ideal_loading: bool = Field(
        default=False, description="Keep every cavity loaded for the whole run"
    )
    max_attempts: int = Field(
        default=1_000_000, ge=1, description="Attempt cap before giving up"
    )
    record_events: bool = Field(default=False, description="Keep the event log")


@dataclass(frozen=True)
class RusEvent:
    time: float
    kind: EventKind
    edge: int


@dataclass(frozen=True)
class RusRunStats:
    """Result of one simulated chain build.

    Attributes:
        seed: Seed of the run's random generator.
        total_time: Time to complete the chain (ms).
        attempts_per_edge: Photon slots spent on each edge, in build order.
        weights: Coherence weight exp(-2γ_S·age) of each edge's memories at completion.
        edges_completed: Number of edges built.
        events: Event log, empty unless ``record_events`` was set.
    """

    seed: int
    total_time: float
    attempts_per_edge: tuple[int, ...]
    weights: tuple[float, ...]
    edges_completed: int
    events: tuple[RusEvent, ...] = field(default=(), repr=False)

    @property
    def mean_coherence_weight(self) -> float:
        return float(np.mean(self.weights))

    @property
    def total_attempts(self) -> int:
        return sum(self.attempts_per_edge)


class RusRunRecord(BaseModel):
    """One line of the batch output."""

    seed: int
    total_time_ms: float
    attempts: list[int]
    mean_weight: float


class _Cavities:
    """Atom occupancy of the cavities, driven by a time-ordered event queue."""

    def __init__(self, cfg: RusConfig, rng: np.random.Generator, log: list[RusEvent] | None):
        self.cfg = cfg
        self.rng = rng
        self.log = log
        self.loaded = [cfg.ideal_loading] * cfg.n_cavities
        self.queue: list[tuple[float, int, str, int]] = []
        self._seq = 0
        self.rate = cfg.atom_arrival_rate / US_PER_MS
        self.dwell = cfg.interaction_time * US_PER_MS
        if not cfg.ideal_loading and self.rate > 0.0:
            for cavity in range(cfg.n_cavities):
                self._push(self.rng.exponential(1.0 / self.rate), "atom_arrival", cavity)

    def _push(self, time: float, kind: str, cavity: int) -> None:
        heapq.heappush(self.queue, (time, self._seq, kind, cavity))
        self._seq += 1

    def advance(self, now: float, edge: int) -> set[int]:
        """Apply every occupancy change up to ``now``; return the cavities whose atom left."""
        departed: set[int] = set()
        while self.queue and self.queue[0][0] <= now:
            time, _, kind, cavity = heapq.heappop(self.queue)
            if kind == "atom_arrival":
                if not self.loaded[cavity]:
                    self.loaded[cavity] = True
                    self._push(time + self.dwell, "atom_departure", cavity)
                    self._note(time, "atom_arrival", edge)
                self._push(time + self.rng.exponential(1.0 / self.rate), "atom_arrival", cavity)
            else:
                self.loaded[cavity] = False
                departed.add(cavity)
                self._note(time, "atom_departure", edge)
        return departed

    def pair(self) -> tuple[int, int]:
        """The two loaded cavities an attempt uses (lowest indices first)."""
        first, second = [i for i, loaded in enumerate(self.loaded) if loaded][:2]
        return first, second

    def next_change(self) -> float:
        if not self.queue:
            raise RusError(
                "non-terminating configuration: no atoms ever arrive in the cavities"
            )
        return self.queue[0][0]

    @property
    def ready(self) -> bool:
        return sum(self.loaded) >= 2

    def _note(self, time: float, kind: EventKind, edge: int) -> None:
        if self.log is not None:
            self.log.append(RusEvent(time, kind, edge))


def simulate_rus(cfg: RusConfig, seed: int | None = None) -> RusRunStats:
    """Build one linear chain of ``target_chain_length`` nodes.

    Raises:
        RusError: If the attempt cap is reached or no atom can ever arrive.
    """
    run_seed = cfg.rng_seed if seed is None else seed
    rng = np.random.Generator(np.random.PCG64(run_seed))
    log: list[RusEvent] | None = [] if cfg.record_events else None
    cavities = _Cavities(cfg, rng, log)

    p_store = cfg.eta_store**2
    p_detect = cfg.eta_detect**2
    slot = cfg.photon_slot
    n_edges = cfg.target_chain_length - 1

    def note(time: float, kind: EventKind, edge: int) -> None:
        if log is not None:
            log.append(RusEvent(time, kind, edge))

    now = 0.0
    total = 0
    attempts: list[int] = []
    write_times: list[float] = []
    def lose_qubits(edge: int) -> None:
        nonlocal now
        note(now, "qubit_lost", edge)
        now += cfg.reset_time
        note(now, "reset", edge)

    for edge in range(n_edges):
        count = 0
        written: float | None = None
        holders: tuple[int, int] = (0, 1)
        while True:
            departed = cavities.advance(now, edge)
            if written is not None and departed.intersection(holders):
                written = None
                lose_qubits(edge)
                continue
            if not cavities.ready:
                now = cavities.next_change()
                continue
            total += 1
            if total > cfg.max_attempts:
                raise RusError(
                    f"non-terminating configuration: {cfg.max_attempts} attempts "
                    f"without completing edge {edge}"
                )
            count += 1
            start = now
            now += slot
            note(start, "attempt", edge)

            if written is None:
                if rng.random() >= p_store:
                    note(now, "photon_loss", edge)
                    now += cfg.reset_time
                    note(now, "reset", edge)
                    continue
                written = start
                holders = cavities.pair()
                note(start, "stored", edge)

            # An atom leaving during the slot takes its qubit with it.
            if cavities.advance(now, edge).intersection(holders):
                written = None
                lose_qubits(edge)
            elif rng.random() >= p_detect:
                note(now, "photon_loss", edge)
                written = None
                now += cfg.reset_time
                note(now, "reset", edge)
            elif rng.random() < cfg.p_bsm:
                note(now, "success", edge)
                break
            else:
                note(now, "insured_failure", edge)
        attempts.append(count)
        write_times.append(written)

    weights = tuple(
        math.exp(-2.0 * cfg.gamma_s_memory * (now - written)) for written in write_times
    )
    stats = RusRunStats(
        seed=run_seed,
        total_time=now / US_PER_MS,
        attempts_per_edge=tuple(attempts),
        weights=weights,
        edges_completed=len(attempts),
        events=tuple(log) if log is not None else (),
    )
    logger.debug(
        f"RUS seed={run_seed}: {stats.total_attempts} attempts, "
        f"{stats.total_time:.4g} ms, weight {stats.mean_coherence_weight:.4f}"
    )
    return stats


def simulate_batch(cfg: RusConfig, n_runs: int, threads: int = 1) -> list[RusRunStats]:
    """Independent runs seeded ``rng_seed + i``, returned in seed order."""
    if n_runs < 1:
        raise RusError(f"n_runs must be at least 1, got {n_runs}")
    seeds = [cfg.rng_seed + i for i in range(n_runs)]
    if threads <= 1:
        results = [simulate_rus(cfg, seed) for seed in seeds]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda seed: simulate_rus(cfg, seed), seeds))
    mean_time = float(np.mean([r.total_time for r in results]))
    logger.info(f"Simulated {n_runs} chains: mean build time {mean_time:.4g} ms")
    return results


def _absorbing_means(cfg: RusConfig, cost: float, reset: float) -> float:
    """Expected cost of one edge from the fresh state of the two-state chain."""
    s = cfg.eta_store**2
    d = cfg.eta_detect**2
    insured = d * (1.0 - cfg.p_bsm)
    lost = 1.0 - d
    if s * d * cfg.p_bsm == 0.0:
        raise RusError("non-terminating configuration: per-edge success probability is zero")
    matrix = np.array(
        [
            [s * d, -s * insured],
            [-lost, 1.0 - insured],
        ]
    )
    rhs = np.array([cost + (1.0 - s) * reset + s * lost * reset, cost + lost * reset])
    fresh, _ = np.linalg.solve(matrix, rhs)
    return float(fresh)


def expected_build_time(cfg: RusConfig) -> tuple[float, float]:
    """Closed-form mean build time (ms) and total attempts with always-loaded cavities.

    With ``p_bsm = 1`` this reduces to ``(target - 1)/p`` attempts for
    p = eta_store²·eta_detect².
    """
    edges = cfg.target_chain_length - 1
    attempts = _absorbing_means(cfg, cost=1.0, reset=0.0)
    time_us = _absorbing_means(cfg, cost=cfg.photon_slot, reset=cfg.reset_time)
    return edges * time_us / US_PER_MS, edges * attempts


def _edge_transform(cfg: RusConfig, sigma: float) -> float:
    """E[exp(-sigma·T)] for the duration T (μs) of one edge built from scratch."""
    s = cfg.eta_store**2
    d = cfg.eta_detect**2
    b = cfg.p_bsm
    slot = math.exp(-sigma * cfg.photon_slot)
    reset = math.exp(-sigma * cfg.reset_time)
    lost = (1.0 - s) + s * (1.0 - d)
    matrix = np.array(
        [
            [1.0 - slot * reset * lost, -slot * s * d * (1.0 - b)],
            [-slot * reset * (1.0 - d), 1.0 - slot * d * (1.0 - b)],
        ]
    )
    rhs = np.array([slot * s * d * b, slot * d * b])
    fresh, _ = np.linalg.solve(matrix, rhs)
    return float(fresh)


def _check_terminating(cfg: RusConfig) -> None:
    if cfg.eta_store * cfg.eta_detect * cfg.p_bsm == 0.0:
        raise RusError("non-terminating configuration: per-edge success probability is zero")


def expected_coherence_weight(cfg: RusConfig) -> float:
    """Exact mean of ``mean_coherence_weight`` with always-loaded cavities.

    An edge's memories age from its last write until the chain closes: the
    insured retries that follow the write, then every later edge in full.
    """
    _check_terminating(cfg)
    sigma = 2.0 * cfg.gamma_s_memory
    retry = cfg.eta_detect**2 * (1.0 - cfg.p_bsm)
    slot = math.exp(-sigma * cfg.photon_slot)
    tail = (1.0 - retry) * slot / (1.0 - retry * slot)
    edge = _edge_transform(cfg, sigma)
    edges = cfg.target_chain_length - 1
    return float(np.mean([tail * edge ** (edges - 1 - k) for k in range(edges)]))


def expected_memory_age(cfg: RusConfig) -> float:
    """Mean age (ms) of an edge's memories at chain completion, always-loaded cavities."""
    _check_terminating(cfg)
    retry = cfg.eta_detect**2 * (1.0 - cfg.p_bsm)
    tail = cfg.photon_slot / (1.0 - retry)
    edge = _absorbing_means(cfg, cost=cfg.photon_slot, reset=cfg.reset_time)
    edges = cfg.target_chain_length - 1
    return (tail + 0.5 * (edges - 1) * edge) / US_PER_MS


def run_record(stats: RusRunStats) -> RusRunRecord:
    return RusRunRecord(
        seed=stats.seed,
        total_time_ms=stats.total_time,
        attempts=list(stats.attempts_per_edge),
        mean_weight=stats.mean_coherence_weight,
    )


def batch_jsonl(results: Sequence[RusRunStats]) -> str:
    """One JSON object per run, keys sorted."""
    lines = [
        json.dumps(round_floats(run_record(stats).model_dump()), sort_keys=True)
        for stats in results
    ]
    return "\n".join(lines) + "\n"


def batch_summary(cfg: RusConfig, results: Sequence[RusRunStats]) -> str:
    """CSV of mean, standard deviation and standard error, with the oracle when defined."""
    columns = {
        "total_time_ms": np.array([r.total_time for r in results]),
        "attempts_per_edge": np.array(
            [a for r in results for a in r.attempts_per_edge], dtype=float
        ),
        "mean_weight": np.array([r.mean_coherence_weight for r in results]),
    }
    try:
        oracle_time, oracle_attempts = expected_build_time(cfg)
        oracle = {
            "total_time_ms": oracle_time,
            "attempts_per_edge": oracle_attempts / (cfg.target_chain_length - 1),
            "mean_weight": expected_coherence_weight(cfg),
        }
    except RusError:
        oracle = {}
    rows = []
    for name, values in columns.items():
        std = float(values.std(ddof=1)) if len(values) > 1 else 0.0
        reference = oracle.get(name) if cfg.ideal_loading else None
        rows.append(
            [
                name,
                float(values.mean()),
                std,
                std / math.sqrt(len(values)),
                "" if reference is None else reference,
            ]
        )
    return table_text(("quantity", "mean", "std", "stderr", "oracle"), rows)
