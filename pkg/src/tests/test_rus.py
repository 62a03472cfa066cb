"""Repeat-until-success Monte Carlo against deterministic and closed-form cases."""

import json
import math

import numpy as np
import pytest
from pydantic import ValidationError

from src.network.rus import (
    RusConfig,
    RusError,
    batch_jsonl,
    batch_summary,
    expected_build_time,
    expected_coherence_weight,
    expected_memory_age,
    simulate_batch,
    simulate_rus,
)


class TestDeterministicChain:
    def test_every_attempt_succeeds(self, rus_config):
        stats = simulate_rus(rus_config())
        assert stats.attempts_per_edge == (1, 1)
        assert stats.edges_completed == 2
        assert stats.total_time == pytest.approx(0.01)
        assert stats.weights == (1.0, 1.0)

    def test_memory_decay_weights(self, rus_config):
        stats = simulate_rus(rus_config(gamma_s_memory=0.01))
        # Edge 0 is written at 0 μs, edge 1 at 5 μs; the chain closes at 10 μs.
        assert stats.weights[0] == pytest.approx(math.exp(-0.2))
        assert stats.weights[1] == pytest.approx(math.exp(-0.1))
        assert stats.mean_coherence_weight == pytest.approx(
            0.5 * (math.exp(-0.2) + math.exp(-0.1))
        )

    def test_event_log(self, rus_config):
        stats = simulate_rus(rus_config(record_events=True))
        assert [event.kind for event in stats.events] == [
            "attempt",
            "stored",
            "success",
            "attempt",
            "stored",
            "success",
        ]
        assert [event.time for event in stats.events] == [0.0, 0.0, 5.0, 5.0, 5.0, 10.0]
        assert [event.edge for event in stats.events] == [0, 0, 0, 1, 1, 1]

    def test_events_are_off_by_default(self, rus_config):
        assert simulate_rus(rus_config()).events == ()


def test_same_seed_same_run(rus_config):
    cfg = rus_config(eta_store=0.7, eta_detect=0.6, p_bsm=0.5)
    assert simulate_rus(cfg, seed=7) == simulate_rus(cfg, seed=7)


def test_losses_are_logged(rus_config):
    cfg = rus_config(eta_store=0.6, eta_detect=0.6, p_bsm=0.5, record_events=True)
    stats = simulate_rus(cfg, seed=3)
    kinds = {event.kind for event in stats.events}
    assert "success" in kinds
    successes = [event for event in stats.events if event.kind == "success"]
    assert len(successes) == 2
    resets = [event for event in stats.events if event.kind == "reset"]
    losses = [event for event in stats.events if event.kind == "photon_loss"]
    assert len(resets) == len(losses)


def test_no_edge_closes_on_a_departed_atom(rus_config):
    cfg = rus_config(
        ideal_loading=False,
        atom_arrival_rate=50.0,
        interaction_time=0.02,
        p_bsm=0.05,
        record_events=True,
    )
    lost = 0
    for seed in range(20):
        stats = simulate_rus(cfg, seed=seed)
        assert stats.edges_completed == 2
        stored, departed = False, False
        for event in stats.events:
            if event.kind == "stored":
                stored, departed = True, False
            elif event.kind == "atom_departure" and stored:
                departed = True
            elif event.kind in ("qubit_lost", "photon_loss"):
                stored, departed = False, False
            elif event.kind == "success":
                assert stored and not departed, f"seed {seed} at {event.time} μs"
                stored = False
        lost += sum(event.kind == "qubit_lost" for event in stats.events)
    assert lost > 0


def test_qubit_loss_costs_a_reset(rus_config):
    cfg = rus_config(
        ideal_loading=False,
        atom_arrival_rate=50.0,
        interaction_time=0.02,
        p_bsm=0.05,
        record_events=True,
    )
    events = simulate_rus(cfg, seed=1).events
    for i, event in enumerate(events):
        if event.kind == "qubit_lost":
            following = events[i + 1]
            assert following.kind == "reset"
            assert following.time == pytest.approx(event.time + cfg.reset_time)


class TestExpectedBuildTime:
    def test_lossless(self, rus_config):
        time_ms, attempts = expected_build_time(rus_config())
        assert attempts == pytest.approx(2.0)
        assert time_ms == pytest.approx(0.01)

    def test_geometric_limit(self, rus_config):
        cfg = rus_config(eta_detect=math.sqrt(0.5))
        _, attempts = expected_build_time(cfg)
        assert attempts == pytest.approx(2.0 / 0.5)

    def test_insurance_saves_fresh_attempts(self, rus_config):
        cfg = rus_config(eta_store=math.sqrt(0.25), p_bsm=0.5)
        _, attempts = expected_build_time(cfg)
        # Five slots per edge, against eight if every failure started over.
        assert attempts == pytest.approx(10.0)

    def test_monotone_in_losses_and_reset(self, rus_config):
        times = [
            expected_build_time(rus_config(eta_detect=eta, p_bsm=0.5))[0]
            for eta in (0.5, 0.7, 0.9)
        ]
        assert times[0] > times[1] > times[2]
        cheap = expected_build_time(rus_config(eta_detect=0.7, reset_time=1.0))[0]
        costly = expected_build_time(rus_config(eta_detect=0.7, reset_time=100.0))[0]
        assert costly > cheap

    def test_zero_success_probability(self, rus_config):
        with pytest.raises(RusError, match="non-terminating"):
            expected_build_time(rus_config(p_bsm=0.0))


class TestCoherenceOracle:
    def test_deterministic_chain(self, rus_config):
        cfg = rus_config(gamma_s_memory=0.01)
        assert expected_coherence_weight(cfg) == pytest.approx(
            0.5 * (math.exp(-0.2) + math.exp(-0.1))
        )
        assert expected_memory_age(cfg) == pytest.approx(0.0075)

    def test_no_decay_means_full_weight(self, rus_config):
        cfg = rus_config(eta_store=0.8, eta_detect=0.7, p_bsm=0.5)
        assert expected_coherence_weight(cfg) == pytest.approx(1.0)

    def test_slow_decay_follows_the_mean_age(self, rus_config):
        cfg = rus_config(eta_store=0.9, eta_detect=0.8, p_bsm=0.5, gamma_s_memory=1e-5)
        age_us = expected_memory_age(cfg) * 1000.0
        assert expected_coherence_weight(cfg) == pytest.approx(
            math.exp(-2.0 * cfg.gamma_s_memory * age_us), rel=1e-5
        )

    def test_weight_is_at_least_the_mean_age_bound(self, rus_config):
        cfg = rus_config(eta_store=0.7, eta_detect=0.6, p_bsm=0.5, gamma_s_memory=0.01)
        age_us = expected_memory_age(cfg) * 1000.0
        bound = math.exp(-2.0 * cfg.gamma_s_memory * age_us)
        assert bound < expected_coherence_weight(cfg) < 1.0

    def test_insured_retries_add_to_the_age(self, rus_config):
        certain = expected_memory_age(rus_config(target_chain_length=2))
        retried = expected_memory_age(rus_config(target_chain_length=2, p_bsm=0.5))
        # One edge: the write is followed by two slots on average.
        assert certain == pytest.approx(0.005)
        assert retried == pytest.approx(0.010)

    def test_zero_success_probability(self, rus_config):
        with pytest.raises(RusError, match="non-terminating"):
            expected_coherence_weight(rus_config(eta_detect=0.0))
        with pytest.raises(RusError, match="non-terminating"):
            expected_memory_age(rus_config(p_bsm=0.0))


def _mean_and_stderr(sample: np.ndarray) -> tuple[float, float]:
    return float(sample.mean()), float(sample.std(ddof=1) / math.sqrt(len(sample)))


@pytest.mark.slow
@pytest.mark.parametrize(
    ("overrides", "p"),
    [
        ({"eta_store": math.sqrt(0.5)}, 0.5),
        ({"eta_store": 0.5}, 0.25),
        ({"eta_store": math.sqrt(0.4), "eta_detect": 0.5}, 0.1),
        ({"eta_store": 0.5, "p_bsm": 0.5}, None),
        ({"eta_store": 0.9, "eta_detect": 0.7, "p_bsm": 0.5}, None),
    ],
)
def test_monte_carlo_matches_the_closed_form(rus_config, overrides, p):
    cfg = rus_config(**overrides)
    results = simulate_batch(cfg, n_runs=10_000)
    oracle_time, oracle_attempts = expected_build_time(cfg)
    if p is not None:
        assert oracle_attempts == pytest.approx(2.0 / p)

    attempts = np.array([r.total_attempts for r in results], dtype=float)
    times = np.array([r.total_time for r in results])
    for sample, expected in ((attempts, oracle_attempts), (times, oracle_time)):
        mean, stderr = _mean_and_stderr(sample)
        assert abs(mean - expected) < 3.0 * stderr


@pytest.mark.slow
@pytest.mark.parametrize(
    "overrides",
    [
        {"eta_store": 0.9, "eta_detect": 0.8, "p_bsm": 0.5, "gamma_s_memory": 0.005},
        {"eta_store": 0.7, "eta_detect": 0.7, "p_bsm": 0.5, "gamma_s_memory": 0.01},
    ],
)
def test_monte_carlo_weight_matches_the_closed_form(rus_config, overrides):
    cfg = rus_config(**overrides)
    results = simulate_batch(cfg, n_runs=10_000)
    mean, stderr = _mean_and_stderr(np.array([r.mean_coherence_weight for r in results]))
    assert abs(mean - expected_coherence_weight(cfg)) < 3.0 * stderr


@pytest.mark.slow
@pytest.mark.parametrize(
    ("knob", "low", "high"),
    [("eta_store", 0.6, 0.9), ("eta_detect", 0.6, 0.9), ("p_bsm", 0.3, 0.6)],
)
def test_build_time_falls_as_the_protocol_improves(rus_config, knob, low, high):
    base = {"eta_store": 0.8, "eta_detect": 0.8, "p_bsm": 0.5}
    means = []
    for value in (low, high):
        cfg = rus_config(**{**base, knob: value})
        times = np.array([r.total_time for r in simulate_batch(cfg, n_runs=10_000)])
        means.append(_mean_and_stderr(times))
    (slow_mean, slow_err), (fast_mean, fast_err) = means
    assert slow_mean - fast_mean > 3.0 * math.hypot(slow_err, fast_err)


def test_finite_atom_dwell_still_completes(rus_config):
    cfg = rus_config(ideal_loading=False, atom_arrival_rate=2.0, record_events=True)
    stats = simulate_rus(cfg, seed=11)
    assert stats.edges_completed == 2
    assert any(event.kind == "atom_arrival" for event in stats.events)
    assert stats.total_time > 0.0


class TestNonTerminating:
    def test_no_storage_hits_the_attempt_cap(self, rus_config):
        with pytest.raises(RusError, match="non-terminating"):
            simulate_rus(rus_config(eta_store=0.0, max_attempts=100))

    def test_no_atoms_ever_arrive(self, rus_config):
        cfg = rus_config(ideal_loading=False, atom_arrival_rate=0.0)
        with pytest.raises(RusError, match="no atoms ever arrive"):
            simulate_rus(cfg)


def test_config_validation():
    with pytest.raises(ValidationError):
        RusConfig(eta_store=1.5)
    with pytest.raises(ValidationError):
        RusConfig(n_cavities=1)
    assert RusConfig().photon_slot == pytest.approx(5.0)


class TestBatch:
    def test_seeds_follow_the_base_seed(self, rus_config):
        cfg = rus_config(eta_store=0.8, rng_seed=40)
        results = simulate_batch(cfg, n_runs=4)
        assert [r.seed for r in results] == [40, 41, 42, 43]

    def test_threads_do_not_change_results(self, rus_config):
        cfg = rus_config(eta_store=0.8, eta_detect=0.7, p_bsm=0.5)
        assert simulate_batch(cfg, 20, threads=3) == simulate_batch(cfg, 20)

    def test_zero_runs(self, rus_config):
        with pytest.raises(RusError):
            simulate_batch(rus_config(), 0)

    def test_jsonl_and_summary(self, rus_config):
        cfg = rus_config(eta_store=0.8)
        results = simulate_batch(cfg, n_runs=5)
        lines = batch_jsonl(results).splitlines()
        assert len(lines) == 5
        first = json.loads(lines[0])
        assert sorted(first) == ["attempts", "mean_weight", "seed", "total_time_ms"]
        assert first["seed"] == 0

        summary = batch_summary(cfg, results).splitlines()
        assert summary[0] == "quantity,mean,std,stderr,oracle"
        assert [row.split(",")[0] for row in summary[1:]] == [
            "total_time_ms",
            "attempts_per_edge",
            "mean_weight",
        ]
        assert summary[1].split(",")[4] != ""
        assert float(summary[3].split(",")[4]) == pytest.approx(1.0)
