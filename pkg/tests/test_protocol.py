import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cavityqubits import fockspace
from cavityqubits.cloning import binomial_distribution
from cavityqubits.config import DistributionSpec, ExperimentConfig, split_rng
from cavityqubits.protocol import (
    FixedTau,
    HalfRabiTau,
    JitteredTau,
    MeasurementOutcome,
    OptimalEachStep,
    StopReason,
    WeightedEnsemble,
    excite_prob,
    optimal_tau,
    policy_tau,
    run,
    step,
    trapping_safe_tau,
    update_weights,
)

GROUND = MeasurementOutcome.GROUND
EXCITED = MeasurementOutcome.EXCITED


def make_config(**overrides):
    defaults = dict(
        experiment="custom",
        distribution=DistributionSpec("binomial", n_max=6),
        gamma=1.0,
        policy="fixed",
        tau=0.825,
        cutoff=10,
        atom_budget=10_000,
        seed=0,
    )
    defaults.update(overrides)
    return ExperimentConfig(**defaults)


@st.composite
def ensembles(draw):
    transferred = draw(st.integers(0, 3))
    ns = draw(
        st.lists(st.integers(transferred, transferred + 6), min_size=1, max_size=6, unique=True)
    )
    raw = [draw(st.floats(0.01, 1.0)) for _ in ns]
    total = sum(raw)
    return WeightedEnsemble.from_weights(
        {n: w / total for n, w in zip(ns, raw)}, transferred=transferred, normalize=True
    )


# --- ensemble type -----------------------------------------------------------


def test_ensemble_validation():
    with pytest.raises(ValueError, match="sum to 1"):
        WeightedEnsemble.from_weights({1: 0.5, 2: 0.4})
    with pytest.raises(ValueError, match="non-negative"):
        WeightedEnsemble.from_weights({1: 1.5, 2: -0.5})
    with pytest.raises(ValueError, match="zero weight"):
        WeightedEnsemble.from_weights({1: 0.5, 2: 0.5}, transferred=2)
    ens = WeightedEnsemble.from_weights({2: 3.0, 3: 1.0}, normalize=True)
    assert ens.as_dict() == {2: 0.75, 3: 0.25}


def test_vacuum_certainty():
    assert WeightedEnsemble.from_weights({2: 1.0}, transferred=2).is_vacuum_certain()
    assert not WeightedEnsemble.from_weights({2: 1.0}, transferred=1).is_vacuum_certain()
    assert not WeightedEnsemble.from_weights(
        {2: 0.5, 3: 0.5}, transferred=2
    ).is_vacuum_certain()


def test_payload_passes_through_updates():
    payload = {1: np.array([1.0, 0.0]), 2: np.array([0.0, 0.5, math.sqrt(0.75)])}
    ens = WeightedEnsemble.from_weights({1: 0.5, 2: 0.5}, dicke_payload=payload)
    post = update_weights(ens, 1.0, 0.7, EXCITED)
    assert post.dicke_payload is payload


# --- excitation probability -----------------------------------------------------


def test_excite_prob_half_period_is_certain():
    ens = WeightedEnsemble.from_weights({1: 1.0})
    assert excite_prob(ens, 1.0, math.pi / 2) == pytest.approx(1.0, abs=1e-12)


def test_excite_prob_empty_cavity_is_zero():
    ens = WeightedEnsemble.from_weights({3: 1.0}, transferred=3)
    assert excite_prob(ens, 1.0, 0.9) == 0.0


def test_excite_prob_direct_sum():
    weights = binomial_distribution(6)
    ens = WeightedEnsemble.from_weights(weights)
    tau = 0.825
    expected = sum(p * math.sin(math.sqrt(n) * tau) ** 2 for n, p in weights.items())
    assert excite_prob(ens, 1.0, tau) == pytest.approx(expected, abs=1e-14)


def test_excite_prob_uses_remaining_photons():
    ens = WeightedEnsemble.from_weights({3: 1.0}, transferred=1)
    tau = 0.4
    assert excite_prob(ens, 1.0, tau) == pytest.approx(
        math.sin(math.sqrt(2) * tau) ** 2, abs=1e-14
    )


def test_excite_prob_accepts_tau_arrays():
    ens = WeightedEnsemble.from_weights(binomial_distribution(4))
    taus = np.array([0.1, 0.5, 1.0])
    curve = excite_prob(ens, 1.0, taus)
    assert curve.shape == (3,)
    for t, v in zip(taus, curve):
        assert v == pytest.approx(excite_prob(ens, 1.0, float(t)), abs=1e-15)


# --- weight updates ----------------------------------------------------------------


def test_ground_update_removes_certain_branch():
    # at tau = pi/2 the single-photon branch excites with certainty, so a
    # ground result rules it out
    ens = WeightedEnsemble.from_weights({1: 0.5, 2: 0.5})
    post = update_weights(ens, 1.0, math.pi / 2, GROUND)
    assert post.as_dict()[1] == pytest.approx(0.0, abs=1e-30)
    assert post.as_dict()[2] == pytest.approx(1.0, abs=1e-12)
    assert post.transferred == 0


def test_single_branch_renormalizes_to_one():
    ens = WeightedEnsemble.from_weights({3: 1.0})
    for outcome in (GROUND, EXCITED):
        post = update_weights(ens, 1.0, 0.33, outcome)
        assert post.as_dict()[3] == pytest.approx(1.0, abs=1e-15)


def test_excited_update_increments_and_kills_empty_branch():
    ens = WeightedEnsemble.from_weights({1: 0.5, 2: 0.5}, transferred=1)
    post = update_weights(ens, 1.0, 0.8, EXCITED)
    assert post.transferred == 2
    assert post.as_dict()[1] == 0.0


def test_zero_probability_outcome_raises():
    ens = WeightedEnsemble.from_weights({2: 1.0}, transferred=2)
    with pytest.raises(ValueError, match="zero-probability"):
        update_weights(ens, 1.0, 0.7, EXCITED)


def test_update_matches_fockspace_branch_simulation():
    # one atom, forced outcome: posterior from the full state-vector
    # simulation must match the closed-form Bayes update
    weights = {1: 0.2, 2: 0.5, 3: 0.3}
    tau = 0.734
    zeros = {1: 1, 2: 1, 3: 2}  # arbitrary branch states |j, n-j>
    for outcome in (GROUND, EXCITED):
        likelihood = {}
        for n, j in zeros.items():
            space = fockspace.JointSpace(1, n)
            state = fockspace.basis_state(space, (fockspace.AtomLevel.GROUND,), j, n - j)
            h = fockspace.interaction_hamiltonian(space, 0)
            evolved = fockspace.evolve(state, h, tau)
            likelihood[n] = fockspace.measure_atom_energy(evolved, 0, outcome=outcome).probability
        total = sum(weights[n] * likelihood[n] for n in weights)
        oracle = {n: weights[n] * likelihood[n] / total for n in weights}

        post = update_weights(WeightedEnsemble.from_weights(weights), 1.0, tau, outcome)
        for n in weights:
            assert post.as_dict()[n] == pytest.approx(oracle[n], abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(ensembles(), st.floats(0.01, 3.0))
def test_outcome_average_restores_prior(ens, tau):
    p_e = excite_prob(ens, 1.0, tau)
    averaged = np.zeros_like(ens.weights)
    if p_e > 0:
        averaged += p_e * update_weights(ens, 1.0, tau, EXCITED).weights
    if p_e < 1:
        averaged += (1 - p_e) * update_weights(ens, 1.0, tau, GROUND).weights
    np.testing.assert_allclose(averaged, ens.weights, atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(ensembles(), st.floats(0.01, 3.0), st.booleans())
def test_update_keeps_normalization(ens, tau, excited):
    outcome = EXCITED if excited else GROUND
    p_e = excite_prob(ens, 1.0, tau)
    if (p_e == 0 and outcome is EXCITED) or (p_e == 1 and outcome is GROUND):
        return
    post = update_weights(ens, 1.0, tau, outcome)
    assert post.weights.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(post.weights >= 0)


# --- policies ---------------------------------------------------------------------


def test_half_rabi_policy_times():
    ens = WeightedEnsemble.from_weights({4: 1.0}, transferred=1)
    tau = policy_tau(HalfRabiTau(4), ens, 2.0)
    assert tau == pytest.approx(math.pi / (2 * math.sqrt(3) * 2.0))
    with pytest.raises(ValueError, match="empty"):
        policy_tau(HalfRabiTau(1), WeightedEnsemble.from_weights({1: 1.0}, transferred=1), 1.0)


def test_jittered_policy_truncates_to_positive():
    rng = split_rng(123)
    policy = JitteredTau(center=0.05, sigma=1.0)
    draws = [policy_tau(policy, None, 1.0, rng) for _ in range(500)]
    assert min(draws) > 0
    with pytest.raises(ValueError, match="rng"):
        policy_tau(policy, None, 1.0)


def test_fixed_policy_validation():
    with pytest.raises(ValueError):
        FixedTau(0.0)
    with pytest.raises(ValueError):
        JitteredTau(center=-1.0, sigma=0.1)


# --- optimal tau ------------------------------------------------------------------


def test_optimal_tau_single_branch():
    for n in (1, 2, 5):
        ens = WeightedEnsemble.from_weights({n: 1.0})
        assert optimal_tau(ens, 1.0) == pytest.approx(
            math.pi / (2 * math.sqrt(n)), abs=1e-6
        )


def test_optimal_tau_binomial_six():
    ens = WeightedEnsemble.from_weights(binomial_distribution(6))
    assert optimal_tau(ens, 1.0) == pytest.approx(0.825, abs=0.005)


def test_optimal_tau_scales_with_gamma():
    ens = WeightedEnsemble.from_weights(binomial_distribution(6))
    assert optimal_tau(ens, 2.0) == pytest.approx(optimal_tau(ens, 1.0) / 2.0, abs=1e-6)


def test_reoptimized_tau_after_excitation():
    ens = WeightedEnsemble.from_weights(binomial_distribution(6))
    conditioned = update_weights(ens, 1.0, 0.825, EXCITED)
    retuned = optimal_tau(conditioned, 1.0)
    assert abs(retuned - 0.825) > 0.01
    # brute-force grid oracle
    grid = np.linspace(1e-6, math.pi, 200_001)
    oracle = grid[np.argmax(excite_prob(conditioned, 1.0, grid))]
    assert retuned == pytest.approx(oracle, abs=1e-4)


def test_optimal_tau_empty_bounds():
    ens = WeightedEnsemble.from_weights({1: 1.0})
    with pytest.raises(ValueError, match="bounds"):
        optimal_tau(ens, 1.0, bounds=(2.0, 1.0))


def test_trapping_safe_tau_values():
    assert trapping_safe_tau(1, 1.0) == pytest.approx(math.pi)
    assert trapping_safe_tau(4, 1.0) == pytest.approx(math.pi / 2)
    tau = 0.99 * trapping_safe_tau(6, 1.0)
    assert min(math.sin(math.sqrt(k) * tau) ** 2 for k in range(1, 7)) > 0


# --- stepping and runs -------------------------------------------------------------


def test_step_half_rabi_always_excites():
    ens = WeightedEnsemble.from_weights({3: 1.0})
    rng = split_rng(5)
    for expected_m in (1, 2, 3):
        tau = policy_tau(HalfRabiTau(3), ens, 1.0)
        assert excite_prob(ens, 1.0, tau) == pytest.approx(1.0, abs=1e-12)
        outcome, ens, _ = step(ens, HalfRabiTau(3), 1.0, rng)
        assert outcome is EXCITED
        assert ens.transferred == expected_m
    assert ens.is_vacuum_certain()


def test_step_refuses_vacuum_certain():
    ens = WeightedEnsemble.from_weights({1: 1.0}, transferred=1)
    with pytest.raises(ValueError, match="vacuum"):
        step(ens, FixedTau(0.5), 1.0, split_rng(0))


def test_step_at_trapping_point_never_excites():
    # gamma tau = pi/sqrt(4): the n=4 branch sits at a trapping point
    ens = WeightedEnsemble.from_weights({4: 1.0})
    rng = split_rng(9)
    for _ in range(50):
        outcome, ens, _ = step(ens, FixedTau(math.pi / 2), 1.0, rng)
        assert outcome is GROUND
    assert ens.transferred == 0


def test_step_seeded_reproducibility():
    ens = WeightedEnsemble.from_weights(binomial_distribution(6))
    policy = JitteredTau(center=0.825, sigma=0.05)
    runs = []
    for _ in range(2):
        rng = split_rng(17)
        state = ens
        record = []
        for _ in range(20):
            if state.is_vacuum_certain():
                break
            outcome, state, tau = step(state, policy, 1.0, rng)
            record.append((outcome, tau, tuple(state.weights)))
        runs.append(record)
    assert runs[0] == runs[1]


def test_run_half_rabi_reaches_vacuum():
    config = make_config(
        distribution=DistributionSpec("explicit", weights={2: 1.0}),
        policy="half-rabi",
        tau=None,
    )
    trace = run(config, split_rng(1))
    assert len(trace.events) == 2
    assert all(e.outcome is EXCITED for e in trace.events)
    assert trace.reason is StopReason.VACUUM_CERTAIN
    assert trace.transferred_total == 2
    assert trace.events[-1].quality_after == pytest.approx(1.0, abs=1e-12)


def test_run_trapped_terminates_at_cutoff():
    config = make_config(
        distribution=DistributionSpec("explicit", weights={4: 1.0}),
        tau=math.pi / 2,
        cutoff=15,
    )
    trace = run(config, split_rng(2))
    assert trace.reason is StopReason.CUTOFF
    assert len(trace.events) == 15
    assert trace.transferred_total == 0


def test_run_respects_atom_budget():
    config = make_config(cutoff=10_000, atom_budget=7)
    trace = run(config, split_rng(3))
    assert trace.reason is StopReason.ATOM_BUDGET
    assert len(trace.events) == 7


def test_run_seeded_traces_identical():
    config = make_config(policy="jittered", sigma_rel=0.05, cutoff=20)
    t1 = run(config, split_rng(11))
    t2 = run(config, split_rng(11))
    assert [(e.outcome, e.tau, e.weights_after) for e in t1.events] == [
        (e.outcome, e.tau, e.weights_after) for e in t2.events
    ]
    assert t1.reason is t2.reason


def test_run_events_stay_normalized():
    config = make_config(policy="optimal-each-step", tau=None, cutoff=12)
    trace = run(config, split_rng(21))
    for event in trace.events:
        assert sum(event.weights_after.values()) == pytest.approx(1.0, abs=1e-12)
        assert event.transferred_after <= 6
        assert 0.0 <= event.p_excite_before <= 1.0


def test_run_staircase_and_collapse():
    config = make_config(cutoff=20, seed=7)
    trace = run(config, split_rng(7))
    transfers = [e.transferred_after for e in trace.events]
    assert transfers == sorted(transfers)
    top_n, top_p = max(trace.final.as_dict().items(), key=lambda kv: kv[1])
    assert top_p > 0.99
    assert top_n == trace.transferred_total


# --- concentration of the mixture ------------------------------------------------


def entropy(weights: np.ndarray) -> float:
    live = weights[weights > 0]
    return float(-np.sum(live * np.log(live)))


def test_expected_entropy_never_increases():
    # exact conditional-entropy inequality, branch-weighted
    rng = np.random.default_rng(31)
    for _ in range(200):
        ns = rng.choice(np.arange(1, 9), size=rng.integers(2, 6), replace=False)
        ws = rng.random(len(ns))
        ens = WeightedEnsemble.from_weights(
            dict(zip(ns.tolist(), ws / ws.sum())), normalize=True
        )
        tau = rng.uniform(0.05, 2.5)
        p_e = excite_prob(ens, 1.0, tau)
        expected = 0.0
        if p_e > 0:
            expected += p_e * entropy(update_weights(ens, 1.0, tau, EXCITED).weights)
        if p_e < 1:
            expected += (1 - p_e) * entropy(update_weights(ens, 1.0, tau, GROUND).weights)
        assert expected <= entropy(ens.weights) + 1e-12


def test_entropy_decreases_along_sampled_runs():
    # Monte Carlo version: mean per-step entropy change over 10^4 sampled
    # steps must not be significantly positive (3 sigma)
    rng = split_rng(47)
    tau = 0.6  # trapping-safe for n_max = 6
    deltas = []
    ens = WeightedEnsemble.from_weights(binomial_distribution(6))
    while len(deltas) < 10_000:
        if ens.is_vacuum_certain():
            ens = WeightedEnsemble.from_weights(binomial_distribution(6))
        before = entropy(ens.weights)
        _, ens, _ = step(ens, FixedTau(tau), 1.0, rng)
        deltas.append(entropy(ens.weights) - before)
    deltas = np.array(deltas)
    stderr = deltas.std(ddof=1) / math.sqrt(len(deltas))
    assert deltas.mean() <= 3 * stderr
