"""Ensemble-level execution of the qubit-transfer schemes.

The cavity is described classically as a mixture over total photon number
n with weights p_n, plus the count m of qubits already moved onto atoms.
One atom pass with interaction time tau excites the atom with probability
sum_n p_n sin^2(sqrt(n - m) gamma tau); the measured energy then updates
the weights Bayes-style. Within a fixed-n branch every term shares one
Rabi frequency, so the weight dynamics are independent of the branch's
internal state -- which is why this module never touches a state vector.
`fockspace` provides the brute-force cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Union

import numpy as np

from . import cloning
from .config import ExperimentConfig

WEIGHT_TOL = 1e-12

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class MeasurementOutcome(Enum):
    GROUND = "ground"
    EXCITED = "excited"


class StopReason(Enum):
    CUTOFF = "cutoff-reached"
    VACUUM_CERTAIN = "vacuum-certain"
    ATOM_BUDGET = "atom-budget-exhausted"


@dataclass(frozen=True)
class WeightedEnsemble:
    """Mixture over total photon number, plus the transferred-qubit count.

    `photon_numbers` and `weights` are aligned arrays; weights sum to 1 and
    vanish for branches with fewer photons than qubits already transferred
    (those branches are impossible). `dicke_payload` optionally carries the
    within-branch symmetric-state coefficients; the transfer never changes
    the represented state, so updates pass it through untouched.
    """

    photon_numbers: np.ndarray
    weights: np.ndarray
    transferred: int = 0
    dicke_payload: Mapping[int, np.ndarray] | None = None

    def __post_init__(self) -> None:
        ns = np.asarray(self.photon_numbers, dtype=int)
        ws = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "photon_numbers", ns)
        object.__setattr__(self, "weights", ws)
        if ns.ndim != 1 or ns.shape != ws.shape:
            raise ValueError("photon_numbers and weights must be aligned 1-d arrays")
        if len(np.unique(ns)) != len(ns):
            raise ValueError("duplicate photon-number branches")
        if np.any(ns < 0):
            raise ValueError("photon numbers must be non-negative")
        if self.transferred < 0:
            raise ValueError("transferred count must be non-negative")
        if np.any(ws < 0):
            raise ValueError("weights must be non-negative")
        if abs(ws.sum() - 1.0) > WEIGHT_TOL:
            raise ValueError(f"weights must sum to 1, got {ws.sum()!r}")
        if np.any(ws[ns < self.transferred] != 0):
            raise ValueError(
                f"branches with n < transferred={self.transferred} must carry zero weight"
            )

    @classmethod
    def from_weights(
        cls,
        mapping: Mapping[int, float],
        transferred: int = 0,
        normalize: bool = False,
        dicke_payload: Mapping[int, np.ndarray] | None = None,
    ) -> "WeightedEnsemble":
        ns = np.array(sorted(mapping), dtype=int)
        ws = np.array([mapping[n] for n in ns], dtype=float)
        if normalize:
            ws = ws / ws.sum()
        return cls(ns, ws, transferred, dicke_payload)

    def as_dict(self) -> dict[int, float]:
        return {int(n): float(w) for n, w in zip(self.photon_numbers, self.weights)}

    def remaining_photons(self) -> np.ndarray:
        """Photons left per branch, floored at 0 for dead (zero-weight)
        branches so downstream sqrt stays finite."""
        return np.maximum(self.photon_numbers - self.transferred, 0)

    def is_vacuum_certain(self) -> bool:
        """True when a single branch survives and it has no photons left."""
        alive = self.weights > 0
        return alive.sum() == 1 and int(self.photon_numbers[alive][0]) == self.transferred


def excite_prob(ens: WeightedEnsemble, gamma: float, tau) -> float | np.ndarray:
    """Probability that the next atom leaves the cavity excited.

    Branch n oscillates at sqrt(n - m) gamma, m being the transferred
    count; empty branches (n = m) contribute nothing. `tau` may be an
    array, in which case the curve is returned.
    """
    tau_arr = np.asarray(tau, dtype=float)
    freq = np.sqrt(ens.remaining_photons())
    probs = ens.weights @ np.sin(np.outer(freq, gamma * tau_arr.ravel())) ** 2
    if tau_arr.ndim == 0:
        return float(probs[0])
    return probs.reshape(tau_arr.shape)


def update_weights(
    ens: WeightedEnsemble, gamma: float, tau: float, outcome: MeasurementOutcome
) -> WeightedEnsemble:
    """Condition the mixture on one measured outcome.

    Ground multiplies each branch by cos^2, excited by sin^2 of its Rabi
    phase; excited also increments the transferred count, which kills the
    branch that had no photons left (its sin^2 factor is exactly zero).
    """
    phase = np.sqrt(ens.remaining_photons()) * gamma * tau
    if outcome is MeasurementOutcome.EXCITED:
        factors = np.sin(phase) ** 2
        new_transferred = ens.transferred + 1
    else:
        factors = np.cos(phase) ** 2
        new_transferred = ens.transferred
    posterior = ens.weights * factors
    total = posterior.sum()
    if total <= 0.0:
        raise ValueError(f"cannot condition on zero-probability outcome {outcome.value}")
    return WeightedEnsemble(
        ens.photon_numbers, posterior / total, new_transferred, ens.dicke_payload
    )


# --- interaction-time policies -------------------------------------------


@dataclass(frozen=True)
class FixedTau:
    tau: float

    def __post_init__(self) -> None:
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")


@dataclass(frozen=True)
class HalfRabiTau:
    """Half a Rabi period for a known total photon number: the
    deterministic scheme's timing, tau = pi / (2 sqrt(n - m) gamma)."""

    photon_number: int


@dataclass(frozen=True)
class OptimalEachStep:
    """Re-run the excitation-probability maximization before every atom."""

    bounds: tuple[float, float] | None = None
    grid_points: int = 2000


@dataclass(frozen=True)
class JitteredTau:
    """Gaussian interaction time, truncated to tau > 0 by resampling."""

    center: float
    sigma: float

    def __post_init__(self) -> None:
        if not self.center > 0:
            raise ValueError(f"center must be positive, got {self.center}")
        if self.sigma < 0:
            raise ValueError(f"sigma must be non-negative, got {self.sigma}")


TauPolicy = Union[FixedTau, HalfRabiTau, OptimalEachStep, JitteredTau]


def policy_tau(
    policy: TauPolicy,
    ens: WeightedEnsemble,
    gamma: float,
    rng: np.random.Generator | None = None,
) -> float:
    """Interaction time for the next atom under the given policy."""
    if isinstance(policy, FixedTau):
        return policy.tau
    if isinstance(policy, HalfRabiTau):
        remaining = policy.photon_number - ens.transferred
        if remaining <= 0:
            raise ValueError("half-Rabi timing undefined once the cavity is empty")
        return math.pi / (2.0 * math.sqrt(remaining) * gamma)
    if isinstance(policy, OptimalEachStep):
        return optimal_tau(ens, gamma, policy.bounds, policy.grid_points)
    if isinstance(policy, JitteredTau):
        if rng is None:
            raise ValueError("jittered policy needs an rng")
        if policy.sigma == 0:
            return policy.center
        while True:
            tau = rng.normal(policy.center, policy.sigma)
            if tau > 0:
                return tau
    raise TypeError(f"unknown tau policy {policy!r}")


def step(
    ens: WeightedEnsemble, policy: TauPolicy, gamma: float, rng: np.random.Generator
) -> tuple[MeasurementOutcome, WeightedEnsemble, float]:
    """Pass one atom: pick tau, sample the measured outcome, update."""
    if ens.is_vacuum_certain():
        raise ValueError("cannot step a vacuum-certain ensemble")
    tau = policy_tau(policy, ens, gamma, rng)
    p_e = excite_prob(ens, gamma, tau)
    outcome = MeasurementOutcome.EXCITED if rng.random() < p_e else MeasurementOutcome.GROUND
    return outcome, update_weights(ens, gamma, tau, outcome), tau


def optimal_tau(
    ens: WeightedEnsemble,
    gamma: float,
    bounds: tuple[float, float] | None = None,
    grid_points: int = 2000,
) -> float:
    """Interaction time maximizing the excitation probability.

    Grid scan over the bounds (default (0, pi/gamma]) followed by
    golden-section refinement of the best bracket. Ties break toward the
    smaller tau.
    """
    if bounds is None:
        bounds = (0.0, math.pi / gamma)
    lo, hi = bounds
    if not hi > max(lo, 0.0):
        raise ValueError(f"empty tau bounds {bounds}")
    if grid_points < 2:
        raise ValueError("grid_points must be at least 2")
    grid = np.linspace(lo, hi, grid_points)
    grid = grid[grid > 0]
    values = excite_prob(ens, gamma, grid)
    best = int(np.argmax(values))  # first max = smallest tau on ties

    a = grid[best - 1] if best > 0 else grid[0]
    b = grid[best + 1] if best + 1 < len(grid) else grid[-1]
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc = excite_prob(ens, gamma, c)
    fd = excite_prob(ens, gamma, d)
    for _ in range(80):
        if fc >= fd:  # keep the left interval on ties
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = excite_prob(ens, gamma, c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = excite_prob(ens, gamma, d)
    candidates = [(float(grid[best]), float(values[best])), (float(c), float(fc)), (float(d), float(fd))]
    best_value = max(v for _, v in candidates)
    return min(t for t, v in candidates if v >= best_value)


def trapping_safe_tau(n_max: int, gamma: float) -> float:
    """Upper bound pi / (gamma sqrt(n_max)): any fixed tau strictly below
    it keeps sin^2(sqrt(k) gamma tau) > 0 for every occupied branch, so no
    trapping point is ever hit."""
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    return math.pi / (gamma * math.sqrt(n_max))


# --- full runs -------------------------------------------------------------


@dataclass(frozen=True)
class TraceEvent:
    atom_index: int
    tau: float
    outcome: MeasurementOutcome
    p_excite_before: float
    weights_after: dict[int, float]
    transferred_after: int
    atom_fidelity_after: float
    quality_after: float | None


@dataclass(frozen=True)
class ProtocolTrace:
    initial: WeightedEnsemble
    events: list[TraceEvent]
    reason: StopReason
    final: WeightedEnsemble

    @property
    def transferred_total(self) -> int:
        return self.final.transferred


def _policy_from_config(config: ExperimentConfig, ens: WeightedEnsemble, gamma: float) -> TauPolicy:
    name = config.policy
    if name == "optimal-each-step":
        return OptimalEachStep()
    if name == "half-rabi":
        alive = ens.photon_numbers[ens.weights > 0]
        if len(alive) != 1:
            raise ValueError("half-rabi policy needs a known (single-branch) photon number")
        return HalfRabiTau(int(alive[0]))
    tau = config.tau if config.tau is not None else optimal_tau(ens, gamma)
    if name == "fixed":
        return FixedTau(tau)
    if name == "jittered":
        return JitteredTau(center=tau, sigma=config.sigma_rel * tau)
    raise ValueError(f"unknown tau policy {name!r}")


def run(config: ExperimentConfig, rng: np.random.Generator) -> ProtocolTrace:
    """Pass atoms until `cutoff` consecutive ground results, the atom
    budget runs out, or the mixture is certainly down to the vacuum."""
    ens = WeightedEnsemble.from_weights(config.initial_weights())
    gamma = config.gamma
    policy = _policy_from_config(config, ens, gamma)
    events: list[TraceEvent] = []
    initial = ens
    consecutive_ground = 0
    while True:
        if ens.is_vacuum_certain():
            reason = StopReason.VACUUM_CERTAIN
            break
        if len(events) >= config.atom_budget:
            reason = StopReason.ATOM_BUDGET
            break
        before = ens
        outcome, ens, tau = step(ens, policy, gamma, rng)
        p_e = excite_prob(before, gamma, tau)
        consecutive_ground = 0 if outcome is MeasurementOutcome.EXCITED else consecutive_ground + 1
        f_atom = cloning.atom_fidelity(ens.as_dict(), config.n_originals)
        q = (
            cloning.quality(f_atom, config.n_originals, ens.transferred)
            if ens.transferred >= 1
            else None
        )
        events.append(
            TraceEvent(
                atom_index=len(events),
                tau=float(tau),
                outcome=outcome,
                p_excite_before=float(p_e),
                weights_after=ens.as_dict(),
                transferred_after=ens.transferred,
                atom_fidelity_after=float(f_atom),
                quality_after=q,
            )
        )
        if consecutive_ground >= config.cutoff:
            reason = StopReason.CUTOFF
            break
    return ProtocolTrace(initial=initial, events=events, reason=reason, final=ens)
