"""Brute-force state-vector oracle for the cavity + atoms system.

The joint Hilbert space is (three atomic levels)^atoms x (two-mode Fock
space truncated at n0 + n1 <= n_max). Everything here is dense and exact:
the interaction Hamiltonian conserves total excitation number, so the
truncation introduces no error as long as n_max matches the initial photon
number. Evolution goes through a Hermitian eigendecomposition rather than
a time stepper.

This module exists to cross-check the closed-form ensemble dynamics in
`protocol`; nothing in it is performance-critical at desk scale
(atoms <= 6, photons <= 6).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from enum import IntEnum
from typing import NamedTuple

import numpy as np

from .protocol import MeasurementOutcome

NORM_TOL = 1e-10


class AtomLevel(IntEnum):
    """Three-level V configuration: one ground level, two degenerate excited
    levels that carry the qubit."""

    GROUND = 0
    EXC0 = 1  # excited level representing qubit |0>
    EXC1 = 2  # excited level representing qubit |1>


class FockLabel(NamedTuple):
    n0: int
    n1: int


@dataclass(frozen=True)
class CouplingParams:
    """Atom-cavity coupling constant (units 1/time, hbar = 1). Both
    excited-to-ground transitions share the same gamma."""

    gamma: float = 1.0

    def __post_init__(self) -> None:
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")


class JointSpace:
    """Basis bookkeeping for `atom_count` atoms and a two-mode cavity.

    Basis elements are (levels, n0, n1) with levels a tuple of AtomLevel
    and n0 + n1 <= n_max; `index()` maps them to flat positions.
    """

    def __init__(self, atom_count: int, n_max: int):
        if atom_count < 0:
            raise ValueError(f"atom_count must be >= 0, got {atom_count}")
        if n_max < 0:
            raise ValueError(f"n_max must be >= 0, got {n_max}")
        self.atom_count = atom_count
        self.n_max = n_max
        fock = [FockLabel(n0, n1) for n0 in range(n_max + 1) for n1 in range(n_max + 1 - n0)]
        levels = list(itertools.product(tuple(AtomLevel), repeat=atom_count))
        self.basis = [(lv, f.n0, f.n1) for lv in levels for f in fock]
        self._index = {b: i for i, b in enumerate(self.basis)}
        self.dim = len(self.basis)
        self._ham_cache: dict[tuple[int, float], np.ndarray] = {}
        self._mode_op_cache: dict[int, np.ndarray] = {}

    def index(self, levels, n0: int, n1: int) -> int:
        return self._index[(tuple(AtomLevel(l) for l in levels), n0, n1)]

    def excitation_numbers(self) -> np.ndarray:
        """Total excitation N = (# atoms not in ground) + n0 + n1, per basis
        element. The interaction Hamiltonian commutes with this."""
        return np.array(
            [sum(l != AtomLevel.GROUND for l in lv) + n0 + n1 for lv, n0, n1 in self.basis]
        )

    def annihilation_matrix(self, mode: int) -> np.ndarray:
        """Dense matrix of the ladder operator for cavity mode 0 or 1."""
        if mode not in (0, 1):
            raise ValueError(f"mode must be 0 or 1, got {mode}")
        if mode not in self._mode_op_cache:
            op = np.zeros((self.dim, self.dim))
            for src, (lv, n0, n1) in enumerate(self.basis):
                if mode == 0 and n0 > 0:
                    op[self._index[(lv, n0 - 1, n1)], src] = math.sqrt(n0)
                elif mode == 1 and n1 > 0:
                    op[self._index[(lv, n0, n1 - 1)], src] = math.sqrt(n1)
            self._mode_op_cache[mode] = op
        return self._mode_op_cache[mode]

    def hamiltonian(self, atom_index: int, gamma: float) -> np.ndarray:
        if not 0 <= atom_index < self.atom_count:
            raise IndexError(f"atom_index {atom_index} out of range [0, {self.atom_count})")
        key = (atom_index, gamma)
        if key not in self._ham_cache:
            h = np.zeros((self.dim, self.dim))
            for src, (lv, n0, n1) in enumerate(self.basis):
                if lv[atom_index] != AtomLevel.GROUND:
                    continue
                # a0 |e0><g| and a1 |e1><g| on the addressed atom
                if n0 > 0:
                    tgt = lv[:atom_index] + (AtomLevel.EXC0,) + lv[atom_index + 1 :]
                    h[self._index[(tgt, n0 - 1, n1)], src] = gamma * math.sqrt(n0)
                if n1 > 0:
                    tgt = lv[:atom_index] + (AtomLevel.EXC1,) + lv[atom_index + 1 :]
                    h[self._index[(tgt, n0, n1 - 1)], src] = gamma * math.sqrt(n1)
            h = h + h.T  # hermitian closure adds the a0^dag |g><e0| terms
            self._ham_cache[key] = h
        return self._ham_cache[key]


@dataclass(frozen=True)
class JointPureState:
    """Amplitude vector over a JointSpace basis.

    Normalization is not enforced here because ladder-operator outputs are
    legitimately unnormalized; physical states keep unit norm and the
    evolution/measurement routines check it where it matters.
    """

    space: JointSpace
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (self.space.dim,):
            raise ValueError(
                f"amplitude vector has shape {amps.shape}, expected ({self.space.dim},)"
            )
        object.__setattr__(self, "amplitudes", amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "JointPureState":
        n = self.norm()
        if n == 0:
            raise ValueError("cannot normalize the zero vector")
        return JointPureState(self.space, self.amplitudes / n)

    def overlap(self, other: "JointPureState") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def fidelity(self, other: "JointPureState") -> float:
        return abs(self.overlap(other)) ** 2


@dataclass(frozen=True)
class MeasurementResult:
    outcome: MeasurementOutcome
    probability: float
    post_state: JointPureState


def basis_state(space: JointSpace, levels, n0: int, n1: int) -> JointPureState:
    amps = np.zeros(space.dim, dtype=complex)
    amps[space.index(levels, n0, n1)] = 1.0
    return JointPureState(space, amps)


def qubit_register_state(
    space: JointSpace, qubit_amplitudes: np.ndarray, n0: int = 0, n1: int = 0
) -> JointPureState:
    """Embed a 2**atoms qubit-register vector into the joint basis, with the
    cavity in |n0, n1>. Qubit |0> maps to EXC0, |1> to EXC1; qubit 0 is the
    most significant bit (np.kron ordering, as in `symstate`)."""
    m = space.atom_count
    qubit_amplitudes = np.asarray(qubit_amplitudes, dtype=complex)
    if qubit_amplitudes.shape != (2**m,):
        raise ValueError(f"expected {2**m} register amplitudes")
    amps = np.zeros(space.dim, dtype=complex)
    for idx, a in enumerate(qubit_amplitudes):
        if a == 0:
            continue
        levels = tuple(
            AtomLevel.EXC1 if (idx >> (m - 1 - q)) & 1 else AtomLevel.EXC0 for q in range(m)
        )
        amps[space.index(levels, n0, n1)] = a
    return JointPureState(space, amps)


def annihilate(state: JointPureState, mode: int) -> JointPureState:
    """Apply the ladder operator of the given cavity mode (unnormalized)."""
    op = state.space.annihilation_matrix(mode)
    return JointPureState(state.space, op @ state.amplitudes)


def interaction_hamiltonian(
    space: JointSpace, atom_index: int, params: CouplingParams = CouplingParams()
) -> np.ndarray:
    """Dense Hermitian matrix of gamma*(a0 |e0><g| + a1 |e1><g| + h.c.)
    acting on the addressed atom. Commutes with the total excitation
    number, so each N sector evolves independently."""
    return space.hamiltonian(atom_index, params.gamma)


def evolution_operator(hamiltonian: np.ndarray, t: float) -> np.ndarray:
    """exp(-i H t) by Hermitian eigendecomposition (hbar = 1)."""
    w, v = np.linalg.eigh(hamiltonian)
    return (v * np.exp(-1j * w * t)) @ v.conj().T


def evolve(state: JointPureState, hamiltonian: np.ndarray, t: float) -> JointPureState:
    if hamiltonian.shape != (state.space.dim, state.space.dim):
        raise ValueError(
            f"hamiltonian shape {hamiltonian.shape} does not match space dim {state.space.dim}"
        )
    return JointPureState(state.space, evolution_operator(hamiltonian, t) @ state.amplitudes)


def measure_atom_energy(
    state: JointPureState,
    atom_index: int,
    rng: np.random.Generator | None = None,
    outcome: MeasurementOutcome | None = None,
) -> MeasurementResult:
    """Projective energy measurement of one atom.

    The two excited levels are degenerate, so the excited branch projects
    onto their joint span and leaves any qubit superposition intact. Pass
    `rng` to sample the branch, or force one with `outcome`; forcing a
    zero-probability branch raises.
    """
    space = state.space
    if not 0 <= atom_index < space.atom_count:
        raise IndexError(f"atom_index {atom_index} out of range [0, {space.atom_count})")
    if (rng is None) == (outcome is None):
        raise ValueError("pass exactly one of rng or outcome")

    ground_mask = np.array([lv[atom_index] == AtomLevel.GROUND for lv, _, _ in space.basis])
    total = state.norm() ** 2
    p_ground = float(np.sum(np.abs(state.amplitudes[ground_mask]) ** 2) / total)
    p_ground = min(max(p_ground, 0.0), 1.0)

    if outcome is None:
        outcome = (
            MeasurementOutcome.GROUND if rng.random() < p_ground else MeasurementOutcome.EXCITED
        )
    prob = p_ground if outcome is MeasurementOutcome.GROUND else 1.0 - p_ground
    if prob <= 0.0:
        raise ValueError(f"branch {outcome.value} has zero probability")

    keep = ground_mask if outcome is MeasurementOutcome.GROUND else ~ground_mask
    post = np.where(keep, state.amplitudes, 0.0)
    post = post / np.linalg.norm(post)
    return MeasurementResult(outcome, prob, JointPureState(space, post))


def reduced_atom_state(state: JointPureState, atom_index: int) -> np.ndarray:
    """3x3 density matrix of one atom, tracing out everything else."""
    space = state.space
    if not 0 <= atom_index < space.atom_count:
        raise IndexError(f"atom_index {atom_index} out of range [0, {space.atom_count})")
    total = state.norm() ** 2
    rho = np.zeros((3, 3), dtype=complex)
    # group basis indices by the state of all other subsystems
    groups: dict[tuple, np.ndarray] = {}
    for i, (lv, n0, n1) in enumerate(space.basis):
        key = (lv[:atom_index] + lv[atom_index + 1 :], n0, n1)
        vec = groups.setdefault(key, np.zeros(3, dtype=complex))
        vec[lv[atom_index]] += state.amplitudes[i]
    for vec in groups.values():
        rho += np.outer(vec, vec.conj())
    return rho / total


def partially_transferred_state(
    space: JointSpace,
    zeros: int,
    total: int,
    transferred: int,
    params: CouplingParams = CouplingParams(),
) -> JointPureState:
    """Physical representation of the symmetric state with `zeros` of
    `total` qubits in |0>, after `transferred` qubits have been moved onto
    the first atoms (the rest of the photons stay in the cavity).

    Built by applying H_k / (sqrt(total - k + 1) * gamma) for k = 1..m to
    |g..g> |zeros, total - zeros>; each application moves one qubit and
    preserves the norm, which is asserted.
    """
    if not 0 <= zeros <= total:
        raise ValueError(f"zeros must lie in [0, {total}], got {zeros}")
    if total > space.n_max:
        raise ValueError(f"total={total} exceeds the space truncation n_max={space.n_max}")
    if not 0 <= transferred <= min(total, space.atom_count):
        raise ValueError(f"transferred={transferred} not representable in this space")
    levels = (AtomLevel.GROUND,) * space.atom_count
    state = basis_state(space, levels, zeros, total - zeros)
    for k in range(1, transferred + 1):
        h = space.hamiltonian(k - 1, params.gamma)
        amps = (h @ state.amplitudes) / (math.sqrt(total - k + 1) * params.gamma)
        state = JointPureState(space, amps)
    assert abs(state.norm() - 1.0) < NORM_TOL, "transfer chain should preserve the norm"
    return state
