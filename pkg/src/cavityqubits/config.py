"""Experiment configuration, seeding, and the key=value config-file format.

Config files are plain text, one `key = value` per line, `#` comments;
command-line flags override file values. Every stochastic experiment
requires an explicit master seed, and derived streams always come from
`split_rng` so identical configs reproduce bit-identical outputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Mapping

import numpy as np

from . import cloning

# Recorded in output metadata so results stay attributable to a generator.
RNG_DESCRIPTION = "numpy PCG64 via default_rng(SeedSequence([seed, *stream]))"


def split_rng(seed: int, *stream: int) -> np.random.Generator:
    """Independent generator for (seed, stream indices).

    The split rule is SeedSequence([seed, *stream]); per-run streams use
    the run index, per-cell streams in grid experiments use the flat cell
    index (and the run index within the cell where both apply).
    """
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    return np.random.default_rng(np.random.SeedSequence([seed, *stream]))


@dataclass(frozen=True)
class DistributionSpec:
    """Initial photon-number distribution: a binomial or uniform preset, or
    explicit weights."""

    kind: str
    n_max: int | None = None
    n_min: int = 1
    weights: Mapping[int, float] | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("binomial", "uniform", "explicit"):
            raise ValueError(f"unknown distribution kind {self.kind!r}")
        if self.kind in ("binomial", "uniform") and (self.n_max is None or self.n_max < 1):
            raise ValueError(f"distribution {self.kind!r} needs n_max >= 1")
        if self.kind == "explicit" and not self.weights:
            raise ValueError("explicit distribution needs weights")

    def resolve(self) -> dict[int, float]:
        if self.kind == "binomial":
            return cloning.binomial_distribution(self.n_max)
        if self.kind == "uniform":
            return cloning.uniform_distribution(self.n_min, self.n_max)
        return {int(n): float(p) for n, p in sorted(self.weights.items())}

    def max_photon_number(self) -> int:
        if self.kind == "explicit":
            return max(self.weights)
        return self.n_max

    def describe(self) -> str:
        if self.kind == "binomial":
            return f"binomial:{self.n_max}"
        if self.kind == "uniform":
            return f"uniform:{self.n_min}..{self.n_max}"
        return "explicit:" + ",".join(f"{n}={p!r}" for n, p in sorted(self.weights.items()))

    @classmethod
    def parse(cls, text: str) -> "DistributionSpec":
        """Parse 'binomial:6', 'uniform:1..10' or 'explicit:1=0.5,2=0.5'."""
        kind, _, rest = text.strip().partition(":")
        if kind == "binomial":
            return cls("binomial", n_max=int(rest))
        if kind == "uniform":
            lo, _, hi = rest.partition("..")
            return cls("uniform", n_min=int(lo), n_max=int(hi))
        if kind == "explicit":
            weights = {}
            for item in rest.split(","):
                n, _, p = item.partition("=")
                weights[int(n)] = float(p)
            return cls("explicit", weights=weights)
        raise ValueError(f"cannot parse distribution spec {text!r}")


EXPERIMENT_NAMES = ("weights-evolution", "trapping-curves", "quality-cutoff", "custom")


@dataclass
class ExperimentConfig:
    """Everything a run needs; which fields matter depends on the
    experiment (single protocol run, trapping-curve grid, or the
    quality-versus-cutoff average)."""

    experiment: str = "custom"
    distribution: DistributionSpec = field(
        default_factory=lambda: DistributionSpec("binomial", n_max=6)
    )
    gamma: float = 1.0  # defines the time unit; taus are in units of 1/gamma
    policy: str = "fixed"  # fixed | optimal-each-step | half-rabi | jittered
    tau: float | None = None  # None -> optimum for the initial mixture
    sigma_rel: float = 0.0
    cutoff: int = 20
    atom_budget: int = 10_000
    seed: int | None = None
    out: str | None = None
    n_originals: int = 1
    # trapping-curve grid
    sigma_rel_values: tuple[float, ...] = ()
    rabi_cycles_values: tuple[int, ...] = (1, 2, 3)
    trap_photon_number: int = 1
    trials: int = 10_000
    # quality-cutoff grid
    cutoffs: tuple[int, ...] = tuple(range(1, 31))
    runs: int = 1000

    def initial_weights(self) -> dict[int, float]:
        return self.distribution.resolve()

    def metadata(self, version: str) -> list[tuple[str, str]]:
        """Config echo for the CSV header block (deterministic order)."""
        items: list[tuple[str, str]] = [("version", version), ("rng", RNG_DESCRIPTION)]
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, DistributionSpec):
                value = value.describe()
            elif isinstance(value, tuple):
                value = ",".join(repr(v) if isinstance(v, float) else str(v) for v in value)
            elif isinstance(value, float):
                value = repr(value)
            items.append((f.name, str(value)))
        return items


def parse_config_file(path: str | Path) -> dict[str, str]:
    """Read `key = value` lines; keys are normalized to snake_case."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        values[key.strip().lower().replace("-", "_")] = value.strip()
    return values


def parse_float_list(text: str) -> list[float]:
    """'a:b:step' (inclusive range), 'x,y,z', or a single value."""
    text = text.strip()
    if ":" in text:
        start_s, stop_s, step_s = text.split(":")
        start, stop, step = float(start_s), float(stop_s), float(step_s)
        if step <= 0:
            raise ValueError(f"range step must be positive in {text!r}")
        count = int(round((stop - start) / step))
        values = [start + k * step for k in range(count + 1)]
        return [v for v in values if v <= stop + step * 1e-9]
    return [float(v) for v in text.split(",") if v.strip()]


def parse_int_list(text: str) -> list[int]:
    """'a..b' (inclusive range), 'x,y,z', or a single value."""
    text = text.strip()
    if ".." in text:
        lo_s, _, hi_s = text.partition("..")
        lo, hi = int(lo_s), int(hi_s)
        if hi < lo:
            raise ValueError(f"empty integer range {text!r}")
        return list(range(lo, hi + 1))
    return [int(v) for v in text.split(",") if v.strip()]
