"""Experiment harness: named reproductions of the three figure datasets.

Subcommands
-----------
fig2 / custom   one seeded protocol run; per-step weight table
fig3            trapping-escape curves, closed form + Monte Carlo
fig4            mean clone quality versus ground-measurement cutoff
validate        check a configuration without running it
check           re-ingest an output CSV and confirm its closed-form columns

Outputs are CSV with a `# key = value` metadata block (full config echo,
seed, package version, RNG identity). No timestamps: identical
(config, seed) pairs produce bit-identical files. Default output
directory comes from $CAVITYQUBITS_OUTDIR.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__, cloning, protocol, trapping
from .config import (
    DistributionSpec,
    ExperimentConfig,
    parse_config_file,
    parse_float_list,
    parse_int_list,
    split_rng,
)

OUTDIR_ENV = "CAVITYQUBITS_OUTDIR"

DEFAULT_SIGMA_REL_GRID = tuple(parse_float_list("0.01:0.20:0.01"))

# config-file / flag value parsers, keyed by ExperimentConfig field
_FIELD_PARSERS = {
    "experiment": str,
    "distribution": DistributionSpec.parse,
    "gamma": float,
    "policy": str,
    "tau": float,
    "sigma_rel": float,
    "cutoff": int,
    "atom_budget": int,
    "seed": int,
    "out": str,
    "n_originals": int,
    "sigma_rel_values": lambda s: tuple(parse_float_list(s)),
    "rabi_cycles_values": lambda s: tuple(parse_int_list(s)),
    "trap_photon_number": int,
    "trials": int,
    "cutoffs": lambda s: tuple(parse_int_list(s)),
    "runs": int,
}


@dataclass(frozen=True)
class Diagnostic:
    level: str  # "error" | "warning"
    field: str
    message: str

    def __str__(self) -> str:
        return f"{self.level}: {self.field}: {self.message}"


def validate(config: ExperimentConfig) -> list[Diagnostic]:
    """Pure configuration check; never runs anything."""
    diags: list[Diagnostic] = []

    def error(field: str, msg: str) -> None:
        diags.append(Diagnostic("error", field, msg))

    def warn(field: str, msg: str) -> None:
        diags.append(Diagnostic("warning", field, msg))

    if config.experiment not in ("weights-evolution", "trapping-curves", "quality-cutoff", "custom"):
        error("experiment", f"unknown experiment {config.experiment!r}")
    try:
        weights = config.initial_weights()
        total = sum(weights.values())
        if abs(total - 1.0) > 1e-9:
            error("distribution", f"weights sum to {total!r}, not 1")
        if any(p < 0 for p in weights.values()):
            error("distribution", "negative weights")
        if config.experiment != "trapping-curves" and any(
            n < 1 and p > 0 for n, p in weights.items()
        ):
            error("distribution", "clone-fidelity tracking needs every branch at n >= 1")
    except (ValueError, OverflowError) as exc:
        error("distribution", str(exc))
        weights = {}
    if not config.gamma > 0:
        error("gamma", f"must be positive, got {config.gamma}")
    if config.sigma_rel < 0:
        error("sigma_rel", f"must be non-negative, got {config.sigma_rel}")
    if config.policy not in ("fixed", "optimal-each-step", "half-rabi", "jittered"):
        error("policy", f"unknown policy {config.policy!r}")
    if config.tau is not None and not config.tau > 0:
        error("tau", f"must be positive, got {config.tau}")
    if config.cutoff < 1:
        error("cutoff", f"must be >= 1, got {config.cutoff}")
    if config.atom_budget < 1:
        error("atom_budget", f"must be >= 1, got {config.atom_budget}")
    if config.trials < 1:
        error("trials", f"must be >= 1, got {config.trials}")
    if config.runs < 1:
        error("runs", f"must be >= 1, got {config.runs}")
    if config.n_originals < 1:
        error("n_originals", f"must be >= 1, got {config.n_originals}")
    if config.seed is None:
        error("seed", "a master seed is required for reproducible runs")
    elif config.seed < 0:
        error("seed", f"must be non-negative, got {config.seed}")
    if config.experiment == "trapping-curves":
        if any(s <= 0 for s in config.sigma_rel_values or ()):
            error("sigma_rel_values", "jitter values must be positive")
        if any(m < 1 for m in config.rabi_cycles_values):
            error("rabi_cycles_values", "Rabi cycle counts must be >= 1")
        if config.trap_photon_number < 1:
            error("trap_photon_number", f"must be >= 1, got {config.trap_photon_number}")
    if config.experiment == "quality-cutoff" and any(c < 1 for c in config.cutoffs):
        error("cutoffs", "cutoff values must be >= 1")

    # a fixed tau at or above pi/(gamma sqrt(n_max)) can hit a trapping
    # point of some occupied branch and stall the run
    if weights and config.tau is not None and config.policy in ("fixed", "jittered"):
        n_max = max(n for n, p in weights.items() if p > 0)
        if n_max >= 1 and config.gamma > 0:
            bound = protocol.trapping_safe_tau(n_max, config.gamma)
            if config.tau >= bound:
                warn(
                    "tau",
                    f"tau = {config.tau!r} >= pi/(gamma*sqrt({n_max})) = {bound!r}; "
                    "a trapping point is reachable for some branch",
                )
    return diags


# --- output ---------------------------------------------------------------


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _output_path(config: ExperimentConfig) -> Path:
    if config.out is not None:
        return Path(config.out)
    base = Path(os.environ.get(OUTDIR_ENV, "."))
    return base / f"{config.experiment}.csv"


def _write_csv(
    path: Path,
    metadata: list[tuple[str, str]],
    header: list[str],
    rows: list[tuple],
) -> None:
    buf = io.StringIO()
    for key, value in metadata:
        buf.write(f"# {key} = {value}\n")
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(buf.getvalue())
    except OSError as exc:
        raise SystemExit(f"cannot write {path}: {exc}")


# --- experiment runners -----------------------------------------------------


def _run_weights_evolution(config: ExperimentConfig) -> Path:
    rng = split_rng(config.seed)
    initial = config.initial_weights()
    resolved_tau = config.tau
    if resolved_tau is None and config.policy in ("fixed", "jittered"):
        resolved_tau = protocol.optimal_tau(
            protocol.WeightedEnsemble.from_weights(initial), config.gamma
        )
        config = replace(config, tau=resolved_tau)
    trace = protocol.run(config, rng)

    rows: list[tuple] = []
    f_atom0 = cloning.atom_fidelity(initial, config.n_originals)
    for n, p in sorted(initial.items()):
        rows.append((0, n, p, f_atom0, 0))
    for event in trace.events:
        for n, p in sorted(event.weights_after.items()):
            rows.append(
                (event.atom_index + 1, n, p, event.atom_fidelity_after, event.transferred_after)
            )
    metadata = config.metadata(__version__)
    metadata.append(("terminal_reason", trace.reason.value))
    metadata.append(("transferred_total", str(trace.transferred_total)))
    path = _output_path(config)
    _write_csv(path, metadata, ["step", "n", "p_n", "F_atom", "transferred"], rows)
    return path


def _run_trapping_curves(config: ExperimentConfig) -> Path:
    sigma_rels = config.sigma_rel_values or DEFAULT_SIGMA_REL_GRID
    config = replace(config, sigma_rel_values=tuple(sigma_rels))
    rows: list[tuple] = []
    cell = 0
    for m_rabi in config.rabi_cycles_values:
        for sigma_rel in sigma_rels:
            spec = trapping.TrapSpec(
                photon_number=config.trap_photon_number,
                rabi_cycles=m_rabi,
                gamma=config.gamma,
                sigma_rel=sigma_rel,
            )
            estimate = trapping.monte_carlo_escape(
                spec, config.trials, split_rng(config.seed, cell)
            )
            rows.append(
                (
                    m_rabi,
                    sigma_rel,
                    trapping.mean_atoms_rel(m_rabi, sigma_rel),
                    estimate.mean,
                    estimate.stderr,
                )
            )
            cell += 1
    path = _output_path(config)
    _write_csv(
        path,
        config.metadata(__version__),
        ["m_rabi", "sigma_rel", "a_mean_closed", "a_mean_mc", "mc_stderr"],
        rows,
    )
    return path


def _run_quality_cutoff(config: ExperimentConfig) -> Path:
    """Average terminal clone quality per cutoff, over `runs` repetitions.

    The interaction time is the optimum for the initial mixture and stays
    fixed for the whole process. Runs that stop before any transfer have no
    clones; they count as quality 0.
    """
    initial = protocol.WeightedEnsemble.from_weights(config.initial_weights())
    resolved_tau = config.tau
    if resolved_tau is None:
        resolved_tau = protocol.optimal_tau(initial, config.gamma)
    n_max = config.distribution.max_photon_number()
    rows: list[tuple] = []
    for cutoff in config.cutoffs:
        run_config = replace(config, cutoff=cutoff, tau=resolved_tau, policy="fixed")
        qualities = np.empty(config.runs)
        for run_index in range(config.runs):
            rng = split_rng(config.seed, cutoff, run_index)
            trace = protocol.run(run_config, rng)
            last = trace.events[-1] if trace.events else None
            qualities[run_index] = (
                last.quality_after if last is not None and last.quality_after is not None else 0.0
            )
        stderr = float(qualities.std(ddof=1) / math.sqrt(config.runs)) if config.runs > 1 else 0.0
        rows.append((cutoff, float(qualities.mean()), stderr, n_max))
    metadata = config.metadata(__version__)
    metadata.append(("resolved_tau", repr(float(resolved_tau))))
    path = _output_path(config)
    _write_csv(path, metadata, ["cutoff", "mean_quality", "stderr", "n_max"], rows)
    return path


def run_experiment(config: ExperimentConfig) -> Path:
    """Validate, run, and write the experiment's CSV; returns the path."""
    diags = validate(config)
    errors = [d for d in diags if d.level == "error"]
    for d in diags:
        print(d, file=sys.stderr)
    if errors:
        raise SystemExit(f"invalid configuration ({len(errors)} error(s))")
    if config.experiment == "trapping-curves":
        return _run_trapping_curves(config)
    if config.experiment == "quality-cutoff":
        return _run_quality_cutoff(config)
    return _run_weights_evolution(config)


# --- CSV checker ------------------------------------------------------------


def _read_output(path: Path) -> tuple[dict[str, str], list[str], list[list[str]]]:
    metadata: dict[str, str] = {}
    table: list[str] = []
    for raw in path.read_text().splitlines():
        if raw.startswith("#"):
            key, _, value = raw.lstrip("# ").partition("=")
            metadata[key.strip()] = value.strip()
        elif raw.strip():
            table.append(raw)
    reader = csv.reader(table)
    header = next(reader)
    return metadata, header, list(reader)


def check_output(path: Path) -> list[str]:
    """Recompute whatever is recomputable in an output CSV; returns a list
    of problems (empty = file is consistent)."""
    problems: list[str] = []
    metadata, header, rows = _read_output(path)
    for required in ("version", "rng", "seed", "experiment", "distribution"):
        if required not in metadata:
            problems.append(f"metadata key {required!r} missing")
    if problems:
        return problems
    experiment = metadata["experiment"]
    dist = DistributionSpec.parse(metadata["distribution"])

    if experiment == "trapping-curves":
        if header != ["m_rabi", "sigma_rel", "a_mean_closed", "a_mean_mc", "mc_stderr"]:
            return problems + [f"unexpected header {header}"]
        for i, row in enumerate(rows):
            m_rabi, sigma_rel, closed = int(row[0]), float(row[1]), float(row[2])
            expected = trapping.mean_atoms_rel(m_rabi, sigma_rel)
            if not math.isclose(closed, expected, rel_tol=1e-12):
                problems.append(f"row {i}: a_mean_closed {closed!r} != recomputed {expected!r}")
    elif experiment == "quality-cutoff":
        if header != ["cutoff", "mean_quality", "stderr", "n_max"]:
            return problems + [f"unexpected header {header}"]
        n_max = dist.max_photon_number()
        for i, row in enumerate(rows):
            if int(row[3]) != n_max:
                problems.append(f"row {i}: n_max {row[3]} != distribution maximum {n_max}")
            if not 0.0 <= float(row[1]) <= 1.5:
                problems.append(f"row {i}: mean_quality {row[1]} out of range")
    else:  # weights-evolution / custom step table
        if header != ["step", "n", "p_n", "F_atom", "transferred"]:
            return problems + [f"unexpected header {header}"]
        n_originals = int(metadata.get("n_originals", "1"))
        steps: dict[int, dict[int, float]] = {}
        f_atoms: dict[int, float] = {}
        for row in rows:
            step, n, p = int(row[0]), int(row[1]), float(row[2])
            steps.setdefault(step, {})[n] = p
            f_atoms[step] = float(row[3])
        configured = dist.resolve()
        if steps.get(0) != configured:
            problems.append("step-0 weights differ from the configured distribution")
        for step, weights in sorted(steps.items()):
            total = sum(weights.values())
            if abs(total - 1.0) > 1e-9:
                problems.append(f"step {step}: weights sum to {total!r}")
                continue
            expected = cloning.atom_fidelity(weights, n_originals)
            if not math.isclose(f_atoms[step], expected, rel_tol=1e-12):
                problems.append(
                    f"step {step}: F_atom {f_atoms[step]!r} != recomputed {expected!r}"
                )
    return problems


# --- argument parsing -------------------------------------------------------


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="key = value config file; flags override it")
    sub.add_argument("--seed", type=int, help="master RNG seed (required to run)")
    sub.add_argument("--gamma", type=float, help="coupling constant, defines the time unit")
    sub.add_argument("--out", help=f"output CSV path (default ${OUTDIR_ENV}/<experiment>.csv)")
    sub.add_argument(
        "--dist",
        dest="distribution",
        type=DistributionSpec.parse,
        help="binomial:N | uniform:LO..HI | explicit:n=p,...",
    )
    sub.add_argument(
        "--nmax", type=int, help="shorthand for --dist binomial:NMAX"
    )


def _add_protocol_options(sub: argparse.ArgumentParser, with_policy: bool) -> None:
    sub.add_argument("--tau", type=float, help="fixed interaction time (default: optimal)")
    sub.add_argument("--cutoff", type=int, help="consecutive ground measurements before stopping")
    sub.add_argument("--budget", dest="atom_budget", type=int, help="maximum atoms to send")
    sub.add_argument("--n-originals", dest="n_originals", type=int, help="cloner input count")
    if with_policy:
        sub.add_argument(
            "--policy",
            choices=["fixed", "optimal-each-step", "half-rabi", "jittered"],
            help="interaction-time policy",
        )
        sub.add_argument(
            "--sigma-rel",
            dest="sigma_rel",
            type=float,
            help="relative jitter for the jittered policy",
        )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cavityqubits",
        description="Cavity-to-atom qubit transfer experiments (CSV output).",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    fig2 = subs.add_parser("fig2", help="single seeded run: weight evolution table")
    _add_common(fig2)
    _add_protocol_options(fig2, with_policy=False)

    fig3 = subs.add_parser("fig3", help="trapping escape curves (closed form + Monte Carlo)")
    _add_common(fig3)
    fig3.add_argument(
        "--sigma-rel",
        dest="sigma_rel_values",
        type=lambda s: tuple(parse_float_list(s)),
        help="jitter grid, e.g. 0.01:0.20:0.01",
    )
    fig3.add_argument(
        "--m",
        dest="rabi_cycles_values",
        type=lambda s: tuple(parse_int_list(s)),
        help="Rabi-cycle counts, e.g. 1,2,3",
    )
    fig3.add_argument(
        "--n", dest="trap_photon_number", type=int, help="photon number for the Monte Carlo"
    )
    fig3.add_argument("--trials", type=int, help="Monte Carlo trials per grid cell")

    fig4 = subs.add_parser("fig4", help="mean clone quality versus cutoff")
    _add_common(fig4)
    fig4.add_argument("--tau", type=float, help="fixed interaction time (default: optimal)")
    fig4.add_argument("--budget", dest="atom_budget", type=int, help="maximum atoms per run")
    fig4.add_argument(
        "--cutoffs", type=lambda s: tuple(parse_int_list(s)), help="cutoff grid, e.g. 1..30"
    )
    fig4.add_argument("--runs", type=int, help="repetitions per cutoff")
    fig4.add_argument("--n-originals", dest="n_originals", type=int, help="cloner input count")

    custom = subs.add_parser("custom", help="fully configured single run (fig2-style table)")
    _add_common(custom)
    _add_protocol_options(custom, with_policy=True)

    val = subs.add_parser("validate", help="check a configuration without running")
    val.add_argument(
        "--experiment",
        choices=["weights-evolution", "trapping-curves", "quality-cutoff", "custom"],
        help="experiment the config is meant for",
    )
    _add_common(val)
    _add_protocol_options(val, with_policy=True)

    chk = subs.add_parser("check", help="verify closed-form columns of an output CSV")
    chk.add_argument("paths", nargs="+", help="CSV files produced by this tool")
    return parser


_COMMAND_EXPERIMENT = {
    "fig2": "weights-evolution",
    "fig3": "trapping-curves",
    "fig4": "quality-cutoff",
    "custom": "custom",
}


def _config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    values: dict = {}
    if getattr(args, "config", None):
        for key, raw in parse_config_file(args.config).items():
            if key not in _FIELD_PARSERS:
                raise SystemExit(f"invalid configuration: unknown key {key!r} in {args.config}")
            try:
                values[key] = _FIELD_PARSERS[key](raw)
            except ValueError as exc:
                raise SystemExit(f"invalid configuration: {key}: {exc}")
    flag_fields = set(_FIELD_PARSERS) - {"experiment"}
    for key, value in vars(args).items():
        if key in flag_fields and value is not None:
            values[key] = value
    if getattr(args, "nmax", None) is not None:
        values["distribution"] = DistributionSpec("binomial", n_max=args.nmax)
    if args.command == "validate":
        if getattr(args, "experiment", None) is not None:
            values["experiment"] = args.experiment
        values.setdefault("experiment", "custom")
    else:
        values["experiment"] = _COMMAND_EXPERIMENT[args.command]
    return ExperimentConfig(**values)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "check":
        status = 0
        for p in args.paths:
            problems = check_output(Path(p))
            if problems:
                status = 1
                for problem in problems:
                    print(f"{p}: {problem}", file=sys.stderr)
            else:
                print(f"{p}: OK")
        return status
    config = _config_from_args(args)
    if args.command == "validate":
        diags = validate(config)
        for d in diags:
            print(d)
        if any(d.level == "error" for d in diags):
            return 1
        print("ok")
        return 0
    path = run_experiment(config)
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
