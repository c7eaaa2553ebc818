"""Experiment driver: sweep commands emitting CSV (and optional SVG plots).

Subcommands: fig1, fig2, fig3, rl, gamma, bound, zeno.  Every CSV starts
with a comment line carrying the hash of the resolved configuration, so
identical configs reproduce identical files byte for byte.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .exceptions import ConfigError, SimulationError
from .linalg import operator_norm
from .model import (
    AdiabaticPath,
    linear_schedule,
    load_path_json,
    path_matrix,
    polynomial_schedule,
    tfim_path,
)
from .evolve import (
    EvolutionSpec,
    exact_state_evolution,
    grid_points,
    ordered_product,
    trotter_evolution,
)
from .errors import adiabatic_bound, endpoint_states, fidelity_error, scaling_index
from .eigenframes import (
    eigenframe_sequence,
    first_order_error,
    propagator_expansion,
    transition_amplitudes,
    transition_matrices,
)
from .riemann_lebesgue import OscillatorySumSpec, sum_bounds
from .zeno import effective_family, hermitian_family, near_degeneracy_test
from . import svg as svgmod


@dataclass
class RunConfig:
    """Resolved run parameters; defaults reproduce the reference sweeps."""

    n_sites: int = 8
    periodic: bool = False
    schedule: str = "linear"
    schedule_coefficients: tuple = ()
    hamiltonian_file: str = ""
    grid: str = "endpoints"
    steps: int = 100
    t_min: float = 4.0
    t_max: float = 200.0
    t_points: int = 40
    t_values: tuple = ()
    dt_min: float = 0.1
    dt_max: float = 1.5
    dt_step: float = 0.05
    dt_values: tuple = ()
    zeno_threshold: float = 0.99
    zeno_steps: int = 100
    zeno_family: str = "trotter-unitary"
    zeno_dt: float = 0.8
    trace_dts: tuple = (0.8, 1.0, 1.2)
    rl_steps: int = 100
    rl_dt_values: tuple = (0.5, 1.0, 2 * np.pi)
    gamma_t_values: tuple = (10.0, 50.0)
    bound_quad_points: int = 201
    ode_rtol: float = 1e-9
    robust_dt_cut: float = 0.8
    seed: int = 0
    threads: int = 1

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        merged = cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in data.items()})
        merged.validate()
        return merged

    def validate(self) -> None:
        if self.steps < 2:
            raise ConfigError(f"steps must be >= 2, got {self.steps}")
        if self.grid not in ("endpoints", "left", "midpoint"):
            raise ConfigError(f"unknown grid {self.grid!r}")
        if self.t_points < 1 or self.t_min <= 0 or self.t_max < self.t_min:
            raise ConfigError("invalid T grid")
        if self.dt_step <= 0 or self.dt_min <= 0 or self.dt_max < self.dt_min:
            raise ConfigError("invalid dt grid")
        if not 0 < self.zeno_threshold < 1:
            raise ConfigError("zeno_threshold must be in (0, 1)")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")

    def digest(self) -> str:
        payload = json.dumps(asdict(self), sort_keys=True, default=float)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    def t_grid(self) -> np.ndarray:
        if self.t_values:
            return np.asarray(self.t_values, dtype=float)
        return np.geomspace(self.t_min, self.t_max, self.t_points)

    def dt_grid(self) -> np.ndarray:
        if self.dt_values:
            return np.asarray(self.dt_values, dtype=float)
        count = int(round((self.dt_max - self.dt_min) / self.dt_step)) + 1
        return np.round(self.dt_min + self.dt_step * np.arange(count), 10)

    def build_path(self) -> AdiabaticPath:
        if self.hamiltonian_file:
            return load_path_json(self.hamiltonian_file)
        if self.schedule == "linear":
            schedule = linear_schedule()
        elif self.schedule == "custom-polynomial":
            schedule = polynomial_schedule(self.schedule_coefficients)
        else:
            raise ConfigError(f"unknown schedule {self.schedule!r}")
        return tfim_path(self.n_sites, self.periodic, schedule)


def load_config(path: str | None, seed: int | None, threads: int | None) -> RunConfig:
    data = {}
    if path:
        try:
            with open(path, "r", encoding="utf-8") as handle:
                data = json.load(handle)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config JSON must be an object")
    config = RunConfig.from_dict(data)
    if seed is not None:
        config.seed = seed
    if threads is not None:
        config.threads = threads
        config.validate()
    return config


def _parallel(fn, items, threads: int):
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def write_csv(path: Path, columns, rows, config: RunConfig, extra_comments=()) -> None:
    lines = [f"# daslab config_hash={config.digest()}"]
    lines += [f"# {comment}" for comment in extra_comments]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_format_cell(row[c]) for c in columns))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _format_cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


# ---------------------------------------------------------------------------
# sweep cores


def _discrete_frames(path: AdiabaticPath, steps: int, grid: str):
    s_values = grid_points(steps, grid)
    energies, bases = np.linalg.eigh(path_matrix(path, s_values))
    return energies, bases, np.conj(np.swapaxes(bases, 1, 2))


def _discrete_from_frames(energies, bases, bases_h, dt: float) -> np.ndarray:
    phases = np.exp(-1j * energies * dt)
    return ordered_product((bases * phases[:, None, :]) @ bases_h)


def fig1_rows(config: RunConfig) -> list[dict]:
    """Norm distance against Trotter-only fidelity error over the T grid.

    The fidelity column compares the discretized and Trotterized propagators
    on the initial state, isolating the Trotter split from discretization;
    the norm column is the spectral distance between the same two operators.
    """
    path = config.build_path()
    psi_i, _ = endpoint_states(path)
    energies, bases, bases_h = _discrete_frames(path, config.steps, config.grid)

    def one(total_time: float) -> dict:
        dt = total_time / config.steps
        a_d = _discrete_from_frames(energies, bases, bases_h, dt)
        spec = EvolutionSpec(
            path=path, total_time=total_time, steps=config.steps, grid=config.grid
        )
        a_tro = trotter_evolution(spec).matrix
        return {
            "T": total_time,
            "dt": dt,
            "norm_dist": operator_norm(a_d - a_tro),
            "eps_tro": fidelity_error(a_d @ psi_i, a_tro @ psi_i),
        }

    return _parallel(one, [float(t) for t in config.t_grid()], config.threads)


def fig2_rows(config: RunConfig) -> tuple[list[dict], float]:
    """Adiabatic/Trotter/total error sweep plus the robust-window scaling index.

    The exact propagator enters through adaptive state integration; the
    robust window is T in [t_min, steps * robust_dt_cut].
    """
    path = config.build_path()
    psi_i, psi_f = endpoint_states(path)

    def one(total_time: float) -> dict:
        spec = EvolutionSpec(
            path=path, total_time=total_time, steps=config.steps, grid=config.grid
        )
        a_tro = trotter_evolution(spec).matrix
        exact = exact_state_evolution(path, total_time, psi_i, rtol=config.ode_rtol)
        tro_state = a_tro @ psi_i
        return {
            "T": total_time,
            "eps_adb": fidelity_error(psi_f, exact),
            "eps_tro": fidelity_error(exact, tro_state),
            "eps_tot": fidelity_error(psi_f, tro_state),
        }

    rows = _parallel(one, [float(t) for t in config.t_grid()], config.threads)
    cut = config.steps * config.robust_dt_cut
    window = [(r["T"], r["eps_tot"]) for r in rows if r["T"] <= cut and r["eps_tot"] > 0]
    index = scaling_index(window) if len(window) >= 4 else float("nan")
    return rows, index


def fig3_rows(config: RunConfig) -> tuple[list[dict], dict]:
    """Near-degeneracy pass/fail over the dt grid plus per-dt overlap traces."""
    path = config.build_path()
    psi_i, _ = endpoint_states(path)

    def one(dt: float) -> dict:
        family = effective_family(path, dt)
        trace = near_degeneracy_test(
            family,
            steps=config.zeno_steps,
            threshold=config.zeno_threshold,
            initial_state=psi_i,
        )
        return {
            "dt": dt,
            "pass": trace.passed,
            "min_overlap": trace.min_overlap,
            "_trace": trace,
        }

    rows = _parallel(one, [float(dt) for dt in config.dt_grid()], config.threads)
    traces = {}
    for dt in config.trace_dts:
        dt = float(dt)
        match = next((r for r in rows if abs(r["dt"] - dt) < 1e-12), None)
        if match is None:
            family = effective_family(path, dt)
            trace = near_degeneracy_test(
                family,
                steps=config.zeno_steps,
                threshold=config.zeno_threshold,
                initial_state=psi_i,
            )
        else:
            trace = match["_trace"]
        traces[dt] = trace
    for row in rows:
        row.pop("_trace")
    return rows, traces


def rl_rows(config: RunConfig) -> list[dict]:
    """Oscillatory-sum report for the constant test case f = 1, lambda = 1."""
    one = lambda s: np.ones_like(np.asarray(s, dtype=float))  # noqa: E731
    rows = []
    for dt in config.rl_dt_values:
        spec = OscillatorySumSpec(
            f=one, lam=one, total_time=float(dt) * config.rl_steps, steps=config.rl_steps
        )
        report = sum_bounds(spec)
        rows.append(
            {
                "T": spec.total_time,
                "L": spec.steps,
                "dt": spec.dt,
                "abs_J": report.magnitude,
                "abs_I": abs(report.continuum),
                "boundary_bound": report.boundary_bound,
                "first_order_bound": report.first_order_bound,
                "second_order_bound": report.second_order_bound,
                "threshold_ok": report.threshold_ok,
            }
        )
    return rows


def gamma_rows(config: RunConfig) -> list[dict]:
    """Frame-propagator summary per T: exact error, first-order estimate,
    and the cross-module fidelity check."""
    path = config.build_path()
    psi_i, psi_f = endpoint_states(path)
    energies, bases, bases_h = _discrete_frames(path, config.steps, config.grid)
    rows = []
    for total_time in config.gamma_t_values:
        total_time = float(total_time)
        spec = EvolutionSpec(
            path=path, total_time=total_time, steps=config.steps, grid=config.grid
        )
        frames = eigenframe_sequence(spec)
        transitions = transition_matrices(frames)
        amplitudes = transition_amplitudes(spec, frames)
        expansion = propagator_expansion(frames, transitions, total_time, amplitudes)
        a_d = _discrete_from_frames(energies, bases, bases_h, spec.dt)
        rows.append(
            {
                "T": total_time,
                "L": config.steps,
                "eps_adb_exact": expansion.adiabatic_error,
                "eps_first_order": first_order_error(amplitudes),
                "fidelity_check": fidelity_error(a_d @ psi_i, psi_f),
            }
        )
    return rows


def bound_rows(config: RunConfig) -> list[dict]:
    path = config.build_path()
    rows = []
    for total_time in config.t_grid():
        report = adiabatic_bound(path, float(total_time), config.bound_quad_points)
        rows.append(
            {
                "T": float(total_time),
                "boundary_start": report.boundary_start,
                "boundary_end": report.boundary_end,
                "integral_term": report.integral_term,
                "total": report.total,
            }
        )
    return rows


def zeno_rows(config: RunConfig) -> list[dict]:
    """Single near-degeneracy trace for the configured family."""
    path = config.build_path()
    if config.zeno_family == "hermitian-path":
        family = hermitian_family(path)
        initial = None
    elif config.zeno_family == "trotter-unitary":
        family = effective_family(path, config.zeno_dt)
        initial, _ = endpoint_states(path)
    else:
        raise ConfigError(f"unknown zeno_family {config.zeno_family!r}")
    trace = near_degeneracy_test(
        family,
        steps=config.zeno_steps,
        threshold=config.zeno_threshold,
        initial_state=initial,
    )
    return [
        {
            "step": j + 1,
            "s": (j + 1) / config.zeno_steps,
            "overlap": trace.overlaps[j],
        }
        for j in range(config.zeno_steps)
    ]


# ---------------------------------------------------------------------------
# command wiring


def _trace_rows(trace) -> list[dict]:
    steps = len(trace.overlaps)
    return [
        {"step": j + 1, "s": (j + 1) / steps, "overlap": trace.overlaps[j]}
        for j in range(steps)
    ]


def cmd_fig1(config: RunConfig, out: Path, want_svg: bool) -> None:
    rows = fig1_rows(config)
    write_csv(out / "fig1.csv", ["T", "dt", "norm_dist", "eps_tro"], rows, config)
    if want_svg:
        ts = [r["T"] for r in rows]
        svgmod.write_line_plot(
            out / "fig1.svg",
            [
                ("norm_dist", ts, [r["norm_dist"] for r in rows]),
                ("eps_tro", ts, [r["eps_tro"] for r in rows]),
            ],
            title="Norm distance vs Trotter fidelity error",
            xlabel="T",
            ylabel="error",
            logx=True,
            logy=True,
        )


def cmd_fig2(config: RunConfig, out: Path, want_svg: bool) -> None:
    rows, index = fig2_rows(config)
    write_csv(
        out / "fig2.csv",
        ["T", "eps_adb", "eps_tro", "eps_tot"],
        rows,
        config,
        extra_comments=[f"scaling_index_robust_window={index!r}"],
    )
    if want_svg:
        ts = [r["T"] for r in rows]
        svgmod.write_line_plot(
            out / "fig2.svg",
            [
                ("eps_adb", ts, [r["eps_adb"] for r in rows]),
                ("eps_tro", ts, [r["eps_tro"] for r in rows]),
                ("eps_tot", ts, [r["eps_tot"] for r in rows]),
            ],
            title="Error scaling",
            xlabel="T",
            ylabel="error",
            logx=True,
            logy=True,
        )


def cmd_fig3(config: RunConfig, out: Path, want_svg: bool) -> None:
    rows, traces = fig3_rows(config)
    write_csv(out / "fig3.csv", ["dt", "pass", "min_overlap"], rows, config)
    for dt, trace in sorted(traces.items()):
        write_csv(
            out / f"fig3_trace_dt{dt:g}.csv",
            ["step", "s", "overlap"],
            _trace_rows(trace),
            config,
        )
    if want_svg:
        svgmod.write_line_plot(
            out / "fig3.svg",
            [("min_overlap", [r["dt"] for r in rows], [r["min_overlap"] for r in rows])],
            title="Near-degeneracy test over Trotter step",
            xlabel="dt",
            ylabel="min overlap",
        )


def cmd_rl(config: RunConfig, out: Path, want_svg: bool) -> None:
    rows = rl_rows(config)
    write_csv(
        out / "rl.csv",
        [
            "T",
            "L",
            "dt",
            "abs_J",
            "abs_I",
            "boundary_bound",
            "first_order_bound",
            "second_order_bound",
            "threshold_ok",
        ],
        rows,
        config,
    )
    if want_svg:
        svgmod.write_line_plot(
            out / "rl.svg",
            [("abs_J", [r["dt"] for r in rows], [r["abs_J"] for r in rows])],
            title="Oscillatory sum magnitude",
            xlabel="dt",
            ylabel="|J|",
        )


def cmd_gamma(config: RunConfig, out: Path, want_svg: bool) -> None:
    rows = gamma_rows(config)
    write_csv(
        out / "gamma.csv",
        ["T", "L", "eps_adb_exact", "eps_first_order", "fidelity_check"],
        rows,
        config,
    )
    if want_svg:
        ts = [r["T"] for r in rows]
        svgmod.write_line_plot(
            out / "gamma.svg",
            [
                ("eps_adb_exact", ts, [r["eps_adb_exact"] for r in rows]),
                ("eps_first_order", ts, [r["eps_first_order"] for r in rows]),
            ],
            title="Discrete adiabatic error",
            xlabel="T",
            ylabel="error",
            logx=True,
            logy=True,
        )


def cmd_bound(config: RunConfig, out: Path, want_svg: bool) -> None:
    rows = bound_rows(config)
    write_csv(
        out / "bound.csv",
        ["T", "boundary_start", "boundary_end", "integral_term", "total"],
        rows,
        config,
    )
    if want_svg:
        svgmod.write_line_plot(
            out / "bound.svg",
            [("total", [r["T"] for r in rows], [r["total"] for r in rows])],
            title="Adiabatic-theorem bound",
            xlabel="T",
            ylabel="bound",
            logx=True,
            logy=True,
        )


def cmd_zeno(config: RunConfig, out: Path, want_svg: bool) -> None:
    rows = zeno_rows(config)
    write_csv(out / "zeno.csv", ["step", "s", "overlap"], rows, config)
    if want_svg:
        svgmod.write_line_plot(
            out / "zeno.svg",
            [("overlap", [r["s"] for r in rows], [r["overlap"] for r in rows])],
            title="Overlap continuation",
            xlabel="s",
            ylabel="overlap",
        )


COMMANDS = {
    "fig1": cmd_fig1,
    "fig2": cmd_fig2,
    "fig3": cmd_fig3,
    "rl": cmd_rl,
    "gamma": cmd_gamma,
    "bound": cmd_bound,
    "zeno": cmd_zeno,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="daslab",
        description="Digital adiabatic simulation sweeps (CSV output).",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        cmd = sub.add_parser(name, help=f"run the {name} sweep")
        cmd.add_argument("--config", default=None, help="JSON config file")
        cmd.add_argument("--out", default=".", help="output directory")
        cmd.add_argument("--svg", action="store_true", help="also write SVG plots")
        cmd.add_argument("--seed", type=int, default=None, help="recorded RNG seed")
        cmd.add_argument("--threads", type=int, default=None, help="sweep-point workers")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config, args.seed, args.threads)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        COMMANDS[args.command](config, out, args.svg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SimulationError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
