"""Command-line surface tying generation, simulation, and analysis together.

Exit codes: 0 success, 2 validation failure (config, file format, exponent
relations), 3 numerical failure (non-convergence, invariant breach). Every
CSV written here starts with a ``# config_hash=`` provenance line. The
only environment variable consulted is VDFLUX_WORKERS, which fans the
per-snapshot flux analysis out over processes.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import yaml

from . import __version__
from .besov import BesovParams, localized_sum, shell_coefficients, tail_decay_slope, verify_kernel_estimates
from .budget import budget_residual, flux_spectrum, instantaneous_budget
from .cutoffs import lambda_q, make_cutoff
from .errors import ConfigError, NumericalError, ValidationError, VdfluxError
from .generators import from_spec
from .khm import axis_lags, khm_flux_div, khm_flux_sym
from .runconfig import RunConfig, apply_overrides, config_from_dict
from .snapshots import read_series, read_snapshot, write_series
from .solver import run as solver_run
from .spectral import decompose, lp_norm
from .state import SolutionState


def _write_csv(path, config_hash: str, columns: list[str], rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(f"# config_hash={config_hash}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(float(v))
    return str(v)


def _load_cfg(args) -> RunConfig:
    data = {}
    if args.config:
        data = yaml.safe_load(Path(args.config).read_text()) or {}
        if not isinstance(data, dict):
            raise ConfigError(f"{args.config}: config root must be a mapping")
    data = apply_overrides(data, args.set or [])
    return config_from_dict(data)


def _load_states(path) -> list[SolutionState]:
    path = Path(path)
    if path.is_dir():
        states, _ = read_series(path)
        if not states:
            raise ValidationError(f"{path}: series contains no snapshots")
        return states
    return [read_snapshot(path)]


def _workers() -> int:
    raw = os.environ.get("VDFLUX_WORKERS", "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError(f"VDFLUX_WORKERS must be an integer, got {raw!r}") from exc
    return max(1, n)


def cmd_synth(args) -> int:
    cfg = _load_cfg(args)
    grid = cfg.torus_grid()
    if cfg.u.kind == "taylor_green":
        from .generators import taylor_green
        state = taylor_green(grid, mu=cfg.solver.mu, t=0.0, amplitude=cfg.u.amplitude)
    else:
        rho = from_spec(grid, cfg.rho.to_spec())
        u = from_spec(grid, cfg.u.to_spec())
        if u.comp_shape != (grid.dim,):
            raise ConfigError(
                "the [u] section must generate a vector field "
                "(taylor_green, random_besov with divergence_free, or single_mode with vector: true)")
        state = SolutionState(rho=rho, u=u, mu=cfg.solver.mu)
    if state.rho_lo <= 0.0:
        raise NumericalError("generated density is not positive")
    write_series(args.out, [state], {"config_hash": cfg.digest(), "kind": "synth",
                                     "vdflux_version": __version__})
    print(f"wrote 1 snapshot to {args.out}")
    return 0


def cmd_simulate(args) -> int:
    cfg = _load_cfg(args)
    result = solver_run(cfg.solver_config(), rho_spec=cfg.rho.to_spec(), u_spec=cfg.u.to_spec())
    manifest = dict(result.manifest)
    manifest["config_hash"] = cfg.digest()
    manifest["vdflux_version"] = __version__
    write_series(args.out, result.states, manifest)
    print(f"wrote {len(result.states)} snapshots to {args.out} "
          f"(gibbs overshoot {result.gibbs_overshoot:.2e})")
    return 0


def cmd_project(args) -> int:
    cfg = _load_cfg(args)
    state = _load_states(args.infile)[-1]
    cutoff = make_cutoff(cfg.analysis.cutoff)
    rows = []
    for name, field in (("rho", state.rho), ("u", state.u)):
        for q, shell in zip(range(-1, state.grid.q_max + 1), decompose(field, cutoff).shells):
            l2 = lp_norm(shell, 2.0)
            rows.append((name, q, float(lambda_q(q)), l2, l2 ** 2))
    _write_csv(args.out, cfg.digest(), ["field", "q", "lambda_q", "l2_norm", "shell_energy"], rows)
    return 0


def cmd_besov(args) -> int:
    cfg = _load_cfg(args)
    state = _load_states(args.infile)[-1]
    cutoff = make_cutoff(cfg.analysis.cutoff)
    an = cfg.analysis
    rows = []
    for name, field, p in (("rho", state.rho, an.a), ("u", state.u, an.b)):
        if math.isinf(p):
            params = BesovParams(an.s, math.inf)
        else:
            params = BesovParams(an.s, p)
        coeffs = shell_coefficients(field, params, cutoff)
        sums = localized_sum(coeffs)
        try:
            slope = tail_decay_slope(coeffs, an.tail_q(state.grid))
        except ValidationError:
            slope = float("nan")
        for q, d, dd in zip(coeffs.qs, coeffs.values, sums.values):
            rows.append((name, int(q), float(lambda_q(int(q))), d, dd, slope))
    _write_csv(args.out, cfg.digest(),
               ["field", "q", "lambda_q", "d_q", "D_q", "tail_slope"], rows)
    return 0


def _instant_worker(task):
    path, cutoff_kind, q_cuts = task
    state = read_snapshot(path)
    return instantaneous_budget(state, make_cutoff(cutoff_kind), q_cuts)


def cmd_flux(args) -> int:
    cfg = _load_cfg(args)
    path = Path(args.infile)
    states = _load_states(path)
    cutoff = make_cutoff(cfg.analysis.cutoff)
    qs = cfg.analysis.q_range(states[0].grid)
    workers = _workers()
    instants = None
    if workers > 1 and path.is_dir():
        _, manifest = read_series(path)
        files = [path / e["file"] for e in manifest["snapshots"]]
        tasks = [(str(f), cfg.analysis.cutoff, qs) for f in files]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            instants = list(pool.map(_instant_worker, tasks))
    spectrum = flux_spectrum(states, cutoff, qs, instants=instants)
    rows = [(r.t, r.q_cut, r.energy_low, r.flux, r.flux_pressure, r.viscous, r.force, r.residual)
            for r in spectrum.rows]
    _write_csv(args.out, cfg.digest(),
               ["t", "Q", "E_leQ", "Pi_Q", "Pi_Q_pressure", "eps_Q", "force_Q", "budget_residual"],
               rows)
    return 0


def cmd_budget(args) -> int:
    cfg = _load_cfg(args)
    states = _load_states(args.infile)
    if len(states) < 2:
        raise ValidationError("budget needs a series with at least 2 snapshots")
    cutoff = make_cutoff(cfg.analysis.cutoff)
    rows = []
    for q_cut in cfg.analysis.q_range(states[0].grid):
        rows.append((q_cut, budget_residual(states, q_cut, cutoff)))
    _write_csv(args.out, cfg.digest(), ["Q", "budget_residual"], rows)
    return 0


def cmd_khm(args) -> int:
    cfg = _load_cfg(args)
    state = _load_states(args.infile)[-1]
    lag_grid = axis_lags(state.grid, cfg.analysis.lag_max, cfg.analysis.lag_diagonal)
    pi_div = khm_flux_div(state, lag_grid)
    pi_sym = khm_flux_sym(state, lag_grid)
    h = lag_grid.spacing
    rows = []
    for ell, pd, ps in zip(lag_grid.lags, pi_div, pi_sym):
        cells = [c * h for c in ell]
        rows.append((*cells, math.hypot(*cells), pd, ps))
    cols = [f"l{i+1}" for i in range(state.grid.dim)] + ["abs_l", "pi_div", "pi_sym"]
    _write_csv(args.out, cfg.digest(), cols, rows)
    return 0


def cmd_verify_estimates(args) -> int:
    cfg = _load_cfg(args)
    an = cfg.analysis
    if args.infile:
        state = _load_states(args.infile)[-1]
        f = state.rho
        g = state.u.component(0)
        grid = state.grid
    else:
        grid = cfg.torus_grid()
        f = from_spec(grid, cfg.rho.to_spec())
        g = from_spec(grid, cfg.u.to_spec())
        if not g.is_scalar:
            g = g.component(0)
    q_cuts = [q for q in an.q_range(grid) if 3 <= q <= grid.q_max - 2]
    if not q_cuts:
        raise ValidationError(f"no cuts in [3, q_max-2] for n = {grid.n}")
    a = an.a if not math.isinf(an.a) else math.inf
    report = verify_kernel_estimates(f, g, an.s, an.t, a, an.b, q_cuts, make_cutoff(an.cutoff))
    rows = [(r.q_cut, r.estimate, r.lhs, r.rhs, r.ratio) for r in report.rows]
    _write_csv(args.out, cfg.digest(), ["Q", "estimate", "lhs", "rhs", "ratio"], rows)
    if report.failures:
        print(f"ratio growth detected for: {', '.join(report.failures)}", file=sys.stderr)
        return 3
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vdflux",
                                     description="scale-by-scale energy budget toolkit")
    parser.add_argument("--version", action="version", version=f"vdflux {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, infile=True, out=True):
        p.add_argument("--config", help="YAML run configuration")
        p.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                       help="override a config key")
        if infile:
            p.add_argument("--in", dest="infile", help="snapshot file or series directory")
        if out:
            p.add_argument("--out", required=True, help="output path")

    p = sub.add_parser("synth", help="generate a snapshot from the config")
    common(p, infile=False)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("simulate", help="run the solver and write a snapshot series")
    common(p, infile=False)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("project", help="dyadic shell norms of a snapshot")
    common(p)
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("besov", help="d_q / D_Q tables for a snapshot")
    common(p)
    p.set_defaults(func=cmd_besov)

    p = sub.add_parser("flux", help="energy budget table over snapshots and cuts")
    common(p)
    p.set_defaults(func=cmd_flux)

    p = sub.add_parser("budget", help="budget residual sweep over cuts")
    common(p)
    p.set_defaults(func=cmd_budget)

    p = sub.add_parser("khm", help="two-point third-order flux at configured lags")
    common(p)
    p.set_defaults(func=cmd_khm)

    p = sub.add_parser("verify-estimates", help="measured constants of the localization estimates")
    common(p)
    p.set_defaults(func=cmd_verify_estimates)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, yaml.YAMLError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except VdfluxError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
