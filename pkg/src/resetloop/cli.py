"""Command-line front end.

Usage::

    resetloop VERB --config run.json [--out DIR] [--nmax N] [--db] [--strict-frf]

Verbs: ``df``, ``hosidf``, ``predict``, ``simulate``, ``validate``,
``stability``, ``superpose``. Exit status is 0 on success, 1 for a
configuration error, 2 for a numerical failure and 3 when a simulation did
not converge or diverged.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .closedloop import SuperposeInput, norms, predict, superpose
from .config import RunConfig, config_hash, load_config
from .errors import ConfigError, ResetLoopError, SimulationDiverged, SimulationUnsupported
from .hosidf import required_nmax, sweep
from .lti import FrfTable
from .sim import SimInput, assemble, simulate, steady_state
from .stability import certify
from .validation import METRICS, campaign, median_per

__all__ = ["main", "build_parser"]

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_NONCONVERGED = 0, 1, 2, 3
VERBS = ("df", "hosidf", "predict", "simulate", "validate", "stability", "superpose")


class _Run:
    """Resolved configuration plus CLI overrides."""

    def __init__(self, cfg: RunConfig, args):
        self.cfg = cfg
        self.args = args
        eff = dict(cfg.raw)
        overrides = {k: v for k, v in (("nmax", args.nmax), ("db", args.db or None),
                                       ("strict_frf", args.strict_frf or None)) if v is not None}
        if overrides:
            eff["cli"] = overrides
        self.hash = config_hash(eff)
        out = args.out or cfg.output or "out"
        self.out = Path(out)
        self.strict = True if args.strict_frf else None
        self.plant = cfg.plant.build(cfg.base_dir, self.strict)
        self.ctrl = cfg.controller.build(self.plant)
        a = cfg.analysis
        self.nmax = args.nmax if args.nmax is not None else a.nmax

    @property
    def header(self) -> str:
        return f"# resetloop {__version__} config={self.hash}\n"

    def nmax_at(self, omega: float, omega_c: float) -> int:
        if self.cfg.analysis.auto_nmax and self.args.nmax is None:
            return max(self.nmax, required_nmax(omega, omega_c))
        return self.nmax

    def grid(self) -> np.ndarray:
        if self.cfg.analysis.grid is None:
            raise ConfigError("analysis.grid: required for this command")
        return self.cfg.analysis.grid.omega()


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    s = f"{x:.10g}"
    return "0" if s == "-0" else s


def write_csv(path: Path, header: str, columns, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [header, ",".join(columns) + "\n"]
    lines.extend(",".join(_fmt(v) for v in r) + "\n" for r in rows)
    path.write_text("".join(lines), encoding="utf-8")


def _mag(x: float, db: bool) -> float:
    if not db:
        return x
    return 20 * math.log10(x) if x > 0 else -math.inf


def _omega_c(run: _Run) -> float:
    cx = run.cfg.controller.crossover_hz
    return 2 * math.pi * (cx if cx else 150.0)


def cmd_sweep(run: _Run, only_df: bool) -> int:
    from .plotting import bode_svg

    grid = run.grid()
    nmax = 1 if only_df else run.nmax
    name = "df" if only_df else "hosidf"
    results = [("", sweep(run.ctrl, grid, nmax))]
    results.append(("loop_", sweep(run.ctrl, grid, nmax, plant=run.plant, strict=run.strict)))
    for prefix, resp in results:
        rows, traces = [], {}
        for n in resp.orders:
            col = resp.get(int(n))
            # harmonics that vanish identically (linear controller) are not reported
            if n > 1 and np.all(np.abs(col) == 0):
                continue
            label = ("L" if resp.open_loop else "H") + str(int(n))
            traces[label] = col
            for w, h in zip(grid, col):
                rows.append((w, int(n), _mag(abs(h), run.args.db), float(np.angle(h))))
        rows.sort(key=lambda r: (r[0], r[1]))
        write_csv(run.out / f"{prefix}{name}.csv", run.header,
                  ("omega_radps", "n", "mag", "phase_rad"), rows)
        bode_svg(run.out / f"{prefix}{name}.svg", grid / (2 * math.pi), traces,
                 title=f"{run.ctrl.name or 'controller'}{' loop' if prefix else ''}")
    return EXIT_OK


def cmd_predict(run: _Run) -> int:
    from .plotting import curves_svg

    grid = run.grid()
    wc = _omega_c(run)
    pred_rows, norm_rows, df_pred_rows, df_norm_rows = [], [], [], []
    curves = {}
    spp = run.cfg.analysis.samples_per_period
    for ch in run.cfg.analysis.channels:
        hos_db, df_db = [], []
        for w in grid:
            for nmax, prow, nrow, acc in ((run.nmax_at(w, wc), pred_rows, norm_rows, hos_db),
                                          (1, df_pred_rows, df_norm_rows, df_db)):
                p = predict(run.ctrl, run.plant, w, ch, nmax, run.strict)
                for sig in ("e", "y", "u"):
                    X = p.table(sig)
                    for k, n in enumerate(p.orders):
                        if n > 1 and X[k] == 0:
                            continue
                        prow.append((w, ch, sig, int(n), _mag(abs(X[k]), run.args.db),
                                     float(np.angle(X[k]))))
                    nr = norms(p, sig, spp)
                    nrow.append((w, ch, sig, _mag(nr.l2, run.args.db), _mag(nr.linf, run.args.db)))
                    if sig == "e":
                        acc.append(_mag(nr.linf, True))
        curves[f"{ch} HOSIDF"] = hos_db
        curves[f"{ch} DF only"] = df_db
    pcols = ("omega_radps", "channel", "signal", "n", "mag", "phase_rad")
    ncols = ("omega_radps", "channel", "signal", "l2", "linf")
    write_csv(run.out / "prediction.csv", run.header, pcols, pred_rows)
    write_csv(run.out / "norms.csv", run.header, ncols, norm_rows)
    write_csv(run.out / "prediction_df.csv", run.header, pcols, df_pred_rows)
    write_csv(run.out / "norms_df.csv", run.header, ncols, df_norm_rows)
    curves_svg(run.out / "sensitivity.svg", grid / (2 * math.pi), curves,
               "peak error [dB]", title=run.ctrl.name)
    return EXIT_OK


def _sim_inputs(run: _Run):
    inputs = run.cfg.analysis.inputs
    if not inputs:
        raise ConfigError("analysis.inputs: at least one input is required")
    return inputs


def cmd_simulate(run: _Run) -> int:
    if isinstance(run.plant, FrfTable):
        raise SimulationUnsupported("simulation needs a rational plant, not an FRF table")
    inputs = _sim_inputs(run)
    a = run.cfg.analysis
    sys_ = assemble(run.ctrl, run.plant)
    w_slow = min(i.omega for i in inputs)
    T = 2 * math.pi / w_slow
    sim_in = [SimInput(i.channel, i.omega, i.amplitude, i.phase) for i in inputs]
    rundir = run.out / f"sim-{run.hash}"
    try:
        traj = simulate(sys_, sim_in, dt=a.dt, duration=None if a.periods is None else a.periods * T)
    except SimulationDiverged as exc:
        rundir.mkdir(parents=True, exist_ok=True)
        (rundir / "summary.txt").write_text(
            f"diverged at t = {exc.escape_time:.10g} s\n", encoding="utf-8")
        print(f"simulation diverged at t = {exc.escape_time:.6g} s", file=sys.stderr)
        return EXIT_NONCONVERGED
    cols = ("t_s", "e", "y", "u")
    write_csv(rundir / "trajectory.csv", run.header, cols,
              zip(traj.t, traj.e, traj.y, traj.u))
    write_csv(rundir / "events.csv", run.header, ("t_k_s",), ((t,) for t in traj.reset_times))
    rec = steady_state(traj, w_slow)
    write_csv(rundir / "steady_state.csv", run.header, cols, zip(rec.t, rec.e, rec.y, rec.u))
    summary = (f"dt_s: {traj.dt:.10g}\nduration_s: {traj.t[-1]:.10g}\n"
               f"resets_total: {len(traj.reset_times)}\n"
               f"resets_per_period: {rec.resets_per_period}\n"
               f"converged: {str(rec.converged).lower()}\n"
               f"period_mismatch: {rec.mismatch:.10g}\n")
    (rundir / "summary.txt").write_text(summary, encoding="utf-8")
    print(summary, end="")
    return EXIT_OK if rec.converged else EXIT_NONCONVERGED


def cmd_validate(run: _Run) -> int:
    from .plotting import curves_svg

    if isinstance(run.plant, FrfTable):
        raise SimulationUnsupported("validation needs a rational plant, not an FRF table")
    grid = run.grid()
    a = run.cfg.analysis
    wc = _omega_c(run)
    pts = campaign(run.ctrl, run.plant, grid, a.channels, run.nmax,
                   nmax_rule=lambda w: run.nmax_at(w, wc), dt=a.dt, periods=a.periods)
    per_rows, flag_rows = [], []
    for p in pts:
        for m in METRICS:
            per_rows.append((p.omega, p.channel, m, p.per_df[m], p.per_hosidf[m]))
        meas = p.measured
        flag_rows.append((p.omega, p.channel, p.resets_per_period, p.converged, p.diverged,
                          p.multi_reset, p.l3_exceeds_l1,
                          math.nan if meas is None else meas.linf,
                          math.nan if meas is None else meas.l2,
                          p.hosidf.linf, p.hosidf.l2, p.df.linf, p.df.l2))
    write_csv(run.out / "per.csv", run.header,
              ("omega_radps", "channel", "metric", "per_df", "per_hosidf"), per_rows)
    write_csv(run.out / "validation_flags.csv", run.header,
              ("omega_radps", "channel", "resets_per_period", "converged", "diverged",
               "multi_reset", "l3_exceeds_l1", "sim_linf", "sim_l2", "hosidf_linf",
               "hosidf_l2", "df_linf", "df_l2"), flag_rows)
    usable = [p for p in pts if p.usable()]
    lines = [f"points: {len(pts)}", f"converged: {len(usable)}"]
    for m in METRICS:
        lines.append(f"median_per_hosidf_{m}: {median_per(pts, 'hosidf', m):.10g}")
        lines.append(f"median_per_df_{m}: {median_per(pts, 'df', m):.10g}")
    if usable:
        wins = sum(p.per_hosidf["e_linf"] <= p.per_df["e_linf"] for p in usable)
        lines.append(f"hosidf_not_worse_fraction: {wins / len(usable):.10g}")
    lines.append(f"multi_reset_points: {sum(p.multi_reset for p in pts)}")
    lines.append(f"l3_exceeds_l1_points: {sum(p.l3_exceeds_l1 for p in pts)}")
    text = "\n".join(lines) + "\n"
    (run.out / "validate_summary.txt").write_text(text, encoding="utf-8")
    ref = [p for p in pts if p.channel == a.channels[0]]
    curves_svg(run.out / "per.svg", np.array([p.omega for p in ref]) / (2 * math.pi),
               {"DF only": [p.per_df["e_linf"] for p in ref],
                "HOSIDF": [p.per_hosidf["e_linf"] for p in ref]},
               "PER of peak error", title=run.ctrl.name)
    print(text, end="")
    return EXIT_OK if usable else EXIT_NONCONVERGED


def cmd_stability(run: _Run) -> int:
    cert = certify(run.ctrl, run.plant)
    text = f"# resetloop {__version__} config={run.hash}\ncontroller: {run.ctrl.name}\n" + cert.report()
    run.out.mkdir(parents=True, exist_ok=True)
    (run.out / "stability.txt").write_text(text, encoding="utf-8")
    print(text, end="")
    return EXIT_OK


def cmd_superpose(run: _Run) -> int:
    inputs = _sim_inputs(run)
    if len(inputs) < 2:
        raise ConfigError("analysis.inputs: superpose needs at least two inputs")
    items = [SuperposeInput(i.channel, i.omega, i.amplitude, i.phase) for i in inputs]
    res = superpose(run.ctrl, run.plant, items, run.nmax, run.cfg.analysis.dominance_threshold,
                    run.strict)
    rows = []
    for j, it in enumerate(items):
        c = res.contributions[j] if res.valid else None
        role = res.roles[j] if res.valid else ("dominant" if j == res.dominant else "violation"
                                                if any(v[1] == j for v in res.violations)
                                                else "minor")
        rows.append((j, it.channel, it.omega, it.amplitude, res.e1[j], role,
                     math.nan if c is None else c.linf, math.nan if c is None else c.l2))
    write_csv(run.out / "superpose.csv", run.header,
              ("input", "channel", "omega_radps", "amplitude", "e1_mag", "role",
               "linf", "l2"), rows)
    if res.valid:
        text = (f"valid: true\ndominant: {res.dominant}\ncombined_linf: {res.combined_linf:.10g}\n"
                f"combined_l2: {res.combined_l2:.10g}\ncaveat: {res.caveat}\n")
    else:
        pairs = "; ".join(f"{a}-{b}" for a, b in res.violations)
        text = (f"valid: false\ndominant: {res.dominant}\n"
                f"dominance violated (threshold {res.threshold:g}) by pairs: {pairs}\n")
    (run.out / "superpose_summary.txt").write_text(text, encoding="utf-8")
    print(text, end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="resetloop",
                                description="Frequency-domain analysis of reset control loops.")
    p.add_argument("--version", action="version", version=f"resetloop {__version__}")
    sub = p.add_subparsers(dest="verb", required=True)
    for verb in VERBS:
        s = sub.add_parser(verb)
        s.add_argument("--config", required=True, help="JSON run configuration")
        s.add_argument("--out", help="output directory (default: config 'output' or ./out)")
        s.add_argument("--nmax", type=int, help="highest odd harmonic")
        s.add_argument("--db", action="store_true", help="report magnitudes in dB")
        s.add_argument("--strict-frf", action="store_true",
                       help="refuse to extrapolate measured plant data")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.nmax is not None and (args.nmax < 1 or args.nmax % 2 == 0):
            raise ConfigError("--nmax: expected a positive odd integer")
        run = _Run(load_config(args.config), args)
        handler = {
            "df": lambda r: cmd_sweep(r, True),
            "hosidf": lambda r: cmd_sweep(r, False),
            "predict": cmd_predict,
            "simulate": cmd_simulate,
            "validate": cmd_validate,
            "stability": cmd_stability,
            "superpose": cmd_superpose,
        }[args.verb]
        return handler(run)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationDiverged as exc:
        print(f"simulation diverged: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except (ResetLoopError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
