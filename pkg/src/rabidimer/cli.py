"""Scenario runner and run comparison tooling.

Outputs of one run (one directory per run):

    trajectory.csv      columns t,N_L,N_R,N_total,Z,sz_L,sz_R,P_LZ_L,
                        P_LZ_R,N_ph,energy,norm2,residual_max
    numberstates_L.csv  long format t,n,log10_p (floored at -6)
    numberstates_R.csv  same for the right resonator
    energy_diagram.csv  level,t,energy for the diabatic diagram
    events.csv          detected total-photon-number jumps
    manifest.json       resolved config + seed + health, sufficient to
                        reproduce the run bit-exactly

Exit codes: 0 ok, 2 config error, 3 solver failure, 4 norm abort,
5 truncation leak.  The output directory defaults to $RABIDIMER_OUT/<name>
or ./runs/<name>.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import __version__
from . import analysis, integrator, model, observables, oracle
from .errors import (AssemblyError, ConfigError, NormAbortError, SolverError,
                     TruncationLeakError)

__all__ = ["OutputBundle", "CompareReport", "run_scenario", "compare_runs", "main"]

LOG_FLOOR = -6.0  # floor of the log10 number-state populations
_FLOAT_FMT = "%.17g"


@dataclass(frozen=True)
class OutputBundle:
    out_dir: str
    trajectory_path: str
    numberstate_paths: tuple
    energy_diagram_path: str
    events_path: str
    manifest_path: str
    manifest: dict
    trajectory: integrator.Trajectory
    events: list


@dataclass(frozen=True)
class CompareReport:
    columns: dict       # name -> {"max_abs": float, "rms": float}
    n_points: int
    t_range: tuple

    def max_abs(self, name: str) -> float:
        return self.columns[name]["max_abs"]

    def to_text(self) -> str:
        lines = [f"compared {self.n_points} samples on t in "
                 f"[{self.t_range[0]:.6g}, {self.t_range[1]:.6g}]",
                 f"{'column':>12}  {'max_abs':>12}  {'rms':>12}"]
        for name, d in self.columns.items():
            lines.append(f"{name:>12}  {d['max_abs']:>12.5e}  {d['rms']:>12.5e}")
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# trajectory file io
# ---------------------------------------------------------------------------

def write_trajectory(path, trajectory: integrator.Trajectory) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(observables.ObservableRecord.FIELDS) + "\n")
        for rec in trajectory.records:
            fh.write(",".join(_FLOAT_FMT % v for v in rec.as_row()) + "\n")


def read_trajectory(path):
    """Return (times, columns dict) from a trajectory CSV."""
    with open(path) as fh:
        lines = [ln for ln in fh if ln.strip() and not ln.startswith("#")]
    header = lines[0].strip().split(",")
    data = np.array([[float(tok) for tok in ln.strip().split(",")]
                     for ln in lines[1:]])
    if data.ndim != 2 or data.shape[1] != len(header):
        raise ConfigError(f"malformed trajectory file {path!r}")
    cols = {name: data[:, i] for i, name in enumerate(header)}
    return cols["t"], cols


# ---------------------------------------------------------------------------
# running scenarios
# ---------------------------------------------------------------------------

def _default_out_dir(name: str) -> str:
    base = os.environ.get("RABIDIMER_OUT", os.path.join(".", "runs"))
    return os.path.join(base, name)


def _resolve_preset(name_or_path: str, overrides=None) -> model.ScenarioPreset:
    preset = model.load_preset(name_or_path)
    if overrides:
        preset = model.apply_overrides(preset, overrides)
    violations = model.validate_preset(preset)
    if violations:
        raise ConfigError("invalid configuration: " + "; ".join(violations))
    return preset


def _fock_truncations(preset, nmax_l, nmax_r, pmax):
    n0 = preset.initial_photons
    auto_l = math.ceil(n0 + 4.0 * math.sqrt(n0) + 6)
    return (nmax_l if nmax_l is not None else auto_l,
            nmax_r if nmax_r is not None else max(10, math.ceil(0.5 * auto_l)),
            pmax if pmax is not None else 12)


def run_scenario(name_or_path: str, overrides=None, out_dir=None,
                 engine: str = "variational", gauge: str = "normalized",
                 jump_window: float = 5.0, jump_threshold: float = 0.5,
                 nstate_nmax: int = 40, diagram_nmax: int = 5,
                 fock_nmax_l=None, fock_nmax_r=None, fock_pmax=None,
                 leak_tol: float = 1e-6, quiet: bool = True) -> OutputBundle:
    """Execute one scenario end to end and write the output bundle."""
    preset = _resolve_preset(name_or_path, overrides)
    out_dir = out_dir or _default_out_dir(preset.name)
    os.makedirs(out_dir, exist_ok=True)

    notes = model.non_paper_notes(preset.params)
    if not quiet:
        print(f"running {preset.name!r} with engine={engine} into {out_dir}")
        for note in notes:
            print(f"note: {note}")

    # state snapshots roughly once per unit time feed the number-state files
    snapshot_every = max(1, round(1.0 / preset.dt))
    truncations = None
    if engine == "variational":
        trajectory = integrator.run(preset, integrator.run_config_for(preset),
                                    gauge=gauge, checkpoint_every=snapshot_every)
    elif engine == "fock":
        nL, nR, npmax = _fock_truncations(preset, fock_nmax_l, fock_nmax_r, fock_pmax)
        truncations = {"n_max_L": nL, "n_max_R": nR, "p_max": npmax}
        initial = oracle.coherent_fock_init(
            math.sqrt(preset.initial_photons), 0.0, "down-down", nL, nR, npmax)
        trajectory = oracle.exact_propagate(
            preset.params, initial, preset.t_end, preset.dt,
            record_every=preset.record_every, leak_tol=leak_tol,
            snapshot_every=snapshot_every)
    else:
        raise ConfigError(f"unknown engine {engine!r}")

    traj_path = os.path.join(out_dir, "trajectory.csv")
    write_trajectory(traj_path, trajectory)

    ns_paths = _write_number_states(out_dir, trajectory.checkpoints, engine,
                                    gauge, nstate_nmax)

    diagram_path = os.path.join(out_dir, "energy_diagram.csv")
    _write_energy_diagram(diagram_path, preset, trajectory, diagram_nmax)

    events_path = os.path.join(out_dir, "events.csv")
    events = _write_events(events_path, trajectory, jump_window, jump_threshold)

    manifest = {
        "package_version": __version__,
        "preset": model.preset_to_dict(preset),
        "engine": engine,
        "gauge": gauge,
        "rng_seed": preset.rng_seed,
        "jump_window": jump_window,
        "jump_threshold": jump_threshold,
        "nstate_nmax": nstate_nmax,
        "log_floor": LOG_FLOOR,
        "fock_truncations": truncations,
        "leak_tol": leak_tol if engine == "fock" else None,
        "coupling_regime": analysis.coupling_regime(preset.params),
        "non_paper_notes": notes,
        "health": trajectory.health.as_dict(),
        "outputs": {
            "trajectory": os.path.basename(traj_path),
            "numberstates": [os.path.basename(p) for p in ns_paths],
            "energy_diagram": os.path.basename(diagram_path),
            "events": os.path.basename(events_path),
        },
    }
    manifest_path = os.path.join(out_dir, "manifest.json")
    with open(manifest_path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")

    if not quiet:
        print(f"finished: {len(trajectory)} samples, "
              f"max residual {trajectory.health.max_residual:.2e}, "
              f"max |norm^2-1| {trajectory.health.max_norm_deviation:.2e}")
    return OutputBundle(
        out_dir=out_dir, trajectory_path=traj_path,
        numberstate_paths=tuple(ns_paths), energy_diagram_path=diagram_path,
        events_path=events_path, manifest_path=manifest_path,
        manifest=manifest, trajectory=trajectory, events=events,
    )


def _write_number_states(out_dir, snapshots, engine, gauge, n_max):
    """Long-format number-state files from the run's state snapshots."""
    paths = []
    samples = {"L": [], "R": []}
    for state in snapshots:
        for side in ("L", "R"):
            if engine == "variational":
                pops = observables.number_state_populations(state, side, n_max, gauge)
            else:
                pops = oracle.fock_number_state_populations(state, side, n_max)
            samples[side].append((state.t, pops.p))

    for side in ("L", "R"):
        path = os.path.join(out_dir, f"numberstates_{side}.csv")
        with open(path, "w") as fh:
            fh.write(f"# log10 photon number-state populations, side={side}, "
                     f"floor={LOG_FLOOR}\n")
            fh.write("t,n,log10_p\n")
            for t, p in samples[side]:
                with np.errstate(divide="ignore"):
                    logs = np.log10(np.maximum(p, 0.0))
                logs = np.maximum(logs, LOG_FLOOR)
                for n, lp in enumerate(logs):
                    fh.write(f"{_FLOAT_FMT % t},{n},{_FLOAT_FMT % lp}\n")
        paths.append(path)
    return paths


def _write_energy_diagram(path, preset, trajectory, n_max):
    times = trajectory.times
    stride = max(1, len(times) // 1200)
    times = times[::stride]
    with open(path, "w") as fh:
        fh.write("level,t,energy\n")
        for label, t, e in analysis.energy_diagram_rows(preset.params, times,
                                                        n_max=n_max):
            fh.write(f"{label},{_FLOAT_FMT % t},{_FLOAT_FMT % e}\n")


def _write_events(path, trajectory, window, threshold):
    span = trajectory.times[-1] - trajectory.times[0] if len(trajectory) else 0.0
    events = []
    if span > 2.0 * window and len(trajectory) >= 8:
        events = analysis.detect_jumps(trajectory, window, threshold)
    with open(path, "w") as fh:
        fh.write("t_event,delta_N,window_t0,window_t1\n")
        for ev in events:
            fh.write(",".join(_FLOAT_FMT % v for v in
                              (ev.t_event, ev.delta_N, *ev.window)) + "\n")
    return events


# ---------------------------------------------------------------------------
# comparing runs
# ---------------------------------------------------------------------------

def _trajectory_file(path) -> str:
    if os.path.isdir(path):
        return os.path.join(path, "trajectory.csv")
    return path


def compare_runs(path_a, path_b) -> CompareReport:
    """Per-column max-abs and RMS differences of two runs.

    The finer run is linearly interpolated onto the coarser run's time
    grid inside the overlapping range; disjoint ranges are an error.
    """
    t_a, cols_a = read_trajectory(_trajectory_file(path_a))
    t_b, cols_b = read_trajectory(_trajectory_file(path_b))
    lo = max(t_a[0], t_b[0])
    hi = min(t_a[-1], t_b[-1])
    if hi < lo:
        raise ConfigError(
            f"time ranges are disjoint: [{t_a[0]:.6g}, {t_a[-1]:.6g}] vs "
            f"[{t_b[0]:.6g}, {t_b[-1]:.6g}]"
        )
    # the coarser grid hosts the comparison
    if np.median(np.diff(t_a)) >= np.median(np.diff(t_b)):
        t_ref, ref, fine_t, fine = t_a, cols_a, t_b, cols_b
    else:
        t_ref, ref, fine_t, fine = t_b, cols_b, t_a, cols_a
    mask = (t_ref >= lo - 1e-12) & (t_ref <= hi + 1e-12)
    t_grid = t_ref[mask]

    names = [n for n in ref if n != "t" and n in fine]
    columns = {}
    for name in names:
        a = ref[name][mask]
        b = np.interp(t_grid, fine_t, fine[name])
        diff = np.abs(a - b)
        columns[name] = {"max_abs": float(diff.max()),
                         "rms": float(np.sqrt(np.mean(diff ** 2)))}
    return CompareReport(columns=columns, n_points=int(mask.sum()),
                         t_range=(float(lo), float(hi)))


# ---------------------------------------------------------------------------
# argument parsing and entry point
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rabidimer",
        description="driven two-resonator qubit simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a scenario")
    p_run.add_argument("scenario", help="preset name or JSON config path")
    p_run.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE", help="override a config key")
    p_run.add_argument("--out", default=None, help="output directory")
    p_run.add_argument("--engine", choices=("variational", "fock"),
                       default="variational")
    p_run.add_argument("--gauge", choices=("normalized", "unnormalized"),
                       default="normalized")
    p_run.add_argument("--jump-window", type=float, default=5.0)
    p_run.add_argument("--jump-threshold", type=float, default=0.5)
    p_run.add_argument("--nstate-nmax", type=int, default=40)
    p_run.add_argument("--fock-nmax-l", type=int, default=None)
    p_run.add_argument("--fock-nmax-r", type=int, default=None)
    p_run.add_argument("--fock-pmax", type=int, default=None)
    p_run.add_argument("--leak-tol", type=float, default=1e-6)

    p_cmp = sub.add_parser("compare", help="diff two run outputs")
    p_cmp.add_argument("run_a")
    p_cmp.add_argument("run_b")

    sub.add_parser("presets", help="list built-in presets")

    p_sweep = sub.add_parser("sweep", help="fan out runs over one key")
    p_sweep.add_argument("scenario")
    p_sweep.add_argument("--vary", required=True, metavar="KEY=V1,V2,...")
    p_sweep.add_argument("--set", dest="overrides", action="append", default=[])
    p_sweep.add_argument("--out", default=None)
    p_sweep.add_argument("--workers", type=int, default=2)
    return parser


def _cmd_run(args) -> int:
    overrides = model.parse_overrides(args.overrides)
    bundle = run_scenario(
        args.scenario, overrides=overrides, out_dir=args.out,
        engine=args.engine, gauge=args.gauge,
        jump_window=args.jump_window, jump_threshold=args.jump_threshold,
        nstate_nmax=args.nstate_nmax,
        fock_nmax_l=args.fock_nmax_l, fock_nmax_r=args.fock_nmax_r,
        fock_pmax=args.fock_pmax, leak_tol=args.leak_tol, quiet=False)
    print(f"outputs in {bundle.out_dir}")
    return 0


def _cmd_compare(args) -> int:
    report = compare_runs(args.run_a, args.run_b)
    print(report.to_text())
    return 0


def _cmd_presets(args) -> int:
    for name, preset in sorted(model.PRESETS.items()):
        p = preset.params
        print(f"{name:>10}: omega_r={p.omega_L:g} J={p.J:g} lambda={p.lam:g} "
              f"F_L={p.F_L:g} F_R={p.F_R:g} Phi_L={p.Phi_L:.4g} "
              f"N0={preset.initial_photons:g} t_end={preset.t_end:g} "
              f"dt={preset.dt:g} M={preset.multiplicity}")
    return 0


def _cmd_sweep(args) -> int:
    key, sep, values = args.vary.partition("=")
    if not sep:
        raise ConfigError("--vary expects KEY=V1,V2,...")
    base_overrides = model.parse_overrides(args.overrides)
    base = _resolve_preset(args.scenario, base_overrides)
    out_base = args.out or _default_out_dir(f"{base.name}_sweep")

    def one(i_value):
        i, value = i_value
        overrides = dict(base_overrides)
        overrides[key] = value
        overrides["rng_seed"] = str(base.rng_seed + i)
        overrides["name"] = f"{base.name}_{key}_{value}"
        return run_scenario(args.scenario, overrides=overrides,
                            out_dir=os.path.join(out_base, f"{key}_{value}"))

    with ThreadPoolExecutor(max_workers=max(1, args.workers)) as pool:
        bundles = list(pool.map(one, enumerate(values.split(","))))
    for bundle in bundles:
        print(f"outputs in {bundle.out_dir}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {"run": _cmd_run, "compare": _cmd_compare,
                "presets": _cmd_presets, "sweep": _cmd_sweep}
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (SolverError, AssemblyError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3
    except NormAbortError as exc:
        print(f"norm abort: {exc}", file=sys.stderr)
        return 4
    except TruncationLeakError as exc:
        print(f"truncation leak: {exc}", file=sys.stderr)
        return 5


if __name__ == "__main__":
    sys.exit(main())
