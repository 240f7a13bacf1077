"""Command-line entry point: ``vselbow {simulate,characterize,scenario,fit}``.

Exit codes: 0 ok, 2 configuration error, 3 runtime or protocol fault,
4 scenario metric failure.
"""
import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .characterization import characterize, surface_grid
from .config import build_gains, build_plant, build_protocol, build_scenario, load_config, resolve
from .control import ControllerConfig, ElbowController, Trajectory, run_closed_loop
from .errors import ConfigError, EmgFormatError, IntegrationFault, PassiveOverload, ProtocolError, VSElbowError
from .io import provenance, write_json, write_table, write_trajectory
from .plant import LOG_COLUMNS, Simulator
from .scenarios import KINDS, identified_surface, run_scenario
from .transmission import SAMPLE_COLUMNS, fit_polynomial_surface, read_samples_csv

EXIT_OK, EXIT_CONFIG, EXIT_FAULT, EXIT_METRIC = 0, 2, 3, 4

log = logging.getLogger("vselbow")


def _overrides(args):
    over = {}
    if args.layout:
        over["layout"] = args.layout
    if args.out:
        over["output_dir"] = args.out
    if args.seed is not None:
        over["seed"] = args.seed
    if getattr(args, "parallel", None):
        over.setdefault("characterize", {})["parallel"] = args.parallel
    if args.preset is not None:
        preset = int(args.preset) if args.preset.isdigit() else args.preset
        if args.command == "simulate":
            over["simulate"] = {"preset": preset}
        elif args.command == "scenario":
            over["scenario"] = {"presets": [preset]}
    return over


# --------------------------------------------------------------------------
# commands


def simulate(doc):
    """Open-loop hold or posture-step tracking run; returns the trajectory."""
    plant = build_plant(doc)
    gains = build_gains(doc)
    s = doc["simulate"]
    ts = resolve(s["preset"], plant, "simulate/preset")
    start, target = math.radians(s["start_deg"]), math.radians(s["target_deg"])
    theta_o = None if s["initial_output_deg"] is None else math.radians(s["initial_output_deg"])
    sim = Simulator(plant, gains, backend=s["backend"])
    sim.reset(start, ts, theta_o)
    ctl_cfg = ControllerConfig.for_plant(plant, gains, compensation=doc["controller"].get("compensation", False))
    if s["mode"] == "open_loop":
        traj = Trajectory(LOG_COLUMNS)
        for _ in range(int(round(s["horizon_s"] / ctl_cfg.high_period))):
            traj.rows.append(sim.log_row())
            sim.advance(ctl_cfg.substeps)
        return traj
    surface = identified_surface(plant, gains) if ctl_cfg.compensation else None
    ctl = ElbowController(plant.layout, ctl_cfg, plant.transmission.theta_s_range, surface)
    step = s["step_time_s"]
    return run_closed_loop(sim, ctl, lambda t, obs: (target if t >= step else start, ts), s["horizon_s"])


def cmd_simulate(doc, out, prov):
    traj = simulate(doc)
    path = write_trajectory(out / "trajectory.csv", traj, prov)
    final = math.degrees(traj.rows[-1][LOG_COLUMNS.index("theta_o_rad")]) if traj.rows else None
    write_json(out / "simulate.json", {"rows": len(traj.rows), "final_theta_o_deg": final}, prov)
    print(f"wrote {path} ({len(traj.rows)} rows)")
    return EXIT_OK


def cmd_characterize(doc, out, prov):
    plant = build_plant(doc)
    gains = build_gains(doc)
    keep = {}
    report = characterize(plant, gains, build_protocol(doc), doc["characterize"]["parallel"], keep=keep)
    elastic = keep["elastic"]
    write_json(out / "datasheet.json", report.to_dict(), prov)
    write_json(out / "surface.json", {"surface": report.surface.to_dict()}, prov)
    write_table(out / "samples.csv", SAMPLE_COLUMNS + ("theta_o_rad", "loading"), elastic.samples.tolist(), prov)
    write_table(out / "surface_grid.csv", ("theta_s_rad", "delta_rad", "tau_Nm", "sigma_Nm_rad"),
                surface_grid(report.surface).tolist(), prov)
    write_table(out / "speed.csv", ("preset", "theta_s_rad", "flexion_deg_s", "extension_deg_s"),
                [(int(i), ts, f, e) for i, ts, f, e in report.speed_table], prov)
    svt0, svt3 = keep["svt"]
    n = min(len(svt0.times), len(svt3.times))
    write_table(out / "svt.csv", ("t_s", "theta_s_unloaded_rad", "theta_s_loaded_rad"),
                np.column_stack([svt0.times[:n], svt0.theta_s[:n], svt3.theta_s[:n]]).tolist(), prov)
    flags = ", ".join(f"{k}={'ok' if v else 'FAIL'}" for k, v in report.compliance.items())
    print(f"{report.layout}: sigma [{report.sigma_range[0]:.3g}, {report.sigma_range[1]:.3g}] Nm/rad; {flags}")
    return EXIT_OK


def cmd_scenario(doc, out, prov, name):
    spec = build_scenario(doc, name)
    plant = build_plant(doc, spec.layout)
    for i, p in enumerate(spec.presets):
        resolve(p, plant, f"scenario/presets/{i}")
    result = run_scenario(spec, plant)
    write_json(out / f"{name}.json", result.to_dict(), prov)
    for preset, traj in result.trajectories.items():
        write_trajectory(out / f"{name}_{preset}.csv", traj, prov)
    for check, ok in result.checks.items():
        print(f"{'PASS' if ok else 'FAIL'} {name}:{check}")
    return EXIT_OK if result.passed else EXIT_METRIC


def cmd_fit(doc, out, prov, samples):
    try:
        data = read_samples_csv(samples)
    except OSError as exc:
        raise ConfigError(str(exc), "samples") from None
    except ValueError as exc:
        raise ConfigError(str(exc), "samples") from None
    f = doc["fit"]
    surface = fit_polynomial_surface(data, degrees=tuple(f["degrees"]), odd_in_delta=f["odd_in_delta"])
    write_json(out / "surface.json", {"surface": surface.to_dict()}, prov)
    print(f"fit {len(data)} samples: R2={surface.r2:.6f} RMSE={surface.rmse:.4g} Nm")
    return EXIT_OK


# --------------------------------------------------------------------------


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration (angles in degrees)")
    common.add_argument("--layout", help="aa or d2")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int, help="run seed (recorded in every output)")
    common.add_argument("--preset", help="stiffness preset: soft, mid, stiff, S1..S9 or an index")
    common.add_argument("--parallel", type=int, help="worker processes for independent presets")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="vselbow", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"vselbow {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="simulate a posture step or an open-loop hold")
    sub.add_parser("characterize", parents=[common], help="run the datasheet protocols")
    sc = sub.add_parser("scenario", parents=[common], help="run a scripted case study")
    sc.add_argument("name", help=f"one of: {', '.join(KINDS)}")
    fit = sub.add_parser("fit", parents=[common], help="fit a torque surface to a samples CSV")
    fit.add_argument("samples", help="CSV with columns " + ", ".join(SAMPLE_COLUMNS))
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.layout is not None:
            args.layout = args.layout.lower()
        if args.command == "scenario" and args.name not in KINDS:
            raise ConfigError(f"unknown scenario {args.name!r}; available: {', '.join(KINDS)}", "scenario")
        doc = load_config(args.config, _overrides(args))
        prov = provenance(doc, doc["seed"])
        out = Path(doc["output_dir"])
        if args.command == "simulate":
            return cmd_simulate(doc, out, prov)
        if args.command == "characterize":
            return cmd_characterize(doc, out, prov)
        if args.command == "scenario":
            return cmd_scenario(doc, out, prov, args.name)
        return cmd_fit(doc, out, prov, args.samples)
    except (ConfigError, EmgFormatError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ProtocolError as exc:
        print(f"protocol fault: {exc}", file=sys.stderr)
        return EXIT_FAULT
    except (IntegrationFault, PassiveOverload) as exc:
        print(f"runtime fault: {exc}", file=sys.stderr)
        return EXIT_FAULT
    except VSElbowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAULT


if __name__ == "__main__":
    sys.exit(main())
