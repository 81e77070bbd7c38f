"""Command line entry points: `convens mms` and `convens cavity`."""

import argparse
import os
import sys

from . import plots, scenarios, stepper
from .breeding import BredVectorConfig
from .scenarios import ScenarioConfig
from .stepper import CflConfig


def _add_common(p):
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--ra", type=float, help="Rayleigh number")
    p.add_argument("--pr", type=float, help="Prandtl number")
    p.add_argument("--dt", type=float, help="initial timestep")
    p.add_argument("--j", type=int, default=2, choices=[2],
                   help="ensemble size (fixed at 2)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--c-dagger", type=float, default=1.0,
                   help="CFL safety constant")
    p.add_argument("--no-plots", action="store_true",
                   help="skip figure rendering")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="convens",
        description="Ensemble timestepping for 2D Boussinesq natural convection")
    sub = parser.add_subparsers(dest="command", required=True)

    # scenario flags default to None so explicit values can override a
    # config file while absent ones fall back to the scenario defaults
    p_mms = sub.add_parser("mms", help="manufactured-solution convergence ladder")
    _add_common(p_mms)
    p_mms.add_argument("--m", type=int, nargs="+", default=None,
                       help="mesh ladder (dt = 1/m at each level)")
    p_mms.add_argument("--t-final", type=float, default=None)
    p_mms.add_argument("--eps", type=float, default=None,
                       help="member scaling perturbation")

    p_cav = sub.add_parser("cavity", help="differentially heated cavity benchmark")
    _add_common(p_cav)
    p_cav.add_argument("--m", type=int, default=None, help="mesh subdivisions")
    p_cav.add_argument("--steady-tol", type=float, default=None)
    p_cav.add_argument("--max-steps", type=int, default=None)
    p_cav.add_argument("--k-star", type=int, default=None, help="breeding cycles")
    return parser


def _base_kwargs(args):
    kw = {}
    if args.config:
        kw.update(scenarios.parse_config_file(args.config))
    if args.ra is not None:
        kw["Ra"] = args.ra
    if args.pr is not None:
        kw["Pr"] = args.pr
    if args.dt is not None:
        kw["dt0"] = args.dt
    kw["seed"] = args.seed
    kw["output_dir"] = args.out
    kw.setdefault("cfl", CflConfig(c_dagger=args.c_dagger))
    return kw


def _override(kw, key, value):
    if value is not None:
        kw[key] = value


def run_mms_command(args):
    kw = _base_kwargs(args)
    kw.setdefault("Pr", 1.0)
    kw.setdefault("Ra", 100.0)
    _override(kw, "m_list", tuple(args.m) if args.m else None)
    _override(kw, "t_final", args.t_final)
    _override(kw, "eps_mms", args.eps)
    cfg = ScenarioConfig(scenario="mms", **kw)
    result = scenarios.run_mms(cfg)
    os.makedirs(cfg.output_dir, exist_ok=True)
    csv_path = os.path.join(cfg.output_dir, "mms_rates.csv")
    scenarios.write_mms_csv(csv_path, result)
    print(f"wrote {csv_path}")
    for row in result.table_rows():
        print(f"m={row['m']:3d} dt={row['dt']:.5f} "
              f"u_H1={row['u_2_h1']:.4e} (rate {row['u_2_h1_rate']:.2f}) "
              f"T_H1={row['T_2_h1']:.4e} (rate {row['T_2_h1_rate']:.2f}) "
              f"p_L2={row['p_2_l2']:.4e} (rate {row['p_2_l2_rate']:.2f})")
    if not args.no_plots:
        fig_path = os.path.join(cfg.output_dir, "mms_convergence.png")
        plots.plot_mms_convergence(result, fig_path)
        print(f"wrote {fig_path}")
    return 0


def run_cavity_command(args):
    kw = _base_kwargs(args)
    kw.setdefault("Pr", 0.71)
    _override(kw, "m", args.m)
    _override(kw, "steady_tol", args.steady_tol)
    _override(kw, "max_steps", args.max_steps)
    kw.setdefault("bred", BredVectorConfig(
        rng_seed=args.seed,
        k_star=args.k_star if args.k_star is not None else 5))
    cfg = ScenarioConfig(scenario="cavity", **kw)
    report, state, ops = scenarios.run_benchmark(cfg)
    scenarios.export_benchmark(report, state, ops, cfg.output_dir)
    print(f"Ra={report.Ra:g} m={report.m}: "
          f"Nu_avg={report.nu_avg:.4f}  "
          f"max u1(x=0.5)={report.max_u1_x05:.4f} at y={report.max_u1_loc:.4f}  "
          f"max u2(y=0.5)={report.max_u2_y05:.4f} at x={report.max_u2_loc:.4f}")
    print(f"steps={report.steps} t={report.final_t:.4f} dt={report.final_dt:g} "
          f"halvings={report.halvings} max_energy={report.max_energy:.4e}")
    if not args.no_plots:
        nu_fig = os.path.join(cfg.output_dir, "nusselt_profiles.png")
        plots.plot_nusselt_profiles(report.hot_profile, report.cold_profile, nu_fig)
        log_fig = os.path.join(cfg.output_dir, "step_log.png")
        plots.plot_step_log(report.log, log_fig)
        print(f"wrote {nu_fig}")
        print(f"wrote {log_fig}")
    return 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "mms":
        return run_mms_command(args)
    return run_cavity_command(args)


if __name__ == "__main__":
    sys.exit(main())
