"""Command-line frontend.

Subcommands: ``gen``, ``solve``, ``sweep``, ``trace``, ``compare``,
``export-ising``.  Global flags ``--seed``, ``--workers``, ``--out`` and
``--config`` may also be supplied through the environment as
``CIMSEL_SEED``, ``CIMSEL_WORKERS``, ``CIMSEL_OUT`` and ``CIMSEL_CONFIG``
(flags win over the environment, which wins over the config file).

Every run that writes to an output directory echoes its fully resolved
configuration there as ``run_config.json``, so any artifact can be
regenerated from the directory contents alone.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import bench
from .baselines import search_space_size
from .channel import ChannelFormatError, MimoConfig, generate_channel, read_channel, write_channel
from .cim import CimParams, run_anneal, write_trajectory_csv
from .formulation import compile_instance, write_instance
from .rng import substream

_ENV_PREFIX = "CIMSEL_"

_CIM_KEYS = ("p", "beta", "a", "gamma", "dt", "steps", "n_anneals", "init_scale", "x_clip")


def _env_default(name: str, cast, fallback):
    raw = os.environ.get(_ENV_PREFIX + name.upper())
    return cast(raw) if raw is not None else fallback


def _load_config_file(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise SystemExit(f"error: cannot read config file {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise SystemExit(f"error: config file {path} is not valid JSON: {exc}")


def _resolved_config(args) -> dict:
    """Merge config file defaults with command-line overrides."""
    cfg = dict(_load_config_file(args.config))
    cim = dict(cfg.get("cim", {}))

    def override(key, value):
        if value is not None:
            cfg[key] = value

    override("master_seed", args.seed)
    override("workers", args.workers)
    for key in ("n_t", "n_r", "n_states", "n_instances", "trace_stride", "es_budget"):
        override(key, getattr(args, key.replace("-", "_"), None))
    if getattr(args, "lambdas", None) is not None:
        cfg["lambdas"] = args.lambdas
    if getattr(args, "lam", None) is not None:
        cfg["lambda"] = args.lam
    for key in _CIM_KEYS:
        value = getattr(args, f"cim_{key}", None)
        if value is not None:
            cim[key] = value
    if cim:
        cfg["cim"] = cim
    cfg.setdefault("master_seed", 0)
    cfg.setdefault("workers", 1)
    return cfg


def _mimo_config(cfg: dict) -> MimoConfig:
    try:
        return MimoConfig(
            n_t=int(cfg["n_t"]), n_r=int(cfg["n_r"]), n_states=int(cfg["n_states"])
        )
    except KeyError as exc:
        raise SystemExit(f"error: missing problem dimension {exc} (flag or config file)")


def _cim_params(cfg: dict) -> CimParams:
    return CimParams(**{k: v for k, v in cfg.get("cim", {}).items() if k in _CIM_KEYS})


def _plan(cfg: dict) -> bench.ExperimentPlan:
    return bench.ExperimentPlan(
        config=_mimo_config(cfg),
        lambdas=tuple(cfg.get("lambdas", (0.5,))),
        cim=_cim_params(cfg),
        n_instances=int(cfg.get("n_instances", 1000)),
        master_seed=int(cfg.get("master_seed", 0)),
        trace_stride=int(cfg.get("trace_stride", 10)),
        es_budget=int(cfg.get("es_budget", bench.ES_BUDGET_DEFAULT)),
    )


def _out_dir(args, default_name: str) -> Path:
    out = Path(args.out) if args.out else Path("runs") / default_name
    out.mkdir(parents=True, exist_ok=True)
    return out


def _echo_config(cfg: dict, out: Path, command: str) -> None:
    payload = {"format": 1, "command": command}
    payload.update(cfg)
    with open(out / "run_config.json", "w") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _write_run_log(failures, out: Path) -> None:
    with open(out / "run.log", "w") as fh:
        if failures:
            fh.write("\n".join(failures) + "\n")
        else:
            fh.write("all instances completed\n")


def cmd_gen(args) -> int:
    cfg = _resolved_config(args)
    config = _mimo_config(cfg)
    n_instances = int(cfg.get("n_instances", 1))
    master_seed = int(cfg["master_seed"])
    out = _out_dir(args, "gen")
    seeds, files = [], []
    for k in range(n_instances):
        seed = bench.instance_channel_seed(master_seed, k)
        g = generate_channel(config, seed)
        name = f"channel_{k:05d}.json"
        try:
            write_channel(g, out / name)
        except OSError as exc:
            print(f"error: cannot write {out / name}: {exc}", file=sys.stderr)
            return 2
        seeds.append(seed)
        files.append(name)
    manifest = {
        "format": 1,
        "n_t": config.n_t,
        "n_r": config.n_r,
        "n_states": config.n_states,
        "master_seed": master_seed,
        "n_instances": n_instances,
        "seeds": seeds,
        "files": files,
    }
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=1)
        fh.write("\n")
    _echo_config(cfg, out, "gen")
    print(f"wrote {n_instances} channel files and manifest.json to {out}")
    return 0


def cmd_solve(args) -> int:
    cfg = _resolved_config(args)
    try:
        g = read_channel(args.channel)
    except (OSError, json.JSONDecodeError, ChannelFormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    lam = float(cfg.get("lambda", 0.5))
    params = _cim_params(cfg)
    seed = int(cfg["master_seed"])
    result = bench.run_instance(g, lam, params, seed)
    report = {
        "format": 1,
        "channel": str(args.channel),
        "channel_seed": g.seed,
        "lambda": lam,
        "seed": seed,
        "assignment": {"tx": list(result.best_assignment.tx), "rx": list(result.best_assignment.rx)},
        "objective": result.best,
        "feasibility_rate": result.p_c,
        "n_anneals": result.n_anneals,
        "n_feasible": result.n_feasible,
        "n_aborted": result.n_aborted,
        "fallback_used": result.fallback_used,
        "average_objective": result.avg,
    }
    inst = compile_instance(g, lam)
    if args.export_ising:
        write_instance(inst, args.export_ising)
    if args.dump_trajectory:
        outcome = run_anneal(
            inst, params, substream(bench.cim_master_seed(seed), 0), record_every=args.stride
        )
        write_trajectory_csv(outcome, inst, params, args.dump_trajectory)
    text = json.dumps(report, indent=1)
    if args.out:
        out = _out_dir(args, "solve")
        with open(out / "solution.json", "w") as fh:
            fh.write(text + "\n")
        _echo_config(cfg, out, "solve")
    print(text)
    if result.n_aborted == result.n_anneals:
        print("error: every anneal aborted", file=sys.stderr)
        return 3
    return 0


def _write_plot_tables(out: Path, summaries) -> None:
    """Tidy per-figure tables: one for the objective, one for feasibility."""
    with open(out / "plot_lambda_e.csv", "w") as fh:
        fh.write("lambda,method,e_rho\n")
        for s in summaries:
            fh.write(f"{s.lam!r},{s.method},{s.e_rho!r}\n")
    with open(out / "plot_lambda_pc.csv", "w") as fh:
        fh.write("lambda,method,p_c\n")
        for s in summaries:
            fh.write(f"{s.lam!r},{s.method},{s.p_c!r}\n")


def cmd_sweep(args) -> int:
    cfg = _resolved_config(args)
    plan = _plan(cfg)
    out = _out_dir(args, "sweep")
    result = bench.sweep_lambda(plan, workers=int(cfg["workers"]))
    bench.write_metric_rows(result.rows, out / "results.csv")
    bench.write_summary_json(result.summaries, out / "summary.json")
    _write_run_log(result.failures, out)
    _echo_config(cfg, out, "sweep")
    if args.plot_data:
        _write_plot_tables(out, result.summaries)
    print(f"swept {len(plan.lambdas)} penalty weights over {len(result.records)} instances -> {out}")
    if not result.records:
        print("error: all instances failed", file=sys.stderr)
        return 4
    return 0


def cmd_trace(args) -> int:
    cfg = _resolved_config(args)
    plan = _plan(cfg)
    lam = float(cfg.get("lambda", plan.lambdas[0]))
    out = _out_dir(args, "trace")
    result = bench.time_trace(plan, lam, workers=int(cfg["workers"]))
    bench.write_metric_rows(result.rows, out / "trace.csv")
    bench.write_trace_summary_json(result, out / "trace_summary.json")
    _write_run_log(result.failures, out)
    _echo_config(cfg, out, "trace")
    if args.plot_data:
        with open(out / "plot_step_e.csv", "w") as fh:
            fh.write("step,method,e_rho\n")
            for s in result.step_summaries:
                fh.write(f"{s.step},cim_best,{s.e_rho_best!r}\n")
                fh.write(f"{s.step},cim_avg,{s.e_rho_avg!r}\n")
        with open(out / "plot_step_pc.csv", "w") as fh:
            fh.write("step,p_c\n")
            for s in result.step_summaries:
                fh.write(f"{s.step},{s.p_c!r}\n")
    print(f"traced {len(result.step_summaries)} sampled steps at lambda={lam} -> {out}")
    if not result.records:
        print("error: all instances failed", file=sys.stderr)
        return 4
    return 0


def cmd_compare(args) -> int:
    cfg = _resolved_config(args)
    plan = _plan(cfg)
    out = _out_dir(args, "compare")
    sweep = bench.sweep_lambda(plan, workers=int(cfg["workers"]))
    summaries = bench.summarize_comparison(sweep)
    if search_space_size(plan.config) > plan.es_budget:
        print(
            f"note: exhaustive search skipped "
            f"({search_space_size(plan.config)} combinations exceed budget {plan.es_budget})"
        )
    bench.write_metric_rows(sweep.rows, out / "results.csv")
    bench.write_summary_json(summaries, out / "summary.json")
    _write_run_log(sweep.failures, out)
    _echo_config(cfg, out, "compare")
    if args.plot_data:
        _write_plot_tables(out, summaries)
    widths = max((len(s.method) for s in summaries), default=6)
    print(f"{'method':<{widths}}  lambda  e_rho     stderr    p_c")
    for s in summaries:
        print(f"{s.method:<{widths}}  {s.lam:<6.3g}  {s.e_rho:<8.5g}  {s.stderr:<8.3g}  {s.p_c:.4g}")
    if not sweep.records:
        print("error: all instances failed", file=sys.stderr)
        return 4
    return 0


def cmd_export_ising(args) -> int:
    cfg = _resolved_config(args)
    try:
        g = read_channel(args.channel)
    except (OSError, json.JSONDecodeError, ChannelFormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    lam = float(cfg.get("lambda", 0.5))
    inst = compile_instance(g, lam)
    write_instance(inst, args.output)
    print(f"wrote Ising instance (dim {inst.dim}, lambda {lam}) to {args.output}")
    return 0


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=_env_default("seed", int, None),
                   help="master seed (env CIMSEL_SEED)")
    p.add_argument("--workers", type=int, default=_env_default("workers", int, None),
                   help="parallel instance workers (env CIMSEL_WORKERS)")
    p.add_argument("--out", default=_env_default("out", str, None),
                   help="output directory (env CIMSEL_OUT)")
    p.add_argument("--config", default=_env_default("config", str, None),
                   help="JSON config file; flags override it (env CIMSEL_CONFIG)")


def _add_problem_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n-t", dest="n_t", type=int, help="transmit antennas")
    p.add_argument("--n-r", dest="n_r", type=int, help="receive antennas")
    p.add_argument("--n-states", dest="n_states", type=int, help="configurations per antenna")


def _add_cim_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--steps", dest="cim_steps", type=int, help="integration steps")
    p.add_argument("--anneals", dest="cim_n_anneals", type=int, help="anneals per instance")
    p.add_argument("--dt", dest="cim_dt", type=float, help="integration step size")


def _parse_lambdas(raw: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in raw.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse lambda list {raw!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cimsel",
        description="Ising-machine antenna-configuration selection: generate channels, "
                    "compile instances, solve, sweep, trace and compare.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write channel instance files plus a seed manifest")
    _add_common_flags(p)
    _add_problem_flags(p)
    p.add_argument("--n-instances", dest="n_instances", type=int, help="number of files")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", help="solve one channel file")
    _add_common_flags(p)
    _add_cim_flags(p)
    p.add_argument("channel", help="channel JSON file")
    p.add_argument("--lam", type=float, help="penalty weight in [0, 1]")
    p.add_argument("--export-ising", metavar="PATH", help="also write the compiled instance JSON")
    p.add_argument("--dump-trajectory", metavar="PATH", help="write anneal 0's readout trajectory CSV")
    p.add_argument("--stride", type=int, default=10, help="trajectory sampling stride")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="sweep penalty weights over many instances")
    _add_common_flags(p)
    _add_problem_flags(p)
    _add_cim_flags(p)
    p.add_argument("--n-instances", dest="n_instances", type=int)
    p.add_argument("--lambdas", type=_parse_lambdas, help="comma-separated weights, e.g. 0.1,0.5,0.9")
    p.add_argument("--es-budget", dest="es_budget", type=int)
    p.add_argument("--plot-data", action="store_true", help="also emit tidy plot tables")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("trace", help="per-step metrics along the solver dynamics")
    _add_common_flags(p)
    _add_problem_flags(p)
    _add_cim_flags(p)
    p.add_argument("--n-instances", dest="n_instances", type=int)
    p.add_argument("--lam", type=float, help="penalty weight to trace")
    p.add_argument("--stride", dest="trace_stride", type=int, help="readout sampling stride")
    p.add_argument("--plot-data", action="store_true")
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("compare", help="method comparison table at fixed weights")
    _add_common_flags(p)
    _add_problem_flags(p)
    _add_cim_flags(p)
    p.add_argument("--n-instances", dest="n_instances", type=int)
    p.add_argument("--lambdas", type=_parse_lambdas)
    p.add_argument("--es-budget", dest="es_budget", type=int)
    p.add_argument("--plot-data", action="store_true")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("export-ising", help="compile a channel file to an Ising instance JSON")
    _add_common_flags(p)
    p.add_argument("channel", help="channel JSON file")
    p.add_argument("output", help="instance JSON path")
    p.add_argument("--lam", type=float, help="penalty weight in [0, 1]")
    p.set_defaults(func=cmd_export_ising)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
