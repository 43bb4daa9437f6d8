"""Command-line front end.

Subcommands: ``synth`` (generate a low-rank smooth signal), ``sample`` (draw
a sample set), ``bounds`` (evaluate the sample-complexity bounds), available
``reconstruct`` methods, ``verify`` (Monte Carlo checks of the guarantees)
and ``experiment`` (the ratio-grid comparison, with CSV/JSON/plot-data output
and a rendered figure).

Exit codes: 0 success, 1 usage error, 2 data error, 3 solver did not converge
(partial result still written). All randomness flows from ``--seed``; the
same flags and seed give byte-identical outputs.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .evaluation import (
    ExperimentConfig,
    SynthSpec,
    nrmse,
    run_experiment_grid,
    ingest_dataset,
    verify_incoherence_propagation,
    verify_rank_preservation,
    write_grid_csv,
    write_grid_json,
    write_plot_data,
)
from .graphs import TimeHorizon, VertexGraph, build_operators, build_time_operators
from .reconstruction import (
    CompletionConfig,
    JointSolverConfig,
    TvInpaintConfig,
    solve_joint,
    svt_baseline,
    tnnr_baseline,
    two_stage_reconstruct,
)
from .sampling import (
    SamplingPlan,
    SampleSet,
    build_bound_report,
    ccs_sample,
    mc_uniform_sample,
    min_cols_for_rank,
    min_rows_for_rank,
    subset_random_sample,
)
from .signals import load_matrix_csv, save_matrix_csv, synth_ftvgs

FLOAT_FMT = ".17g"


class _Parser(argparse.ArgumentParser):
    """Argument parser whose usage failures exit with code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _fmt(value: float) -> str:
    return format(float(value), FLOAT_FMT)


def _resolve_graph(spec: str, n: int) -> VertexGraph:
    if spec == "ring":
        return VertexGraph.ring(n)
    if spec == "path":
        return VertexGraph.path(n)
    graph = VertexGraph.from_csv(spec)
    if graph.num_vertices > n:
        raise ValueError(f"graph file has {graph.num_vertices} vertices, matrix has {n} rows")
    if graph.num_vertices < n:
        graph = VertexGraph(n, graph.edges)
    return graph


def _parse_kv(text: str, caster=float) -> dict:
    out = {}
    for part in text.split(","):
        if "=" not in part:
            raise ValueError(f"bad fragment {part!r}; expected key=value")
        key, val = part.split("=", 1)
        out[key.strip()] = caster(val)
    return out


_CONFIG_SECTIONS = {
    "joint": JointSolverConfig,
    "completion": CompletionConfig,
    "tv": TvInpaintConfig,
    "svt": None,
    "tnnr": None,
}


def _load_config(path) -> dict:
    """Read and validate the solver configuration JSON."""
    if path is None:
        return {}
    with open(path) as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise ValueError(f"{path}: config must be a JSON object")
    unknown = set(raw) - set(_CONFIG_SECTIONS)
    if unknown:
        raise ValueError(f"{path}: unknown config sections {sorted(unknown)}")
    out = {}
    for section, value in raw.items():
        if not isinstance(value, dict):
            raise ValueError(f"{path}: section {section!r} must be an object")
        cls = _CONFIG_SECTIONS[section]
        if cls is not None:
            try:
                out[section] = cls(**value)
            except TypeError as exc:
                raise ValueError(f"{path}: bad fields in section {section!r}: {exc}")
        else:
            allowed = {"svt": {"tau", "step", "iters", "tol"},
                       "tnnr": {"trunc_r", "outer_iters", "inner_iters", "tol", "mu"}}[section]
            bad = set(value) - allowed
            if bad:
                raise ValueError(f"{path}: unknown keys {sorted(bad)} in section {section!r}")
            out[section] = value
    return out


def cmd_synth(args) -> int:
    graph = _resolve_graph(args.graph, args.n)
    x = synth_ftvgs(graph, TimeHorizon(args.t), args.rank,
                    args.graph_band or args.rank, args.time_band or args.rank,
                    args.seed)
    save_matrix_csv(args.out, x.data)
    if args.graph_out:
        graph.to_csv(args.graph_out)
    print(f"wrote {args.n}x{args.t} rank-{args.rank} signal to {args.out}")
    return 0


def cmd_sample(args) -> int:
    mat = load_matrix_csv(args.matrix)
    if args.sampler == "uniform":
        if args.count is None:
            raise ValueError("uniform sampler needs --count")
        s = mc_uniform_sample(mat, args.count, args.seed)
    else:
        plan = SamplingPlan.from_string(args.plan)
        if args.sampler == "cross":
            s = ccs_sample(mat, plan, args.seed)
        else:
            s = subset_random_sample(mat, plan, args.seed)
    with open(args.out, "w") as fh:
        fh.write(s.to_json())
        fh.write("\n")
    print(f"wrote {s.n_samples} draws ({s.n_distinct} distinct) over "
          f"{len(s.rows)} rows x {len(s.cols)} cols to {args.out}")
    return 0


def cmd_bounds(args) -> int:
    lines = []
    rows = min_rows_for_rank(args.r, args.mu1, args.delta, args.eps)
    mu2 = args.mu2 if args.mu2 is not None else args.mu1
    cols = min_cols_for_rank(args.r, mu2, args.delta, args.eps)
    lines.append(("min_rows", rows))
    lines.append(("min_cols", cols))
    payload = {"min_rows": rows, "min_cols": cols}
    if args.n_vertices is not None:
        report = build_bound_report(
            args.r, args.mu1, mu2, args.kappa, args.n_vertices,
            args.delta, args.eps, args.eta, args.beta,
            n_rows=args.rows, n_cols=args.cols)
        payload = report.to_dict()
        lines = [
            ("min_rows", report.min_rows),
            ("min_cols", report.min_cols),
            ("min_samples", f"{report.min_samples}"
             + (" (vacuous)" if report.samples_vacuous else "")),
            ("rank_prob", _fmt(report.rank_prob)),
            ("incoherence_p", _fmt(report.incoherence_p)
             + (" (vacuous)" if report.incoherence_vacuous else "")),
            ("incoherence_prob", _fmt(report.incoherence_prob)),
            ("recovery_prob_raw", _fmt(report.recovery_prob_raw)),
            ("recovery_prob", _fmt(report.recovery_prob)
             + (" (vacuous)" if report.recovery_vacuous else "")),
        ]
    for key, value in lines:
        print(f"{key} {value}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(payload, fh, indent=1)
            fh.write("\n")
    return 0


def cmd_reconstruct(args) -> int:
    with open(args.samples) as fh:
        s = SampleSet.from_json(fh.read())
    n, t = (int(v) for v in args.shape.split(","))
    cfg = _load_config(args.config)
    converged = True
    report = {"method": args.method}
    if args.method in ("joint", "two_stage"):
        graph = _resolve_graph(args.graph, n)
        ops = build_operators(graph)
        tops = build_time_operators(TimeHorizon(t))
        if args.method == "joint":
            res = solve_joint(s, ops, tops, cfg.get("joint"))
        else:
            res = two_stage_reconstruct(s, ops, tops,
                                        cfg.get("completion"), cfg.get("tv"))
        x_hat = res.x_hat
        converged = res.converged
        report.update(converged=res.converged, iterations=res.iterations,
                      sample_residual=res.sample_residual,
                      objective_trace=[float(v) for v in res.objective_trace])
    elif args.method == "svt":
        x_hat = svt_baseline(s, (n, t), **cfg.get("svt", {}))
        report["converged"] = True
    else:
        kwargs = dict(cfg.get("tnnr", {}))
        kwargs.setdefault("trunc_r", args.trunc_r)
        x_hat = tnnr_baseline(s, (n, t), **kwargs)
        report["converged"] = True
    save_matrix_csv(args.out, x_hat)
    if args.truth:
        report["nrmse"] = nrmse(load_matrix_csv(args.truth), x_hat)
        print(f"nrmse {_fmt(report['nrmse'])}")
    if args.report:
        with open(args.report, "w") as fh:
            json.dump(report, fh, indent=1)
            fh.write("\n")
    print(f"wrote reconstruction to {args.out}")
    if not converged:
        print("solver did not converge; partial result written", file=sys.stderr)
        return 3
    return 0


def cmd_verify(args) -> int:
    spec = SynthSpec(n_vertices=args.n, n_steps=args.t, rank=args.rank,
                     graph_band=args.graph_band, time_band=args.time_band)
    if args.check == "rank":
        report = verify_rank_preservation(spec, args.delta, args.eps,
                                          args.trials, base_seed=args.seed)
        print(f"row_success_rate {_fmt(report.row_success_rate)} "
              f"(floor {_fmt(report.row_floor)})")
        print(f"block_success_rate {_fmt(report.block_success_rate)} "
              f"(floor {_fmt(report.block_floor)})")
    else:
        report = verify_incoherence_propagation(
            spec, args.eta, args.trials, delta=args.delta, epsilon=args.eps,
            base_seed=args.seed)
        print(f"u_bound_rate {_fmt(report.u_bound_rate)}")
        print(f"v_bound_rate {_fmt(report.v_bound_rate)}")
        print(f"both_bound_rate {_fmt(report.both_bound_rate)} "
              f"(floor {_fmt(report.floor)}"
              + (", vacuous)" if report.vacuous else ")"))
        print(f"rank_deficient {report.rank_deficient} of {report.trials}")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(report.to_dict(), fh, indent=1)
            fh.write("\n")
    if args.fig:
        from . import plotting
        if args.check == "rank":
            plotting.save_rank_check_figure(report, args.fig)
        else:
            plotting.save_incoherence_figure(report, args.fig)
    return 0


def _parse_settings(args) -> tuple:
    if args.grid == "table2":
        return ((0.9, 0.9), (0.8, 0.8), (0.6, 0.6))
    if not args.ratios:
        raise ValueError("give --grid table2 or --ratios rc:sub[,rc:sub...]")
    settings = []
    for part in args.ratios.split(","):
        rc, _, sub = part.partition(":")
        if not sub:
            raise ValueError(f"bad ratio setting {part!r}; expected rc:sub")
        settings.append((float(rc), float(sub)))
    return tuple(settings)


def cmd_experiment(args) -> int:
    settings = _parse_settings(args)
    methods = tuple(m.strip() for m in args.methods.split(","))
    cfg_sections = _load_config(args.config)
    synth = windows = None
    if args.dataset:
        windows = tuple(ingest_dataset(args.dataset, args.window,
                                       n_sensors=args.sensors,
                                       coords_path=args.coords))
    else:
        fields = _parse_kv(args.synthetic) if args.synthetic else {}
        synth = SynthSpec(
            n_vertices=int(fields.get("n", 207)),
            n_steps=int(fields.get("t", 512)),
            rank=int(fields.get("r", 3)),
            graph_band=int(fields["kg"]) if "kg" in fields else None,
            time_band=int(fields["kt"]) if "kt" in fields else None)
    exp = ExperimentConfig(
        settings=settings, methods=methods, n_seeds=args.seeds,
        base_seed=args.seed, synth=synth, windows=windows,
        joint_cfg=cfg_sections.get("joint", JointSolverConfig()),
        completion_cfg=cfg_sections.get("completion", CompletionConfig()),
        tv_cfg=cfg_sections.get("tv", TvInpaintConfig()),
        svt_kwargs=cfg_sections.get("svt", {}),
        tnnr_kwargs=cfg_sections.get("tnnr", {}))
    result = run_experiment_grid(exp)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_grid_csv(result, out_dir / "results.csv")
    write_grid_json(result, out_dir / "report.json")
    write_plot_data(result, out_dir)
    from . import plotting
    plotting.save_grid_figure(result, out_dir / "nrmse_vs_ratio.png")
    seen = set()
    for cell in result.cells:
        if (cell.rho_rc, cell.rho_sub) not in seen:
            seen.add((cell.rho_rc, cell.rho_sub))
            print(f"rho_rc={cell.rho_rc:g} rho_sub={cell.rho_sub:g} "
                  f"rho_total={100.0 * cell.rho_total:.2f}%")
    for cell in result.cells:
        print(f"  {cell.method} rc={cell.rho_rc:g}: median_nrmse="
              f"{_fmt(cell.median_nrmse)} mean_nrmse={_fmt(cell.mean_nrmse)}")
    print(f"wrote results to {out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tvgrid",
                     description="Subset random sampling and reconstruction "
                                 "of time-vertex signals.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="generate a synthetic low-rank smooth signal")
    p.add_argument("--n", type=int, required=True, help="number of vertices")
    p.add_argument("--t", type=int, required=True, help="number of timesteps")
    p.add_argument("--rank", type=int, required=True)
    p.add_argument("--graph-band", type=int, default=None)
    p.add_argument("--time-band", type=int, default=None)
    p.add_argument("--graph", default="ring", help="ring, path, or edge-list CSV")
    p.add_argument("--graph-out", default=None, help="also write the graph CSV")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=42)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("sample", help="draw a sample set from a matrix CSV")
    p.add_argument("--matrix", required=True)
    p.add_argument("--plan", default="rc=0.8,sub=0.8",
                   help="rc=..,sub=.. or rows=..,cols=..,samples=..")
    p.add_argument("--sampler", choices=["subset", "uniform", "cross"],
                   default="subset")
    p.add_argument("--count", type=int, default=None,
                   help="draw count for the uniform sampler")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=42)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("bounds", help="evaluate the sampling bounds")
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--mu1", type=float, required=True)
    p.add_argument("--mu2", type=float, default=None)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--kappa", type=float, default=1.0)
    p.add_argument("--n-vertices", type=int, default=None)
    p.add_argument("--eta", type=float, default=0.5)
    p.add_argument("--beta", type=float, default=1.5)
    p.add_argument("--rows", type=int, default=None)
    p.add_argument("--cols", type=int, default=None)
    p.add_argument("--json", default=None, help="also write a JSON report")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("reconstruct", help="recover a matrix from a sample set")
    p.add_argument("--samples", required=True)
    p.add_argument("--method", choices=["joint", "two_stage", "svt", "tnnr"],
                   required=True)
    p.add_argument("--shape", required=True, help="N,T of the full matrix")
    p.add_argument("--graph", default="ring", help="ring, path, or edge-list CSV")
    p.add_argument("--config", default=None, help="solver config JSON")
    p.add_argument("--trunc-r", type=int, default=3,
                   help="truncation rank for the tnnr method")
    p.add_argument("--truth", default=None, help="reference CSV for NRMSE")
    p.add_argument("--out", required=True)
    p.add_argument("--report", default=None, help="JSON run report path")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("verify", help="Monte Carlo verification of the guarantees")
    p.add_argument("--check", choices=["rank", "incoherence"], required=True)
    p.add_argument("--trials", type=int, default=300)
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--t", type=int, default=300)
    p.add_argument("--rank", type=int, default=3)
    p.add_argument("--graph-band", type=int, default=None)
    p.add_argument("--time-band", type=int, default=None)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--eps", type=float, default=0.5)
    p.add_argument("--eta", type=float, default=0.5)
    p.add_argument("--out", default=None, help="JSON report path")
    p.add_argument("--fig", default=None, help="figure output path")
    p.add_argument("--seed", type=int, default=42)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("experiment", help="ratio-grid method comparison")
    p.add_argument("--grid", choices=["table2"], default=None)
    p.add_argument("--ratios", default=None, help="rc:sub[,rc:sub...]")
    p.add_argument("--methods", default="joint,svt,tnnr")
    p.add_argument("--synthetic", default=None,
                   help="r=3[,n=207,t=512,kg=8,kt=10]")
    p.add_argument("--dataset", default=None, help="sensors x timesteps CSV")
    p.add_argument("--window", type=int, default=512)
    p.add_argument("--sensors", type=int, default=None)
    p.add_argument("--coords", default=None, help="sensor_id,lat,lon CSV")
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--config", default=None, help="solver config JSON")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=42)
    p.set_defaults(func=cmd_experiment)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
