"""Command-line entry point: ``spgmrf <subcommand> ...``.

Exit codes: 0 success, 2 usage error, 3 data error, 4 capacity error. Errors
other than usage errors are also reported as one JSON object on stderr.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import bounds as bnd
from . import exact
from .errors import CapacityError, DataError, InstrumentationError, InvalidInputError, UndefinedAUCError
from .evaluation import GroundTruth, generate_ground_truth, sample_dataset, structure_auc
from .experiments import SyntheticSetup, run_paper_synthetic
from .gibbs import RNG_ALGORITHM, init_ensemble, gibbs_one_sweep
from .io import (
    FORMAT_VERSION,
    RunConfig,
    load_binary_csv,
    load_model,
    load_run_config,
    run_config_to_dict,
    save_binary_csv,
    save_model,
    write_table,
    write_trace,
)
from .optimizer import run_spg

log = logging.getLogger("spgmrf")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(json.dumps({"error": "usage", "message": message}), file=sys.stderr)
        sys.exit(2)


def _echo_config(out_dir, command: str, resolved: dict):
    """Write the fully resolved invocation next to the outputs."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = {"format_version": FORMAT_VERSION, "command": command, "rng": RNG_ALGORITHM, **resolved}
    (out_dir / f"{command}.resolved.json").write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n")


def _out_dir(args, *paths):
    if args.out_dir:
        return args.out_dir
    for p in paths:
        if p:
            return str(Path(p).parent)
    return "."


def cmd_generate(args):
    truth = generate_ground_truth(args.p, args.edge_prob, (args.weight_low, args.weight_high), args.seed)
    save_model(args.truth_out, truth.theta_true)
    if args.data_out:
        data = sample_dataset(truth, args.n, args.burn_in, args.seed)
        save_binary_csv(args.data_out, data.samples)
    _echo_config(_out_dir(args, args.truth_out), "generate", {k: v for k, v in vars(args).items() if k != "func"})


def cmd_sample(args):
    theta = load_model(args.model)
    data = load_binary_csv(args.data, args.impute_missing) if args.data else None
    ens = init_ensemble(args.q, theta.p, args.init_mode, args.seed, data)
    for _ in range(args.tau):
        gibbs_one_sweep(ens, theta)
    save_binary_csv(args.out, ens.states)
    _echo_config(_out_dir(args, args.out), "sample", {k: v for k, v in vars(args).items() if k != "func"})


def _learn_config(args) -> RunConfig:
    base = load_run_config(args.config) if args.config else RunConfig()
    overrides = {
        "lam": args.lam, "alpha": args.alpha, "q": args.q, "strategy": args.strategy,
        "tau_max": args.tau_max, "max_iters": args.max_iters, "stop_tol": args.stop_tol,
        "master_seed": args.seed, "init_mode": args.init_mode, "data_path": args.data,
        "trace_out": args.trace, "model_out": args.model_out, "init_theta": args.init,
        "init_scale": args.init_scale, "beta_total": args.beta_total,
    }
    flags = {"impute_missing": args.impute_missing, "instrument": args.exact_obj,
             "conservative_check": args.conservative_check}
    merged = dataclasses.asdict(base)
    merged.update({k: v for k, v in overrides.items() if v is not None})
    merged.update({k: True for k, v in flags.items() if v})
    merged["timing"] = bool(args.timing)
    return RunConfig(**merged)


def cmd_learn(args):
    cfg = _learn_config(args)
    if not cfg.data_path:
        raise UsageError("learn needs --data (or data_path in --config)")
    data = load_binary_csv(cfg.data_path, cfg.impute_missing)
    if cfg.instrument and data.p > exact.ENUM_CAP:
        raise CapacityError(f"--exact-obj needs p <= {exact.ENUM_CAP}, data has p={data.p}")
    res = run_spg(data, cfg.spg())
    if cfg.model_out:
        save_model(cfg.model_out, res.theta)
    if args.model_avg_out:
        save_model(args.model_avg_out, res.theta_avg)
    if cfg.trace_out:
        write_trace(cfg.trace_out, res.history, exact_obj=cfg.instrument)
    _echo_config(_out_dir(args, cfg.model_out, cfg.trace_out), "learn", run_config_to_dict(cfg))


def cmd_eval(args):
    truth = GroundTruth.from_theta(load_model(args.truth))
    theta = load_model(args.model)
    if theta.p != truth.theta_true.p:
        raise DataError("model and truth have different p")
    metrics = {"format_version": FORMAT_VERSION, "auc": structure_auc(theta, truth),
               "true_edges": len(truth.edge_set),
               "nonzero_edges": int(np.count_nonzero(theta.theta[theta.indexer.offdiagonal]))}
    text = json.dumps(metrics, indent=1, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text)
        _echo_config(_out_dir(args, args.out), "eval", {k: v for k, v in vars(args).items() if k != "func"})
    else:
        sys.stdout.write(text)


def cmd_bounds(args):
    theta = load_model(args.model)
    if args.tau_min < 1 or args.tau_max < args.tau_min:
        raise UsageError("need 1 <= --tau-min <= --tau-max")
    inf = bnd.influence_matrix(theta)
    sums = bnd.grand_sums(inf.B, args.tau_max)
    scale = 2.0 * np.sqrt(theta.m)
    rows = [{"tau": t, "grand_sum": sums[t - 1], "asym_bound": scale * sums[t - 1]}
            for t in range(args.tau_min, args.tau_max + 1)]
    if inf.bound_divergent:
        log.warning("spectral radius of B is %.3g >= 1; bound does not shrink with tau", inf.spectral_radius_B)
    write_table(args.out or sys.stdout, ["tau", "grand_sum", "asym_bound"], rows)
    if args.out:
        _echo_config(_out_dir(args, args.out), "bounds", {k: v for k, v in vars(args).items() if k != "func"})


def cmd_oracle(args):
    theta = load_model(args.model)
    data = load_binary_csv(args.data, args.impute_missing) if args.data else None
    op = args.op
    if op in ("gradient", "objective") and data is None:
        raise UsageError(f"oracle {op} needs --data")
    if op == "log_partition":
        result = exact.log_partition(theta)
    elif op == "moments":
        result = exact.exact_moments(theta).tolist()
    elif op == "gradient":
        result = exact.exact_gradient(theta, data).tolist()
    elif op == "objective":
        result = exact.exact_objective(theta, data, args.lam)
    elif op == "kernel":
        result = exact.gibbs_sweep_kernel(theta).tolist()
    elif op == "tv":
        x0 = [int(c) for c in args.x0.split(",")] if args.x0 else 0
        result = exact.exact_tv_after_tau(theta, x0, args.tau)
    elif op == "influence":
        inf = bnd.influence_matrix(theta)
        result = {"U": inf.U.tolist(), "B": inf.B.tolist(), "spectral_proxy": inf.spectral_proxy,
                  "exact_C": exact.dobrushin_influence(theta).tolist()}
    sys.stdout.write(json.dumps({"op": op, "p": theta.p, "result": result}) + "\n")


def cmd_experiment(args):
    if args.name != "paper-synthetic":
        raise UsageError(f"unknown experiment {args.name!r}")
    setup = SyntheticSetup(p=args.p, n=args.n, seeds=tuple(range(args.seed, args.seed + args.trials)),
                           lam=args.lam, q=args.q, max_iters=args.max_iters, tau_max=args.tau_max)
    out = Path(args.out_dir or "experiment_out")
    roster = setup.strategies()
    if args.strategies:
        wanted = args.strategies.split(",")
        missing = sorted(set(wanted) - set(roster))
        if missing:
            raise UsageError(f"unknown strategies {missing}; choose from {sorted(roster)}")
        roster = {k: roster[k] for k in wanted}
    runs = run_paper_synthetic(setup, out, strategies=roster, timing=not args.no_timing)
    summary = {"format_version": FORMAT_VERSION, "setup": dataclasses.asdict(setup.resolved()),
               "runs": [r.summary for r in runs]}
    (out / "summary.json").write_text(json.dumps(summary, indent=1, sort_keys=True) + "\n")
    _echo_config(out, "experiment", dataclasses.asdict(setup.resolved()))


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="spgmrf", description="Sparse binary MRF learning with stochastic proximal gradient.")
    ap.add_argument("--threads", type=int, default=None, help="cap BLAS worker threads")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--out-dir", default=None, help="where the resolved config is echoed")
        return p

    g = common(sub.add_parser("generate", help="random ground-truth model and Gibbs-sampled data"))
    g.add_argument("--p", type=int, required=True)
    g.add_argument("--edge-prob", type=float, default=0.3)
    g.add_argument("--weight-low", type=float, default=1.0)
    g.add_argument("--weight-high", type=float, default=2.0)
    g.add_argument("--n", type=int, default=1000)
    g.add_argument("--burn-in", type=int, default=1000)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--truth-out", required=True)
    g.add_argument("--data-out", default=None)
    g.set_defaults(func=cmd_generate)

    s = common(sub.add_parser("sample", help="run Gibbs chains and dump final states"))
    s.add_argument("--model", required=True)
    s.add_argument("--q", type=int, default=100)
    s.add_argument("--tau", type=int, default=10)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--init-mode", choices=["uniform", "data"], default="uniform")
    s.add_argument("--data", default=None)
    s.add_argument("--impute-missing", action="store_true")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sample)

    ln = common(sub.add_parser("learn", help="fit a sparse model with SPG"))
    ln.add_argument("--config", default=None, help="RunConfig JSON; flags override its fields")
    ln.add_argument("--data", default=None)
    ln.add_argument("--impute-missing", action="store_true", help="treat non-0/1 cells as 0")
    ln.add_argument("--lambda", dest="lam", type=float, default=None)
    ln.add_argument("--alpha", type=float, default=None)
    ln.add_argument("--q", type=int, default=None)
    ln.add_argument("--strategy", default=None, help="fixed:N | increasing | tay")
    ln.add_argument("--tau-max", type=int, default=None)
    ln.add_argument("--max-iters", type=int, default=None)
    ln.add_argument("--stop-tol", type=float, default=None)
    ln.add_argument("--seed", type=int, default=None)
    ln.add_argument("--init-mode", choices=["uniform", "data", "persistent"], default=None)
    ln.add_argument("--init", choices=["zero", "random"], default=None, help="initial parameters")
    ln.add_argument("--init-scale", type=float, default=None)
    ln.add_argument("--beta-total", type=float, default=None)
    ln.add_argument("--conservative-check", action="store_true")
    ln.add_argument("--exact-obj", action="store_true", help="record the exact objective (small p)")
    ln.add_argument("--timing", action="store_true", help="fill time_ms with wall-clock times")
    ln.add_argument("--trace", default=None)
    ln.add_argument("--model-out", default=None)
    ln.add_argument("--model-avg-out", default=None, help="also save the averaged iterate")
    ln.set_defaults(func=cmd_learn)

    e = common(sub.add_parser("eval", help="structure-recovery AUC of a model against a truth"))
    e.add_argument("--truth", required=True)
    e.add_argument("--model", required=True)
    e.add_argument("--out", default=None)
    e.set_defaults(func=cmd_eval)

    b = common(sub.add_parser("bounds", help="gradient-error bound as a function of tau"))
    b.add_argument("--model", required=True)
    b.add_argument("--tau-min", type=int, default=1)
    b.add_argument("--tau-max", type=int, default=50)
    b.add_argument("--out", default=None)
    b.set_defaults(func=cmd_bounds)

    o = common(sub.add_parser("oracle", help="brute-force quantities for a small model"))
    o.add_argument("op", choices=["log_partition", "moments", "gradient", "objective", "kernel", "tv", "influence"])
    o.add_argument("--model", required=True)
    o.add_argument("--data", default=None)
    o.add_argument("--impute-missing", action="store_true")
    o.add_argument("--lambda", dest="lam", type=float, default=0.0)
    o.add_argument("--x0", default=None, help="comma-separated start state for tv")
    o.add_argument("--tau", type=int, default=1)
    o.set_defaults(func=cmd_oracle)

    x = common(sub.add_parser("experiment", help="orchestrated benchmarks"))
    x.add_argument("name", choices=["paper-synthetic"])
    x.add_argument("--p", type=int, default=10)
    x.add_argument("--n", type=int, default=None)
    x.add_argument("--lambda", dest="lam", type=float, default=None)
    x.add_argument("--q", type=int, default=None)
    x.add_argument("--trials", type=int, default=5)
    x.add_argument("--seed", type=int, default=0, help="first seed; trials use consecutive seeds")
    x.add_argument("--max-iters", type=int, default=300)
    x.add_argument("--tau-max", type=int, default=500)
    x.add_argument("--strategies", default=None, help="comma-separated subset, e.g. spg1,tay")
    x.add_argument("--no-timing", action="store_true", help="leave time columns blank for byte-stable output")
    x.set_defaults(func=cmd_experiment)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.threads:
            from threadpoolctl import threadpool_limits

            with threadpool_limits(limits=args.threads):
                args.func(args)
        else:
            args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(json.dumps({"error": "usage", "message": str(exc)}), file=sys.stderr)
        return 2
    except CapacityError as exc:
        print(json.dumps({"error": "capacity", "message": str(exc)}), file=sys.stderr)
        return 4
    except (DataError, InvalidInputError, UndefinedAUCError, InstrumentationError, OSError) as exc:
        print(json.dumps({"error": "data", "message": str(exc)}), file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
