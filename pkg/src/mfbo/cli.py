"""Command line entry point.

    mfbo run --config FILE          run an experiment described by a config file
    mfbo bench --problem NAME ...   run a benchmark with inline options
    mfbo verify                     run the acceptance checks and print a table

Exit codes: 0 success, 1 runtime failure (a run or check failed), 2 usage
error (bad flags, unknown problem or policy, malformed config).
"""

from __future__ import annotations

import argparse
import sys

from .benchmarks import PROBLEM_NAMES
from .harness import ConfigError, ExperimentConfig, run_experiment
from .policy import POLICY_NAMES


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mfbo", description="budgeted multi-fidelity Bayesian optimization benchmarks"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment from a config file")
    run_p.add_argument("--config", required=True, help="path to the config file")
    run_p.add_argument("--out", default=None, help="override the output directory")

    bench_p = sub.add_parser("bench", help="run a benchmark with inline options")
    bench_p.add_argument("--problem", required=True, help="one of: %s" % ", ".join(PROBLEM_NAMES))
    bench_p.add_argument("--budget-mult", type=float, default=100.0,
                         help="budget as a multiple of the target query cost")
    bench_p.add_argument("--seeds", type=int, default=20, help="number of repetitions")
    bench_p.add_argument("--master-seed", type=int, default=0)
    bench_p.add_argument("--noise", type=float, default=0.05,
                         help="noise sd as a fraction of each fidelity's range")
    bench_p.add_argument("--policies", default=",".join(POLICY_NAMES),
                         help="comma-separated subset of: %s" % ", ".join(POLICY_NAMES))
    bench_p.add_argument("--subroutine", default="gp_ucb", choices=("gp_ucb", "gp_mi"))
    bench_p.add_argument("--candidates", type=int, default=None,
                         help="candidate pool size (default scales with dimension)")
    bench_p.add_argument("--hyperfit-every", type=int, default=10)
    bench_p.add_argument("--threads", type=int, default=None)
    bench_p.add_argument("--out", default=None, help="output directory (default results/<problem>)")

    sub.add_parser("verify", help="run the acceptance checks")
    return parser


def _config_from_args(args) -> ExperimentConfig:
    policies = tuple(p.strip() for p in args.policies.split(",") if p.strip())
    out = args.out if args.out is not None else "results/%s" % args.problem
    return ExperimentConfig(
        problem=args.problem,
        budget_mult=args.budget_mult,
        n_seeds=args.seeds,
        master_seed=args.master_seed,
        noise=args.noise,
        policies=policies,
        out_dir=out,
        subroutine=args.subroutine,
        n_candidates=args.candidates,
        hyperfit_every=args.hyperfit_every,
        threads=args.threads,
    )


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)

    if args.command == "verify":
        from .verify import run_all

        return 0 if run_all(print) else 1

    try:
        if args.command == "run":
            cfg = ExperimentConfig.from_file(args.config)
        else:
            cfg = _config_from_args(args)
    except (ConfigError, OSError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2

    result = run_experiment(cfg, out_dir=args.out, log=lambda s: print(s, file=sys.stderr))
    print("budget %.12g over %d seed(s), outputs in %s" % (
        result.budget, cfg.n_seeds, result.traces_path.rsplit("/", 1)[0]))
    for row in _final_rows(result):
        print("%-22s final mean simple regret %.6g (n=%d)" % row)
    if result.n_failed:
        print("error: %d run(s) failed" % result.n_failed, file=sys.stderr)
        return 1
    return 0


def _final_rows(result):
    from .harness import checkpoint_costs, summarize

    rows = summarize(result.outcomes, result.f_star, checkpoint_costs(result.budget))
    final = [r for r in rows if r[1] == result.budget]
    return [(r[0], r[2], r[4]) for r in final]


if __name__ == "__main__":
    sys.exit(main())
