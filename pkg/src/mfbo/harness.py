"""Benchmark harness: config files, seeded parallel runs, CSV outputs.

A run file is flat INI-ish text (key = value, [section] headers, # comments):

    problem = currin2
    budget_mult = 100        # budget = budget_mult * target cost
    seeds = 20
    master_seed = 7
    policies = mf_mi_greedy, explore_then_exploit, sf_only
    out = results/currin2

    [policy]
    subroutine = gp_ucb
    delta = 0.1
    hyperfit_every = 10

    [explore]
    alpha_exponent = 0.3333333333333333

Per-run seeds derive from the master seed and the seed index only, shared
across policies: at a given index every policy sees the same candidate pool
and the same observation-noise stream (common random numbers), so
policy-to-policy differences come from decisions rather than noise luck.
Runs execute on a thread pool
(MFBO_THREADS caps the width) and failures are isolated per run. Output is
three CSVs: traces.csv (one row per query), curves.csv (per-episode simple
and cumulative regret) and summary.csv (mean simple regret at quarter-budget
checkpoints). Floats are written with %.12g so repeated runs are
byte-identical.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .benchmarks import PROBLEM_NAMES, make_problem
from .policy import POLICIES, POLICY_NAMES, PolicyConfig, Trace, trace_records
from .regret import cumulative_regret_curve, simple_regret_curve
from .util import mix64


class ConfigError(ValueError):
    pass


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse key = value lines into {section: {key: value}}, top level ''."""
    sections: dict[str, dict[str, str]] = {"": {}}
    current = ""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError("%s:%d: unterminated section header" % (source, lineno))
            current = line[1:-1].strip()
            if not current:
                raise ConfigError("%s:%d: empty section name" % (source, lineno))
            sections.setdefault(current, {})
            continue
        if "=" not in line:
            raise ConfigError("%s:%d: expected key = value, got %r" % (source, lineno, raw.strip()))
        key, value = line.split("=", 1)
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigError("%s:%d: empty key" % (source, lineno))
        if key in sections[current]:
            raise ConfigError("%s:%d: duplicate key %r" % (source, lineno, key))
        sections[current][key] = value
    return sections


def _coerce(section: str, key: str, value: str, kind):
    try:
        return kind(value)
    except ValueError:
        where = "[%s] %s" % (section, key) if section else key
        raise ConfigError("bad value for %s: %r" % (where, value)) from None


@dataclass(frozen=True)
class ExperimentConfig:
    problem: str
    budget_mult: float = 100.0
    n_seeds: int = 20
    master_seed: int = 0
    noise: float = 0.05
    problem_seed: int = 0
    policies: tuple[str, ...] = POLICY_NAMES
    out_dir: str = "results"
    subroutine: str = "gp_ucb"
    delta: float = 0.1
    alpha_mi: Optional[float] = None
    n_candidates: Optional[int] = None
    hyperfit_every: int = 10
    alpha_exponent: float = 1.0 / 3.0
    threads: Optional[int] = None

    def __post_init__(self):
        if self.problem not in PROBLEM_NAMES:
            raise ConfigError(
                "unknown problem %r (known: %s)" % (self.problem, ", ".join(PROBLEM_NAMES))
            )
        if self.budget_mult < 1:
            raise ConfigError("budget_mult must be >= 1")
        if self.n_seeds < 1:
            raise ConfigError("seeds must be >= 1")
        for name in self.policies:
            if name not in POLICY_NAMES:
                raise ConfigError(
                    "unknown policy %r (known: %s)" % (name, ", ".join(POLICY_NAMES))
                )
        if len(set(self.policies)) != len(self.policies):
            raise ConfigError("duplicate policy names")

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            text = fh.read()
        sections = parse_config_text(text, source=str(path))
        return cls.from_sections(sections)

    @classmethod
    def from_sections(cls, sections: dict) -> "ExperimentConfig":
        known = {"", "policy", "explore"}
        for name in sections:
            if name not in known:
                raise ConfigError("unknown section [%s]" % name)
        top = dict(sections.get("", {}))
        pol = dict(sections.get("policy", {}))
        exp = dict(sections.get("explore", {}))

        kwargs = {}
        if "problem" not in top:
            raise ConfigError("missing required key: problem")
        kwargs["problem"] = top.pop("problem")
        if "budget_mult" in top:
            kwargs["budget_mult"] = _coerce("", "budget_mult", top.pop("budget_mult"), float)
        if "seeds" in top:
            kwargs["n_seeds"] = _coerce("", "seeds", top.pop("seeds"), int)
        if "master_seed" in top:
            kwargs["master_seed"] = _coerce("", "master_seed", top.pop("master_seed"), int)
        if "noise" in top:
            kwargs["noise"] = _coerce("", "noise", top.pop("noise"), float)
        if "problem_seed" in top:
            kwargs["problem_seed"] = _coerce("", "problem_seed", top.pop("problem_seed"), int)
        if "policies" in top:
            names = tuple(p.strip() for p in top.pop("policies").split(",") if p.strip())
            kwargs["policies"] = names
        if "out" in top:
            kwargs["out_dir"] = top.pop("out")
        if "threads" in top:
            kwargs["threads"] = _coerce("", "threads", top.pop("threads"), int)
        if top:
            raise ConfigError("unknown key %r" % sorted(top)[0])

        if "subroutine" in pol:
            kwargs["subroutine"] = pol.pop("subroutine")
        if "delta" in pol:
            kwargs["delta"] = _coerce("policy", "delta", pol.pop("delta"), float)
        if "alpha_mi" in pol:
            kwargs["alpha_mi"] = _coerce("policy", "alpha_mi", pol.pop("alpha_mi"), float)
        if "candidates" in pol:
            kwargs["n_candidates"] = _coerce("policy", "candidates", pol.pop("candidates"), int)
        if "hyperfit_every" in pol:
            kwargs["hyperfit_every"] = _coerce(
                "policy", "hyperfit_every", pol.pop("hyperfit_every"), int
            )
        if pol:
            raise ConfigError("unknown key %r in [policy]" % sorted(pol)[0])

        if "alpha_exponent" in exp:
            kwargs["alpha_exponent"] = _coerce(
                "explore", "alpha_exponent", exp.pop("alpha_exponent"), float
            )
        if exp:
            raise ConfigError("unknown key %r in [explore]" % sorted(exp)[0])
        return cls(**kwargs)

    def policy_config(self, candidate_seed: int) -> PolicyConfig:
        return PolicyConfig(
            subroutine=self.subroutine,
            delta=self.delta,
            alpha_mi=self.alpha_mi,
            alpha_exponent=self.alpha_exponent,
            n_candidates=self.n_candidates,
            hyperfit_every=self.hyperfit_every,
            candidate_seed=candidate_seed,
        )


def run_seed(master_seed: int, index: int) -> int:
    return mix64(master_seed, "run", index)


def candidate_seed(master_seed: int, index: int) -> int:
    return mix64(master_seed, "candidates", index)


def checkpoint_costs(budget: float) -> np.ndarray:
    return budget * np.array([0.25, 0.5, 0.75, 1.0])


@dataclass
class RunOutcome:
    policy: str
    index: int
    seed: int
    trace: Optional[Trace]
    error: Optional[str]
    duration: float


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    budget: float
    f_star: float
    outcomes: list[RunOutcome] = field(default_factory=list)
    traces_path: str = ""
    curves_path: str = ""
    summary_path: str = ""

    @property
    def n_failed(self) -> int:
        return sum(1 for o in self.outcomes if o.trace is None or o.trace.failed)


def _worker_count(cfg: ExperimentConfig) -> int:
    if cfg.threads is not None:
        return max(1, cfg.threads)
    env = os.environ.get("MFBO_THREADS")
    if env:
        return max(1, int(env))
    return max(1, min(8, os.cpu_count() or 1))


def run_experiment(cfg: ExperimentConfig, out_dir=None, log=None) -> ExperimentResult:
    problem = make_problem(cfg.problem, noise=cfg.noise, seed=cfg.problem_seed)
    budget = cfg.budget_mult * problem.model.target_cost
    result = ExperimentResult(config=cfg, budget=budget, f_star=problem.f_star)

    jobs = [(pol, idx) for pol in cfg.policies for idx in range(cfg.n_seeds)]

    def one(job) -> RunOutcome:
        pol, idx = job
        seed = run_seed(cfg.master_seed, idx)
        pc = cfg.policy_config(candidate_seed(cfg.master_seed, idx))
        start = time.perf_counter()
        try:
            trace = POLICIES[pol](problem, budget, pc, seed)
            err = None
        except Exception as exc:  # isolate per-run failures
            trace = None
            err = "%s: %s" % (type(exc).__name__, exc)
        return RunOutcome(pol, idx, seed, trace, err, time.perf_counter() - start)

    with ThreadPoolExecutor(max_workers=_worker_count(cfg)) as pool:
        outcomes = list(pool.map(one, jobs))
    order = {pol: i for i, pol in enumerate(cfg.policies)}
    outcomes.sort(key=lambda o: (order[o.policy], o.index))
    result.outcomes = outcomes

    if log is not None:
        for o in outcomes:
            status = "failed: %s" % o.error if o.error else "%d episodes" % o.trace.n_episodes
            log("%-22s seed %3d  %6.2fs  %s" % (o.policy, o.index, o.duration, status))

    target = out_dir if out_dir is not None else cfg.out_dir
    os.makedirs(target, exist_ok=True)
    result.traces_path = os.path.join(target, "traces.csv")
    result.curves_path = os.path.join(target, "curves.csv")
    result.summary_path = os.path.join(target, "summary.csv")
    write_traces_csv(result.traces_path, outcomes, problem.dim)
    write_run_curves_csv(result.curves_path, outcomes, problem.f_star)
    write_summary_csv(result.summary_path, outcomes, problem.f_star, checkpoint_costs(budget))
    return result


def write_traces_csv(path, outcomes, dim: int) -> None:
    cols = ["policy", "seed", "episode", "step", "fidelity", "cost_so_far", "y"]
    cols += ["x%d" % i for i in range(dim)]
    with open(path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for o in outcomes:
            if o.trace is None:
                continue
            for row in trace_records(o.trace):
                ep, step, fid = row[:3]
                rest = ",".join("%.12g" % v for v in row[3:])
                fh.write("%s,%d,%d,%d,%d,%s\n" % (o.policy, o.index, ep, step, fid, rest))


def write_run_curves_csv(path, outcomes, f_star: float) -> None:
    with open(path, "w") as fh:
        fh.write("seed,policy,cost,value,kind\n")
        for o in outcomes:
            if o.trace is None:
                continue
            for curve in (
                simple_regret_curve(o.trace, f_star),
                cumulative_regret_curve(o.trace, f_star),
            ):
                for c, v in zip(curve.costs, curve.values):
                    fh.write(
                        "%d,%s,%.12g,%.12g,%s\n" % (o.index, o.policy, c, v, curve.kind)
                    )


def summarize(outcomes, f_star: float, checkpoints) -> list[tuple]:
    """Rows of (policy, checkpoint_cost, mean_simple_regret, stderr, n_seeds).

    Runs that have not completed an episode by a checkpoint contribute
    nothing there (NaN dropped); n_seeds counts the values actually used.
    """
    by_policy: dict[str, list[Trace]] = {}
    for o in outcomes:
        if o.trace is not None:
            by_policy.setdefault(o.policy, []).append(o.trace)
    rows = []
    for policy, traces in by_policy.items():
        curves = [simple_regret_curve(tr, f_star) for tr in traces]
        for c in checkpoints:
            vals = np.array([cv.value_at(c) for cv in curves])
            vals = vals[~np.isnan(vals)]
            n = len(vals)
            mean = float(np.mean(vals)) if n else float("nan")
            stderr = float(np.std(vals, ddof=1) / np.sqrt(n)) if n > 1 else float("nan")
            rows.append((policy, float(c), mean, stderr, n))
    return rows


def write_summary_csv(path, outcomes, f_star: float, checkpoints) -> None:
    with open(path, "w") as fh:
        fh.write("policy,checkpoint_cost,mean_simple_regret,stderr,n_seeds\n")
        for policy, c, mean, stderr, n in summarize(outcomes, f_star, checkpoints):
            fh.write("%s,%.12g,%.12g,%.12g,%d\n" % (policy, c, mean, stderr, n))
