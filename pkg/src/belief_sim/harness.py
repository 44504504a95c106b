"""Multi-trial error-comparison protocol and report generation.

An experiment runs a set of algorithms on one network and evidence for a
fixed number of trials, equalizing total variable instantiations across
algorithms: forward samplers get the base iteration count, chain
samplers get base times the number of unobserved nodes (they assign one
variable per iteration instead of all of them). Per-trial errors are
computed once, at trial end, against exact marginals; aggregates are
pure functions of the per-trial raw values.

Per-trial RNG streams derive from the master seed through a documented
counter-based split: ``SeedSequence(master_seed, spawn_key=(algorithm_id,
iterations, trial))`` where ``algorithm_id`` is the tag's position in
``ALGORITHMS``. Trials are therefore independent and individually
re-runnable, and results do not depend on scheduling order.
"""

from __future__ import annotations

import csv
import io
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .engine import SamplingRun
from .exact import MarginalTable, exact_posteriors
from .mcmc import ChainInitError
from .network import BeliefNetwork, Evidence, relevant_nodes, subnetwork
from .samplers import ALGORITHMS, FORWARD_ALGORITHMS, SamplerConfig
from .scoring import PosteriorEstimate, fertig_mann_error, normalize

RNG_NAME = "pcg64"  # numpy default_rng bit generator


def default_thread_count() -> int:
    return max(1, int(os.environ.get("BELIEF_SIM_THREADS", "1")))


def instantiation_budget(
    algorithm: str, net: BeliefNetwork, ev: Evidence, base_iterations: int
) -> int:
    """Iterations an algorithm gets so instantiations stay constant.

    Forward samplers assign every unobserved variable once per
    iteration; single-site chain samplers assign exactly one, so they
    receive ``base_iterations`` times the unobserved node count.
    """
    if algorithm in FORWARD_ALGORITHMS:
        return base_iterations
    return base_iterations * (net.node_count - len(ev))


def trial_seed(master_seed: int, algorithm: str, iterations: int, trial: int):
    """Counter-based child seed; stable per (algorithm, iterations, trial)."""
    return np.random.SeedSequence(
        master_seed, spawn_key=(ALGORITHMS.index(algorithm), iterations, trial)
    )


@dataclass
class Experiment:
    """One benchmark configuration: a trial matrix over algorithms."""

    network: BeliefNetwork
    evidence: Evidence
    algorithms: tuple[str, ...] = ALGORITHMS
    iterations: tuple[int, ...] = (250, 1000)
    trials: int = 25
    master_seed: int = 0
    network_name: str = ""
    oracle: MarginalTable | None = None
    oracle_engine: str = "enum"
    restarts: int = 10
    si_update_period: int = 100
    mb_nodes: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.iterations or any(i < 1 for i in self.iterations):
            raise ValueError("iterations must be positive")
        for a in self.algorithms:
            if a not in ALGORITHMS:
                raise ValueError(f"unknown algorithm {a!r}")

    def sampler_config(self, algorithm: str, budget: int) -> SamplerConfig:
        return SamplerConfig(
            algorithm=algorithm,
            iterations=budget,
            restarts=self.restarts,
            si_update_period=self.si_update_period,
            mb_nodes=self.mb_nodes,
        )


@dataclass
class TrialOutcome:
    trial: int
    error: float = float("nan")
    wall_time_s: float = 0.0
    instantiations: int = 0
    aborted: bool = False
    abort_reason: str = ""


@dataclass
class AlgorithmResult:
    """All trials of one algorithm at one base iteration count."""

    algorithm: str
    base_iterations: int
    budget: int
    outcomes: list[TrialOutcome] = field(default_factory=list)

    def _errors(self) -> np.ndarray:
        return np.array([o.error for o in self.outcomes if not o.aborted])

    def _times(self) -> np.ndarray:
        return np.array([o.wall_time_s for o in self.outcomes if not o.aborted])

    @property
    def aborted_trials(self) -> int:
        return sum(o.aborted for o in self.outcomes)

    @property
    def mean_error(self) -> float:
        e = self._errors()
        return float(np.mean(e)) if len(e) else float("nan")

    @property
    def std_dev_error(self) -> float:
        e = self._errors()
        return float(np.std(e, ddof=1)) if len(e) > 1 else float("nan")

    @property
    def mean_time_s(self) -> float:
        t = self._times()
        return float(np.mean(t)) if len(t) else float("nan")

    @property
    def error_sq_times_time(self) -> float:
        return self.mean_error**2 * self.mean_time_s


@dataclass
class TrialReport:
    """Everything a Table-1-style report needs, raw values included."""

    network_name: str
    evidence: dict[str, str]
    trials: int
    master_seed: int
    rng: str
    results: list[AlgorithmResult] = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(
            ["algorithm", "iterations", "trial", "mean_error",
             "std_dev_error", "wall_time_s", "error_sq_times_time"]
        )
        for r in self.results:
            writer.writerow(
                [r.algorithm, r.base_iterations, len(r.outcomes),
                 f"{r.mean_error:.6f}", f"{r.std_dev_error:.6f}",
                 f"{r.mean_time_s:.6f}", f"{r.error_sq_times_time:.6f}"]
            )
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {
            "network": self.network_name,
            "evidence": self.evidence,
            "trials": self.trials,
            "master_seed": self.master_seed,
            "rng": self.rng,
            "results": [
                {
                    "algorithm": r.algorithm,
                    "iterations": r.base_iterations,
                    "budget": r.budget,
                    "mean_error": r.mean_error,
                    "std_dev_error": r.std_dev_error,
                    "mean_time_s": r.mean_time_s,
                    "error_sq_times_time": r.error_sq_times_time,
                    "aborted_trials": r.aborted_trials,
                    "per_trial": [
                        {
                            "trial": o.trial,
                            "error": o.error,
                            "wall_time_s": o.wall_time_s,
                            "instantiations": o.instantiations,
                            "aborted": o.aborted,
                            "abort_reason": o.abort_reason,
                        }
                        for o in r.outcomes
                    ],
                }
                for r in self.results
            ],
        }
        return json.dumps(doc, indent=2) + "\n"

    def to_table(self) -> str:
        head = (
            f"{'algorithm':<22}{'iters':>7}{'trials':>8}{'mean err':>10}"
            f"{'std err':>10}{'time (s)':>10}{'err^2*t':>10}{'aborts':>8}"
        )
        lines = [head, "-" * len(head)]
        for r in self.results:
            lines.append(
                f"{r.algorithm:<22}{r.base_iterations:>7}{len(r.outcomes):>8}"
                f"{r.mean_error:>10.4f}{r.std_dev_error:>10.4f}"
                f"{r.mean_time_s:>10.4f}{r.error_sq_times_time:>10.4f}"
                f"{r.aborted_trials:>8}"
            )
        return "\n".join(lines) + "\n"


def _run_trial(
    exp: Experiment, algorithm: str, budget: int, trial: int, base: int,
    exact: MarginalTable,
) -> TrialOutcome:
    rng = np.random.default_rng(trial_seed(exp.master_seed, algorithm, base, trial))
    config = exp.sampler_config(algorithm, budget)
    try:
        start = time.perf_counter()
        run = SamplingRun(exp.network, exp.evidence, config, rng)
        table = run.run()
        elapsed = time.perf_counter() - start
    except ChainInitError as exc:
        return TrialOutcome(trial, aborted=True, abort_reason=str(exc))
    # the budget rule exists to equalize this count across algorithms
    expected = base * (exp.network.node_count - len(exp.evidence))
    assert run.instantiations == expected, (algorithm, run.instantiations, expected)
    error = fertig_mann_error(normalize(table), exact, exp.evidence)
    return TrialOutcome(trial, error, elapsed, run.instantiations)


def run_experiment(exp: Experiment, threads: int | None = None) -> TrialReport:
    """Execute the full trial matrix and aggregate per-algorithm stats.

    Wall time covers the sampling loop only; the oracle, network
    loading, and kernel warm-up are excluded. Aborted trials (chain
    initialization failure on deterministic networks) are reported and
    excluded from aggregates.
    """
    exact = exp.oracle
    if exact is None:
        exact = exact_posteriors(exp.network, exp.evidence, engine=exp.oracle_engine)
    if exact.inconsistent:
        raise ValueError(
            "evidence has probability 0 under this network; there are no "
            "exact marginals to compare against"
        )
    threads = threads if threads is not None else default_thread_count()

    # warm the kernels so JIT compilation never lands inside a timed trial
    for algorithm in exp.algorithms:
        warm = exp.sampler_config(algorithm, max(2, exp.restarts))
        try:
            SamplingRun(
                exp.network, exp.evidence, warm, np.random.default_rng(0)
            ).run()
        except ChainInitError:
            pass

    report = TrialReport(
        network_name=exp.network_name,
        evidence={
            exp.network.variables[j].name: exp.network.variables[j].state_names[s]
            for j, s in sorted(exp.evidence.assignments.items())
        },
        trials=exp.trials,
        master_seed=exp.master_seed,
        rng=RNG_NAME,
    )
    for base in exp.iterations:
        for algorithm in exp.algorithms:
            budget = instantiation_budget(algorithm, exp.network, exp.evidence, base)
            result = AlgorithmResult(algorithm, base, budget)
            if threads > 1:
                with ThreadPoolExecutor(max_workers=threads) as pool:
                    result.outcomes = list(
                        pool.map(
                            lambda t: _run_trial(exp, algorithm, budget, t, base, exact),
                            range(exp.trials),
                        )
                    )
            else:
                result.outcomes = [
                    _run_trial(exp, algorithm, budget, t, base, exact)
                    for t in range(exp.trials)
                ]
            report.results.append(result)
    return report


def anytime_snapshot(run: SamplingRun) -> PosteriorEstimate:
    """Current estimate with standard errors; the run continues unaffected."""
    return run.snapshot()


def prune_for_targets(exp: Experiment, targets: set[int]) -> Experiment:
    """Restrict an experiment to the nodes relevant to ``targets``.

    The simulated network shrinks to the ancestral closure of targets
    plus evidence, and the evidence to its relevant subset. Estimates
    for target nodes are unchanged in distribution; variable names carry
    over, so results are read by name as before.
    """
    if not targets:
        raise ValueError("targets must be non-empty")
    for j in targets:
        if j in exp.evidence:
            raise ValueError(
                f"target {exp.network.variables[j].name!r} is an evidence node"
            )
    closure = relevant_nodes(exp.network, targets, exp.evidence.nodes)
    subnet, id_map = subnetwork(exp.network, closure)
    sub_ev = Evidence(
        subnet,
        {
            id_map[j]: s
            for j, s in exp.evidence.assignments.items()
            if j in closure
        },
    )
    return replace(
        exp,
        network=subnet,
        evidence=sub_ev,
        oracle=None,
        mb_nodes=None if exp.mb_nodes is None else tuple(
            id_map[j] for j in exp.mb_nodes if j in closure
        ),
    )
