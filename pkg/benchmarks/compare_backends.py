#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-NumPy fallback.

The backend is chosen at import time by the BELIEF_SIM_NUMBA environment
variable, so this script re-executes itself once per backend and
compares wall times on identical workloads. Outputs are also checked to
be bit-identical across backends, which is the fallback's contract.

Usage: python benchmarks/compare_backends.py [--iterations N]
"""

import argparse
import hashlib
import json
import os
import subprocess
import sys
import time


def workloads(iterations):
    import numpy as np

    import belief_sim as bs
    from belief_sim.networks import load_bundled_evidence, load_bundled_network

    cooper = load_bundled_network("cooper-standin.net")
    cooper_ev = load_bundled_evidence("cooper-evidence.ev", cooper)
    det = load_bundled_network("deterministic.net")
    det_ev = load_bundled_evidence("deterministic-e-true.ev", det)

    def run(algorithm, net, ev, n):
        table = bs.run_sampler(
            net, ev, bs.SamplerConfig(algorithm=algorithm, iterations=n),
            np.random.default_rng(np.random.SeedSequence(12345)),
        )
        return table.scores.tobytes() + table.acc.tobytes()

    def oracle():
        table = bs.exact_posteriors(det, det_ev, engine="enum")
        return np.array(
            [table.evidence_prob] + [table.vector(j)[0] for j in sorted(table.marginals)]
        ).tobytes()

    return [
        ("basic forward", lambda: run("basic", cooper, cooper_ev, iterations)),
        ("blanket scoring", lambda: run("basic-mb", det, det_ev, iterations)),
        ("self-importance", lambda: run("self-importance", cooper, cooper_ev, iterations)),
        ("pearl chain", lambda: run("pearl", det, det_ev, 6 * iterations)),
        ("exact enumeration", oracle),
    ]


def worker(iterations):
    import belief_sim as bs

    results = {"backend": bs.BACKEND, "timings": {}}
    for name, fn in workloads(iterations):
        fn()  # warm-up: JIT compilation and caches stay out of the timing
        start = time.perf_counter()
        payload = fn()
        elapsed = time.perf_counter() - start
        results["timings"][name] = {
            "seconds": elapsed,
            "sha1": hashlib.sha1(payload).hexdigest(),
        }
    json.dump(results, sys.stdout)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--iterations", type=int, default=200_000)
    parser.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    args = parser.parse_args()

    if args.worker:
        worker(args.iterations)
        return

    reports = {}
    for flag, label in (("1", "numba"), ("0", "numpy")):
        env = dict(os.environ, BELIEF_SIM_NUMBA=flag)
        proc = subprocess.run(
            [sys.executable, os.path.abspath(__file__),
             "--worker", "--iterations", str(args.iterations)],
            env=env, capture_output=True, text=True, check=True,
        )
        reports[label] = json.loads(proc.stdout)
        assert reports[label]["backend"] == label, reports[label]

    print(f"workload{'':<14}{'numba (s)':>12}{'numpy (s)':>12}{'speedup':>10}   identical")
    print("-" * 72)
    for name in reports["numba"]["timings"]:
        a = reports["numba"]["timings"][name]
        b = reports["numpy"]["timings"][name]
        same = "yes" if a["sha1"] == b["sha1"] else "NO"
        speedup = b["seconds"] / a["seconds"] if a["seconds"] > 0 else float("inf")
        print(
            f"{name:<22}{a['seconds']:>12.4f}{b['seconds']:>12.4f}"
            f"{speedup:>9.1f}x   {same}"
        )
    if any(
        reports["numba"]["timings"][n]["sha1"] != reports["numpy"]["timings"][n]["sha1"]
        for n in reports["numba"]["timings"]
    ):
        print("\nbackends disagree; the fallback contract is broken", file=sys.stderr)
        sys.exit(1)


if __name__ == "__main__":
    main()
