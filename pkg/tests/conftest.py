"""Shared fixtures: bundled networks, random-network builders, and an
independent brute-force posterior oracle used to cross-check everything."""

import itertools

import numpy as np
import pytest

from belief_sim import BeliefNetwork, Cpt, Evidence, Variable, exact_posteriors
from belief_sim.networks import load_bundled_evidence, load_bundled_network


@pytest.fixture(scope="session")
def det_net():
    return load_bundled_network("deterministic.net")


@pytest.fixture(scope="session")
def det_ev(det_net):
    return load_bundled_evidence("deterministic-e-true.ev", det_net)


@pytest.fixture(scope="session")
def cooper_net():
    return load_bundled_network("cooper-standin.net")


@pytest.fixture(scope="session")
def cooper_ev(cooper_net):
    return load_bundled_evidence("cooper-evidence.ev", cooper_net)


def chain_network(probs=((0.9, 0.1), ((0.9, 0.1), (0.1, 0.9)))):
    """A -> B with P(A) = probs[0] and P(B | A) rows probs[1]."""
    variables = [
        Variable(0, "A", ("t", "f")),
        Variable(1, "B", ("t", "f")),
    ]
    cpts = [
        Cpt(0, (), np.array([probs[0]])),
        Cpt(1, (0,), np.array(probs[1])),
    ]
    return BeliefNetwork(variables, cpts)


def random_network(rng, n_nodes, max_parents=3, max_card=2, low=0.05):
    """Random DAG over binary (or wider) variables with non-extreme rows.

    Parents are drawn from earlier nodes, so node ids are already a
    topological order. Rows are normalized uniforms bounded away from 0.
    """
    variables = []
    cpts = []
    for j in range(n_nodes):
        card = 2 if max_card == 2 else int(rng.integers(2, max_card + 1))
        variables.append(
            Variable(j, f"X{j}", tuple(f"s{k}" for k in range(card)))
        )
        k = int(rng.integers(0, min(j, max_parents) + 1))
        parents = tuple(sorted(rng.choice(j, size=k, replace=False).tolist())) if k else ()
        n_rows = int(np.prod([len(variables[p].state_names) for p in parents])) if parents else 1
        rows = rng.uniform(low, 1.0, size=(n_rows, card))
        rows /= rows.sum(axis=1, keepdims=True)
        cpts.append(Cpt(j, parents, rows))
    return BeliefNetwork(variables, cpts)


def random_evidence(net, rng, k, min_prior=0.05, tries=50):
    """Random evidence on k nodes whose prior probability is not extreme."""
    n = net.node_count
    k = min(k, n - 1)
    for _ in range(tries):
        nodes = rng.choice(n, size=k, replace=False)
        ev = Evidence(
            net,
            {
                int(j): int(rng.integers(net.variables[j].cardinality))
                for j in nodes
            },
        )
        if not k:
            return ev
        if exact_posteriors(net, ev).evidence_prob >= min_prior:
            return ev
    return Evidence(net)


def brute_posteriors(net, ev):
    """Independent oracle: full joint sweep with local arithmetic.

    Shares nothing with the library's inference code beyond reading the
    CPT arrays; row indexing and summation are done inline here.
    """
    cards = [v.cardinality for v in net.variables]
    marg = {j: np.zeros(cards[j]) for j in range(net.node_count)}
    total = 0.0
    for x in itertools.product(*(range(c) for c in cards)):
        if any(x[j] != s for j, s in ev.assignments.items()):
            continue
        p = 1.0
        for cpt in net.cpts:
            row = 0
            for par in cpt.parents:
                row = row * cards[par] + x[par]
            p *= cpt.table[row, x[cpt.owner]]
        total += p
        for j in range(net.node_count):
            marg[j][x[j]] += p
    if total <= 0.0:
        return None, 0.0
    return {j: m / total for j, m in marg.items() if j not in ev}, total


ACCEPTANCE_PREFIX = "tests/test_acceptance.py"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One PASS/FAIL line per acceptance criterion at the end of the run."""
    lines = []
    for status in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(status, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance.py" in nodeid:
                name = nodeid.split("::")[-1]
                verdict = "PASS" if status == "passed" else "FAIL"
                lines.append((name, verdict))
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for name, verdict in sorted(lines):
            terminalreporter.write_line(f"{verdict}  {name}")
