"""Markov-chain baselines: single-site stochastic simulation and its
restart variant.

A chain holds one complete assignment with evidence clamped. Each step
re-instantiates a uniformly chosen unobserved node from its normalized
Markov-blanket conditional. With deterministic CPTs the chain is not
ergodic and can lock whole subgraphs in place; that failure mode is the
point of carrying these baselines, so no repair is attempted. These are
the step-level reference implementations; ``engine.SamplingRun`` drives
the equivalent compiled kernels on the same uniform stream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import BeliefNetwork, Evidence
from .samplers import (
    DegenerateBlanketError,
    SamplerConfig,
    basic_step,
    markov_blanket_score,
)
from .scoring import ScoreTable


class ChainInitError(RuntimeError):
    """No nonzero-probability initial state found within the retry limit."""


@dataclass
class ChainState:
    """Current assignment of a running chain; evidence never changes."""

    x: np.ndarray
    iteration: int = 0


def init_chain_state(
    net: BeliefNetwork,
    ev: Evidence,
    rng: np.random.Generator,
    retries: int = 100,
) -> ChainState:
    """Forward-sample an initial state with evidence clamped.

    Deterministic CPTs can make the clamped pass land on an impossible
    configuration (zero evidence likelihood); retry a bounded number of
    times, then give up with a diagnostic.
    """
    for _ in range(retries):
        sample = basic_step(net, ev, rng)
        if sample.weight > 0.0:
            return ChainState(sample.assignment)
    raise ChainInitError(
        f"no consistent initial state in {retries} forward passes; "
        f"evidence may be (near-)impossible under the network's "
        f"deterministic structure"
    )


def pearl_step(
    net: BeliefNetwork,
    ev: Evidence,
    state: ChainState,
    rng: np.random.Generator,
    scoring: str = "plain",
) -> tuple[int, np.ndarray]:
    """One transition; returns the chosen node and its score emission.

    The emission is a unit weight on the re-instantiated state
    (``scoring="plain"``) or the full blanket conditional
    (``scoring="mb"``). An all-zero blanket keeps the current state and
    emits a unit weight on it.
    """
    unobs = [j for j in range(net.node_count) if j not in ev]
    u = rng.random(2)
    pick = int(u[0] * len(unobs))
    if pick >= len(unobs):
        pick = len(unobs) - 1
    j = unobs[pick]
    card = net.variables[j].cardinality
    state.iteration += 1
    try:
        w = markov_blanket_score(net, state.x, j, 1.0)
    except DegenerateBlanketError:
        emission = np.zeros(card)
        emission[state.x[j]] = 1.0
        return j, emission
    # resample from the normalized conditional, then score
    c = 0.0
    s = int(state.x[j])
    for y in range(card):
        if w[y] > 0.0:
            s = y
            c += w[y]
            if u[1] < c:
                break
    state.x[j] = s
    if scoring == "mb":
        return j, w
    emission = np.zeros(card)
    emission[s] = 1.0
    return j, emission


def chavez_run(
    net: BeliefNetwork,
    ev: Evidence,
    config: SamplerConfig,
    rng: np.random.Generator,
    scoring: str = "plain",
) -> ScoreTable:
    """Restart schedule over the single-site chain.

    The iteration budget splits into ``config.restarts`` equal segments
    (remainder to the last). Each segment runs a freshly initialized
    chain without scoring; only its final state is scored, either as
    unit weights on the current states or as blanket vectors.
    """
    table = ScoreTable.empty(net, ev)
    seg = config.iterations // config.restarts
    segments = [seg] * config.restarts
    segments[-1] += config.iterations - seg * config.restarts
    for steps in segments:
        state = init_chain_state(net, ev, rng, config.init_retries)
        for _ in range(steps):
            pearl_step(net, ev, state, rng, scoring="plain")
        for j in range(net.node_count):
            if j in ev:
                continue
            if scoring == "mb":
                try:
                    emission = markov_blanket_score(net, state.x, j, 1.0)
                except DegenerateBlanketError:
                    emission = np.zeros(net.variables[j].cardinality)
                    emission[state.x[j]] = 1.0
            else:
                emission = np.zeros(net.variables[j].cardinality)
                emission[state.x[j]] = 1.0
            table.scores[j, : len(emission)] += emission
            table.counts[j] += 1
        table.acc += (1.0, 1.0, 1.0)
    return table
