"""Forward sampling family: logic sampling, likelihood weighting,
Markov-blanket scoring, and the two importance variants.

The functions here are the single-step reference implementations,
written directly against the network objects. Production runs go
through ``engine.SamplingRun``, which drives the compiled kernels; both
paths consume identical uniform streams (one ``rng.random(n)`` row per
iteration, indexed by topological position) and are tested to agree
bit-for-bit.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .network import BeliefNetwork, Evidence, FlatNetwork

logger = logging.getLogger(__name__)

FORWARD_ALGORITHMS = (
    "logic", "basic", "basic-mb", "self-importance", "heuristic-importance",
)
MCMC_ALGORITHMS = ("pearl", "pearl-mb", "chavez", "chavez-mb")
ALGORITHMS = FORWARD_ALGORITHMS + MCMC_ALGORITHMS

# relative floor applied where the heuristic likelihood vanishes on a
# state the prior supports, so built distributions always keep the full
# sampling support of the original CPTs
LAMBDA_FLOOR = 1e-12


class SupportConditionError(ValueError):
    """An importance distribution zeroes a state the prior supports."""


class DegenerateBlanketError(ValueError):
    """Every Markov-blanket substitution hit a zero factor."""


@dataclass
class SampleScore:
    """One weighted sample: score Z >= 0 and the complete assignment."""

    weight: float
    assignment: np.ndarray


@dataclass
class SamplerConfig:
    """Run parameters shared by all algorithm tags."""

    algorithm: str = "basic"
    iterations: int = 1000
    seed: int | np.random.SeedSequence | None = None
    si_update_period: int = 100
    mb_nodes: tuple[int, ...] | None = None  # None: all unobserved nodes
    restarts: int = 10
    init_retries: int = 100

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(
                f"unknown algorithm {self.algorithm!r}; expected one of {ALGORITHMS}"
            )
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.si_update_period < 1:
            raise ValueError("self-importance update period must be >= 1")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")


def _draw(u: float, probs: np.ndarray) -> int:
    # inverse-CDF walk; skips zero-probability states, falls back to the
    # last positive state if rounding leaves the cumulative sum below u
    c = 0.0
    last = 0
    for s, p in enumerate(probs):
        if p > 0.0:
            last = s
            c += p
            if u < c:
                return s
    return last


def logic_sampling_step(
    net: BeliefNetwork, ev: Evidence, rng: np.random.Generator
) -> SampleScore:
    """Sample every variable forward; Z indicates an evidence match."""
    n = net.node_count
    u = rng.random(n)
    x = np.full(n, -1, dtype=np.int64)
    for pos, j in enumerate(net._topo):
        cpt = net.cpts[j]
        x[j] = _draw(u[pos], cpt.table[cpt.row_index(x)])
    z = 1.0
    for j, s in ev.assignments.items():
        if x[j] != s:
            z = 0.0
            break
    return SampleScore(z, x)


def basic_step(
    net: BeliefNetwork, ev: Evidence, rng: np.random.Generator
) -> SampleScore:
    """Forward sample with evidence clamped; Z is the evidence likelihood."""
    n = net.node_count
    u = rng.random(n)
    x = np.full(n, -1, dtype=np.int64)
    ev_like = 1.0
    for pos, j in enumerate(net._topo):
        cpt = net.cpts[j]
        row = cpt.table[cpt.row_index(x)]
        if j in ev:
            x[j] = ev[j]
            ev_like *= row[x[j]]
        else:
            x[j] = _draw(u[pos], row)
    return SampleScore(ev_like, x)


def importance_step(
    net: BeliefNetwork,
    ev: Evidence,
    pprime: "ImportanceDistribution",
    rng: np.random.Generator,
) -> SampleScore:
    """Clamped forward sample drawing unobserved nodes from ``pprime``.

    Z is the full true-probability product over the selection product;
    with ``pprime`` equal to the prior this reproduces ``basic_step``
    bit-for-bit on the same stream.
    """
    n = net.node_count
    u = rng.random(n)
    x = np.full(n, -1, dtype=np.int64)
    ev_like = 1.0
    ratio = 1.0
    for pos, j in enumerate(net._topo):
        cpt = net.cpts[j]
        r = cpt.row_index(x)
        if j in ev:
            x[j] = ev[j]
            ev_like *= cpt.table[r, x[j]]
        else:
            s = _draw(u[pos], pprime.table(j)[r])
            x[j] = s
            ratio *= cpt.table[r, s] / pprime.table(j)[r, s]
    return SampleScore(ev_like * ratio, x)


def markov_blanket_score(
    net: BeliefNetwork, x: np.ndarray, j: int, base_z: float
) -> np.ndarray:
    """Spread ``base_z`` over the states of node ``j``.

    Weights are proportional to the blanket conditional at ``x`` with
    each state substituted in turn; the sampled value of ``j`` itself is
    ignored. Raises ``DegenerateBlanketError`` when every substitution
    hits a zero factor (callers fall back to scoring the sampled state).
    """
    cpt = net.cpts[j]
    card = net.variables[j].cardinality
    row = cpt.row_index(x)
    saved = x[j]
    w = np.zeros(card)
    for y in range(card):
        f = float(cpt.table[row, y])
        if f > 0.0:
            x[j] = y
            for k in net.children[j]:
                kc = net.cpts[k]
                f *= kc.table[kc.row_index(x), x[k]]
        w[y] = f
    x[j] = saved
    total = w.sum()
    if total <= 0.0:
        raise DegenerateBlanketError(
            f"all blanket weights of {net.variables[j].name!r} vanished"
        )
    return (w / total) * base_z


class ImportanceDistribution:
    """Replacement sampling tables P' for the unobserved nodes.

    Tables have the same shape as the nodes' CPTs and may differ from
    them arbitrarily as long as they keep the sampling support: a P'
    entry of zero is only legal where the prior entry is zero too.
    Violations are rejected here, at configuration time.
    """

    def __init__(
        self,
        net: BeliefNetwork,
        ev: Evidence,
        tables: dict[int, np.ndarray],
    ):
        self._net = net
        self._ev = ev
        self._tables: dict[int, np.ndarray] = {}
        for j in tables:
            if j in ev:
                raise SupportConditionError(
                    f"importance table given for evidence node "
                    f"{net.variables[j].name!r}"
                )
        for j in range(net.node_count):
            if j in ev:
                continue
            base = net.cpts[j].table
            t = np.asarray(tables.get(j, base), dtype=np.float64)
            if t.shape != base.shape:
                raise SupportConditionError(
                    f"table for {net.variables[j].name!r}: expected shape "
                    f"{base.shape}, got {t.shape}"
                )
            if np.any(t < 0.0) or np.any(np.abs(t.sum(axis=1) - 1.0) > 1e-9):
                raise SupportConditionError(
                    f"table for {net.variables[j].name!r}: rows must be "
                    f"probability vectors"
                )
            bad = (t == 0.0) & (base > 0.0)
            if bad.any():
                r, s = np.argwhere(bad)[0]
                raise SupportConditionError(
                    f"table for {net.variables[j].name!r} zeroes state {s} "
                    f"in row {r} where the prior is positive"
                )
            self._tables[j] = t

    @classmethod
    def from_network(cls, net: BeliefNetwork, ev: Evidence) -> "ImportanceDistribution":
        """P' = P: the self-importance starting point."""
        return cls(net, ev, {})

    @property
    def network(self) -> BeliefNetwork:
        return self._net

    @property
    def evidence(self) -> Evidence:
        return self._ev

    def table(self, j: int) -> np.ndarray:
        return self._tables[j]

    def nodes(self) -> list[int]:
        return sorted(self._tables)

    def samp_flat(self, flat: FlatNetwork) -> np.ndarray:
        """Flat sampling buffer: the CPT buffer with P' blocks patched in."""
        out = flat.cpt_flat.copy()
        for j, t in self._tables.items():
            out[flat.cpt_off[j]: flat.cpt_off[j + 1]] = t.ravel()
        return out


def self_importance_update(
    pprime: ImportanceDistribution, batch: list[SampleScore]
) -> ImportanceDistribution:
    """Fold a batch of scored samples into the importance distribution.

    Each sample adds its weight into the (node, parent-row, state) cell
    it realized; every touched row becomes the old row plus its
    accumulated scores, renormalized. Unvisited rows and rows that would
    renormalize to zero keep their old values, and zero-support cells
    stay zero because they are never sampled.
    """
    net, ev = pprime.network, pprime.evidence
    acc = {j: np.zeros_like(pprime.table(j)) for j in pprime.nodes()}
    for sample in batch:
        x = sample.assignment
        for j in acc:
            row = net.cpts[j].row_index(x)
            acc[j][row, x[j]] += sample.weight
    new_tables = {}
    for j in acc:
        old = pprime.table(j)
        new = old + acc[j]
        sums = new.sum(axis=1, keepdims=True)
        new_tables[j] = np.where(sums > 0.0, new / np.where(sums > 0.0, sums, 1.0), old)
    return ImportanceDistribution(net, ev, new_tables)


def heuristic_lambdas(net: BeliefNetwork, ev: Evidence) -> dict[int, np.ndarray]:
    """Approximate likelihood vectors from one backward message pass.

    The network is treated as a polytree: in reverse topological order
    each node with observed descendants multiplies together one message
    per child, where a child's message marginalizes its CPT against the
    child's own likelihood and the prior marginals of its other parents.
    Nodes with no observed descendants keep a likelihood of exactly 1.
    """
    n = net.node_count
    order = list(net._topo)

    # prior marginals by one forward pass, ignoring evidence
    prior: dict[int, np.ndarray] = {}
    for j in order:
        cpt = net.cpts[j]
        rw = np.ones(1)
        for p in cpt.parents:
            rw = np.multiply.outer(rw, prior[p])
        prior[j] = rw.reshape(-1) @ cpt.table

    has_obs_below = [False] * n
    for j in reversed(order):
        has_obs_below[j] = j in ev or any(
            has_obs_below[k] for k in net.children[j]
        )

    lambdas = {j: np.ones(net.variables[j].cardinality) for j in range(n)}
    for j in reversed(order):
        if not has_obs_below[j]:
            continue
        lam = lambdas[j]
        if j in ev:
            pick = np.zeros_like(lam)
            pick[ev[j]] = 1.0
            lam = lam * pick
        lambdas[j] = lam
        # send one message to each parent, holding co-parents at priors
        cpt = net.cpts[j]
        if not cpt.parents:
            continue
        shape = tuple(net.variables[p].cardinality for p in cpt.parents)
        tensor = cpt.table.reshape(shape + (net.variables[j].cardinality,))
        tensor = np.tensordot(tensor, lam, axes=([-1], [0]))
        for pos, p in enumerate(cpt.parents):
            msg = tensor
            for qpos in range(len(cpt.parents) - 1, -1, -1):
                if qpos == pos:
                    continue
                msg = np.tensordot(msg, prior[cpt.parents[qpos]], axes=([qpos], [0]))
            total = msg.sum()
            if total > 0.0:
                msg = msg / total
            lambdas[p] = lambdas[p] * msg
    return lambdas


def heuristic_importance_build(
    net: BeliefNetwork, ev: Evidence
) -> ImportanceDistribution:
    """Importance tables proportional to likelihood times prior.

    Rows for nodes whose likelihood vector is identically 1 are the CPT
    rows unchanged. Where the likelihood vanishes on a state the prior
    supports, a relative floor keeps that state barely reachable so the
    sampling support never shrinks below the prior's; a row that would
    vanish entirely falls back to the prior row with a warning.
    """
    lambdas = heuristic_lambdas(net, ev)
    tables: dict[int, np.ndarray] = {}
    for j in range(net.node_count):
        if j in ev:
            continue
        lam = lambdas[j]
        if np.all(lam == 1.0):
            continue  # P' = P exactly
        base = net.cpts[j].table
        peak = lam.max()
        if peak <= 0.0:
            logger.warning(
                "likelihood for %s vanished everywhere; keeping prior rows",
                net.variables[j].name,
            )
            continue
        lam_eff = np.where(lam > 0.0, lam, peak * LAMBDA_FLOOR)
        rows = base * lam_eff
        sums = rows.sum(axis=1, keepdims=True)
        dead = sums.reshape(-1) <= 0.0
        if dead.any():
            logger.warning(
                "%d row(s) of %s vanished under the heuristic likelihood; "
                "falling back to prior rows",
                int(dead.sum()), net.variables[j].name,
            )
            rows[dead] = base[dead]
            sums = rows.sum(axis=1, keepdims=True)
        tables[j] = rows / sums
    return ImportanceDistribution(net, ev, tables)
