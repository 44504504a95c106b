"""Chunked execution of every algorithm tag over the compiled kernels.

A ``SamplingRun`` owns one RNG stream, one score table, and the flat
network buffers. Work proceeds in bounded chunks so that a run can be
snapshotted between chunks at any time (the run continues unaffected)
and so self-importance updates land exactly on their period boundaries.

Instantiation accounting: the counter tracks assignments of values to
*unobserved* variables inside the sampling loop (one per unobserved node
per forward iteration, one per chain step), excluding chain
initialization passes. This is the quantity the harness equalizes
across algorithms.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .mcmc import ChainInitError
from .network import BeliefNetwork, Evidence, flatten
from .samplers import (
    FORWARD_ALGORITHMS,
    ImportanceDistribution,
    SamplerConfig,
    heuristic_importance_build,
)
from .scoring import PosteriorEstimate, ScoreTable, merge, normalize

CHUNK = 4096


class SamplingRun:
    """One algorithm instance running on an immutable network."""

    def __init__(
        self,
        net: BeliefNetwork,
        ev: Evidence,
        config: SamplerConfig,
        rng: np.random.Generator | None = None,
        importance: ImportanceDistribution | None = None,
    ):
        self.net = net
        self.ev = ev
        self.config = config
        self.rng = rng if rng is not None else np.random.default_rng(config.seed)
        self.flat = flatten(net)
        self.table = ScoreTable.empty(net, ev)
        self.instantiations = 0
        self.iterations_done = 0

        n = net.node_count
        self._ev_state = ev.state_vector(n)
        self._unobs = np.array(
            [j for j in range(n) if j not in ev], dtype=np.int64
        )
        if len(self._unobs) == 0:
            raise ValueError("every node is observed; nothing to estimate")
        self._x = np.zeros(n, dtype=np.int64)
        self._rows = np.zeros(n, dtype=np.int64)
        self._w = np.zeros(int(self.flat.cards.max()), dtype=np.float64)

        algo = config.algorithm
        self._forward = algo in FORWARD_ALGORITHMS
        if importance is not None and algo not in ("basic", "basic-mb"):
            raise ValueError(
                "explicit importance tables apply to the clamped forward "
                "tags (basic, basic-mb) only"
            )
        if self._forward:
            self._clamp = algo != "logic"
            self._indicator = algo == "logic"
            self._mb_mask = np.zeros(n, dtype=np.bool_)
            if algo == "basic-mb":
                targets = config.mb_nodes
                if targets is None:
                    targets = tuple(self._unobs)
                for j in targets:
                    if j in ev:
                        raise ValueError(
                            f"cannot blanket-score evidence node "
                            f"{net.variables[j].name!r}"
                        )
                    self._mb_mask[j] = True
            self._si = algo == "self-importance"
            if importance is not None:
                # explicit replacement sampling distribution; the score
                # kernel already divides by the selection probability, so
                # any valid tables plug straight into the clamped tags
                self._samp = importance.samp_flat(self.flat)
            elif algo == "self-importance":
                self._samp = ImportanceDistribution.from_network(net, ev).samp_flat(self.flat)
            elif algo == "heuristic-importance":
                self._samp = heuristic_importance_build(net, ev).samp_flat(self.flat)
            else:
                self._samp = self.flat.cpt_flat
            self._si_cells = (
                np.zeros_like(self.flat.cpt_flat) if self._si else np.zeros(1)
            )
            self._since_update = 0
        else:
            self._score_mode = 2 if algo.endswith("-mb") else 1
            if algo.startswith("chavez"):
                seg = config.iterations // config.restarts
                self._segments = [seg] * config.restarts
                self._segments[-1] += config.iterations - seg * config.restarts
                self._seg_index = 0
                self._seg_left = 0
                self._seg_active = False
            else:
                self._init_chain()

    # -- chain plumbing --------------------------------------------------

    def _init_chain(self) -> None:
        f = self.flat
        for _ in range(self.config.init_retries):
            u = self.rng.random(self.net.node_count)
            z = kernels.forward_assignment(
                f.topo, f.cards, f.parents_off, f.parents_flat,
                f.cpt_off, f.cpt_flat, self._ev_state, u, self._x, self._rows,
            )
            if z > 0.0:
                return
        raise ChainInitError(
            f"no consistent initial state in {self.config.init_retries} "
            f"forward passes"
        )

    # -- execution -------------------------------------------------------

    def run(self) -> ScoreTable:
        self.advance(self.config.iterations - self.iterations_done)
        return self.table

    def advance(self, iterations: int) -> None:
        """Run up to ``iterations`` more iterations, in chunks."""
        iterations = min(iterations, self.config.iterations - self.iterations_done)
        if self._forward:
            self._advance_forward(iterations)
        elif self.config.algorithm.startswith("chavez"):
            self._advance_chavez(iterations)
        else:
            self._advance_pearl(iterations)

    def _advance_forward(self, iterations: int) -> None:
        f = self.flat
        while iterations > 0:
            chunk = min(CHUNK, iterations)
            if self._si:
                chunk = min(chunk, self.config.si_update_period - self._since_update)
            u = self.rng.random((chunk, self.net.node_count))
            kernels.forward_chunk(
                chunk, f.topo, f.cards, f.parents_off, f.parents_flat,
                f.children_off, f.children_flat, f.cpt_off, f.cpt_flat,
                self._samp, self._ev_state, self._clamp, self._indicator,
                self._mb_mask, u, self._x, self._rows, self._w,
                self.table.scores, self.table.counts,
                self._si_cells, self._si, self.table.acc,
            )
            iterations -= chunk
            self.iterations_done += chunk
            self.instantiations += chunk * len(self._unobs)
            if self._si:
                self._since_update += chunk
                if self._since_update >= self.config.si_update_period:
                    self._apply_si_update()
                    self._since_update = 0

    def _apply_si_update(self) -> None:
        # cell scores accumulate over the whole run; each refresh
        # renormalizes starting-row + total-scores, so the sampling
        # distribution stabilizes toward the per-row score frequencies
        # instead of chasing the latest batch
        f = self.flat
        for j in self._unobs:
            lo, hi = int(f.cpt_off[j]), int(f.cpt_off[j + 1])
            card = int(f.cards[j])
            cells = self._si_cells[lo:hi].reshape(-1, card)
            visited = cells.sum(axis=1) > 0.0
            if not visited.any():
                continue
            new = f.cpt_flat[lo:hi].reshape(-1, card) + cells
            cur = self._samp[lo:hi].reshape(-1, card)
            cur[visited] = new[visited] / new[visited].sum(axis=1, keepdims=True)

    def _advance_pearl(self, steps: int) -> None:
        f = self.flat
        while steps > 0:
            chunk = min(CHUNK, steps)
            u = self.rng.random((chunk, 2))
            kernels.pearl_chunk(
                chunk, self._unobs, f.cards, f.parents_off, f.parents_flat,
                f.children_off, f.children_flat, f.cpt_off, f.cpt_flat,
                u, self._x, self._w, self._score_mode,
                self.table.scores, self.table.counts, self.table.acc,
            )
            steps -= chunk
            self.iterations_done += chunk
            self.instantiations += chunk

    def _advance_chavez(self, steps: int) -> None:
        f = self.flat
        while steps > 0 and self._seg_index < len(self._segments):
            if not self._seg_active:
                self._init_chain()
                self._seg_left = self._segments[self._seg_index]
                self._seg_active = True
                if self._seg_left == 0:
                    self._finish_segment()
                    continue
            chunk = min(CHUNK, steps, self._seg_left)
            u = self.rng.random((chunk, 2))
            kernels.pearl_chunk(
                chunk, self._unobs, f.cards, f.parents_off, f.parents_flat,
                f.children_off, f.children_flat, f.cpt_off, f.cpt_flat,
                u, self._x, self._w, 0,
                self.table.scores, self.table.counts, self.table.acc,
            )
            steps -= chunk
            self._seg_left -= chunk
            self.iterations_done += chunk
            self.instantiations += chunk
            if self._seg_left == 0:
                self._finish_segment()

    def _finish_segment(self) -> None:
        f = self.flat
        kernels.score_assignment(
            self._x, self._ev_state, f.cards, f.parents_off, f.parents_flat,
            f.children_off, f.children_flat, f.cpt_off, f.cpt_flat, self._w,
            self._score_mode == 2, self.table.scores, self.table.counts,
            self.table.acc,
        )
        self._seg_index += 1
        self._seg_left = 0
        self._seg_active = False

    # -- inspection --------------------------------------------------------

    def snapshot(self) -> PosteriorEstimate:
        """Anytime estimate from the scores so far; the run continues."""
        return normalize(self.table)

    def sampling_tables(self) -> dict[int, np.ndarray]:
        """Current per-node sampling tables (importance variants only)."""
        f = self.flat
        out = {}
        for j in self._unobs:
            lo, hi = int(f.cpt_off[j]), int(f.cpt_off[j + 1])
            out[int(j)] = self._samp[lo:hi].reshape(-1, int(f.cards[j])).copy()
        return out


def run_sampler(
    net: BeliefNetwork,
    ev: Evidence,
    config: SamplerConfig,
    rng: np.random.Generator | None = None,
) -> ScoreTable:
    """Run one full sampling pass and return its score table."""
    return SamplingRun(net, ev, config, rng).run()


def run_concatenated(
    net: BeliefNetwork,
    ev: Evidence,
    config: SamplerConfig,
    seeds: list,
) -> ScoreTable:
    """One run over the concatenation of several seed streams.

    Each seed contributes ``config.iterations`` iterations; per-stream
    tables are merged in order, so the result equals the field-wise sum
    of independent runs with the same seeds.
    """
    total = ScoreTable.empty(net, ev)
    for seed in seeds:
        rng = np.random.default_rng(seed)
        total = merge(total, SamplingRun(net, ev, config, rng).run())
    return total
