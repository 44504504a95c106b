"""Accumulated sample scores, posterior estimates, and error metrics.

A ``ScoreTable`` is the additive estimator state: per-(node, state) score
sums, per-node emission counts, and global sums of the sample weight and
its square. Tables from independent runs over the same network and
evidence merge by pure field-wise addition, so parallel runs combine
into exactly the estimate of the concatenated sample stream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exact import MarginalTable
from .network import BeliefNetwork, Evidence

# exact marginals this close to 0 or 1 make the error metric's
# denominator meaningless; such terms are excluded and the divisor reduced
DEGENERATE_EPS = 1e-12


class SignatureMismatchError(ValueError):
    """Tables from different networks or evidence cannot be merged."""


@dataclass
class ScoreTable:
    """Additive score accumulators for one (network, evidence) pair."""

    signature: tuple
    cards: np.ndarray
    ev_state: np.ndarray
    scores: np.ndarray  # (n, max_card) float64
    counts: np.ndarray  # (n,) int64 scored emissions per node
    acc: np.ndarray  # (sum Z, sum Z^2, sample count)

    @classmethod
    def empty(cls, net: BeliefNetwork, ev: Evidence) -> "ScoreTable":
        cards = net.cardinalities()
        return cls(
            signature=(net.fingerprint(), ev.signature()),
            cards=cards,
            ev_state=ev.state_vector(net.node_count),
            scores=np.zeros((net.node_count, int(cards.max())), dtype=np.float64),
            counts=np.zeros(net.node_count, dtype=np.int64),
            acc=np.zeros(3, dtype=np.float64),
        )

    @property
    def sum_z(self) -> float:
        return float(self.acc[0])

    @property
    def sum_z_sq(self) -> float:
        return float(self.acc[1])

    @property
    def samples(self) -> int:
        return int(self.acc[2])

    def unobserved_nodes(self) -> list[int]:
        return [j for j in range(len(self.cards)) if self.ev_state[j] < 0]

    def node_scores(self, j: int) -> np.ndarray:
        return self.scores[j, : self.cards[j]]

    def copy(self) -> "ScoreTable":
        return ScoreTable(
            self.signature, self.cards, self.ev_state,
            self.scores.copy(), self.counts.copy(), self.acc.copy(),
        )


def merge(a: ScoreTable, b: ScoreTable) -> ScoreTable:
    """Field-wise sum of two tables over the same network and evidence."""
    if a.signature != b.signature:
        raise SignatureMismatchError(
            "score tables come from different networks or evidence"
        )
    return ScoreTable(
        a.signature, a.cards, a.ev_state,
        a.scores + b.scores, a.counts + b.counts, a.acc + b.acc,
    )


@dataclass
class PosteriorEstimate:
    """Normalized posterior estimates with ratio-estimator error bars."""

    probabilities: dict[int, np.ndarray]
    standard_errors: dict[int, np.ndarray] | None
    all_zero: set[int]

    def vector(self, j: int) -> np.ndarray:
        return self.probabilities[j]


def normalize(table: ScoreTable) -> PosteriorEstimate:
    """Per-node score normalization.

    Nodes whose scores sum to zero carry no information yet; they are
    reported as uniform and flagged in ``all_zero``.
    """
    probs: dict[int, np.ndarray] = {}
    all_zero: set[int] = set()
    for j in table.unobserved_nodes():
        s = table.node_scores(j)
        total = s.sum()
        if total > 0.0:
            probs[j] = s / total
        else:
            probs[j] = np.full(len(s), 1.0 / len(s))
            all_zero.add(j)
    return PosteriorEstimate(probs, standard_error(table), all_zero)


def standard_error(table: ScoreTable) -> dict[int, np.ndarray] | None:
    """Delta-method standard error of each normalized score ratio.

    The estimate for state s of node j is the ratio of the (j, s) score
    sum to the node's total. Its delta-method variance, taking the state
    indicator as independent of the sample weight, collapses to the
    effective-sample-size form

        SE(j, s)^2 = p * (1 - p) * sum(Z^2) / (sum(Z) * total_j)

    which reduces to the binomial proportion error sqrt(p(1-p)/n) for
    unit weights. Returns None when fewer than 2 samples have been
    scored (insufficient to estimate a variance).
    """
    if table.samples < 2 or table.sum_z <= 0.0:
        return None
    errors: dict[int, np.ndarray] = {}
    for j in table.unobserved_nodes():
        s = table.node_scores(j)
        total = s.sum()
        if total <= 0.0:
            errors[j] = np.full(len(s), np.nan)
            continue
        p = s / total
        ratio = table.sum_z_sq / (table.sum_z * total)
        errors[j] = np.sqrt(p * (1.0 - p) * ratio)
    return errors


def fertig_mann_error(
    est: PosteriorEstimate, exact: MarginalTable, ev: Evidence
) -> float:
    """Root mean normalized squared error against exact marginals.

    Per unobserved node the squared deviation of the estimated marginal
    from the exact one is divided by p(1-p); the mean over nodes is
    square-rooted. Binary nodes contribute one term (the metric is
    invariant to which state is designated); wider nodes contribute the
    average over their states. Terms with exact marginals of 0 or 1 are
    excluded and the divisor reduced; NaN is returned if nothing remains.
    """
    if exact.inconsistent:
        raise ValueError("exact marginals are flagged inconsistent-evidence")
    total = 0.0
    included = 0
    for j, p_exact in exact.marginals.items():
        if j in ev or j not in est.probabilities:
            continue
        p_hat = est.probabilities[j]
        if len(p_exact) == 2:
            terms = [(p_hat[0], p_exact[0])]
        else:
            terms = list(zip(p_hat, p_exact))
        node_terms = [
            (ph - pe) ** 2 / (pe * (1.0 - pe))
            for ph, pe in terms
            if DEGENERATE_EPS < pe < 1.0 - DEGENERATE_EPS
        ]
        if node_terms:
            total += sum(node_terms) / len(node_terms)
            included += 1
    if included == 0:
        return math.nan
    return math.sqrt(total / included)
