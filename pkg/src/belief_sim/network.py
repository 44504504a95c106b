"""Discrete belief networks: representation, validation, and graph queries.

A network is an acyclic directed graph over discrete variables, one
conditional probability table (CPT) per variable. Variables carry dense
0-based integer ids assigned in declaration order. CPT rows are laid out
over parent configurations with the *last* parent varying fastest; this
ordering is part of the file format contract (see ``fileformat``).

Assignments are plain ``numpy`` int64 arrays of length ``n`` holding a
state index per node, with ``-1`` marking a not-yet-sampled node.
"""

from __future__ import annotations

import hashlib
import heapq
from dataclasses import dataclass, field

import numpy as np

ROW_SUM_TOL = 1e-9


class NetworkError(ValueError):
    """Base class for network construction/validation failures."""


class CycleError(NetworkError):
    """The parent graph contains a directed cycle."""

    def __init__(self, cycle: list[str]):
        self.cycle = cycle
        super().__init__("cycle detected: " + " -> ".join(cycle + cycle[:1]))


class CptError(NetworkError):
    """A CPT violates shape, range, or row-sum constraints."""


class EvidenceError(NetworkError):
    """An evidence assignment refers to an unknown node or state."""


@dataclass(frozen=True)
class Variable:
    """A discrete variable with at least two states."""

    id: int
    name: str
    state_names: tuple[str, ...]

    @property
    def cardinality(self) -> int:
        return len(self.state_names)

    def state_index(self, state_name: str) -> int:
        try:
            return self.state_names.index(state_name)
        except ValueError:
            raise EvidenceError(
                f"variable {self.name!r} has no state {state_name!r}"
            ) from None


@dataclass(frozen=True, eq=False)
class Cpt:
    """Conditional probability table P(X_owner | parents).

    ``table`` has one row per parent configuration (last parent fastest)
    and one column per state of the owner. Rows sum to 1 within
    ``ROW_SUM_TOL``; entries of exactly 0 and 1 are legal, so deterministic
    nodes (logical AND/OR gates) are representable.
    """

    owner: int
    parents: tuple[int, ...]
    table: np.ndarray
    # parent cardinalities, injected by the network at validation time so
    # that row lookups need no back-reference
    _parent_cards: tuple[int, ...] = field(default=())

    def row_index(self, x: np.ndarray) -> int:
        """Row for the parent configuration in assignment ``x``."""
        row = 0
        for p, card in zip(self.parents, self._parent_cards):
            row = row * card + int(x[p])
        return row


class BeliefNetwork:
    """Validated, immutable belief network.

    Construction checks CPT shapes, probability ranges, row sums, and
    acyclicity; all graph indices (children, topological order) are
    derived once here. Instances are safe to share read-only across
    concurrent samplers.
    """

    def __init__(self, variables: list[Variable], cpts: list[Cpt]):
        if not variables:
            raise NetworkError("network must contain at least one variable")
        for i, v in enumerate(variables):
            if v.id != i:
                raise NetworkError(f"variable ids must be dense 0-based, got {v.id} at {i}")
            if v.cardinality < 2:
                raise NetworkError(f"variable {v.name!r} needs >= 2 states")
        names = [v.name for v in variables]
        if len(set(names)) != len(names):
            raise NetworkError("duplicate variable names")
        if len(cpts) != len(variables) or sorted(c.owner for c in cpts) != list(range(len(variables))):
            raise NetworkError("exactly one CPT per variable required")

        self.variables: tuple[Variable, ...] = tuple(variables)
        self.cpts: tuple[Cpt, ...] = tuple(sorted(cpts, key=lambda c: c.owner))
        self._by_name = {v.name: v for v in self.variables}

        self.cpts = tuple(self._validated_cpt(c) for c in self.cpts)

        # children index S(k) = { j : k in parents(j) }
        children: list[list[int]] = [[] for _ in self.variables]
        for c in self.cpts:
            for p in c.parents:
                children[p].append(c.owner)
        self.children: tuple[tuple[int, ...], ...] = tuple(
            tuple(sorted(ch)) for ch in children
        )

        self._topo = self._topological_order()
        self._fingerprint: str | None = None

    # -- validation ----------------------------------------------------

    def _validated_cpt(self, cpt: Cpt) -> Cpt:
        n = len(self.variables)
        var = self.variables[cpt.owner]
        for p in cpt.parents:
            if not 0 <= p < n:
                raise CptError(f"CPT for {var.name!r}: unknown parent id {p}")
            if p == cpt.owner:
                raise CycleError([var.name])
        if len(set(cpt.parents)) != len(cpt.parents):
            raise CptError(f"CPT for {var.name!r}: duplicate parents")

        parent_cards = tuple(self.variables[p].cardinality for p in cpt.parents)
        n_rows = int(np.prod(parent_cards)) if parent_cards else 1
        table = np.asarray(cpt.table, dtype=np.float64)
        if table.shape != (n_rows, var.cardinality):
            raise CptError(
                f"CPT for {var.name!r}: expected shape {(n_rows, var.cardinality)}, "
                f"got {table.shape}"
            )
        if np.any(table < 0.0) or np.any(table > 1.0):
            bad = np.argwhere((table < 0.0) | (table > 1.0))[0]
            raise CptError(
                f"CPT for {var.name!r}: entry out of [0, 1] at row {bad[0]}"
            )
        sums = table.sum(axis=1)
        off = np.abs(sums - 1.0) > ROW_SUM_TOL
        if off.any():
            row = int(np.argmax(off))
            raise CptError(
                f"CPT for {var.name!r}: row {row} sums to {sums[row]!r}, expected 1"
            )
        table.setflags(write=False)
        return Cpt(cpt.owner, cpt.parents, table, _parent_cards=parent_cards)

    def _topological_order(self) -> tuple[int, ...]:
        n = len(self.variables)
        indeg = [len(c.parents) for c in self.cpts]
        ready = [i for i in range(n) if indeg[i] == 0]
        heapq.heapify(ready)
        order: list[int] = []
        while ready:
            j = heapq.heappop(ready)
            order.append(j)
            for k in self.children[j]:
                indeg[k] -= 1
                if indeg[k] == 0:
                    heapq.heappush(ready, k)
        if len(order) < n:
            raise CycleError(self._find_cycle(set(range(n)) - set(order)))
        return tuple(order)

    def _find_cycle(self, remaining: set[int]) -> list[str]:
        # walk parent links inside the leftover set until a node repeats
        j = min(remaining)
        seen: list[int] = []
        while j not in seen:
            seen.append(j)
            j = next(p for p in self.cpts[j].parents if p in remaining)
        cycle = seen[seen.index(j):]
        return [self.variables[k].name for k in cycle]

    # -- queries --------------------------------------------------------

    @property
    def node_count(self) -> int:
        return len(self.variables)

    @property
    def names(self) -> list[str]:
        return [v.name for v in self.variables]

    def variable(self, name: str) -> Variable:
        try:
            return self._by_name[name]
        except KeyError:
            raise NetworkError(f"unknown variable {name!r}") from None

    def parents(self, j: int) -> tuple[int, ...]:
        return self.cpts[j].parents

    def cardinalities(self) -> np.ndarray:
        return np.array([v.cardinality for v in self.variables], dtype=np.int64)

    def fingerprint(self) -> str:
        """Stable content hash; used to guard score-table merges."""
        if self._fingerprint is None:
            h = hashlib.sha1()
            for v in self.variables:
                h.update(repr((v.name, v.state_names)).encode())
            for c in self.cpts:
                h.update(repr(c.parents).encode())
                h.update(np.ascontiguousarray(c.table).tobytes())
            self._fingerprint = h.hexdigest()
        return self._fingerprint


def topological_order(net: BeliefNetwork) -> list[int]:
    """Node ids, every node after all of its parents.

    Deterministic for a fixed network: ties break by ascending node id.
    """
    return list(net._topo)


def markov_blanket(net: BeliefNetwork, j: int) -> set[int]:
    """Parents, children, and children's other parents of node ``j``."""
    if not 0 <= j < net.node_count:
        raise NetworkError(f"unknown node id {j}")
    blanket = set(net.cpts[j].parents)
    for k in net.children[j]:
        blanket.add(k)
        blanket.update(net.cpts[k].parents)
    blanket.discard(j)
    return blanket


def relevant_nodes(
    net: BeliefNetwork, targets: set[int], evidence_nodes: set[int]
) -> set[int]:
    """Ancestral closure of ``targets | evidence_nodes``.

    Every node with a directed path into the query or evidence set, plus
    the sets themselves. A sound superset of the nodes whose simulation
    can influence posterior estimates for the targets.
    """
    for j in targets | evidence_nodes:
        if not 0 <= j < net.node_count:
            raise NetworkError(f"unknown node id {j}")
    closure: set[int] = set()
    stack = list(targets | evidence_nodes)
    while stack:
        j = stack.pop()
        if j in closure:
            continue
        closure.add(j)
        stack.extend(net.cpts[j].parents)
    return closure


def subnetwork(net: BeliefNetwork, keep: set[int]) -> tuple[BeliefNetwork, dict[int, int]]:
    """Restriction of ``net`` to ``keep``, which must be ancestrally closed.

    Returns the new network and the old-id -> new-id mapping.
    """
    for j in keep:
        for p in net.cpts[j].parents:
            if p not in keep:
                raise NetworkError(
                    f"subnetwork set is not ancestrally closed: parent "
                    f"{net.variables[p].name!r} of {net.variables[j].name!r} missing"
                )
    old_ids = sorted(keep)
    id_map = {old: new for new, old in enumerate(old_ids)}
    variables = [
        Variable(id_map[j], net.variables[j].name, net.variables[j].state_names)
        for j in old_ids
    ]
    cpts = [
        Cpt(
            id_map[j],
            tuple(id_map[p] for p in net.cpts[j].parents),
            net.cpts[j].table.copy(),
        )
        for j in old_ids
    ]
    return BeliefNetwork(variables, cpts), id_map


class Evidence:
    """Partial assignment of observed variables to state indices."""

    def __init__(self, net: BeliefNetwork, assignments: dict[int, int] | None = None):
        assignments = dict(assignments or {})
        for j, s in assignments.items():
            if not 0 <= j < net.node_count:
                raise EvidenceError(f"unknown node id {j}")
            if not 0 <= s < net.variables[j].cardinality:
                raise EvidenceError(
                    f"state {s} out of range for {net.variables[j].name!r}"
                )
        self.assignments: dict[int, int] = assignments
        self._net = net

    @classmethod
    def from_names(cls, net: BeliefNetwork, named: dict[str, str]) -> "Evidence":
        pairs = {}
        for name, state in named.items():
            var = net.variable(name)
            pairs[var.id] = var.state_index(state)
        return cls(net, pairs)

    @property
    def nodes(self) -> set[int]:
        return set(self.assignments)

    def __len__(self) -> int:
        return len(self.assignments)

    def __contains__(self, j: int) -> bool:
        return j in self.assignments

    def __getitem__(self, j: int) -> int:
        return self.assignments[j]

    def __eq__(self, other) -> bool:
        return isinstance(other, Evidence) and self.assignments == other.assignments

    def state_vector(self, n: int) -> np.ndarray:
        """Length-``n`` int64 vector, observed state or -1 per node."""
        ev = np.full(n, -1, dtype=np.int64)
        for j, s in self.assignments.items():
            ev[j] = s
        return ev

    def signature(self) -> tuple:
        return tuple(sorted(self.assignments.items()))


@dataclass(frozen=True)
class FlatNetwork:
    """Array form of a network for the sampling kernels.

    CPTs are concatenated into one flat float64 buffer; per node ``j`` the
    probability of state ``s`` under parent-configuration row ``r`` sits at
    ``cpt_off[j] + r * cards[j] + s``. Parent and child lists are stored
    CSR-style. ``topo`` is the deterministic topological order.
    """

    cards: np.ndarray
    parents_off: np.ndarray
    parents_flat: np.ndarray
    children_off: np.ndarray
    children_flat: np.ndarray
    cpt_off: np.ndarray
    cpt_flat: np.ndarray
    topo: np.ndarray

    @property
    def node_count(self) -> int:
        return len(self.cards)


def flatten(net: BeliefNetwork) -> FlatNetwork:
    n = net.node_count
    cards = net.cardinalities()

    parents_off = np.zeros(n + 1, dtype=np.int64)
    for j in range(n):
        parents_off[j + 1] = parents_off[j] + len(net.cpts[j].parents)
    parents_flat = np.array(
        [p for j in range(n) for p in net.cpts[j].parents], dtype=np.int64
    )

    children_off = np.zeros(n + 1, dtype=np.int64)
    for j in range(n):
        children_off[j + 1] = children_off[j] + len(net.children[j])
    children_flat = np.array(
        [k for j in range(n) for k in net.children[j]], dtype=np.int64
    )

    cpt_off = np.zeros(n + 1, dtype=np.int64)
    for j in range(n):
        cpt_off[j + 1] = cpt_off[j] + net.cpts[j].table.size
    cpt_flat = np.concatenate([net.cpts[j].table.ravel() for j in range(n)])

    return FlatNetwork(
        cards=cards,
        parents_off=parents_off,
        parents_flat=parents_flat,
        children_off=children_off,
        children_flat=children_flat,
        cpt_off=cpt_off,
        cpt_flat=cpt_flat,
        topo=np.array(net._topo, dtype=np.int64),
    )
