"""Network representation, validation, and graph queries."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from belief_sim import (
    BeliefNetwork,
    Cpt,
    CptError,
    CycleError,
    Evidence,
    EvidenceError,
    NetworkError,
    Variable,
    markov_blanket,
    relevant_nodes,
    subnetwork,
    topological_order,
)

from conftest import random_network


def three_chain():
    variables = [Variable(i, n, ("t", "f")) for i, n in enumerate("ABC")]
    cpts = [
        Cpt(0, (), np.array([[0.5, 0.5]])),
        Cpt(1, (0,), np.array([[0.9, 0.1], [0.2, 0.8]])),
        Cpt(2, (1,), np.array([[0.7, 0.3], [0.4, 0.6]])),
    ]
    return BeliefNetwork(variables, cpts)


def collider():
    variables = [Variable(i, n, ("t", "f")) for i, n in enumerate("ABC")]
    cpts = [
        Cpt(0, (), np.array([[0.5, 0.5]])),
        Cpt(1, (), np.array([[0.3, 0.7]])),
        Cpt(2, (0, 1), np.array([[1, 0], [0.5, 0.5], [0.2, 0.8], [0, 1.0]])),
    ]
    return BeliefNetwork(variables, cpts)


@st.composite
def small_networks(draw):
    seed = draw(st.integers(0, 2**32 - 1))
    n = draw(st.integers(1, 8))
    return random_network(np.random.default_rng(seed), n, max_card=3)


class TestValidation:
    def test_row_sum_error_names_node_and_row(self):
        with pytest.raises(CptError, match=r"'A'.*row 0"):
            BeliefNetwork(
                [Variable(0, "A", ("t", "f"))],
                [Cpt(0, (), np.array([[0.5, 0.6]]))],
            )

    def test_deterministic_rows_are_legal(self):
        net = collider()
        assert net.cpts[2].table[0, 0] == 1.0

    def test_entry_out_of_range(self):
        with pytest.raises(CptError, match="out of"):
            BeliefNetwork(
                [Variable(0, "A", ("t", "f"))],
                [Cpt(0, (), np.array([[1.5, -0.5]]))],
            )

    def test_wrong_shape(self):
        with pytest.raises(CptError, match="shape"):
            BeliefNetwork(
                [Variable(0, "A", ("t", "f")), Variable(1, "B", ("t", "f"))],
                [
                    Cpt(0, (), np.array([[0.5, 0.5]])),
                    Cpt(1, (0,), np.array([[0.5, 0.5]])),  # needs 2 rows
                ],
            )

    def test_cycle_detected_and_listed(self):
        variables = [Variable(i, n, ("t", "f")) for i, n in enumerate("AB")]
        cpts = [
            Cpt(0, (1,), np.array([[0.5, 0.5], [0.5, 0.5]])),
            Cpt(1, (0,), np.array([[0.5, 0.5], [0.5, 0.5]])),
        ]
        with pytest.raises(CycleError) as exc:
            BeliefNetwork(variables, cpts)
        assert set(exc.value.cycle) == {"A", "B"}

    def test_cardinality_must_be_at_least_two(self):
        with pytest.raises(NetworkError):
            BeliefNetwork(
                [Variable(0, "A", ("only",))], [Cpt(0, (), np.array([[1.0]]))]
            )

    def test_evidence_bounds(self):
        net = three_chain()
        with pytest.raises(EvidenceError):
            Evidence(net, {0: 5})
        with pytest.raises(EvidenceError):
            Evidence(net, {99: 0})
        assert Evidence.from_names(net, {"B": "f"}).assignments == {1: 1}


class TestRowOrdering:
    def test_last_parent_varies_fastest(self):
        # rows for parents (X, Y) enumerate as (0,0), (0,1), (1,0), (1,1)
        variables = [
            Variable(0, "X", ("a", "b")),
            Variable(1, "Y", ("p", "q", "r")),
            Variable(2, "Z", ("t", "f")),
        ]
        rows = np.array(
            [[0.1, 0.9], [0.2, 0.8], [0.3, 0.7], [0.4, 0.6], [0.5, 0.5], [0.6, 0.4]]
        )
        cpts = [
            Cpt(0, (), np.array([[0.5, 0.5]])),
            Cpt(1, (), np.array([[0.2, 0.3, 0.5]])),
            Cpt(2, (0, 1), rows),
        ]
        net = BeliefNetwork(variables, cpts)
        for x_state in range(2):
            for y_state in range(3):
                row = net.cpts[2].row_index(np.array([x_state, y_state, 0]))
                assert row == x_state * 3 + y_state


class TestTopologicalOrder:
    def test_chain_has_unique_order(self):
        assert topological_order(three_chain()) == [0, 1, 2]

    def test_deterministic_network_order(self, det_net):
        order = topological_order(det_net)
        pos = {j: i for i, j in enumerate(order)}
        b, c, d = (det_net.variable(n).id for n in "BCD")
        assert pos[b] < pos[c] and pos[b] < pos[d]
        for j in order:
            for p in det_net.parents(j):
                assert pos[p] < pos[j]

    def test_disconnected_roots_tie_break_by_id(self):
        variables = [Variable(0, "X", ("a", "b")), Variable(1, "Y", ("a", "b"))]
        cpts = [
            Cpt(0, (), np.array([[0.5, 0.5]])),
            Cpt(1, (), np.array([[0.5, 0.5]])),
        ]
        assert topological_order(BeliefNetwork(variables, cpts)) == [0, 1]

    @settings(max_examples=40, deadline=None)
    @given(small_networks())
    def test_parents_precede_children(self, net):
        pos = {j: i for i, j in enumerate(topological_order(net))}
        for j in range(net.node_count):
            for p in net.parents(j):
                assert pos[p] < pos[j]


class TestMarkovBlanket:
    def test_chain_middle(self):
        assert markov_blanket(three_chain(), 1) == {0, 2}

    def test_collider_includes_coparent(self):
        assert markov_blanket(collider(), 0) == {2, 1}

    def test_deterministic_network_b(self, det_net):
        # derived by enumerating parents/children/co-parents of B
        b = det_net.variable("B").id
        expected = set(det_net.parents(b))
        for k in det_net.children[b]:
            expected.add(k)
            expected.update(det_net.parents(k))
        expected.discard(b)
        assert markov_blanket(det_net, b) == expected
        assert {det_net.variable("C").id, det_net.variable("D").id} <= expected

    def test_unknown_node(self):
        with pytest.raises(NetworkError):
            markov_blanket(three_chain(), 7)

    @settings(max_examples=40, deadline=None)
    @given(small_networks())
    def test_moralized_symmetry(self, net):
        for j in range(net.node_count):
            for k in markov_blanket(net, j):
                assert j in markov_blanket(net, k)


class TestRelevantNodes:
    def test_chain_no_evidence(self):
        assert relevant_nodes(three_chain(), {0}, set()) == {0}

    def test_chain_downstream_evidence(self):
        assert relevant_nodes(three_chain(), {0}, {2}) == {0, 1, 2}

    def test_deterministic_network_c(self, det_net):
        c = det_net.variable("C").id
        b = det_net.variable("B").id
        assert relevant_nodes(det_net, {c}, set()) == {b, c}

    @settings(max_examples=40, deadline=None)
    @given(small_networks(), st.data())
    def test_monotone_and_idempotent(self, net, data):
        n = net.node_count
        s1 = set(data.draw(st.lists(st.integers(0, n - 1), max_size=3)))
        s2 = s1 | set(data.draw(st.lists(st.integers(0, n - 1), max_size=3)))
        ev = set(data.draw(st.lists(st.integers(0, n - 1), max_size=2)))
        if not s1:
            s1 = {0}
            s2 |= s1
        r1 = relevant_nodes(net, s1, ev)
        r2 = relevant_nodes(net, s2, ev)
        assert r1 <= r2
        # r1 is ancestrally closed, so closing it again is the identity
        assert relevant_nodes(net, r1, ev) == r1


class TestSubnetwork:
    def test_requires_ancestral_closure(self):
        net = three_chain()
        with pytest.raises(NetworkError, match="closed"):
            subnetwork(net, {2})

    def test_preserves_tables_and_names(self):
        net = three_chain()
        sub, id_map = subnetwork(net, {0, 1})
        assert sub.names == ["A", "B"]
        np.testing.assert_array_equal(
            sub.cpts[id_map[1]].table, net.cpts[1].table
        )
