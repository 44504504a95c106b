"""Forward-sampling steps, Markov-blanket scoring, importance machinery."""

import numpy as np
import pytest

from belief_sim import (
    BeliefNetwork,
    Cpt,
    DegenerateBlanketError,
    Evidence,
    ImportanceDistribution,
    SamplerConfig,
    SampleScore,
    SupportConditionError,
    Variable,
    basic_step,
    exact_posteriors,
    heuristic_importance_build,
    heuristic_lambdas,
    importance_step,
    logic_sampling_step,
    markov_blanket_score,
    normalize,
    run_sampler,
    self_importance_update,
)

from conftest import chain_network


def one_node(p=0.9):
    return BeliefNetwork(
        [Variable(0, "A", ("t", "f"))], [Cpt(0, (), np.array([[p, 1 - p]]))]
    )


def rng(seed=0):
    return np.random.default_rng(np.random.SeedSequence(seed))


class TestLogicSampling:
    def test_no_evidence_always_scores_one(self):
        net = one_node()
        r = rng(1)
        assert all(
            logic_sampling_step(net, Evidence(net), r).weight == 1.0
            for _ in range(100)
        )

    def test_rare_state_match_frequency(self):
        net = one_node(0.9)
        ev = Evidence(net, {0: 1})
        r = rng(2)
        n = 20000
        hits = sum(logic_sampling_step(net, ev, r).weight for _ in range(n))
        sigma = np.sqrt(n * 0.1 * 0.9)
        assert abs(hits - n * 0.1) < 3 * sigma

    def test_impossible_evidence_scores_zero(self):
        net = BeliefNetwork(
            [Variable(0, "A", ("t", "f"))], [Cpt(0, (), np.array([[1.0, 0.0]]))]
        )
        ev = Evidence(net, {0: 1})
        r = rng(3)
        assert all(
            logic_sampling_step(net, ev, r).weight == 0.0 for _ in range(50)
        )


class TestBasicStep:
    def test_no_evidence_matches_logic_sampling_exactly(self, cooper_net):
        ev = Evidence(cooper_net)
        r1, r2 = rng(4), rng(4)
        for _ in range(50):
            a = logic_sampling_step(cooper_net, ev, r1)
            b = basic_step(cooper_net, ev, r2)
            assert a.weight == b.weight == 1.0
            np.testing.assert_array_equal(a.assignment, b.assignment)

    def test_chain_two_point_score_distribution(self):
        net = chain_network()
        ev = Evidence(net, {1: 0})
        r = rng(5)
        weights = [basic_step(net, ev, r).weight for _ in range(20000)]
        values = set(weights)
        assert values == {0.9, 0.1}
        frac_high = np.mean([w == 0.9 for w in weights])
        assert abs(frac_high - 0.9) < 3 * np.sqrt(0.9 * 0.1 / 20000)

    def test_deterministic_network_scores(self, det_net, det_ev):
        r = rng(6)
        weights = {basic_step(det_net, det_ev, r).weight for _ in range(2000)}
        assert weights == {0.9, 0.1}

    def test_evidence_nodes_clamped(self, det_net, det_ev):
        r = rng(7)
        e = det_net.variable("E").id
        for _ in range(20):
            assert basic_step(det_net, det_ev, r).assignment[e] == det_ev[e]


class TestMarkovBlanketScore:
    def test_childless_uniform_node_returns_prior_row(self):
        net = one_node(0.5)
        w = markov_blanket_score(net, np.array([0]), 0, 1.0)
        np.testing.assert_allclose(w, [0.5, 0.5])

    def test_chain_derived_weights(self):
        net = chain_network()
        x = np.array([0, 0])  # A=t, B=t
        w = markov_blanket_score(net, x, 0, 1.0)
        np.testing.assert_allclose(w, [0.81 / 0.82, 0.01 / 0.82], atol=1e-12)

    def test_deterministic_child_forces_unit_vector(self, det_net):
        # with OR=true and D=true, AND must be true; with A=true, OR must be true
        x = np.zeros(det_net.node_count, dtype=np.int64)
        w = markov_blanket_score(det_net, x, det_net.variable("AND").id, 1.0)
        np.testing.assert_array_equal(w, [1.0, 0.0])
        w = markov_blanket_score(det_net, x, det_net.variable("OR").id, 1.0)
        np.testing.assert_array_equal(w, [1.0, 0.0])

    def test_sampled_state_is_ignored(self):
        net = chain_network()
        wa = markov_blanket_score(net, np.array([0, 0]), 0, 1.0)
        wb = markov_blanket_score(net, np.array([1, 0]), 0, 1.0)
        np.testing.assert_allclose(wa, wb)

    def test_sums_to_base_weight(self, cooper_net):
        r = rng(8)
        ev = Evidence(cooper_net)
        for _ in range(20):
            s = basic_step(cooper_net, ev, r)
            for j in range(cooper_net.node_count):
                w = markov_blanket_score(cooper_net, s.assignment, j, 0.7)
                assert w.sum() == pytest.approx(0.7, abs=1e-12)

    def test_degenerate_blanket_raises(self):
        # child pins its parent: P(B=A) = 1, but the assignment disagrees
        net = BeliefNetwork(
            [Variable(0, "A", ("t", "f")), Variable(1, "B", ("t", "f"))],
            [
                Cpt(0, (), np.array([[1.0, 0.0]])),
                Cpt(1, (0,), np.array([[1.0, 0.0], [0.0, 1.0]])),
            ],
        )
        with pytest.raises(DegenerateBlanketError):
            markov_blanket_score(net, np.array([0, 1]), 0, 1.0)

    def test_variance_reduction_on_shared_stream(self, cooper_net, cooper_ev):
        # blanket scoring must not increase the per-node estimator variance
        plain, blanket = [], []
        for seed in range(60):
            p = run_sampler(
                cooper_net, cooper_ev,
                SamplerConfig(algorithm="basic", iterations=300),
                rng(1000 + seed),
            )
            m = run_sampler(
                cooper_net, cooper_ev,
                SamplerConfig(algorithm="basic-mb", iterations=300),
                rng(1000 + seed),
            )
            plain.append([normalize(p).probabilities[j][0] for j in sorted(p.unobserved_nodes())])
            blanket.append([normalize(m).probabilities[j][0] for j in sorted(m.unobserved_nodes())])
        var_plain = np.var(np.array(plain), axis=0)
        var_blanket = np.var(np.array(blanket), axis=0)
        assert np.all(var_blanket <= var_plain * 1.05 + 1e-9)
        assert var_blanket.mean() < var_plain.mean()


class TestImportance:
    def test_one_node_ratio_scores(self):
        net = one_node(0.9)
        pp = ImportanceDistribution(net, Evidence(net), {0: np.array([[0.5, 0.5]])})
        r = rng(9)
        weights = [importance_step(net, Evidence(net), pp, r).weight for _ in range(4000)]
        assert set(np.round(weights, 12)) == {1.8, 0.2}
        assert np.mean(weights) == pytest.approx(1.0, abs=0.05)

    def test_prior_tables_reproduce_basic_bitwise(self, cooper_net, cooper_ev):
        pp = ImportanceDistribution.from_network(cooper_net, cooper_ev)
        r1, r2 = rng(10), rng(10)
        for _ in range(200):
            a = basic_step(cooper_net, cooper_ev, r1)
            b = importance_step(cooper_net, cooper_ev, pp, r2)
            assert a.weight == b.weight
            np.testing.assert_array_equal(a.assignment, b.assignment)

    def test_support_violation_rejected_at_configuration(self):
        net = one_node(0.9)
        with pytest.raises(SupportConditionError, match="zeroes state"):
            ImportanceDistribution(net, Evidence(net), {0: np.array([[1.0, 0.0]])})

    def test_zero_allowed_where_prior_is_zero(self):
        net = BeliefNetwork(
            [Variable(0, "A", ("t", "f"))], [Cpt(0, (), np.array([[1.0, 0.0]]))]
        )
        pp = ImportanceDistribution(net, Evidence(net), {0: np.array([[1.0, 0.0]])})
        assert pp.table(0)[0, 0] == 1.0

    def test_rejects_tables_for_evidence_nodes(self):
        net = chain_network()
        ev = Evidence(net, {1: 0})
        with pytest.raises(SupportConditionError, match="evidence node"):
            ImportanceDistribution(net, ev, {1: np.array([[0.5, 0.5]] * 2)})

    def test_bad_rows_rejected(self):
        net = one_node(0.9)
        with pytest.raises(SupportConditionError, match="probability"):
            ImportanceDistribution(net, Evidence(net), {0: np.array([[0.7, 0.7]])})
        with pytest.raises(SupportConditionError, match="shape"):
            ImportanceDistribution(net, Evidence(net), {0: np.array([[0.5, 0.25, 0.25]])})


class TestSelfImportanceUpdate:
    def test_zero_weight_batch_is_identity(self):
        net = one_node(0.9)
        pp = ImportanceDistribution.from_network(net, Evidence(net))
        batch = [SampleScore(0.0, np.array([0])) for _ in range(5)]
        new = self_importance_update(pp, batch)
        np.testing.assert_array_equal(new.table(0), pp.table(0))

    def test_single_sample_blend(self):
        net = one_node(0.5)
        pp = ImportanceDistribution.from_network(net, Evidence(net))
        new = self_importance_update(pp, [SampleScore(1.0, np.array([0]))])
        np.testing.assert_allclose(new.table(0), [[0.75, 0.25]])

    def test_converges_to_frequency_blend(self):
        net = one_node(0.9)
        ev = Evidence(net)
        pp = ImportanceDistribution.from_network(net, ev)
        r = rng(11)
        batch = [basic_step(net, ev, r) for _ in range(2000)]
        new = self_importance_update(pp, batch)
        counts = np.bincount([s.assignment[0] for s in batch], minlength=2)
        expected = (np.array([0.9, 0.1]) + counts) / (2000 + 1)
        np.testing.assert_allclose(new.table(0)[0], expected, atol=1e-12)

    def test_support_preserved_under_updates(self):
        net = BeliefNetwork(
            [Variable(0, "A", ("t", "f")), Variable(1, "B", ("t", "f"))],
            [
                Cpt(0, (), np.array([[1.0, 0.0]])),
                Cpt(1, (0,), np.array([[0.5, 0.5], [0.3, 0.7]])),
            ],
        )
        ev = Evidence(net)
        pp = ImportanceDistribution.from_network(net, ev)
        r = rng(12)
        for _ in range(5):
            batch = [basic_step(net, ev, r) for _ in range(50)]
            pp = self_importance_update(pp, batch)  # re-validates support
        assert pp.table(0)[0, 1] == 0.0

    def test_unvisited_rows_keep_old_values(self):
        net = chain_network()
        ev = Evidence(net)
        pp = ImportanceDistribution.from_network(net, ev)
        # a single sample with A=t never visits B's A=f row
        new = self_importance_update(pp, [SampleScore(1.0, np.array([0, 0]))])
        np.testing.assert_array_equal(new.table(1)[1], pp.table(1)[1])
        assert new.table(1)[0, 0] == pytest.approx(1.9 / 2.0)


class TestHeuristicImportance:
    def test_no_evidence_returns_prior_exactly(self, cooper_net):
        pp = heuristic_importance_build(cooper_net, Evidence(cooper_net))
        for j in pp.nodes():
            np.testing.assert_array_equal(pp.table(j), cooper_net.cpts[j].table)

    def test_chain_single_message_is_exact(self):
        net = chain_network()
        ev = Evidence(net, {1: 0})  # B = t
        lams = heuristic_lambdas(net, ev)
        np.testing.assert_allclose(lams[0], [0.9, 0.1] / np.array([0.9, 0.1]).sum())
        pp = heuristic_importance_build(net, ev)
        np.testing.assert_allclose(
            pp.table(0), [[0.81 / 0.82, 0.01 / 0.82]], atol=1e-12
        )

    def test_lambda_zero_only_where_exact_likelihood_zero(self):
        # colliders with hard zeros in the child CPT
        r = np.random.default_rng(13)
        for _ in range(25):
            rows = r.uniform(0, 1, size=(4, 2))
            rows[r.integers(0, 4), r.integers(0, 2)] = 0.0
            rows /= rows.sum(axis=1, keepdims=True)
            net = BeliefNetwork(
                [Variable(i, n, ("t", "f")) for i, n in enumerate("ABC")],
                [
                    Cpt(0, (), np.array([[0.6, 0.4]])),
                    Cpt(1, (), np.array([[0.3, 0.7]])),
                    Cpt(2, (0, 1), rows),
                ],
            )
            ev = Evidence(net, {2: 0})
            lams = heuristic_lambdas(net, ev)
            for parent in (0, 1):
                for state in range(2):
                    if lams[parent][state] == 0.0:
                        # exact likelihood P(evidence | parent=state) by sweep
                        other = 1 - parent
                        like = sum(
                            net.cpts[other].table[0, xo]
                            * rows[
                                (state * 2 + xo) if parent == 0 else (xo * 2 + state),
                                0,
                            ]
                            for xo in range(2)
                        )
                        assert like == 0.0

    def test_built_tables_pass_support_validation(self, det_net, det_ev):
        pp = heuristic_importance_build(det_net, det_ev)
        # re-validate by reconstruction
        ImportanceDistribution(det_net, det_ev, {j: pp.table(j) for j in pp.nodes()})

    def test_estimator_matches_oracle(self, cooper_net, cooper_ev):
        table = run_sampler(
            cooper_net, cooper_ev,
            SamplerConfig(algorithm="heuristic-importance", iterations=50000),
            rng(14),
        )
        est = normalize(table)
        exact = exact_posteriors(cooper_net, cooper_ev)
        for j in exact.marginals:
            np.testing.assert_allclose(
                est.probabilities[j], exact.vector(j), atol=0.02
            )


class TestSamplerConfig:
    def test_rejects_unknown_algorithm(self):
        with pytest.raises(ValueError, match="unknown algorithm"):
            SamplerConfig(algorithm="gibbs")

    def test_rejects_bad_counts(self):
        with pytest.raises(ValueError):
            SamplerConfig(iterations=0)
        with pytest.raises(ValueError):
            SamplerConfig(si_update_period=0)
        with pytest.raises(ValueError):
            SamplerConfig(restarts=0)
