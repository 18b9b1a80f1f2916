import numpy as np
import pytest

from crowdconf.aggregation import PROBABILISTIC, Strategy, beta_predictive
from crowdconf.core import Config, WorkerRecord, rng_stream
from crowdconf.orchestrator import (
    answer_question_iterative,
    answer_question_voting,
    fuse_responses,
    initial_records,
    run_session,
    update_consensus_records,
    write_decisions_csv,
)
from crowdconf.simulation import build_world

from oracles import posterior_direct


def fixed(answers):
    return lambda w: answers[w]


def em_records(lams, config, experts=()):
    """Records whose point estimate equals the given skills exactly (N = 100)."""
    recs = {i: WorkerRecord(i, agreements=100 * lam, answered=100.0) for i, lam in enumerate(lams)}
    recs.update(initial_records([], experts, config))
    return recs


class TestVoting:
    @pytest.mark.parametrize("n, expected", [(21, 21), (22, 21), (1, 1), (2, 1)])
    def test_mv_queries_odd_crowd(self, n, expected):
        cfg = Config()
        recs = initial_records(range(n), [], cfg)
        d = answer_question_voting(0, fixed({i: 1 for i in range(n)}), Strategy.MV, list(range(n)), recs, cfg, rng_stream(0, "s"))
        assert d.n_workers == expected and d.cost == expected
        assert d.confidence is None and not d.escalated
        assert d.chosen_label == 1

    def test_weighted_queries_everyone(self):
        cfg = Config()
        recs = initial_records(range(22), [], cfg)
        d = answer_question_voting(0, fixed({i: i % 2 for i in range(22)}), Strategy.WEIGHTED, list(range(22)), recs, cfg, rng_stream(0, "s"))
        assert d.n_workers == 22 and d.cost == 22
        assert len({w for w, _ in d.responses}) == 22

    def test_weighted_uses_history(self):
        cfg = Config(count_prior_strength=0)
        recs = {
            0: WorkerRecord(0, agreements=9, answered=10),
            1: WorkerRecord(1, agreements=3, answered=10),
            2: WorkerRecord(2, agreements=3, answered=10),
        }
        d = answer_question_voting(0, fixed({0: 1, 1: 0, 2: 0}), Strategy.WEIGHTED, [0, 1, 2], recs, cfg, rng_stream(0, "s"))
        assert d.chosen_label == 1  # 0.9 > 0.3 + 0.3


class TestIterative:
    def test_confident_start_stops_immediately(self):
        cfg = Config(initial_query_count=3)
        recs = em_records([0.99] * 10, cfg)
        d, post = answer_question_iterative(
            0, fixed({i: 1 for i in range(10)}), Strategy.EM, list(range(10)), recs, [], cfg, rng_stream(0, "s")
        )
        assert d.n_workers == 3 and d.cost == 3 * cfg.worker_cost
        assert not d.escalated
        assert d.confidence == pytest.approx(posterior_direct([0.99] * 3, [1, 1, 1]))

    def test_escalates_after_crowd_exhausted(self):
        cfg = Config()
        recs = em_records([0.8], cfg, experts=[10, 11])
        d, post = answer_question_iterative(
            0, fixed({0: 1, 10: 1, 11: 1}), Strategy.EM, [0], recs, [10, 11], cfg, rng_stream(0, "s")
        )
        # one worker alone gives 0.8, one expert at 0.85 lifts it past 0.9
        assert d.escalated and d.n_experts == 1
        assert d.cost == cfg.worker_cost + cfg.expert_cost
        assert d.confidence == pytest.approx(posterior_direct([0.8, 0.85], [1, 1]))
        assert d.confidence > 0.9

    def test_worst_case_queries_everyone(self):
        cfg = Config(confidence_threshold=0.99)
        recs = em_records([0.6, 0.6, 0.6, 0.6], cfg, experts=[10, 11])
        answers = {0: 1, 1: 0, 2: 1, 3: 0, 10: 1, 11: 0}
        d, _ = answer_question_iterative(0, fixed(answers), Strategy.EM, [0, 1, 2, 3], recs, [10, 11], cfg, rng_stream(0, "s"))
        assert d.n_workers == 4 and d.n_experts == 2
        assert d.cost == 4 + 2 * 5
        assert d.confidence <= 0.99

    def test_threshold_half_never_loops(self):
        cfg = Config(confidence_threshold=0.5, initial_query_count=3)
        recs = initial_records(range(10), [20], cfg)
        for s in PROBABILISTIC:
            d, _ = answer_question_iterative(
                0, fixed({i: i % 2 for i in range(10)}), s, list(range(10)), recs, [20], cfg, rng_stream(1, "s")
            )
            assert d.n_workers == 3 and d.n_experts == 0

    def test_bayes_uses_predictive(self):
        cfg = Config(initial_query_count=2)
        recs = {0: WorkerRecord(0, alpha=8, beta=2), 1: WorkerRecord(1, alpha=3, beta=3)}
        d, post = answer_question_iterative(0, fixed({0: 1, 1: 0}), Strategy.BAY, [0, 1], recs, [], cfg, rng_stream(0, "s"))
        p0 = beta_predictive(8, 2, 1, 1)
        p1 = beta_predictive(3, 3, 0, 1)
        q0 = beta_predictive(8, 2, 1, 0)
        q1 = beta_predictive(3, 3, 0, 0)
        assert post.p_label_one == pytest.approx(p0 * p1 / (p0 * p1 + q0 * q1))

    def test_voting_strategy_rejected(self):
        with pytest.raises(ValueError):
            answer_question_iterative(0, fixed({0: 1}), Strategy.MV, [0], {}, [], Config(), rng_stream(0, "s"))


class TestRecordUpdates:
    def test_bayes_agreement(self):
        recs = {0: WorkerRecord(0, alpha=2, beta=2)}
        out = update_consensus_records(Strategy.BAY, recs, [(0, 1)], 1)
        assert (out[0].alpha, out[0].beta) == (3, 2)
        assert recs[0].alpha == 2  # input untouched

    def test_conf_disagreement(self):
        recs = {0: WorkerRecord(0, alpha=2, beta=2)}
        out = update_consensus_records(Strategy.CONF, recs, [(0, 0)], 1, 0.96)
        assert (out[0].alpha, out[0].beta) == (2, pytest.approx(2.96))

    @pytest.mark.parametrize("s", [Strategy.MV, Strategy.WEIGHTED, Strategy.EM])
    def test_counting_strategies_leave_beta(self, s):
        recs = {0: WorkerRecord(0, alpha=2, beta=2), 1: WorkerRecord(1, alpha=2, beta=2)}
        out = update_consensus_records(s, recs, [(0, 1), (1, 0)], 1)
        assert (out[0].agreements, out[0].answered) == (1, 1)
        assert (out[1].agreements, out[1].answered) == (0, 1)
        assert all((r.alpha, r.beta) == (2, 2) for r in out.values())

    def test_experts_frozen(self):
        cfg = Config()
        recs = initial_records([0], [5], cfg)
        out = update_consensus_records(Strategy.BAY, recs, [(0, 1), (5, 0)], 1)
        assert out[5] == recs[5]


class TestFuse:
    def test_bayes_single_fresh_response(self):
        cfg = Config()
        recs = initial_records(["w"], [], cfg)
        label, conf = fuse_responses(Strategy.BAY, [("w", 1)], recs, cfg)
        assert label == 1
        assert conf == pytest.approx(beta_predictive(cfg.prior_alpha, cfg.prior_beta, 1, 1))
        assert conf == pytest.approx(0.6)

    def test_mv_even_rejected(self):
        cfg = Config()
        recs = initial_records(["a", "b"], [], cfg)
        with pytest.raises(ValueError):
            fuse_responses(Strategy.MV, [("a", 1), ("b", 0)], recs, cfg)


def _session(strategy, config, seed=3, n=50):
    world = build_world(config, seed, n)
    return world, run_session(world, strategy, config, seed)


class TestSession:
    def test_empty(self):
        world, log = _session(Strategy.BAY, Config(), n=0)
        assert log.decisions == [] and log.total_cost == 0 and log.accuracy == 0

    def test_mv_full_availability_constant_cost(self):
        cfg = Config(availability_prob=1.0)
        _, log = _session(Strategy.MV, cfg, n=500)
        crowd = cfg.pool_counts["normal"] + cfg.pool_counts["adversarial"]
        odd = crowd if crowd % 2 else crowd - 1
        assert {d.cost for d in log.decisions} == {odd * cfg.worker_cost}

    def test_deterministic(self):
        _, a = _session(Strategy.CONF, Config())
        _, b = _session(Strategy.CONF, Config())
        assert a.decisions == b.decisions

    @pytest.mark.parametrize("strategy", list(Strategy))
    def test_ledger_and_invariants(self, strategy):
        cfg = Config()
        world, log = _session(strategy, cfg, n=200)
        experts = {p.id for p in world.pool.experts}
        assert log.total_cost == pytest.approx(sum(d.cost for d in log.decisions))
        queried = {w: 0 for w in log.records}
        for d, avail in zip(log.decisions, world.availability):
            ids = [w for w, _ in d.responses]
            assert len(ids) == len(set(ids))
            n_exp = sum(w in experts for w in ids)
            assert n_exp == d.n_experts and len(ids) - n_exp == d.n_workers
            assert d.cost == cfg.worker_cost * d.n_workers + cfg.expert_cost * d.n_experts
            assert set(ids) - experts <= set(avail)
            if strategy.is_voting:
                assert d.confidence is None
            else:
                assert d.confidence >= 0.5
                assert d.confidence > cfg.confidence_threshold or (
                    d.n_workers == len(avail) and d.n_experts == len(experts)
                )
            for w in ids:
                queried[w] += 1
        k0 = cfg.count_prior_strength
        for w, rec in log.records.items():
            if w in experts:
                continue
            if strategy is Strategy.BAY:
                assert rec.alpha + rec.beta - cfg.prior_strength == pytest.approx(queried[w])
            elif strategy is Strategy.CONF:
                assert rec.alpha + rec.beta - cfg.prior_strength <= queried[w] + 1e-9
            else:
                assert rec.answered - k0 == pytest.approx(queried[w])
                assert (rec.alpha, rec.beta) == (cfg.prior_alpha, cfg.prior_beta)

    def test_bayes_cost_trend(self):
        cfg = Config()
        _, log = _session(Strategy.BAY, cfg, seed=11, n=2000)
        c = log.costs()
        assert c[-500:].mean() <= c[:500].mean()

    def test_decisions_csv(self, tmp_path):
        world, log = _session(Strategy.CONF, Config(), n=20)
        path = write_decisions_csv(log, world, tmp_path / "decisions.csv")
        lines = path.read_text().splitlines()
        assert lines[0] == "question_id,strategy,chosen_label,true_label,correct,confidence,cost,n_workers,n_experts,escalated"
        assert len(lines) == 21
        _, mv = _session(Strategy.MV, Config(), n=5)
        mv_lines = write_decisions_csv(mv, world, tmp_path / "mv.csv").read_text().splitlines()
        assert all(line.split(",")[5] == "" for line in mv_lines[1:])
