from dataclasses import replace
import random

import pytest

from app.core.config import settings
from app.core.exceptions import (
    AlphabetMismatchError,
    CertificateError,
    ExplorationLimitError,
    RunError,
)
from app.domain.models import (
    Configuration,
    LassoRun,
    LassoWord,
    RunCertificate,
    UnknownReason,
    VerdictKind,
)
from app.services import construction_service, fuzz_service, membership_service


class TestLassoMember:
    def test_accepts_with_checked_witness(self, zero_test):
        x = LassoWord("", "b")
        verdict = membership_service.lasso_member(zero_test, x)
        assert verdict.kind is VerdictKind.ACCEPT
        assert verdict.witness.configurations[0] == Configuration("q", (0,))
        assert membership_service.verify_lasso_run(zero_test, x, verdict.witness)

    def test_rejects_when_nothing_was_clipped(self, zero_test):
        verdict = membership_service.lasso_member(zero_test, LassoWord("", "ab"))
        assert verdict.kind is VerdictKind.REJECT
        assert verdict.witness is None

    def test_spoke_counter_drains_before_the_cycle(self, zero_test):
        verdict = membership_service.lasso_member(zero_test, LassoWord("aab", "b"))
        assert verdict.kind is VerdictKind.ACCEPT
        assert verdict.witness.loop_start >= 4

    def test_blind_growth_is_accepted_by_pumping(self, blind_growth):
        verdict = membership_service.lasso_member(blind_growth, LassoWord("", "a"), counter_bound=4)
        assert verdict.kind is VerdictKind.ACCEPT
        assert verdict.witness.growth == (1,)

    def test_tested_growth_stays_unknown(self, tested_growth):
        x = LassoWord("", "a")
        verdict = membership_service.lasso_member(tested_growth, x, counter_bound=4)
        assert verdict.kind is VerdictKind.UNKNOWN
        assert verdict.reason is UnknownReason.HORIZON
        assert dict(verdict.bounds) == {"C": 4, "K": settings.cycle_bound}

    def test_node_budget(self, tested_growth):
        verdict = membership_service.lasso_member(
            tested_growth, LassoWord("", "a"), counter_bound=100, node_budget=5
        )
        assert verdict.kind is VerdictKind.UNKNOWN
        assert verdict.reason is UnknownReason.BUDGET

    def test_no_reachable_final_state(self, no_final):
        verdict = membership_service.lasso_member(no_final, LassoWord("", "a"))
        assert verdict.kind is VerdictKind.REJECT

    def test_muller(self, muller_both):
        accepted = membership_service.lasso_member(muller_both, LassoWord("", "ab"))
        assert accepted.kind is VerdictKind.ACCEPT
        assert set(accepted.witness.descriptor()[1]) == {"p", "r"}
        verdict = membership_service.lasso_member(muller_both, LassoWord("", "a"))
        assert verdict.kind is VerdictKind.REJECT

    def test_bad_bounds(self, trivial):
        with pytest.raises(RunError):
            membership_service.lasso_member(trivial, LassoWord("", "a"), counter_bound=0)

    def test_letter_outside_alphabet(self, trivial):
        with pytest.raises(AlphabetMismatchError):
            membership_service.lasso_member(trivial, LassoWord("", "c"))


class TestVerifyLassoRun:
    def test_wrong_word(self, zero_test):
        x = LassoWord("", "b")
        witness = membership_service.lasso_member(zero_test, x).witness
        assert not membership_service.verify_lasso_run(zero_test, LassoWord("", "ab"), witness)

    def test_growth_on_tested_counter(self, tested_growth):
        run = LassoRun(
            configurations=(Configuration("q", (0,)), Configuration("q", (1,))),
            letters="a",
            loop_start=0,
        )
        assert not membership_service.verify_lasso_run(tested_growth, LassoWord("", "a"), run)

    def test_forged_step(self, zero_test):
        x = LassoWord("", "b")
        witness = membership_service.lasso_member(zero_test, x).witness
        forged = replace(
            witness,
            configurations=witness.configurations[:-1] + (Configuration("q", (0,)),),
        )
        assert not membership_service.verify_lasso_run(zero_test, x, forged)


class TestCodedMember:
    def test_survivors_visit_final_states(self, trivial):
        b_machine = construction_service.build_b(trivial)
        report = membership_service.coded_member(b_machine, LassoWord("", "a"), 10)
        assert len(report.survivors) == 10
        assert all(report.survivors)
        assert report.max_visits >= 3
        assert not report.truncated

    def test_accepting_lasso_of_a(self, trivial):
        x = LassoWord("", "a")
        b_machine = construction_service.build_b(trivial)
        report = membership_service.coded_member(b_machine, x, 6, a_machine=trivial)
        assert report.accepting_lasso is not None
        assert membership_service.verify_lasso_run(trivial, x, report.accepting_lasso)

    def test_pruning_keeps_survivors(self, zero_test):
        b_machine = construction_service.build_b(zero_test)
        x = LassoWord("", "b")
        plain = membership_service.coded_member(b_machine, x, 5)
        pruned = membership_service.coded_member(b_machine, x, 5, prune=True)
        assert all(pruned.survivors)
        assert all(p <= q for p, q in zip(pruned.survivors, plain.survivors))

    def test_history_cap_bounds_projections(self, zero_test, monkeypatch):
        b_machine = construction_service.build_b(zero_test)
        x = LassoWord("a", "ab")
        capped = membership_service.coded_member(
            b_machine, x, 6, a_machine=zero_test, history_cap=1
        )
        assert capped.projections
        assert len(capped.projections) <= len(capped.frontier)
        monkeypatch.setattr(settings, "history_cap", 1)
        from_settings = membership_service.coded_member(b_machine, x, 6, a_machine=zero_test)
        assert from_settings.projections == capped.projections

    def test_block_count(self, trivial):
        with pytest.raises(RunError):
            membership_service.coded_member(
                construction_service.build_b(trivial), LassoWord("", "a"), 0
            )


class TestCheckCertificate:
    def test_entries_must_be_block_records(self, trivial):
        cert = RunCertificate(blocks=("block 1",))
        with pytest.raises(CertificateError):
            membership_service.check_certificate(
                construction_service.build_b(trivial), LassoWord("", "a"), cert
            )


class TestBruteForce:
    def test_length_limit(self, trivial):
        with pytest.raises(ExplorationLimitError):
            membership_service.brute_force_oracle(trivial, "aaaaa", max_length=3)

    def test_counts_visits(self, zero_test):
        results = membership_service.brute_force_oracle(zero_test, "bb")
        assert results == frozenset({(Configuration("f", (0,)), 2)})


class TestBruteForceLasso:
    def test_blind_growth(self, blind_growth):
        x = LassoWord("", "a")
        run = membership_service.brute_force_lasso(blind_growth, x, counter_bound=4, unwindings=3)
        assert run is not None
        assert run.growth == (1,)
        assert membership_service.verify_lasso_run(blind_growth, x, run)

    def test_nothing_to_find(self, no_final):
        assert membership_service.brute_force_lasso(no_final, LassoWord("", "ab")) is None

    def test_muller_cycle(self, muller_both):
        x = LassoWord("", "ab")
        run = membership_service.brute_force_lasso(muller_both, x, unwindings=3)
        assert run is not None
        assert set(run.descriptor()[1]) == {"p", "r"}
        assert membership_service.verify_lasso_run(muller_both, x, run)

    def test_agrees_with_lasso_member_on_blind_machines(self):
        bound, unwindings = 12, 10
        for seed in range(300):
            rng = random.Random(seed)
            machine = fuzz_service.random_machine(rng, 2, 2, counters=1, blind=(True,))
            x = fuzz_service.random_lasso(rng, machine.alphabet, max_total=3)
            run = membership_service.brute_force_lasso(machine, x, bound, unwindings)
            verdict = membership_service.lasso_member(machine, x, bound, unwindings)
            if run is not None:
                assert membership_service.verify_lasso_run(machine, x, run), f"seed {seed}"
                assert verdict.kind is not VerdictKind.REJECT, f"seed {seed}: {x}"
            if verdict.kind is VerdictKind.ACCEPT and not any(verdict.witness.growth):
                steps = len(verdict.witness.configurations) - 1
                # the search closes at cycle boundaries, so one extra period of slack
                if steps + len(x.cycle) <= len(x.spoke) + unwindings * len(x.cycle):
                    assert run is not None, f"seed {seed}: {x}"
