import random

from app.domain.models import CodedReport, Configuration, LassoRun, LassoWord
from app.services import construction_service, fuzz_service, machine_service, membership_service


def test_random_machines_are_well_formed():
    rng = random.Random(11)
    for _ in range(20):
        machine = fuzz_service.random_machine(rng, 3, 2, counters=2, blind=(True, False))
        assert machine_service.validate(machine) == []


def test_gamma_lassos_use_gamma_letters():
    rng = random.Random(5)
    for _ in range(20):
        y = fuzz_service.random_gamma_lasso(rng, "ab")
        assert y.letters() <= set("ab0AB")
        assert y.cycle


def test_report_does_not_depend_on_worker_count():
    kwargs = dict(seed=2024, trials=4, suites=["oracle", "coding", "escape"], counter_bound=8)
    serial = fuzz_service.run_fuzz(workers=1, **kwargs)
    pooled = fuzz_service.run_fuzz(workers=3, **kwargs)
    assert serial == pooled
    assert len(serial) == 12


def test_exact_suites_have_no_mismatches():
    suites = ["oracle", "coding", "deviation"]
    results = fuzz_service.run_fuzz(seed=3, trials=5, suites=suites, workers=1)
    assert fuzz_service.mismatches(results) == 0
    assert {r.status for r in results if r.suite != "deviation"} == {"agree"}


def test_report_lists_non_agreeing_trials():
    results = [
        fuzz_service.TrialResult("escape", 0, "agree"),
        fuzz_service.TrialResult("escape", 1, "unknown", "y=B(a)^w"),
    ]
    report = fuzz_service.format_report(
        results, seed=1, states=3, letters=2, counter_bound=32, cycle_bound=8, blocks=12
    )
    lines = report.splitlines()
    assert lines[0] == "fuzz seed=1 states=3 letters=2 C=32 K=8 N=12"
    assert lines[1] == "suite escape: trials=2 agree=1 mismatch=0 unknown=1 (50.0%)"
    assert lines[2] == "unknown escape #1: y=B(a)^w"


class TestTranslationTrial:
    OPTIONS = fuzz_service.FuzzOptions(
        states=1, letters=2, counter_bound=32, cycle_bound=8, blocks=6
    )

    def test_member_with_an_a_cycle_agrees(self, trivial):
        x = LassoWord("", "a")
        witness = membership_service.lasso_member(trivial, x).witness
        b_machine = construction_service.build_b(trivial)
        outcome = fuzz_service._translated_member(trivial, b_machine, x, witness, self.OPTIONS)
        assert outcome == ("agree", "")

    def test_member_without_an_a_cycle_is_a_mismatch(self, trivial, monkeypatch):
        x = LassoWord("", "a")
        witness = membership_service.lasso_member(trivial, x).witness
        b_machine = construction_service.build_b(trivial)
        empty = CodedReport(blocks=6, survivors=(1,) * 6, max_visits=0, frontier=frozenset())
        monkeypatch.setattr(membership_service, "coded_member", lambda *args, **kwargs: empty)
        status, detail = fuzz_service._translated_member(
            trivial, b_machine, x, witness, self.OPTIONS
        )
        assert status == "mismatch"
        assert "no A-cycle" in detail

    def test_non_member_agrees(self, only_a):
        b_machine = construction_service.build_b(only_a)
        x = LassoWord("", "ab")
        outcome = fuzz_service._translated_non_member(only_a, b_machine, x, self.OPTIONS)
        assert outcome == ("agree", "")

    def test_non_member_with_an_a_cycle_is_a_mismatch(self, zero_test, monkeypatch):
        x = LassoWord("", "ab")
        forged = LassoRun(
            configurations=(Configuration("q", (0,)), Configuration("q", (0,))),
            letters="a",
            loop_start=0,
        )
        report = CodedReport(
            blocks=6, survivors=(1,) * 6, max_visits=0, frontier=frozenset(), accepting_lasso=forged
        )
        monkeypatch.setattr(membership_service, "coded_member", lambda *args, **kwargs: report)
        b_machine = construction_service.build_b(zero_test)
        status, detail = fuzz_service._translated_non_member(zero_test, b_machine, x, self.OPTIONS)
        assert status == "mismatch"
        assert "rejected but B yields" in detail

    def test_a_stuck_while_b_survives_is_a_mismatch(self, only_a, monkeypatch):
        report = CodedReport(blocks=6, survivors=(1,) * 6, max_visits=0, frontier=frozenset())
        monkeypatch.setattr(membership_service, "coded_member", lambda *args, **kwargs: report)
        b_machine = construction_service.build_b(only_a)
        status, detail = fuzz_service._translated_non_member(
            only_a, b_machine, LassoWord("", "ab"), self.OPTIONS
        )
        assert status == "mismatch"
        assert "A has no run" in detail
