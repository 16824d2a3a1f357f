import random

import pytest

from app.core.exceptions import AlphabetMismatchError, StrategyError
from app.domain.models import Answer, CodedWord, LassoWord, Outcome
from app.services import (
    coding_service,
    construction_service,
    fuzz_service,
    membership_service,
    wadge_service,
)
from app.services.wadge_service import (
    EmptyOracle,
    FullOracle,
    MachineOracle,
    PetriOracle,
    SplitOracle,
    SumOracle,
)


def test_drop_inside_spoke_and_cycle():
    word = LassoWord("ab", "cd")
    assert wadge_service.drop(word, 1) == LassoWord("b", "cd")
    assert wadge_service.drop(word, 3) == LassoWord("d", "cd")


class TestOracles:
    def test_empty_sum_escapes(self):
        summed = wadge_service.empty_sum(FullOracle(("a", "b")), 1)
        assert summed.alphabet == ("a", "b", "+", "-")
        assert summed.query(LassoWord("a+", "b")) is Answer.OUT
        assert summed.query(LassoWord("a-", "b")) is Answer.IN
        assert summed.query(LassoWord("", "ab")) is Answer.IN

    def test_nested_sum_reads_the_first_escape(self):
        nested = wadge_service.nested_empty_sum(FullOracle(("a", "b")))
        assert nested.query(LassoWord("~", "a")) is Answer.IN
        assert nested.query(LassoWord("#", "a")) is Answer.OUT
        assert nested.query(LassoWord("b+", "a")) is Answer.OUT
        assert nested.query(LassoWord("", "b")) is Answer.IN

    def test_sum_letters_must_be_fresh(self):
        with pytest.raises(AlphabetMismatchError):
            SumOracle(EmptyOracle(("a", "+")), FullOracle(("a", "+")), "+", "-")

    def test_split(self):
        split = SplitOracle(("a",), ("b",), FullOracle(("a", "b")), EmptyOracle(("a", "b")))
        assert split.query(LassoWord("a", "b")) is Answer.IN
        assert split.query(LassoWord("b", "a")) is Answer.OUT
        with pytest.raises(AlphabetMismatchError):
            SplitOracle(("a",), ("a",), FullOracle(("a",)), FullOracle(("a",)))

    def test_machine_oracle_leaves_codes_open(self, trivial):
        oracle = MachineOracle(trivial)
        assert oracle.query(LassoWord("", "a")) is Answer.IN
        assert oracle.query(CodedWord(LassoWord("", "a"))) is Answer.UNKNOWN

    def test_petri_oracle(self, trivial, no_final):
        oracle = PetriOracle(trivial)
        assert oracle.query(LassoWord("B", "a")) is Answer.IN
        assert oracle.query(LassoWord("A0aB00b", "a")) is Answer.OUT
        assert oracle.query(CodedWord(LassoWord("", "ab"))) is Answer.IN
        assert PetriOracle(no_final).query(CodedWord(LassoWord("", "a"))) is Answer.OUT

    def test_petri_oracle_builds_b_and_pa(self, trivial, monkeypatch):
        calls = {"build_b": 0, "build_pa": 0}

        def counting(name):
            original = getattr(construction_service, name)

            def wrapper(machine):
                calls[name] += 1
                return original(machine)

            return wrapper

        for name in calls:
            monkeypatch.setattr(construction_service, name, counting(name))

        def no_reference(word):
            raise AssertionError("the oracle must not consult in_l")

        monkeypatch.setattr(coding_service, "in_l", no_reference)
        oracle = PetriOracle(trivial)
        assert oracle.query(LassoWord("B", "a")) is Answer.IN
        assert oracle.query(LassoWord("A0aB00b", "a")) is Answer.OUT
        assert calls == {"build_b": 1, "build_pa": 1}
        assert oracle.query(CodedWord(LassoWord("", "ab"))) is Answer.IN
        assert calls == {"build_b": 2, "build_pa": 1}

    def test_petri_oracle_reads_an_a_lasso_off_b(self, trivial):
        x = LassoWord("", "ab")
        report = PetriOracle(trivial).coded_report(x)
        assert report.accepting_lasso is not None
        assert membership_service.verify_lasso_run(trivial, x, report.accepting_lasso)

    def test_petri_oracle_stays_open_on_live_survivors(self, zero_test):
        # A never gets stuck on (ab), so B keeps live runs at every horizon
        oracle = PetriOracle(zero_test)
        assert oracle.query(CodedWord(LassoWord("", "ab"))) is Answer.UNKNOWN


class TestStrategies:
    def test_respond_writes_one_letter_per_round(self):
        strategy = wadge_service.identity_strategy()
        assert strategy.respond("ab", ("a",)) == "b"
        assert strategy.respond("a", ("a",)) is None

    def test_respond_refuses_to_rewrite(self):
        with pytest.raises(StrategyError):
            wadge_service.identity_strategy().respond("ab", ("b",))

    def test_three_case_targets(self):
        strategy = wadge_service.ThreeCaseStrategy(("a", "b"))
        assert strategy.target("A0aB00b") == "ab"
        assert strategy.target("Bab") == "-aa"
        assert strategy.target("A0aB0bA") == "a-a"
        # an extra zero leaves the code, the closing payload letter enters the escape set
        assert strategy.target("A0aB000bA0ab") == "a+aaa~a"

    def test_three_case_needs_plain_sigma(self):
        with pytest.raises(AlphabetMismatchError):
            wadge_service.ThreeCaseStrategy(("a", "0"))

    def test_transfer_of_identity(self, trivial):
        identity = wadge_service.identity_strategy()
        transfer = wadge_service.strategy_transfer(identity, trivial.alphabet)
        assert transfer.target("ab") == "ab"
        assert transfer.limit(LassoWord("", "a")) == LassoWord("", "a")


class TestPlay:
    def test_copy_h(self, trivial):
        result = wadge_service.play_wadge(
            MachineOracle(trivial),
            PetriOracle(trivial),
            wadge_service.strategy_copy_h(trivial),
            LassoWord("", "a"),
            horizon=10,
        )
        assert result.outcome is Outcome.PLAYER_2
        assert result.answer1 is Answer.IN
        assert result.transcript.committed2 == CodedWord(LassoWord("", "a"))
        assert "".join(result.transcript.player2) == "A0aB00aA00"

    def test_copy_h_rejected_word(self, only_a):
        result = wadge_service.play_wadge(
            MachineOracle(only_a),
            PetriOracle(only_a),
            wadge_service.strategy_copy_h(only_a),
            LassoWord("", "ab"),
            horizon=8,
        )
        assert result.outcome is Outcome.PLAYER_2
        assert result.answer2 is Answer.OUT

    @pytest.mark.parametrize(
        "commit",
        [
            LassoWord("B", "a"),
            CodedWord(LassoWord("", "a")),
            LassoWord("A0aB00b", "a"),
        ],
    )
    def test_three_case(self, trivial, commit):
        result = wadge_service.play_wadge(
            PetriOracle(trivial),
            wadge_service.nested_empty_sum(MachineOracle(trivial)),
            wadge_service.strategy_three_case(trivial),
            commit,
            horizon=12,
        )
        assert result.outcome is Outcome.PLAYER_2

    def test_copy_h_never_loses(self):
        for seed in range(100):
            rng = random.Random(seed)
            a_machine = fuzz_service.random_machine(rng, 3, 2)
            x = fuzz_service.random_lasso(rng, a_machine.alphabet)
            result = wadge_service.play_wadge(
                MachineOracle(a_machine, 12, 4),
                PetriOracle(a_machine, 12, 4, blocks=6),
                wadge_service.strategy_copy_h(a_machine),
                x,
                horizon=12,
            )
            assert result.outcome is not Outcome.PLAYER_1, f"seed {seed}: {x}"
            # the code of every letter is longer than the letter, so the copy never waits
            assert len(result.transcript.player2_word) >= result.transcript.horizon // 2

    def test_three_case_never_loses(self):
        for seed in range(100):
            rng = random.Random(seed)
            a_machine = fuzz_service.random_machine(rng, 3, 2)
            if rng.random() < 0.5:
                commit = CodedWord(fuzz_service.random_lasso(rng, a_machine.alphabet))
            else:
                commit = fuzz_service.random_gamma_lasso(rng, a_machine.alphabet)
            result = wadge_service.play_wadge(
                PetriOracle(a_machine, 12, 4, blocks=6),
                wadge_service.nested_empty_sum(MachineOracle(a_machine, 12, 4)),
                wadge_service.strategy_three_case(a_machine),
                commit,
                horizon=12,
            )
            assert result.outcome is not Outcome.PLAYER_1, f"seed {seed}: {commit}"

    def test_player1_outside_alphabet(self):
        with pytest.raises(StrategyError):
            wadge_service.play_wadge(
                EmptyOracle(("a",)),
                EmptyOracle(("a",)),
                wadge_service.identity_strategy(),
                LassoWord("", "b"),
                horizon=2,
            )
