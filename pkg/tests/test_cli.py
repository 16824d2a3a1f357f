import pytest

from app.cli import main
from tests.conftest import NO_FINAL, TESTED_GROWTH, TRIVIAL, ZERO_TEST


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out.splitlines()


class TestWords:
    def test_encode(self, capsys):
        code, lines = run(capsys, "encode", "--u", "ab", "--v", "a", "--blocks", "3")
        assert (code, lines) == (0, ["A0aB00bA000a"])

    def test_decode(self, capsys):
        code, lines = run(capsys, "decode", "A0aB0")
        assert code == 0
        assert lines == [
            "block 1: A zeros=1 payload=a",
            "remainder: B0",
            "first deviant block: none",
        ]

    def test_decode_error(self, capsys):
        assert main(["decode", "B0a"]) == 3
        assert "offset 0" in capsys.readouterr().err

    def test_classify(self, capsys):
        code, lines = run(capsys, "classify", "--u", "A0aB00bA0c", "--v", "a")
        assert code == 0
        assert lines == ["inL1 false", "inL2 true", "inL true", "region escape"]


class TestMachines:
    def test_validate(self, capsys, automaton_file):
        code, lines = run(capsys, "validate", automaton_file(ZERO_TEST))
        assert code == 0
        assert lines == ["ok: 2 states, 1 counters (0 blind), 6 transitions, buchi"]

    def test_translate_to_file(self, capsys, automaton_file, tmp_path):
        target = tmp_path / "b.txt"
        assert main(["translate", automaton_file(TRIVIAL), "--emit", "b", "-o", str(target)]) == 0
        code, lines = run(capsys, "validate", str(target))
        assert code == 0
        assert "4 counters (4 blind)" in lines[0]

    def test_translate_escape_to_stdout(self, capsys, automaton_file):
        code, lines = run(capsys, "translate", automaton_file(TRIVIAL), "--emit", "escape")
        assert code == 0
        assert lines[0] == "# escape from machine.txt"
        assert "counters 1" in lines

    def test_missing_file(self, capsys, tmp_path):
        assert main(["validate", str(tmp_path / "absent.txt")]) == 3
        assert capsys.readouterr().err.startswith("error:")

    def test_parse_error(self, capsys, automaton_file):
        path = automaton_file(TRIVIAL + "t q a Z - q\n")
        assert main(["validate", path]) == 3
        assert "line 9" in capsys.readouterr().err

    def test_usage_error_exits_3(self):
        with pytest.raises(SystemExit) as info:
            main(["encode", "--v", "a"])
        assert info.value.code == 3


class TestMember:
    def test_accept_prints_the_witness(self, capsys, automaton_file):
        code, lines = run(capsys, "member", automaton_file(ZERO_TEST), "--v", "b")
        assert code == 0
        assert lines[0].startswith("ACCEPT C=32 K=8")
        assert lines[-1] == "cycle: f"

    def test_reject(self, capsys, automaton_file):
        code, lines = run(capsys, "member", automaton_file(ZERO_TEST), "--v", "ab")
        assert code == 1
        assert lines[0].startswith("REJECT")

    def test_unknown(self, capsys, automaton_file):
        code, lines = run(
            capsys, "member", automaton_file(TESTED_GROWTH), "--v", "a", "--counter-bound", "4"
        )
        assert code == 2
        assert lines[0].startswith("UNKNOWN(horizon) C=4")

    def test_coded(self, capsys, automaton_file):
        code, lines = run(
            capsys, "member", automaton_file(TRIVIAL), "--v", "a", "--coded", "--blocks", "5"
        )
        assert code == 0
        assert lines[0].startswith("block 1 survivors=")
        assert lines[-1] == "ACCEPT A-cycle: q"


class TestCertify:
    def test_certificate_checks(self, capsys, automaton_file):
        code, lines = run(capsys, "certify", automaton_file(TRIVIAL), "--v", "a", "--blocks", "3")
        assert code == 0
        assert lines == [
            "block 1 u=0 v=1 q --a * +0--> q F",
            "block 2 u=0 v=2 q --a * +0--> q F",
            "block 3 u=0 v=3 q --a * +0--> q F",
            "check ok",
        ]

    def test_nothing_to_certify(self, capsys, automaton_file):
        code, lines = run(capsys, "certify", automaton_file(NO_FINAL), "--v", "a", "--blocks", "3")
        assert code == 1
        assert lines == ["REJECT C=32 K=8 no accepting A-run to certify"]


class TestPlay:
    def test_copy(self, capsys, automaton_file):
        code, lines = run(
            capsys, "play", automaton_file(TRIVIAL), "--mode", "copy", "--v", "a", "--horizon", "3"
        )
        assert code == 0
        assert lines[:3] == ["1 P1 a P2 A", "2 P1 a P2 0", "3 P1 a P2 a"]
        assert lines[-1] == "outcome P2 wins"

    def test_three_case_escape(self, capsys, automaton_file):
        code, lines = run(
            capsys,
            "play",
            automaton_file(TRIVIAL),
            "--mode",
            "threecase",
            "--u",
            "B",
            "--v",
            "a",
            "--horizon",
            "4",
        )
        assert code == 0
        assert lines[0] == "1 P1 B P2 -"
        assert lines[-1] == "outcome P2 wins"


def test_fuzz_command(capsys):
    code, lines = run(capsys, "fuzz", "--trials", "2", "--suite", "coding", "--seed", "9")
    assert code == 0
    assert lines[0].startswith("fuzz seed=9")
    assert lines[1] == "suite coding: trials=2 agree=2 mismatch=0 unknown=0 (0.0%)"


def test_fuzz_report_is_byte_identical_across_runs_and_workers(capsys):
    argv = ["fuzz", "--seed", "7", "--trials", "3"]
    for suite in ("oracle", "coding", "escape", "deviation"):
        argv += ["--suite", suite]
    reports = []
    for workers in ("1", "1", "2"):
        code = main(argv + ["--workers", workers])
        reports.append((code, capsys.readouterr().out.encode("utf-8")))
    assert reports[0] == reports[1] == reports[2]
    assert reports[0][1].startswith(b"fuzz seed=7 states=3 letters=2 C=32 K=8 N=12\n")
