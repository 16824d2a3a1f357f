import pytest

from app.utils.automaton_format import parse_automaton


TRIVIAL = """\
# one accepting state, every letter loops, the counter never moves
alphabet a b
counters 1
states q
initial q
accept q
t q a * 0 q
t q b * 0 q
"""

NO_FINAL = """\
alphabet a b
counters 1
states q
initial q
t q a * 0 q
t q b * 0 q
"""

# accepts the words reading b at counter zero infinitely often
ZERO_TEST = """\
alphabet a b
counters 1
states q f
initial q
accept f
t q a * + q
t q b P - q
t q b Z 0 f
t f a * + q
t f b P - q
t f b Z 0 f
"""

BLIND_GROWTH = """\
alphabet a
counters 1
blind 0
states q
initial q
accept q
t q a * + q
"""

TESTED_GROWTH = """\
alphabet a
counters 1
states q
initial q
accept q
t q a * + q
"""

# reads only a; every word with a b is rejected without touching the counter
ONLY_A = """\
alphabet a b
counters 1
states q
initial q
accept q
t q a * 0 q
"""

MULLER_BOTH = """\
alphabet a b
counters 0
states p r
initial p
muller {p r}
t p a . . p
t p b . . r
t r a . . p
t r b . . r
"""


@pytest.fixture
def trivial():
    return parse_automaton(TRIVIAL)


@pytest.fixture
def no_final():
    return parse_automaton(NO_FINAL)


@pytest.fixture
def zero_test():
    return parse_automaton(ZERO_TEST)


@pytest.fixture
def blind_growth():
    return parse_automaton(BLIND_GROWTH)


@pytest.fixture
def tested_growth():
    return parse_automaton(TESTED_GROWTH)


@pytest.fixture
def muller_both():
    return parse_automaton(MULLER_BOTH)


@pytest.fixture
def only_a():
    return parse_automaton(ONLY_A)


@pytest.fixture
def automaton_file(tmp_path):
    """Write an automaton text to a temporary file and return its path."""

    def write(text, name="machine.txt"):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return str(path)

    return write
