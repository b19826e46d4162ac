import pytest

from helpers import make_utt


@pytest.fixture
def two_word_utt():
    return make_utt([[10, 10], [20, 20]], emphasized=[False, True])


def pytest_terminal_summary(terminalreporter):
    from helpers import ACCEPTANCE_LINES

    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
