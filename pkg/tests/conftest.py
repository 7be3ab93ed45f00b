import pytest

from filread.synth import SynthConfig, generate_corpus


@pytest.fixture(scope="session")
def small_corpus():
    return generate_corpus(SynthConfig(docs_per_level=20, seed=7))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
