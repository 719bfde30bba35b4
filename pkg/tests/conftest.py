import pytest

ACCEPTANCE_LINES = []


class FixedRng:
    """Stand-in for ``Rng`` that replays preset uniforms."""

    def __init__(self, values):
        self.values = list(values)
        self.draws = 0

    def uniform(self):
        v = self.values[self.draws]
        self.draws += 1
        return v


@pytest.fixture
def fixed_rng():
    return FixedRng


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
