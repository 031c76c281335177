import os

from hypothesis import settings

import helpers

# reproducible property runs; HOMSTAR_TEST_SEED picks a different deterministic stream
settings.register_profile("repro", derandomize=True, deadline=None, max_examples=60)
settings.register_profile("fast", derandomize=True, deadline=None, max_examples=15)
settings.load_profile(os.environ.get("HOMSTAR_HYPOTHESIS_PROFILE", "repro"))


def pytest_terminal_summary(terminalreporter):
    if helpers.ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(helpers.ACCEPTANCE):
            terminalreporter.write_line(helpers.ACCEPTANCE[n])
