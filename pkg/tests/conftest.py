import os

import numpy as np
import pytest

from pocre import simbench

BENCH_REPLICATES = 20
BENCH_SEED = 2024


@pytest.fixture(scope="session")
def desk_benchmark():
    """20 CV-tuned replicates of every case at n=100, both methods."""
    records = simbench.run_benchmark(
        simbench.CASE_IDS, (100,), BENCH_REPLICATES, simbench.METHODS,
        simbench.LambdaPolicy.cv(), BENCH_SEED, n_jobs=int(os.environ.get("POCRE_TEST_JOBS", "1")),
    )
    return records, simbench.summarize(records)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_CRITERIA = {}


@pytest.fixture(scope="session")
def criterion_log():
    """Record one pass/fail line per acceptance criterion."""

    def record(number, ok, detail):
        _CRITERIA[number] = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for k in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[k])
