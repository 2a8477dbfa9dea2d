import numpy as np
import pytest

from aenmf.synth import complementary_spec, generate


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_spd(rng, n, shift=0.5):
    M = rng.standard_normal((n, n))
    return M @ M.T / n + shift * np.eye(n)


@pytest.fixture(scope="session")
def small_synth():
    """A quick two-modality complementary dataset (60 samples)."""
    return generate(complementary_spec(2, samples_per_cluster=20, modality_dims=(12, 10), seed=3))


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(RESULTS):
        ok, detail = RESULTS[cid]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {cid}: {detail}")
