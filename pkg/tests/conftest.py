import pytest

from orchestra_kernel import seeds
from orchestra_kernel.kernel import Kernel


def pytest_runtest_logreport(report):
    """One visible pass/fail line per acceptance criterion."""
    if report.when == "call" and "test_acceptance" in report.nodeid:
        name = report.nodeid.split("::")[-1]
        outcome = "PASS" if report.passed else "FAIL"
        print(f"\nACCEPTANCE {name}: {outcome}", flush=True)


@pytest.fixture(scope="session")
def seed_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("seeds")
    seeds.generate(out)
    return out


@pytest.fixture
def kernel(seed_dir):
    built = []

    def factory(config=None, seeded=True):
        k = Kernel(config)
        if seeded:
            k.seed_tree(seed_dir)
        built.append(k)
        return k

    yield factory
    for k in built:
        k.close()


@pytest.fixture
def seeded_kernel(kernel):
    return kernel()
