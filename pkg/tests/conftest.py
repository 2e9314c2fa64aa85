import numpy as np
import pytest

from resilest.analysis import SystemModel
from resilest.plant import three_inertia_model, zoh_discretize


@pytest.fixture(scope="session")
def three_inertia():
    """Discretized benchmark plant at the canonical 1 ms sampling period."""
    return zoh_discretize(three_inertia_model(), 0.001, d_max=0.001, n_max=0.001)


@pytest.fixture(scope="session")
def demo_run(tmp_path_factory):
    """One full demo invocation (scenario + trace + plots), shared across tests."""
    from resilest.cli import main
    from resilest.files import load_scenario
    from resilest.plant import simulate

    outdir = tmp_path_factory.mktemp("demo")
    rc = main(["demo", "--out", str(outdir)])
    assert rc == 0
    scenario = load_scenario(outdir / "scenario.json")
    trace = simulate(scenario)
    return {"dir": outdir, "scenario": scenario, "trace": trace}


@pytest.fixture(scope="session")
def scalar_triple():
    """Scalar plant measured by three identical sensors."""
    return SystemModel(
        A=[[0.95]], B=[[1.0]], C=[[1.0], [1.0], [1.0]], d_max=0.001, n_max=0.001
    )


def random_detectable_coding(rng, n, p):
    """Gaussian coding matrix, regenerated until it has full column rank."""
    from resilest.stacked import CodingMatrix

    while True:
        entries = rng.normal(size=(n * p, n))
        if np.linalg.matrix_rank(entries) == n:
            return CodingMatrix(entries, n, p)
