import functools

import numpy as np
import pytest

from qgheat import eigen
from qgheat.eigen import eigendecompose
from qgheat.graph import (
    Constant,
    CosineMode,
    GaussianBump,
    PotentialSpec,
    builtin_graph,
)
from qgheat.mesh import assemble_h, assemble_h0

BUILTIN_NAMES = ("interval", "loop", "star3", "lasso")

POTENTIALS = {
    "const": Constant(0.5),
    "cos": CosineMode(1.0, 1),
    "bump": GaussianBump(2.0, 0.3, 0.1),
}


@functools.lru_cache(maxsize=None)
def spectra(name, h, pot=None, vectors=True):
    """Cached (graph, potential, sd0, sdh) for a builtin graph with a uniform potential."""
    g = builtin_graph(name)
    spec = PotentialSpec.zero(g) if pot is None else PotentialSpec.uniform(g, POTENTIALS[pot])
    sd0 = eigendecompose(assemble_h0(g, h), vectors=vectors)
    sdh = eigendecompose(assemble_h(g, spec, h), vectors=vectors)
    return g, spec, sd0, sdh


@pytest.fixture(params=eigen.available_backends())
def backend(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
