import numpy as np
import pytest

from mrga.blockstore import generate_population_file, split_into_blocks
from mrga.ga import GaParams
from mrga.objective import ObjectiveSpec


@pytest.fixture
def small_params():
    return GaParams(dimension=10, iterations=20, master_seed=7)


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(12345))


@pytest.fixture
def make_popfile(tmp_path):
    """Write a population file and return (path, header, manifest)."""

    def _make(count, dim=10, capacity=None, seed=0, name="pop.bin"):
        spec = ObjectiveSpec("sphere", dim, -100.0, 100.0)
        path = tmp_path / name
        header = generate_population_file(path, count, spec, seed)
        block_size = (capacity or count) * header.record_size
        return path, header, split_into_blocks(header, block_size)

    return _make
