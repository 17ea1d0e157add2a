import numpy as np
import pytest

from auditorium.fixtures import build_demo_dataset, make_demo_arirs


@pytest.fixture(scope="session")
def demo_arirs():
    # small IRs keep the suite fast; session scope because the set is immutable
    return make_demo_arirs(ir_seconds=0.1)


@pytest.fixture(scope="session")
def demo_dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("demo_dataset")
    return build_demo_dataset(root, ir_seconds=0.1, sample_seconds=1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(0xA0D10)
