import numpy as np
import pytest

from activity_space.config import AnalysisConfig
from activity_space.core.grid import BoundingBox, make_grid
from activity_space.mixture import paper_model, sample
from activity_space.pipeline import ActivitySpacePipeline
from tests import FIXTURES_ROOT

PAPER_SAMPLE_SIZE = 8_000
PAPER_BANDWIDTH = 0.5
PAPER_CELL_SIZE = 0.05


@pytest.fixture
def model():
    return paper_model()


@pytest.fixture
def unit_grid():
    return make_grid(BoundingBox(0.0, 0.0, 2.0, 2.0), 1.0)


@pytest.fixture
def random_points():
    rng = np.random.default_rng(12345)
    return rng.uniform(0.0, 10.0, size=(50, 2))


@pytest.fixture
def gps_csv():
    return FIXTURES_ROOT / "gps" / "synthetic_5000.csv"


@pytest.fixture(scope="session")
def model_points():
    return sample(paper_model(), PAPER_SAMPLE_SIZE, seed=1)


@pytest.fixture(scope="session")
def model_analysis(model_points):
    config = AnalysisConfig(bandwidth=PAPER_BANDWIDTH, cell_size=PAPER_CELL_SIZE)
    return ActivitySpacePipeline(config)(model_points)


def test_gps_fixture(gps_csv):
    lines = gps_csv.read_text().splitlines()
    assert lines[0] == "id,timestamp,lat,lon,accuracy"
    assert len(lines) == 5_001
