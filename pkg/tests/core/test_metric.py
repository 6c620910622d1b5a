from typing import Optional

import numpy as np
import pytest

from activity_space.core import (
    BoundingBox,
    Replicate,
    ReplicateMetric,
    ScalarField,
    make_grid,
)


def make_replicate(n: int, seed: Optional[int] = None) -> Replicate:
    grid = make_grid(BoundingBox(0.0, 0.0, 2.0, 2.0), 1.0)
    zeros = ScalarField(grid, np.zeros(grid.shape))
    return Replicate(
        points=np.zeros((n, 2)),
        grid=grid,
        bandwidth=1.0,
        density_field=zeros,
        rank_field=zeros,
        seed=seed,
    )


@pytest.fixture
def replicates():
    return [make_replicate(10), make_replicate(30)]


class MeanSampleSize(ReplicateMetric):
    def reset(self) -> None:
        self.total = 0
        self.count = 0

    def _update(self, replicate: Replicate) -> None:
        self.total += replicate.n
        self.count += 1

    def _compute(self) -> Optional[float]:
        if self.count == 0:
            return None
        return self.total / self.count


def test_replicate_metric(replicates):
    metric = MeanSampleSize()
    metric(replicates[0])
    assert metric.count == 1
    assert metric.compute() == 10
    assert metric.count == 0


def test_replicate_metric_iterable(replicates):
    metric = MeanSampleSize()
    assert metric(replicates) == 20
    # not reset by the call itself
    assert metric(replicates[0]) == 50 / 3


def test_replicate_metric_wrong_iterable():
    metric = MeanSampleSize()
    with pytest.raises(TypeError, match="not a Replicate: <class 'int'>"):
        metric([1, 2])


def test_replicate_metric_dict(replicates):
    metric = MeanSampleSize()
    result = metric({"small": [replicates[0]], "empty": [], "all": replicates})
    assert result == {"small": 10, "empty": None, "all": 20}
    assert metric.current_split is None


def test_replicate_metric_wrong_type():
    metric = MeanSampleSize()
    with pytest.raises(TypeError, match="unknown replicate collection type: <class 'int'>"):
        metric(1)


def test_replicate_level_set_lookup(replicates):
    with pytest.raises(KeyError, match="density_ranking"):
        replicates[0].level_set("density_ranking", 0.5)
