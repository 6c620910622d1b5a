import logging
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from activity_space.core import Replicate, ReplicateMetric
from activity_space.mixture import MixtureModel, Target, symmetric_difference_error

logger = logging.getLogger(__name__)

RESULT_COLUMNS = ["gamma", "estimator", "target", "mean", "stderr", "reps"]


class SymmetricDifferenceMetric(ReplicateMetric[pd.DataFrame]):
    """Probability mass of the disagreement between estimated level sets and the true support
    of a mixture model, averaged over replicates.

    Every level set stored in a replicate is scored against each target. The result has one row
    per (gamma, estimator, target) with the mean error, its standard error (empty for a single
    replicate) and the number of replicates.

    Args:
        model: The model the replicates were drawn from.
        gammas: Restrict the evaluation to these levels. Defaults to every stored level.
        targets: The supports to compare against.
        show_as_markdown: If True, logs the error table as markdown when calling compute().
    """

    def __init__(
        self,
        model: MixtureModel,
        gammas: Optional[Iterable[float]] = None,
        targets: Sequence[Union[Target, str]] = (Target.ANCHORS, Target.ANCHORS_AND_ROADS),
        show_as_markdown: bool = False,
    ) -> None:
        self.model = model
        self.gammas = None if gammas is None else {float(g) for g in gammas}
        self.targets = [Target(t) for t in targets]
        if not self.targets:
            raise ValueError("targets cannot be empty")
        self.show_as_markdown = show_as_markdown
        super().__init__()

    def reset(self) -> None:
        self.records: List[Dict[str, Any]] = []

    def _update(self, replicate: Replicate) -> None:
        if not replicate.level_sets:
            raise ValueError("replicate carries no level sets to evaluate")
        for estimator, level_sets in replicate.level_sets.items():
            for gamma, cells in level_sets.items():
                if self.gammas is not None and gamma not in self.gammas:
                    continue
                for target in self.targets:
                    self.records.append(
                        {
                            "gamma": gamma,
                            "estimator": estimator,
                            "target": target.value,
                            "error": symmetric_difference_error(self.model, cells, target),
                        }
                    )

    def _compute(self) -> pd.DataFrame:
        if not self.records:
            return pd.DataFrame(columns=RESULT_COLUMNS)
        grouped = pd.DataFrame(self.records).groupby(
            ["gamma", "estimator", "target"], sort=True
        )["error"]
        res = grouped.agg(["mean", "std", "count"]).reset_index()
        # sample standard deviation over sqrt(k), undefined for a single replicate
        res["stderr"] = np.where(res["count"] > 1, res["std"] / np.sqrt(res["count"]), np.nan)
        res = res.rename(columns={"count": "reps"})[RESULT_COLUMNS]
        if self.show_as_markdown:
            title = "symmetric difference error"
            if self.current_split is not None:
                title = f"{title} (split: {self.current_split})"
            table = res.pivot_table(index="gamma", columns=["estimator", "target"], values="mean")
            logger.info(f"\n{title}:\n{table.round(3).to_markdown()}")
        return res
