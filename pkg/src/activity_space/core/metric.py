from abc import ABC, abstractmethod
from typing import Dict, Generic, Iterable, Optional, TypeVar, Union

from activity_space.core.replicate import Replicate

T = TypeVar("T")


class ReplicateMetric(ABC, Generic[T]):
    """This defines the interface for a metric over analysed replicates."""

    def __init__(self) -> None:
        self.reset()
        self._current_split: Optional[str] = None

    @abstractmethod
    def reset(self) -> None:
        """Any reset logic that needs to be performed before the metric is called again."""

    def __call__(
        self,
        replicate_or_collection: Union[
            Iterable[Replicate], Replicate, Dict[str, Iterable[Replicate]]
        ],
    ) -> Union[Dict[str, T], T]:
        """Update the metric with a replicate or a collection of replicates and return the
        computed value.

        If the collection is a dictionary (for instance one collection per sample size), the
        metric is reset and computed for each entry and the result is returned as a dictionary
        with the same keys.
        """
        if isinstance(replicate_or_collection, Replicate):
            # do not reset here to allow for multiple calls
            self._update(replicate_or_collection)
            return self.compute(reset=False)
        elif isinstance(replicate_or_collection, dict):
            result: Dict[str, T] = {}
            for split_name, split in replicate_or_collection.items():
                self._current_split = split_name
                self.reset()
                split_values: T = self(split)  # type: ignore
                result[split_name] = split_values
                self._current_split = None
            return result
        elif isinstance(replicate_or_collection, Iterable):
            for replicate in replicate_or_collection:
                if not isinstance(replicate, Replicate):
                    raise TypeError(
                        f"collection contains an object that is not a Replicate: "
                        f"{type(replicate)}"
                    )
                self._update(replicate)
            # do not reset here to allow for multiple calls
            return self.compute(reset=False)
        else:
            raise TypeError(f"unknown replicate collection type: {type(replicate_or_collection)}")

    def compute(self, reset: bool = True) -> T:
        metric_values = self._compute()
        if reset:
            self.reset()
        return metric_values

    @abstractmethod
    def _update(self, replicate: Replicate) -> None:
        """This method is called to update the metric with the new replicate."""

    @abstractmethod
    def _compute(self) -> T:
        """This method is called to get the metric values."""

    @property
    def current_split(self) -> Optional[str]:
        """The key of the collection that is being processed, if any."""
        return self._current_split
