import numpy as np
import torch
from torchmetrics.aggregation import BaseAggregator


def _difference(prediction, reference) -> torch.Tensor:
    difference = np.abs(np.asarray(prediction) - np.asarray(reference)).reshape(-1)
    return torch.from_numpy(np.ascontiguousarray(difference, dtype=np.float64))


class DeviationMetric(BaseAggregator):
    """
    Streaming aggregator over pointwise differences of two trajectories. Call :meth:`update` with
    matching slices, then :meth:`compute`; :meth:`reset` starts over. Complex inputs are compared
    by modulus. States are kept in double precision.
    """

    def __iter__(self):
        pass

    def __init__(self, fn: str):
        super().__init__(fn=fn, default_value=torch.tensor(0.0, dtype=torch.float64), nan_strategy="error")
        self.add_state("total_count", default=torch.tensor(0, dtype=torch.long), dist_reduce_fx="sum")

    def update(self, prediction, reference) -> None:  # type: ignore
        difference = _difference(prediction, reference)
        if difference.numel():
            self._accumulate(difference)
        self.total_count += difference.numel()

    def _accumulate(self, difference: torch.Tensor) -> None:
        raise NotImplementedError()


class MaxAbsDeviation(DeviationMetric):
    def __init__(self):
        super().__init__(fn="max")

    def _accumulate(self, difference: torch.Tensor) -> None:
        self.value = torch.maximum(self.value, difference.max())

    def compute(self) -> float:
        return float(self.value)


class RmsDeviation(DeviationMetric):
    def __init__(self):
        super().__init__(fn="sum")

    def _accumulate(self, difference: torch.Tensor) -> None:
        self.value += torch.dot(difference, difference)

    def compute(self) -> float:
        if int(self.total_count) == 0:
            return 0.0
        return float(torch.sqrt(self.value / self.total_count))
