from dataclasses import dataclass

import numpy as np

STD_FLOOR = 1e-8


@dataclass
class RunningMeanStd:
    """
    Exact running mean and (population) variance, merged batch by batch.
    Works on scalars (shape ()) or on vectors.
    """
    mean: np.ndarray
    var: np.ndarray
    count: float = 0.0

    @classmethod
    def create(cls, shape=()):
        return cls(mean=np.zeros(shape), var=np.ones(shape), count=0.0)

    @property
    def std(self):
        return np.maximum(np.sqrt(self.var), STD_FLOOR)

    def update(self, values):
        values = np.asarray(values, dtype=np.float64)
        values = values.reshape((-1,) + self.mean.shape)
        n = values.shape[0]
        if n == 0:
            return self
        batch_mean = values.mean(axis=0)
        batch_var = values.var(axis=0)
        if self.count == 0:
            mean, var = batch_mean, batch_var
        else:
            total = self.count + n
            delta = batch_mean - self.mean
            mean = self.mean + delta * n / total
            m2 = self.var * self.count + batch_var * n + delta ** 2 * self.count * n / total
            var = m2 / total
        return RunningMeanStd(mean=np.asarray(mean, dtype=np.float64), var=np.asarray(var, dtype=np.float64), count=self.count + n)

    def copy(self):
        return RunningMeanStd(self.mean.copy(), self.var.copy(), self.count)

    def to_array(self):
        return np.concatenate([np.atleast_1d(self.mean).ravel(), np.atleast_1d(self.var).ravel(), [self.count]])

    @classmethod
    def from_array(cls, array, shape=()):
        size = int(np.prod(shape)) if shape else 1
        return cls(
            mean=np.asarray(array[:size]).reshape(shape).copy(),
            var=np.asarray(array[size:2 * size]).reshape(shape).copy(),
            count=float(array[2 * size]),
        )


class ValueNormalizer(RunningMeanStd):
    """Running statistics of return targets; the critic regresses normalized returns"""

    @classmethod
    def create(cls, shape=()):
        return cls(mean=np.zeros(shape), var=np.ones(shape), count=0.0)

    def update(self, values):
        updated = super().update(values)
        return ValueNormalizer(updated.mean, updated.var, updated.count)

    def copy(self):
        return ValueNormalizer(self.mean.copy(), self.var.copy(), self.count)

    @classmethod
    def from_array(cls, array, shape=()):
        stats = RunningMeanStd.from_array(array, shape)
        return cls(stats.mean, stats.var, stats.count)

    def normalize(self, x):
        return (np.asarray(x, dtype=np.float64) - self.mean) / self.std

    def denormalize(self, x):
        return np.asarray(x, dtype=np.float64) * self.std + self.mean
