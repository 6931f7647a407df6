"""Monte-Carlo estimates and associative aggregation."""

from dataclasses import asdict, dataclass
import math

import numpy as np


@dataclass(frozen=True)
class Estimate:
    """A Monte-Carlo estimate with its standard error."""

    mean: float
    stderr: float
    n_samples: int
    seed: int | None = None

    def __post_init__(self):
        if self.stderr < 0 or math.isnan(self.stderr):
            raise ValueError(f"stderr must be >= 0, got {self.stderr}")
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")

    def z_to(self, other):
        """Difference to ``other`` (Estimate or float) in combined stderr units."""
        if isinstance(other, Estimate):
            se = math.hypot(self.stderr, other.stderr)
            diff = self.mean - other.mean
        else:
            se = self.stderr
            diff = self.mean - float(other)
        if se == 0:
            return 0.0 if diff == 0 else math.copysign(math.inf, diff)
        return diff / se

    def agrees(self, other, k=4.0):
        return abs(self.z_to(other)) <= k

    def to_dict(self):
        return asdict(self)


def bernoulli_estimate(successes, n, seed=None):
    """Frequency estimate with binomial stderr."""
    n = int(n)
    p = successes / n
    return Estimate(float(p), float(math.sqrt(max(p * (1 - p), 0.0) / n)), n, seed)


def mean_estimate(values, seed=None):
    values = np.asarray(values, dtype=np.float64)
    n = values.size
    se = float(values.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return Estimate(float(values.mean()), se, int(n), seed)


@dataclass
class RunningStats:
    """Streaming count/mean/M2 with the pairwise (Chan) merge.

    Merging is associative, so the result does not depend on how
    replicates were split across workers.
    """

    count: int = 0
    mean: float = 0.0
    m2: float = 0.0

    @classmethod
    def of(cls, values):
        values = np.asarray(values, dtype=np.float64)
        if values.size == 0:
            return cls()
        mu = float(values.mean())
        return cls(int(values.size), mu, float(((values - mu) ** 2).sum()))

    def merge(self, other):
        if other.count == 0:
            return RunningStats(self.count, self.mean, self.m2)
        if self.count == 0:
            return RunningStats(other.count, other.mean, other.m2)
        n = self.count + other.count
        delta = other.mean - self.mean
        mean = self.mean + delta * other.count / n
        m2 = self.m2 + other.m2 + delta * delta * self.count * other.count / n
        return RunningStats(n, mean, m2)

    @property
    def variance(self):
        return self.m2 / (self.count - 1) if self.count > 1 else 0.0

    def estimate(self, seed=None):
        se = math.sqrt(self.variance / self.count) if self.count > 1 else 0.0
        return Estimate(self.mean, se, self.count, seed)


def ratio_estimate(numerators, denominators, seed=None):
    """Ratio of sums over independent replicates, delta-method stderr.

    Used for conditional probabilities estimated by rejection: replicate
    ``r`` contributes ``denominators[r]`` accepted trials and
    ``numerators[r]`` successes among them.
    """
    num = np.asarray(numerators, dtype=np.float64)
    den = np.asarray(denominators, dtype=np.float64)
    k = num.size
    total = den.sum()
    if total <= 0:
        raise ZeroDivisionError("no accepted trials")
    r = num.sum() / total
    if k < 2:
        return Estimate(float(r), 0.0, max(int(total), 1), seed)
    resid = num - r * den
    var = k / (k - 1) * (resid ** 2).sum() / total ** 2
    return Estimate(float(r), float(math.sqrt(var)), max(int(total), 1), seed)


def jackknife(statistic, groups, seed=None):
    """Delete-one-group jackknife for a statistic of pooled samples.

    ``groups`` is a list of arrays (independent units, e.g. chains);
    ``statistic`` maps a pooled array to a float.
    """
    k = len(groups)
    pooled = np.concatenate(groups)
    full = float(statistic(pooled))
    if k < 2:
        return Estimate(full, 0.0, int(pooled.shape[0]), seed)
    leave = np.array([
        statistic(np.concatenate(groups[:i] + groups[i + 1:])) for i in range(k)
    ])
    var = (k - 1) / k * ((leave - leave.mean()) ** 2).sum()
    return Estimate(full, float(math.sqrt(var)), int(pooled.shape[0]), seed)


class InfeasibleConditioning(RuntimeError):
    """Rejection sampling would need a conditioning event below the floor."""

    def __init__(self, measured, floor, detail=""):
        self.measured = measured
        self.floor = floor
        msg = f"conditioning probability {measured:.3g} below floor {floor:.3g}"
        super().__init__(f"{msg} ({detail})" if detail else msg)
