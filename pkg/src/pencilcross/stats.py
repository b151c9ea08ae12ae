"""Empirical distributions, Kolmogorov-Smirnov distances and tuple frequency tables."""
from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "EmpiricalDistribution",
    "FrequencyTable",
    "binomial_sigma",
    "empirical_cdf",
    "ks_critical",
    "ks_distance",
    "ks_two_sample",
    "ks_two_sample_critical",
    "one_per_pair",
    "tuple_frequencies",
    "write_cdf_csv",
]

# asymptotic Kolmogorov quantiles c(alpha): P(sqrt(n) D > c) = alpha
_KS_C = {0.10: 1.224, 0.05: 1.358, 0.01: 1.628, 0.001: 1.949}


@dataclass(frozen=True)
class EmpiricalDistribution:
    samples: np.ndarray

    def __post_init__(self):
        s = np.sort(np.asarray(self.samples, float).ravel())
        if s.size == 0:
            raise ValueError("need at least one sample")
        if np.isnan(s).any():
            raise ValueError("samples contain NaN")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @property
    def count(self) -> int:
        return self.samples.size

    def merge(self, other: "EmpiricalDistribution") -> "EmpiricalDistribution":
        return EmpiricalDistribution(np.concatenate([self.samples, other.samples]))


def _dist(d):
    return d if isinstance(d, EmpiricalDistribution) else EmpiricalDistribution(d)


def empirical_cdf(d, x):
    """Right-continuous step CDF ``#{s <= x} / N``."""
    d = _dist(d)
    out = np.searchsorted(d.samples, x, side="right") / d.count
    return out if np.ndim(out) else float(out)


def ks_distance(d, cdf):
    """``sup |F_N - F|``, checked on both sides of every step."""
    s = _dist(d).samples
    n = s.size
    f = np.asarray(cdf(s), float)
    k = np.arange(1, n + 1)
    return float(max(np.max(k / n - f), np.max(f - (k - 1) / n)))


def ks_two_sample(d1, d2):
    s1, s2 = _dist(d1).samples, _dist(d2).samples
    grid = np.concatenate([s1, s2])
    return float(np.max(np.abs(empirical_cdf(s1, grid) - empirical_cdf(s2, grid))))


def ks_critical(n, alpha=0.01):
    """Asymptotic one-sample critical value ``c(alpha) / sqrt(n)``."""
    return _KS_C[alpha] / np.sqrt(n)


def ks_two_sample_critical(n1, n2, alpha=0.01):
    return _KS_C[alpha] * np.sqrt((n1 + n2) / (n1 * n2))


def binomial_sigma(p, n):
    return float(np.sqrt(p * (1 - p) / n))


def one_per_pair(values, valid, rng):
    """Pick one entry uniformly from each row among ``valid`` ones; rows with none are skipped.

    Parameters
    ----------
    values : ndarray, shape (P, N)
    valid : ndarray of bool, shape (P, N)
    rng : numpy Generator
    """
    values = np.asarray(values)
    valid = np.asarray(valid, bool)
    cnt = valid.sum(1)
    keep = cnt > 0
    # k-th valid entry of each row, k uniform in [0, cnt)
    k = np.floor(rng.random(len(values)) * np.maximum(cnt, 1)).astype(int)
    rank = np.cumsum(valid, axis=1) - 1
    hit = valid & (rank == k[:, None])
    col = np.argmax(hit, axis=1)
    return values[np.arange(len(values)), col][keep]


@dataclass
class FrequencyTable:
    entries: Counter = field(default_factory=Counter)
    total: int = 0

    def add(self, key, count=1):
        self.entries[key] += count
        self.total += count

    def merge(self, other: "FrequencyTable") -> "FrequencyTable":
        out = FrequencyTable(Counter(self.entries), self.total)
        for k, v in other.entries.items():
            out.entries[k] += v
        out.total += other.total
        return out

    def frequency(self, key):
        return self.entries.get(key, 0) / self.total if self.total else 0.0

    def sigma(self, key):
        """Multinomial standard error of :meth:`frequency`."""
        return binomial_sigma(self.frequency(key), self.total) if self.total else 0.0

    def rows(self):
        """``(key, count, frequency)`` sorted by decreasing count, then key."""
        items = sorted(self.entries.items(), key=lambda kv: (-kv[1], kv[0]))
        return [(k, v, v / self.total if self.total else 0.0) for k, v in items]

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["tuple", "count", "frequency"])
            for k, v, f in self.rows():
                w.writerow([k, v, repr(float(f))])


def tuple_frequencies(records, universe=None) -> FrequencyTable:
    """Count valid records by their serialized tuple.

    With ``universe`` (an iterable of sequences) every admissible tuple gets a
    row, unseen ones with count 0.
    """
    modes = {r.mode for r in records}
    if len(modes) > 1:
        raise ValueError(f"records mix modes {sorted(modes)}")
    if any(not r.valid for r in records):
        raise ValueError("records must be valid")
    t = FrequencyTable()
    for s in universe or ():
        t.entries[str(s)] += 0
    for r in records:
        t.add(str(r.seq))
    return t


def write_cdf_csv(path, d, cdf=None):
    """Rows ``(x, F_N(x))``, plus the reference ``F(x)`` when given."""
    s = _dist(d).samples
    f = np.arange(1, s.size + 1) / s.size
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "ecdf"] + (["cdf"] if cdf else []))
        ref = np.asarray(cdf(s), float) if cdf else None
        for i in range(s.size):
            row = [f"{s[i]:.17g}", f"{f[i]:.17g}"]
            if cdf:
                row.append(f"{ref[i]:.17g}")
            w.writerow(row)
