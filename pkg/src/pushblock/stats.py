"""Count-based empirical distributions and the decision tests the
verification harnesses rely on.

All observables in this package are integers, so histograms are exact and
accumulators merge without binning error.  Chi-square (with tail pooling)
and total variation are the decision tests; the discrete KS statistic is
reported as a descriptive quantity only.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.stats import chi2 as _chi2

from .core import Seed

_TAG_BOOT = 41


@dataclass
class EmpiricalDist:
    counts: Counter = field(default_factory=Counter)
    total: int = 0

    def add(self, value: int, count: int = 1) -> None:
        self.counts[int(value)] += count
        self.total += count

    @classmethod
    def from_samples(cls, values: Iterable[int]) -> "EmpiricalDist":
        d = cls()
        for v in values:
            d.add(int(v))
        return d

    def pmf(self, k: int) -> float:
        if self.total == 0:
            return 0.0
        return self.counts.get(k, 0) / self.total

    def support(self) -> list[int]:
        return sorted(self.counts)

    def copy(self) -> "EmpiricalDist":
        return EmpiricalDist(counts=Counter(self.counts), total=self.total)


def merge(a: EmpiricalDist, b: EmpiricalDist) -> EmpiricalDist:
    """Pointwise count addition; associative and commutative."""
    out = a.copy()
    for k, c in b.counts.items():
        out.counts[k] += c
    out.total += b.total
    return out


def tv_distance(a: EmpiricalDist, b: EmpiricalDist) -> float:
    """Half the L1 distance between the two empirical pmfs."""
    if a.total == 0 or b.total == 0:
        raise ValueError("empty distribution")
    keys = set(a.counts) | set(b.counts)
    return 0.5 * sum(abs(a.pmf(k) - b.pmf(k)) for k in keys)


def ks_statistic(a: EmpiricalDist, b: EmpiricalDist) -> float:
    """Max CDF gap on the union support (descriptive for discrete data)."""
    if a.total == 0 or b.total == 0:
        raise ValueError("empty distribution")
    keys = sorted(set(a.counts) | set(b.counts))
    ca = cb = 0.0
    worst = 0.0
    for k in keys:
        ca += a.pmf(k)
        cb += b.pmf(k)
        worst = max(worst, abs(ca - cb))
    return worst


def _pool_expected(observed: list[int], expected: list[float],
                   min_expected: float = 5.0) -> tuple[list[int], list[float]]:
    """Merge adjacent bins until every pooled bin has expected >= min_expected."""
    obs_p: list[int] = []
    exp_p: list[float] = []
    acc_o, acc_e = 0, 0.0
    for o, e in zip(observed, expected):
        acc_o += o
        acc_e += e
        if acc_e >= min_expected:
            obs_p.append(acc_o)
            exp_p.append(acc_e)
            acc_o, acc_e = 0, 0.0
    if acc_e > 0 or acc_o > 0:
        if exp_p:
            obs_p[-1] += acc_o
            exp_p[-1] += acc_e
        else:
            obs_p.append(acc_o)
            exp_p.append(acc_e)
    return obs_p, exp_p


def chi2_test(dist: EmpiricalDist, ref_pmf: Callable[[int], float],
              tail_mass_cut: float = 1e-12) -> tuple[float, float]:
    """One-sample chi-square of integer counts against a reference pmf.

    Bins with expected count below 5 are pooled into their neighbours; the
    right tail beyond the data is folded into the last bin.  Returns
    (statistic, p-value).
    """
    if dist.total == 0:
        raise ValueError("empty distribution")
    kmax = max(dist.support())
    # Extend the support until the remaining reference tail is negligible.
    ks = list(range(0, kmax + 1))
    probs = [ref_pmf(k) for k in ks]
    while 1.0 - sum(probs) > tail_mass_cut and len(ks) < kmax + 400:
        ks.append(ks[-1] + 1)
        probs.append(ref_pmf(ks[-1]))
    tail = max(0.0, 1.0 - sum(probs))
    observed = [dist.counts.get(k, 0) for k in ks]
    expected = [p * dist.total for p in probs]
    expected[-1] += tail * dist.total
    obs_p, exp_p = _pool_expected(observed, expected)
    if len(obs_p) < 2:
        raise ValueError("reference too concentrated to test")
    stat = sum((o - e) ** 2 / e for o, e in zip(obs_p, exp_p))
    dof = len(obs_p) - 1
    return stat, float(_chi2.sf(stat, dof))


def chi2_two_sample(a: EmpiricalDist, b: EmpiricalDist) -> tuple[float, float]:
    """Two-sample chi-square on pooled integer bins (contingency 2 x K)."""
    if a.total == 0 or b.total == 0:
        raise ValueError("empty distribution")
    keys = sorted(set(a.counts) | set(b.counts))
    na, nb = a.total, b.total
    grand = na + nb
    # Pool adjacent bins until both expected counts clear the threshold.
    pooled: list[tuple[int, int]] = []
    acc_a = acc_b = 0
    for k in keys:
        acc_a += a.counts.get(k, 0)
        acc_b += b.counts.get(k, 0)
        combined = acc_a + acc_b
        if combined * na / grand >= 5.0 and combined * nb / grand >= 5.0:
            pooled.append((acc_a, acc_b))
            acc_a = acc_b = 0
    if acc_a or acc_b:
        if pooled:
            last = pooled.pop()
            pooled.append((last[0] + acc_a, last[1] + acc_b))
        else:
            pooled.append((acc_a, acc_b))
    if len(pooled) < 2:
        return 0.0, 1.0
    stat = 0.0
    for oa, ob in pooled:
        tot = oa + ob
        ea = tot * na / grand
        eb = tot * nb / grand
        stat += (oa - ea) ** 2 / ea + (ob - eb) ** 2 / eb
    dof = len(pooled) - 1
    return stat, float(_chi2.sf(stat, dof))


def bootstrap_tv(a: EmpiricalDist, b: EmpiricalDist, n_boot: int,
                 seed: Seed) -> tuple[float, float]:
    """Null distribution of the TV statistic by pooled resampling.

    Both samples are redrawn from the pooled pmf; returns the mean and
    standard deviation of the resampled TV values.  The observed TV is
    compatible with equality when it does not exceed mean + 3 sd.
    """
    if a.total == 0 or b.total == 0:
        raise ValueError("empty distribution")
    keys = sorted(set(a.counts) | set(b.counts))
    pooled = np.array([a.counts.get(k, 0) + b.counts.get(k, 0) for k in keys],
                      dtype=float)
    pooled /= pooled.sum()
    rng = seed.generator(_TAG_BOOT)
    tvs = np.empty(n_boot)
    for m in range(n_boot):
        ca = rng.multinomial(a.total, pooled) / a.total
        cb = rng.multinomial(b.total, pooled) / b.total
        tvs[m] = 0.5 * np.abs(ca - cb).sum()
    return float(tvs.mean()), float(tvs.std())


def tv_within_noise(a: EmpiricalDist, b: EmpiricalDist, seed: Seed,
                    n_boot: int = 200, sigmas: float = 3.0) -> tuple[bool, float, float]:
    """(ok, observed TV, threshold) under the pooled bootstrap null."""
    obs = tv_distance(a, b)
    mean, sd = bootstrap_tv(a, b, n_boot, seed)
    threshold = mean + sigmas * sd
    return obs <= threshold, obs, threshold


@dataclass
class Moments:
    mean: float
    variance: float
    se_mean: float
    se_variance: float
    n: int


def moment_ci(samples: Sequence[float]) -> Moments:
    """Unbiased mean/variance with standard errors (4th-moment based for s^2)."""
    xs = np.asarray(samples, dtype=float)
    n = xs.size
    if n < 2:
        raise ValueError("need at least two samples")
    mean = float(xs.mean())
    var = float(xs.var(ddof=1))
    centered = xs - mean
    m2 = float((centered**2).mean())
    m4 = float((centered**4).mean())
    var_of_var = (m4 - (n - 3) / (n - 1) * m2 * m2) / n
    return Moments(mean=mean, variance=var,
                   se_mean=math.sqrt(var / n),
                   se_variance=math.sqrt(max(var_of_var, 0.0)),
                   n=n)


def dist_moments(dist: EmpiricalDist) -> Moments:
    """Moments computed exactly from integer counts (merge-invariant)."""
    xs = np.repeat(np.fromiter(dist.counts.keys(), dtype=float, count=len(dist.counts)),
                   np.fromiter(dist.counts.values(), dtype=int, count=len(dist.counts)))
    return moment_ci(xs)


def export_histogram_csv(dist: EmpiricalDist, header_meta: str = "") -> str:
    lines = [f"# pushblock.histogram.v1 {header_meta}".rstrip(), "value,count"]
    for k in dist.support():
        lines.append(f"{k},{dist.counts[k]}")
    return "\n".join(lines) + "\n"


def import_histogram_csv(text: str) -> EmpiricalDist:
    d = EmpiricalDist()
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#") or line.startswith("value,"):
            continue
        k, c = line.split(",")
        d.add(int(k), int(c))
    return d
