import math

import numpy as np
from scipy import stats


def poisson_pmf(k, mu):
    return math.exp(-mu + k * math.log(mu) - math.lgamma(k + 1)) if mu > 0 else float(k == 0)


def geometric_pmf(k, nbar):
    return (nbar / (1 + nbar)) ** k / (1 + nbar)


def negbin_pmf(k, nbar, m):
    logp = (math.lgamma(k + m) - math.lgamma(m) - math.lgamma(k + 1)
            + m * math.log(m / (m + nbar)) + k * math.log(nbar / (m + nbar)))
    return math.exp(logp)


def chisquare_gof(samples, pmf, min_expected=5.0):
    """Chi-square goodness of fit of integer samples against a pmf callable.

    Cells are pooled from the tail until every expected count is at least
    ``min_expected``; the last cell absorbs the remaining probability.
    """
    samples = np.asarray(samples)
    n = samples.size
    kmax = int(samples.max()) + 1
    probs = [pmf(k) for k in range(kmax)]
    obs = np.bincount(samples, minlength=kmax).astype(float)
    exp_ = np.array(probs) * n
    # pool upper tail
    cells_o, cells_e = [], []
    acc_o = acc_e = 0.0
    for k in range(kmax):
        acc_o += obs[k]
        acc_e += exp_[k]
        if acc_e >= min_expected:
            cells_o.append(acc_o)
            cells_e.append(acc_e)
            acc_o = acc_e = 0.0
    tail_e = n - sum(cells_e)
    tail_o = acc_o
    if tail_e >= min_expected or not cells_e:
        cells_o.append(tail_o)
        cells_e.append(tail_e)
    else:
        cells_o[-1] += tail_o
        cells_e[-1] += tail_e
    cells_o, cells_e = np.array(cells_o), np.array(cells_e)
    if cells_o.size < 2:
        return 1.0
    chi2 = float(np.sum((cells_o - cells_e) ** 2 / cells_e))
    return float(stats.chi2.sf(chi2, cells_o.size - 1))


def batch_stderr(values_fn, samples, batches=100):
    """Standard error of a statistic from batch means."""
    parts = np.array_split(np.asarray(samples), batches)
    vals = np.array([values_fn(p) for p in parts])
    return vals.std(ddof=1) / math.sqrt(batches)


class FixedDraw:
    """Stand-in generator whose uniform draw is always ``value``."""

    def __init__(self, value):
        self.value = value

    def random(self, size=None):
        if size is None:
            return self.value
        return np.full(size, self.value)
