"""Closed-form detector theory, estimators and simulation-vs-theory comparison."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats

Z95 = 1.959963984540054


class GridMismatchError(ValueError):
    pass


class NormalizationError(ValueError):
    """g2 normalization is undefined because a channel never clicked."""


def theory_click_probability(mu, eta, p_d):
    """Click probability of a gate holding a Poissonian pulse of mean ``mu``.

    1 - (1 - p_d) exp(-eta mu); no dead-time or afterpulse correction.
    """
    x = np.multiply(eta, mu)
    out = -np.expm1(-x) + np.multiply(p_d, np.exp(-x))
    return float(out) if np.ndim(out) == 0 else out


def theory_rate(mu, eta, p_d, f_ill):
    """Count rate in Hz for pulses at ``f_ill``; deliberately uncapped."""
    out = np.multiply(f_ill, theory_click_probability(mu, eta, p_d))
    return float(out) if np.ndim(out) == 0 else out


def theory_g2_multimode(mode_count):
    """Zero-delay g2 of M-mode thermal light, 1 + 1/M (M may be inf)."""
    out = 1.0 + 1.0 / np.asarray(mode_count, dtype=float)
    return float(out) if np.ndim(out) == 0 else out


def solve_flux_for_click_probability(p_click, eta, p_d):
    """Mean photon number that gives ``p_click`` under the Poissonian theory."""
    if not (p_d <= p_click < 1):
        raise ValueError(f"target click probability {p_click} not reachable with p_d={p_d}")
    if eta <= 0:
        raise ValueError("efficiency must be positive")
    return float(-np.log((1.0 - p_click) / (1.0 - p_d)) / eta)


@dataclass(frozen=True)
class TheoryCurve:
    mu: np.ndarray
    value: np.ndarray
    kind: str = "probability"
    params: dict = field(default_factory=dict)

    @classmethod
    def click_probability(cls, mu, eta, p_d):
        mu = np.asarray(mu, dtype=float)
        return cls(mu, np.atleast_1d(theory_click_probability(mu, eta, p_d)), "probability",
                   {"eta": eta, "p_d": p_d})

    @classmethod
    def rate(cls, mu, eta, p_d, f_ill):
        mu = np.asarray(mu, dtype=float)
        return cls(mu, np.atleast_1d(theory_rate(mu, eta, p_d, f_ill)), "rate",
                   {"eta": eta, "p_d": p_d, "f_ill": f_ill, "capped": False})


def estimate_proportion(successes, trials, z: float = Z95):
    """Point estimate and Wilson score interval; vectorizes over arrays."""
    k = np.asarray(successes, dtype=float)
    n = np.asarray(trials, dtype=float)
    if np.any(n <= 0) or np.any(k < 0) or np.any(k > n):
        raise ValueError("need 0 <= successes <= trials and trials > 0")
    p = k / n
    z2 = z * z
    denom = 1.0 + z2 / n
    centre = (p + z2 / (2 * n)) / denom
    half = z * np.sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / denom
    lo = np.where(k == 0, 0.0, np.clip(centre - half, 0.0, 1.0))
    hi = np.where(k == n, 1.0, np.clip(centre + half, 0.0, 1.0))
    if np.ndim(p) == 0:
        return float(p), (float(lo), float(hi))
    return p, (lo, hi)


def binomial_stderr(p, n):
    return np.sqrt(np.asarray(p) * (1 - np.asarray(p)) / np.asarray(n))


@dataclass(frozen=True)
class ComparisonReport:
    z: np.ndarray
    max_abs_z: float
    chi2: float
    dof: int
    p_value: float
    alpha: float
    z_threshold: float
    passed: bool
    signed_bias: float
    flags: dict = field(default_factory=dict)

    def summary(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return (f"{verdict}: max|z|={self.max_abs_z:.2f} (< {self.z_threshold:.2f}), "
                f"chi2={self.chi2:.2f}/{self.dof} p={self.p_value:.3g}, "
                f"bias={self.signed_bias:+.3%}")


def compare(x, value, stderr, theory: TheoryCurve, alpha: float = 0.01,
            z_threshold: float | None = None) -> ComparisonReport:
    """Pointwise z-scores and a chi-square test of simulated points against theory.

    No parameter is fitted, so the chi-square has one degree of freedom per
    point. The default z threshold is the Bonferroni two-sided bound at
    ``alpha``. ``signed_bias`` is the mean relative deviation sim/theory - 1,
    reported regardless of the verdict.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    value = np.atleast_1d(np.asarray(value, dtype=float))
    stderr = np.atleast_1d(np.asarray(stderr, dtype=float))
    if not (x.shape == value.shape == stderr.shape == theory.mu.shape) \
            or not np.allclose(x, theory.mu, rtol=1e-12, atol=0):
        raise GridMismatchError("simulation grid does not match theory grid")
    diff = value - theory.value
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(diff == 0, 0.0, diff / stderr)
        rel = np.where(theory.value > 0, value / theory.value - 1.0, 0.0)
    chi2 = float(np.sum(z * z))
    dof = int(x.size)
    p_value = float(stats.chi2.sf(chi2, dof)) if np.isfinite(chi2) else 0.0
    if z_threshold is None:
        z_threshold = float(stats.norm.isf(alpha / (2 * dof)))
    max_abs_z = float(np.max(np.abs(z))) if z.size else 0.0
    passed = bool(max_abs_z < z_threshold and p_value > alpha)
    flags = {k: v for k, v in theory.params.items() if k == "capped"}
    return ComparisonReport(z, max_abs_z, chi2, dof, p_value, alpha, z_threshold, passed,
                            float(np.mean(rel)), flags)


def flatness_test(value, stderr):
    """Chi-square of points about their inverse-variance weighted mean.

    Returns ``(weighted_mean, chi2, dof, p_value)``.
    """
    value = np.asarray(value, dtype=float)
    w = 1.0 / np.asarray(stderr, dtype=float) ** 2
    mean = float(np.sum(w * value) / np.sum(w))
    chi2 = float(np.sum(w * (value - mean) ** 2))
    dof = value.size - 1
    return mean, chi2, dof, float(stats.chi2.sf(chi2, dof))


def count_common(a, b):
    """Number of common values of two sorted unique arrays."""
    i = np.searchsorted(b, a)
    ok = i < b.size
    return int(np.count_nonzero(b[i[ok]] == a[ok]))


@dataclass(frozen=True)
class G2Estimate:
    lags: np.ndarray
    g2: np.ndarray
    stderr: np.ndarray
    coincidences: np.ndarray
    singles_a: int
    singles_b: int
    pulses: int
    normalization: str


def estimate_g2(a_idx, b_idx, pulses: int, max_lag: int,
                normalization: str = "singles") -> G2Estimate:
    """g2(m) = <A_i B_{i+m}> / (<A><B>) from sorted pulse indices of clicks.

    ``normalization="singles"`` divides by the product of singles rates;
    ``"long_lag"`` divides by the mean coincidence rate over lags
    ``max_lag < |m| <= 2 max_lag`` instead. Standard errors use the delta
    method with Poisson counts.
    """
    a_idx = np.asarray(a_idx, dtype=np.int64)
    b_idx = np.asarray(b_idx, dtype=np.int64)
    n_a, n_b = a_idx.size, b_idx.size
    if n_a == 0 or n_b == 0:
        raise NormalizationError("a channel recorded no clicks; g2 is undefined")
    span = 2 * max_lag if normalization == "long_lag" else max_lag
    if normalization not in ("singles", "long_lag"):
        raise ValueError(f"unknown normalization {normalization!r}")
    all_lags = np.arange(-span, span + 1)
    counts = np.array([count_common(a_idx + m, b_idx) for m in all_lags], dtype=np.int64)
    pairs = pulses - np.abs(all_lags)
    rate = counts / pairs
    central = np.abs(all_lags) <= max_lag
    lags = all_lags[central]
    c = counts[central]
    if normalization == "singles":
        norm = (n_a / pulses) * (n_b / pulses)
        g2 = rate[central] / norm
        rel_var = 1.0 / np.maximum(c, 1) + 1.0 / n_a + 1.0 / n_b
    else:
        ref_counts = counts[~central]
        norm = float(np.sum(ref_counts) / np.sum(pairs[~central]))
        if norm == 0:
            raise NormalizationError("no coincidences at long lags")
        g2 = rate[central] / norm
        rel_var = 1.0 / np.maximum(c, 1) + 1.0 / np.sum(ref_counts)
    # with no coincidences, quote the g2 value one count would have produced
    stderr = np.where(c > 0, g2 * np.sqrt(rel_var), 1.0 / (norm * pairs[central]))
    return G2Estimate(lags, g2, stderr, c, n_a, n_b, pulses, normalization)
