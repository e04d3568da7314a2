"""Passage-time distribution analysis.

Histograms, inverse-Gaussian and Gumbel fits (maximum likelihood and
histogram least squares), fit-quality scoring against the first four
moments, rescaled-histogram overlap, and the s = lambda/mu**2 ratio
with its linear laws in the coupling.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

# crossover timescale separating weak- and strong-pulse behaviour
TAU_C = 0.5

_BIN_MIN, _BIN_MAX = 20, 200
_MAX_EXCLUDED_FRACTION = 0.05


class FitError(RuntimeError):
    """Degenerate input or non-convergent fit."""


@dataclass(frozen=True)
class Histogram:
    bin_edges: np.ndarray
    counts: np.ndarray
    total: int

    def __post_init__(self):
        edges = np.asarray(self.bin_edges, dtype=float)
        counts = np.asarray(self.counts)
        if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
            raise ValueError("bin_edges must be strictly ascending with >= 2 entries")
        if counts.shape != (edges.size - 1,) or np.any(counts < 0):
            raise ValueError("counts must be nonnegative, one per bin")
        if int(counts.sum()) != int(self.total):
            raise ValueError("total must equal the sum of counts")
        object.__setattr__(self, "bin_edges", edges)
        object.__setattr__(self, "counts", counts.astype(np.int64))
        object.__setattr__(self, "total", int(self.total))

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[1:] + self.bin_edges[:-1])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.bin_edges)

    @property
    def density(self) -> np.ndarray:
        if self.total == 0:
            return np.zeros_like(self.widths)
        return self.counts / (self.total * self.widths)


@dataclass(frozen=True)
class IGParams:
    mu: float
    lam: float

    def __post_init__(self):
        if not (self.mu > 0 and self.lam > 0):
            raise ValueError(f"inverse-Gaussian parameters must be positive, got {self}")


@dataclass(frozen=True)
class GumbelParams:
    mu: float
    lam: float

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"Gumbel scale must be positive, got {self}")


@dataclass(frozen=True)
class FitQuality:
    residual_sum: float
    # relative errors of (mean, variance, skew, kurtosis) vs the sample
    moment_errors: tuple

    def __post_init__(self):
        if self.residual_sum < 0:
            raise ValueError("residual_sum must be nonnegative")


def clean_times(times) -> tuple:
    """Drop absent entries; (finite array, n_excluded).

    More than 5% exclusions means the ensemble cannot support a fit.
    """
    arr = np.asarray(times, dtype=float).ravel()
    if arr.size == 0:
        raise FitError("no samples")
    finite = arr[np.isfinite(arr)]
    n_excluded = arr.size - finite.size
    if n_excluded > _MAX_EXCLUDED_FRACTION * arr.size:
        raise FitError(
            f"{n_excluded} of {arr.size} samples are absent; exceeding 5% "
            "invalidates the fit"
        )
    return finite, int(n_excluded)


def freedman_diaconis_bins(times: np.ndarray) -> int:
    q75, q25 = np.percentile(times, [75, 25])
    iqr = q75 - q25
    span = times.max() - times.min()
    if iqr <= 0 or span <= 0:
        return _BIN_MIN
    width = 2.0 * iqr * times.size ** (-1.0 / 3.0)
    return int(np.clip(np.ceil(span / width), _BIN_MIN, _BIN_MAX))


def histogram(times, bins: int | None = None) -> Histogram:
    """Histogram of finite entries; non-finite entries are dropped."""
    arr = np.asarray(times, dtype=float).ravel()
    arr = arr[np.isfinite(arr)]
    if arr.size == 0:
        raise ValueError("cannot histogram an empty or all-absent sample set")
    if bins is None:
        bins = freedman_diaconis_bins(arr)
    counts, edges = np.histogram(arr, bins=bins)
    return Histogram(bin_edges=edges, counts=counts, total=int(arr.size))


def scaled_histogram(samples, gamma: float, bins: int | None = None) -> Histogram:
    """Histogram of the rescaled passage times gamma * T."""
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    arr = np.asarray(samples, dtype=float).ravel()
    return histogram(gamma * arr, bins=bins)


def ig_pdf(t, params: IGParams):
    """Inverse-Gaussian density; zero for t <= 0."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    tp = t[pos]
    with np.errstate(over="ignore"):
        out[pos] = np.sqrt(params.lam / (2.0 * np.pi * tp**3)) * np.exp(
            -params.lam * (tp - params.mu) ** 2 / (2.0 * params.mu**2 * tp)
        )
    return out if out.ndim else float(out)


def gumbel_pdf(t, params: GumbelParams):
    t = np.asarray(t, dtype=float)
    z = (t - params.mu) / params.lam
    with np.errstate(over="ignore"):
        out = np.exp(-z - np.exp(-z)) / params.lam
    return out if out.ndim else float(out)


def ig_cdf(t, params: IGParams):
    """Closed form via the normal CDF; used for goodness-of-fit tests."""
    from scipy.special import ndtr

    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    tp = t[pos]
    rt = np.sqrt(params.lam / tp)
    ratio = tp / params.mu
    out[pos] = ndtr(rt * (ratio - 1.0)) + np.exp(2.0 * params.lam / params.mu) * ndtr(
        -rt * (ratio + 1.0)
    )
    return out if out.ndim else float(out)


def ig_moments(params: IGParams) -> tuple:
    """(mean, variance, skew) of the inverse Gaussian."""
    mean = params.mu
    variance = params.mu**3 / params.lam
    skew = 3.0 * np.sqrt(params.mu / params.lam)
    return mean, variance, skew


def fit_ig_mle(samples) -> IGParams:
    """Closed-form maximum likelihood: mu = mean, lam = n / sum(1/T - 1/mu)."""
    times, _ = clean_times(samples)
    if times.size < 2:
        raise FitError("need at least two samples")
    if np.any(times <= 0):
        raise ValueError("inverse-Gaussian samples must be positive")
    mu = float(times.mean())
    denom = float(np.sum(1.0 / times - 1.0 / mu))
    if denom <= 0:
        raise FitError("zero-dispersion samples admit no inverse-Gaussian fit")
    return IGParams(mu=mu, lam=times.size / denom)


def _hist_sample_moments(hist: Histogram) -> tuple:
    """Moments of the binned sample, bin centers standing in for values."""
    if hist.total == 0:
        raise FitError("empty histogram")
    w = hist.counts / hist.total
    x = hist.centers
    mean = float(np.sum(w * x))
    d = x - mean
    m2 = float(np.sum(w * d**2))
    m3 = float(np.sum(w * d**3))
    m4 = float(np.sum(w * d**4))
    return mean, m2, m3, m4


def _require_fittable(hist: Histogram):
    if int(np.count_nonzero(hist.counts)) < 5:
        raise FitError("need at least 5 nonempty bins to fit a histogram")
    mean, var, _, _ = _hist_sample_moments(hist)
    if var <= 0:
        raise FitError("zero-variance histogram")
    return mean, var


def _lsq(residual, x0, bounds):
    res = least_squares(residual, x0=x0, bounds=bounds, xtol=1e-14, ftol=1e-14, gtol=1e-14, max_nfev=4000)
    # trf reports success for small-step termination; anything else is a real failure
    if not res.success:
        raise FitError(f"least-squares fit did not converge: {res.message}")
    return res.x


def fit_ig_lsq(hist: Histogram) -> IGParams:
    """Least-squares fit of the inverse-Gaussian density to bin densities."""
    mean, var = _require_fittable(hist)
    if mean <= 0:
        raise FitError("binned sample mean must be positive for an inverse-Gaussian fit")
    x0 = np.array([mean, mean**3 / var])
    centers, density = hist.centers, hist.density

    def residual(x):
        return density - ig_pdf(centers, IGParams(mu=x[0], lam=x[1]))

    tiny = 1e-12
    sol = _lsq(residual, x0, bounds=([tiny, tiny], [np.inf, np.inf]))
    return IGParams(mu=float(sol[0]), lam=float(sol[1]))


def fit_gumbel_lsq(hist: Histogram) -> GumbelParams:
    """Least-squares Gumbel fit, started from method-of-moments estimates."""
    mean, var = _require_fittable(hist)
    lam0 = np.sqrt(6.0 * var) / np.pi
    mu0 = mean - np.euler_gamma * lam0
    centers, density = hist.centers, hist.density

    def residual(x):
        return density - gumbel_pdf(centers, GumbelParams(mu=x[0], lam=x[1]))

    sol = _lsq(residual, np.array([mu0, lam0]), bounds=([-np.inf, 1e-12], [np.inf, np.inf]))
    return GumbelParams(mu=float(sol[0]), lam=float(sol[1]))


def cross_check_ig(mle: IGParams, lsq: IGParams) -> float:
    """Warn when the two estimators disagree by more than 10%."""
    disc = max(abs(lsq.mu - mle.mu) / mle.mu, abs(lsq.lam - mle.lam) / mle.lam)
    if disc > 0.10:
        warnings.warn(
            f"inverse-Gaussian MLE and least-squares fits disagree by {disc:.1%}; "
            "the histogram may be under-resolved or the model misspecified",
            stacklevel=2,
        )
    return float(disc)


def _pdf_moments(pdf, lo: float, hi: float) -> tuple:
    """First four moments of a density by trapezoid quadrature on [lo, hi]."""
    span = hi - lo
    grid = np.linspace(lo - 2.0 * span, hi + 6.0 * span, 100_001)
    f = np.asarray(pdf(grid), dtype=float)
    z = np.trapezoid(f, grid)
    if not z > 0:
        raise FitError("density integrates to zero on the evaluation window")
    mean = np.trapezoid(f * grid, grid) / z
    d = grid - mean
    m2 = np.trapezoid(f * d**2, grid) / z
    m3 = np.trapezoid(f * d**3, grid) / z
    m4 = np.trapezoid(f * d**4, grid) / z
    return float(mean), float(m2), float(m3), float(m4)


def fit_quality(hist: Histogram, pdf) -> FitQuality:
    """Squared-density residual plus relative errors of four moments.

    pdf is any vectorized density callable; moments of the model are
    computed by quadrature so the score works for either candidate
    distribution without special cases.
    """
    density = hist.density
    residual_sum = float(np.sum((density - np.asarray(pdf(hist.centers))) ** 2))
    s_mean, s_m2, s_m3, s_m4 = _hist_sample_moments(hist)
    m_mean, m_m2, m_m3, m_m4 = _pdf_moments(pdf, hist.bin_edges[0], hist.bin_edges[-1])

    def rel(model, sample):
        return abs(model - sample) / max(abs(sample), 1e-300)

    errors = (
        rel(m_mean, s_mean),
        rel(m_m2, s_m2),
        rel(m_m3 / m_m2**1.5, s_m3 / s_m2**1.5),
        rel(m_m4 / m_m2**2, s_m4 / s_m2**2),
    )
    return FitQuality(residual_sum=residual_sum, moment_errors=errors)


def _density_on(hist: Histogram, x: np.ndarray) -> np.ndarray:
    """Step-function density evaluated at points x, zero outside support."""
    d = hist.density
    idx = np.searchsorted(hist.bin_edges, x, side="right") - 1
    inside = (idx >= 0) & (idx < d.size) & (x < hist.bin_edges[-1])
    out = np.zeros_like(x)
    out[inside] = d[idx[inside]]
    return out


def overlap(h1: Histogram, h2: Histogram) -> float:
    """Normalized squared inner product of two histogram densities.

    Both step functions are integrated exactly on the union of their bin
    edges, so the result does not depend on any resampling resolution.
    Cauchy-Schwarz bounds it to [0, 1], with 1 exactly when the
    densities are proportional.
    """
    if h1.total == 0 or h2.total == 0:
        raise ValueError("overlap of an empty histogram is undefined")
    edges = np.union1d(h1.bin_edges, h2.bin_edges)
    mids = 0.5 * (edges[1:] + edges[:-1])
    w = np.diff(edges)
    d1 = _density_on(h1, mids)
    d2 = _density_on(h2, mids)
    i12 = np.sum(d1 * d2 * w)
    i11 = np.sum(d1 * d1 * w)
    i22 = np.sum(d2 * d2 * w)
    return float(np.clip(i12 * i12 / (i11 * i22), 0.0, 1.0))


def s_ratio(params: IGParams) -> float:
    """s = lam / mu**2, identical to mean/variance for this family."""
    return params.lam / params.mu**2


def classify_regime(mean_time: float) -> str:
    """weak above 2*TAU_C, strong below TAU_C/2, transient between."""
    if mean_time > 2.0 * TAU_C:
        return "weak"
    if mean_time < 0.5 * TAU_C:
        return "strong"
    return "transient"


def fit_s_vs_gamma(points, regime: str) -> tuple:
    """Linear law s(gamma) per regime: weak is forced through the origin."""
    pts = np.asarray(list(points), dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 2 or pts.shape[1] != 2:
        raise FitError("need at least two (gamma, s) points")
    g, s = pts[:, 0], pts[:, 1]
    if regime == "weak":
        slope = float(np.sum(g * s) / np.sum(g * g))
        return slope, 0.0
    if regime == "strong":
        slope, intercept = np.polyfit(g, s, 1)
        return float(slope), float(intercept)
    raise ValueError(f"regime must be 'weak' or 'strong', got {regime!r}")


def ks_statistic(samples, cdf) -> float:
    """Sup distance between the empirical CDF and a model CDF."""
    times = np.sort(np.asarray(samples, dtype=float).ravel())
    if times.size == 0:
        raise ValueError("need at least one sample")
    if not np.all(np.isfinite(times)):
        raise ValueError("samples must be finite")
    n = times.size
    f = np.asarray(cdf(times), dtype=float)
    steps_hi = np.arange(1, n + 1) / n
    steps_lo = np.arange(0, n) / n
    return float(max(np.max(steps_hi - f), np.max(f - steps_lo)))


def fit_report(
    distribution: str,
    method: str,
    params,
    quality: FitQuality,
    n_samples: int,
    n_excluded: int,
) -> dict:
    """JSON-ready record of one fit."""
    return {
        "distribution": distribution,
        "method": method,
        "mu": float(params.mu),
        "lambda": float(params.lam),
        "residual_sum": float(quality.residual_sum),
        "moment_errors": {
            "mean": float(quality.moment_errors[0]),
            "variance": float(quality.moment_errors[1]),
            "skew": float(quality.moment_errors[2]),
            "kurtosis": float(quality.moment_errors[3]),
        },
        "n_samples": int(n_samples),
        "n_excluded": int(n_excluded),
    }
