"""
Per-IMF features: mean period, correlation with the original series,
variance share, and horizon group.

Undefined quantities (no peaks, constant input, all-zero IMFs) come back as
``None`` rather than a placeholder number.
"""

import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
from scipy import stats

from .emd import find_extrema
from .errors import ValidationError

HORIZONS = ("short", "medium", "long")

# samples per cycle, daily data: up to two weeks / beyond twelve weeks
SHORT_MAX_PERIOD = 10.0
LONG_MIN_PERIOD = 60.0


@dataclass
class ImfFeatureRow:
    imf_index: int
    mean_period: Optional[float]
    pearson: Optional[float]
    pearson_pvalue: Optional[float]
    kendall: Optional[float]
    kendall_pvalue: Optional[float]
    variance_share: Optional[float]
    horizon: str

    def as_dict(self):
        return asdict(self)


FEATURE_COLUMNS = tuple(ImfFeatureRow.__dataclass_fields__)


def mean_period(imf):
    """Series length divided by the number of local maxima, or None."""
    values = np.asarray(getattr(imf, "values", imf), dtype=np.float64)
    peaks = find_extrema(values).max_locs.size
    if peaks == 0:
        return None
    return values.shape[0] / peaks


def _pair(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValidationError("correlation inputs must be 1-D and of equal length")
    if a.shape[0] < 3:
        raise ValidationError("correlation needs at least 3 observations")
    return a, b


def pearson(a, b):
    """Product-moment correlation, or None if either input is constant."""
    r, _ = pearson_test(a, b)
    return r


def pearson_test(a, b):
    """Pearson correlation with a two-sided t-approximation p-value."""
    a, b = _pair(a, b)
    da = a - a.mean()
    db = b - b.mean()
    saa = np.dot(da, da)
    sbb = np.dot(db, db)
    if saa == 0.0 or sbb == 0.0:
        return None, None
    r = float(np.dot(da, db) / math.sqrt(saa * sbb))
    r = min(1.0, max(-1.0, r))
    dof = a.shape[0] - 2
    if abs(r) == 1.0:
        return r, 0.0
    t = r * math.sqrt(dof / (1.0 - r * r))
    return r, float(2.0 * stats.t.sf(abs(t), dof))


def kendall_tau(a, b):
    """Tie-adjusted Kendall tau-b, or None when it is undefined."""
    tau, _ = kendall_test(a, b)
    return tau


def kendall_test(a, b):
    """Kendall tau-b with a normal-approximation two-sided p-value."""
    a, b = _pair(a, b)
    res = stats.kendalltau(a, b, variant="b", method="asymptotic")
    tau, p = float(res.statistic), float(res.pvalue)
    if math.isnan(tau):
        return None, None
    return tau, (None if math.isnan(p) else p)


def variance_share(decomposition):
    """Variance of each IMF as a percentage of the summed IMF variances.

    The residue is left out of the denominator.
    """
    imfs = getattr(decomposition, "imfs", decomposition)
    if len(imfs) == 0:
        raise ValidationError("variance_share needs at least one IMF")
    variances = np.array([np.var(getattr(c, "values", c)) for c in imfs])
    total = variances.sum()
    if total == 0.0:
        return None
    return list(100.0 * variances / total)


def horizon_group(imf_index, total_imfs, mode="index", mean_period=None):
    """Short/medium/long label for one IMF.

    ``mode='index'``: the first two IMFs are short, the last is long (when
    there are at least three), the rest medium. ``mode='period'`` classifies
    by mean period instead.
    """
    if not 1 <= imf_index <= total_imfs:
        raise ValidationError("imf_index {0} outside 1..{1}".format(imf_index, total_imfs))
    if mode == "period":
        if mean_period is None:
            return "long"
        if mean_period <= SHORT_MAX_PERIOD:
            return "short"
        if mean_period > LONG_MIN_PERIOD:
            return "long"
        return "medium"
    if mode != "index":
        raise ValidationError("unknown horizon mode {0!r}".format(mode))
    if imf_index <= 2:
        return "short"
    if imf_index == total_imfs:
        return "long"
    return "medium"


def imf_features(decomposition, original=None, horizon_mode="index"):
    """One ImfFeatureRow per IMF, correlating each IMF with ``original``.

    ``original`` defaults to the reconstruction of the decomposition.
    """
    if original is None:
        original = decomposition.reconstruct()
    imfs = decomposition.imfs
    if not imfs:
        return []
    shares = variance_share(decomposition)
    rows = []
    for k, imf in enumerate(imfs):
        period = mean_period(imf)
        r, rp = pearson_test(imf.values, original)
        tau, tp = kendall_test(imf.values, original)
        rows.append(ImfFeatureRow(
            imf_index=imf.index,
            mean_period=period,
            pearson=r,
            pearson_pvalue=rp,
            kendall=tau,
            kendall_pvalue=tp,
            variance_share=None if shares is None else float(shares[k]),
            horizon=horizon_group(k + 1, len(imfs), horizon_mode, period),
        ))
    return rows
