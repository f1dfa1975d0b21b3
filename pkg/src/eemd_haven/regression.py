"""
Scale-by-scale OLS of the dependent series on its own lag and the
regressors, and hedge/safe-haven labelling of each regressor coefficient.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import stats
from scipy.linalg import solve_triangular

from .errors import ImfCountMismatch, NumericalError, RankDeficiencyError, ValidationError

logger = logging.getLogger(__name__)

LABELS = ("strong-safe-haven", "weak-safe-haven", "hedge", "none")


def _label_default(coefficient, p_value, alpha):
    if p_value >= alpha:
        return "hedge"
    return "weak-safe-haven" if coefficient < 0 else "strong-safe-haven"


def _label_abstract(coefficient, p_value, alpha):
    # negative-or-uncorrelated on average reads as hedge; only a
    # significant positive coefficient is a (strong) safe haven
    if p_value < alpha and coefficient > 0:
        return "strong-safe-haven"
    return "hedge"


TAXONOMIES = {
    "default": _label_default,
    "abstract": _label_abstract,
}


@dataclass(frozen=True)
class RegressionSpec:
    dependent: str
    regressors: tuple
    lag_dependent: int = 1
    alpha: float = 0.10
    robust: bool = False
    taxonomy: str = "default"

    def __post_init__(self):
        object.__setattr__(self, "regressors", tuple(self.regressors))
        if not self.regressors:
            raise ValidationError("at least one regressor is required")
        if self.dependent in self.regressors:
            raise ValidationError("dependent {0!r} listed among regressors".format(self.dependent))
        if len(set(self.regressors)) != len(self.regressors):
            raise ValidationError("duplicate regressors")
        if self.lag_dependent < 0:
            raise ValidationError("lag_dependent must be >= 0")
        if not 0 < self.alpha < 1:
            raise ValidationError("alpha must lie in (0, 1)")
        if self.taxonomy not in TAXONOMIES:
            raise ValidationError("unknown taxonomy {0!r}; choose from {1}".format(
                self.taxonomy, sorted(TAXONOMIES)))

    @property
    def terms(self):
        lags = ["{0}(-{1})".format(self.dependent, k) for k in range(1, self.lag_dependent + 1)]
        return ["C"] + lags + list(self.regressors)


@dataclass
class OlsResult:
    terms: list
    coefficients: np.ndarray
    std_errors: np.ndarray
    t_stats: np.ndarray
    p_values: np.ndarray
    r_squared: float
    n_obs: int
    df_resid: int
    covariance: str = "classical"

    def index(self, term):
        try:
            return self.terms.index(term)
        except ValueError:
            raise KeyError("term {0!r} not in regression".format(term)) from None

    def as_dict(self):
        return {
            "terms": list(self.terms),
            "coefficients": [float(v) for v in self.coefficients],
            "std_errors": [float(v) for v in self.std_errors],
            "t_stats": [float(v) for v in self.t_stats],
            "p_values": [float(v) for v in self.p_values],
            "r_squared": float(self.r_squared),
            "n_obs": int(self.n_obs),
            "df_resid": int(self.df_resid),
            "covariance": self.covariance,
        }


@dataclass
class ScaleClassification:
    regressor: str
    imf_index: Optional[int]
    label: str
    coefficient: float
    p_value: float
    alpha: float
    taxonomy: str = "default"

    def as_dict(self):
        return {
            "regressor": self.regressor,
            "imf_index": self.imf_index,
            "label": self.label,
            "rule_inputs": {
                "coefficient": float(self.coefficient),
                "p_value": float(self.p_value),
                "alpha": float(self.alpha),
                "taxonomy": self.taxonomy,
            },
        }


def collinear_columns(X, rtol=1e-9):
    """Indices of columns that are (numerically) combinations of earlier ones."""
    X = np.asarray(X, dtype=np.float64)
    norms = np.linalg.norm(X, axis=0)
    scale = norms.max() if norms.size else 0.0
    keep, bad = [], []
    for j in range(X.shape[1]):
        col = X[:, j]
        if norms[j] <= 1e-12 * scale or norms[j] == 0.0:
            bad.append(j)
            continue
        if keep:
            basis = X[:, keep]
            coef = np.linalg.lstsq(basis, col, rcond=None)[0]
            if np.linalg.norm(col - basis @ coef) <= rtol * norms[j]:
                bad.append(j)
                continue
        keep.append(j)
    return bad


def ols_fit(y, X, terms=None, robust=False):
    """Ordinary least squares with an intercept column already in ``X``.

    Standard errors are classical (``s^2 (X'X)^-1``) or, with
    ``robust=True``, White HC1. P-values are two-sided from Student t with
    ``n - k`` degrees of freedom.

    Raises
    ------
    RankDeficiencyError
        Naming the columns that are linear combinations of earlier ones.
    """
    y = np.asarray(y, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise ValidationError("y must be 1-D with len(y) == rows(X)")
    n, k = X.shape
    if terms is None:
        terms = ["x{0}".format(j) for j in range(k)]
    terms = list(terms)
    if len(terms) != k:
        raise ValidationError("got {0} term names for {1} columns".format(len(terms), k))
    if n <= k + 2:
        raise ValidationError("need more than {0} observations, got {1}".format(k + 2, n))
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValidationError("non-finite values in regression inputs")

    bad = collinear_columns(X)
    if bad or np.linalg.matrix_rank(X) < k:
        raise RankDeficiencyError([terms[j] for j in bad] or terms)

    q, r = np.linalg.qr(X)
    beta = solve_triangular(r, q.T @ y)
    resid = y - X @ beta
    dof = n - k
    r_inv = solve_triangular(r, np.eye(k))
    xtx_inv = r_inv @ r_inv.T

    if robust:
        meat = (X * (resid ** 2)[:, None]).T @ X
        cov = xtx_inv @ meat @ xtx_inv * (n / dof)
        cov_name = "HC1"
    else:
        cov = xtx_inv * (resid @ resid / dof)
        cov_name = "classical"
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))

    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(se > 0, beta / se, np.where(beta == 0, 0.0, np.sign(beta) * np.inf))
    p = 2.0 * stats.t.sf(np.abs(t), dof)

    centered = y - y.mean()
    sst = centered @ centered
    r2 = 0.0 if sst == 0 else float(np.clip(1.0 - (resid @ resid) / sst, 0.0, 1.0))
    return OlsResult(terms, beta, se, t, np.clip(p, 0.0, 1.0), r2, n, dof, cov_name)


def significance_stars(p_value):
    if p_value < 0.01:
        return "***"
    if p_value < 0.05:
        return "**"
    if p_value < 0.10:
        return "*"
    return ""


def classify(result, regressor, alpha=0.10, taxonomy="default", imf_index=None):
    """Label one regressor's coefficient as hedge / weak / strong safe haven.

    Under the default rule an insignificant coefficient (``p >= alpha``) is a
    hedge, a significant negative one a weak safe haven and a significant
    positive one a strong safe haven. ``'none'`` is returned when the
    p-value is undefined.
    """
    if taxonomy not in TAXONOMIES:
        raise ValidationError("unknown taxonomy {0!r}".format(taxonomy))
    j = result.index(regressor)
    coefficient = float(result.coefficients[j])
    p_value = float(result.p_values[j])
    if np.isnan(p_value) or np.isnan(coefficient):
        label = "none"
    else:
        label = TAXONOMIES[taxonomy](coefficient, p_value, alpha)
    return ScaleClassification(regressor, imf_index, label, coefficient, p_value, alpha, taxonomy)


@dataclass
class MultiscaleResult:
    spec: RegressionSpec
    fits: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)
    classifications: dict = field(default_factory=dict)

    @property
    def scales(self):
        return sorted(set(self.fits) | set(self.errors))


def scale_design(panel, spec, j):
    """Response vector and design matrix for IMF ``j`` (1-based)."""
    lag = spec.lag_dependent
    dep = panel[spec.dependent].imfs[j - 1].values
    n = dep.shape[0]
    if n - lag < 1:
        raise ValidationError("series too short for {0} lags".format(lag))
    cols = [np.ones(n - lag)]
    cols += [dep[lag - k:n - k] for k in range(1, lag + 1)]
    cols += [panel[name].imfs[j - 1].values[lag:] for name in spec.regressors]
    return dep[lag:], np.column_stack(cols)


def multiscale_fit(panel, spec):
    """Fit the lagged-dependent regression separately at every IMF scale.

    Parameters
    ----------
    panel : mapping of str to Decomposition
        Decompositions of the dependent and every regressor, all with the
        same number of IMFs and samples.
    spec : RegressionSpec

    Returns
    -------
    MultiscaleResult
        Scales whose design is rank deficient appear in ``errors``; the
        other scales are unaffected.
    """
    names = [spec.dependent] + list(spec.regressors)
    missing = [name for name in names if name not in panel]
    if missing:
        raise ValidationError("panel is missing series: {0}".format(", ".join(missing)))
    counts = {name: panel[name].n_imfs for name in names}
    if len(set(counts.values())) != 1:
        raise ImfCountMismatch(counts)
    lengths = {panel[name].residue.shape[0] for name in names}
    if len(lengths) != 1:
        raise ValidationError("panel series differ in length: {0}".format(sorted(lengths)))

    out = MultiscaleResult(spec)
    for j in range(1, counts[spec.dependent] + 1):
        y, X = scale_design(panel, spec, j)
        try:
            fit = ols_fit(y, X, spec.terms, robust=spec.robust)
        except NumericalError as exc:
            logger.warning("IMF%d regression failed: %s", j, exc)
            out.errors[j] = str(exc)
            continue
        out.fits[j] = fit
        out.classifications[j] = [
            classify(fit, name, spec.alpha, spec.taxonomy, imf_index=j) for name in spec.regressors
        ]
    return out
