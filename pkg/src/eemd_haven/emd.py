"""
Empirical mode decomposition by envelope-mean sifting.

  find_extrema
  count_zero_crossings
  pad_extrema
  spline_envelope
  envelopes
  sift_once
  extract_imf
  emd

"""

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from . import _kernels
from .errors import MonotoneResidue, ValidationError

logger = logging.getLogger(__name__)

BOUNDARY_POLICIES = ("mirror", "clamp")
FLAT_RTOL = 1e-10


@dataclass(frozen=True)
class SiftConfig:
    """Stopping and boundary options for sifting.

    Parameters
    ----------
    sd_threshold : float
        Cauchy criterion ``sum((h_prev - h)**2) / sum(h_prev**2)`` must fall
        below this before an IMF is accepted.
    max_sift_iters : int
        Hard cap on sifting iterations per IMF.
    max_imfs : int or None
        Maximum number of IMFs; ``None`` means ``floor(log2(N)) - 1``.
    boundary : {'mirror', 'clamp'}
        How extrema are extended past the ends before spline fitting.
    """

    sd_threshold: float = 0.2
    max_sift_iters: int = 100
    max_imfs: Optional[int] = None
    boundary: str = "mirror"

    def __post_init__(self):
        if not self.sd_threshold > 0:
            raise ValidationError("sd_threshold must be > 0, got {0}".format(self.sd_threshold))
        if self.max_sift_iters < 1:
            raise ValidationError("max_sift_iters must be >= 1")
        if self.max_imfs is not None and self.max_imfs < 1:
            raise ValidationError("max_imfs must be >= 1 or None")
        if self.boundary not in BOUNDARY_POLICIES:
            raise ValidationError("boundary must be one of {0}".format(BOUNDARY_POLICIES))

    def imf_limit(self, n):
        if self.max_imfs is not None:
            return self.max_imfs
        return max(1, int(math.floor(math.log2(n))) - 1)


@dataclass
class Imf:
    values: np.ndarray
    index: int
    converged: bool = True
    sift_iterations: int = 0


@dataclass
class Decomposition:
    """IMFs (highest frequency first) plus residue and provenance."""

    imfs: list
    residue: np.ndarray
    method: str = "EMD"
    params: dict = field(default_factory=dict)
    name: Optional[str] = None
    timestamps: Optional[np.ndarray] = None

    @property
    def n_imfs(self):
        return len(self.imfs)

    @property
    def imf_matrix(self):
        """IMFs stacked as a ``(K, N)`` array."""
        if not self.imfs:
            return np.empty((0, self.residue.shape[0]))
        return np.vstack([imf.values for imf in self.imfs])

    def reconstruct(self):
        total = np.zeros_like(self.residue)
        for imf in self.imfs:
            total = total + imf.values
        return total + self.residue


class Extrema(NamedTuple):
    max_locs: np.ndarray
    max_vals: np.ndarray
    min_locs: np.ndarray
    min_vals: np.ndarray

    @property
    def count(self):
        return self.max_locs.size + self.min_locs.size


def find_extrema(x):
    """Interior local maxima and minima of ``x``.

    Flat tops and bottoms are reported once, at the plateau midpoint.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] < 3:
        raise ValidationError("find_extrema needs at least 3 samples")
    imax, imin = _kernels.local_extrema(x)
    return Extrema(imax, x[imax], imin, x[imin])


def count_zero_crossings(x):
    """Strict sign changes between consecutive samples.

    Exact zeros take the sign of the sample before them, so ``[1, 0, -1]``
    crosses once.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] < 2:
        raise ValidationError("count_zero_crossings needs at least 2 samples")
    return _kernels.count_sign_changes(x)


def is_imf(x, extrema=None):
    """True when zero-crossings and extrema counts differ by at most one."""
    if extrema is None:
        extrema = find_extrema(x)
    return abs(count_zero_crossings(x) - extrema.count) <= 1


def _mirror_knots(x, imax, imin, nsym=2):
    # Symmetric extension about the end extrema (Rilling-style): when the
    # end sample lies outside the first/last extremum pair, the end sample
    # itself becomes the symmetry axis and a knot.
    last = x.shape[0] - 1
    head = nsym - 1

    if imax[0] < imin[0]:
        if x[0] > x[imin[0]]:
            lmax, lmin, lsym = imax[1:nsym + 1][::-1], imin[:nsym][::-1], imax[0]
        else:
            lmax, lmin, lsym = imax[:nsym][::-1], np.r_[imin[:head][::-1], 0], 0
    else:
        if x[0] < x[imax[0]]:
            lmax, lmin, lsym = imax[:nsym][::-1], imin[1:nsym + 1][::-1], imin[0]
        else:
            lmax, lmin, lsym = np.r_[imax[:head][::-1], 0], imin[:nsym][::-1], 0

    if imax[-1] < imin[-1]:
        if x[-1] < x[imax[-1]]:
            rmax, rmin, rsym = imax[-nsym:][::-1], imin[-nsym - 1:-1][::-1], imin[-1]
        else:
            rmax = np.r_[last, imax[len(imax) - head:][::-1]]
            rmin, rsym = imin[-nsym:][::-1], last
    else:
        if x[-1] > x[imin[-1]]:
            rmax, rmin, rsym = imax[-nsym - 1:-1][::-1], imin[-nsym:][::-1], imax[-1]
        else:
            rmax = imax[-nsym:][::-1]
            rmin, rsym = np.r_[last, imin[len(imin) - head:][::-1]], last

    tlmax, tlmin = 2 * lsym - lmax, 2 * lsym - lmin
    if (tlmin.size and tlmin[0] > 0) or (tlmax.size and tlmax[0] > 0):
        if lsym == imax[0]:
            lmax = imax[:nsym][::-1]
        else:
            lmin = imin[:nsym][::-1]
        lsym = 0
        tlmax, tlmin = 2 * lsym - lmax, 2 * lsym - lmin

    trmax, trmin = 2 * rsym - rmax, 2 * rsym - rmin
    if (trmin.size and trmin[-1] < last) or (trmax.size and trmax[-1] < last):
        if rsym == imax[-1]:
            rmax = imax[-nsym:][::-1]
        else:
            rmin = imin[-nsym:][::-1]
        rsym = last
        trmax, trmin = 2 * rsym - rmax, 2 * rsym - rmin

    tmax = np.r_[tlmax, imax, trmax].astype(np.float64)
    vmax = np.r_[x[lmax.astype(np.int64)], x[imax], x[rmax.astype(np.int64)]]
    tmin = np.r_[tlmin, imin, trmin].astype(np.float64)
    vmin = np.r_[x[lmin.astype(np.int64)], x[imin], x[rmin.astype(np.int64)]]
    return tmax, vmax, tmin, vmin


def _clamp_knots(x, imax, imin):
    last = x.shape[0] - 1
    tmax = np.r_[0, imax, last].astype(np.float64)
    tmin = np.r_[0, imin, last].astype(np.float64)
    return tmax, np.r_[x[0], x[imax], x[-1]], tmin, np.r_[x[0], x[imin], x[-1]]


def pad_extrema(x, extrema, boundary="mirror"):
    """Knots for the upper and lower envelopes after boundary extension.

    Returns
    -------
    tmax, vmax, tmin, vmin : ndarray
        Knot positions (in samples, possibly outside ``[0, N-1]``) and values.
    """
    x = np.asarray(x, dtype=np.float64)
    if extrema.max_locs.size == 0 or extrema.min_locs.size == 0:
        raise MonotoneResidue("signal has {0} maxima and {1} minima".format(
            extrema.max_locs.size, extrema.min_locs.size))
    if boundary == "clamp":
        return _clamp_knots(x, extrema.max_locs, extrema.min_locs)
    if boundary != "mirror":
        raise ValidationError("unknown boundary policy {0!r}".format(boundary))

    knots = _mirror_knots(x, extrema.max_locs, extrema.min_locs)
    if np.all(np.diff(knots[0]) > 0) and np.all(np.diff(knots[2]) > 0):
        return knots
    logger.debug("mirrored knots not strictly increasing, clamping instead")
    return _clamp_knots(x, extrema.max_locs, extrema.min_locs)


def spline_envelope(knot_t, knot_v, n):
    """Natural cubic spline through the knots, sampled at ``0..n-1``."""
    knot_t = np.asarray(knot_t, dtype=np.float64)
    if knot_t.shape[0] < 2:
        raise MonotoneResidue("fewer than 2 envelope knots")
    return _kernels.natural_spline(knot_t, knot_v, n)


def envelopes(x, boundary="mirror", extrema=None):
    """Upper and lower cubic-spline envelopes of ``x``."""
    x = np.asarray(x, dtype=np.float64)
    if extrema is None:
        extrema = find_extrema(x)
    tmax, vmax, tmin, vmin = pad_extrema(x, extrema, boundary)
    if tmax.shape[0] < 2 or tmin.shape[0] < 2:
        raise MonotoneResidue("fewer than 2 knots on an envelope")
    n = x.shape[0]
    return spline_envelope(tmax, vmax, n), spline_envelope(tmin, vmin, n)


def sift_once(x, config=None):
    """One sifting step.

    Returns
    -------
    candidate : ndarray
        ``x - mean`` where ``mean`` is the average of the two envelopes.
    mean : ndarray
        The envelope mean.
    """
    config = config or SiftConfig()
    x = np.asarray(x, dtype=np.float64)
    upper, lower = envelopes(x, config.boundary)
    mean = 0.5 * (upper + lower)
    return x - mean, mean


def _sd(prev, cur):
    energy = np.dot(prev, prev)
    if energy == 0.0:
        return 0.0
    diff = prev - cur
    return float(np.dot(diff, diff) / energy)


def extract_imf(x, config=None, index=1):
    """Sift ``x`` until it qualifies as an IMF.

    Iteration stops once the Cauchy ratio between successive candidates is
    below ``config.sd_threshold`` *and* the candidate satisfies the
    zero-crossing/extrema rule. Hitting ``max_sift_iters`` first returns the
    last candidate with ``converged=False``.

    Raises
    ------
    MonotoneResidue
        If ``x`` itself cannot be enveloped.
    """
    config = config or SiftConfig()
    prev = np.asarray(x, dtype=np.float64)
    h, _ = sift_once(prev, config)
    it = 1
    while True:
        if _sd(prev, h) < config.sd_threshold and is_imf(h):
            return Imf(h, index, converged=True, sift_iterations=it)
        if it >= config.max_sift_iters:
            logger.debug("IMF %d did not converge in %d iterations", index, it)
            return Imf(h, index, converged=False, sift_iterations=it)
        try:
            candidate, _ = sift_once(h, config)
        except MonotoneResidue:
            return Imf(h, index, converged=is_imf(h), sift_iterations=it)
        prev, h = h, candidate
        it += 1


def _as_vector(x):
    values = getattr(x, "values", x)
    values = np.array(values, dtype=np.float64)
    if values.ndim != 1:
        raise ValidationError("expected a 1-D series")
    if not np.all(np.isfinite(values)):
        raise ValidationError("series contains non-finite values")
    return values


def emd(x, config=None):
    """Decompose a series into IMFs and a residue.

    Parameters
    ----------
    x : TimeSeries or array_like
        Input of length >= 4.
    config : SiftConfig, optional

    Returns
    -------
    Decomposition
        ``sum(imfs) + residue`` reproduces ``x`` to rounding error.

    Notes
    -----
    Extraction stops when the residue has fewer than two extrema, when its
    range falls below ``FLAT_RTOL * max|x|``, or at ``config.imf_limit(N)``.
    """
    config = config or SiftConfig()
    values = _as_vector(x)
    n = values.shape[0]
    if n < 4:
        raise ValidationError("emd needs at least 4 samples, got {0}".format(n))

    limit = config.imf_limit(n)
    residue = values.copy()
    # oscillations below this are summation round-off, not a mode
    floor = FLAT_RTOL * float(np.max(np.abs(values)))
    imfs = []
    while len(imfs) < limit:
        if find_extrema(residue).count < 2 or np.ptp(residue) <= floor:
            break
        try:
            imf = extract_imf(residue, config, index=len(imfs) + 1)
        except MonotoneResidue:
            break
        imfs.append(imf)
        residue = residue - imf.values

    return Decomposition(
        imfs=imfs,
        residue=residue,
        method="EMD",
        params={"sift": asdict(config)},
        name=getattr(x, "name", None),
        timestamps=getattr(x, "timestamps", None),
    )
