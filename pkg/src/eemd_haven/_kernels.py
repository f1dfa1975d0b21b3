"""
Hot inner loops of the sifting procedure.

Every kernel exists twice: a numba ``@njit`` version and a NumPy/SciPy
version with identical arithmetic. The numba path is used when numba
imports cleanly and ``EEMD_HAVEN_DISABLE_JIT`` is unset (or "0").
``use_backend`` switches at runtime, mainly for tests and benchmarks.

  local_extrema
  natural_spline
  count_sign_changes

"""

import logging
import os

import numpy as np
from scipy.linalg import solve_banded

logger = logging.getLogger(__name__)

_DISABLE_ENV = "EEMD_HAVEN_DISABLE_JIT"

try:
    from numba import njit
    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAS_NUMBA = False


def _jit_requested():
    return os.environ.get(_DISABLE_ENV, "0").strip().lower() in ("", "0", "false", "no")


_backend = "numba" if (HAS_NUMBA and _jit_requested()) else "numpy"
logger.debug("sifting kernels backend: %s", _backend)


def backend():
    """Name of the active kernel backend, ``"numba"`` or ``"numpy"``."""
    return _backend


def use_backend(name):
    """Select the kernel backend; returns the previous one."""
    global _backend
    if name not in ("numba", "numpy"):
        raise ValueError("unknown backend {0!r}".format(name))
    if name == "numba" and not HAS_NUMBA:
        raise RuntimeError("numba is not installed")
    previous, _backend = _backend, name
    return previous


# ---------------------------------------------------------------------------
# NumPy reference kernels
# ---------------------------------------------------------------------------

def _local_extrema_np(x):
    d = np.diff(x)
    nz = np.flatnonzero(d != 0)
    if nz.size < 2:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty.copy()
    up = d[nz] > 0
    left, right = nz[:-1], nz[1:]
    kmax = np.flatnonzero(up[:-1] & ~up[1:])
    kmin = np.flatnonzero(~up[:-1] & up[1:])
    maxima = (left[kmax] + 1 + right[kmax]) // 2
    minima = (left[kmin] + 1 + right[kmin]) // 2
    return maxima.astype(np.int64), minima.astype(np.int64)


def _natural_spline_np(kx, ky, n):
    m = kx.shape[0]
    h = np.diff(kx)
    slopes = np.diff(ky) / h
    moments = np.zeros(m)
    if m > 2:
        ab = np.zeros((3, m - 2))
        ab[0, 1:] = h[1:-1]
        ab[1, :] = 2.0 * (h[:-1] + h[1:])
        ab[2, :-1] = h[1:-1]
        rhs = 6.0 * (slopes[1:] - slopes[:-1])
        moments[1:-1] = solve_banded((1, 1), ab, rhs)

    t = np.arange(n, dtype=np.float64)
    seg = np.clip(np.searchsorted(kx, t, side="right") - 1, 0, m - 2)
    x0, x1 = kx[seg], kx[seg + 1]
    hs = x1 - x0
    a = (x1 - t) / hs
    b = (t - x0) / hs
    return (a * ky[seg] + b * ky[seg + 1]
            + ((a * a * a - a) * moments[seg]
               + (b * b * b - b) * moments[seg + 1]) * (hs * hs) / 6.0)


def _count_sign_changes_np(x):
    s = np.sign(x)
    nonzero = np.flatnonzero(s)
    if nonzero.size < 2:
        return 0
    # zeros inherit the sign before them, so only nonzero samples matter
    s = s[nonzero]
    return int(np.count_nonzero(s[1:] != s[:-1]))


# ---------------------------------------------------------------------------
# numba kernels
# ---------------------------------------------------------------------------

if HAS_NUMBA:

    @njit(cache=True, nogil=True)
    def _local_extrema_nb(x):
        n = x.shape[0]
        maxima = np.empty(n, dtype=np.int64)
        minima = np.empty(n, dtype=np.int64)
        nmax = 0
        nmin = 0
        prev = 0
        run_start = 0
        for i in range(n - 1):
            if x[i + 1] > x[i]:
                cur = 1
            elif x[i + 1] < x[i]:
                cur = -1
            else:
                continue
            if prev == 1 and cur == -1:
                maxima[nmax] = (run_start + i) // 2
                nmax += 1
            elif prev == -1 and cur == 1:
                minima[nmin] = (run_start + i) // 2
                nmin += 1
            prev = cur
            run_start = i + 1
        return maxima[:nmax].copy(), minima[:nmin].copy()

    @njit(cache=True, nogil=True)
    def _natural_spline_nb(kx, ky, n):
        m = kx.shape[0]
        h = np.empty(m - 1)
        slopes = np.empty(m - 1)
        for i in range(m - 1):
            h[i] = kx[i + 1] - kx[i]
            slopes[i] = (ky[i + 1] - ky[i]) / h[i]

        moments = np.zeros(m)
        k = m - 2
        if k > 0:
            # Thomas algorithm on the interior equations
            cp = np.empty(k)
            dp = np.empty(k)
            for j in range(k):
                diag = 2.0 * (h[j] + h[j + 1])
                rhs = 6.0 * (slopes[j + 1] - slopes[j])
                if j == 0:
                    cp[j] = h[j + 1] / diag
                    dp[j] = rhs / diag
                else:
                    denom = diag - h[j] * cp[j - 1]
                    cp[j] = h[j + 1] / denom
                    dp[j] = (rhs - h[j] * dp[j - 1]) / denom
            moments[k] = dp[k - 1]
            for j in range(k - 2, -1, -1):
                moments[j + 1] = dp[j] - cp[j] * moments[j + 2]

        out = np.empty(n)
        seg = 0
        for i in range(n):
            t = float(i)
            while seg < m - 2 and t >= kx[seg + 1]:
                seg += 1
            x0 = kx[seg]
            x1 = kx[seg + 1]
            hs = x1 - x0
            a = (x1 - t) / hs
            b = (t - x0) / hs
            out[i] = (a * ky[seg] + b * ky[seg + 1]
                      + ((a * a * a - a) * moments[seg]
                         + (b * b * b - b) * moments[seg + 1]) * (hs * hs) / 6.0)
        return out

    @njit(cache=True, nogil=True)
    def _count_sign_changes_nb(x):
        count = 0
        prev = 0.0
        for i in range(x.shape[0]):
            v = x[i]
            if v == 0.0:
                continue
            if prev != 0.0 and (v > 0.0) != (prev > 0.0):
                count += 1
            prev = v
        return count


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

def local_extrema(x):
    """Indices of interior strict local maxima and minima.

    A flat run bounded by a rise and a fall (or fall and rise) counts once,
    at ``(first + last) // 2``.

    Returns
    -------
    maxima, minima : ndarray of int64
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    if _backend == "numba":
        return _local_extrema_nb(x)
    return _local_extrema_np(x)


def natural_spline(kx, ky, n):
    """Natural cubic spline through ``(kx, ky)`` evaluated at ``0..n-1``.

    ``kx`` must be strictly increasing with at least two knots. Outside the
    knot range the end polynomial pieces are extended.
    """
    kx = np.ascontiguousarray(kx, dtype=np.float64)
    ky = np.ascontiguousarray(ky, dtype=np.float64)
    if _backend == "numba":
        return _natural_spline_nb(kx, ky, int(n))
    return _natural_spline_np(kx, ky, int(n))


def count_sign_changes(x):
    """Number of sign changes, with exact zeros carrying the previous sign."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    if _backend == "numba":
        return int(_count_sign_changes_nb(x))
    return _count_sign_changes_np(x)
