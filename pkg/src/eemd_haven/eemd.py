"""
Ensemble EMD: average the IMFs of many white-noise-perturbed copies.

Each trial draws from its own generator seeded by ``(seed, trial)``, and
the ensemble sums are accumulated in trial order, so results are
bit-identical whether trials run serially or on a thread pool.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .emd import Decomposition, Imf, SiftConfig, _as_vector, emd
from .errors import EemdHavenError, NumericalError, ValidationError

logger = logging.getLogger(__name__)

DEFAULT_SEED = 0


@dataclass(frozen=True)
class EemdConfig:
    """
    Parameters
    ----------
    noise_std : float
        Noise amplitude as a fraction of the input's sample standard deviation.
    ensemble_size : int
        Number of noisy trials (Ne).
    seed : int
        Root seed; trial ``i`` uses the stream derived from ``(seed, i)``.
    sift : SiftConfig
    """

    noise_std: float = 0.2
    ensemble_size: int = 100
    seed: int = DEFAULT_SEED
    sift: SiftConfig = field(default_factory=SiftConfig)

    def __post_init__(self):
        if not self.noise_std >= 0:
            raise ValidationError("noise_std must be >= 0")
        if self.ensemble_size < 1:
            raise ValidationError("ensemble_size must be >= 1")
        if self.seed < 0:
            raise ValidationError("seed must be a non-negative integer")


def trial_stream(seed, trial):
    """Independent generator for one ensemble trial."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(trial,))))


def generate_noise(length, std, stream):
    """I.i.d. Gaussian noise with mean 0 and standard deviation ``std``."""
    if std < 0:
        raise ValidationError("noise std must be >= 0")
    if std == 0:
        return np.zeros(length)
    return std * stream.standard_normal(length)


def _run_trial(values, scale, config, trial):
    noise = generate_noise(values.shape[0], scale, trial_stream(config.seed, trial))
    try:
        return emd(values + noise, config.sift)
    except EemdHavenError as exc:
        raise NumericalError("EEMD trial {0} failed: {1}".format(trial, exc)) from exc


def eemd(x, config=None, n_jobs=1):
    """Ensemble empirical mode decomposition.

    Trials that yield fewer IMFs than others contribute zeros at the missing
    indices; ``params['coverage']`` counts, per IMF index, how many trials
    actually produced that IMF. The residue is the closure term
    ``x - sum(imfs)``.

    Parameters
    ----------
    x : TimeSeries or array_like
    config : EemdConfig, optional
    n_jobs : int
        Worker threads for the trials. Does not change the result.

    Returns
    -------
    Decomposition
    """
    config = config or EemdConfig()
    values = _as_vector(x)
    n = values.shape[0]
    if n < 4:
        raise ValidationError("eemd needs at least 4 samples, got {0}".format(n))

    scale = config.noise_std * float(np.std(values, ddof=1))
    # without noise every trial is the same EMD; one is enough
    trials = 1 if scale == 0 else config.ensemble_size

    sums, coverage, converged, iterations = [], [], [], []

    def absorb(dec):
        for j, imf in enumerate(dec.imfs):
            if j == len(sums):
                sums.append(np.zeros(n))
                coverage.append(0)
                converged.append(0)
                iterations.append(0)
            sums[j] = sums[j] + imf.values
            coverage[j] += 1
            converged[j] += int(imf.converged)
            iterations[j] = max(iterations[j], imf.sift_iterations)

    if n_jobs > 1 and trials > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            for dec in pool.map(lambda i: _run_trial(values, scale, config, i), range(trials)):
                absorb(dec)
    else:
        for i in range(trials):
            absorb(_run_trial(values, scale, config, i))

    imfs = [Imf(total / trials, j + 1, converged=converged[j] == coverage[j],
                sift_iterations=iterations[j]) for j, total in enumerate(sums)]
    residue = values.copy()
    for imf in imfs:
        residue = residue - imf.values

    logger.debug("EEMD: %d trials, %d IMFs, coverage %s", trials, len(imfs), coverage)
    params = {
        "sift": asdict(config.sift),
        "noise_std": config.noise_std,
        "ensemble_size": config.ensemble_size,
        "effective_trials": trials,
        "seed": config.seed,
        "noise_scale": scale,
        "coverage": coverage,
        "converged_trials": converged,
    }
    return Decomposition(
        imfs=imfs,
        residue=residue,
        method="EEMD",
        params=params,
        name=getattr(x, "name", None),
        timestamps=getattr(x, "timestamps", None),
    )
