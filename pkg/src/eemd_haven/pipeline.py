"""
Run configuration and the staged pipeline:
load -> transform -> decompose -> features -> regress (-> hilbert, plotdata).

Config files are flat ``key = value`` lines; dotted prefixes group keys::

    input.files = panel.csv
    input.columns = SPI, BP, gold, silver, WTI
    seed = 42
    eemd.noise_std = 0.2
    regression.dependent = SPI

Relative paths resolve against the config file's directory.
"""

import configparser
import csv
import hashlib
import logging
import os
import platform
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
import scipy

from . import __version__, _kernels
from .eemd import DEFAULT_SEED, EemdConfig, eemd
from .emd import SiftConfig, emd
from .errors import EemdHavenError, ValidationError
from .io import (read_decomposition, write_decomposition, write_features, write_hilbert,
                 write_json, write_plotdata, write_regression)
from .metrics import imf_features
from .regression import RegressionSpec, multiscale_fit
from .series import (ForwardInputs, align, deflate_to_real, forward_price, ingest_csv,
                     log_transform, upsample_low_to_high)

logger = logging.getLogger(__name__)

SCALES = ("levels", "log")


@dataclass
class DeflateSpec:
    index_file: str
    index_column: str
    targets: tuple


@dataclass
class ForwardSpec:
    targets: tuple
    rate: object = 0.0
    storage: object = 0.0
    convenience: object = 0.0


@dataclass
class RunConfig:
    files: tuple
    columns: tuple
    out_dir: str = "run"
    method: str = "eemd"
    eemd: EemdConfig = field(default_factory=EemdConfig)
    jobs: int = 1
    scale: str = "levels"
    deflate: Optional[DeflateSpec] = None
    forward: Optional[ForwardSpec] = None
    regression: Optional[RegressionSpec] = None
    horizon_mode: str = "index"
    emit_features: bool = True
    emit_regression: bool = True
    emit_hilbert: bool = False
    emit_plotdata: bool = False
    seed_defaulted: bool = False
    base_dir: str = "."

    def describe(self):
        """JSON-friendly view for the manifest, paths relative to ``base_dir``."""
        out = asdict(self)
        # the manifest lives in out_dir; recording it would make otherwise
        # identical runs differ by location
        del out["base_dir"], out["out_dir"]
        return _portable(out, os.path.abspath(self.base_dir))


# ---------------------------------------------------------------------------
# config parsing
# ---------------------------------------------------------------------------

_KNOWN_KEYS = {
    "input.files", "input.columns", "output.dir", "seed",
    "eemd.method", "eemd.noise_std", "eemd.ensemble_size", "eemd.seed", "eemd.jobs",
    "sift.sd_threshold", "sift.max_sift_iters", "sift.max_imfs", "sift.boundary",
    "transform.scale",
    "transform.deflate.index_file", "transform.deflate.index_column", "transform.deflate.targets",
    "transform.forward.targets", "transform.forward.rate", "transform.forward.storage",
    "transform.forward.convenience",
    "regression.dependent", "regression.regressors", "regression.lag_dependent",
    "regression.alpha", "regression.robust_se", "regression.taxonomy",
    "features.horizon_mode",
    "emit.features", "emit.regression", "emit.hilbert", "emit.plotdata",
}


def _split(value):
    return tuple(v.strip() for v in value.split(",") if v.strip())


def _bool(key, value):
    lowered = value.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValidationError("{0}: expected a boolean, got {1!r}".format(key, value))


def _number(key, value, kind=float):
    try:
        return kind(value)
    except ValueError:
        raise ValidationError("{0}: expected {1}, got {2!r}".format(key, kind.__name__, value)) from None


def _number_or_column(value):
    try:
        return float(value)
    except ValueError:
        return value.strip()


def read_config_file(path):
    """Parse a flat ``key = value`` file into a dict of strings."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        with open(path, encoding="utf-8") as handle:
            parser.read_string("[run]\n" + handle.read(), source=path)
    except OSError as exc:
        raise ValidationError("cannot read config {0}: {1}".format(path, exc.strerror)) from None
    except configparser.Error as exc:
        raise ValidationError("malformed config {0}: {1}".format(path, exc)) from None
    return dict(parser["run"])


def parse_run_config(raw, base_dir="."):
    unknown = sorted(set(raw) - _KNOWN_KEYS)
    if unknown:
        raise ValidationError("unknown config keys: {0}".format(", ".join(unknown)))

    def path(value):
        return value if os.path.isabs(value) else os.path.normpath(os.path.join(base_dir, value))

    def get(key, default=None):
        return raw.get(key, default)

    if "input.files" not in raw or "input.columns" not in raw:
        raise ValidationError("config needs input.files and input.columns")

    seed_text = get("seed", get("eemd.seed"))
    seed = DEFAULT_SEED if seed_text is None else _number("seed", seed_text, int)

    max_imfs = get("sift.max_imfs", "auto")
    sift = SiftConfig(
        sd_threshold=_number("sift.sd_threshold", get("sift.sd_threshold", "0.2")),
        max_sift_iters=_number("sift.max_sift_iters", get("sift.max_sift_iters", "100"), int),
        max_imfs=None if max_imfs.strip().lower() == "auto" else _number("sift.max_imfs", max_imfs, int),
        boundary=get("sift.boundary", "mirror").strip(),
    )
    ens = EemdConfig(
        noise_std=_number("eemd.noise_std", get("eemd.noise_std", "0.2")),
        ensemble_size=_number("eemd.ensemble_size", get("eemd.ensemble_size", "100"), int),
        seed=seed,
        sift=sift,
    )

    deflate = None
    if "transform.deflate.index_file" in raw:
        deflate = DeflateSpec(
            index_file=path(raw["transform.deflate.index_file"]),
            index_column=get("transform.deflate.index_column", "index").strip(),
            targets=_split(get("transform.deflate.targets", "")),
        )
    forward = None
    if "transform.forward.targets" in raw:
        forward = ForwardSpec(
            targets=_split(raw["transform.forward.targets"]),
            rate=_number_or_column(get("transform.forward.rate", "0")),
            storage=_number_or_column(get("transform.forward.storage", "0")),
            convenience=_number_or_column(get("transform.forward.convenience", "0")),
        )
    regression = None
    if "regression.dependent" in raw:
        regression = RegressionSpec(
            dependent=raw["regression.dependent"].strip(),
            regressors=_split(get("regression.regressors", "")),
            lag_dependent=_number("regression.lag_dependent", get("regression.lag_dependent", "1"), int),
            alpha=_number("regression.alpha", get("regression.alpha", "0.10")),
            robust=_bool("regression.robust_se", get("regression.robust_se", "false")),
            taxonomy=get("regression.taxonomy", "default").strip(),
        )

    cfg = RunConfig(
        files=tuple(path(p) for p in _split(raw["input.files"])),
        columns=_split(raw["input.columns"]),
        out_dir=path(get("output.dir", "run")),
        method=get("eemd.method", "eemd").strip().lower(),
        eemd=ens,
        jobs=_number("eemd.jobs", get("eemd.jobs", "1"), int),
        scale=get("transform.scale", "levels").strip().lower(),
        deflate=deflate,
        forward=forward,
        regression=regression,
        horizon_mode=get("features.horizon_mode", "index").strip(),
        emit_features=_bool("emit.features", get("emit.features", "true")),
        emit_regression=_bool("emit.regression", get("emit.regression", "true")),
        emit_hilbert=_bool("emit.hilbert", get("emit.hilbert", "false")),
        emit_plotdata=_bool("emit.plotdata", get("emit.plotdata", "false")),
        seed_defaulted=seed_text is None,
        base_dir=base_dir,
    )
    if cfg.method not in ("eemd", "emd"):
        raise ValidationError("eemd.method must be 'eemd' or 'emd'")
    if cfg.scale not in SCALES:
        raise ValidationError("transform.scale must be one of {0}".format(SCALES))
    if cfg.emit_regression and cfg.regression is None:
        raise ValidationError("emit.regression is on but regression.dependent is not set")
    return cfg


def load_run_config(path):
    return parse_run_config(read_config_file(path), os.path.dirname(os.path.abspath(path)))


# ---------------------------------------------------------------------------
# stages
# ---------------------------------------------------------------------------

def _locate_columns(files, columns):
    owners = {}
    headers = {}
    for f in files:
        if not os.path.exists(f):
            raise ValidationError("input file not found: {0}".format(f))
        with open(f, newline="", encoding="utf-8") as handle:
            headers[f] = [h.strip() for h in next(csv.reader(handle), [])]
    for col in columns:
        for f in files:
            if col in headers[f]:
                owners[col] = f
                break
        else:
            raise ValidationError("column {0!r} not found in {1}".format(col, ", ".join(files)))
    return owners


def load_panel(files, columns):
    """Read every requested column and align them on a common calendar."""
    owners = _locate_columns(files, columns)
    series = [ingest_csv(owners[col], col) for col in columns]
    if len(series) == 1:
        return {series[0].name: series[0]}
    return dict(align(series).series)


def _resolve_input(value, panel, files, calendar):
    if isinstance(value, float):
        return value
    if value in panel:
        return panel[value].values
    owner = _locate_columns(files, [value])[value]
    extra = ingest_csv(owner, value)
    keep = np.isin(extra.timestamps, calendar)
    if keep.sum() != calendar.size:
        raise ValidationError("column {0!r} does not cover the panel calendar".format(value))
    return extra.values[keep]


def apply_transforms(panel, scale="levels", deflate=None, forward=None, files=()):
    """Deflate, convert spot to forward prices, then optionally take logs."""
    panel = dict(panel)
    calendar = next(iter(panel.values())).timestamps
    if deflate is not None:
        index = ingest_csv(deflate.index_file, deflate.index_column)
        if not np.array_equal(index.timestamps, calendar):
            index = upsample_low_to_high(index, calendar)
        for name in deflate.targets:
            if name not in panel:
                raise ValidationError("deflate target {0!r} is not an input column".format(name))
            panel[name] = deflate_to_real(panel[name], index)
    if forward is not None:
        rate = _resolve_input(forward.rate, panel, files, calendar)
        storage = _resolve_input(forward.storage, panel, files, calendar)
        convenience = _resolve_input(forward.convenience, panel, files, calendar)
        for name in forward.targets:
            if name not in panel:
                raise ValidationError("forward target {0!r} is not an input column".format(name))
            inputs = ForwardInputs(panel[name].values, rate, storage, convenience)
            panel[name] = panel[name].with_values(forward_price(inputs))
    if scale == "log":
        panel = {name: log_transform(s) for name, s in panel.items()}
    return panel


def decompose_series(series, method="eemd", config=None, jobs=1):
    config = config or EemdConfig()
    if len(series) < 4:
        raise ValidationError("{0}: need at least 4 observations".format(series.name))
    if method == "emd":
        return emd(series, config.sift)
    return eemd(series, config, n_jobs=jobs)


def decompose_panel(panel, out_dir, method="eemd", config=None, jobs=1, extra=None):
    """Decompose every series and write ``<out_dir>/<name>.csv`` + sidecar."""
    os.makedirs(out_dir, exist_ok=True)
    decs, written = {}, []
    for name, series in panel.items():
        dec = decompose_series(series, method, config, jobs)
        decs[name] = dec
        written += write_decomposition(os.path.join(out_dir, name + ".csv"), dec, extra)
    return decs, written


def features_for(dec, out_dir, horizon_mode="index"):
    os.makedirs(out_dir, exist_ok=True)
    rows = imf_features(dec, horizon_mode=horizon_mode)
    note = None
    if not rows:
        note = "decomposition has no IMFs (input has no oscillation); nothing to tabulate"
    stem = os.path.join(out_dir, "{0}_features".format(dec.name))
    return list(write_features(stem, rows, series=dec.name, note=note))


def load_decompositions(directory, names):
    panel, metas = {}, {}
    for name in names:
        dec, meta = read_decomposition(os.path.join(directory, name + ".csv"))
        panel[name], metas[name] = dec, meta
    return panel, metas


def regress_panel(decs, spec, out_dir, extra=None):
    os.makedirs(out_dir, exist_ok=True)
    result = multiscale_fit(decs, spec)
    return result, list(write_regression(out_dir, result, extra))


def sha256_of(path):
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def environment_versions():
    try:
        import numba
        numba_version = numba.__version__
    except ImportError:  # pragma: no cover
        numba_version = None
    return {
        "eemd_haven": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "numba": numba_version,
        "kernel_backend": _kernels.backend(),
    }


def run_pipeline(cfg):
    """Execute every enabled stage and write ``manifest.json``.

    The first failing stage stops the run; the manifest still records the
    stages that completed before the exception is re-raised.
    """
    out = cfg.out_dir
    os.makedirs(out, exist_ok=True)
    stages, written = [], []
    status, error = "complete", None
    meta = {"transform": cfg.scale, "seed": cfg.eemd.seed}
    try:
        panel = load_panel(cfg.files, cfg.columns)
        panel = apply_transforms(panel, cfg.scale, cfg.deflate, cfg.forward, cfg.files)
        stages.append("load")

        decs, files = decompose_panel(panel, os.path.join(out, "decompositions"),
                                      cfg.method, cfg.eemd, cfg.jobs, meta)
        written += files
        stages.append("decompose")

        if cfg.emit_features:
            for dec in decs.values():
                written += features_for(dec, os.path.join(out, "features"), cfg.horizon_mode)
            stages.append("features")
        if cfg.emit_regression:
            _, files = regress_panel(decs, cfg.regression, os.path.join(out, "regression"),
                                     {"transform": cfg.scale})
            written += files
            stages.append("regress")
        if cfg.emit_hilbert:
            hdir = os.path.join(out, "hilbert")
            os.makedirs(hdir, exist_ok=True)
            for name, dec in decs.items():
                written.append(write_hilbert(os.path.join(hdir, name + "_hilbert.csv"), dec))
            stages.append("hilbert")
        if cfg.emit_plotdata:
            pdir = os.path.join(out, "plotdata")
            os.makedirs(pdir, exist_ok=True)
            for name, dec in decs.items():
                written += write_plotdata(pdir, dec, name)
            stages.append("plotdata")
    except EemdHavenError as exc:
        status, error = "failed", "{0}: {1}".format(type(exc).__name__, exc)
        raise
    finally:
        manifest = {
            "status": status,
            "error": error,
            "stages_completed": stages,
            "seed": cfg.eemd.seed,
            "seed_defaulted": cfg.seed_defaulted,
            "versions": environment_versions(),
            "config": cfg.describe(),
            "inputs": {os.path.basename(f): sha256_of(f) for f in cfg.files if os.path.exists(f)},
            "files": {os.path.relpath(p, out).replace(os.sep, "/"): sha256_of(p)
                      for p in sorted(written)},
        }
        write_json(os.path.join(out, "manifest.json"), manifest)
        logger.info("pipeline %s; stages: %s", status, ", ".join(stages))
    return manifest


def _portable(obj, base):
    # absolute paths would tie the manifest to one checkout location
    if isinstance(obj, dict):
        return {k: _portable(v, base) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_portable(v, base) for v in obj]
    if isinstance(obj, str) and os.path.isabs(obj):
        return os.path.relpath(obj, base).replace(os.sep, "/")
    return obj


def verify_manifest(out_dir):
    """Names of files whose current hash differs from the manifest."""
    import json
    with open(os.path.join(out_dir, "manifest.json"), encoding="utf-8") as handle:
        manifest = json.load(handle)
    return sorted(rel for rel, digest in manifest["files"].items()
                  if sha256_of(os.path.join(out_dir, rel)) != digest)
