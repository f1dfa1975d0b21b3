"""
File formats: decomposition CSV + JSON sidecar, feature tables,
regression reports, Hilbert profiles and plot-ready data.

All writers are deterministic: floats go through ``repr`` and JSON keys
are sorted, so identical inputs give byte-identical files.
"""

import csv
import datetime
import json
import os

import numpy as np

from .emd import Decomposition, Imf, envelopes, find_extrema
from .errors import MonotoneResidue, ValidationError
from .hilbert import hilbert_spectrum
from .metrics import FEATURE_COLUMNS, horizon_group
from .regression import significance_stars


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _write_rows(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return value if np.isfinite(value) else None
    return obj


def write_json(path, payload):
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(_jsonable(payload), handle, indent=2, sort_keys=True, allow_nan=False)
        handle.write("\n")


def _time_column(decomposition):
    n = decomposition.residue.shape[0]
    if decomposition.timestamps is not None:
        return [str(t) for t in decomposition.timestamps]
    return list(range(n))


def sidecar_path(csv_path):
    return os.path.splitext(csv_path)[0] + ".json"


def write_decomposition(csv_path, decomposition, extra=None):
    """Write ``t, imf1..imfK, residue`` plus a JSON sidecar next to it."""
    k = decomposition.n_imfs
    header = ["t"] + ["imf{0}".format(j) for j in range(1, k + 1)] + ["residue"]
    columns = [imf.values for imf in decomposition.imfs] + [decomposition.residue]
    rows = ([t] + [col[i] for col in columns] for i, t in enumerate(_time_column(decomposition)))
    _write_rows(csv_path, header, rows)

    meta = {
        "name": decomposition.name,
        "method": decomposition.method,
        "params": decomposition.params,
        "n_imfs": k,
        "n_samples": int(decomposition.residue.shape[0]),
        "converged": [bool(imf.converged) for imf in decomposition.imfs],
        "sift_iterations": [int(imf.sift_iterations) for imf in decomposition.imfs],
    }
    if extra:
        meta.update(extra)
    write_json(sidecar_path(csv_path), meta)
    return csv_path, sidecar_path(csv_path)


def read_decomposition(csv_path):
    """Inverse of :func:`write_decomposition`; the sidecar is optional."""
    if not os.path.exists(csv_path):
        raise ValidationError("decomposition file not found: {0}".format(csv_path))
    with open(csv_path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        body = list(reader)
    if not header or header[0] != "t" or header[-1] != "residue":
        raise ValidationError("{0}: not a decomposition file (header {1})".format(csv_path, header))
    try:
        data = np.array([[float(v) for v in row[1:]] for row in body], dtype=np.float64)
    except ValueError as exc:
        raise ValidationError("{0}: {1}".format(csv_path, exc)) from None
    data = data.reshape(len(body), len(header) - 1)
    times = [row[0] for row in body]
    try:
        # integer sample indices would otherwise parse as years
        timestamps = np.array([datetime.date.fromisoformat(t) for t in times],
                              dtype="datetime64[D]")
    except ValueError:
        timestamps = None

    meta = {}
    if os.path.exists(sidecar_path(csv_path)):
        with open(sidecar_path(csv_path), encoding="utf-8") as handle:
            meta = json.load(handle)
    converged = meta.get("converged") or [True] * (data.shape[1] - 1)
    iterations = meta.get("sift_iterations") or [0] * (data.shape[1] - 1)
    imfs = [Imf(data[:, j].copy(), j + 1, bool(converged[j]), int(iterations[j]))
            for j in range(data.shape[1] - 1)]
    name = meta.get("name") or os.path.splitext(os.path.basename(csv_path))[0]
    dec = Decomposition(imfs, data[:, -1].copy(), meta.get("method", "EMD"),
                        meta.get("params", {}), name, timestamps)
    return dec, meta


def write_features(stem, rows, series=None, note=None):
    """``<stem>.csv`` and ``<stem>.json`` with one row per IMF."""
    dicts = [row.as_dict() for row in rows]
    _write_rows(stem + ".csv", FEATURE_COLUMNS, ([d[c] for c in FEATURE_COLUMNS] for d in dicts))
    payload = {"series": series, "columns": list(FEATURE_COLUMNS), "rows": dicts}
    if note:
        payload["note"] = note
    write_json(stem + ".json", payload)
    return stem + ".csv", stem + ".json"


def _cell(fit, term):
    j = fit.index(term)
    coef, p = fit.coefficients[j], fit.p_values[j]
    return "{0:.6g}{1} ({2:.4f})".format(coef, significance_stars(p), p)


def regression_table(result):
    """Rows of the terms-by-scales table: header, one row per term, R2."""
    scales = result.scales
    header = ["term"] + ["IMF{0}".format(j) for j in scales]
    rows = []
    for term in result.spec.terms:
        rows.append([term] + [_cell(result.fits[j], term) if j in result.fits else "n/a"
                              for j in scales])
    rows.append(["R2"] + ["{0:.4f}".format(result.fits[j].r_squared) if j in result.fits else "n/a"
                          for j in scales])
    return header, rows


def regression_payload(result, extra=None):
    spec = result.spec
    scales = {}
    for j in result.scales:
        if j in result.fits:
            scales[str(j)] = {
                "ols": result.fits[j].as_dict(),
                "classifications": [c.as_dict() for c in result.classifications[j]],
            }
        else:
            scales[str(j)] = {"error": result.errors[j]}
    payload = {
        "dependent": spec.dependent,
        "regressors": list(spec.regressors),
        "lag_dependent": spec.lag_dependent,
        "alpha": spec.alpha,
        "covariance": "HC1" if spec.robust else "classical",
        "taxonomy": spec.taxonomy,
        "terms": spec.terms,
        "scales": scales,
    }
    if extra:
        payload.update(extra)
    return payload


def write_regression(out_dir, result, extra=None, stem="regression"):
    json_path = os.path.join(out_dir, stem + ".json")
    csv_path = os.path.join(out_dir, stem + "_table.csv")
    write_json(json_path, regression_payload(result, extra))
    header, rows = regression_table(result)
    _write_rows(csv_path, header, rows)
    return json_path, csv_path


def write_hilbert(csv_path, decomposition):
    """``t, reliable, imf<j>_amplitude, imf<j>_frequency ...``"""
    profiles = hilbert_spectrum(decomposition)
    header = ["t", "reliable"]
    columns = []
    for j, prof in enumerate(profiles, start=1):
        header += ["imf{0}_amplitude".format(j), "imf{0}_frequency".format(j)]
        columns += [prof.amplitude, prof.frequency]
    n = decomposition.residue.shape[0]
    reliable = profiles[0].reliable if profiles else np.ones(n, dtype=bool)
    rows = ([t, reliable[i]] + [col[i] for col in columns]
            for i, t in enumerate(_time_column(decomposition)))
    _write_rows(csv_path, header, rows)
    return csv_path


def first_sift_data(decomposition):
    """Columns of the one-step sifting picture for the original signal:
    signal, upper/lower envelope, their mean, the first candidate and what
    remains after removing it."""
    signal = decomposition.reconstruct()
    boundary = decomposition.params.get("sift", {}).get("boundary", "mirror")
    try:
        upper, lower = envelopes(signal, boundary)
    except MonotoneResidue:
        upper = lower = np.full_like(signal, np.nan)
    mean = 0.5 * (upper + lower)
    first = decomposition.imfs[0].values if decomposition.imfs else np.zeros_like(signal)
    return {
        "signal": signal,
        "upper": upper,
        "lower": lower,
        "mean": mean,
        "candidate": signal - mean,
        "imf1": first,
        "residual1": signal - first,
    }


def component_data(decomposition, horizon_mode="index"):
    """Signal split into short-horizon IMFs and everything slower."""
    signal = decomposition.reconstruct()
    high = np.zeros_like(signal)
    k = decomposition.n_imfs
    for j, imf in enumerate(decomposition.imfs, start=1):
        period = None
        if horizon_mode == "period":
            maxima = find_extrema(imf.values).max_locs.size
            period = signal.shape[0] / maxima if maxima else None
        if horizon_group(j, k, horizon_mode, period) == "short":
            high = high + imf.values
    return {"signal": signal, "high_frequency": high, "low_frequency": signal - high}


def write_plotdata(out_dir, decomposition, stem):
    paths = []
    times = _time_column(decomposition)
    for suffix, data in (("sift", first_sift_data(decomposition)),
                         ("components", component_data(decomposition))):
        path = os.path.join(out_dir, "{0}_{1}.csv".format(stem, suffix))
        names = list(data)
        _write_rows(path, ["t"] + names,
                    ([t] + [data[c][i] for c in names] for i, t in enumerate(times)))
        paths.append(path)
    return paths
