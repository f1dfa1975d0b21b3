"""
Time series ingestion, alignment and price transforms.

CSV files are UTF-8 with a header row, an ISO-8601 ``date`` column and one
or more numeric value columns.
"""

import csv
import datetime
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .errors import ValidationError

DATE_COLUMN = "date"


def _as_dates(timestamps):
    return np.asarray(timestamps, dtype="datetime64[D]")


@dataclass
class TimeSeries:
    name: str
    timestamps: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.timestamps = _as_dates(self.timestamps)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.timestamps.ndim != 1 or self.values.ndim != 1:
            raise ValidationError("{0}: timestamps and values must be 1-D".format(self.name))
        if self.timestamps.shape != self.values.shape:
            raise ValidationError("{0}: {1} timestamps for {2} values".format(
                self.name, self.timestamps.size, self.values.size))
        if self.timestamps.size > 1 and not np.all(np.diff(self.timestamps) > np.timedelta64(0, "D")):
            raise ValidationError("{0}: timestamps must be strictly increasing".format(self.name))
        if not np.all(np.isfinite(self.values)):
            raise ValidationError("{0}: values must be finite".format(self.name))

    def __len__(self):
        return self.values.shape[0]

    def with_values(self, values, name=None):
        return TimeSeries(name or self.name, self.timestamps.copy(), values)


@dataclass
class AlignedPanel:
    """Series restricted to a shared calendar, keyed by name in input order."""

    series: dict
    timestamps: np.ndarray

    @property
    def window(self):
        return self.timestamps[0], self.timestamps[-1]

    @property
    def names(self):
        return list(self.series)

    def __getitem__(self, name):
        return self.series[name]

    def __len__(self):
        return self.timestamps.shape[0]


@dataclass(frozen=True)
class ForwardInputs:
    """Spot price, per-period interest rate, storage cost and convenience
    yield. Scalars or equally shaped arrays."""

    spot: object
    rate: object = 0.0
    storage: object = 0.0
    convenience: object = 0.0

    def __post_init__(self):
        if not np.all(np.asarray(self.spot) > 0):
            raise ValidationError("spot price must be > 0")
        if not np.all(np.asarray(self.storage) >= 0):
            raise ValidationError("storage cost must be >= 0")
        if not np.all(np.asarray(self.convenience) >= 0):
            raise ValidationError("convenience yield must be >= 0")


def _parse_date(text, rownum):
    try:
        return datetime.date.fromisoformat(text.strip())
    except ValueError:
        raise ValidationError("row {0}: unparseable date {1!r}".format(rownum, text)) from None


def _parse_value(text, column, rownum):
    try:
        value = float(text)
    except (TypeError, ValueError):
        raise ValidationError("row {0}: column {1!r} has non-numeric value {2!r}".format(
            rownum, column, text)) from None
    if not np.isfinite(value):
        raise ValidationError("row {0}: column {1!r} is not finite".format(rownum, column))
    return value


def read_csv_columns(path, columns):
    """Read the date column and the named value columns of a CSV file.

    Row numbers in error messages count data rows from 1 (the header is
    not counted).
    """
    columns = list(columns)
    try:
        handle = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise ValidationError("cannot open {0}: {1}".format(path, exc.strerror)) from None
    with handle:
        reader = csv.DictReader(handle)
        header = reader.fieldnames or []
        if DATE_COLUMN not in header:
            raise ValidationError("{0}: no {1!r} column in header".format(path, DATE_COLUMN))
        for column in columns:
            if column not in header:
                raise ValidationError("{0}: missing column {1!r} (have {2})".format(
                    path, column, ", ".join(h for h in header if h != DATE_COLUMN)))
        dates = []
        values = {column: [] for column in columns}
        for rownum, row in enumerate(reader, start=1):
            dates.append(_parse_date(row[DATE_COLUMN] or "", rownum))
            if len(dates) > 1 and dates[-1] <= dates[-2]:
                raise ValidationError("row {0}: date {1} does not increase".format(rownum, dates[-1]))
            for column in columns:
                values[column].append(_parse_value(row[column], column, rownum))
    return np.array(dates, dtype="datetime64[D]"), values


def ingest_csv(path, column):
    """Load one value column of a CSV file as a validated TimeSeries."""
    dates, values = read_csv_columns(path, [column])
    return TimeSeries(column, dates, values[column])


def write_csv(path, series):
    """Write one or more series sharing a calendar to CSV.

    Floats are written with ``repr`` so that ``ingest_csv`` restores them
    exactly.
    """
    if isinstance(series, TimeSeries):
        series = [series]
    series = list(series)
    stamps = series[0].timestamps
    for s in series[1:]:
        if not np.array_equal(s.timestamps, stamps):
            raise ValidationError("write_csv: series calendars differ; align them first")
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow([DATE_COLUMN] + [s.name for s in series])
        for i, stamp in enumerate(stamps):
            writer.writerow([str(stamp)] + [repr(float(s.values[i])) for s in series])


def align(series, min_overlap=4):
    """Restrict series to the intersection of their calendars."""
    series = list(series)
    if len(series) < 2:
        raise ValidationError("align needs at least two series")
    names = [s.name for s in series]
    if len(set(names)) != len(names):
        raise ValidationError("series names must be unique: {0}".format(names))
    common = reduce(np.intersect1d, [s.timestamps for s in series])
    if common.size == 0:
        raise ValidationError("series calendars do not overlap")
    if common.size < min_overlap:
        raise ValidationError("calendars overlap on only {0} dates".format(common.size))
    out = {}
    for s in series:
        keep = np.isin(s.timestamps, common)
        out[s.name] = TimeSeries(s.name, s.timestamps[keep], s.values[keep])
    return AlignedPanel(out, common)


def upsample_low_to_high(monthly, target_calendar):
    """Linear interpolation of a low-frequency series onto daily dates.

    Exact at the anchor dates; dates outside the anchor span are rejected.
    """
    if len(monthly) < 2:
        raise ValidationError("need at least 2 anchor points")
    target = _as_dates(target_calendar)
    anchors = monthly.timestamps.astype(np.int64)
    days = target.astype(np.int64)
    outside = (days < anchors[0]) | (days > anchors[-1])
    if np.any(outside):
        raise ValidationError("target date {0} outside anchor span {1}..{2}".format(
            target[np.argmax(outside)], monthly.timestamps[0], monthly.timestamps[-1]))
    values = np.interp(days.astype(np.float64), anchors.astype(np.float64), monthly.values)
    return TimeSeries(monthly.name, target, values)


def deflate_to_real(nominal, price_index):
    """Real series ``nominal * base / index`` with ``base`` the first index value."""
    if not np.array_equal(nominal.timestamps, price_index.timestamps):
        raise ValidationError("deflate_to_real: calendars differ; align or upsample first")
    if np.any(price_index.values <= 0):
        raise ValidationError("price index must be strictly positive")
    base = price_index.values[0]
    return nominal.with_values(nominal.values / (price_index.values / base))


def forward_price(inputs):
    """One-period forward price ``S + r*S + w - c``."""
    spot = np.asarray(inputs.spot, dtype=np.float64)
    result = spot + inputs.rate * spot + inputs.storage - inputs.convenience
    return float(result) if np.ndim(result) == 0 else result


def log_transform(series):
    if np.any(series.values <= 0):
        raise ValidationError("{0}: log transform needs positive values".format(series.name))
    return series.with_values(np.log(series.values))
