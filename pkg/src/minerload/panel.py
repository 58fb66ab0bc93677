"""Hourly panel data model: aligned market/weather/load series plus
calendar indicator logic and canonical CSV ingestion.

The panel keeps a contiguous hourly axis. Hours that are missing in the
source files stay on the axis as NaN so downstream code always sees them
explicitly; nothing is ever silently interpolated.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

__all__ = [
    "PanelError",
    "HourlyPanel",
    "SeasonMask",
    "SUMMER_MONTHS",
    "SERIES_NAMES",
    "load_panel",
    "read_schema_file",
    "indicator",
    "split_train_test",
]

SUMMER_MONTHS = frozenset({6, 7, 8, 9})

# Canonical column order of the panel CSV. btc_usd is optional.
SERIES_NAMES = ("rt_price", "da_price", "system_mw", "temp_f", "miner_mw")
CSV_HEADER = ("timestamp",) + SERIES_NAMES
CSV_HEADER_BTC = CSV_HEADER + ("btc_usd",)


class PanelError(ValueError):
    """Raised for malformed input files or invariant violations."""


def _hours(ts: np.ndarray) -> np.ndarray:
    return (ts.astype("datetime64[h]") - ts.astype("datetime64[D]")).astype(int)


def _months(ts: np.ndarray) -> np.ndarray:
    return ts.astype("datetime64[M]").astype(int) % 12 + 1


@dataclass(frozen=True)
class HourlyPanel:
    """Aligned hourly series on a contiguous, strictly increasing axis.

    Prices may be negative; demand and temperature must be finite where
    present; miner demand must be nonnegative. Missing hours carry NaN.
    """

    timestamps: np.ndarray          # datetime64[h], contiguous
    rt_price: np.ndarray            # $/MWh
    da_price: np.ndarray            # $/MWh
    system_mw: np.ndarray           # MW, grid-wide
    temp_f: np.ndarray              # degrees F, state average
    miner_mw: np.ndarray            # MW, aggregated mining demand
    btc_usd: np.ndarray | None = None   # $/BTC, daily value repeated hourly

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype="datetime64[h]")
        object.__setattr__(self, "timestamps", ts)
        if ts.size == 0:
            raise PanelError("panel is empty")
        step = np.diff(ts.astype("int64"))
        if ts.size > 1 and not np.all(step == 1):
            if np.any(step <= 0):
                raise PanelError("timestamps must be strictly increasing")
            raise PanelError("timestamps must be contiguous hourly; represent gaps as NaN rows")
        for name in SERIES_NAMES + ("btc_usd",):
            values = getattr(self, name)
            if values is None:
                continue
            values = np.asarray(values, dtype=float)
            if values.shape != ts.shape:
                raise PanelError(f"{name} length {values.size} != timestamps length {ts.size}")
            object.__setattr__(self, name, values)
        for name in ("system_mw", "temp_f", "miner_mw"):
            values = getattr(self, name)
            present = ~np.isnan(values)
            if np.any(~np.isfinite(values[present])):
                raise PanelError(f"{name} contains non-finite values")
        miner = self.miner_mw
        if np.any(miner[~np.isnan(miner)] < 0):
            raise PanelError("miner_mw must be nonnegative")
        for name in ("rt_price", "da_price"):
            values = getattr(self, name)
            present = ~np.isnan(values)
            if np.any(np.isinf(values[present])):
                raise PanelError(f"{name} contains infinite values")

    # -- calendar helpers ------------------------------------------------
    @property
    def n(self) -> int:
        return self.timestamps.size

    @property
    def hours(self) -> np.ndarray:
        """Hour of day, 0..23."""
        return _hours(self.timestamps)

    @property
    def months(self) -> np.ndarray:
        """Calendar month, 1..12."""
        return _months(self.timestamps)

    @property
    def days(self) -> np.ndarray:
        """Calendar day of each hour (datetime64[D])."""
        return self.timestamps.astype("datetime64[D]")

    @property
    def day_index(self) -> np.ndarray:
        """0-based index of each hour's calendar day within the panel."""
        days = self.days.astype("int64")
        return days - days[0]

    def series(self, name: str) -> np.ndarray:
        if name not in SERIES_NAMES + ("btc_usd",):
            raise PanelError(f"unknown series {name!r}")
        values = getattr(self, name)
        if values is None:
            raise PanelError(f"series {name!r} not present in this panel")
        return values

    def gap_report(self) -> dict[str, list[str]]:
        """Missing-hour locations per series ({} when the panel is complete)."""
        report: dict[str, list[str]] = {}
        for name in SERIES_NAMES + ("btc_usd",):
            values = getattr(self, name)
            if values is None:
                continue
            missing = np.isnan(values)
            if np.any(missing):
                report[name] = [str(t) for t in self.timestamps[missing]]
        return report

    def with_series(self, **kwargs) -> "HourlyPanel":
        return replace(self, **kwargs)

    # -- canonical CSV ----------------------------------------------------
    def to_csv(self, path: str | Path) -> None:
        """Write the canonical CSV. Floats use shortest round-trip repr so a
        reload reproduces every value bit-exactly; NaN becomes the empty
        token."""
        cols = [self.rt_price, self.da_price, self.system_mw, self.temp_f, self.miner_mw]
        header = CSV_HEADER
        if self.btc_usd is not None:
            cols.append(self.btc_usd)
            header = CSV_HEADER_BTC
        lines = [",".join(header)]
        for i, ts in enumerate(self.timestamps):
            cells = [f"{str(ts)[:13]}:00"]
            for col in cols:
                v = col[i]
                cells.append("" if np.isnan(v) else repr(float(v)))
            lines.append(",".join(cells))
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def from_csv(cls, path: str | Path) -> "HourlyPanel":
        rows = _read_csv_columns(path)
        header = rows["__header__"]
        expected = list(CSV_HEADER)
        has_btc = header == list(CSV_HEADER_BTC)
        if header != expected and not has_btc:
            raise PanelError(f"{path}: unexpected header {header}")
        ts = _parse_timestamps(rows["timestamp"], str(path))
        _check_duplicates(ts, str(path))
        order = np.argsort(ts)
        ts = ts[order]
        data = {name: _parse_floats(rows[name], str(path))[order] for name in header[1:]}
        full_ts, aligned = _align_to_contiguous(ts, data)
        return cls(timestamps=full_ts, btc_usd=aligned.get("btc_usd"), **{k: aligned[k] for k in SERIES_NAMES})


@dataclass(frozen=True)
class SeasonMask:
    """Season plus the hour-of-day windows used for indicator gating.

    Windows are half-open [start, end): "10 AM to 8 PM" covers hours
    10..19. Summer is the four coincident-peak months, June-September.
    """

    season: str = "non_summer"
    day_window: tuple[int, int] = (10, 20)
    peak_window: tuple[int, int] = (15, 19)
    fourcp_window: tuple[int, int] = (16, 18)

    def __post_init__(self):
        if self.season not in ("summer", "non_summer"):
            raise PanelError("season must be 'summer' or 'non_summer'")
        for name in ("day_window", "peak_window", "fourcp_window"):
            lo, hi = getattr(self, name)
            if not (0 <= lo < hi <= 24):
                raise PanelError(f"{name} must be a nonempty half-open range inside [0, 24)")
        day = set(range(*self.day_window))
        peak = set(range(*self.peak_window))
        if not peak <= day:
            raise PanelError("peak_window must lie inside day_window")

    @property
    def months(self) -> frozenset[int]:
        if self.season == "summer":
            return SUMMER_MONTHS
        return frozenset(range(1, 13)) - SUMMER_MONTHS

    def window(self, which: str) -> tuple[int, int]:
        try:
            return {"day": self.day_window, "peak": self.peak_window,
                    "fourcp": self.fourcp_window}[which]
        except KeyError:
            raise PanelError(f"unknown window {which!r}") from None


def indicator(panel: HourlyPanel, mask: SeasonMask, which: str) -> np.ndarray:
    """Binary series: 1 when the hour lies in the selected window and the
    month belongs to the mask's season."""
    lo, hi = mask.window(which)
    hours = panel.hours
    in_window = (hours >= lo) & (hours < hi)
    in_season = np.isin(panel.months, list(mask.months))
    return (in_window & in_season).astype(float)


def split_train_test(panel: HourlyPanel, fraction: float, unit: str = "day",
                     seed: int | None = None) -> tuple[HourlyPanel, HourlyPanel]:
    """Split at whole-day boundaries into (train, test).

    With the default ``seed=None`` the first ``fraction`` of days becomes
    the training part and both halves stay contiguous. With a seed, days
    are sampled at random and the complement of each part is NaN-masked on
    the shared axis, so both results keep explicit day-level gaps.
    """
    if unit != "day":
        raise PanelError("only unit='day' splits are supported")
    if not 0.0 < fraction < 1.0:
        raise PanelError("fraction must lie strictly between 0 and 1")
    day_idx = panel.day_index
    n_days = int(day_idx[-1]) + 1
    n_train = int(round(n_days * fraction))
    if n_train == 0 or n_train == n_days:
        raise PanelError(f"fraction {fraction} yields an empty part for {n_days} days")
    if seed is None:
        cut = int(np.searchsorted(day_idx, n_train))
        return _slice(panel, slice(0, cut)), _slice(panel, slice(cut, panel.n))
    rng = np.random.default_rng(seed)
    train_days = np.zeros(n_days, dtype=bool)
    train_days[rng.choice(n_days, size=n_train, replace=False)] = True
    in_train = train_days[day_idx]
    return _mask_rows(panel, in_train), _mask_rows(panel, ~in_train)


def _slice(panel: HourlyPanel, sl: slice) -> HourlyPanel:
    kwargs = {name: getattr(panel, name)[sl] for name in SERIES_NAMES}
    btc = panel.btc_usd[sl] if panel.btc_usd is not None else None
    return HourlyPanel(timestamps=panel.timestamps[sl], btc_usd=btc, **kwargs)


def _mask_rows(panel: HourlyPanel, keep: np.ndarray) -> HourlyPanel:
    kwargs = {}
    for name in SERIES_NAMES:
        values = getattr(panel, name).copy()
        values[~keep] = np.nan
        kwargs[name] = values
    btc = None
    if panel.btc_usd is not None:
        btc = panel.btc_usd.copy()
        btc[~keep] = np.nan
    return HourlyPanel(timestamps=panel.timestamps, btc_usd=btc, **kwargs)


# -- ingestion -------------------------------------------------------------

def read_schema_file(path: str | Path) -> dict[str, str]:
    """Parse a key = value mapping file (canonical name -> source column)."""
    mapping: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise PanelError(f"{path}:{lineno}: expected 'name = column'")
        key, _, value = line.partition("=")
        mapping[key.strip()] = value.strip()
    return mapping


def load_panel(paths: dict[str, str | Path] | list[str | Path],
               schema: dict[str, str] | None = None,
               dedupe_dst: bool = False) -> HourlyPanel:
    """Load and align the panel from one or more CSV files.

    ``paths`` maps canonical series names to their source file (several
    names may share a file), or is a plain list of files each providing
    whichever mapped columns it contains. ``schema`` maps canonical names
    to source column names (identity by default). The result covers the
    intersection of the files' hour ranges; hours missing inside that
    range become NaN and show up in :meth:`HourlyPanel.gap_report`.

    Duplicate timestamps raise unless ``dedupe_dst`` is set, in which case
    the second record of a duplicated hour (DST fall-back) is dropped.
    """
    schema = dict(schema or {})
    for name in SERIES_NAMES + ("btc_usd",):
        schema.setdefault(name, name)
    ts_column = schema.get("timestamp", "timestamp")

    if isinstance(paths, dict):
        file_to_names: dict[str, list[str]] = {}
        for name, p in paths.items():
            if name not in SERIES_NAMES + ("btc_usd",):
                raise PanelError(f"unknown series {name!r} in paths")
            file_to_names.setdefault(str(p), []).append(name)
        file_list = list(file_to_names.items())
    else:
        file_list = [(str(p), None) for p in paths]

    per_series: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    lo = None
    hi = None
    for path, wanted in file_list:
        columns = _read_csv_columns(path)
        header = columns["__header__"]
        if ts_column not in header:
            raise PanelError(f"{path}: timestamp column {ts_column!r} not found")
        ts = _parse_timestamps(columns[ts_column], path)
        if dedupe_dst:
            ts, keep = _drop_dst_duplicates(ts)
            columns = {k: (v if k == "__header__" else [v[i] for i in keep])
                       for k, v in columns.items()}
        _check_duplicates(ts, path)
        order = np.argsort(ts)
        ts = ts[order]
        names = wanted if wanted is not None else [
            n for n in SERIES_NAMES + ("btc_usd",) if schema[n] in header]
        if not names:
            raise PanelError(f"{path}: no mapped series columns found")
        for name in names:
            source = schema[name]
            if source not in header:
                raise PanelError(f"{path}: column {source!r} (for {name}) not found")
            values = _parse_floats(columns[source], path)[order]
            per_series[name] = (ts, values)
        lo = ts[0] if lo is None else max(lo, ts[0])
        hi = ts[-1] if hi is None else min(hi, ts[-1])

    missing = [n for n in SERIES_NAMES if n not in per_series]
    if missing:
        raise PanelError(f"required series missing from inputs: {missing}")
    if lo > hi:
        raise PanelError("input files cover disjoint date ranges (empty intersection)")

    full_ts = np.arange(lo, hi + np.timedelta64(1, "h"), dtype="datetime64[h]")
    aligned: dict[str, np.ndarray] = {}
    for name, (ts, values) in per_series.items():
        out = np.full(full_ts.size, np.nan)
        pos = (ts - lo).astype("int64")
        inside = (pos >= 0) & (pos < full_ts.size)
        out[pos[inside]] = values[inside]
        aligned[name] = out
    return HourlyPanel(timestamps=full_ts, btc_usd=aligned.get("btc_usd"),
                       **{k: aligned[k] for k in SERIES_NAMES})


# -- low-level parsing ------------------------------------------------------

def _read_csv_columns(path: str | Path) -> dict:
    import csv

    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise PanelError(f"{path}: empty file") from None
        columns: dict = {name: [] for name in header}
        columns["__header__"] = header
        for rowno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise PanelError(f"{path}: row {rowno} has {len(row)} cells, expected {len(header)}")
            for name, cell in zip(header, row):
                columns[name].append(cell)
    return columns


def _parse_timestamps(cells: list[str], path: str) -> np.ndarray:
    out = np.empty(len(cells), dtype="datetime64[h]")
    for i, cell in enumerate(cells):
        text = cell.strip().replace(" ", "T")
        try:
            out[i] = np.datetime64(text[:13], "h")
        except ValueError:
            raise PanelError(f"{path}: row {i + 2}: unparseable timestamp {cell!r}") from None
    return out


def _parse_floats(cells: list[str], path: str) -> np.ndarray:
    out = np.empty(len(cells), dtype=float)
    for i, cell in enumerate(cells):
        text = cell.strip()
        if not text:
            out[i] = np.nan
            continue
        try:
            out[i] = float(text)
        except ValueError:
            raise PanelError(f"{path}: row {i + 2}: unparseable number {cell!r}") from None
    return out


def _check_duplicates(ts: np.ndarray, path: str) -> None:
    unique, counts = np.unique(ts, return_counts=True)
    if np.any(counts > 1):
        dup = unique[counts > 1][0]
        raise PanelError(f"{path}: duplicate timestamp {dup}")


def _drop_dst_duplicates(ts: np.ndarray) -> tuple[np.ndarray, list[int]]:
    seen: set = set()
    keep: list[int] = []
    for i, t in enumerate(ts):
        if t not in seen:
            seen.add(t)
            keep.append(i)
    return ts[keep], keep


def _align_to_contiguous(ts: np.ndarray, data: dict[str, np.ndarray]):
    full_ts = np.arange(ts[0], ts[-1] + np.timedelta64(1, "h"), dtype="datetime64[h]")
    pos = (ts - ts[0]).astype("int64")
    aligned = {}
    for name, values in data.items():
        out = np.full(full_ts.size, np.nan)
        out[pos] = values
        aligned[name] = out
    return full_ts, aligned
