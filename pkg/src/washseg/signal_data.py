"""Labeled 6-axis IMU recordings: CSV ingestion and sliding windows.

CSV contract: UTF-8, header exactly ``t,ax,ay,az,gx,gy,gz,label``, one row
per nominal 20 ms tick at 50 Hz. Timestamps are decimal seconds and must
be strictly increasing; labels are integers 0..9 (0 = background, 1..9 =
the nine guideline gestures). Corpus files are named
``<location>_<participant>_<procedure>.csv``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

CSV_HEADER = "t,ax,ay,az,gx,gy,gz,label"
NUM_CLASSES = 10
DEFAULT_RATE_HZ = 50.0
DEFAULT_WINDOW = 64


class SeriesFormatError(ValueError):
    """Raised on a malformed recording file; message names the line."""


@dataclass(frozen=True)
class SampleSeries:
    """One labeled recording. Immutable after construction."""

    participant_id: str
    location_id: str
    procedure_id: int
    t: np.ndarray  # seconds, strictly increasing
    accel: np.ndarray  # (3, N)
    gyro: np.ndarray  # (3, N)
    label: np.ndarray  # (N,) ints in 0..9
    rate_hz: float = DEFAULT_RATE_HZ

    def __post_init__(self):
        n = self.t.shape[0]
        if n < 1:
            raise ValueError("series must contain at least one sample")
        if self.accel.shape != (3, n) or self.gyro.shape != (3, n):
            raise ValueError("accel/gyro must be shaped (3, N) matching t")
        if self.label.shape != (n,):
            raise ValueError("label length must match t")
        if self.label.min() < 0 or self.label.max() >= NUM_CLASSES:
            raise ValueError("labels must lie in 0..9")
        if n > 1 and not np.all(np.diff(self.t) > 0):
            raise ValueError("timestamps must be strictly increasing")
        if self.rate_hz <= 0:
            raise ValueError("rate_hz must be positive")
        for arr in (self.t, self.accel, self.gyro, self.label):
            arr.setflags(write=False)

    def __len__(self) -> int:
        return self.t.shape[0]


@dataclass(frozen=True)
class Window:
    """A fixed-length slice of a series; views into the parent arrays."""

    source: SampleSeries
    start_index: int
    length: int
    tail: bool = False

    def __post_init__(self):
        if self.start_index < 0 or self.start_index + self.length > len(self.source):
            raise ValueError("window does not fit inside its series")

    @property
    def accel_slice(self) -> np.ndarray:
        return self.source.accel[:, self.start_index : self.start_index + self.length]

    @property
    def gyro_slice(self) -> np.ndarray:
        return self.source.gyro[:, self.start_index : self.start_index + self.length]

    @property
    def label_slice(self) -> np.ndarray:
        return self.source.label[self.start_index : self.start_index + self.length]


def load_csv(path, participant_id="", location_id="", procedure_id=0,
             rate_hz=DEFAULT_RATE_HZ) -> SampleSeries:
    """Parse one recording file, validating every row.

    Identity fields default to empty and can be filled by the caller
    (e.g. from the ``<location>_<participant>_<procedure>.csv`` filename).
    """
    ts, accs, gyrs, labels = [], [], [], []
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().strip()
        if header != CSV_HEADER:
            raise SeriesFormatError(
                f"{path}: line 1: header must be exactly '{CSV_HEADER}', got '{header}'"
            )
        for lineno, line in enumerate(f, start=2):
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            if len(fields) != 8:
                raise SeriesFormatError(
                    f"{path}: line {lineno}: expected 8 columns, got {len(fields)}"
                )
            try:
                vals = [float(v) for v in fields[:7]]
                lab = int(fields[7])
            except ValueError:
                raise SeriesFormatError(
                    f"{path}: line {lineno}: non-numeric field"
                ) from None
            if not 0 <= lab < NUM_CLASSES:
                raise SeriesFormatError(
                    f"{path}: line {lineno}: label {lab} outside 0..9"
                )
            if ts and vals[0] <= ts[-1]:
                raise SeriesFormatError(
                    f"{path}: line {lineno}: timestamp {vals[0]} not strictly increasing"
                )
            ts.append(vals[0])
            accs.append(vals[1:4])
            gyrs.append(vals[4:7])
            labels.append(lab)
    if not ts:
        raise SeriesFormatError(f"{path}: empty file (no data rows)")
    return SampleSeries(
        participant_id=participant_id,
        location_id=location_id,
        procedure_id=procedure_id,
        t=np.array(ts),
        accel=np.array(accs).T,
        gyro=np.array(gyrs).T,
        label=np.array(labels, dtype=np.int64),
        rate_hz=rate_hz,
    )


def write_csv(series: SampleSeries, path):
    """Write a series back out; numeric content survives to 9 significant digits."""
    with open(path, "w", encoding="utf-8") as f:
        f.write(CSV_HEADER + "\n")
        for i in range(len(series)):
            nums = [series.t[i], *series.accel[:, i], *series.gyro[:, i]]
            f.write(",".join(f"{v:.9g}" for v in nums))
            f.write(f",{series.label[i]}\n")


def extract_windows(series: SampleSeries, length=DEFAULT_WINDOW, stride=1):
    """Windows at starts 0, stride, 2*stride, ... while they fit.

    If stride > 1 and the last stride-aligned window stops short of the
    series end, one extra end-aligned window is appended and flagged tail.
    """
    n = len(series)
    if length > n:
        raise ValueError(f"window length {length} exceeds series length {n}")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    windows = []
    start = 0
    while start + length <= n:
        windows.append(Window(series, start, length))
        start += stride
    last_end = windows[-1].start_index + length
    if stride > 1 and last_end < n:
        windows.append(Window(series, n - length, length, tail=True))
    return windows


def parse_corpus_filename(name: str):
    """Split ``<location>_<participant>_<procedure>.csv`` into its parts."""
    stem = name[:-4] if name.endswith(".csv") else name
    parts = stem.rsplit("_", 2)
    if len(parts) != 3:
        raise ValueError(f"corpus filename '{name}' is not <location>_<participant>_<procedure>.csv")
    try:
        proc = int(parts[2])
    except ValueError:
        raise ValueError(f"corpus filename '{name}': procedure id '{parts[2]}' is not an integer") from None
    return parts[0], parts[1], proc


def load_corpus(directory):
    """Load every corpus CSV in a directory, sorted by filename."""
    import os

    series = []
    for name in sorted(os.listdir(directory)):
        if not name.endswith(".csv"):
            continue
        loc, part, proc = parse_corpus_filename(name)
        series.append(
            load_csv(
                os.path.join(directory, name),
                participant_id=part,
                location_id=loc,
                procedure_id=proc,
            )
        )
    if not series:
        raise FileNotFoundError(f"no corpus CSV files found in {directory}")
    return series
