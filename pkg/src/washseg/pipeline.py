"""From model outputs to smoothed label tracks, onsets, and durations.

A LabelTrack carries one predicted label per sample of a series, plus the
per-sample vote counts accumulated during stride-1 inference. Smoothing:
multiple-test voting (per-sample mode over all covering windows) and a
centered running mode filter. Ties always break toward the smallest label
so every stage is deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .signal_data import NUM_CLASSES, SampleSeries, extract_windows
from .model import windows_to_arrays


@dataclass
class LabelTrack:
    labels: np.ndarray  # (N,) ints 0..9
    votes: np.ndarray | None = None  # (N, 10) counts, stride-1 inference only

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.labels.ndim != 1:
            raise ValueError("labels must be 1-D")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= NUM_CLASSES):
            raise ValueError("labels must lie in 0..9")
        if self.votes is not None:
            self.votes = np.asarray(self.votes, dtype=np.int64)
            if self.votes.shape != (self.labels.size, NUM_CLASSES):
                raise ValueError("votes must be (N, 10)")

    def __len__(self):
        return self.labels.size


@dataclass(frozen=True)
class GestureSegment:
    label: int
    onset_time: float
    offset_time: float

    @property
    def duration(self) -> float:
        return self.offset_time - self.onset_time


def infer_track(model, series: SampleSeries, stride: int = 64, batch: int = 512) -> LabelTrack:
    """Run sliding-window inference over a whole series.

    stride 64: every sample is labeled by the one window that covers it
    (the end-aligned tail window only fills samples no earlier window
    reached). stride 1: per-sample argmax votes from every covering window
    are recorded for later voting.
    """
    n = len(series)
    length = model.config.input_length
    if n < length:
        raise ValueError(f"series length {n} is shorter than the model input {length}")
    windows = extract_windows(series, length, stride)
    preds = _predict_windows(model, windows, batch)

    labels = np.zeros(n, dtype=np.int64)
    votes = np.zeros((n, NUM_CLASSES), dtype=np.int64)
    filled = np.zeros(n, dtype=bool)
    for w, p in zip(windows, preds):
        sl = slice(w.start_index, w.start_index + length)
        np.add.at(votes[sl], (np.arange(length), p), 1)
        if w.tail:
            unfilled = ~filled[sl]
            labels[sl][...] = np.where(unfilled, p, labels[sl])
        else:
            labels[sl] = p
        filled[sl] = True
    return LabelTrack(labels=labels, votes=votes)


def _predict_windows(model, windows, batch):
    accel, gyro, _ = windows_to_arrays(windows)
    out = []
    for start in range(0, accel.shape[0], batch):
        logits = model.forward(accel[start : start + batch], gyro[start : start + batch], mode="eval")
        out.append(logits.argmax(axis=1))
    return np.concatenate(out, axis=0)


def multiple_test_voting(track: LabelTrack) -> LabelTrack:
    """Per-sample mode over the recorded stride-1 votes; ties -> smallest label."""
    if track.votes is None:
        raise ValueError("multiple_test_voting needs a track with vote counts")
    # argmax over counts picks the smallest label among ties
    return LabelTrack(labels=track.votes.argmax(axis=1))


def mode_filter(track: LabelTrack, window: int = 128) -> LabelTrack:
    """Replace every label with the mode of the centered window around it.

    The window covers indices [i - window//2, i + (window-1)//2], truncated
    at the series edges. Ties break to the smallest label.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    n = len(track)
    labels = track.labels
    onehot = np.zeros((n, NUM_CLASSES), dtype=np.int64)
    onehot[np.arange(n), labels] = 1
    csum = np.zeros((n + 1, NUM_CLASSES), dtype=np.int64)
    np.cumsum(onehot, axis=0, out=csum[1:])
    left = window // 2
    right = (window - 1) // 2
    lo = np.maximum(np.arange(n) - left, 0)
    hi = np.minimum(np.arange(n) + right + 1, n)
    counts = csum[hi] - csum[lo]
    return LabelTrack(labels=counts.argmax(axis=1))


def detect_procedure(track: LabelTrack, rate_hz: float, gap_merge: int = 64):
    """Find the handwashing span of a track.

    Non-background runs separated by fewer than ``gap_merge`` background
    samples are merged; the longest merged span wins if several remain.
    Returns (onset_seconds, offset_seconds) with an exclusive offset, or
    None when the track has no non-background sample.
    """
    if len(track) == 0:
        raise ValueError("empty track")
    nz = np.flatnonzero(track.labels != 0)
    if nz.size == 0:
        return None
    # merge runs: a gap strictly smaller than gap_merge joins neighbors
    spans = []
    start = prev = nz[0]
    for i in nz[1:]:
        if i - prev - 1 >= gap_merge:
            spans.append((start, prev))
            start = i
        prev = i
    spans.append((start, prev))
    best = max(spans, key=lambda s: s[1] - s[0])
    return best[0] / rate_hz, (best[1] + 1) / rate_hz


def gesture_durations(track: LabelTrack, rate_hz: float, gap_merge: int = 64) -> np.ndarray:
    """Seconds spent in each gesture 1..9 inside the detected procedure.

    Occurrences of a gesture need not be contiguous; counts are summed.
    Returns a length-9 array (index 0 -> gesture 1); all zeros when no
    procedure is detected.
    """
    out = np.zeros(9)
    span = detect_procedure(track, rate_hz, gap_merge)
    if span is None:
        return out
    lo = int(round(span[0] * rate_hz))
    hi = int(round(span[1] * rate_hz))
    seg = track.labels[lo:hi]
    for g in range(1, NUM_CLASSES):
        out[g - 1] = np.count_nonzero(seg == g) / rate_hz
    return out


def smooth(track: LabelTrack, method: str, window: int = 128) -> LabelTrack:
    """Apply a named smoothing pipeline: none | mtv | tmf | mtv+tmf."""
    if method == "none":
        return track
    if method == "mtv":
        return multiple_test_voting(track)
    if method == "tmf":
        return mode_filter(track, window)
    if method == "mtv+tmf":
        return mode_filter(multiple_test_voting(track), window)
    raise ValueError(f"unknown smoothing method '{method}'")


def export_track_csv(path, track: LabelTrack, series: SampleSeries):
    """``index,t,predicted,ground_truth`` rows for a whole series."""
    with open(path, "w", encoding="utf-8") as f:
        f.write("index,t,predicted,ground_truth\n")
        for i in range(len(track)):
            f.write(f"{i},{series.t[i]:.9g},{track.labels[i]},{series.label[i]}\n")


_PALETTE = [
    "#cccccc", "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
    "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22",
]


def export_timeline_svg(path, track: LabelTrack, rate_hz: float,
                        width: int = 1000, band_height: int = 40):
    """One colored band per label run; display only."""
    n = len(track)
    scale = width / max(n, 1)
    rects = []
    start = 0
    for i in range(1, n + 1):
        if i == n or track.labels[i] != track.labels[start]:
            lab = int(track.labels[start])
            x = start * scale
            w = (i - start) * scale
            rects.append(
                f'<rect x="{x:.2f}" y="0" width="{w:.2f}" height="{band_height}" '
                f'fill="{_PALETTE[lab]}"><title>label {lab}: '
                f"{start / rate_hz:.2f}-{i / rate_hz:.2f}s</title></rect>"
            )
            start = i
    svg = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{band_height}">' + "".join(rects) + "</svg>\n"
    )
    with open(path, "w", encoding="utf-8") as f:
        f.write(svg)
