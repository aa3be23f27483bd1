"""Recording ingestion: Mind-Monitor-style CSV parsing, epoching and synthesis.

Recording CSV schema (UTF-8, LF or CRLF)::

    TimeStamp,RAW_TP9,RAW_AF7,RAW_AF8,RAW_TP10,Marker

``TimeStamp`` is in seconds. ``Marker`` is optional and is either empty,
``jaw_clench`` or ``eye_blink`` (the ``/muse/elements/`` prefix written by
Mind Monitor is accepted). Rows whose channel values are empty or
non-numeric are not samples; a marker on such a row is still kept.

Schedule sidecar CSV: ``onset_seconds,label`` with onsets relative to the
start marker.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (EmptyRecording, InvalidSchedule, MissingColumn,
                     NonMonotoneTimestamps, NoStartMarker, RecordingTooShort)

SAMPLE_RATE = 256.0
CHANNELS = ("TP9", "AF7", "AF8", "TP10")
LEFT_CHANNELS = ("TP9", "AF7")
RIGHT_CHANNELS = ("AF8", "TP10")
COLORS = ("Red", "Green", "Blue")
MARKER_KINDS = ("jaw_clench", "eye_blink")

TIME_COLUMN = "TimeStamp"
CHANNEL_COLUMNS = tuple(f"RAW_{ch}" for ch in CHANNELS)
MARKER_COLUMN = "Marker"

_COLOR_ALIASES = {"r": "Red", "red": "Red", "g": "Green", "green": "Green",
                  "b": "Blue", "blue": "Blue"}


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


def color_index(label):
    """Class index of a color label (Red=0, Green=1, Blue=2)."""
    return COLORS.index(normalize_label(label))


def normalize_label(label):
    try:
        return _COLOR_ALIASES[str(label).strip().lower()]
    except KeyError:
        raise InvalidSchedule(f"unknown color label: {label!r}") from None


@dataclass(frozen=True)
class RawRecording:
    """Four-channel EEG stream with event markers.

    ``data`` has shape (4, n_samples) in microvolts, rows ordered as
    ``channels``. Samples are treated as uniformly spaced at ``sample_rate``;
    timestamps are only used to align markers.
    """

    timestamps: np.ndarray
    data: np.ndarray
    markers: tuple = ()
    sample_rate: float = SAMPLE_RATE
    channels: tuple = CHANNELS

    def __post_init__(self):
        ts = _frozen(self.timestamps)
        data = _frozen(self.data)
        if ts.ndim != 1 or ts.size == 0:
            raise EmptyRecording("recording has no samples")
        if data.shape != (len(self.channels), ts.size):
            raise ValueError(
                f"data shape {data.shape} does not match "
                f"{len(self.channels)} channels x {ts.size} samples")
        if not self.sample_rate > 0:
            raise ValueError("sample_rate must be positive")
        if ts.size > 1 and not np.all(np.diff(ts) > 0):
            raise NonMonotoneTimestamps("timestamps must be strictly increasing")
        markers = tuple(sorted((float(t), str(k)) for t, k in self.markers))
        for _, kind in markers:
            if kind not in MARKER_KINDS:
                raise ValueError(f"unknown marker kind: {kind!r}")
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "markers", markers)
        object.__setattr__(self, "channels", tuple(self.channels))

    def __len__(self):
        return self.timestamps.size

    def channel(self, name):
        return self.data[self.channels.index(name)]

    @property
    def end_time(self):
        return float(self.timestamps[-1])

    def __eq__(self, other):
        if not isinstance(other, RawRecording):
            return NotImplemented
        return (self.markers == other.markers
                and self.sample_rate == other.sample_rate
                and self.channels == other.channels
                and np.array_equal(self.timestamps, other.timestamps)
                and np.array_equal(self.data, other.data))

    __hash__ = None


@dataclass(frozen=True)
class StimulusProtocol:
    colors: tuple = COLORS
    stimulus_duration: float = 2.0
    baseline_duration: float = 2.0
    repetitions_per_color: int = 20
    trial_duration: float = 240.0

    def __post_init__(self):
        expected = (self.repetitions_per_color * len(self.colors)
                    * (self.stimulus_duration + self.baseline_duration))
        if not math.isclose(expected, self.trial_duration):
            raise InvalidSchedule(
                f"protocol inconsistent: {self.repetitions_per_color} x "
                f"{len(self.colors)} x ({self.stimulus_duration} + "
                f"{self.baseline_duration}) != {self.trial_duration}")

    @classmethod
    def with_repetitions(cls, repetitions, stimulus_duration=2.0,
                         baseline_duration=2.0):
        return cls(repetitions_per_color=repetitions,
                   stimulus_duration=stimulus_duration,
                   baseline_duration=baseline_duration,
                   trial_duration=repetitions * len(COLORS)
                   * (stimulus_duration + baseline_duration))


@dataclass(frozen=True)
class StimulusSchedule:
    """Ordered (onset seconds, color label) pairs for one trial."""

    entries: tuple
    stimulus_duration: float = 2.0

    def __post_init__(self):
        entries = tuple((float(t), normalize_label(lab)) for t, lab in self.entries)
        for (t0, _), (t1, _) in zip(entries, entries[1:]):
            if t1 < t0 + self.stimulus_duration:
                raise InvalidSchedule(
                    f"stimulus at {t1} s overlaps the one at {t0} s")
        if entries and entries[0][0] < 0:
            raise InvalidSchedule("onsets must be non-negative")
        object.__setattr__(self, "entries", entries)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def labels(self):
        return [lab for _, lab in self.entries]

    @property
    def onsets(self):
        return [t for t, _ in self.entries]


@dataclass(frozen=True)
class EpochedTrial:
    label: str
    channel_segments: np.ndarray
    subject_id: str = "s0"
    trial_id: str = "t0"
    epoch_index: int = 0
    channels: tuple = field(default=CHANNELS, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "label", normalize_label(self.label))
        object.__setattr__(self, "channel_segments", _frozen(self.channel_segments))

    @property
    def label_index(self):
        return COLORS.index(self.label)


def make_schedule(protocol=None, seed=0):
    """Randomized color order: each color ``repetitions_per_color`` times,
    one stimulus every stimulus+baseline seconds starting at 0."""
    protocol = protocol or StimulusProtocol()
    labels = [c for c in protocol.colors for _ in range(protocol.repetitions_per_color)]
    order = np.random.default_rng(seed).permutation(len(labels))
    period = protocol.stimulus_duration + protocol.baseline_duration
    return StimulusSchedule(
        tuple((k * period, labels[i]) for k, i in enumerate(order)),
        stimulus_duration=protocol.stimulus_duration)


# --------------------------------------------------------------------------
# CSV I/O

def _to_float(text):
    try:
        v = float(text)
    except (TypeError, ValueError):
        return None
    return v if math.isfinite(v) else None


def _marker_kind(text):
    text = (text or "").strip()
    if not text:
        return None
    kind = text.rsplit("/", 1)[-1].strip().lower()
    if kind not in MARKER_KINDS:
        raise ValueError(f"unknown marker {text!r}")
    return kind


def parse_recording(csv_text, sample_rate=SAMPLE_RATE):
    """Parse recording CSV text into a :class:`RawRecording`."""
    reader = csv.reader(io.StringIO(csv_text, newline=""))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise EmptyRecording("empty file") from None
    for col in (TIME_COLUMN,) + CHANNEL_COLUMNS:
        if col not in header:
            raise MissingColumn(col)
    t_col = header.index(TIME_COLUMN)
    ch_cols = [header.index(c) for c in CHANNEL_COLUMNS]
    m_col = header.index(MARKER_COLUMN) if MARKER_COLUMN in header else None

    times, rows, markers = [], [], []
    for row in reader:
        if not row or all(not cell.strip() for cell in row):
            continue
        t = _to_float(row[t_col]) if t_col < len(row) else None
        if t is None:
            continue
        if m_col is not None and m_col < len(row):
            kind = _marker_kind(row[m_col])
            if kind:
                markers.append((t, kind))
        values = [_to_float(row[c]) if c < len(row) else None for c in ch_cols]
        if any(v is None for v in values):
            continue
        times.append(t)
        rows.append(values)
    if not rows:
        raise EmptyRecording("no numeric sample rows")
    ts = np.asarray(times)
    if ts.size > 1 and not np.all(np.diff(ts) > 0):
        bad = int(np.argmin(np.diff(ts) > 0)) + 1
        raise NonMonotoneTimestamps(f"timestamp at sample {bad} does not increase")
    return RawRecording(ts, np.asarray(rows).T, tuple(markers), sample_rate)


def _fmt(v):
    return repr(float(v))


def serialize_recording(rec):
    """Canonical CSV text for a recording (LF line endings, shortest
    round-trip float formatting). Markers that do not coincide with a
    sample timestamp are written as marker-only rows."""
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow((TIME_COLUMN,) + CHANNEL_COLUMNS + (MARKER_COLUMN,))
    pending = list(rec.markers)
    mi = 0
    data = rec.data
    for i, t in enumerate(rec.timestamps):
        while mi < len(pending) and pending[mi][0] < t:
            w.writerow([_fmt(pending[mi][0]), "", "", "", "", pending[mi][1]])
            mi += 1
        kind = ""
        if mi < len(pending) and pending[mi][0] == t:
            kind = pending[mi][1]
            mi += 1
        w.writerow([_fmt(t)] + [_fmt(v) for v in data[:, i]] + [kind])
        # several markers at one timestamp: extras become marker-only rows
        while mi < len(pending) and pending[mi][0] == t:
            w.writerow([_fmt(t), "", "", "", "", pending[mi][1]])
            mi += 1
    for t, kind in pending[mi:]:
        w.writerow([_fmt(t), "", "", "", "", kind])
    return out.getvalue()


def read_recording(path):
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_recording(fh.read())


def write_recording(rec, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(serialize_recording(rec))


def parse_schedule(csv_text, stimulus_duration=2.0):
    reader = csv.DictReader(io.StringIO(csv_text, newline=""))
    fields = [f.strip() for f in (reader.fieldnames or [])]
    for col in ("onset_seconds", "label"):
        if col not in fields:
            raise MissingColumn(col)
    reader.fieldnames = fields
    entries = []
    for row in reader:
        if not any((v or "").strip() for v in row.values()):
            continue
        onset = _to_float(row["onset_seconds"])
        if onset is None:
            raise InvalidSchedule(f"bad onset {row['onset_seconds']!r}")
        entries.append((onset, row["label"]))
    return StimulusSchedule(tuple(entries), stimulus_duration)


def serialize_schedule(schedule):
    lines = ["onset_seconds,label"]
    lines += [f"{_fmt(t)},{lab}" for t, lab in schedule.entries]
    return "\n".join(lines) + "\n"


def read_schedule(path):
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_schedule(fh.read())


def write_schedule(schedule, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(serialize_schedule(schedule))


EPOCH_COLUMNS = ("subject", "trial", "epoch", "label", "channel",
                 "sample_index", "value")


def write_epochs(epochs, path):
    """Long-format epochs file, one row per (epoch, channel, sample)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EPOCH_COLUMNS)
        for ep in epochs:
            for ch, seg in zip(ep.channels, ep.channel_segments):
                for j, v in enumerate(seg):
                    w.writerow((ep.subject_id, ep.trial_id, ep.epoch_index,
                                ep.label, ch, j, _fmt(v)))


def read_epochs(path):
    groups = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in EPOCH_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise MissingColumn(missing[0])
        for row in reader:
            key = (row["subject"], row["trial"], int(row["epoch"]))
            entry = groups.setdefault(key, {"label": row["label"], "ch": {}})
            entry["ch"].setdefault(row["channel"], {})[int(row["sample_index"])] = float(row["value"])
    epochs = []
    for (subj, trial, idx), entry in groups.items():
        seg = np.array([[entry["ch"][ch][j] for j in sorted(entry["ch"][ch])]
                        for ch in CHANNELS])
        epochs.append(EpochedTrial(entry["label"], seg, subj, trial, idx))
    return epochs


# --------------------------------------------------------------------------
# protocol

def detect_start_marker(rec):
    """Timestamp of the first jaw clench, which opens every session."""
    for t, kind in rec.markers:
        if kind == "jaw_clench":
            return t
    raise NoStartMarker("recording has no jaw_clench marker")


def epoch_trials(rec, schedule, start, subject_id="s0", trial_id="t0"):
    """Cut one stimulus-locked segment per schedule entry.

    The first sample at or after ``start`` is the schedule origin; an
    entry with onset ``t`` covers samples ``origin + round(t*fs)`` onwards
    for ``stimulus_duration*fs`` samples. Baseline intervals are dropped.
    """
    fs = rec.sample_rate
    origin = int(np.searchsorted(rec.timestamps, start, side="left"))
    n_seg = int(round(schedule.stimulus_duration * fs))
    n = len(rec)
    epochs = []
    for k, (onset, label) in enumerate(schedule.entries):
        lo = origin + int(round(onset * fs))
        if lo + n_seg > n:
            raise RecordingTooShort(k, len(schedule))
        epochs.append(EpochedTrial(label, rec.data[:, lo:lo + n_seg],
                                   subject_id, trial_id, k, rec.channels))
    return epochs


# --------------------------------------------------------------------------
# synthetic data

DEFAULT_GAINS = {"Red": (1.0, 0.5), "Green": (0.5, 1.0), "Blue": (0.25, 0.25)}


def generate_synthetic_recording(seed, schedule, class_band_gains=None,
                                 noise_sigma=5.0, amplitude=10.0,
                                 pre_roll=1.0, post_roll=2.0,
                                 sample_rate=SAMPLE_RATE, t0=0.0):
    """Synthetic recording whose stimulus intervals carry class-dependent
    alpha/beta oscillations.

    Every channel gets one alpha frequency in [8, 12] Hz and one beta
    frequency in [13, 30] Hz (drawn once per recording). During each
    stimulus of color c the channel carries
    ``amplitude * (g_alpha(c) sin(2 pi f_a t + phi) + g_beta(c) sin(2 pi f_b t + psi))``
    with fresh random phases; white Gaussian noise of ``noise_sigma`` is added
    everywhere. A jaw clench marker sits at the schedule origin,
    ``pre_roll`` seconds after the first sample.

    Randomness comes from numpy's PCG64 generator seeded with ``seed``.
    """
    gains = dict(DEFAULT_GAINS if class_band_gains is None else class_band_gains)
    gains = {normalize_label(k): tuple(map(float, v)) for k, v in gains.items()}
    if any(g < 0 for v in gains.values() for g in v):
        raise ValueError("band gains must be non-negative")
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be non-negative")
    rng = np.random.default_rng(seed)
    fs = float(sample_rate)
    origin = int(round(pre_roll * fs))
    end_s = max((schedule.onsets[-1] + schedule.stimulus_duration) if len(schedule) else 0.0,
                0.0)
    n = origin + int(math.ceil(end_s * fs)) + int(round(post_roll * fs))
    n_ch = len(CHANNELS)

    f_alpha = rng.uniform(8.0, 12.0, n_ch)
    f_beta = rng.uniform(13.0, 30.0, n_ch)
    data = rng.normal(0.0, 1.0, (n_ch, n)) * noise_sigma
    n_seg = int(round(schedule.stimulus_duration * fs))
    t_seg = np.arange(n_seg) / fs
    for onset, label in schedule.entries:
        ga, gb = gains.get(label, (0.0, 0.0))
        phases = rng.uniform(0.0, 2 * np.pi, (2, n_ch))
        lo = origin + int(round(onset * fs))
        wave = (ga * np.sin(2 * np.pi * f_alpha[:, None] * t_seg + phases[0][:, None])
                + gb * np.sin(2 * np.pi * f_beta[:, None] * t_seg + phases[1][:, None]))
        data[:, lo:lo + n_seg] += amplitude * wave
    ts = t0 + np.arange(n) / fs
    markers = ((float(ts[origin]), "jaw_clench"),)
    return RawRecording(ts, data, markers, fs), schedule
