"""Conformity scores, the Monte-Carlo score-sample tensor, and file I/O.

Scores are "conformity" scores: larger means the label agrees more with the
input. The sample tensor stores raw (pre-binarization) score draws so a
single tensor can serve many (p, tau) calibrations.
"""

from __future__ import annotations

import csv
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

TPS = "tps"
APS = "aps"
LOGIT = "logit"

_BIN_MAGIC = b"BNCP"
_BIN_VERSION = 1

PROB_ATOL = 1e-6


class ScoreFileError(ValueError):
    """Raised when a score file violates the on-disk contract."""


@dataclass(frozen=True)
class ScoreFunction:
    """A named conformity score. APS needs a tie-break seed for its u draw."""

    kind: str
    aps_tie_seed: int | None = None

    def __post_init__(self):
        if self.kind not in (TPS, APS, LOGIT):
            raise ValueError(f"unknown score kind: {self.kind!r}")


def _check_prob_vector(probs: np.ndarray) -> None:
    if np.any(probs < 0) or np.any(probs > 1):
        raise ValueError("probability vector has entries outside [0, 1]")
    if abs(float(probs.sum()) - 1.0) > PROB_ATOL:
        raise ValueError("probability vector does not sum to 1")


def tps_score(probs, y: int) -> float:
    """True-class probability score: the softmax value of class y."""
    probs = np.asarray(probs, dtype=float)
    if not 0 <= y < probs.shape[-1]:
        raise IndexError(f"class index {y} out of range")
    return float(probs[y])


def aps_score(probs, y: int, u: float) -> float:
    """Adaptive prediction-set score.

    Returns -(rho + u * probs[y]) where rho is the total mass of classes
    predicted strictly more likely than y, and u in [0, 1] breaks ties.
    """
    probs = np.asarray(probs, dtype=float)
    if not 0 <= y < probs.shape[-1]:
        raise IndexError(f"class index {y} out of range")
    _check_prob_vector(probs)
    if not 0.0 <= u <= 1.0:
        raise ValueError("tie-break u must lie in [0, 1]")
    rho = float(probs[probs > probs[y]].sum())
    return -(rho + u * float(probs[y]))


def logit_score(values, y: int) -> float:
    """Raw logit score; accepts unbounded reals."""
    values = np.asarray(values, dtype=float)
    if not 0 <= y < values.shape[-1]:
        raise IndexError(f"class index {y} out of range")
    return float(values[y])


def score(fn: ScoreFunction, probs, y: int, u: float | None = None) -> float:
    """Evaluate a score function on one class-probability (or logit) vector."""
    if fn.kind == TPS:
        return tps_score(probs, y)
    if fn.kind == APS:
        if u is None:
            raise ValueError("APS requires the tie-break variable u")
        return aps_score(probs, y, u)
    return logit_score(probs, y)


@dataclass
class ScoreSamples:
    """Monte-Carlo score samples: points x classes x samples.

    ``exact_mode`` marks tensors whose single "sample" per (point, class) is
    an exactly computed pass probability (de-randomized smoothing); such
    values must lie in [0, 1] and need no finite-sample correction.
    """

    values: np.ndarray
    labels: np.ndarray | None = None
    exact_mode: bool = False

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 3:
            raise ValueError("values must be a 3-d tensor (points, classes, samples)")
        if self.m_samples < 1:
            raise ValueError("need at least one sample per point and class")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("score tensor contains NaN or infinite entries")
        if self.exact_mode:
            if self.m_samples != 1:
                raise ValueError("exact mode requires one sample")
            if np.any(self.values < 0) or np.any(self.values > 1):
                raise ValueError("exact-mode values must be probabilities in [0, 1]")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if self.labels.shape != (self.n_points,):
                raise ValueError("labels length must equal n_points")
            if np.any(self.labels < 0) or np.any(self.labels >= self.n_classes):
                raise ValueError("label out of range")

    @property
    def n_points(self) -> int:
        return self.values.shape[0]

    @property
    def n_classes(self) -> int:
        return self.values.shape[1]

    @property
    def m_samples(self) -> int:
        return self.values.shape[2]


def binarize(samples: ScoreSamples, point: int, cls: int, tau: float) -> float:
    """Fraction of MC samples for (point, cls) passing the threshold (>= tau)."""
    vals = samples.values[point, cls]
    return float(np.count_nonzero(vals >= tau)) / samples.m_samples


def pass_fractions(samples: ScoreSamples, tau: float) -> np.ndarray:
    """Per (point, class) pass fraction at threshold tau; shape (n, k).

    In exact mode the stored probabilities are returned unchanged (they are
    already Pr[score >= tau] for the operative tau).
    """
    if samples.exact_mode:
        return samples.values[:, :, 0].copy()
    return (samples.values >= tau).mean(axis=2)


def true_class_values(samples: ScoreSamples) -> np.ndarray:
    """Sample matrix of the labeled class per point; shape (n, m)."""
    if samples.labels is None:
        raise ValueError("labels required for calibration")
    return samples.values[np.arange(samples.n_points), samples.labels]


# ---------------------------------------------------------------------------
# File formats.
#
# BIN: magic "BNCP", u16 version, u32 length-prefixed UTF-8 JSON header
# {n_points, n_classes, m_samples, exact_mode, has_labels}, little-endian
# float32 values in point-major/class-major/sample-minor order, then
# little-endian uint32 labels when present.
#
# CSV: header row "point,class,sample,score"; optional sidecar labels.csv
# with header "point,label".
# ---------------------------------------------------------------------------


def save_score_samples(samples: ScoreSamples, path, fmt: str = "bin") -> None:
    path = Path(path)
    if fmt == "bin":
        _save_bin(samples, path)
    elif fmt == "csv":
        _save_csv(samples, path)
    else:
        raise ValueError(f"unknown format: {fmt!r}")


def load_score_samples(path, fmt: str = "bin", exact_mode: bool = False) -> ScoreSamples:
    """Load a score tensor. ``exact_mode`` only applies to CSV (BIN stores it)."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    if fmt == "bin":
        return _load_bin(path)
    if fmt == "csv":
        return _load_csv(path, exact_mode=exact_mode)
    raise ValueError(f"unknown format: {fmt!r}")


def _save_bin(samples: ScoreSamples, path: Path) -> None:
    header = {
        "n_points": samples.n_points,
        "n_classes": samples.n_classes,
        "m_samples": samples.m_samples,
        "exact_mode": samples.exact_mode,
        "has_labels": samples.labels is not None,
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_BIN_MAGIC)
        fh.write(struct.pack("<H", _BIN_VERSION))
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        fh.write(samples.values.astype("<f4").tobytes(order="C"))
        if samples.labels is not None:
            fh.write(samples.labels.astype("<u4").tobytes())


def _load_bin(path: Path) -> ScoreSamples:
    raw = path.read_bytes()
    if raw[:4] != _BIN_MAGIC:
        raise ScoreFileError("bad magic bytes")
    (version,) = struct.unpack_from("<H", raw, 4)
    if version != _BIN_VERSION:
        raise ScoreFileError(f"unsupported version {version}")
    (hlen,) = struct.unpack_from("<I", raw, 6)
    header = json.loads(raw[10 : 10 + hlen].decode("utf-8"))
    n, k, m = header["n_points"], header["n_classes"], header["m_samples"]
    offset = 10 + hlen
    nvals = n * k * m
    expected = offset + 4 * nvals + (4 * n if header["has_labels"] else 0)
    if len(raw) != expected:
        raise ScoreFileError("payload length mismatch")
    values = np.frombuffer(raw, dtype="<f4", count=nvals, offset=offset)
    values = values.reshape(n, k, m).astype(np.float64)
    labels = None
    if header["has_labels"]:
        labels = np.frombuffer(raw, dtype="<u4", count=n, offset=offset + 4 * nvals)
        labels = labels.astype(np.int64)
    return ScoreSamples(values, labels=labels, exact_mode=header["exact_mode"])


def _save_csv(samples: ScoreSamples, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["point", "class", "sample", "score"])
        for i in range(samples.n_points):
            for c in range(samples.n_classes):
                for j in range(samples.m_samples):
                    writer.writerow([i, c, j, repr(float(samples.values[i, c, j]))])
    if samples.labels is not None:
        with open(path.parent / "labels.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["point", "label"])
            for i, lab in enumerate(samples.labels):
                writer.writerow([i, int(lab)])


def _load_csv(path: Path, exact_mode: bool = False) -> ScoreSamples:
    entries: dict[tuple[int, int, int], float] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["point", "class", "sample", "score"]:
            raise ScoreFileError("bad CSV header")
        for row in reader:
            if not row:
                continue
            if len(row) != 4:
                raise ScoreFileError(f"malformed CSV row: {row!r}")
            i, c, j = int(row[0]), int(row[1]), int(row[2])
            val = float(row[3])
            if not np.isfinite(val):
                raise ScoreFileError("score tensor contains NaN or infinite entries")
            if (i, c, j) in entries:
                raise ScoreFileError(f"duplicate entry for {(i, c, j)}")
            entries[(i, c, j)] = val
    if not entries:
        raise ScoreFileError("empty score file")
    n = 1 + max(key[0] for key in entries)
    k = 1 + max(key[1] for key in entries)
    m = 1 + max(key[2] for key in entries)
    if len(entries) != n * k * m:
        raise ScoreFileError("payload length mismatch")
    values = np.empty((n, k, m), dtype=np.float64)
    for (i, c, j), val in entries.items():
        values[i, c, j] = val
    labels = None
    sidecar = path.parent / "labels.csv"
    if sidecar.exists():
        labels = np.full(n, -1, dtype=np.int64)
        with open(sidecar, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != ["point", "label"]:
                raise ScoreFileError("bad labels.csv header")
            for row in reader:
                if not row:
                    continue
                labels[int(row[0])] = int(row[1])
        if np.any(labels < 0):
            raise ScoreFileError("labels.csv does not cover every point")
    return ScoreSamples(values, labels=labels, exact_mode=exact_mode)


def draw_aps_ties(n_points: int, n_classes: int, seed: int) -> np.ndarray:
    """Tie-break variables for APS, one per (point, class).

    Held fixed across MC samples of the same point: u models label-level
    randomization, not smoothing noise.
    """
    rng = np.random.default_rng(seed)
    return rng.uniform(0.0, 1.0, size=(n_points, n_classes))
