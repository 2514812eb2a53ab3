"""Core data types and text-format persistence.

All artifacts live in plain comma-separated text so that runs are diffable
and bit-stable across platforms:

* fluorescence: one row per time step, one column per neuron
* positions: one "x,y" row per neuron
* network: "i,j,w" rows with 1-based indices; w > 0 marks a directed edge
* score matrix: N x N floats written with 9 decimal places
* report: commented fold table plus machine lines, ending in a
  "method,auc,prc,seconds" summary row

Score-matrix heatmaps can additionally be exported as 8-bit grayscale
PGM (P2) images where darker pixels mean lower scores.
"""

import os
import tempfile
from dataclasses import dataclass, field

import numpy as np


class ParseError(ValueError):
    """A file could not be parsed; the message names the offending line."""


class ConsistencyError(ValueError):
    """Artifacts that should describe the same network disagree."""


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclass
class FluorescencePanel:
    """T x N matrix of fluorescence traces sampled at a fixed rate."""

    values: np.ndarray
    sample_rate_hz: float = 50.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ValueError("fluorescence values must be a 2-D matrix")
        t, n = self.values.shape
        if t < 2 or n < 2:
            raise ValueError(f"need at least 2 time steps and 2 neurons, got {t}x{n}")
        if not np.isfinite(self.values).all():
            raise ValueError("fluorescence values must be finite")
        if not self.sample_rate_hz > 0:
            raise ValueError("sample_rate_hz must be positive")

    @property
    def neuron_count(self):
        return self.values.shape[1]

    @property
    def frame_count(self):
        return self.values.shape[0]

    @property
    def duration_s(self):
        return self.values.shape[0] / self.sample_rate_hz


@dataclass
class NeuronLayout:
    """2-D spatial positions of the recorded neurons."""

    positions: np.ndarray

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=np.float64)
        if self.positions.ndim != 2 or self.positions.shape[1] != 2:
            raise ValueError("positions must be an N x 2 matrix")
        if not np.isfinite(self.positions).all():
            raise ValueError("positions must be finite")

    @property
    def neuron_count(self):
        return self.positions.shape[0]


@dataclass
class GroundTruthNetwork:
    """Binary directed adjacency: edges[i, j] == 1 iff i synapses onto j."""

    edges: np.ndarray

    def __post_init__(self):
        self.edges = np.asarray(self.edges)
        if self.edges.ndim != 2 or self.edges.shape[0] != self.edges.shape[1]:
            raise ValueError("edges must be a square matrix")
        if not np.isin(self.edges, (0, 1)).all():
            raise ValueError("edges must be binary")
        if np.diag(self.edges).any():
            raise ValueError("self connections are not allowed")
        self.edges = self.edges.astype(np.uint8)

    @property
    def neuron_count(self):
        return self.edges.shape[0]

    @property
    def density(self):
        n = self.neuron_count
        return float(self.edges.sum()) / (n * (n - 1))


@dataclass
class ScoreMatrix:
    """N x N directed connection scores in [0, 1] with a zero diagonal."""

    scores: np.ndarray
    method_tag: str = ""

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=np.float64)
        if self.scores.ndim != 2 or self.scores.shape[0] != self.scores.shape[1]:
            raise ValueError("scores must be a square matrix")
        if not np.isfinite(self.scores).all():
            raise ValueError("scores must be finite")
        if self.scores.min() < 0.0 or self.scores.max() > 1.0:
            raise ValueError("scores must lie in [0, 1]")
        if np.diag(self.scores).any():
            raise ValueError("score diagonal must be exactly zero")

    @property
    def neuron_count(self):
        return self.scores.shape[0]

    @classmethod
    def from_raw(cls, raw, method_tag=""):
        """Min-max normalize an arbitrary square matrix into a ScoreMatrix.

        The diagonal is zeroed first, the minimum and maximum are taken over
        off-diagonal entries only, and an all-equal off-diagonal maps to all
        zeros. This is the one normalization rule shared by every inference
        method in the package.
        """
        raw = np.array(raw, dtype=np.float64)
        if raw.ndim != 2 or raw.shape[0] != raw.shape[1]:
            raise ValueError("raw scores must be a square matrix")
        if not np.isfinite(raw).all():
            raise ValueError("raw scores must be finite")
        n = raw.shape[0]
        off = ~np.eye(n, dtype=bool)
        vals = raw[off]
        lo = vals.min()
        hi = vals.max()
        out = np.zeros_like(raw)
        if hi > lo:
            out[off] = (vals - lo) / (hi - lo)
        return cls(out, method_tag)


@dataclass
class EvalReport:
    """Evaluation summary: mean AUC/PRC plus the per-fold breakdown."""

    method_tag: str
    auc: float
    prc: float
    per_fold: list  # (network_id, auc, prc) triples
    wall_clock_seconds: float
    fold_seconds: list | None = field(default=None)

    def __post_init__(self):
        if not self.per_fold:
            raise ValueError("at least one fold is required")
        fold_auc = np.array([f[1] for f in self.per_fold], dtype=float)
        fold_prc = np.array([f[2] for f in self.per_fold], dtype=float)
        for name, agg, folds in (("auc", self.auc, fold_auc), ("prc", self.prc, fold_prc)):
            if not 0.0 <= agg <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
            if abs(agg - folds.mean()) > 1e-9:
                raise ValueError(f"aggregate {name} must equal the mean of fold values")
        if self.wall_clock_seconds < 0:
            raise ValueError("wall_clock_seconds must be nonnegative")
        if self.fold_seconds is not None and len(self.fold_seconds) != len(self.per_fold):
            raise ValueError("fold_seconds must match per_fold length")

    @classmethod
    def from_folds(cls, method_tag, per_fold, fold_seconds=None):
        """Build a report from fold results, averaging the aggregates."""
        if not per_fold:
            raise ValueError("at least one fold is required")
        auc = float(np.mean([f[1] for f in per_fold]))
        prc = float(np.mean([f[2] for f in per_fold]))
        wall = float(np.mean(fold_seconds)) if fold_seconds else 0.0
        return cls(method_tag, auc, prc, list(per_fold), wall, fold_seconds)


# ---------------------------------------------------------------------------
# loading
# ---------------------------------------------------------------------------

def _load_float_matrix(path):
    rows = []
    width = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            if width is None:
                width = len(parts)
            elif len(parts) != width:
                raise ParseError(
                    f"{path}: line {lineno}: expected {width} values, got {len(parts)}"
                )
            try:
                rows.append([float(p) for p in parts])
            except ValueError:
                raise ParseError(f"{path}: line {lineno}: non-numeric value") from None
    if not rows:
        raise ParseError(f"{path}: no data rows")
    return np.asarray(rows, dtype=np.float64)


def load_fluorescence(path, sample_rate_hz=50.0):
    return FluorescencePanel(_load_float_matrix(path), sample_rate_hz)


def load_positions(path):
    mat = _load_float_matrix(path)
    if mat.shape[1] != 2:
        raise ParseError(f"{path}: positions need exactly two columns")
    return NeuronLayout(mat)


def load_network(path, neuron_count):
    """Read "i,j,w" rows (1-based) into a binary directed adjacency.

    Rows with w > 0 set an edge; all other rows (the competition data marks
    inhibitory links with negative weights) are dropped. The result does not
    depend on row order.
    """
    edges = np.zeros((neuron_count, neuron_count), dtype=np.uint8)
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise ParseError(f"{path}: line {lineno}: expected i,j,w")
            try:
                i_f, j_f, w = (float(p) for p in parts)
            except ValueError:
                raise ParseError(f"{path}: line {lineno}: non-numeric value") from None
            if i_f != int(i_f) or j_f != int(j_f):
                raise ParseError(f"{path}: line {lineno}: indices must be integers")
            i, j = int(i_f) - 1, int(j_f) - 1
            if not (0 <= i < neuron_count and 0 <= j < neuron_count):
                raise ConsistencyError(
                    f"{path}: line {lineno}: index out of range for {neuron_count} neurons"
                )
            if w > 0:
                if i == j:
                    raise ConsistencyError(f"{path}: line {lineno}: self edge")
                edges[i, j] = 1
    return GroundTruthNetwork(edges)


def load_dataset(fluorescence_path, positions_path, network_path=None,
                 sample_rate_hz=50.0):
    """Load a recording with its layout and, optionally, its ground truth.

    Dimensions are cross-checked: the positions file must describe exactly
    one neuron per fluorescence column, and network indices must fall in
    range.
    """
    panel = load_fluorescence(fluorescence_path, sample_rate_hz)
    layout = load_positions(positions_path)
    if layout.neuron_count != panel.neuron_count:
        raise ConsistencyError(
            f"{positions_path}: {layout.neuron_count} positions for "
            f"{panel.neuron_count} fluorescence columns"
        )
    network = None
    if network_path is not None:
        network = load_network(network_path, panel.neuron_count)
    return panel, layout, network


def load_score_matrix(path, method_tag=""):
    return ScoreMatrix(_load_float_matrix(path), method_tag)


def load_benchmark_dir(directory, sample_rate_hz=50.0, require_network=False):
    """Load fluorescence.csv / positions.csv / network.csv from a directory."""
    fluor = os.path.join(directory, "fluorescence.csv")
    pos = os.path.join(directory, "positions.csv")
    net = os.path.join(directory, "network.csv")
    if not os.path.exists(net):
        if require_network:
            raise ConsistencyError(f"{directory}: network.csv is required here")
        net = None
    return load_dataset(fluor, pos, net, sample_rate_hz)


# ---------------------------------------------------------------------------
# writing
# ---------------------------------------------------------------------------

def _atomic_write_text(path, text):
    """Write-then-rename so readers never observe a partial file."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".txt")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(value):
    """Trim a float to at most 9 decimals, keeping at least one."""
    text = f"{value:.9f}".rstrip("0")
    if text.endswith("."):
        text += "0"
    return text


def write_fluorescence(panel, path):
    lines = [",".join(f"{v:.9f}" for v in row) for row in panel.values]
    _atomic_write_text(path, "\n".join(lines) + "\n")


def write_positions(layout, path):
    lines = [f"{x:.9f},{y:.9f}" for x, y in layout.positions]
    _atomic_write_text(path, "\n".join(lines) + "\n")


def write_network(network, path):
    src, dst = np.nonzero(network.edges)
    lines = [f"{i + 1},{j + 1},1" for i, j in zip(src, dst)]
    _atomic_write_text(path, "\n".join(lines) + "\n")


def write_score_matrix(score_matrix, path, pgm_path=None):
    """Persist a ScoreMatrix as 9-decimal CSV, optionally plus a PGM heatmap.

    Reloading the CSV reproduces every entry within 1e-9.
    """
    if not isinstance(score_matrix, ScoreMatrix):
        score_matrix = ScoreMatrix(score_matrix)
    lines = [",".join(f"{v:.9f}" for v in row) for row in score_matrix.scores]
    _atomic_write_text(path, "\n".join(lines) + "\n")
    if pgm_path is not None:
        write_pgm_heatmap(score_matrix, pgm_path)


def write_pgm_heatmap(score_matrix, path):
    """8-bit grayscale P2 image of a score matrix; darker means lower."""
    scores = score_matrix.scores if isinstance(score_matrix, ScoreMatrix) else score_matrix
    pixels = np.rint(np.asarray(scores, dtype=float) * 255).astype(int)
    n_rows, n_cols = pixels.shape
    lines = [f"P2", f"{n_cols} {n_rows}", "255"]
    lines.extend(" ".join(str(v) for v in row) for row in pixels)
    _atomic_write_text(path, "\n".join(lines) + "\n")


def write_report(report, path):
    """Write an evaluation report: commented fold table + machine lines.

    The machine section has one metric per line ("auc,...", "prc,...",
    "seconds,...") and ends with the "method,auc,prc,seconds" summary row
    used by cross-validation summaries.
    """
    lines = [
        "# connectivity evaluation report",
        f"# method: {report.method_tag}",
        "# fold rows: fold,network,auc,prc" + (",seconds" if report.fold_seconds else ""),
    ]
    for k, (net_id, auc, prc) in enumerate(report.per_fold):
        row = f"fold,{net_id},{auc:.9f},{prc:.9f}"
        if report.fold_seconds:
            row += f",{_fmt(report.fold_seconds[k])}"
        lines.append(row)
    lines.append(f"auc,{_fmt(report.auc)}")
    lines.append(f"prc,{_fmt(report.prc)}")
    lines.append(f"seconds,{_fmt(report.wall_clock_seconds)}")
    lines.append(summary_line(report))
    _atomic_write_text(path, "\n".join(lines) + "\n")


def summary_line(report):
    """One "method,auc,prc,seconds" row, the cross-method comparison format."""
    return (f"{report.method_tag},{_fmt(report.auc)},{_fmt(report.prc)},"
            f"{_fmt(report.wall_clock_seconds)}")


def write_summary(reports, path):
    """Comparison table over methods, one summary row each."""
    lines = ["# method,auc,prc,seconds"]
    lines.extend(summary_line(r) for r in reports)
    _atomic_write_text(path, "\n".join(lines) + "\n")
