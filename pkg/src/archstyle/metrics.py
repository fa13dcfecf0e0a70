"""Evaluation harness: SSIM, Canny edge maps, edge-SSIM, IoU, top-1 accuracy, Inception Score.

Structural metrics run on luminance; edge-SSIM compares Canny edge maps so
that a global brightness change (day versus night) does not drown out
geometry differences. Class posteriors for accuracy and Inception Score are
supplied externally as a CSV table; no classifier ships with the package.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage as ndi

from .imagecore import Image, Luma, Mask, load_png, resize_bilinear, rgb_to_luma

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


@dataclass
class EdgeMap:
    """Binary per-pixel edge indicator."""

    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data)
        if self.data.ndim != 2:
            raise ValueError("edge map must be 2-d")
        if not np.all((self.data == 0) | (self.data == 1)):
            raise ValueError("edge map values must be 0 or 1")
        self.data = self.data.astype(np.uint8)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


def _ssim_window() -> np.ndarray:
    r = SSIM_WINDOW // 2
    g = np.exp(-(np.arange(-r, r + 1) ** 2) / (2.0 * SSIM_SIGMA**2))
    g /= g.sum()
    return np.outer(g, g)


def _ssim2d(a: np.ndarray, b: np.ndarray, data_range: float = 1.0) -> float:
    if a.shape != b.shape:
        raise ValueError("ssim inputs must share dimensions")
    if min(a.shape) < SSIM_WINDOW:
        raise ValueError(f"image smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} ssim window")
    w = _ssim_window()
    pad = SSIM_WINDOW // 2
    mu_a = ndi.correlate(a, w, mode="nearest")
    mu_b = ndi.correlate(b, w, mode="nearest")
    var_a = ndi.correlate(a * a, w, mode="nearest") - mu_a**2
    var_b = ndi.correlate(b * b, w, mode="nearest") - mu_b**2
    cov = ndi.correlate(a * b, w, mode="nearest") - mu_a * mu_b
    c1 = (SSIM_K1 * data_range) ** 2
    c2 = (SSIM_K2 * data_range) ** 2
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2)
    ssim_map = num / den
    return float(ssim_map[pad:-pad, pad:-pad].mean())


def ssim(a: Image, b: Image) -> float:
    """Mean windowed SSIM on luminance (11x11 Gaussian window, unit dynamic range)."""
    return _ssim2d(rgb_to_luma(a).data, rgb_to_luma(b).data)


def canny(l: Luma, low: float = 0.1, high: float = 0.2, sigma: float = 1.4) -> EdgeMap:
    """Canny edge detection: smooth, Sobel, non-maximum suppression, hysteresis.

    Thresholds apply to gradient magnitudes normalized so a hard unit step
    has magnitude 1. Magnitude plateaus along the gradient direction resolve
    to the pixel nearer the negative gradient side, keeping edges one pixel
    wide.
    """
    if not (0.0 < low < high):
        raise ValueError(f"thresholds must satisfy 0 < low < high, got {low}, {high}")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    smooth = ndi.gaussian_filter(l.data, sigma, mode="nearest")
    gx = ndi.sobel(smooth, axis=1, mode="nearest") / 4.0
    gy = ndi.sobel(smooth, axis=0, mode="nearest") / 4.0
    mag = np.hypot(gx, gy)

    h, w = mag.shape
    padded = np.zeros((h + 2, w + 2))
    padded[1:-1, 1:-1] = mag
    angle = np.mod(np.rad2deg(np.arctan2(gy, gx)), 180.0)
    # neighbor offsets (row, col) along the positive gradient direction
    sectors = [
        ((angle < 22.5) | (angle >= 157.5), (0, 1)),
        ((angle >= 22.5) & (angle < 67.5), (1, 1)),
        ((angle >= 67.5) & (angle < 112.5), (1, 0)),
        ((angle >= 112.5) & (angle < 157.5), (1, -1)),
    ]
    keep = np.zeros_like(mag, dtype=bool)
    for sel, (dr, dc) in sectors:
        fwd = padded[1 + dr : 1 + dr + h, 1 + dc : 1 + dc + w]
        bwd = padded[1 - dr : 1 - dr + h, 1 - dc : 1 - dc + w]
        keep |= sel & (mag > bwd) & (mag >= fwd)
    nms = np.where(keep, mag, 0.0)

    weak = nms >= low
    strong = nms >= high
    labels, _ = ndi.label(weak, structure=np.ones((3, 3)))
    strong_labels = np.unique(labels[strong])
    edges = weak & np.isin(labels, strong_labels[strong_labels > 0])
    return EdgeMap(edges.astype(np.uint8))


def edge_ssim(
    a: Image, b: Image, low: float = 0.1, high: float = 0.2, sigma: float = 1.4
) -> float:
    """SSIM between the Canny edge maps of two images."""
    ea = canny(rgb_to_luma(a), low, high, sigma)
    eb = canny(rgb_to_luma(b), low, high, sigma)
    return _ssim2d(ea.data.astype(np.float64), eb.data.astype(np.float64))


def iou(a: Mask, b: Mask) -> float:
    """Intersection over union of two binary masks; 1.0 when both are empty."""
    if (a.height, a.width) != (b.height, b.width):
        raise ValueError("masks must share dimensions")
    if not (a.is_binary() and b.is_binary()):
        raise ValueError("iou requires binary masks")
    fa = a.alpha > 0.5
    fb = b.alpha > 0.5
    union = np.logical_or(fa, fb).sum()
    if union == 0:
        return 1.0
    return float(np.logical_and(fa, fb).sum() / union)


@dataclass
class ProbTable:
    """Per-image class posteriors, optionally with ground-truth labels."""

    ids: list[str]
    probs: np.ndarray
    labels: list[int] | None = None

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=np.float64)
        if self.probs.ndim != 2 or self.probs.shape[1] < 2:
            raise ValueError("probabilities must be (rows, classes) with >= 2 classes")
        if len(self.ids) != self.probs.shape[0]:
            raise ValueError("one id per probability row required")
        if self.labels is not None and len(self.labels) != len(self.ids):
            raise ValueError("one label per row required when labels are present")
        if np.any(self.probs < 0):
            raise ValueError("probabilities must be non-negative")
        sums = self.probs.sum(axis=1)
        bad = np.where(np.abs(sums - 1.0) > 1e-6)[0]
        if bad.size:
            raise ValueError(
                f"row {self.ids[bad[0]]!r} does not sum to 1 (sum={sums[bad[0]]:.8f})"
            )

    @property
    def n_classes(self) -> int:
        return self.probs.shape[1]

    @classmethod
    def from_csv(cls, path: str | Path) -> "ProbTable":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None:
                raise ValueError(f"{path}: empty probability table")
            header = [h.strip() for h in header]
            if header[0] != "id":
                raise ValueError(f"{path}: first column must be 'id'")
            has_label = len(header) > 1 and header[1] == "label"
            first_p = 2 if has_label else 1
            ids, labels, rows = [], [], []
            for row in reader:
                if not row:
                    continue
                ids.append(row[0].strip())
                if has_label:
                    labels.append(int(row[1]))
                rows.append([float(v) for v in row[first_p:]])
        return cls(ids, np.array(rows), labels if has_label else None)


def top1_accuracy(p: ProbTable) -> float:
    """Fraction of rows whose highest-probability class matches the label."""
    if p.labels is None:
        raise ValueError("top-1 accuracy requires a label column")
    pred = np.argmax(p.probs, axis=1)  # ties break to the lowest class index
    return float(np.mean(pred == np.asarray(p.labels)))


def inception_score(p: ProbTable, splits: int = 1) -> float:
    """exp of the mean KL divergence between row posteriors and their marginal.

    With ``splits`` > 1 the rows are divided into contiguous groups and the
    per-group scores averaged (the original formulation used 10 splits).
    """
    if splits < 1 or splits > len(p.ids):
        raise ValueError("splits must lie in [1, number of rows]")
    chunks = np.array_split(p.probs, splits)
    scores = []
    for chunk in chunks:
        marginal = chunk.mean(axis=0)
        ratio = np.divide(
            chunk, marginal, out=np.ones_like(chunk), where=(chunk > 0) & (marginal > 0)
        )
        kl = np.sum(chunk * np.log(ratio), axis=1)
        scores.append(np.exp(kl.mean()))
    return float(np.mean(scores))


@dataclass
class EvalParams:
    canny_sigma: float = 1.4
    canny_low: float = 0.1
    canny_high: float = 0.2
    resize_to: int | None = 256
    is_splits: int = 1

    def header(self) -> str:
        return (
            f"# canny_sigma={self.canny_sigma} canny_low={self.canny_low} "
            f"canny_high={self.canny_high} resize_to={self.resize_to} "
            f"is_splits={self.is_splits}"
        )


@dataclass
class EvalRow:
    id: str
    ssim: float
    essim: float
    iou: float | None = None


@dataclass
class CorpusReport:
    params: EvalParams
    rows: list[EvalRow]
    accuracy: float | None = None
    inception: float | None = None
    skipped: list[str] = field(default_factory=list)

    def _mean(self, attr: str) -> float | None:
        vals = [getattr(r, attr) for r in self.rows if getattr(r, attr) is not None]
        return float(np.mean(vals)) if vals else None

    @property
    def mean_ssim(self) -> float | None:
        return self._mean("ssim")

    @property
    def mean_essim(self) -> float | None:
        return self._mean("essim")

    @property
    def mean_iou(self) -> float | None:
        return self._mean("iou")

    def to_csv(self) -> str:
        def fmt(v):
            return "" if v is None else f"{v:.6f}"

        buf = io.StringIO()
        buf.write(self.params.header() + "\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["id", "ssim", "essim", "iou"])
        for r in self.rows:
            writer.writerow([r.id, fmt(r.ssim), fmt(r.essim), fmt(r.iou)])
        writer.writerow(["mean", fmt(self.mean_ssim), fmt(self.mean_essim), fmt(self.mean_iou)])
        if self.accuracy is not None:
            buf.write(f"# accuracy={self.accuracy:.6f}\n")
        if self.inception is not None:
            buf.write(f"# inception_score={self.inception:.6f}\n")
        if self.skipped:
            buf.write(f"# skipped={len(self.skipped)}: {' '.join(self.skipped)}\n")
        return buf.getvalue()


def _resize_image(img: Image, target: int) -> Image:
    h, w = img.height, img.width
    short = min(h, w)
    if short == target:
        return img
    scale = target / short
    out = resize_bilinear(img.data, max(1, round(h * scale)), max(1, round(w * scale)))
    return Image(np.clip(out, 0.0, 1.0))


def _resize_mask(m: Mask, target: int) -> Mask:
    h, w = m.height, m.width
    short = min(h, w)
    if short == target:
        return m
    scale = target / short
    out = resize_bilinear(m.alpha, max(1, round(h * scale)), max(1, round(w * scale)))
    return Mask((out >= 0.5).astype(np.float64))


def _png_stems(directory: Path) -> dict[str, Path]:
    return {p.stem: p for p in sorted(directory.glob("*.png"))}


def eval_corpus(
    results_dir: str | Path,
    refs_dir: str | Path,
    masks_dir: str | Path | None = None,
    probs_file: str | Path | None = None,
    params: EvalParams | None = None,
) -> CorpusReport:
    """Score a directory of generated images against aligned references.

    Directories pair files by stem; unmatched stems are skipped and listed.
    ``masks_dir`` must hold ``results/`` and ``refs/`` subdirectories with
    externally produced binary masks per stem; IoU is computed between the
    two. Accuracy and Inception Score come from the probability table, which
    covers the corpus as a whole.
    """
    params = params or EvalParams()
    results = _png_stems(Path(results_dir))
    refs = _png_stems(Path(refs_dir))
    stems = sorted(set(results) & set(refs))
    skipped = sorted(set(results) ^ set(refs))
    if not stems:
        raise ValueError("no filename stems shared between results and refs: zero rows")

    mask_results = mask_refs = {}
    if masks_dir is not None:
        mask_results = _png_stems(Path(masks_dir) / "results")
        mask_refs = _png_stems(Path(masks_dir) / "refs")

    rows = []
    for stem in stems:
        out_img = load_png(results[stem])
        ref_img = load_png(refs[stem])
        if params.resize_to:
            out_img = _resize_image(out_img, params.resize_to)
            ref_img = _resize_image(ref_img, params.resize_to)
        row = EvalRow(
            id=stem,
            ssim=ssim(out_img, ref_img),
            essim=edge_ssim(
                out_img, ref_img, params.canny_low, params.canny_high, params.canny_sigma
            ),
        )
        if stem in mask_results and stem in mask_refs:
            from .segmentation import load_mask

            ma = load_mask(mask_results[stem])
            mb = load_mask(mask_refs[stem])
            if params.resize_to:
                ma = _resize_mask(ma, params.resize_to)
                mb = _resize_mask(mb, params.resize_to)
            row.iou = iou(ma, mb)
        rows.append(row)

    accuracy = inception = None
    if probs_file is not None:
        table = ProbTable.from_csv(probs_file)
        inception = inception_score(table, splits=params.is_splits)
        if table.labels is not None:
            accuracy = top1_accuracy(table)
    return CorpusReport(params, rows, accuracy=accuracy, inception=inception, skipped=skipped)
