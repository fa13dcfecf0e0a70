"""Pixel containers, luminance conversion, spatial derivatives, pyramids and PNG I/O.

Conventions used throughout the package:
  * intensities are real-valued in [0, 1]; 8-bit values exist only at the
    PNG boundary (divide by 255 on load, round-to-nearest on save)
  * image arrays are row-major (H, W, 3), single-channel maps are (H, W)
  * spatial gradients are forward differences with replicate boundary, so
    the last column of gx and the last row of gy are zero
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image as PILImage
from scipy import ndimage as ndi

# ITU-R BT.601 luma coefficients for (R, G, B)
LUMA_WEIGHTS = (0.299, 0.587, 0.114)

# Binomial 5-tap kernel (Burt-Adelson), sums to 1 exactly
PYRAMID_KERNEL = np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0


@dataclass
class Image:
    """H x W x 3 map of RGB intensities in [0, 1]."""

    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 3 or self.data.shape[2] != 3:
            raise ValueError(f"image data must be (H, W, 3), got {self.data.shape}")
        if self.data.shape[0] < 1 or self.data.shape[1] < 1:
            raise ValueError("image must be at least 1x1")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("image contains non-finite values")
        if self.data.min() < 0.0 or self.data.max() > 1.0:
            raise ValueError("image intensities must lie in [0, 1]")

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


@dataclass
class Luma:
    """Single-channel luminance map in [0, 1]."""

    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 2:
            raise ValueError(f"luma data must be (H, W), got {self.data.shape}")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("luma contains non-finite values")

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


@dataclass
class GradientField:
    """Per-pixel forward differences (gx, gy), units of intensity per pixel."""

    gx: np.ndarray
    gy: np.ndarray

    def __post_init__(self):
        self.gx = np.asarray(self.gx, dtype=np.float64)
        self.gy = np.asarray(self.gy, dtype=np.float64)
        if self.gx.shape != self.gy.shape or self.gx.ndim != 2:
            raise ValueError("gx and gy must be 2-d arrays of equal shape")
        if not (np.all(np.isfinite(self.gx)) and np.all(np.isfinite(self.gy))):
            raise ValueError("gradient field contains non-finite values")
        if np.any(self.gx[:, -1] != 0.0) or np.any(self.gy[-1, :] != 0.0):
            raise ValueError("replicate boundary requires zero last column/row")

    @property
    def height(self) -> int:
        return self.gx.shape[0]

    @property
    def width(self) -> int:
        return self.gx.shape[1]


@dataclass
class Mask:
    """Per-pixel alpha in [0, 1]; 1 marks foreground."""

    alpha: np.ndarray

    def __post_init__(self):
        self.alpha = np.asarray(self.alpha, dtype=np.float64)
        if self.alpha.ndim != 2:
            raise ValueError(f"mask alpha must be (H, W), got {self.alpha.shape}")
        if not np.all(np.isfinite(self.alpha)):
            raise ValueError("mask contains non-finite values")
        if self.alpha.min() < 0.0 or self.alpha.max() > 1.0:
            raise ValueError("mask alpha must lie in [0, 1]")

    @property
    def height(self) -> int:
        return self.alpha.shape[0]

    @property
    def width(self) -> int:
        return self.alpha.shape[1]

    def is_binary(self) -> bool:
        return bool(np.all((self.alpha == 0.0) | (self.alpha == 1.0)))


def rgb_to_luma(img: Image) -> Luma:
    """BT.601 luminance: Y = 0.299 R + 0.587 G + 0.114 B."""
    wr, wg, wb = LUMA_WEIGHTS
    d = img.data
    return Luma(wr * d[:, :, 0] + wg * d[:, :, 1] + wb * d[:, :, 2])


def spatial_gradient(l: Luma) -> GradientField:
    """Forward differences with replicate boundary (last column/row zero)."""
    gx, gy = forward_diff(l.data)
    return GradientField(gx, gy)


def forward_diff(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Forward differences of a 2-d array under replicate boundary."""
    gx = np.zeros_like(a)
    gy = np.zeros_like(a)
    gx[:, :-1] = a[:, 1:] - a[:, :-1]
    gy[:-1, :] = a[1:, :] - a[:-1, :]
    return gx, gy


def divergence(gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
    """Exact negative adjoint of forward_diff: <grad a, g> == -<a, div g>."""
    d = np.zeros_like(gx)
    d[:, :-1] += gx[:, :-1]
    d[:, 1:] -= gx[:, :-1]
    d[:-1, :] += gy[:-1, :]
    d[1:, :] -= gy[:-1, :]
    return d


def alpha_composite(fg: Image, bg: Image, m: Mask) -> Image:
    """Per-pixel blend m*fg + (1-m)*bg."""
    if fg.data.shape != bg.data.shape or (fg.height, fg.width) != (m.height, m.width):
        raise ValueError("alpha_composite requires matching dimensions")
    a = m.alpha[:, :, None]
    return Image(a * fg.data + (1.0 - a) * bg.data)


def blur5(a: np.ndarray) -> np.ndarray:
    """Separable 5-tap binomial blur with replicate boundary (2-d or 3-d array)."""
    out = ndi.correlate1d(a, PYRAMID_KERNEL, axis=0, mode="nearest")
    return ndi.correlate1d(out, PYRAMID_KERNEL, axis=1, mode="nearest")


def downsample2(a: np.ndarray) -> np.ndarray:
    """Blur with the pyramid kernel, then keep every other row/column."""
    if a.shape[0] < 2 or a.shape[1] < 2:
        raise ValueError("downsample2 requires both dimensions >= 2")
    return blur5(a)[::2, ::2]


def resize_bilinear(a: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resize of a 2-d or 3-d array using half-pixel centers."""
    if out_h < 1 or out_w < 1:
        raise ValueError("target dimensions must be positive")
    in_h, in_w = a.shape[0], a.shape[1]
    r = np.clip((np.arange(out_h) + 0.5) * (in_h / out_h) - 0.5, 0, in_h - 1)
    c = np.clip((np.arange(out_w) + 0.5) * (in_w / out_w) - 0.5, 0, in_w - 1)
    r0 = np.floor(r).astype(np.intp)
    c0 = np.floor(c).astype(np.intp)
    r1 = np.minimum(r0 + 1, in_h - 1)
    c1 = np.minimum(c0 + 1, in_w - 1)
    wr = (r - r0).reshape(-1, 1)
    wc = (c - c0).reshape(1, -1)
    if a.ndim == 3:
        wr = wr[:, :, None]
        wc = wc[:, :, None]
    top = a[r0][:, c0] + wc * (a[r0][:, c1] - a[r0][:, c0])
    bot = a[r1][:, c0] + wc * (a[r1][:, c1] - a[r1][:, c0])
    return top + wr * (bot - top)


def pyramid_down(img: Image) -> Image:
    """One Gaussian pyramid level down: blur then 2x decimate, ceil(dims/2)."""
    return Image(np.clip(downsample2(img.data), 0.0, 1.0))


def pyramid_up(img: Image, target_dims: tuple[int, int]) -> Image:
    """Bilinear resize to target (height, width)."""
    h, w = target_dims
    if h < 1 or w < 1:
        raise ValueError("target dimensions must be positive")
    return Image(np.clip(resize_bilinear(img.data, h, w), 0.0, 1.0))


def load_png(path: str | Path) -> Image:
    """Load an 8-bit RGB or RGBA PNG; alpha is dropped, values scaled to [0, 1]."""
    try:
        with PILImage.open(path) as im:
            mode = im.mode
            if mode not in ("RGB", "RGBA"):
                raise ValueError(
                    f"unsupported PNG format {mode!r} in {path}: expected 8-bit RGB or RGBA"
                )
            arr = np.asarray(im)
    except FileNotFoundError:
        raise
    except ValueError:
        raise
    except Exception as exc:
        raise ValueError(f"unreadable image file {path}: {exc}") from exc
    return Image(arr[:, :, :3].astype(np.float64) / 255.0)


def save_png(img: Image, path: str | Path) -> None:
    """Write an 8-bit RGB PNG, rounding intensities to the nearest 1/255 step."""
    data = np.rint(img.data * 255.0).astype(np.uint8)
    PILImage.fromarray(data, mode="RGB").save(path, format="PNG")
