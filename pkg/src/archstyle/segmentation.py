"""Mask ingestion and foreground/background splitting for the two translation branches.

Masks are produced externally (any segmentation tool, or drawn by hand) and
arrive as 8-bit grayscale PNGs; this module only validates, binarizes and
applies them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from .imagecore import Image, Mask, alpha_composite

FILL_POLICIES = ("zero", "mean")


@dataclass
class RegionPair:
    """An image split into foreground/background under a shared mask.

    ``fg_fill_fallback``/``bg_fill_fallback`` flag regions that were empty
    under mean fill and silently fell back to zero fill.
    """

    foreground: Image
    background: Image
    mask: Mask
    fg_fill_fallback: bool = field(default=False)
    bg_fill_fallback: bool = field(default=False)

    def __post_init__(self):
        dims = (self.mask.height, self.mask.width)
        if (self.foreground.height, self.foreground.width) != dims or (
            self.background.height,
            self.background.width,
        ) != dims:
            raise ValueError("region pair images and mask must share dimensions")


def load_mask(path: str | Path, threshold: float = 0.5) -> Mask:
    """Load an 8-bit grayscale PNG and binarize: value/255 >= threshold -> 1."""
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must lie in (0, 1), got {threshold}")
    try:
        with PILImage.open(path) as im:
            if im.mode != "L":
                raise ValueError(
                    f"mask {path} must be an 8-bit grayscale PNG, got mode {im.mode!r}"
                )
            arr = np.asarray(im, dtype=np.float64)
    except FileNotFoundError:
        raise
    except ValueError:
        raise
    except Exception as exc:
        raise ValueError(f"unreadable mask file {path}: {exc}") from exc
    return Mask((arr / 255.0 >= threshold).astype(np.float64))


def _fill_value(x: np.ndarray, keep: np.ndarray, policy: str) -> tuple[np.ndarray, bool]:
    """Per-channel fill for the masked-out pixels; returns (fill, fell_back)."""
    if policy == "zero":
        return np.zeros(3), False
    if not np.any(keep):
        return np.zeros(3), True
    return x[keep].mean(axis=0), False


def split_regions(x: Image, m: Mask, fill: str = "mean") -> RegionPair:
    """Split an image into its foreground and background regions.

    Pixels outside each region are replaced per the fill policy: ``zero``
    or ``mean`` (the mean color of the region's own pixels). An empty
    region under mean fill falls back to zero fill and is flagged.
    """
    if fill not in FILL_POLICIES:
        raise ValueError(f"fill policy must be one of {FILL_POLICIES}, got {fill!r}")
    if (x.height, x.width) != (m.height, m.width):
        raise ValueError("image and mask dimensions must match")
    a = m.alpha[:, :, None]
    fg_keep = m.alpha > 0.0
    bg_keep = m.alpha < 1.0
    fg_fill, fg_fb = _fill_value(x.data, fg_keep, fill)
    bg_fill, bg_fb = _fill_value(x.data, bg_keep, fill)
    foreground = Image(a * x.data + (1.0 - a) * fg_fill)
    background = Image((1.0 - a) * x.data + a * bg_fill)
    return RegionPair(foreground, background, m, fg_fill_fallback=fg_fb, bg_fill_fallback=bg_fb)


def merge_regions(rp: RegionPair) -> Image:
    """Recombine a region pair; exact inverse of split_regions for binary masks."""
    return alpha_composite(rp.foreground, rp.background, rp.mask)
