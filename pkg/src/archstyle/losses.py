"""Generator and discriminator training objectives as differentiable torch kernels.

Every loss is a mean (not a sum) so the balancing weights are independent of
image resolution and batch size. Image tensors are (B, 3, H, W) or (3, H, W)
with intensities in [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Mapping, Sequence

import torch

from .imagecore import LUMA_WEIGHTS

KL_EPS = 1e-6

# canonical order of the generator loss terms
GEN_TERMS = ("x", "c", "s", "z", "cycle", "adv", "gd", "kl")


@dataclass
class LossWeights:
    """Balancing weights of the total generator loss.

    Defaults are the foreground-branch settings; the background branch
    zeroes the two geometry terms (gd, kl) so the generator is free to
    synthesize new sky texture.
    """

    lambda_x: float = 10.0
    lambda_c: float = 2.0
    lambda_s: float = 10.0
    lambda_z: float = 2.0
    lambda_cycle: float = 5.0
    lambda_adv: float = 1.0
    lambda_gd: float = 5.0
    lambda_kl: float = 5.0

    def __post_init__(self):
        for f in fields(self):
            v = float(getattr(self, f.name))
            if not (v >= 0.0 and v == v and v != float("inf")):
                raise ValueError(f"{f.name} must be a finite non-negative real, got {v}")
            setattr(self, f.name, v)

    @classmethod
    def foreground(cls) -> "LossWeights":
        return cls()

    @classmethod
    def background(cls) -> "LossWeights":
        return cls(lambda_gd=0.0, lambda_kl=0.0)

    @classmethod
    def from_mapping(cls, m: Mapping[str, object]) -> "LossWeights":
        names = {f.name for f in fields(cls)}
        kwargs = {k: float(v) for k, v in m.items() if k in names}
        return cls(**kwargs)

    def weight(self, term: str) -> float:
        return getattr(self, "lambda_" + term)


@dataclass
class LossReport:
    """One scalar per generator loss term plus their weighted total."""

    x: float
    c: float
    s: float
    z: float
    cycle: float
    adv: float
    gd: float
    kl: float
    total: float

    def as_dict(self) -> dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def _batched(t: torch.Tensor) -> torch.Tensor:
    if t.dim() == 3:
        return t.unsqueeze(0)
    if t.dim() == 4:
        return t
    raise ValueError(f"expected (3, H, W) or (B, 3, H, W) tensor, got shape {tuple(t.shape)}")


def luma(x: torch.Tensor) -> torch.Tensor:
    """BT.601 luminance of an image tensor, (B, 3, H, W) -> (B, H, W)."""
    x = _batched(x)
    w = x.new_tensor(LUMA_WEIGHTS)
    return torch.einsum("bchw,c->bhw", x, w)


def gradient_loss(out: torch.Tensor, src: torch.Tensor) -> torch.Tensor:
    """L1 distance between luminance forward-difference fields.

    Boundary forward differences are zero on both sides and still count in
    the per-pixel mean.
    """
    out, src = _batched(out), _batched(src)
    if out.shape != src.shape:
        raise ValueError(f"shape mismatch: {tuple(out.shape)} vs {tuple(src.shape)}")
    yo, ys = luma(out), luma(src)
    n = yo.numel()
    dx = (yo[:, :, 1:] - yo[:, :, :-1]) - (ys[:, :, 1:] - ys[:, :, :-1])
    dy = (yo[:, 1:, :] - yo[:, :-1, :]) - (ys[:, 1:, :] - ys[:, :-1, :])
    return (dx.abs().sum() + dy.abs().sum()) / n


def luminance_kl_loss(out: torch.Tensor, style: torch.Tensor) -> torch.Tensor:
    """KL divergence between spatial luminance distributions.

    Each luminance map is floored by a small epsilon and renormalized to sum
    to one over its pixels, so the loss compares where light sits in the
    frame rather than absolute brightness.
    """
    out, style = _batched(out), _batched(style)
    if out.shape != style.shape:
        raise ValueError(f"shape mismatch: {tuple(out.shape)} vs {tuple(style.shape)}")
    p = luma(out).flatten(1) + KL_EPS
    q = luma(style).flatten(1) + KL_EPS
    p = p / p.sum(dim=1, keepdim=True)
    q = q / q.sum(dim=1, keepdim=True)
    return (p * (p / q).log()).sum(dim=1).mean()


def l1_loss(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    """Mean absolute difference; used for image, content, style and cycle terms."""
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {tuple(a.shape)} vs {tuple(b.shape)}")
    return (a - b).abs().mean()


def _as_scale_list(scores) -> list[torch.Tensor]:
    if isinstance(scores, torch.Tensor):
        scores = [scores]
    scores = list(scores)
    if not scores:
        raise ValueError("empty score set")
    return scores


def lsgan_d_loss(real_scores, fake_scores) -> torch.Tensor:
    """Least-squares discriminator loss, averaged over scales."""
    real_scores = _as_scale_list(real_scores)
    fake_scores = _as_scale_list(fake_scores)
    if len(real_scores) != len(fake_scores):
        raise ValueError("real and fake score sets must have the same number of scales")
    per_scale = [
        0.5 * ((r - 1.0) ** 2).mean() + 0.5 * (f**2).mean()
        for r, f in zip(real_scores, fake_scores)
    ]
    return torch.stack(per_scale).mean()


def lsgan_g_loss(fake_scores) -> torch.Tensor:
    """Least-squares generator loss, averaged over scales."""
    fake_scores = _as_scale_list(fake_scores)
    per_scale = [0.5 * ((f - 1.0) ** 2).mean() for f in fake_scores]
    return torch.stack(per_scale).mean()


def _term_value(v) -> float:
    return float(v.detach()) if isinstance(v, torch.Tensor) else float(v)


def weighted_total(terms: Mapping[str, object], w: LossWeights):
    """Weighted sum of generator terms; preserves tensors for backprop."""
    return sum(w.weight(k) * terms[k] for k in GEN_TERMS)


def total_generator_loss(terms: Mapping[str, object], w: LossWeights) -> LossReport:
    """Combine the per-term scalars into a report with their weighted total.

    Any non-finite term is rejected by name before it can poison the total.
    """
    values = {}
    for k in GEN_TERMS:
        if k not in terms:
            raise ValueError(f"missing loss term {k!r}")
        v = _term_value(terms[k])
        if not (v == v and abs(v) != float("inf")):
            raise ValueError(f"loss term {k!r} is non-finite ({v})")
        values[k] = v
    total = sum(w.weight(k) * values[k] for k in GEN_TERMS)
    return LossReport(total=total, **values)
