"""Content/style encoders, domain mapper, AdaIN generator and multi-scale discriminator.

Channel widths derive from ``base_width`` (w): content codes carry 2w channels
at 1/4 spatial resolution; the default w = 64 gives 128-channel codes.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import torch
import torch.nn as nn

from .layers import AdaResBlock, LayerNorm2d, ResBlock, StyleParamMapper, conv_block

N_CONTENT_BLOCKS = 4
N_GENERATOR_BLOCKS = 4
DISC_MIN_INPUT = 16  # four stride-2 convs need at least 16 pixels per side


@dataclass
class NetConfig:
    base_width: int = 64
    style_dim: int = 8
    n_disc_scales: int = 3
    image_size: int = 256
    seed: int = 0

    def __post_init__(self):
        if self.base_width < 8:
            raise ValueError("base_width must be >= 8")
        if self.n_disc_scales < 1:
            raise ValueError("n_disc_scales must be >= 1")
        if self.image_size % 4 != 0:
            raise ValueError("image_size must be divisible by 4")

    @property
    def code_channels(self) -> int:
        return 2 * self.base_width

    def to_mapping(self) -> dict[str, str]:
        return {f.name: str(getattr(self, f.name)) for f in fields(self)}

    @classmethod
    def from_mapping(cls, m) -> "NetConfig":
        names = {f.name for f in fields(cls)}
        return cls(**{k: int(v) for k, v in m.items() if k in names})


class ContentEncoder(nn.Module):
    """Downsamples 4x into a content feature map; final residual block is shared."""

    def __init__(self, cfg: NetConfig, shared_block: ResBlock):
        super().__init__()
        w = cfg.base_width
        self.down = nn.Sequential(
            conv_block(3, w, 7, 1),
            conv_block(w, 2 * w, 4, 2),
            conv_block(2 * w, 2 * w, 4, 2),
            *[ResBlock(2 * w) for _ in range(N_CONTENT_BLOCKS)],
        )
        self.shared = shared_block

    def forward(self, x):
        if x.shape[-1] % 4 != 0 or x.shape[-2] % 4 != 0:
            raise ValueError(
                f"content encoder needs dims divisible by 4, got {tuple(x.shape[-2:])}"
            )
        return self.shared(self.down(x))


class DomainMapper(nn.Module):
    """Maps domain-invariant content codes into a domain-specific code space."""

    def __init__(self, cfg: NetConfig):
        super().__init__()
        c = cfg.code_channels
        self.net = nn.Sequential(
            nn.ConvTranspose2d(c, c, 3, stride=2, padding=1, output_padding=1),
            nn.InstanceNorm2d(c),
            nn.ReLU(inplace=True),
            conv_block(c, c, 4, 2),
        )

    def forward(self, c):
        return self.net(c)


class StyleEncoder(nn.Module):
    """Pools an image into a short style code via strided convs, GAP and a linear head."""

    def __init__(self, cfg: NetConfig):
        super().__init__()
        w = cfg.base_width
        self.net = nn.Sequential(
            conv_block(3, w, 7, 1, norm="none"),
            conv_block(w, 2 * w, 4, 2, norm="none"),
            conv_block(2 * w, 4 * w, 4, 2, norm="none"),
            conv_block(4 * w, 4 * w, 4, 2, norm="none"),
            conv_block(4 * w, 4 * w, 4, 2, norm="none"),
            nn.AdaptiveAvgPool2d(1),
            nn.Flatten(),
        )
        self.head = nn.Linear(4 * w, cfg.style_dim)

    def forward(self, x):
        if min(x.shape[-1], x.shape[-2]) < 32:
            raise ValueError(
                f"style encoder needs dims >= 32, got {tuple(x.shape[-2:])}"
            )
        return self.head(self.net(x))


class Generator(nn.Module):
    """Decodes a domain-specific content code and a style code into an image.

    Style enters through AdaIN statistics in the residual blocks; the final
    tanh output is mapped from [-1, 1] to [0, 1] at the module boundary.
    """

    def __init__(self, cfg: NetConfig):
        super().__init__()
        c = cfg.code_channels
        w = cfg.base_width
        self.blocks = nn.ModuleList([AdaResBlock(c) for _ in range(N_GENERATOR_BLOCKS)])
        self.style_map = StyleParamMapper(
            cfg.style_dim, sum(b.n_style_params for b in self.blocks)
        )
        self.up = nn.Sequential(
            nn.Upsample(scale_factor=2, mode="nearest"),
            nn.Conv2d(c, c, 5, padding=2, padding_mode="reflect"),
            LayerNorm2d(c),
            nn.ReLU(inplace=True),
            nn.Upsample(scale_factor=2, mode="nearest"),
            nn.Conv2d(c, w, 5, padding=2, padding_mode="reflect"),
            LayerNorm2d(w),
            nn.ReLU(inplace=True),
            nn.Conv2d(w, 3, 7, padding=3, padding_mode="reflect"),
            nn.Tanh(),
        )

    def forward(self, z, s):
        params = self.style_map(s)
        h = z
        offset = 0
        for block in self.blocks:
            n = block.n_style_params
            h = block(h, params[:, offset : offset + n])
            offset += n
        return 0.5 * (self.up(h) + 1.0)


class ScaleDiscriminator(nn.Module):
    """Single-scale least-squares patch discriminator."""

    def __init__(self, cfg: NetConfig):
        super().__init__()
        w = cfg.base_width
        self.net = nn.Sequential(
            conv_block(3, w, 4, 2, norm="none", act="lrelu"),
            conv_block(w, 2 * w, 4, 2, norm="none", act="lrelu"),
            conv_block(2 * w, 4 * w, 4, 2, norm="none", act="lrelu"),
            conv_block(4 * w, 8 * w, 4, 2, norm="none", act="lrelu"),
            nn.Conv2d(8 * w, 1, 1),
        )

    def forward(self, x):
        return self.net(x)


class MultiScaleDiscriminator(nn.Module):
    """Runs the same patch discriminator on progressively halved inputs."""

    def __init__(self, cfg: NetConfig):
        super().__init__()
        self.scales = nn.ModuleList(
            [ScaleDiscriminator(cfg) for _ in range(cfg.n_disc_scales)]
        )
        self.pool = nn.AvgPool2d(3, stride=2, padding=1)

    def forward(self, x) -> list[torch.Tensor]:
        smallest = min(x.shape[-1], x.shape[-2]) >> (len(self.scales) - 1)
        if smallest < DISC_MIN_INPUT:
            raise ValueError(
                f"input {tuple(x.shape[-2:])} too small for {len(self.scales)} "
                f"discriminator scales (deepest scale needs >= {DISC_MIN_INPUT} px)"
            )
        outputs = []
        for disc in self.scales:
            outputs.append(disc(x))
            x = self.pool(x)
        return outputs
