"""Building blocks shared by the translation networks."""

from __future__ import annotations

import math

import torch
import torch.nn as nn
import torch.nn.functional as F

ADAIN_STD_FLOOR = 1e-5

# softplus(x + _SOFTPLUS_ONE) == 1 at x == 0, so predicted scales start near 1
_SOFTPLUS_ONE = math.log(math.e - 1.0)


def adain(feat: torch.Tensor, mean_t: torch.Tensor, std_t: torch.Tensor) -> torch.Tensor:
    """Adaptive instance normalization.

    Replaces the per-channel (population) mean/std of ``feat`` with the target
    statistics. ``feat`` is (B, C, H, W); targets broadcast from (C,), (B, C)
    or (B, C, 1, 1). Target std must be strictly positive.
    """
    if feat.dim() != 4:
        raise ValueError(f"expected (B, C, H, W) features, got shape {tuple(feat.shape)}")
    mean_t = torch.as_tensor(mean_t, dtype=feat.dtype)
    std_t = torch.as_tensor(std_t, dtype=feat.dtype)
    if (std_t <= 0).any():
        raise ValueError("adain target std must be strictly positive")
    if mean_t.dim() <= 2:
        mean_t = mean_t.reshape(*mean_t.shape, 1, 1)
    if std_t.dim() <= 2:
        std_t = std_t.reshape(*std_t.shape, 1, 1)
    mu = feat.mean(dim=(2, 3), keepdim=True)
    sigma = feat.var(dim=(2, 3), keepdim=True, unbiased=False).sqrt().clamp_min(ADAIN_STD_FLOOR)
    return std_t * (feat - mu) / sigma + mean_t


class LayerNorm2d(nn.Module):
    """Layer normalization over (C, H, W) per sample with per-channel affine."""

    def __init__(self, channels: int, eps: float = 1e-5):
        super().__init__()
        self.eps = eps
        self.gamma = nn.Parameter(torch.ones(1, channels, 1, 1))
        self.beta = nn.Parameter(torch.zeros(1, channels, 1, 1))

    def forward(self, x):
        mu = x.mean(dim=(1, 2, 3), keepdim=True)
        var = x.var(dim=(1, 2, 3), keepdim=True, unbiased=False)
        return self.gamma * (x - mu) / torch.sqrt(var + self.eps) + self.beta


def conv_block(in_ch, out_ch, kernel, stride, norm="in", act="relu"):
    """conv -> optional InstanceNorm -> activation, with reflect padding."""
    layers = [
        nn.Conv2d(
            in_ch,
            out_ch,
            kernel,
            stride=stride,
            padding=(kernel - 1) // 2,
            padding_mode="reflect",
        )
    ]
    if norm == "in":
        layers.append(nn.InstanceNorm2d(out_ch))
    elif norm != "none":
        raise ValueError(f"unknown norm {norm!r}")
    if act == "relu":
        layers.append(nn.ReLU(inplace=True))
    elif act == "lrelu":
        layers.append(nn.LeakyReLU(0.2, inplace=True))
    elif act != "none":
        raise ValueError(f"unknown activation {act!r}")
    return nn.Sequential(*layers)


class ResBlock(nn.Module):
    """3x3 residual block with instance normalization."""

    def __init__(self, channels: int, act: str = "relu"):
        super().__init__()
        self.body = nn.Sequential(
            conv_block(channels, channels, 3, 1, norm="in", act=act),
            conv_block(channels, channels, 3, 1, norm="in", act="none"),
        )

    def forward(self, x):
        return x + self.body(x)


class AdaResBlock(nn.Module):
    """3x3 residual block whose normalization statistics come from a style code."""

    def __init__(self, channels: int):
        super().__init__()
        self.conv1 = nn.Conv2d(channels, channels, 3, padding=1, padding_mode="reflect")
        self.conv2 = nn.Conv2d(channels, channels, 3, padding=1, padding_mode="reflect")
        self.channels = channels

    # two AdaIN sites per block
    @property
    def n_style_params(self) -> int:
        return 4 * self.channels

    def forward(self, x, style_params):
        c = self.channels
        m1, r1, m2, r2 = torch.split(style_params, c, dim=1)
        h = self.conv1(x)
        h = F.relu(adain(h, m1, F.softplus(r1 + _SOFTPLUS_ONE)))
        h = self.conv2(h)
        h = adain(h, m2, F.softplus(r2 + _SOFTPLUS_ONE))
        return x + h


class StyleParamMapper(nn.Module):
    """Maps a style code to the AdaIN (mean, scale) parameters of all blocks."""

    def __init__(self, style_dim: int, n_params: int, hidden: int = 256):
        super().__init__()
        self.net = nn.Sequential(
            nn.Linear(style_dim, hidden),
            nn.ReLU(inplace=True),
            nn.Linear(hidden, hidden),
            nn.ReLU(inplace=True),
            nn.Linear(hidden, n_params),
        )

    def forward(self, s):
        if s.dim() == 1:
            s = s.unsqueeze(0)
        return self.net(s)


def init_weights(module: nn.Module) -> None:
    """Gaussian(0, 0.02) init for conv/linear weights, zero biases."""
    if isinstance(module, (nn.Conv2d, nn.ConvTranspose2d, nn.Linear)):
        nn.init.normal_(module.weight, 0.0, 0.02)
        if module.bias is not None:
            nn.init.zeros_(module.bias)
