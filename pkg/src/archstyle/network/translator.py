"""Two-domain translator bundle: construction, inference and a single training step."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import chain
from pathlib import Path
from typing import Mapping

import torch
import torch.nn as nn

from ..losses import (
    GEN_TERMS,
    LossReport,
    LossWeights,
    gradient_loss,
    l1_loss,
    lsgan_d_loss,
    lsgan_g_loss,
    luminance_kl_loss,
    total_generator_loss,
    weighted_total,
)
from .checkpoint import load_checkpoint, save_checkpoint
from .layers import ResBlock, init_weights
from .models import (
    ContentEncoder,
    DomainMapper,
    Generator,
    MultiScaleDiscriminator,
    NetConfig,
    StyleEncoder,
)

DOMAINS = ("1", "2")


def _parse_direction(direction: str) -> tuple[str, str]:
    table = {"1to2": ("1", "2"), "2to1": ("2", "1")}
    if direction not in table:
        raise ValueError(f"direction must be '1to2' or '2to1', got {direction!r}")
    return table[direction]


def sample_style(
    rng: torch.Generator, style_dim: int = 8, batch: int | None = None
) -> torch.Tensor:
    """Draw a style code with i.i.d. standard normal entries."""
    shape = (style_dim,) if batch is None else (batch, style_dim)
    return torch.randn(shape, generator=rng)


def interpolate_style(s_a: torch.Tensor, s_b: torch.Tensor, t: float) -> torch.Tensor:
    """Linear interpolation between two style codes, t in [0, 1]."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"interpolation parameter must lie in [0, 1], got {t}")
    return (1.0 - t) * s_a + t * s_b


@dataclass
class TrainStepReport:
    """Losses observed during one optimization step."""

    gen: LossReport
    dis: float


class TranslatorBundle(nn.Module):
    """All networks of both domains plus their optimizers.

    The final residual block of the two content encoders is one shared module,
    keeping the content space domain-invariant.
    """

    def __init__(self, cfg: NetConfig, lr: float = 1e-4, betas=(0.5, 0.999)):
        super().__init__()
        self.cfg = cfg
        shared = ResBlock(cfg.code_channels, act="lrelu")
        self.content_encoders = nn.ModuleDict(
            {d: ContentEncoder(cfg, shared) for d in DOMAINS}
        )
        self.style_encoders = nn.ModuleDict({d: StyleEncoder(cfg) for d in DOMAINS})
        self.mappers = nn.ModuleDict({d: DomainMapper(cfg) for d in DOMAINS})
        self.generators = nn.ModuleDict({d: Generator(cfg) for d in DOMAINS})
        self.discriminators = nn.ModuleDict(
            {d: MultiScaleDiscriminator(cfg) for d in DOMAINS}
        )
        torch.manual_seed(cfg.seed)
        self.apply(init_weights)
        self.rng = torch.Generator().manual_seed(cfg.seed)
        gen_params = chain(
            self.content_encoders.parameters(),
            self.style_encoders.parameters(),
            self.mappers.parameters(),
            self.generators.parameters(),
        )
        self.gen_opt = torch.optim.Adam(gen_params, lr=lr, betas=betas)
        self.dis_opt = torch.optim.Adam(self.discriminators.parameters(), lr=lr, betas=betas)

    @property
    def shared_block(self) -> ResBlock:
        return self.content_encoders["1"].shared

    # --- forward primitives ---------------------------------------------

    def encode_content(self, x: torch.Tensor, domain: str) -> torch.Tensor:
        return self.content_encoders[domain](x)

    def encode_style(self, x: torch.Tensor, domain: str) -> torch.Tensor:
        return self.style_encoders[domain](x)

    def map_domain(self, c: torch.Tensor, target: str) -> torch.Tensor:
        return self.mappers[target](c)

    def generate(self, z: torch.Tensor, s: torch.Tensor, domain: str) -> torch.Tensor:
        return self.generators[domain](z, s)

    def discriminate(self, x: torch.Tensor, domain: str) -> list[torch.Tensor]:
        return self.discriminators[domain](x)

    # --- inference --------------------------------------------------------

    def translate(
        self, x: torch.Tensor, style: torch.Tensor, direction: str = "1to2"
    ) -> torch.Tensor:
        """Translate ``x`` into the target domain.

        ``style`` is either a target-domain image (encoded internally) or a
        raw style code of length ``cfg.style_dim``.
        """
        src, dst = _parse_direction(direction)
        squeeze = x.dim() == 3
        if squeeze:
            x = x.unsqueeze(0)
        with torch.no_grad():
            if style.dim() <= 2 and style.shape[-1] == self.cfg.style_dim:
                s = style if style.dim() == 2 else style.unsqueeze(0)
            else:
                s = self.encode_style(
                    style if style.dim() == 4 else style.unsqueeze(0), dst
                )
            z = self.map_domain(self.encode_content(x, src), dst)
            out = self.generate(z, s, dst)
        return out.squeeze(0) if squeeze else out

    # --- training ----------------------------------------------------------

    def _fakes(self, xs, xt, src: str, dst: str) -> torch.Tensor:
        z = self.map_domain(self.encode_content(xs, src), dst)
        s = self.encode_style(xt, dst)
        r = sample_style(self.rng, self.cfg.style_dim, xs.shape[0])
        return torch.cat([self.generate(z, s, dst), self.generate(z, r, dst)])

    def _generator_terms(self, xs, xt, src: str, dst: str, w: LossWeights) -> dict:
        terms = dict.fromkeys(GEN_TERMS, 0.0)
        c_s = self.encode_content(xs, src)
        s_s = self.encode_style(xs, src)
        s_t = self.encode_style(xt, dst)
        z_cross = self.map_domain(c_s, dst)
        x_tr = self.generate(z_cross, s_t, dst)
        r = sample_style(self.rng, self.cfg.style_dim, xs.shape[0])
        x_tr_r = self.generate(z_cross, r, dst)

        if w.lambda_x > 0:
            x_self = self.generate(self.map_domain(c_s, src), s_s, src)
            terms["x"] = l1_loss(x_self, xs)
        if w.lambda_c > 0 or w.lambda_z > 0:
            c_re = self.encode_content(x_tr, src)
            if w.lambda_c > 0:
                terms["c"] = l1_loss(c_re, c_s)
            if w.lambda_z > 0:
                terms["z"] = l1_loss(self.map_domain(c_re, dst), z_cross)
        if w.lambda_s > 0:
            terms["s"] = l1_loss(self.encode_style(x_tr_r, dst), r)
        if w.lambda_cycle > 0:
            c_back = self.encode_content(x_tr, dst)
            x_cyc = self.generate(self.map_domain(c_back, src), s_s, src)
            terms["cycle"] = l1_loss(x_cyc, xs)
        if w.lambda_adv > 0:
            terms["adv"] = lsgan_g_loss(self.discriminate(torch.cat([x_tr, x_tr_r]), dst))
        if w.lambda_gd > 0:
            terms["gd"] = gradient_loss(x_tr, xs)
        if w.lambda_kl > 0:
            terms["kl"] = luminance_kl_loss(x_tr, xt)
        return terms

    def train_step(
        self, x1: torch.Tensor, x2: torch.Tensor, w: LossWeights
    ) -> TrainStepReport:
        """One discriminator update followed by one generator update, both directions."""
        if x1.shape[-2:] != x2.shape[-2:]:
            raise ValueError("batches from the two domains must share dimensions")
        with torch.no_grad():
            fakes2 = self._fakes(x1, x2, "1", "2")
            fakes1 = self._fakes(x2, x1, "2", "1")
        d_loss = lsgan_d_loss(self.discriminate(x2, "2"), self.discriminate(fakes2, "2"))
        d_loss = d_loss + lsgan_d_loss(
            self.discriminate(x1, "1"), self.discriminate(fakes1, "1")
        )
        if not torch.isfinite(d_loss):
            raise ValueError("loss term 'dis' is non-finite")
        self.dis_opt.zero_grad()
        d_loss.backward()
        self.dis_opt.step()

        t1 = self._generator_terms(x1, x2, "1", "2", w)
        t2 = self._generator_terms(x2, x1, "2", "1", w)
        terms = {k: t1[k] + t2[k] for k in GEN_TERMS}
        report = total_generator_loss(terms, w)
        total = weighted_total(terms, w)
        if isinstance(total, torch.Tensor):
            self.gen_opt.zero_grad()
            total.backward()
            self.gen_opt.step()
        return TrainStepReport(gen=report, dis=float(d_loss.detach()))


def save_bundle(
    bundle: TranslatorBundle, path: str | Path, extra: Mapping[str, str] | None = None
) -> None:
    """Write the bundle parameters with a config echo into a checkpoint file."""
    config = dict(bundle.cfg.to_mapping())
    if extra:
        config.update({str(k): str(v) for k, v in extra.items()})
    tensors = {name: t.detach().numpy() for name, t in bundle.state_dict().items()}
    save_checkpoint(path, config, tensors)


def load_bundle(
    path: str | Path, lr: float = 1e-4, betas=(0.5, 0.999)
) -> tuple[TranslatorBundle, dict[str, str]]:
    """Rebuild a bundle from a checkpoint; returns it with the config echo."""
    config, tensors = load_checkpoint(path)
    try:
        cfg = NetConfig.from_mapping(config)
    except (ValueError, TypeError) as exc:
        raise ValueError(f"{path}: invalid network config in checkpoint: {exc}") from exc
    bundle = TranslatorBundle(cfg, lr=lr, betas=betas)
    state = bundle.state_dict()
    if set(tensors) != set(state):
        missing = sorted(set(state) - set(tensors))[:3]
        surplus = sorted(set(tensors) - set(state))[:3]
        raise ValueError(
            f"{path}: checkpoint/config mismatch (missing {missing}, unexpected {surplus})"
        )
    for name, arr in tensors.items():
        if tuple(state[name].shape) != arr.shape:
            raise ValueError(
                f"{path}: checkpoint/config mismatch for {name}: "
                f"{arr.shape} vs {tuple(state[name].shape)}"
            )
        state[name] = torch.from_numpy(arr.copy())
    bundle.load_state_dict(state)
    return bundle, config
