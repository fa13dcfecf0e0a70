"""Shared fixtures: synthetic scenes, toy corpora and tiny checkpoints."""

import numpy as np
import pytest
import torch

from archstyle.imagecore import Image, Mask, save_png
from archstyle.network import NetConfig, TranslatorBundle, save_bundle

_ACCEPTANCE_LINES = []


def record_acceptance(line: str) -> None:
    _ACCEPTANCE_LINES.append(line)


def check_criterion(name: str, passed: bool, detail: str = "") -> None:
    """Record a one-line verdict for the terminal summary, then assert."""
    record_acceptance(f"{name}: {'PASS' if passed else 'FAIL'}  {detail}".rstrip())
    assert passed, f"{name} failed: {detail}"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def make_scene(height: int = 64, width: int = 64, seed: int = 0) -> tuple[Image, Mask]:
    """A synthetic architectural scene: gradient sky plus windowed buildings."""
    rng = np.random.default_rng(seed)
    yy = np.linspace(0.0, 1.0, height)[:, None] * np.ones((1, width))
    img = np.stack([0.45 + 0.2 * yy, 0.55 + 0.15 * yy, 0.85 - 0.1 * yy], axis=2)
    mask = np.zeros((height, width))
    for _ in range(3):
        bw = int(rng.integers(width // 6, width // 3))
        x0 = int(rng.integers(0, width - bw))
        bh = int(rng.integers(height // 3, (2 * height) // 3))
        color = rng.uniform(0.12, 0.3, 3)
        img[height - bh :, x0 : x0 + bw] = color
        mask[height - bh :, x0 : x0 + bw] = 1.0
        img[height - bh + 2 :: 5, x0 + 1 : x0 + bw - 1 : 4] = (0.85, 0.82, 0.6)
    return Image(np.clip(img, 0.0, 1.0)), Mask(mask)


def degrade(img: Image, warm: float = 0.12) -> Image:
    """Blur away fine structure and warm-shift the palette (a fake translation)."""
    from scipy.ndimage import gaussian_filter

    soft = np.stack(
        [gaussian_filter(img.data[:, :, c], 2.5, mode="nearest") for c in range(3)], axis=2
    )
    soft[:, :, 0] += warm
    soft[:, :, 2] -= warm * 0.7
    return Image(np.clip(soft, 0.0, 1.0))


def make_toy_image(rng: np.random.Generator, size: int, domain: int) -> np.ndarray:
    """Domain 1: bright square on dark ground; domain 2: dark square on warm bright ground."""
    if domain == 1:
        base = rng.uniform(0.05, 0.2)
        img = base + rng.uniform(0.0, 0.05, (size, size, 3))
        v = rng.uniform(0.75, 0.95)
        color = np.array([v, v, v * rng.uniform(0.9, 1.0)])
    else:
        img = np.stack(
            [
                np.full((size, size), rng.uniform(0.8, 0.95)),
                np.full((size, size), rng.uniform(0.6, 0.75)),
                np.full((size, size), rng.uniform(0.35, 0.5)),
            ],
            axis=2,
        )
        img = img + rng.uniform(0.0, 0.04, (size, size, 3))
        v = rng.uniform(0.05, 0.2)
        color = np.array([v * 1.2, v, v])
    side = int(rng.integers(size // 4, size // 2))
    r0 = int(rng.integers(2, size - side - 2))
    c0 = int(rng.integers(2, size - side - 2))
    img[r0 : r0 + side, c0 : c0 + side] = np.clip(color, 0.0, 1.0)
    return np.clip(img, 0.0, 1.0)


def write_corpus(directory, n: int, size: int, domain: int, seed: int) -> None:
    rng = np.random.default_rng(seed)
    directory.mkdir(parents=True, exist_ok=True)
    for i in range(n):
        save_png(Image(make_toy_image(rng, size, domain)), directory / f"img_{i:03d}.png")


TINY_CFG = dict(base_width=8, style_dim=8, n_disc_scales=1, image_size=32)


@pytest.fixture(scope="session")
def tiny_checkpoints(tmp_path_factory):
    """Untrained fg/bg checkpoints with a small config, for pipeline tests."""
    d = tmp_path_factory.mktemp("ckpts")
    paths = {}
    for branch, seed in (("fg", 11), ("bg", 12)):
        bundle = TranslatorBundle(NetConfig(seed=seed, **TINY_CFG))
        path = d / f"{branch}.ckpt"
        save_bundle(bundle, path, {"branch": branch})
        paths[branch] = str(path)
    return paths


@pytest.fixture(scope="session")
def toy_corpus_dirs(tmp_path_factory):
    """Small two-domain corpora for exercising cmd_train quickly."""
    d = tmp_path_factory.mktemp("toycorpus")
    write_corpus(d / "domain1", 6, 32, 1, seed=101)
    write_corpus(d / "domain2", 6, 32, 2, seed=202)
    return str(d / "domain1"), str(d / "domain2")


@pytest.fixture(scope="session")
def scene_files(tmp_path_factory):
    """A 64x64 scene, its mask, and a degraded 'translated' version, on disk."""
    d = tmp_path_factory.mktemp("scene")
    img, mask = make_scene(64, 64, seed=5)
    style, style_mask = make_scene(64, 64, seed=9)
    save_png(img, d / "input.png")
    save_png(style, d / "style.png")
    save_png(degrade(img), d / "translated.png")
    from PIL import Image as PILImage

    PILImage.fromarray((mask.alpha * 255).astype(np.uint8), mode="L").save(d / "input_mask.png")
    PILImage.fromarray((style_mask.alpha * 255).astype(np.uint8), mode="L").save(
        d / "style_mask.png"
    )
    return d


@pytest.fixture(autouse=True)
def _single_thread():
    torch.set_num_threads(1)
