"""Plain-text key=value configuration files.

Format: one ``key=value`` per line, ``#`` starts a comment, blank lines are
ignored. Every key can also be given as a CLI flag, which wins over the file.
"""

from __future__ import annotations

from pathlib import Path

# every key a config file may define, with the CLI command(s) that read it
KNOWN_KEYS = frozenset(
    {
        # loss weights (train)
        "lambda_x",
        "lambda_c",
        "lambda_s",
        "lambda_z",
        "lambda_cycle",
        "lambda_adv",
        "lambda_gd",
        "lambda_kl",
        # network (train, transfer, interpolate)
        "base_width",
        "style_dim",
        "n_disc_scales",
        "image_size",
        "seed",
        "lr",
        "beta1",
        "beta2",
        "batch_size",
        "iterations",
        "checkpoint_every",
        "threads",
        # masks and regions
        "mask_threshold",
        "fill",
        # inference
        "size",
        # blending
        "beta",
        "blend_iterations",
        "solver",
        "cg_tol",
        "cg_max_iter",
        # metrics (eval)
        "canny_sigma",
        "canny_low",
        "canny_high",
        "resize_to",
        "is_splits",
    }
)


def parse_config_text(text: str, source: str = "<config>") -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ValueError(f"{source}:{lineno}: expected 'key=value', got {raw!r}")
        if key not in KNOWN_KEYS:
            raise ValueError(f"{source}:{lineno}: unknown config key {key!r}")
        values[key] = value.strip()
    return values


def load_config(path: str | Path) -> dict[str, str]:
    path = Path(path)
    return parse_config_text(path.read_text(), source=str(path))
