"""Orchestration of the full pipeline: split, translate per branch, composite, blend.

These handlers are the single implementation behind both the FastAPI service
and the CLI: each takes a request model from :mod:`archstyle.schemas` and
returns the matching response model.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
import torch

from . import blending, metrics
from .imagecore import Image, Mask, alpha_composite, load_png, resize_bilinear, save_png
from .losses import LossWeights
from .network import TranslatorBundle, NetConfig, interpolate_style, load_bundle, save_bundle
from .schemas import (
    BlendRequest,
    BlendResponse,
    EvalRequest,
    EvalResponse,
    EvalRowModel,
    InterpolateRequest,
    InterpolateResponse,
    TrainRequest,
    TrainResponse,
    TransferRequest,
    TransferResponse,
)
from .segmentation import load_mask, split_regions

AUGMENT_RESIZE_RATIO = 286.0 / 256.0


class InputValidationError(ValueError):
    """A request referenced missing or malformed inputs."""


class PipelineError(RuntimeError):
    """A stage of the pipeline failed mid-processing."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause


class BundleCache:
    """Keeps loaded translator bundles alive across requests, keyed by path+mtime."""

    def __init__(self):
        self._cache: dict[tuple[str, int], TranslatorBundle] = {}

    def get(self, path: str) -> TranslatorBundle:
        resolved = str(Path(path).resolve())
        key = (resolved, Path(resolved).stat().st_mtime_ns)
        if key not in self._cache:
            stale = [k for k in self._cache if k[0] == resolved]
            for k in stale:
                del self._cache[k]
            self._cache[key] = load_bundle(resolved)[0]
        return self._cache[key]


def to_tensor(img: Image) -> torch.Tensor:
    return torch.from_numpy(img.data.transpose(2, 0, 1).copy()).float()


def from_tensor(t: torch.Tensor) -> Image:
    arr = t.detach().numpy().transpose(1, 2, 0).astype(np.float64)
    return Image(np.clip(arr, 0.0, 1.0))


def _require_file(path: str, what: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise InputValidationError(f"missing {what}: {path}")
    return p


def _round4(n: int) -> int:
    return max(32, int(round(n / 4)) * 4)


def _working_dims(h: int, w: int, size: int) -> tuple[int, int]:
    """Network-friendly dims: shorter side ~= size (0 keeps native), multiples of 4."""
    if size > 0:
        scale = size / min(h, w)
        h, w = round(h * scale), round(w * scale)
    return _round4(h), _round4(w)


def _resize_to(img: Image, h: int, w: int) -> Image:
    if (img.height, img.width) == (h, w):
        return img
    return Image(np.clip(resize_bilinear(img.data, h, w), 0.0, 1.0))


def _resize_mask_to(m: Mask, h: int, w: int) -> Mask:
    if (m.height, m.width) == (h, w):
        return m
    return Mask((resize_bilinear(m.alpha, h, w) >= 0.5).astype(np.float64))


def _load_image(path: str, what: str) -> Image:
    try:
        return load_png(_require_file(path, what))
    except InputValidationError:
        raise
    except (ValueError, OSError) as exc:
        raise InputValidationError(str(exc)) from exc


def _load_pair(image_path: str, mask_path: str, threshold: float, what: str):
    img = _load_image(image_path, f"{what} image")
    try:
        mask = load_mask(_require_file(mask_path, f"{what} mask"), threshold)
    except InputValidationError:
        raise
    except (ValueError, OSError) as exc:
        raise InputValidationError(str(exc)) from exc
    if (img.height, img.width) != (mask.height, mask.width):
        raise InputValidationError(
            f"{what} image {image_path} and mask {mask_path} have different dimensions"
        )
    return img, mask


def _load_bundle_for(path: str, cache: BundleCache | None) -> TranslatorBundle:
    _require_file(path, "checkpoint")
    try:
        if cache is not None:
            return cache.get(path)
        return load_bundle(path)[0]
    except ValueError as exc:
        raise InputValidationError(str(exc)) from exc


def _translate_branches(
    fg_bundle: TranslatorBundle,
    bg_bundle: TranslatorBundle,
    source: Image,
    source_mask: Mask,
    style_codes: tuple,
    fill: str,
) -> Image:
    """Split, run both branches with the given style codes, recomposite."""
    regions = split_regions(source, source_mask, fill)
    fg_s, bg_s = style_codes
    fg_out = fg_bundle.translate(to_tensor(regions.foreground), fg_s, "1to2")
    bg_out = bg_bundle.translate(to_tensor(regions.background), bg_s, "1to2")
    return alpha_composite(from_tensor(fg_out), from_tensor(bg_out), source_mask)


def _encode_branch_styles(fg_bundle, bg_bundle, style: Image, style_mask: Mask, fill: str):
    regions = split_regions(style, style_mask, fill)
    with torch.no_grad():
        fg_s = fg_bundle.encode_style(to_tensor(regions.foreground).unsqueeze(0), "2")
        bg_s = bg_bundle.encode_style(to_tensor(regions.background).unsqueeze(0), "2")
    return fg_s, bg_s


def run_transfer(req: TransferRequest, cache: BundleCache | None = None) -> TransferResponse:
    """Full style transfer of one photograph, optionally blend-refined."""
    torch.set_num_threads(req.threads)
    source, source_mask = _load_pair(
        req.input_path, req.input_mask_path, req.mask_threshold, "input"
    )
    style, style_mask = _load_pair(
        req.style_path, req.style_mask_path, req.mask_threshold, "style"
    )
    fg_bundle = _load_bundle_for(req.fg_checkpoint, cache)
    bg_bundle = _load_bundle_for(req.bg_checkpoint, cache)

    try:
        wh, ww = _working_dims(source.height, source.width, req.size)
        sh, sw = _working_dims(style.height, style.width, req.size)
        work_src = _resize_to(source, wh, ww)
        work_mask = _resize_mask_to(source_mask, wh, ww)
        codes = _encode_branch_styles(
            fg_bundle, bg_bundle, _resize_to(style, sh, sw),
            _resize_mask_to(style_mask, sh, sw), req.fill,
        )
        composite = _translate_branches(
            fg_bundle, bg_bundle, work_src, work_mask, codes, req.fill
        )
    except ValueError as exc:
        raise PipelineError("translate", exc) from exc

    translated = _resize_to(composite, source.height, source.width)
    blend_converged = None
    if req.blend:
        try:
            result = blending.blend_pipeline(
                translated,
                source,
                source_mask,
                beta=req.beta,
                iterations=req.blend_iterations,
                solver=req.solver,
                cg_tol=req.cg_tol,
                cg_max_iter=req.cg_max_iter,
            )
        except ValueError as exc:
            raise PipelineError("blend", exc) from exc
        translated = result.image
        blend_converged = result.converged

    try:
        Path(req.output_path).parent.mkdir(parents=True, exist_ok=True)
        save_png(translated, req.output_path)
    except OSError as exc:
        raise PipelineError("save", exc) from exc
    return TransferResponse(
        output_path=req.output_path,
        width=translated.width,
        height=translated.height,
        blended=req.blend,
        blend_converged=blend_converged,
    )


def run_blend(req: BlendRequest) -> BlendResponse:
    """Blend a translated image against its source geometry."""
    style = _load_image(req.style_path, "style-constraint image")
    geo = _load_image(req.geo_path, "geometry-constraint image")
    try:
        mask = load_mask(_require_file(req.mask_path, "mask"), req.mask_threshold)
    except InputValidationError:
        raise
    except (ValueError, OSError) as exc:
        raise InputValidationError(str(exc)) from exc
    try:
        result = blending.blend_pipeline(
            style,
            geo,
            mask,
            beta=req.beta,
            iterations=req.iterations,
            solver=req.solver,
            cg_tol=req.cg_tol,
            cg_max_iter=req.cg_max_iter,
        )
        Path(req.output_path).parent.mkdir(parents=True, exist_ok=True)
        save_png(result.image, req.output_path)
    except ValueError as exc:
        raise PipelineError("blend", exc) from exc
    except OSError as exc:
        raise PipelineError("save", exc) from exc
    return BlendResponse(
        output_path=req.output_path,
        converged=result.converged,
        residual=result.residual,
        energies=result.energies,
    )


def _load_corpus(dirpath: str, what: str) -> list[np.ndarray]:
    d = Path(dirpath)
    if not d.is_dir():
        raise InputValidationError(f"missing {what} directory: {dirpath}")
    images = [_load_image(p, f"{what} image").data for p in sorted(d.glob("*.png"))]
    if len(images) < 2:
        raise InputValidationError(f"{what} directory {dirpath} needs at least 2 PNG images")
    return images


def _augment(img: np.ndarray, size: int, rng: np.random.Generator) -> np.ndarray:
    """Resize shorter side to ~286/256 of the crop size, random-crop, random hflip."""
    h, w = img.shape[:2]
    target_short = max(size, int(round(size * AUGMENT_RESIZE_RATIO)))
    scale = target_short / min(h, w)
    nh, nw = max(size, round(h * scale)), max(size, round(w * scale))
    img = resize_bilinear(img, nh, nw)
    r0 = int(rng.integers(0, nh - size + 1))
    c0 = int(rng.integers(0, nw - size + 1))
    img = img[r0 : r0 + size, c0 : c0 + size]
    if rng.random() < 0.5:
        img = img[:, ::-1]
    return np.clip(img, 0.0, 1.0)


def _batch(corpus, size, batch_size, rng) -> torch.Tensor:
    idx = rng.choice(len(corpus), size=batch_size, replace=len(corpus) < batch_size)
    stack = np.stack([_augment(corpus[i], size, rng) for i in idx])
    return torch.from_numpy(stack.transpose(0, 3, 1, 2).copy()).float()


def run_train(req: TrainRequest) -> TrainResponse:
    """Train one branch (fg or bg) and emit a checkpoint plus a CSV loss log."""
    torch.set_num_threads(req.threads)
    corpus1 = _load_corpus(req.domain1_dir, "domain-1 corpus")
    corpus2 = _load_corpus(req.domain2_dir, "domain-2 corpus")
    weights = LossWeights.foreground() if req.branch == "fg" else LossWeights.background()
    if req.weights:
        merged = {**{k: getattr(weights, k) for k in weights.__dataclass_fields__}}
        merged.update(req.weights)
        weights = LossWeights.from_mapping(merged)

    cfg = NetConfig(
        base_width=req.base_width,
        style_dim=req.style_dim,
        n_disc_scales=req.n_disc_scales,
        image_size=req.image_size,
        seed=req.seed,
    )
    bundle = TranslatorBundle(cfg, lr=req.lr, betas=(req.beta1, req.beta2))
    rng = np.random.default_rng(req.seed)

    out_dir = Path(req.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    log_path = out_dir / "loss_log.csv"
    ckpt_path = out_dir / "checkpoint.ckpt"
    extra = {"branch": req.branch, "lr": f"{req.lr:.10g}"}

    columns = ["iteration", "total", "x", "c", "s", "z", "cycle", "adv", "gd", "kl", "dis"]
    last = None
    with open(log_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for it in range(1, req.iterations + 1):
            x1 = _batch(corpus1, req.image_size, req.batch_size, rng)
            x2 = _batch(corpus2, req.image_size, req.batch_size, rng)
            try:
                last = bundle.train_step(x1, x2, weights)
            except ValueError as exc:
                raise PipelineError(f"train@iteration {it}", exc) from exc
            g = last.gen
            writer.writerow(
                [it]
                + [
                    f"{v:.8f}"
                    for v in (g.total, g.x, g.c, g.s, g.z, g.cycle, g.adv, g.gd, g.kl, last.dis)
                ]
            )
            if req.checkpoint_every and it % req.checkpoint_every == 0 and it < req.iterations:
                save_bundle(
                    bundle, out_dir / f"checkpoint_{it:06d}.ckpt", {**extra, "iteration": str(it)}
                )
    save_bundle(bundle, ckpt_path, {**extra, "iteration": str(req.iterations)})
    return TrainResponse(
        checkpoint_path=str(ckpt_path),
        log_path=str(log_path),
        iterations=req.iterations,
        final_total=last.gen.total,
        final_dis=last.dis,
    )


def run_eval(req: EvalRequest) -> EvalResponse:
    """Score a corpus of generated images; optionally write the CSV report."""
    for d, what in ((req.results_dir, "results"), (req.refs_dir, "refs")):
        if not Path(d).is_dir():
            raise InputValidationError(f"missing {what} directory: {d}")
    if req.masks_dir is not None and not Path(req.masks_dir).is_dir():
        raise InputValidationError(f"missing masks directory: {req.masks_dir}")
    if req.probs_path is not None:
        _require_file(req.probs_path, "probability table")
    params = metrics.EvalParams(
        canny_sigma=req.canny_sigma,
        canny_low=req.canny_low,
        canny_high=req.canny_high,
        resize_to=req.resize_to or None,
        is_splits=req.is_splits,
    )
    try:
        report = metrics.eval_corpus(
            req.results_dir, req.refs_dir, req.masks_dir, req.probs_path, params
        )
    except ValueError as exc:
        raise PipelineError("eval", exc) from exc
    csv_path = None
    if req.output_csv:
        Path(req.output_csv).parent.mkdir(parents=True, exist_ok=True)
        Path(req.output_csv).write_text(report.to_csv())
        csv_path = req.output_csv
    return EvalResponse(
        rows=[EvalRowModel(id=r.id, ssim=r.ssim, essim=r.essim, iou=r.iou) for r in report.rows],
        mean_ssim=report.mean_ssim,
        mean_essim=report.mean_essim,
        mean_iou=report.mean_iou,
        accuracy=report.accuracy,
        inception_score=report.inception,
        skipped=report.skipped,
        csv_path=csv_path,
    )


def run_interpolate(req: InterpolateRequest, cache: BundleCache | None = None) -> InterpolateResponse:
    """Sweep the style interpolation between two references, one PNG per frame."""
    torch.set_num_threads(req.threads)
    source, source_mask = _load_pair(
        req.input_path, req.input_mask_path, req.mask_threshold, "input"
    )
    style_a, mask_a = _load_pair(
        req.style_a_path, req.style_a_mask_path, req.mask_threshold, "style-a"
    )
    style_b, mask_b = _load_pair(
        req.style_b_path, req.style_b_mask_path, req.mask_threshold, "style-b"
    )
    fg_bundle = _load_bundle_for(req.fg_checkpoint, cache)
    bg_bundle = _load_bundle_for(req.bg_checkpoint, cache)

    out_dir = Path(req.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        wh, ww = _working_dims(source.height, source.width, req.size)
        work_src = _resize_to(source, wh, ww)
        work_mask = _resize_mask_to(source_mask, wh, ww)

        def styles_of(style, mask):
            sh, sw = _working_dims(style.height, style.width, req.size)
            return _encode_branch_styles(
                fg_bundle, bg_bundle, _resize_to(style, sh, sw),
                _resize_mask_to(mask, sh, sw), req.fill,
            )
        fg_a, bg_a = styles_of(style_a, mask_a)
        fg_b, bg_b = styles_of(style_b, mask_b)

        paths = []
        for i, t in enumerate(np.linspace(0.0, 1.0, req.frames)):
            codes = (
                interpolate_style(fg_a, fg_b, float(t)),
                interpolate_style(bg_a, bg_b, float(t)),
            )
            frame = _translate_branches(
                fg_bundle, bg_bundle, work_src, work_mask, codes, req.fill
            )
            frame = _resize_to(frame, source.height, source.width)
            path = out_dir / f"frame_{i:03d}_t{t:.3f}.png"
            save_png(frame, path)
            paths.append(str(path))
    except ValueError as exc:
        raise PipelineError("interpolate", exc) from exc
    return InterpolateResponse(frame_paths=paths)
