"""Command-line client for the style-transfer pipeline.

Every command is a thin wrapper that builds a request model and either runs
it in-process (the default) or POSTs it to a running service given with
``--server``. Option resolution order: explicit flag > global flag >
``--config`` file > built-in default.

Exit codes: 0 success, 1 runtime failure, 2 usage or input validation error.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import click
import httpx
from click.core import ParameterSource

from . import __version__, pipeline
from .config import load_config
from .schemas import (
    BlendRequest,
    BlendResponse,
    EvalRequest,
    EvalResponse,
    InterpolateRequest,
    InterpolateResponse,
    TrainRequest,
    TrainResponse,
    TransferRequest,
    TransferResponse,
)

_EXPLICIT = (ParameterSource.COMMANDLINE, ParameterSource.ENVIRONMENT)


@dataclass
class Settings:
    server: str | None = None
    config: dict[str, str] = field(default_factory=dict)
    seed: int | None = None
    size: int | None = None
    out_dir: str | None = None


def _settle(ctx: click.Context) -> dict:
    """Apply config-file values and global flags to non-explicit parameters."""
    settings: Settings = ctx.obj
    globals_map = {"seed": settings.seed, "size": settings.size, "out_dir": settings.out_dir}
    params = dict(ctx.params)
    for p in ctx.command.params:
        if ctx.get_parameter_source(p.name) in _EXPLICIT:
            continue
        if globals_map.get(p.name) is not None:
            params[p.name] = globals_map[p.name]
        elif p.name in settings.config:
            params[p.name] = p.type.convert(settings.config[p.name], p, ctx)
    return params


def _run(ctx: click.Context, endpoint: str, request, response_model, local_fn, *local_args):
    """Dispatch a request to the server, or run it in-process."""
    settings: Settings = ctx.obj
    if settings.server:
        url = settings.server.rstrip("/") + "/v1/" + endpoint
        try:
            resp = httpx.post(url, json=request.model_dump(), timeout=None)
        except httpx.HTTPError as exc:
            raise click.ClickException(f"cannot reach server {settings.server}: {exc}")
        if resp.status_code == 400:
            raise click.UsageError(resp.json().get("detail", resp.text))
        if resp.status_code != 200:
            raise click.ClickException(f"server error {resp.status_code}: {resp.text}")
        result = response_model.model_validate(resp.json())
    else:
        try:
            result = local_fn(request, *local_args)
        except pipeline.InputValidationError as exc:
            raise click.UsageError(str(exc))
        except (pipeline.PipelineError, OSError) as exc:
            raise click.ClickException(str(exc))
    click.echo(result.model_dump_json(indent=2))
    return result


@click.group()
@click.version_option(__version__)
@click.option("--server", envvar="ARCHSTYLE_SERVER", default=None, help="Base URL of a running archstyle service; omit to run in-process.")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None, help="key=value config file supplying defaults.")
@click.option("--seed", type=int, default=None, help="Global RNG seed.")
@click.option("--size", type=int, default=None, help="Global working resolution (shorter side, 0 = native).")
@click.option("--out-dir", type=click.Path(file_okay=False), default=None, help="Global output directory.")
@click.pass_context
def main(ctx, server, config_path, seed, size, out_dir):
    """Foreground/background style transfer for architectural photographs."""
    config = load_config(config_path) if config_path else {}
    ctx.obj = Settings(server=server, config=config, seed=seed, size=size, out_dir=out_dir)


@main.command()
@click.argument("input_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("input_mask", type=click.Path(exists=True, dir_okay=False))
@click.argument("style_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("style_mask", type=click.Path(exists=True, dir_okay=False))
@click.argument("fg_ckpt", type=click.Path(exists=True, dir_okay=False))
@click.argument("bg_ckpt", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--out", default="output.png", show_default=True, help="Output PNG path.")
@click.option("--blend/--no-blend", default=False, show_default=True, help="Refine with the blending optimization.")
@click.option("--size", type=int, default=512, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--threads", type=int, default=1, show_default=True)
@click.option("--mask-threshold", type=float, default=0.5, show_default=True)
@click.option("--fill", type=click.Choice(["zero", "mean"]), default="mean", show_default=True)
@click.option("--beta", type=float, default=1.0, show_default=True)
@click.option("--blend-iterations", type=int, default=2, show_default=True)
@click.option("--solver", type=click.Choice(["spectral", "cg"]), default="spectral", show_default=True)
@click.option("--cg-tol", type=float, default=1e-8, show_default=True)
@click.option("--cg-max-iter", type=int, default=2000, show_default=True)
@click.pass_context
def transfer(ctx, **_kwargs):
    """Translate INPUT into the style of STYLE, branch by branch."""
    p = _settle(ctx)
    req = TransferRequest(
        input_path=p["input_path"],
        input_mask_path=p["input_mask"],
        style_path=p["style_path"],
        style_mask_path=p["style_mask"],
        fg_checkpoint=p["fg_ckpt"],
        bg_checkpoint=p["bg_ckpt"],
        output_path=p["out"],
        blend=p["blend"],
        size=p["size"],
        seed=p["seed"],
        threads=p["threads"],
        mask_threshold=p["mask_threshold"],
        fill=p["fill"],
        beta=p["beta"],
        blend_iterations=p["blend_iterations"],
        solver=p["solver"],
        cg_tol=p["cg_tol"],
        cg_max_iter=p["cg_max_iter"],
    )
    _run(ctx, "transfer", req, TransferResponse, pipeline.run_transfer)


@main.command()
@click.argument("domain1_dir", type=click.Path(exists=True, file_okay=False))
@click.argument("domain2_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--branch", type=click.Choice(["fg", "bg"]), required=True, help="fg keeps geometry losses on; bg zeroes them.")
@click.option("--out-dir", default="train_out", show_default=True)
@click.option("--iterations", type=int, default=500, show_default=True)
@click.option("--batch-size", type=int, default=2, show_default=True)
@click.option("--image-size", type=int, default=256, show_default=True)
@click.option("--base-width", type=int, default=64, show_default=True)
@click.option("--style-dim", type=int, default=8, show_default=True)
@click.option("--n-disc-scales", type=int, default=3, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--lr", type=float, default=1e-4, show_default=True)
@click.option("--beta1", type=float, default=0.5, show_default=True)
@click.option("--beta2", type=float, default=0.999, show_default=True)
@click.option("--checkpoint-every", type=int, default=0, show_default=True)
@click.option("--threads", type=int, default=1, show_default=True)
@click.option("--lambda-x", "lambda_x", type=float, default=None)
@click.option("--lambda-c", "lambda_c", type=float, default=None)
@click.option("--lambda-s", "lambda_s", type=float, default=None)
@click.option("--lambda-z", "lambda_z", type=float, default=None)
@click.option("--lambda-cycle", "lambda_cycle", type=float, default=None)
@click.option("--lambda-adv", "lambda_adv", type=float, default=None)
@click.option("--lambda-gd", "lambda_gd", type=float, default=None)
@click.option("--lambda-kl", "lambda_kl", type=float, default=None)
@click.pass_context
def train(ctx, **_kwargs):
    """Train one branch on two unpaired PNG corpora."""
    p = _settle(ctx)
    weights = {
        k: p[k]
        for k in (
            "lambda_x",
            "lambda_c",
            "lambda_s",
            "lambda_z",
            "lambda_cycle",
            "lambda_adv",
            "lambda_gd",
            "lambda_kl",
        )
        if p[k] is not None
    }
    req = TrainRequest(
        domain1_dir=p["domain1_dir"],
        domain2_dir=p["domain2_dir"],
        branch=p["branch"],
        out_dir=p["out_dir"],
        iterations=p["iterations"],
        batch_size=p["batch_size"],
        image_size=p["image_size"],
        base_width=p["base_width"],
        style_dim=p["style_dim"],
        n_disc_scales=p["n_disc_scales"],
        seed=p["seed"],
        lr=p["lr"],
        beta1=p["beta1"],
        beta2=p["beta2"],
        checkpoint_every=p["checkpoint_every"],
        threads=p["threads"],
        weights=weights,
    )
    _run(ctx, "train", req, TrainResponse, pipeline.run_train)


@main.command()
@click.option("--style", "style_path", type=click.Path(exists=True, dir_okay=False), required=True, help="Style-constraint image (the translation).")
@click.option("--geo", "geo_path", type=click.Path(exists=True, dir_okay=False), required=True, help="Geometry-constraint image (the source).")
@click.option("--mask", "mask_path", type=click.Path(exists=True, dir_okay=False), required=True, help="Foreground mask PNG.")
@click.option("-o", "--out", default="blended.png", show_default=True)
@click.option("--beta", type=float, default=1.0, show_default=True)
@click.option("--iters", "iterations", type=int, default=2, show_default=True)
@click.option("--solver", type=click.Choice(["spectral", "cg"]), default="spectral", show_default=True)
@click.option("--cg-tol", type=float, default=1e-8, show_default=True)
@click.option("--cg-max-iter", type=int, default=2000, show_default=True)
@click.option("--mask-threshold", type=float, default=0.5, show_default=True)
@click.pass_context
def blend(ctx, **_kwargs):
    """Blend a translated image with its high-fidelity source."""
    p = _settle(ctx)
    req = BlendRequest(
        style_path=p["style_path"],
        geo_path=p["geo_path"],
        mask_path=p["mask_path"],
        output_path=p["out"],
        mask_threshold=p["mask_threshold"],
        beta=p["beta"],
        iterations=p["iterations"],
        solver=p["solver"],
        cg_tol=p["cg_tol"],
        cg_max_iter=p["cg_max_iter"],
    )
    _run(ctx, "blend", req, BlendResponse, pipeline.run_blend)


@main.command(name="eval")
@click.option("--results", "results_dir", type=click.Path(exists=True, file_okay=False), required=True)
@click.option("--refs", "refs_dir", type=click.Path(exists=True, file_okay=False), required=True)
@click.option("--masks", "masks_dir", type=click.Path(exists=True, file_okay=False), default=None, help="Directory with results/ and refs/ mask subdirectories.")
@click.option("--probs", "probs_path", type=click.Path(exists=True, dir_okay=False), default=None, help="CSV of class posteriors: id,label?,p0..p{C-1}.")
@click.option("-o", "--out", "output_csv", default=None, help="Write the CSV report here.")
@click.option("--canny-sigma", type=float, default=1.4, show_default=True)
@click.option("--canny-low", type=float, default=0.1, show_default=True)
@click.option("--canny-high", type=float, default=0.2, show_default=True)
@click.option("--resize-to", type=int, default=256, show_default=True, help="Shorter side before metrics; 0 = native.")
@click.option("--is-splits", type=int, default=1, show_default=True)
@click.pass_context
def eval_cmd(ctx, **_kwargs):
    """Score generated images against references."""
    p = _settle(ctx)
    req = EvalRequest(
        results_dir=p["results_dir"],
        refs_dir=p["refs_dir"],
        masks_dir=p["masks_dir"],
        probs_path=p["probs_path"],
        output_csv=p["output_csv"],
        canny_sigma=p["canny_sigma"],
        canny_low=p["canny_low"],
        canny_high=p["canny_high"],
        resize_to=p["resize_to"],
        is_splits=p["is_splits"],
    )
    _run(ctx, "eval", req, EvalResponse, pipeline.run_eval)


@main.command()
@click.argument("input_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("input_mask", type=click.Path(exists=True, dir_okay=False))
@click.argument("style_a", type=click.Path(exists=True, dir_okay=False))
@click.argument("style_a_mask", type=click.Path(exists=True, dir_okay=False))
@click.argument("style_b", type=click.Path(exists=True, dir_okay=False))
@click.argument("style_b_mask", type=click.Path(exists=True, dir_okay=False))
@click.argument("fg_ckpt", type=click.Path(exists=True, dir_okay=False))
@click.argument("bg_ckpt", type=click.Path(exists=True, dir_okay=False))
@click.option("--out-dir", default="interp_out", show_default=True)
@click.option("--frames", type=int, default=5, show_default=True)
@click.option("--size", type=int, default=512, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--threads", type=int, default=1, show_default=True)
@click.option("--mask-threshold", type=float, default=0.5, show_default=True)
@click.option("--fill", type=click.Choice(["zero", "mean"]), default="mean", show_default=True)
@click.pass_context
def interpolate(ctx, **_kwargs):
    """Sweep between two style references, writing one frame per step."""
    p = _settle(ctx)
    req = InterpolateRequest(
        input_path=p["input_path"],
        input_mask_path=p["input_mask"],
        style_a_path=p["style_a"],
        style_a_mask_path=p["style_a_mask"],
        style_b_path=p["style_b"],
        style_b_mask_path=p["style_b_mask"],
        fg_checkpoint=p["fg_ckpt"],
        bg_checkpoint=p["bg_ckpt"],
        out_dir=p["out_dir"],
        frames=p["frames"],
        size=p["size"],
        seed=p["seed"],
        threads=p["threads"],
        mask_threshold=p["mask_threshold"],
        fill=p["fill"],
    )
    _run(ctx, "interpolate", req, InterpolateResponse, pipeline.run_interpolate)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8008, show_default=True)
def serve(host, port):
    """Run the archstyle HTTP service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    main()
