"""Pydantic request/response models shared by the FastAPI service and the CLI client.

All image arguments are filesystem paths: the service is a local tool server,
so requests reference files rather than uploading pixels.
"""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field


class TransferRequest(BaseModel):
    input_path: str
    input_mask_path: str
    style_path: str
    style_mask_path: str
    fg_checkpoint: str
    bg_checkpoint: str
    output_path: str
    blend: bool = False
    size: int = Field(512, ge=0, description="working resolution (shorter side); 0 = native")
    seed: int = 0
    threads: int = Field(1, ge=1, description=">1 may break bit-exact reproducibility")
    mask_threshold: float = Field(0.5, gt=0.0, lt=1.0)
    fill: Literal["zero", "mean"] = "mean"
    beta: float = Field(1.0, gt=0.0)
    blend_iterations: int = Field(2, ge=1)
    solver: Literal["spectral", "cg"] = "spectral"
    cg_tol: float = Field(1e-8, gt=0.0)
    cg_max_iter: int = Field(2000, ge=1)


class TransferResponse(BaseModel):
    output_path: str
    width: int
    height: int
    blended: bool
    blend_converged: bool | None = None


class BlendRequest(BaseModel):
    style_path: str
    geo_path: str
    mask_path: str
    output_path: str
    mask_threshold: float = Field(0.5, gt=0.0, lt=1.0)
    beta: float = Field(1.0, gt=0.0)
    iterations: int = Field(2, ge=1)
    solver: Literal["spectral", "cg"] = "spectral"
    cg_tol: float = Field(1e-8, gt=0.0)
    cg_max_iter: int = Field(2000, ge=1)


class BlendResponse(BaseModel):
    output_path: str
    converged: bool
    residual: float
    energies: list[float]


class TrainRequest(BaseModel):
    domain1_dir: str
    domain2_dir: str
    branch: Literal["fg", "bg"]
    out_dir: str
    iterations: int = Field(500, ge=1)
    batch_size: int = Field(2, ge=1)
    image_size: int = Field(256, ge=16)
    base_width: int = Field(64, ge=8)
    style_dim: int = Field(8, ge=1)
    n_disc_scales: int = Field(3, ge=1)
    seed: int = 0
    lr: float = Field(1e-4, gt=0.0)
    beta1: float = 0.5
    beta2: float = 0.999
    checkpoint_every: int = Field(0, ge=0, description="0 = final checkpoint only")
    threads: int = Field(1, ge=1)
    weights: dict[str, float] = Field(
        default_factory=dict, description="overrides for the branch's lambda defaults"
    )


class TrainResponse(BaseModel):
    checkpoint_path: str
    log_path: str
    iterations: int
    final_total: float
    final_dis: float


class EvalRequest(BaseModel):
    results_dir: str
    refs_dir: str
    masks_dir: str | None = None
    probs_path: str | None = None
    output_csv: str | None = None
    canny_sigma: float = Field(1.4, gt=0.0)
    canny_low: float = Field(0.1, gt=0.0)
    canny_high: float = Field(0.2, gt=0.0)
    resize_to: int = Field(256, ge=0, description="shorter side before metrics; 0 = native")
    is_splits: int = Field(1, ge=1)


class EvalRowModel(BaseModel):
    id: str
    ssim: float
    essim: float
    iou: float | None = None


class EvalResponse(BaseModel):
    rows: list[EvalRowModel]
    mean_ssim: float | None
    mean_essim: float | None
    mean_iou: float | None
    accuracy: float | None
    inception_score: float | None
    skipped: list[str]
    csv_path: str | None = None


class InterpolateRequest(BaseModel):
    input_path: str
    input_mask_path: str
    style_a_path: str
    style_a_mask_path: str
    style_b_path: str
    style_b_mask_path: str
    fg_checkpoint: str
    bg_checkpoint: str
    out_dir: str
    frames: int = Field(5, ge=2)
    size: int = Field(512, ge=0)
    seed: int = 0
    threads: int = Field(1, ge=1)
    mask_threshold: float = Field(0.5, gt=0.0, lt=1.0)
    fill: Literal["zero", "mean"] = "mean"


class InterpolateResponse(BaseModel):
    frame_paths: list[str]


class HealthResponse(BaseModel):
    status: str
    version: str
