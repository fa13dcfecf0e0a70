"""Gaussian-Poisson blending: recover source geometry under a translated color constraint.

Per channel the solver minimizes

    E(x) = ||grad(x) - v||^2 + beta * ||g(x) - g(c_style)||^2

where v keeps the source gradient inside the mask and the translated-image
gradient outside it, and g is one pass of the 5-tap pyramid low-pass. The
gradient operator is the package-wide forward difference with replicate
boundary; the low-pass uses half-sample symmetric extension so that the
normal equations are exactly diagonalized by an orthonormal DCT-II. Both
backends (spectral, conjugate gradient) therefore solve the same linear
system; CG additionally exploits a coarse-to-fine pyramid for warm starts.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage as ndi
from scipy.fft import dctn, idctn
from scipy.sparse.linalg import LinearOperator, cg

from .imagecore import (
    PYRAMID_KERNEL,
    GradientField,
    Image,
    Mask,
    divergence,
    downsample2,
    forward_diff,
    resize_bilinear,
)

SOLVERS = ("spectral", "cg")
MIN_PYRAMID_SIZE = 16


@dataclass
class BlendProblem:
    c_style: Image
    c_geo: Image
    mask: Mask
    beta: float = 1.0
    iterations: int = 2
    solver: str = "spectral"
    cg_tol: float = 1e-8
    cg_max_iter: int = 2000

    def __post_init__(self):
        dims = (self.c_style.height, self.c_style.width)
        if (self.c_geo.height, self.c_geo.width) != dims or (
            self.mask.height,
            self.mask.width,
        ) != dims:
            raise ValueError("style constraint, geometry constraint and mask must share dims")
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.solver not in SOLVERS:
            raise ValueError(f"solver must be one of {SOLVERS}, got {self.solver!r}")
        if not (self.cg_tol > 0 and self.cg_max_iter > 0):
            raise ValueError("cg_tol and cg_max_iter must be positive")


@dataclass
class BlendResult:
    image: Image
    converged: bool
    residual: float
    energies: list[float] = field(default_factory=list)


def _lowpass(a: np.ndarray) -> np.ndarray:
    """One pass of the pyramid kernel with half-sample symmetric extension."""
    out = ndi.correlate1d(a, PYRAMID_KERNEL, axis=0, mode="reflect")
    return ndi.correlate1d(out, PYRAMID_KERNEL, axis=1, mode="reflect")


def _constraint_gradient(style: np.ndarray, geo: np.ndarray, alpha: np.ndarray):
    """Per-channel target gradients: source inside the mask, translated outside."""
    fields = []
    for ch in range(style.shape[2]):
        sx, sy = forward_diff(style[:, :, ch])
        gx, gy = forward_diff(geo[:, :, ch])
        fields.append((alpha * gx + (1 - alpha) * sx, alpha * gy + (1 - alpha) * sy))
    return fields


def build_constraint_gradient(p: BlendProblem) -> list[GradientField]:
    """The blended target gradient field, one per color channel."""
    fields = _constraint_gradient(p.c_style.data, p.c_geo.data, p.mask.alpha)
    return [GradientField(gx, gy) for gx, gy in fields]


def blend_energy(p: BlendProblem, x: np.ndarray) -> float:
    """Evaluate E at a candidate solution (H, W, 3); the solver's objective."""
    fields = _constraint_gradient(p.c_style.data, p.c_geo.data, p.mask.alpha)
    total = 0.0
    for ch, (vx, vy) in enumerate(fields):
        gx, gy = forward_diff(x[:, :, ch])
        total += np.sum((gx - vx) ** 2) + np.sum((gy - vy) ** 2)
        diff = _lowpass(x[:, :, ch]) - _lowpass(p.c_style.data[:, :, ch])
        total += p.beta * np.sum(diff**2)
    return float(total)


def _apply_operator(x: np.ndarray, beta: float) -> np.ndarray:
    gx, gy = forward_diff(x)
    return -divergence(gx, gy) + beta * _lowpass(_lowpass(x))


def _rhs(style_ch: np.ndarray, vx: np.ndarray, vy: np.ndarray, beta: float) -> np.ndarray:
    return -divergence(vx, vy) + beta * _lowpass(_lowpass(style_ch))


def _laplacian_eigens(n: int) -> np.ndarray:
    k = np.arange(n)
    return 4.0 * np.sin(np.pi * k / (2 * n)) ** 2


def _lowpass_eigens(n: int) -> np.ndarray:
    k = np.arange(n)
    return (6.0 + 8.0 * np.cos(np.pi * k / n) + 2.0 * np.cos(2 * np.pi * k / n)) / 16.0


def _spectral_solve(rhs: np.ndarray, beta: float) -> np.ndarray:
    h, w = rhs.shape
    lap = _laplacian_eigens(h)[:, None] + _laplacian_eigens(w)[None, :]
    low = _lowpass_eigens(h)[:, None] * _lowpass_eigens(w)[None, :]
    denom = lap + beta * low**2
    return idctn(dctn(rhs, type=2, norm="ortho") / denom, type=2, norm="ortho")


def _cg_solve(rhs, beta, x0, tol, max_iter):
    h, w = rhs.shape
    op = LinearOperator(
        (h * w, h * w),
        matvec=lambda v: _apply_operator(v.reshape(h, w), beta).ravel(),
        dtype=np.float64,
    )
    x, info = cg(op, rhs.ravel(), x0=x0.ravel(), rtol=tol, atol=0.0, maxiter=max_iter)
    residual = np.linalg.norm(op @ x - rhs.ravel()) / max(np.linalg.norm(rhs.ravel()), 1e-300)
    return x.reshape(h, w), info == 0, float(residual)


def _pyramid(p: BlendProblem):
    """Finest-to-coarsest stack of (style, geo, alpha)."""
    levels = [(p.c_style.data, p.c_geo.data, p.mask.alpha)]
    while min(levels[-1][0].shape[:2]) >= 2 * MIN_PYRAMID_SIZE:
        style, geo, alpha = levels[-1]
        levels.append((downsample2(style), downsample2(geo), downsample2(alpha)))
    return levels


def _solve_level(style, geo, alpha, p: BlendProblem, init):
    """Solve all channels of one pyramid level; returns (solution, ok, residual)."""
    fields = _constraint_gradient(style, geo, alpha)
    out = np.empty_like(style)
    ok = True
    worst = 0.0
    for ch, (vx, vy) in enumerate(fields):
        rhs = _rhs(style[:, :, ch], vx, vy, p.beta)
        if p.solver == "spectral":
            out[:, :, ch] = _spectral_solve(rhs, p.beta)
            res = np.linalg.norm(_apply_operator(out[:, :, ch], p.beta) - rhs)
            worst = max(worst, float(res / max(np.linalg.norm(rhs), 1e-300)))
        else:
            x0 = style[:, :, ch] if init is None else init[:, :, ch]
            out[:, :, ch], conv, res = _cg_solve(rhs, p.beta, x0, p.cg_tol, p.cg_max_iter)
            ok = ok and conv
            worst = max(worst, res)
    return out, ok, worst


def gp_solve(p: BlendProblem) -> BlendResult:
    """Minimize the blending energy, coarse-to-fine, over `iterations` sweeps.

    The spectral backend solves the normal equations exactly, which makes the
    coarse pyramid levels redundant; they are only visited to warm-start the
    conjugate-gradient backend. Sweeps after the first refine the finest
    level from the current solution, so the energy never increases. The
    solution is clamped to [0, 1] once, at the very end.
    """
    levels = _pyramid(p)
    x = None
    ok = True
    worst = 0.0
    energies = []
    for sweep in range(p.iterations):
        if sweep == 0 and p.solver == "spectral":
            style, geo, alpha = levels[0]
            x, ok, worst = _solve_level(style, geo, alpha, p, None)
        elif sweep == 0:
            est = None
            for idx in range(len(levels) - 1, -1, -1):
                style, geo, alpha = levels[idx]
                if est is not None:
                    est = resize_bilinear(est, style.shape[0], style.shape[1])
                est, ok, worst = _solve_level(style, geo, alpha, p, est)
            x = est
        elif p.solver == "cg":
            style, geo, alpha = levels[0]
            x, ok, worst = _solve_level(style, geo, alpha, p, x)
        energies.append(blend_energy(p, x))
    return BlendResult(Image(np.clip(x, 0.0, 1.0)), ok, worst, energies)


def blend_pipeline(
    translated: Image,
    source: Image,
    mask: Mask,
    beta: float = 1.0,
    iterations: int = 2,
    solver: str = "spectral",
    cg_tol: float = 1e-8,
    cg_max_iter: int = 2000,
) -> BlendResult:
    """Blend a translated image with its high-fidelity source."""
    problem = BlendProblem(
        c_style=translated,
        c_geo=source,
        mask=mask,
        beta=beta,
        iterations=iterations,
        solver=solver,
        cg_tol=cg_tol,
        cg_max_iter=cg_max_iter,
    )
    return gp_solve(problem)
