"""Two-branch style transfer for architectural photographs.

Translate the building foreground and the sky background of a photograph
independently with disentangled content/style networks, recombine with the
segmentation mask, then optionally restore the source geometry with a
Gaussian-Poisson blending optimization. Ships the matching evaluation
metrics (SSIM, edge-SSIM, IoU, top-1 accuracy, Inception Score), a FastAPI
service and a CLI.
"""

__version__ = "0.1.0"
