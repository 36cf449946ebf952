"""Training losses over flow estimates, with analytic gradients.

The sample-wise robust loss raises the masked mean L1 endpoint error to a
power q in (0, 1]; the L2 loss is the masked mean Euclidean endpoint error.
The sequence loss sums per-iteration losses across scales with geometric
decay toward the last iterate of each scale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .grid import as_flow_field, as_mask, scale_flow, scale_valid_mask


@dataclass(frozen=True)
class LossConfig:
    """Knobs of the multi-scale multi-iteration loss.

    mode: ``"l2"`` (pre-training style) or ``"robust"`` (fine-tuning style).
    q / eps: exponent and stabilizer of the robust loss.
    gamma: per-iteration decay; iterate i of a T-iteration scale weighs gamma**(T-i).
    scale_weights: one weight per scale, coarsest first.
    """

    mode: str = "robust"
    q: float = 0.7
    eps: float = 0.01
    gamma: float = 0.8
    scale_weights: tuple[float, ...] = (0.25, 0.25, 0.25, 0.25)

    def __post_init__(self):
        if self.mode not in ("l2", "robust"):
            raise InputError(f"mode must be 'l2' or 'robust', got {self.mode!r}")
        if not 0.0 < self.q <= 1.0:
            raise InputError(f"q must be in (0, 1], got {self.q}")
        if self.eps <= 0.0:
            raise InputError(f"eps must be positive, got {self.eps}")
        if not 0.0 < self.gamma <= 1.0:
            raise InputError(f"gamma must be in (0, 1], got {self.gamma}")
        if any(w < 0 for w in self.scale_weights):
            raise InputError(f"scale weights must be >= 0, got {self.scale_weights}")


def _residual(flow, gt, valid):
    flow = as_flow_field(flow)
    gt = as_flow_field(gt)
    if flow.shape != gt.shape:
        raise InputError(f"flow dims {flow.shape} do not match ground truth {gt.shape}")
    if valid is None:
        valid = np.ones(flow.shape[1:], dtype=bool)
    else:
        valid = as_mask(valid, flow.shape[1:])
    if not valid.any():
        raise InputError("validity mask has no valid pixel")
    return flow - gt, valid


def robust_sample_loss(flow, gt, valid=None, q: float = 0.7, eps: float = 0.01) -> float:
    """One robust value per sample: (masked mean L1 error + eps) ** q."""
    res, valid = _residual(flow, gt, valid)
    l1 = np.abs(res).sum(axis=0)
    mean_l1 = l1[valid].sum() / valid.sum()
    return float((mean_l1 + eps) ** q)


def l2_sample_loss(flow, gt, valid=None) -> float:
    """Masked mean Euclidean endpoint error."""
    res, valid = _residual(flow, gt, valid)
    epe = np.sqrt(res[0] ** 2 + res[1] ** 2)
    return float(epe[valid].sum() / valid.sum())


def grad_robust_loss(flow, gt, valid=None, q: float = 0.7, eps: float = 0.01) -> np.ndarray:
    """Analytic gradient of :func:`robust_sample_loss` w.r.t. the flow.

    For valid pixels: q * (m + eps)**(q-1) * sign(residual) / |valid| per
    component, where m is the masked mean L1 error; zero elsewhere.  The
    subgradient at exactly-zero residual components is zero.
    """
    res, valid = _residual(flow, gt, valid)
    n = valid.sum()
    mean_l1 = np.abs(res).sum(axis=0)[valid].sum() / n
    coeff = q * (mean_l1 + eps) ** (q - 1.0) / n
    grad = coeff * np.sign(res)
    grad *= valid[np.newaxis]
    return grad


def ms_mi_loss(trace, gt, cfg: LossConfig, valid=None) -> float:
    """Multi-scale multi-iteration loss over an estimation trace.

    Ground truth (full resolution) is resized to each scale with value
    rescaling; validity downsizes to pixels whose whole bilinear footprint
    is valid.  Scale s with T_s recorded iterates contributes
    w_s * sum_i gamma**(T_s - i) * loss(f_{s,i}, gt_s).
    """
    gt = as_flow_field(gt)
    if valid is not None:
        valid = as_mask(valid, gt.shape[1:])
    if not trace.entries:
        raise InputError("trace has no iterates")
    per_scale: dict[int, list[np.ndarray]] = {}
    for entry in trace.entries:
        per_scale.setdefault(entry.scale, []).append(entry.flow)
    total = 0.0
    for scale, iterates in sorted(per_scale.items()):
        if not 1 <= scale <= len(cfg.scale_weights):
            raise InputError(f"trace scale {scale} outside configured weights")
        dims = iterates[0].shape[1:]
        gt_s = scale_flow(gt, dims)
        valid_s = scale_valid_mask(valid, dims) if valid is not None else None
        t_s = len(iterates)
        for i, flow in enumerate(iterates, start=1):
            if cfg.mode == "l2":
                loss = l2_sample_loss(flow, gt_s, valid_s)
            else:
                loss = robust_sample_loss(flow, gt_s, valid_s, q=cfg.q, eps=cfg.eps)
            total += cfg.scale_weights[scale - 1] * cfg.gamma ** (t_s - i) * loss
    return float(total)
