"""Evaluation metrics for flow fields: EPE variants, outlier rates, bins."""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .errors import InputError
from .grid import as_flow_field, as_mask

#: KITTI outlier rule: error above both thresholds (strict >).
FL_ABS_THRESH = 3.0
FL_REL_THRESH = 0.05


@dataclass
class FlowMetrics:
    """Scalar metrics; fields without a pixel in their mask are None.

    EPE values are in pixels, fl values in percent, s-bins restrict the EPE
    mean to ground-truth displacement magnitudes in [0,10), [10,40), [40,inf).
    """

    epe_all: float | None = None
    epe_matched: float | None = None
    epe_unmatched: float | None = None
    fl_all: float | None = None
    fl_noc: float | None = None
    s0_10: float | None = None
    s10_40: float | None = None
    s40plus: float | None = None


def _mean_over(values: np.ndarray, mask: np.ndarray) -> float | None:
    if not mask.any():
        return None
    return float(values[mask].sum() / mask.sum())


def _outlier_pct(epe: np.ndarray, gt_mag: np.ndarray, mask: np.ndarray) -> float | None:
    if not mask.any():
        return None
    bad = (epe > FL_ABS_THRESH) & (epe > FL_REL_THRESH * gt_mag)
    return float(100.0 * (bad & mask).sum() / mask.sum())


def compute_metrics(flow, gt, valid=None, noc=None) -> FlowMetrics:
    """Compare an estimate against ground truth under optional masks.

    ``valid`` marks pixels with usable ground truth (default: all); ``noc``
    marks non-occluded pixels and enables the matched/unmatched/fl_noc
    fields.
    """
    flow = as_flow_field(flow)
    gt = as_flow_field(gt)
    if flow.shape != gt.shape:
        raise InputError(f"flow dims {flow.shape} do not match ground truth {gt.shape}")
    hw = flow.shape[1:]
    valid = np.ones(hw, dtype=bool) if valid is None else as_mask(valid, hw)
    noc_mask = None if noc is None else as_mask(noc, hw)

    diff = flow - gt
    epe = np.sqrt(diff[0] ** 2 + diff[1] ** 2)
    gt_mag = np.sqrt(gt[0] ** 2 + gt[1] ** 2)

    m = FlowMetrics()
    m.epe_all = _mean_over(epe, valid)
    m.fl_all = _outlier_pct(epe, gt_mag, valid)
    if noc_mask is not None:
        m.epe_matched = _mean_over(epe, valid & noc_mask)
        m.epe_unmatched = _mean_over(epe, valid & ~noc_mask)
        m.fl_noc = _outlier_pct(epe, gt_mag, valid & noc_mask)
    m.s0_10 = _mean_over(epe, valid & (gt_mag < 10.0))
    m.s10_40 = _mean_over(epe, valid & (gt_mag >= 10.0) & (gt_mag < 40.0))
    m.s40plus = _mean_over(epe, valid & (gt_mag >= 40.0))
    return m


def format_metrics(metrics: FlowMetrics) -> str:
    """Flat ``name value`` table, one metric per line, 4 decimals; absent
    fields are omitted."""
    lines = []
    for f in fields(metrics):
        value = getattr(metrics, f.name)
        if value is not None:
            lines.append(f"{f.name} {value:.4f}")
    return "\n".join(lines)


def improvement_pct(old: float, new: float) -> float:
    """Relative improvement in percent: 100 * (old - new) / old."""
    old = float(old)
    new = float(new)
    if not old > 0:
        raise InputError(f"baseline value must be positive, got {old}")
    return 100.0 * (old - new) / old


def format_improvement(value: float) -> str:
    """Signed, one decimal, e.g. ``+15.0`` / ``-0.6``."""
    return f"{value:+.1f}"
