"""Four-scale coarse-to-fine recurrent flow estimation.

The driver runs a fixed number of recurrent update iterations per scale,
doubles the flow with shared x2 convex upsampling between scales, and once
more after the finest scale to reach full resolution.  The update operator
and the convex-mask source are pluggable; the reference operator picks the
best integer offset from the level-0 cost window.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .correlation import (DEFAULT_LEVELS, DEFAULT_RADIUS, build_feature_pyramid,
                          lookup_on_demand, max_levels, offset_grid)
from .errors import InputError, NumericError
from .grid import as_feature_map, as_flow_field, avg_pool2, scale_flow, zero_flow
from .upsample import WarmStartState, convex_upsample2, uniform_mask, warm_start_init

NUM_SCALES = 4

UpdateOperator = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]
MaskProvider = Callable[[int, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class IterationSchedule:
    """Per-scale recurrent iteration counts, coarsest first."""

    counts: tuple[int, int, int, int]

    def __post_init__(self):
        if len(self.counts) != NUM_SCALES:
            raise InputError(f"schedule needs {NUM_SCALES} counts, got {self.counts}")
        if any(int(t) < 1 or int(t) != t for t in self.counts):
            raise InputError(f"iteration counts must be positive integers, got {self.counts}")
        object.__setattr__(self, "counts", tuple(int(t) for t in self.counts))

    @property
    def total(self) -> int:
        return sum(self.counts)


TRAIN_SCHEDULE = IterationSchedule((4, 5, 5, 6))
INFERENCE_SCHEDULE = IterationSchedule((4, 6, 5, 10))


@dataclass
class ScaleStage:
    """Inputs for one scale: frame-1 features, frame-2 pyramid, context."""

    features1: np.ndarray
    pyramid2: list[np.ndarray]
    context: np.ndarray

    def __post_init__(self):
        self.features1 = as_feature_map(self.features1)
        self.pyramid2 = [as_feature_map(f) for f in self.pyramid2]
        self.context = as_feature_map(self.context)
        if not self.pyramid2:
            raise InputError("frame-2 pyramid is empty")

    @property
    def shape(self) -> tuple[int, int]:
        return self.features1.shape[1:]


@dataclass
class ScaleInputs:
    """Per-scale stages, coarsest to finest; resolutions double each step."""

    stages: list[ScaleStage]

    def __post_init__(self):
        if len(self.stages) != NUM_SCALES:
            raise InputError(f"expected {NUM_SCALES} scales, got {len(self.stages)}")
        for prev, nxt in zip(self.stages, self.stages[1:]):
            ph, pw = prev.shape
            nh, nw = nxt.shape
            if (nh, nw) != (2 * ph, 2 * pw):
                raise InputError(
                    f"scale resolutions must double, got {(ph, pw)} -> {(nh, nw)}")

    @property
    def image_shape(self) -> tuple[int, int]:
        """Full image resolution: twice the finest stage."""
        h, w = self.stages[-1].shape
        return 2 * h, 2 * w


@dataclass
class TraceEntry:
    scale: int      # 1-based, 1 = coarsest
    iteration: int  # 1-based within the scale
    flow: np.ndarray


@dataclass
class EstimateTrace:
    """Every intermediate flow plus the final full-resolution field."""

    init_flow: np.ndarray
    entries: list[TraceEntry] = field(default_factory=list)
    scale_inits: list[np.ndarray] = field(default_factory=list)
    final_flow: np.ndarray | None = None

    def iterates(self, scale: int) -> list[np.ndarray]:
        return [e.flow for e in self.entries if e.scale == scale]


def _default_masks(scale: int, flow: np.ndarray) -> np.ndarray:
    h, w = flow.shape[1:]
    return uniform_mask(2 * h, 2 * w)


def estimate(inputs: ScaleInputs, schedule: IterationSchedule, updater: UpdateOperator,
             init: np.ndarray | None = None, radius: int = DEFAULT_RADIUS,
             mask_provider: MaskProvider | None = None,
             backend: str | None = None) -> EstimateTrace:
    """Run the coarse-to-fine loop and record every intermediate flow.

    Per scale s: T_s iterations of cost lookup -> update -> flow += delta,
    then one x2 convex upsampling (the last one reaches full resolution).
    Exactly sum(T_s) updater calls and one upsampling per scale are made.
    """
    masks = mask_provider if mask_provider is not None else _default_masks
    h1, w1 = inputs.stages[0].shape
    if init is None:
        flow = zero_flow(h1, w1)
    else:
        flow = as_flow_field(init).copy()
        if flow.shape[1:] != (h1, w1):
            raise InputError(
                f"init dims {flow.shape[1:]} do not match coarsest scale {(h1, w1)}")
    trace = EstimateTrace(init_flow=flow.copy())
    for s, (stage, iters) in enumerate(zip(inputs.stages, schedule.counts), start=1):
        if flow.shape[1:] != stage.shape:
            raise InputError(
                f"flow dims {flow.shape[1:]} do not match scale {s} dims {stage.shape}")
        trace.scale_inits.append(flow.copy())
        for i in range(1, iters + 1):
            cost = lookup_on_demand(stage.features1, stage.pyramid2, flow,
                                    radius=radius, backend=backend)
            delta = np.asarray(updater(cost, flow, stage.context), dtype=np.float64)
            if delta.shape != flow.shape:
                raise InputError(
                    f"updater returned shape {delta.shape}, expected {flow.shape}")
            flow = flow + delta
            if not np.isfinite(flow).all():
                raise NumericError(f"non-finite flow at scale {s}, iteration {i}")
            trace.entries.append(TraceEntry(scale=s, iteration=i, flow=flow.copy()))
        flow = convex_upsample2(flow, masks(s, flow))
    trace.final_flow = flow
    return trace


class ArgmaxUpdater:
    """Reference update operator: the level-0 window offset with maximal cost.

    Ties go to the smallest offset norm, then row-major order.  Context
    features are accepted for interface compatibility and ignored.
    """

    def __init__(self, radius: int = DEFAULT_RADIUS):
        if radius < 0:
            raise InputError(f"radius must be >= 0, got {radius}")
        self.radius = radius
        offsets = offset_grid(radius)
        norms = offsets[:, 0] ** 2 + offsets[:, 1] ** 2
        order = np.lexsort((np.arange(len(offsets)), norms))
        self._dx = offsets[order, 0].astype(np.float64)
        self._dy = offsets[order, 1].astype(np.float64)
        self._order = order

    def __call__(self, cost_features: np.ndarray, flow: np.ndarray,
                 context: np.ndarray) -> np.ndarray:
        k2 = (2 * self.radius + 1) ** 2
        if cost_features.shape[-1] < k2:
            raise InputError(
                f"cost features have {cost_features.shape[-1]} values per pixel, "
                f"need at least {k2} for radius {self.radius}")
        window = cost_features[:, :, :k2][:, :, self._order]
        best = np.argmax(window, axis=-1)  # first occurrence wins exact ties
        return np.stack([self._dx[best], self._dy[best]])


def extract_features(frame1, frame2, scales: int = NUM_SCALES,
                     levels: int = DEFAULT_LEVELS) -> ScaleInputs:
    """Deterministic stand-in encoder: average-pooled image intensities.

    Images may be (H, W) or (C, H, W) with H, W divisible by 2**scales.
    Scale s gets the images pooled down to H/2**(scales+1-s), so the finest
    scale sits at half resolution.  Context features copy frame 1's.
    """
    f1 = as_feature_map(frame1)
    f2 = as_feature_map(frame2)
    if f1.shape != f2.shape:
        raise InputError(f"frames differ in shape: {f1.shape} vs {f2.shape}")
    h, w = f1.shape[1:]
    div = 2 ** scales
    if h % div or w % div:
        raise InputError(f"image dims {(h, w)} must be divisible by {div}; pad upstream")
    pyr1 = [f1]
    pyr2 = [f2]
    for _ in range(scales):
        pyr1.append(avg_pool2(pyr1[-1]))
        pyr2.append(avg_pool2(pyr2[-1]))
    stages = []
    for s in range(1, scales + 1):
        g1 = pyr1[scales + 1 - s]
        g2 = pyr2[scales + 1 - s]
        depth = min(levels, max_levels(*g2.shape[1:]))
        stages.append(ScaleStage(features1=g1, pyramid2=build_feature_pyramid(g2, depth),
                                 context=g1.copy()))
    return ScaleInputs(stages=stages)


def estimate_sequence(frames: Sequence, schedule: IterationSchedule = INFERENCE_SCHEDULE,
                      updater: UpdateOperator | None = None, radius: int = DEFAULT_RADIUS,
                      levels: int = DEFAULT_LEVELS, warm_start: bool = False,
                      mask_provider: MaskProvider | None = None,
                      backend: str | None = None) -> list[EstimateTrace]:
    """Estimate flow for every consecutive frame pair of a sequence.

    With ``warm_start`` enabled, pair k > 1 is initialized by forward-warping
    the previous pair's flow; that source flow is always the previous pair's
    zero-initialized estimate, so the warm start never chains recursively.
    Pair 1 (and everything when disabled) starts from zero.
    """
    if len(frames) < 2:
        raise InputError("need at least two frames")
    if updater is None:
        updater = ArgmaxUpdater(radius)
    results: list[EstimateTrace] = []
    n_pairs = len(frames) - 1
    prev_cold: np.ndarray | None = None
    for k in range(1, n_pairs + 1):
        inputs = extract_features(frames[k - 1], frames[k], levels=levels)
        s1 = inputs.stages[0].shape

        def run(init):
            return estimate(inputs, schedule, updater, init=init, radius=radius,
                            mask_provider=mask_provider, backend=backend)

        warm_pair = warm_start and k > 1
        feeds_next = warm_start and k < n_pairs
        cold = run(None) if (not warm_pair or feeds_next) else None
        if warm_pair:
            state = WarmStartState(prev_flow=prev_cold, has_previous=True)
            warm = warm_start_init(state, inputs.image_shape)
            trace = run(scale_flow(warm, s1))
        else:
            trace = cold
        prev_cold = cold.final_flow if cold is not None else None
        results.append(trace)
    return results
