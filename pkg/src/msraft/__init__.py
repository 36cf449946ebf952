"""Training-free multi-scale recurrent optical flow estimation.

The package implements the estimation scaffolding around a learned-flow
architecture without any learned weights: correlation cost lookup (memory-
light on-demand route plus an all-pairs oracle route), a four-scale
coarse-to-fine recurrent driver with shared x2 convex upsampling, forward-
warp warm starting, sequence losses with analytic gradients, benchmark
metrics, and flow-file codecs.

The on-demand correlation kernel has a compiled (Cython) and a pure-numpy
backend; the compiled one is selected at import when built.
"""

from .correlation import (available_backends, build_all_pairs, build_cost_pyramid,
                          build_feature_pyramid, default_backend, lookup_on_demand,
                          lookup_precomputed, max_relative_deviation)
from .errors import (FlowError, FormatError, InputError, NumericError,
                     VolumeLimitError)
from .grid import (avg_pool2, bilinear_sample, scale_flow, scale_valid_mask,
                   zero_flow)
from .losses import (LossConfig, grad_robust_loss, l2_sample_loss, ms_mi_loss,
                     robust_sample_loss)
from .metrics import (FlowMetrics, compute_metrics, format_improvement,
                      format_metrics, improvement_pct)
from .mixing import RVC_MIX, MixSpec, mix_sampler, viper_frame_filter
from .pipeline import (INFERENCE_SCHEDULE, TRAIN_SCHEDULE, ArgmaxUpdater,
                       EstimateTrace, IterationSchedule, ScaleInputs, ScaleStage,
                       estimate, estimate_sequence, extract_features)
from .upsample import (WarmStartState, convex_upsample2, forward_warp,
                       normalize_mask, uniform_mask, warm_start_init)

__version__ = "0.1.0"

__all__ = [
    "ArgmaxUpdater", "EstimateTrace", "FlowError", "FlowMetrics", "FormatError",
    "INFERENCE_SCHEDULE", "InputError", "IterationSchedule", "LossConfig",
    "MixSpec", "NumericError", "RVC_MIX", "ScaleInputs", "ScaleStage",
    "TRAIN_SCHEDULE", "VolumeLimitError", "WarmStartState",
    "available_backends", "avg_pool2", "bilinear_sample", "build_all_pairs",
    "build_cost_pyramid", "build_feature_pyramid", "compute_metrics",
    "convex_upsample2", "default_backend", "estimate", "estimate_sequence",
    "extract_features", "format_improvement", "format_metrics", "forward_warp",
    "grad_robust_loss", "improvement_pct", "l2_sample_loss", "lookup_on_demand",
    "lookup_precomputed", "max_relative_deviation", "mix_sampler", "ms_mi_loss",
    "normalize_mask", "robust_sample_loss", "scale_flow", "scale_valid_mask",
    "uniform_mask", "viper_frame_filter", "warm_start_init", "zero_flow",
]
