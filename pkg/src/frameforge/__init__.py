"""Finite frames: bounds, partitions into well-conditioned parts, scalable-frame
sampling, discretization of continuous frames and Hadamard counterexamples."""

from .core import Frame, FrameBounds, frame_bounds, frame_operator, is_parseval, parseval_normalize
from .errors import (
    CertificateFailure,
    CertificationError,
    DiscretizationFailure,
    FrameError,
    InvalidInput,
    NotAContinuousFrame,
    NotAFrame,
    PartitionFailure,
    QuadratureFailure,
    ResourceLimit,
    SamplingFailure,
)
from .partition import (
    B_STAR,
    RATIO_BOUND,
    bound_schedule,
    exact_two_partition,
    partition_general_frame,
    reduce_tight_frame,
    subset_tight_frame,
    two_partition,
)
from .scalable import ScalableFrame, quantize_scaling, sample_scalable
from .continuous import (
    ContinuousFrameModel,
    discretize_general,
    discretize_parseval,
    epsilon_net_discretize,
    exponential_on_set,
    gabor_stft,
    quadrature_frame_operator,
    unbounded_counterexample,
)
from .funtf import build_funtf, exhaustive_basis_audit

__version__ = "0.1.0"
